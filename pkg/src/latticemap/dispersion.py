"""Reservoir dispersion relations, densities of states and spectral densities.

Four families are supported:

* ``CosineBand``      ω(k) = A + B cos((k - k0) h0) over the first Brillouin zone
* ``EffectiveMass``   ω(k) = ωc + B/2 (k - k0)^2, the band-edge expansion of the above
* ``PowerLaw``        ω(k) = A k^p for 0 <= k <= k_max
* ``Tabulated``       monotone piecewise-cubic interpolation of (k_i, ω_i) samples

``Tabulated`` is an extension beyond the three closed-form families; it never
extrapolates outside its sample range.

All quantities are dimensionless (rescaled by a common energy scale).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .exceptions import BandEdgeError, DomainError, NoStateError

_EDGE_TOL = 1e-12


def _check_domain(name, k, lo, hi):
    k = np.asarray(k, dtype=float)
    span = hi - lo if np.isfinite(hi - lo) else 1.0
    slack = _EDGE_TOL * max(1.0, abs(span))
    if np.any(k < lo - slack) or np.any(k > hi + slack):
        raise DomainError(f"{name}: wavevector outside domain [{lo}, {hi}]")
    return k


@dataclass(frozen=True)
class CosineBand:
    """Tight-binding band of a 1D photonic crystal.

    The range of ω over the first Brillouin zone ``[-pi/h0, pi/h0]`` is exactly
    ``[A - B, A + B]``.
    """

    A: float = 1.0
    B: float = 0.5
    k0: float = math.pi
    h0: float = 1.0

    family = "cosine"

    def __post_init__(self):
        if self.B < 0:
            raise ValueError("CosineBand requires B >= 0")
        if self.h0 <= 0:
            raise ValueError("CosineBand requires h0 > 0")

    @property
    def domain(self):
        return (-math.pi / self.h0, math.pi / self.h0)

    @property
    def band(self):
        return (self.A - self.B, self.A + self.B)

    @property
    def lattice_constant(self):
        return self.h0

    @property
    def measure(self):
        # h0/2pi: the integral of 1 over the zone is 1
        return self.h0 / (2 * math.pi)

    periodic = True

    def evaluate(self, k):
        k = _check_domain("CosineBand", k, *self.domain)
        return self.A + self.B * np.cos((k - self.k0) * self.h0)

    def derivative(self, k):
        k = _check_domain("CosineBand", k, *self.domain)
        return -self.B * self.h0 * np.sin((k - self.k0) * self.h0)

    def k_of_omega(self, omega):
        """Principal branch ``k in [k0 - pi/h0, k0]``."""
        w = np.asarray(omega, dtype=float)
        lo, hi = self.band
        if np.any(w < lo - _EDGE_TOL) or np.any(w > hi + _EDGE_TOL):
            raise NoStateError(f"CosineBand: no modes outside [{lo}, {hi}]")
        x = np.clip((w - self.A) / self.B, -1.0, 1.0) if self.B > 0 else np.zeros_like(w)
        return self.k0 - np.arccos(x) / self.h0


@dataclass(frozen=True)
class EffectiveMass:
    """Quadratic expansion ω(k) = ωc + B/2 (k - k0)^2 around a band edge.

    The k-domain is one zone ``[k0 - pi/h0, k0 + pi/h0]`` centred on the edge.
    """

    omega_c: float = 0.5
    B: float = 0.5
    k0: float = math.pi
    h0: float = 1.0

    family = "effective_mass"

    def __post_init__(self):
        if self.h0 <= 0:
            raise ValueError("EffectiveMass requires h0 > 0")

    @property
    def domain(self):
        return (self.k0 - math.pi / self.h0, self.k0 + math.pi / self.h0)

    @property
    def band(self):
        top = self.omega_c + 0.5 * self.B * (math.pi / self.h0) ** 2
        return (min(self.omega_c, top), max(self.omega_c, top))

    @property
    def lattice_constant(self):
        return self.h0

    @property
    def measure(self):
        return self.h0 / (2 * math.pi)

    periodic = False

    def evaluate(self, k):
        k = _check_domain("EffectiveMass", k, *self.domain)
        return self.omega_c + 0.5 * self.B * (k - self.k0) ** 2

    def derivative(self, k):
        k = _check_domain("EffectiveMass", k, *self.domain)
        return self.B * (k - self.k0)

    def k_of_omega(self, omega):
        """Branch ``k <= k0``, matching the cosine-band principal branch."""
        w = np.asarray(omega, dtype=float)
        lo, hi = self.band
        if np.any(w < lo - _EDGE_TOL) or np.any(w > hi + _EDGE_TOL) or self.B == 0:
            raise NoStateError(f"EffectiveMass: no modes outside [{lo}, {hi}]")
        return self.k0 - np.sqrt(np.maximum(2 * (w - self.omega_c) / self.B, 0.0))


@dataclass(frozen=True)
class PowerLaw:
    """ω(k) = A k^p on ``[0, k_max]``; ``k_max`` implements a hard frequency cutoff."""

    A: float = 0.5
    p: float = 0.5
    k_max: float = math.inf

    family = "power_law"

    def __post_init__(self):
        if self.A <= 0 or self.p <= 0:
            raise ValueError("PowerLaw requires A > 0 and p > 0")
        if not self.k_max > 0:
            raise ValueError("PowerLaw requires k_max > 0")

    @property
    def domain(self):
        return (0.0, self.k_max)

    @property
    def band(self):
        return (0.0, self.A * self.k_max ** self.p)

    @property
    def lattice_constant(self):
        # finite cutoff: the zone [0, k_max) has length 2pi/h0
        return 2 * math.pi / self.k_max if math.isfinite(self.k_max) else 1.0

    # plain dk measure, so that g^2 * alpha(t) integrates J(omega) exp(-i omega t)
    measure = 1.0
    periodic = False

    def evaluate(self, k):
        k = _check_domain("PowerLaw", k, *self.domain)
        return self.A * k ** self.p

    def derivative(self, k):
        k = _check_domain("PowerLaw", k, *self.domain)
        with np.errstate(divide="ignore"):
            return self.A * self.p * k ** (self.p - 1)

    def k_of_omega(self, omega):
        w = np.asarray(omega, dtype=float)
        lo, hi = self.band
        if np.any(w < lo) or np.any(w > hi * (1 + _EDGE_TOL)):
            raise NoStateError(f"PowerLaw: no modes outside [{lo}, {hi}]")
        return (w / self.A) ** (1.0 / self.p)


@dataclass(frozen=True)
class Tabulated:
    """Sampled dispersion with shape-preserving (PCHIP) interpolation."""

    k: tuple
    omega: tuple
    _interp: PchipInterpolator = field(init=False, repr=False, compare=False)

    family = "tabulated"

    def __post_init__(self):
        k = np.asarray(self.k, dtype=float)
        w = np.asarray(self.omega, dtype=float)
        if k.ndim != 1 or k.shape != w.shape or k.size < 2:
            raise ValueError("Tabulated needs matching 1D k and omega samples (>= 2)")
        if np.any(np.diff(k) <= 0):
            raise ValueError("Tabulated k samples must be strictly increasing")
        object.__setattr__(self, "k", tuple(k))
        object.__setattr__(self, "omega", tuple(w))
        object.__setattr__(self, "_interp", PchipInterpolator(k, w, extrapolate=False))

    @property
    def domain(self):
        return (self.k[0], self.k[-1])

    @property
    def band(self):
        return (min(self.omega), max(self.omega))

    @property
    def lattice_constant(self):
        return 2 * math.pi / (self.k[-1] - self.k[0])

    @property
    def measure(self):
        return 1.0 / (self.k[-1] - self.k[0])

    periodic = False

    def evaluate(self, k):
        k = _check_domain("Tabulated", k, *self.domain)
        return self._interp(np.clip(k, *self.domain))

    def derivative(self, k):
        k = _check_domain("Tabulated", k, *self.domain)
        return self._interp.derivative()(np.clip(k, *self.domain))

    def k_of_omega(self, omega):
        w = np.atleast_1d(np.asarray(omega, dtype=float))
        steps = np.diff(self.omega)
        if not (np.all(steps > 0) or np.all(steps < 0)):
            raise DomainError("Tabulated: k(omega) needs monotone omega samples")
        lo, hi = self.band
        if np.any(w < lo) or np.any(w > hi):
            raise NoStateError(f"Tabulated: no modes outside [{lo}, {hi}]")
        a, b = self.domain
        out = np.array([brentq(lambda x: self._interp(x) - wi, a, b, xtol=1e-15) for wi in w])
        return out if np.ndim(omega) else float(out[0])


Dispersion = Union[CosineBand, EffectiveMass, PowerLaw, Tabulated]


@dataclass(frozen=True)
class SpectralDensity:
    """J(ω) = α ωc^(1-s) ω^s θ(ωc - ω)."""

    alpha: float
    s: float
    omega_c: float

    def __post_init__(self):
        if self.alpha <= 0 or self.s <= 0 or self.omega_c <= 0:
            raise ValueError("SpectralDensity requires alpha, s, omega_c > 0")

    def __call__(self, omega):
        w = np.asarray(omega, dtype=float)
        out = self.alpha * self.omega_c ** (1 - self.s) * np.abs(w) ** self.s
        return np.where((w >= 0) & (w <= self.omega_c), out, 0.0)


@dataclass(frozen=True)
class FlatCouplingMapping:
    """Result of :func:`spectral_to_dispersion`.

    ``scale`` is the constant written in the convention
    ρ(ω) = scale^((1-p)/p) / p * ω^((1-p)/p); the prefactor of the returned
    dispersion is ``scale**(p - 1)``.
    """

    dispersion: PowerLaw
    coupling: float
    scale: float

    def __iter__(self):
        yield self.dispersion
        yield self.coupling


def evaluate(disp: Dispersion, k):
    """Return ω(k) for any dispersion family (raises ``DomainError`` off-domain)."""
    return disp.evaluate(k)


def group_velocity(disp: Dispersion, k):
    return disp.derivative(k)


def density_of_states(disp: Dispersion, omega):
    """|dω/dk|^-1 at k(ω), from the analytic derivative of the family.

    Raises ``NoStateError`` outside the band and ``BandEdgeError`` where the
    derivative vanishes (van Hove singularity).
    """
    k = disp.k_of_omega(omega)
    slope = np.abs(disp.derivative(k))
    width = abs(disp.band[1] - disp.band[0])
    scale = max(width, 1.0) if math.isfinite(width) else 1.0
    if np.any(slope <= 1e-12 * scale):
        raise BandEdgeError(f"{type(disp).__name__}: density of states diverges at omega={omega}")
    with np.errstate(divide="ignore"):
        return 1.0 / slope


def spectral_to_dispersion(spec: SpectralDensity) -> FlatCouplingMapping:
    """Flat-coupling dispersion reproducing a power-law spectral density.

    Chooses ω(k) = a k^p with p = 1/(s+1) and coupling g = sqrt(α) so that
    g^2 ρ(ω) = J(ω) on (0, ωc); the cutoff sets ``k_max = k(ωc)``.
    """
    s, wc = spec.s, spec.omega_c
    p = 1.0 / (s + 1.0)
    scale = (wc ** (1.0 - s) / (s + 1.0)) ** (1.0 / s)
    prefactor = scale ** (p - 1.0)
    k_max = (wc / prefactor) ** (1.0 / p)
    return FlatCouplingMapping(PowerLaw(A=prefactor, p=p, k_max=k_max), math.sqrt(spec.alpha), scale)


def mode_grid(disp: Dispersion, M: int) -> np.ndarray:
    """M wavevectors k_q = 2 pi q / (M h0), folded into the family's zone.

    Folding shifts by multiples of 2 pi/h0, which leaves every lattice phase
    exp(i k_q r_n) unchanged.
    """
    h0 = disp.lattice_constant
    lo, _ = disp.domain
    period = 2 * math.pi / h0
    k = period * np.arange(M) / M
    k = lo + np.mod(k - lo, period)
    # guard the upper end against round-off past the zone boundary
    return np.minimum(k, lo + period * (1 - 1e-15))


_FAMILIES = {
    "cosine": CosineBand,
    "effective_mass": EffectiveMass,
    "power_law": PowerLaw,
    "tabulated": Tabulated,
}


def to_dict(disp: Dispersion) -> dict:
    if isinstance(disp, CosineBand):
        return {"family": "cosine", "A": disp.A, "B": disp.B, "k0": disp.k0, "h0": disp.h0}
    if isinstance(disp, EffectiveMass):
        return {"family": "effective_mass", "omega_c": disp.omega_c, "B": disp.B, "k0": disp.k0, "h0": disp.h0}
    if isinstance(disp, PowerLaw):
        return {"family": "power_law", "A": disp.A, "p": disp.p, "k_max": disp.k_max}
    if isinstance(disp, Tabulated):
        return {"family": "tabulated", "k": list(disp.k), "omega": list(disp.omega)}
    raise TypeError(f"not a dispersion: {disp!r}")


def from_dict(data: dict) -> Dispersion:
    """Build a dispersion from config keys (family, A, B, k0, h0, omega_c, s, alpha, p).

    ``family = spectral`` builds the flat-coupling power law for the spectral
    density given by ``alpha``, ``s`` and ``omega_c``.
    """
    data = dict(data)
    family = data.pop("family", "cosine")
    if family == "spectral":
        spec = SpectralDensity(float(data["alpha"]), float(data["s"]), float(data["omega_c"]))
        return spectral_to_dispersion(spec).dispersion
    try:
        cls = _FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown dispersion family {family!r}") from None
    if cls is Tabulated:
        return Tabulated(tuple(data["k"]), tuple(data["omega"]))
    allowed = {
        CosineBand: ("A", "B", "k0", "h0"),
        EffectiveMass: ("omega_c", "B", "k0", "h0"),
        PowerLaw: ("A", "p", "k_max"),
    }[cls]
    return cls(**{key: float(data[key]) for key in allowed if key in data})
