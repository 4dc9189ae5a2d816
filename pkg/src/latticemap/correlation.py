"""Environment correlation functions, decay rates and the independent-environment test.

Normalisation: every prefactor of the k-integral is absorbed into one constant
γ, so for lattice families

    α_nm(t) = γ (h0 / 2π) ∫_BZ dk exp(i k r_nm - i ω(k) t),

which gives α_nn(0) = γ and α_nn(t) = γ exp(-iAt) J0(Bt) for the cosine band.
On the discrete grid of M chain modes the same convention reads
α_nm(t) = (γ/M) Σ_q exp(i k_q r_nm - i ω_q t), i.e. γ = g^2 for a chain site
coupling g.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bessel import j0
from .dispersion import CosineBand, Dispersion, mode_grid
from .exceptions import AccuracyError

_MIN_NODES = 64
_MAX_NODES = 2**17
_GAUSS_ORDER = 16


def correlation_cosine_closed_form(gamma, A, B, t):
    """γ exp(-iAt) J0(Bt) for the cosine band (diagonal, r = 0)."""
    t = np.asarray(t, dtype=float)
    out = gamma * np.exp(-1j * A * t) * j0(B * t)
    return complex(out) if out.ndim == 0 else out


def _lattice_separation(disp, r):
    h0 = disp.lattice_constant
    n = r / h0
    return abs(n - round(n)) < 1e-12


def _trapezoid_rule(disp, n):
    k = mode_grid(disp, n)
    period = 2 * math.pi / disp.lattice_constant
    w = np.full(n, disp.measure * period / n)
    return k, w


def _gauss_rule(disp, n):
    lo, hi = disp.domain
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError(f"{type(disp).__name__}: k-integral needs a finite domain (set a cutoff)")
    panels = max(1, n // _GAUSS_ORDER)
    x, wx = np.polynomial.legendre.leggauss(_GAUSS_ORDER)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    k = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    w = (half[:, None] * wx[None, :]).ravel() * disp.measure
    return k, w


def _apply_rule(disp, gamma, r, t, k, w):
    omega = disp.evaluate(k)
    phase = np.exp(1j * (k * r)[:, None] - 1j * omega[:, None] * t[None, :])
    return gamma * (w @ phase)


def correlation_quadrature(disp: Dispersion, gamma, r, t, nodes=None, tol=1e-8):
    """Oscillatory k-integral for α_nm(t) at separation ``r`` (length units).

    With ``nodes=None`` the node count doubles from 64 until successive results
    agree to ``tol`` (max over ``t``); otherwise a single rule with that many
    nodes is applied. For periodic bands at lattice separations the rule is the
    periodic trapezoid on the nodes k_q = 2πq/(n h0), which coincides with the
    discrete mode sum; otherwise composite Gauss-Legendre is used.

    Raises ``AccuracyError`` (carrying the last estimate) if refinement stalls.
    """
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr < 0):
        raise ValueError("correlation_quadrature requires t >= 0")
    rule = _trapezoid_rule if (disp.periodic and _lattice_separation(disp, r)) else _gauss_rule

    def finish(vals):
        return complex(vals[0]) if np.ndim(t) == 0 else vals

    if nodes is not None:
        if nodes < _MIN_NODES and rule is _gauss_rule:
            nodes = _MIN_NODES
        return finish(_apply_rule(disp, gamma, r, t_arr, *rule(disp, int(nodes))))

    n = _MIN_NODES
    prev = _apply_rule(disp, gamma, r, t_arr, *rule(disp, n))
    while n < _MAX_NODES:
        n *= 2
        cur = _apply_rule(disp, gamma, r, t_arr, *rule(disp, n))
        if np.max(np.abs(cur - prev)) <= tol:
            return finish(cur)
        prev = cur
    raise AccuracyError(
        f"k-quadrature not converged with {n} nodes (change {np.max(np.abs(cur - prev)):.3e})",
        estimate=finish(cur),
    )


def correlation_discrete(disp: Dispersion, gamma, separation, t, M):
    """(γ/M)-normalised sum over the M chain wavevectors at integer site separation."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    k, w = _trapezoid_rule(disp, M)
    r = separation * disp.lattice_constant
    vals = _apply_rule(disp, gamma, r, t_arr, k, w)
    return complex(vals[0]) if np.ndim(t) == 0 else vals


@dataclass(frozen=True)
class CorrelationKernel:
    """α_nm(t) sampled on a uniform grid ``times`` for integer site separations.

    ``values[i]`` holds α at separation ``separations[i]`` (in chain sites).
    Negative times follow from α_nm(-t) = α_mn(t)*, see :meth:`at`.
    """

    gamma: float
    disp: Dispersion
    times: np.ndarray
    separations: tuple
    values: np.ndarray
    method: str = "quadrature"
    nodes: int | None = None

    @property
    def dt(self):
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    @property
    def horizon(self):
        return float(self.times[-1])

    @property
    def bounds(self):
        return self.disp.domain

    def at(self, separation=0):
        return self.values[self.separations.index(separation)]

    def at_negative_time(self, separation=0):
        """α at separation ``separation`` and times -t (from the opposite separation)."""
        return np.conj(self.at(-separation))

    def diagonal(self):
        return self.at(0)

    def write_csv(self, path):
        """Columns: t, re_alpha, im_alpha, separation."""
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t", "re_alpha", "im_alpha", "separation"])
            for sep, row in zip(self.separations, self.values):
                for ti, a in zip(self.times, row):
                    writer.writerow([f"{ti:.16e}", f"{a.real:.16e}", f"{a.imag:.16e}", sep])
        return path


def sample_kernel(disp: Dispersion, gamma, times, separations=(0,), method="quadrature", M=None, tol=1e-8):
    """Sample α_nm on ``times`` for each integer site separation.

    ``method`` is ``"quadrature"`` (continuum BZ integral), ``"closed"`` (cosine
    band, diagonal only) or ``"discrete"`` (sum over ``M`` chain wavevectors).
    """
    times = np.asarray(times, dtype=float)
    seps = tuple(int(s) for s in separations)
    rows = []
    nodes = None
    for sep in seps:
        if method == "closed":
            if not isinstance(disp, CosineBand) or sep != 0:
                raise ValueError("closed form exists only for the cosine band at zero separation")
            rows.append(correlation_cosine_closed_form(gamma, disp.A, disp.B, times))
        elif method == "discrete":
            if M is None:
                raise ValueError("discrete kernel needs the mode count M")
            rows.append(correlation_discrete(disp, gamma, sep, times, M))
            nodes = M
        elif method == "quadrature":
            rows.append(correlation_quadrature(disp, gamma, sep * disp.lattice_constant, times, tol=tol))
        else:
            raise ValueError(f"unknown kernel method {method!r}")
    values = np.array(rows, dtype=complex).reshape(len(seps), len(times))
    return CorrelationKernel(float(gamma), disp, times, seps, values, method, nodes)


@dataclass(frozen=True)
class DissipationRate:
    gamma_rate: float
    lamb_shift: float
    error_rate: float
    error_lamb: float
    warning: bool

    def __iter__(self):
        yield self.gamma_rate
        yield self.lamb_shift


def _taper(s, T):
    # 1 up to 0.9 T, then exp(-4 u^2 / (1 - u)) down to 0 at T
    u = np.clip((s - 0.9 * T) / (0.1 * T), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        w = np.exp(-4.0 * u**2 / (1.0 - u))
    return np.where(u >= 1.0, 0.0, w)


def _windowed_integral(times, vals, T):
    mask = times <= T * (1 + 1e-12)
    s = times[mask]
    return np.trapezoid(vals[mask] * _taper(s, T), s)


def dissipation_rate(kernel: CorrelationKernel, T, omega0=0.0, separation=0) -> DissipationRate:
    """Γ = Re and Δ_LS = Im of the windowed integral ∫_0^T α(s) exp(i ω0 s) ds.

    ``omega0`` moves the kernel into the frame rotating at the atomic frequency.
    The error estimate is the change between horizons T/2 and T; relative
    errors above 5% set ``warning`` instead of failing.
    """
    bandwidth = 0.5 * (kernel.disp.band[1] - kernel.disp.band[0])
    if bandwidth > 0 and T * bandwidth < 50:
        raise ValueError(f"horizon too short: T*B = {T * bandwidth:.3g} < 50")
    if T > kernel.horizon * (1 + 1e-12):
        raise ValueError(f"kernel sampled only up to t={kernel.horizon}, asked for T={T}")
    times = kernel.times
    vals = kernel.at(separation) * np.exp(1j * omega0 * times)
    full = _windowed_integral(times, vals, T)
    half = _windowed_integral(times, vals, T / 2)
    err_re = abs(full.real - half.real)
    err_im = abs(full.imag - half.imag)
    size = abs(full)
    warn = bool(size > 0 and max(err_re, err_im) > 0.05 * size)
    return DissipationRate(float(full.real), float(full.imag), float(err_re), float(err_im), warn)


@dataclass(frozen=True)
class IndependenceCheck:
    ratio: float
    independent: bool
    note: str = ""


def independent_env_check(f_avg, gamma_rate, P, threshold=0.1) -> IndependenceCheck:
    """Atoms act as if each had its own bath when f/(Γ P) is small.

    The excitation travels ~ f/Γ sites during one decay time; it must stay well
    short of the P sites separating neighbouring atoms.
    """
    if P < 1:
        raise ValueError("atom spacing P must be >= 1")
    if f_avg == 0:
        return IndependenceCheck(0.0, True, "no propagation along the chain")
    if gamma_rate <= 0:
        return IndependenceCheck(math.inf, False, "no decay: atomic frequency in a band gap")
    ratio = f_avg / (gamma_rate * P)
    return IndependenceCheck(ratio, ratio < threshold)
