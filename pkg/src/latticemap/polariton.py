"""Atom-photon bound states of the single-excitation Hamiltonian.

A bound state carries appreciable atomic weight and has photonic support
confined near the attachment sites. The span of the bound states is an
invariant subspace: the weight of ψ(t) on it is constant, and the initial
weight P_pol bounds the long-time atomic population.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .dynamics import SectorState, participation_ratio
from .exceptions import DegeneracyError, DomainError
from .mapping import MappedSystem

MAX_DIM = 4000
GRAM_TOL = 1e-10
DEGENERACY_GAP = 1e-10
TAIL_TOL = 1e-6


@dataclass(frozen=True)
class Eigenpairs:
    """Ascending energies and orthonormal eigenvectors (columns)."""

    energies: np.ndarray
    vectors: np.ndarray
    gram_deviation: float

    def __len__(self):
        return len(self.energies)

    def clusters(self, gap=DEGENERACY_GAP):
        """Index blocks of eigenvalues whose neighbours are closer than ``gap``."""
        if len(self.energies) == 0:
            return []
        breaks = np.nonzero(np.diff(self.energies) >= gap)[0] + 1
        return np.split(np.arange(len(self.energies)), breaks)


def diagonalize_single_exc(H) -> Eigenpairs:
    """Full spectrum of a Hermitian single-excitation Hamiltonian."""
    Hd = H.toarray() if sp.issparse(H) else np.asarray(H)
    if Hd.shape[0] > MAX_DIM:
        raise ValueError(f"dimension {Hd.shape[0]} exceeds the exact-diagonalisation limit {MAX_DIM}")
    E, V = np.linalg.eigh(Hd)
    gram = float(np.max(np.abs(V.conj().T @ V - np.eye(len(E))))) if len(E) else 0.0
    if gram > GRAM_TOL:
        raise ArithmeticError(f"eigenvectors not orthonormal: Gram deviation {gram:.3e}")
    return Eigenpairs(E, V, gram)


@dataclass(frozen=True)
class BoundState:
    energy: float
    vector: np.ndarray
    atomic_weight: float
    localization_length: float
    in_gap: bool
    tail_weight: float  # largest mode weight at distance >= M/4


def _mode_distances(sys: MappedSystem):
    M = sys.M
    m = np.arange(M)
    d = np.full(M, M, dtype=int)
    for a in sys.sites:
        raw = np.abs(m - a)
        if sys.coupling.boundary == "ring":
            raw = np.minimum(raw, M - raw)
        d = np.minimum(d, raw)
    return d


def _localization_length(mode_weight, dist, M):
    """Decay length ξ of the amplitude, |ψ_d|^2 ~ exp(-2d/ξ), fitted over d = 2..M/4."""
    ds, logs = [], []
    for d in range(2, max(M // 4, 2) + 1):
        w = mode_weight[dist == d]
        if w.size and w.mean() > 1e-300:
            ds.append(d)
            logs.append(math.log(w.mean()))
    if len(ds) < 2:
        return 0.0
    slope = np.polyfit(ds, logs, 1)[0]
    return float(-2.0 / slope) if slope < 0 else math.inf


def _band(sys):
    f = sys.coupling
    if f.mode_energies is not None:
        return float(np.min(f.mode_energies)), float(np.max(f.mode_energies))
    ev = np.linalg.eigvalsh(f.dense())
    return float(ev[0]), float(ev[-1])


def _canonical_cluster(vecs, N):
    """Rotate a degenerate block so its atomic-weight operator is diagonal."""
    if vecs.shape[1] == 1:
        return vecs
    at = vecs[:N]
    w, R = np.linalg.eigh(at.conj().T @ at)
    return vecs @ R[:, ::-1]


def detect_bound_states(eig: Eigenpairs, sys: MappedSystem, weight_threshold=1e-3,
                        on_degeneracy="project", band=None):
    """Eigenvectors with atomic weight > ``weight_threshold`` and a photonic tail
    below 1e-6 at every mode at least M/4 sites from the nearest atom.

    Degenerate clusters (gap < 1e-10) are handled as subspaces: the cluster is
    rotated to the basis diagonalising its atomic weight and each rotated vector
    is judged on its own; the selected vectors stay orthonormal, so P_pol is the
    projection onto their span. ``on_degeneracy="raise"`` refuses instead.
    ``band`` defaults to the extent of the chain spectrum.
    """
    if on_degeneracy not in ("project", "raise"):
        raise ValueError(f"unknown degeneracy policy {on_degeneracy!r}")
    N, M = sys.N, sys.M
    if eig.vectors.shape[0] != N + M:
        raise ValueError("eigenpairs do not belong to this system's single-excitation sector")
    dist = _mode_distances(sys)
    far = dist >= M // 4
    lo, hi = band if band is not None else _band(sys)
    found = []
    for block in eig.clusters():
        if len(block) > 1 and on_degeneracy == "raise":
            raise DegeneracyError(f"{len(block)} eigenvalues within {DEGENERACY_GAP} of E={eig.energies[block[0]]:.12g}")
        vecs = _canonical_cluster(eig.vectors[:, block], N)
        for col, idx in enumerate(block):
            v = vecs[:, col]
            weight = float(np.sum(np.abs(v[:N]) ** 2))
            modes = np.abs(v[N:]) ** 2
            tail = float(modes[far].max()) if far.any() else 0.0
            if weight > weight_threshold and tail < TAIL_TOL:
                E = float(eig.energies[idx])
                found.append(BoundState(
                    E, v, weight, _localization_length(modes, dist, M),
                    bool(E < lo - 1e-6 or E > hi + 1e-6), tail,
                ))
    return tuple(found)


def polariton_population(bound, psi0) -> float:
    """P_pol = Σ_j |<P_j|ψ0>|^2 over the bound states."""
    amps = psi0.amplitudes if isinstance(psi0, SectorState) else np.asarray(psi0)
    return float(sum(abs(np.vdot(b.vector, amps)) ** 2 for b in bound))


def subspace_weight(bound, states) -> np.ndarray:
    """Weight of each state (rows of ``states``) on the span of ``bound``."""
    states = np.atleast_2d(states)
    if not bound:
        return np.zeros(states.shape[0])
    V = np.column_stack([b.vector for b in bound])
    return np.sum(np.abs(states @ V.conj()) ** 2, axis=1)


def scaling_length(E, A, B):
    """ξ ~ 1/sqrt(ωe |ωe - E|) with ωe the nearest band edge (qualitative only)."""
    edge = A - B if abs(E - (A - B)) <= abs(E - (A + B)) else A + B
    gap = abs(edge - E)
    return math.inf if gap == 0 or edge <= 0 else 1.0 / math.sqrt(edge * gap)


@dataclass(frozen=True)
class PolaritonReport:
    eigenpairs: Eigenpairs
    bound: tuple
    P_pol: float
    overlaps: np.ndarray  # a_j = <P_j|ψ0>
    threshold: float

    @property
    def count(self):
        return len(self.bound)

    def summary(self):
        return f"bound states: {self.count}, P_pol = {self.P_pol:.6f}"

    def write_csv(self, path):
        """Columns: energy, atomic_weight, localization_length, in_gap."""
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["energy", "atomic_weight", "localization_length", "in_gap"])
            for b in self.bound:
                w.writerow([f"{b.energy:.16e}", f"{b.atomic_weight:.16e}",
                            f"{b.localization_length:.16e}", int(b.in_gap)])
        return path


def polariton_report(H, sys: MappedSystem, psi0: SectorState, weight_threshold=1e-3,
                     on_degeneracy="project") -> PolaritonReport:
    eig = diagonalize_single_exc(H)
    bound = detect_bound_states(eig, sys, weight_threshold, on_degeneracy)
    amps = psi0.amplitudes
    overlaps = np.array([np.vdot(b.vector, amps) for b in bound], dtype=complex)
    p_pol = float(np.sum(np.abs(overlaps) ** 2))
    return PolaritonReport(eig, bound, p_pol, overlaps, float(weight_threshold))


def threshold_sensitivity(eig: Eigenpairs, sys: MappedSystem, thresholds):
    """Bound-state count at each atomic-weight threshold."""
    return [(float(t), len(detect_bound_states(eig, sys, t))) for t in thresholds]


def band_interior_participation(eig: Eigenpairs, sys: MappedSystem, band=None):
    """Participation ratio of the mode weights of eigenvectors strictly inside the band."""
    lo, hi = band if band is not None else _band(sys)
    N = sys.N
    inside = (eig.energies > lo + 1e-9) & (eig.energies < hi - 1e-9)
    return np.array([participation_ratio(np.abs(eig.vectors[N:, i]) ** 2) for i in np.nonzero(inside)[0]])


@dataclass(frozen=True)
class GapPrediction:
    delta1: float
    delta2: float
    classes: tuple  # "gap" or "band" for (Δ1, Δ2)
    classification: str  # both-in-gap, split or both-in-band


def gap_boundary_predictor(omega0, J, A, B) -> GapPrediction:
    """Δ1 = ω0 - J, Δ2 = ω0 + J classified against the closed band [A - B, A + B].

    The Lamb shift is deliberately left out.
    """
    if B < 0:
        raise DomainError("band half-width B must be >= 0")
    d1, d2 = omega0 - J, omega0 + J
    cls = tuple("band" if A - B <= d <= A + B else "gap" for d in (d1, d2))
    if cls == ("gap", "gap"):
        label = "both-in-gap"
    elif cls == ("band", "band"):
        label = "both-in-band"
    else:
        label = "split"
    return GapPrediction(d1, d2, cls, label)


def split_region(J, A, B):
    """Open ω0-intervals where exactly one of Δ1, Δ2 lies in the band.

    Δ1 is in the band for ω0 in [A-B+J, A+B+J] and Δ2 for ω0 in [A-B-J, A+B-J];
    the split region is their symmetric difference.
    """
    J = abs(J)
    if J == 0:
        return []
    a1, b1 = A - B + J, A + B + J
    a2, b2 = A - B - J, A + B - J
    if a1 >= b2:  # disjoint bands of ω0
        return [(a2, b2), (a1, b1)] if b2 > a2 else [(a1, b1)]
    return [(a2, a1), (b2, b1)]


def first_drop(J_values, p_values, tolerance=0.05):
    """First J at which P_pol falls below 0.5 P_pol(J_0) + tolerance (None if never)."""
    J_values = np.asarray(J_values, dtype=float)
    p_values = np.asarray(p_values, dtype=float)
    level = 0.5 * p_values[0] + tolerance
    below = np.nonzero(p_values < level)[0]
    return float(J_values[below[0]]) if below.size else None
