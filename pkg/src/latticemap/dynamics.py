"""Excitation-conserving dynamics of atoms attached to a mode chain.

Sites are numbered atoms first (0..N-1) then chain modes (N..N+M-1). Atoms
are two-level (hard-core); modes are bosonic, so in the two-excitation sector
a mode may be doubly occupied and hops into or out of it carry a sqrt(2).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .correlation import CorrelationKernel
from .exceptions import ConfigurationError, ConvergenceError
from .mapping import MappedSystem

EIGEN_MAX_DIM = 2000
NORM_TOL = 1e-9


class SectorBasis:
    """Ordered occupation labels of the 1- or 2-excitation sector.

    Each label is a sorted tuple of site indices. Two-excitation order:
    atom pairs, atom-mode pairs, distinct mode pairs, doubly occupied modes.
    """

    def __init__(self, N, M, excitations=1):
        if excitations not in (1, 2):
            raise ConfigurationError("only the 1- and 2-excitation sectors are supported")
        self.N, self.M, self.excitations = int(N), int(M), excitations
        atoms = range(N)
        modes = range(N, N + M)
        if excitations == 1:
            labels = [(s,) for s in range(N + M)]
        else:
            labels = [tuple(p) for p in combinations(atoms, 2)]
            labels += [(a, m) for a in atoms for m in modes]
            labels += [tuple(p) for p in combinations(modes, 2)]
            labels += [(m, m) for m in modes]
        self.labels = labels
        self.index = {lab: i for i, lab in enumerate(labels)}
        rows, cols, vals = [], [], []
        for i, lab in enumerate(labels):
            for s in set(lab):
                rows.append(i)
                cols.append(s)
                vals.append(lab.count(s))
        self.occupation = sp.csr_matrix((vals, (rows, cols)), shape=(len(labels), N + M), dtype=float)

    def __len__(self):
        return len(self.labels)

    @staticmethod
    def expected_dim(N, M, excitations):
        if excitations == 1:
            return N + M
        return math.comb(N, 2) + N * M + math.comb(M, 2) + M


@dataclass
class SectorState:
    basis: SectorBasis
    amplitudes: np.ndarray
    time: float = 0.0

    @classmethod
    def excite(cls, basis: SectorBasis, atoms=(1,)):
        """Product state with the given atoms (1-based) excited, modes in vacuum."""
        label = tuple(sorted(a - 1 for a in atoms))
        if len(label) != basis.excitations:
            raise ValueError(f"sector holds {basis.excitations} excitation(s), got atoms {atoms}")
        if any(a < 0 or a >= basis.N for a in label) or len(set(label)) != len(label):
            raise ValueError(f"invalid excited atoms {atoms}")
        amp = np.zeros(len(basis), dtype=complex)
        amp[basis.index[label]] = 1.0
        return cls(basis, amp)

    @property
    def norm(self):
        return float(np.linalg.norm(self.amplitudes))


def single_particle_matrix(sys: MappedSystem) -> np.ndarray:
    """(N+M)x(N+M) one-excitation Hamiltonian in the mapped basis."""
    N, M = sys.N, sys.M
    f = sys.coupling.dense()
    h = np.zeros((N + M, N + M), dtype=complex)
    h[N:, N:] = f
    for j in range(N):
        h[j, j] = sys.omega0
        if j + 1 < N:
            h[j, j + 1] = h[j + 1, j] = -sys.J
    for j, (site, w) in enumerate(zip(sys.sites, sys.weights)):
        h[j, N + site] = h[N + site, j] = sys.g * w
    return h


def _two_excitation_matrix(h1, basis):
    N = basis.N
    rows, cols, vals = [], [], []
    hops = [np.nonzero(h1[:, x])[0] for x in range(h1.shape[0])]
    diag = np.real(np.diag(h1))
    for col, lab in enumerate(basis.labels):
        rows.append(col)
        cols.append(col)
        vals.append(sum(diag[s] for s in lab))
        for pos, x in enumerate(lab):
            other = lab[1 - pos]
            if pos == 1 and x == lab[0]:
                continue  # doubly occupied: one removal covers both bosons
            n_x = lab.count(x)
            for y in hops[x]:
                if y == x:
                    continue
                if y < N and y == other:
                    continue  # hard-core atoms
                n_y = 1 if y == other else 0
                amp = h1[y, x] * math.sqrt(n_x) * math.sqrt(n_y + 1)
                new = (y, other) if y <= other else (other, y)
                rows.append(basis.index[new])
                cols.append(col)
                vals.append(amp)
    dim = len(basis)
    return sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim), dtype=complex)


def _finish(h):
    h = sp.csr_matrix(h)
    if h.nnz and np.max(np.abs(h.data.imag)) == 0.0:
        h = h.real.tocsr()
    h.eliminate_zeros()
    return h


def build_hamiltonian_mapped(sys: MappedSystem, sector=1):
    """Sparse Hermitian Hamiltonian of the mapped system in a fixed sector."""
    if not sys.rwa:
        raise ConfigurationError("counter-rotating (non-RWA) Hamiltonians are not supported")
    h1 = single_particle_matrix(sys)
    if sector == 1:
        return _finish(h1)
    basis = SectorBasis(sys.N, sys.M, sector)
    return _finish(_two_excitation_matrix(h1, basis))


def build_hamiltonian_direct_k(sys: MappedSystem, sector=1):
    """Single-excitation Hamiltonian in the original k-mode basis (ring only).

    Mode q has energy ω(k_q); atom n couples to it with g u_n exp(i k_q r_n)/sqrt(M).
    """
    if not sys.rwa:
        raise ConfigurationError("counter-rotating (non-RWA) Hamiltonians are not supported")
    chain = sys.coupling
    if chain.boundary != "ring" or chain.dims != 1 or chain.wavevectors is None:
        raise ConfigurationError("the k-basis Hamiltonian is defined for 1D rings only")
    if sector != 1:
        raise ConfigurationError("the k-basis Hamiltonian is built for the 1-excitation sector")
    N, M = sys.N, chain.M
    k = chain.wavevectors
    h = np.zeros((N + M, N + M), dtype=complex)
    h[N:, N:] = np.diag(chain.mode_energies)
    for j in range(N):
        h[j, j] = sys.omega0
        if j + 1 < N:
            h[j, j + 1] = h[j + 1, j] = -sys.J
    for j, (site, w) in enumerate(zip(sys.sites, sys.weights)):
        row = sys.g * w * np.exp(1j * k * site * chain.h0) / math.sqrt(M)
        h[j, N:] = row
        h[N:, j] = row.conj()
    return _finish(h)


@dataclass
class Trajectory:
    """Populations along a time grid.

    ``atomic[i, j]`` = <σ_j^+ σ_j>(t_i), ``photonic[i, m]`` = <b_m^† b_m>(t_i).
    """

    times: np.ndarray
    atomic: np.ndarray
    photonic: np.ndarray
    norm: np.ndarray
    excitations: int = 1
    method: str = "eigen"
    states: np.ndarray | None = None

    @property
    def norm_drift(self):
        return float(np.max(np.abs(self.norm - 1.0)))

    @property
    def total_atomic(self):
        return self.atomic.sum(axis=1)

    def write_csv(self, path):
        """Columns: t, atom_1..atom_N, mode_1..mode_M."""
        path = Path(path)
        N, M = self.atomic.shape[1], self.photonic.shape[1]
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t"] + [f"atom_{j + 1}" for j in range(N)] + [f"mode_{m + 1}" for m in range(M)])
            for t, a, p in zip(self.times, self.atomic, self.photonic):
                w.writerow([f"{t:.16e}"] + [f"{x:.16e}" for x in a] + [f"{x:.16e}" for x in p])
        return path


def _populations(psi, occupation, N):
    pops = occupation.T @ (np.abs(psi) ** 2).T
    return pops[:N].T, pops[N:].T


def _eigen_propagate(H, psi0, times, chunk=512):
    Hd = H.toarray() if sp.issparse(H) else np.asarray(H)
    E, V = np.linalg.eigh(Hd)
    coeff = V.conj().T @ psi0
    for start in range(0, len(times), chunk):
        t = times[start:start + chunk]
        yield (V @ (np.exp(-1j * np.outer(E, t)) * coeff[:, None])).T


def _lanczos_exp(H, v, dt, m, tol):
    """exp(-i H dt) v by an m-step Lanczos projection; returns (w, error estimate)."""
    beta0 = np.linalg.norm(v)
    n = v.shape[0]
    m = min(m, n)
    Q = np.zeros((m + 1, n), dtype=complex)
    alpha = np.zeros(m)
    beta = np.zeros(m)
    Q[0] = v / beta0
    size = m
    for j in range(m):
        w = H @ Q[j]
        alpha[j] = np.vdot(Q[j], w).real
        w = w - alpha[j] * Q[j] - (beta[j - 1] * Q[j - 1] if j else 0)
        w = w - Q[: j + 1].T @ (Q[: j + 1].conj() @ w)
        beta[j] = np.linalg.norm(w)
        if beta[j] < 1e-14 * max(1.0, abs(alpha[j])):
            size = j + 1
            break
        Q[j + 1] = w / beta[j]
    T = np.diag(alpha[:size]) + np.diag(beta[: size - 1], 1) + np.diag(beta[: size - 1], -1)
    ev, U = np.linalg.eigh(T)
    y = U @ (np.exp(-1j * ev * dt) * U[0].conj())
    err = beta[size - 1] * abs(y[-1]) * beta0 if size == m else 0.0
    return beta0 * (Q[:size].T @ y), err


def _krylov_propagate(H, psi0, times, m=30, tol=1e-12):
    H = sp.csr_matrix(H)
    scale = max(abs(H).sum(axis=1).max(), 1e-300)
    psi = psi0.astype(complex)
    t_now = times[0]
    dt = min(1.0 / scale * 5.0, (times[-1] - times[0]) or 1.0)
    out = []
    for t_target in times:
        while t_target - t_now > 1e-14 * max(1.0, abs(t_target)):
            step = min(dt, t_target - t_now)
            new, err = _lanczos_exp(H, psi, step, m, tol)
            if err > tol:
                dt = 0.5 * step
                if dt < 1e-10 * max(1.0, abs(times[-1])):
                    raise ConvergenceError(f"Krylov step refused at t={t_now:.6g}: error {err:.3e}")
                continue
            psi, t_now = new, t_now + step
            if err < 0.1 * tol and step == dt:
                dt *= 1.5
        out.append(psi.copy())
    yield np.array(out)


def evolve(H, psi0: SectorState, t_grid, method="auto", keep_states=False) -> Trajectory:
    """ψ(t) = exp(-iHt) ψ0 on ``t_grid``.

    ``method="auto"`` diagonalises H exactly up to dimension 2000 and switches
    to Lanczos-Krylov stepping above. The state is never renormalised; the
    norm is logged and a drift beyond 1e-9 raises ``ConvergenceError``.
    """
    times = np.asarray(t_grid, dtype=float)
    if times.ndim != 1 or times.size == 0 or np.any(np.diff(times) < 0):
        raise ValueError("t_grid must be a non-empty ascending array")
    v0 = np.asarray(psi0.amplitudes, dtype=complex)
    if abs(np.linalg.norm(v0) - 1.0) > NORM_TOL:
        raise ValueError("initial state is not normalised")
    dim = H.shape[0]
    if method == "auto":
        method = "eigen" if dim <= EIGEN_MAX_DIM else "krylov"
    t_rel = times - psi0.time
    chunks = _eigen_propagate(H, v0, t_rel) if method == "eigen" else _krylov_propagate(H, v0, t_rel)
    basis = psi0.basis
    atomic, photonic, norms, kept = [], [], [], []
    for psi in chunks:
        a, p = _populations(psi, basis.occupation, basis.N)
        atomic.append(a)
        photonic.append(p)
        norms.append(np.linalg.norm(psi, axis=1))
        if keep_states:
            kept.append(psi)
    traj = Trajectory(
        times, np.vstack(atomic), np.vstack(photonic), np.concatenate(norms),
        basis.excitations, method, np.vstack(kept) if keep_states else None,
    )
    if traj.norm_drift > NORM_TOL:
        raise ConvergenceError(f"norm drift {traj.norm_drift:.3e} exceeds {NORM_TOL}")
    return traj


def final_state(traj: Trajectory, basis: SectorBasis) -> SectorState:
    if traj.states is None:
        raise ValueError("trajectory was computed without keep_states=True")
    return SectorState(basis, traj.states[-1].copy(), float(traj.times[-1]))


def population_average_curve(traj: Trajectory) -> np.ndarray:
    """P_T(t) = (1/t) Σ_j ∫_0^t P_j(s) ds at every grid time (limit value at t = 0)."""
    total = traj.total_atomic
    t = traj.times - traj.times[0]
    integral = np.concatenate(([0.0], np.cumsum(0.5 * np.diff(t) * (total[1:] + total[:-1]))))
    out = np.empty_like(total)
    out[0] = total[0]
    with np.errstate(invalid="ignore", divide="ignore"):
        out[1:] = integral[1:] / t[1:]
    return out


def total_population_average(traj: Trajectory, t) -> float:
    """P_T at time ``t`` (trapezoid on the stored grid, linear in the last partial step)."""
    times = traj.times
    if t < times[0] or t > times[-1] * (1 + 1e-12):
        raise ValueError(f"t={t} outside trajectory range [{times[0]}, {times[-1]}]")
    total = traj.total_atomic
    if t == times[0]:
        return float(total[0])
    idx = np.searchsorted(times, t, side="right")
    s = np.append(times[:idx], t) if times[idx - 1] < t else times[:idx]
    vals = np.interp(s, times, total)
    return float(np.trapezoid(vals, s) / (t - times[0]))


@dataclass
class Histogram:
    """Time-averaged atomic and photonic site populations."""

    atomic: np.ndarray
    photonic: np.ndarray
    window: tuple

    def rows(self):
        for j, v in enumerate(self.atomic):
            yield j + 1, "atom", float(v)
        for m, v in enumerate(self.photonic):
            yield m + 1, "mode", float(v)

    def write_csv(self, path):
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["site", "species", "value"])
            for site, species, v in self.rows():
                w.writerow([site, species, f"{v:.16e}"])
        return path


def steady_histogram(traj: Trajectory, window) -> Histogram:
    t_a, t_b = window
    if not t_b > t_a >= 0:
        raise ValueError("window must satisfy t_b > t_a >= 0")
    mask = (traj.times >= t_a) & (traj.times <= t_b)
    if mask.sum() < 2:
        raise ValueError(f"window [{t_a}, {t_b}] holds fewer than two samples")
    s = traj.times[mask]
    width = s[-1] - s[0]
    atomic = np.trapezoid(traj.atomic[mask], s, axis=0) / width
    photonic = np.trapezoid(traj.photonic[mask], s, axis=0) / width
    return Histogram(atomic, photonic, (float(t_a), float(t_b)))


def participation_ratio(p) -> float:
    """(Σp)^2 / Σp^2: effective number of occupied sites."""
    p = np.asarray(p, dtype=float)
    den = float(np.sum(p**2))
    return float(np.sum(p) ** 2 / den) if den > 0 else 0.0


def volterra_oracle(kernel: CorrelationKernel, omega0, t_grid, separation=0) -> np.ndarray:
    """Single-atom amplitude from dc/dt = -iω0 c - ∫_0^t α(t-τ) c(τ) dτ, c(0) = 1.

    Solved in the frame rotating at ω0 by the trapezoidal rule for both the
    time derivative and the memory integral (second order), on the kernel's
    own grid; ``t_grid`` must be a subset of that grid.
    """
    dt = kernel.dt
    half_band = 0.5 * (kernel.disp.band[1] - kernel.disp.band[0])
    if half_band > 0 and dt > 0.1 / half_band:
        raise ValueError(f"kernel step {dt} too coarse: need <= 0.1/B = {0.1 / half_band:.3g}")
    t_grid = np.asarray(t_grid, dtype=float)
    idx = np.rint((t_grid - kernel.times[0]) / dt).astype(int) if dt > 0 else np.zeros(len(t_grid), int)
    if np.any(np.abs(kernel.times[0] + idx * dt - t_grid) > 1e-9 * max(dt, 1.0)) or np.any(idx < 0):
        raise ValueError("t_grid points must lie on the kernel time grid")
    n_max = int(idx.max()) if idx.size else 0
    if n_max >= len(kernel.times):
        raise ValueError("kernel horizon shorter than requested times")
    a = kernel.at(separation)[: n_max + 1] * np.exp(1j * omega0 * kernel.times[: n_max + 1])
    h = dt
    c = np.zeros(n_max + 1, dtype=complex)
    c[0] = 1.0
    memory = 0.0 + 0.0j  # I_n
    denom = 1.0 + 0.25 * h * h * a[0]
    for n in range(n_max):
        # S_{n+1} = h [a_{n+1} c_0 / 2 + Σ_{j=1..n} a_{n+1-j} c_j]
        s = h * (0.5 * a[n + 1] * c[0] + np.dot(a[n:0:-1], c[1:n + 1]))
        c[n + 1] = (c[n] - 0.5 * h * (memory + s)) / denom
        memory = s + 0.5 * h * a[0] * c[n + 1]
    return c[idx] * np.exp(-1j * omega0 * t_grid)
