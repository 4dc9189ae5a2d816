"""Second-order (Born, time-local) master equation for the atomic density matrix.

    dρ/dt = -i[H_S, ρ] + Σ_l ([Λ_l(t) ρ, L_l^†] + [L_l, ρ Λ_l(t)^†]),
    Λ_l(t) = Σ_j ∫_0^t ds α_lj(s) L_j(-s),   L_j(-s) = exp(-iH_S s) L_j exp(iH_S s)

In the eigenbasis of H_S the coefficients are
K_lj^ab(t) = ∫_0^t α_lj(s) exp(-i (E_a - E_b) s) ds and Λ_l = Σ_j K_lj ⊙ L_j.

Coupling operators: ``"rwa"`` uses L_j = σ_j (the choice matching the RWA
chain Hamiltonian); ``"dipole"`` uses L_j = σ_j + σ_j^†. Positivity is never
enforced: the sum of negative eigenvalues is the diagnostic of failure.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .correlation import CorrelationKernel
from .exceptions import AccuracyError

NEGATIVE_CUTOFF = 1e-12
TRACE_TOL = 1e-6


def lowering_operators(N):
    """σ_j on (C^2)^⊗N, atom 1 leftmost, local basis (ground, excited)."""
    sm = np.array([[0.0, 1.0], [0.0, 0.0]])
    ops = []
    for j in range(N):
        op = np.array([[1.0]])
        for i in range(N):
            op = np.kron(op, sm if i == j else np.eye(2))
        ops.append(op.astype(complex))
    return ops


def basis_state(N, excited=(1,)):
    """Product state vector with the listed atoms (1-based) excited."""
    vec = np.array([1.0 + 0j])
    for i in range(1, N + 1):
        vec = np.kron(vec, [0.0, 1.0] if i in excited else [1.0, 0.0])
    return vec


@dataclass(frozen=True)
class AtomicSystem:
    """N two-level atoms: H_S = ω0 Σ σ_j^+σ_j - J Σ_⟨jl⟩ σ_j^+σ_l, spaced P chain sites apart."""

    N: int
    omega0: float
    J: float = 0.0
    P: int = 1
    coupling: str = "rwa"

    def __post_init__(self):
        if not 1 <= self.N <= 8:
            raise ValueError("the master equation supports 1 <= N <= 8 atoms")
        if self.coupling not in ("rwa", "dipole"):
            raise ValueError(f"unknown coupling operator {self.coupling!r}")

    @cached_property
    def lowering(self):
        return lowering_operators(self.N)

    @cached_property
    def hamiltonian(self):
        sig = self.lowering
        H = sum(self.omega0 * s.conj().T @ s for s in sig)
        for j in range(self.N - 1):
            hop = sig[j].conj().T @ sig[j + 1]
            H = H - self.J * (hop + hop.conj().T)
        return H

    @cached_property
    def coupling_operators(self):
        if self.coupling == "rwa":
            return self.lowering
        return [s + s.conj().T for s in self.lowering]

    @cached_property
    def eigensystem(self):
        return np.linalg.eigh(self.hamiltonian)


def _kernel_rows(kernel, system, n):
    """α_lj(s) on the first n kernel samples, shape (N, N, n)."""
    N = system.N
    out = np.empty((N, N, n), dtype=complex)
    for l in range(N):
        for j in range(N):
            sep = (l - j) * system.P
            if sep not in kernel.separations:
                raise ValueError(f"kernel lacks separation {sep} needed for atoms {l + 1},{j + 1}")
            out[l, j] = kernel.at(sep)[:n]
    return out


def _time_index(kernel, t):
    dt = kernel.dt
    i = int(round(t / dt)) if dt > 0 else 0
    if abs(i * dt - t) > 1e-9 * max(dt, 1.0):
        raise ValueError(f"t={t} is not on the kernel grid")
    if i >= len(kernel.times):
        raise ValueError(f"kernel horizon {kernel.horizon} shorter than t={t}")
    return i


def me_coefficients(kernel: CorrelationKernel, system: AtomicSystem, t):
    """K[l, j, a, b] = ∫_0^t α_lj(s) exp(-i(E_a - E_b)s) ds by the trapezoidal rule."""
    i = _time_index(kernel, t)
    E, _ = system.eigensystem
    wab = E[:, None] - E[None, :]
    s = kernel.times[: i + 1]
    alpha = _kernel_rows(kernel, system, i + 1)
    phase = np.exp(-1j * wab[None, :, :] * s[:, None, None])
    integrand = alpha[:, :, :, None, None] * phase[None, None]
    if i == 0:
        return np.zeros(integrand.shape[:2] + integrand.shape[3:], dtype=complex)
    return np.trapezoid(integrand, s, axis=2)


def negativity_diagnostic(rho) -> float:
    """Sum of eigenvalues below -1e-12 (0 for a positive operator)."""
    rho = np.asarray(rho)
    ev = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    neg = ev[ev < -NEGATIVE_CUTOFF]
    return float(neg.sum()) if neg.size else 0.0


@dataclass
class MasterEquationResult:
    times: np.ndarray
    rho: np.ndarray  # (nt, D, D), product (site) basis
    populations: np.ndarray  # (nt, N)
    coherences: np.ndarray  # (nt, N(N-1)/2): |<σ_i^+ σ_j>|, i < j
    trace: np.ndarray
    negativity: np.ndarray
    max_symmetrization: float

    @property
    def trace_drift(self):
        return float(np.max(np.abs(self.trace - 1.0)))

    def write_csv(self, path):
        """Columns: t, pop_j, coh_ij (|<σ_i^+ σ_j>|), trace, negativity."""
        path = Path(path)
        N = self.populations.shape[1]
        pairs = [(i, j) for i in range(N) for j in range(i + 1, N)]
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t"] + [f"pop_{j + 1}" for j in range(N)]
                       + [f"coh_{i + 1}{j + 1}" for i, j in pairs] + ["trace", "negativity"])
            for k, t in enumerate(self.times):
                w.writerow([f"{t:.16e}"] + [f"{x:.16e}" for x in self.populations[k]]
                           + [f"{x:.16e}" for x in self.coherences[k]]
                           + [f"{self.trace[k]:.16e}", f"{self.negativity[k]:.16e}"])
        return path


def integrate_me(kernel: CorrelationKernel, system: AtomicSystem, rho0, t_grid) -> MasterEquationResult:
    """Fourth-order Runge-Kutta integration of the time-local master equation.

    ``t_grid`` must be uniform from 0 with step h; the kernel grid must resolve
    h/2 (its step divides h/2) so that the coefficients at the RK4 stages are
    exact trapezoidal integrals. The step must satisfy h <= 0.05/max(ω0, B).
    """
    times = np.asarray(t_grid, dtype=float)
    if times[0] != 0.0 or len(times) < 2:
        raise ValueError("t_grid must start at 0 and hold at least two points")
    h = times[1] - times[0]
    if np.max(np.abs(np.diff(times) - h)) > 1e-9 * h:
        raise ValueError("t_grid must be uniform")
    half_band = 0.5 * (kernel.disp.band[1] - kernel.disp.band[0])
    scale = max(abs(system.omega0), half_band, 1e-300)
    if h > 0.05 / scale * (1 + 1e-9):
        raise ValueError(f"step {h} too large: need <= 0.05/max(omega0, B) = {0.05 / scale:.3g}")
    ratio = (h / 2) / kernel.dt
    sub = int(round(ratio))
    if sub < 1 or abs(ratio - sub) > 1e-6:
        raise ValueError("kernel step must divide half the integration step")
    n_fine = 2 * sub * (len(times) - 1) + 1
    if n_fine > len(kernel.times):
        raise ValueError(f"kernel horizon {kernel.horizon} shorter than t={times[-1]}")

    rho0 = np.asarray(rho0, dtype=complex)
    if np.max(np.abs(rho0 - rho0.conj().T)) > 1e-10 or abs(np.trace(rho0) - 1) > 1e-9:
        raise ValueError("rho0 must be Hermitian with unit trace")

    E, U = system.eigensystem
    D = len(E)
    N = system.N
    L = np.array([U.conj().T @ op @ U for op in system.coupling_operators])
    Ld = L.conj().transpose(0, 2, 1)
    wab = E[:, None] - E[None, :]
    s_fine = kernel.times[:n_fine]
    alpha = _kernel_rows(kernel, system, n_fine)
    dt_k = kernel.dt

    def integrand(i):
        # G_l(s_i) = Σ_j α_lj(s_i) L_j ⊙ exp(-i ω_ab s_i)
        phase = np.exp(-1j * wab * s_fine[i])
        return np.einsum("lj,jab->lab", alpha[:, :, i], L) * phase

    # Λ_l at every half step, accumulated by the trapezoidal rule on the fine grid
    lam = np.empty((n_fine // sub + 1, N, D, D), dtype=complex)
    current = np.zeros((N, D, D), dtype=complex)
    prev_g = integrand(0)
    lam[0] = current
    for i in range(1, n_fine):
        g_i = integrand(i)
        current = current + 0.5 * dt_k * (prev_g + g_i)
        prev_g = g_i
        if i % sub == 0:
            lam[i // sub] = current

    def rhs(rho, stage):
        out = -1j * (E[:, None] * rho - rho * E[None, :])
        for l in range(N):
            X = lam[stage, l] @ rho
            c = X @ Ld[l] - Ld[l] @ X
            out = out + c + c.conj().T
        return out

    rho = U.conj().T @ rho0 @ U
    nt = len(times)
    rhos = np.empty((nt, D, D), dtype=complex)
    max_fix = 0.0
    for n in range(nt):
        rhos[n] = rho
        if n == nt - 1:
            break
        k1 = rhs(rho, 2 * n)
        k2 = rhs(rho + 0.5 * h * k1, 2 * n + 1)
        k3 = rhs(rho + 0.5 * h * k2, 2 * n + 1)
        k4 = rhs(rho + h * k3, 2 * n + 2)
        new = rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        sym = 0.5 * (new + new.conj().T)
        max_fix = max(max_fix, float(np.max(np.abs(new - sym))))
        rho = sym
        if not np.all(np.isfinite(rho)):
            raise AccuracyError(f"integration diverged at t={times[n + 1]:.6g}")

    site = U[None] @ rhos @ U.conj().T[None]
    sig = system.lowering
    number = np.array([s.conj().T @ s for s in sig])
    pops = np.einsum("tab,jba->tj", site, number).real
    pairs = [(i, j) for i in range(N) for j in range(i + 1, N)]
    coh = np.array([[abs(np.trace(r @ sig[i].conj().T @ sig[j])) for i, j in pairs] for r in site])
    coh = coh.reshape(nt, len(pairs))
    trace = np.einsum("taa->t", site).real
    neg = np.array([negativity_diagnostic(r) for r in site])
    result = MasterEquationResult(times, site, pops, coh, trace, neg, max_fix)
    if result.trace_drift > TRACE_TOL:
        raise AccuracyError(f"trace drift {result.trace_drift:.3e} exceeds {TRACE_TOL}", estimate=result)
    return result
