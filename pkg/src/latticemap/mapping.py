"""Fourier-type lattice mapping of a reservoir onto coupled chain modes.

For M modes k_q = 2πq/(M h0) on a ring, the transformed modes
b_n = M^-1/2 Σ_q exp(-i k_q r_n) a_q hop with

    f_nm = (1/M) Σ_q ω(k_q) exp(i k_q (r_n - r_m)),

a circulant matrix whose eigenvalues are exactly {ω(k_q)}. Mode indices run
q = 0..M-1; the spectrum is the same multiset as for q = 1..M.
"""
from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .dispersion import Dispersion, mode_grid

PRUNE = 1e-14
DENSE_BELOW = 256


@dataclass(frozen=True)
class ChainCoupling:
    """Hermitian hopping matrix of the transformed modes.

    ``f`` is a dense array below 256 modes and a CSR matrix above. For 1D
    rings ``wavevectors`` and ``mode_energies`` hold the k_q grid and ω(k_q).
    ``deviation`` lists the (row, col, value) entries dropped to open the ring.
    """

    M: int
    dims: int
    f: object
    boundary: str
    h0: float
    provenance: tuple
    wavevectors: np.ndarray | None = None
    mode_energies: np.ndarray | None = None
    deviation: tuple = ()
    tag: str = "1d"

    @property
    def n_modes(self):
        return self.f.shape[0]

    def dense(self):
        return self.f.toarray() if sp.issparse(self.f) else np.asarray(self.f)

    def sparse(self):
        return sp.csr_matrix(self.f)

    def hermiticity_error(self):
        f = self.dense()
        return float(np.max(np.abs(f - f.conj().T)))

    def average_hopping(self):
        """Mean |f_{n,n+1}| along the first axis (the typical hopping rate)."""
        f = self.dense()
        n = f.shape[0]
        return float(np.mean(np.abs(f[np.arange(n - 1), np.arange(1, n)]))) if n > 1 else 0.0

    def write_csv(self, path):
        """Sparse triplets: row, col, re, im (0-based indices)."""
        path = Path(path)
        coo = sp.coo_matrix(self.f)
        order = np.lexsort((coo.col, coo.row))
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["row", "col", "re", "im"])
            for i in order:
                v = complex(coo.data[i])
                writer.writerow([int(coo.row[i]), int(coo.col[i]), f"{v.real:.16e}", f"{v.imag:.16e}"])
        return path


def _store(f):
    f = np.where(np.abs(f) < PRUNE, 0.0, f)
    if np.max(np.abs(f.imag), initial=0.0) == 0.0:
        f = f.real
    return sp.csr_matrix(f) if f.shape[0] >= DENSE_BELOW else f


def _ring_matrix(disp, M):
    k = mode_grid(disp, M)
    omega = np.asarray(disp.evaluate(k), dtype=float)
    # circulant: f_nm = c[(n - m) mod M], c_d = (1/M) Σ_q ω_q exp(2πi q d / M)
    c = np.fft.ifft(omega)
    idx = (np.arange(M)[:, None] - np.arange(M)[None, :]) % M
    f = c[idx]
    f = 0.5 * (f + f.conj().T)
    return f, k, omega


def build_f_matrix(disp: Dispersion, M: int, boundary="ring") -> ChainCoupling:
    """Hopping matrix of M chain modes for a 1D dispersion.

    ``boundary="open"`` removes the two wrap-around entries f_{1,M}, f_{M,1}
    and records them in ``deviation``.
    """
    if M < 4:
        raise ValueError("build_f_matrix requires M >= 4")
    if boundary not in ("ring", "open"):
        raise ValueError(f"unknown boundary {boundary!r}")
    f, k, omega = _ring_matrix(disp, M)
    deviation = ()
    if boundary == "open":
        deviation = ((0, M - 1, complex(f[0, M - 1])), (M - 1, 0, complex(f[M - 1, 0])))
        f = f.copy()
        f[0, M - 1] = f[M - 1, 0] = 0.0
    return ChainCoupling(
        M=M, dims=1, f=_store(f), boundary=boundary, h0=disp.lattice_constant,
        provenance=(disp,), wavevectors=k, mode_energies=omega, deviation=deviation,
    )


def build_separable_f(dispersions, M: int, boundary="ring", dims=None) -> ChainCoupling:
    """Lattice for ω(k) = Σ_axis ω_axis(k_axis): a Kronecker sum of 1D chains.

    Modes are flattened row-major over (n_x, n_y[, n_z]); hopping never
    connects sites across a diagonal.
    """
    dispersions = tuple(dispersions)
    if dims is not None and dims != len(dispersions):
        raise ValueError(f"{len(dispersions)} dispersions given for a {dims}D lattice")
    if not 1 <= len(dispersions) <= 3:
        raise ValueError("separable lattices have 1 to 3 axes")
    axes = [build_f_matrix(d, M, boundary).sparse() for d in dispersions]
    eye = sp.identity(M, format="csr")
    total = None
    for i, fa in enumerate(axes):
        term = None
        for j in range(len(axes)):
            piece = fa if j == i else eye
            term = piece if term is None else sp.kron(term, piece, format="csr")
        total = term if total is None else total + term
    f = total.toarray() if total.shape[0] < DENSE_BELOW else total.tocsr()
    if isinstance(f, np.ndarray):
        f = _store(f)
    else:
        f.data[np.abs(f.data) < PRUNE] = 0.0
        f.eliminate_zeros()
    return ChainCoupling(
        M=M, dims=len(dispersions), f=f, boundary=boundary,
        h0=dispersions[0].lattice_constant, provenance=dispersions, tag=f"separable-{len(dispersions)}d",
    )


def build_isotropic_effective_chain(disp: Dispersion, M: int, boundary="ring") -> ChainCoupling:
    """Effective chain of isotropic (l = m = 0) modes for atoms on one axis.

    Uses the same discrete sum as the 1D mapping with the radial ω(|k|).
    """
    chain = build_f_matrix(disp, M, boundary)
    return dataclasses.replace(chain, tag="isotropic-3d")


@dataclass(frozen=True)
class UnitarityReport:
    M: int
    rows: int
    max_dev_forward: float  # |U^† U - 1|
    max_dev_backward: float  # |U U^† - 1|

    @property
    def max_deviation(self):
        return max(self.max_dev_forward, self.max_dev_backward)


def verify_unitary(M: int, drop_rows=0) -> UnitarityReport:
    """Check both orthonormality relations of φ_n(k_q) = exp(i k_q r_n)/sqrt(M).

    ``drop_rows`` truncates the transform to show the resulting deviation.
    """
    if M < 2:
        raise ValueError("verify_unitary requires M >= 2")
    n = np.arange(M)
    U = np.exp(2j * math.pi * np.outer(n, n) / M) / math.sqrt(M)
    if drop_rows:
        U = U[: M - drop_rows]
    eye_cols = np.eye(U.shape[1])
    eye_rows = np.eye(U.shape[0])
    fwd = float(np.max(np.abs(U.conj().T @ U - eye_cols)))
    bwd = float(np.max(np.abs(U @ U.conj().T - eye_rows)))
    return UnitarityReport(M, U.shape[0], fwd, bwd)


def staggered_gauge(coupling: ChainCoupling) -> ChainCoupling:
    """f'_nm = (-1)^(n-m) f_nm, the gauge that flips the nearest-neighbour sign.

    On a ring this is a gauge transformation only for even M.
    """
    f = coupling.dense()
    n = np.arange(f.shape[0])
    sign = np.where((n[:, None] - n[None, :]) % 2 == 0, 1.0, -1.0)
    return dataclasses.replace(coupling, f=_store(f * sign))


@dataclass(frozen=True)
class MappedSystem:
    """Atoms attached to a chain: atom n (1-based) sits on chain site nP.

    ``sites`` are the 0-based chain indices of the attachment points.
    """

    coupling: ChainCoupling
    N: int
    P: int
    g: float
    omega0: float
    J: float = 0.0
    rwa: bool = True
    u: tuple = ()
    sites: tuple = field(default=())

    @property
    def M(self):
        return self.coupling.n_modes

    @property
    def weights(self):
        return np.asarray(self.u if self.u else (1.0,) * self.N, dtype=float)


def attach_atoms(coupling: ChainCoupling, N, P, g, omega0, J=0.0, rwa=True, u=None) -> MappedSystem:
    """Attach N atoms every P chain sites (atom n on site nP, 1-based)."""
    if N < 1 or P < 1:
        raise ValueError("need N >= 1 atoms and spacing P >= 1")
    if N * P > coupling.n_modes:
        raise ValueError(f"{N} atoms with spacing {P} do not fit in {coupling.n_modes} chain sites")
    if g < 0:
        raise ValueError("coupling g must be >= 0")
    sites = tuple(n * P - 1 for n in range(1, N + 1))
    if len(set(sites)) != N:
        raise ValueError("attachment sites overlap")
    weights = () if u is None else tuple(float(x) for x in u)
    if weights and len(weights) != N:
        raise ValueError("need one coupling weight per atom")
    return MappedSystem(coupling, int(N), int(P), float(g), float(omega0), float(J), bool(rwa), weights, sites)
