import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from latticemap.correlation import CorrelationKernel, sample_kernel
from latticemap.dispersion import CosineBand
from latticemap.dynamics import SectorBasis, SectorState, build_hamiltonian_mapped, evolve
from latticemap.exceptions import AccuracyError
from latticemap.mapping import attach_atoms, build_f_matrix
from latticemap.master_eq import (
    AtomicSystem, basis_state, integrate_me, lowering_operators, me_coefficients, negativity_diagnostic,
)

BAND = CosineBand(A=1, B=0.5)


def flat_kernel(gamma, t_max, dt, seps=(0,)):
    t = np.arange(int(round(t_max / dt)) + 1) * dt
    return CorrelationKernel(gamma, BAND, t, tuple(seps), np.full((len(seps), len(t)), gamma, dtype=complex))


def me_kernel(g, times, N=2, M=100):
    h = times[1] - times[0]
    ktimes = np.arange(2 * (len(times) - 1) + 1) * (h / 2)
    seps = tuple(range(-(N - 1), N))
    return sample_kernel(BAND, g * g, ktimes, seps, method="discrete", M=M)


def dm(N, excited=(1,)):
    psi = basis_state(N, excited)
    return np.outer(psi, psi.conj())


def test_lowering_operators_and_basis():
    s1, s2 = lowering_operators(2)
    assert np.allclose(s1 @ s2, s2 @ s1)
    assert np.allclose(s1 @ s1, 0)
    psi = basis_state(2, (1,))
    assert np.allclose(s1 @ psi, basis_state(2, ()))
    assert np.allclose(s2 @ psi, 0)


def test_system_validation():
    with pytest.raises(ValueError):
        AtomicSystem(9, 0.3)
    with pytest.raises(ValueError):
        AtomicSystem(2, 0.3, coupling="xy")
    H = AtomicSystem(2, 0.3, J=0.1).hamiltonian
    np.testing.assert_allclose(np.linalg.eigvalsh(H), [0.0, 0.2, 0.4, 0.6], atol=1e-14)


def test_coefficients_vanish_at_zero():
    K = me_coefficients(flat_kernel(1.0, 1.0, 0.01, seps=(-1, 0, 1)), AtomicSystem(2, 0.3), 0.0)
    assert K.shape == (2, 2, 4, 4)
    assert np.all(K == 0)


def test_flat_kernel_coefficient():
    gamma, w0, t = 0.7, 0.3, 5.0
    K = me_coefficients(flat_kernel(gamma, 10.0, 1e-3), AtomicSystem(1, w0), t)
    # ground to excited element of the only coupling term
    expected = gamma * (np.exp(1j * w0 * t) - 1) / (1j * w0)
    assert abs(K[0, 0, 0, 1] - expected) < 1e-6


def test_coefficients_use_pair_separation():
    t = np.linspace(0, 2, 201)
    vals = np.stack([np.full_like(t, 1.0), np.full_like(t, 2.0), np.full_like(t, 3.0)]).astype(complex)
    ker = CorrelationKernel(1.0, BAND, t, (-2, 0, 2), vals)
    K = me_coefficients(ker, AtomicSystem(2, 0.0, P=2), 1.0)
    # ω0 = 0, J = 0: every phase is 1, so K_lj = α(sep) t on all elements
    assert K[0, 1, 0, 0] == pytest.approx(1.0)
    assert K[1, 0, 0, 0] == pytest.approx(3.0)
    assert K[0, 0, 0, 0] == pytest.approx(2.0)
    with pytest.raises(ValueError):
        me_coefficients(ker, AtomicSystem(2, 0.0, P=1), 1.0)


def test_coefficient_refusals():
    ker = flat_kernel(1.0, 1.0, 0.01)
    with pytest.raises(ValueError):
        me_coefficients(ker, AtomicSystem(1, 0.3), 2.0)
    with pytest.raises(ValueError):
        me_coefficients(ker, AtomicSystem(1, 0.3), 0.005)


def test_negativity_examples():
    assert negativity_diagnostic(np.diag([1.2, -0.2])) == pytest.approx(-0.2)
    assert negativity_diagnostic(np.eye(4) / 4) == 0.0
    assert negativity_diagnostic(np.diag([1.0, -1e-13])) == 0.0


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-1.0, 1.0), min_size=4, max_size=4), st.integers(0, 2**31))
def test_negativity_is_sum_of_negative_spectrum(eigs, seed):
    Q = scipy.linalg.qr(np.random.default_rng(seed).normal(size=(4, 4)))[0]
    rho = Q @ np.diag(eigs) @ Q.T
    expected = sum(e for e in eigs if e < -1e-9)
    assert negativity_diagnostic(rho) == pytest.approx(expected, abs=1e-9)
    assert negativity_diagnostic(rho) <= 0.0


def test_unitary_limit():
    sys = AtomicSystem(2, 0.3, J=0.1)
    times = np.linspace(0, 20, 2001)
    rho0 = dm(2, (1,))
    res = integrate_me(flat_kernel(0.0, 20, 0.005, seps=(-1, 0, 1)), sys, rho0, times)
    U = scipy.linalg.expm(-1j * sys.hamiltonian * 20)
    assert np.max(np.abs(res.rho[-1] - U @ rho0 @ U.conj().T)) < 1e-10
    purity = np.einsum("tij,tji->t", res.rho, res.rho).real
    assert np.max(np.abs(purity - 1)) < 1e-10
    assert res.trace_drift < 1e-12


def test_weak_coupling_matches_chain():
    g, w0, M = 0.02, 0.8, 100
    times = np.linspace(0, 100, 10001)
    me = integrate_me(me_kernel(g, times, M=M), AtomicSystem(2, w0), dm(2), times)
    sys = attach_atoms(build_f_matrix(BAND, M), 2, 1, g, w0)
    chain = evolve(build_hamiltonian_mapped(sys), SectorState.excite(SectorBasis(2, M), (1,)), times[::100])
    assert np.max(np.abs(me.populations[::100] - chain.atomic)) < 5e-3
    assert me.trace_drift < 1e-6
    assert me.max_symmetrization < 1e-8


def test_dipole_coupling_goes_negative():
    times = np.linspace(0, 100, 10001)
    band = CosineBand(A=1, B=0.8)
    ktimes = np.arange(2 * (len(times) - 1) + 1) * 0.005
    ker = sample_kernel(band, 0.01, ktimes, (-1, 0, 1), method="discrete", M=100)
    res = integrate_me(ker, AtomicSystem(2, 0.3, coupling="dipole"), dm(2), times)
    assert res.negativity.min() < -1e-4
    assert res.trace_drift < 1e-6


def test_rwa_coupling_stays_positive():
    times = np.linspace(0, 50, 5001)
    res = integrate_me(me_kernel(0.1, times), AtomicSystem(2, 0.3), dm(2), times)
    assert res.negativity.min() == 0.0


def test_integration_refusals():
    sys = AtomicSystem(1, 0.3)
    ker = flat_kernel(0.01, 10, 0.01)
    with pytest.raises(ValueError):
        integrate_me(ker, sys, dm(1), np.linspace(0, 10, 11))  # step too large
    with pytest.raises(ValueError):
        integrate_me(ker, sys, dm(1), np.array([0.0, 0.02, 0.05]))  # non-uniform
    with pytest.raises(ValueError):
        integrate_me(ker, sys, dm(1), np.linspace(0, 10, 1001))  # kernel step does not divide h/2
    with pytest.raises(ValueError):
        integrate_me(flat_kernel(0.01, 10, 0.005), sys, 2 * dm(1), np.linspace(0, 1, 101))
    with pytest.raises(ValueError):
        integrate_me(flat_kernel(0.01, 1, 0.005), sys, dm(1), np.linspace(0, 2, 201))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_raises():
    # a kernel that is not a correlation function of any bath breaks the structure
    t = np.arange(2001) * 0.005
    bad = CorrelationKernel(1.0, BAND, t, (0,), np.full((1, len(t)), 1e3 + 0j))
    times = np.linspace(0, 5, 501)
    with pytest.raises(AccuracyError):
        integrate_me(bad, AtomicSystem(1, 0.3), dm(1), times)


def test_csv(tmp_path):
    times = np.linspace(0, 1, 101)
    res = integrate_me(me_kernel(0.1, times), AtomicSystem(2, 0.3), dm(2), times)
    lines = res.write_csv(tmp_path / "me.csv").read_text().splitlines()
    assert lines[0] == "t,pop_1,pop_2,coh_12,trace,negativity"
    assert len(lines) == 102
    assert lines[1].split(",")[1] == "1.0000000000000000e+00"
    assert math.isclose(float(lines[-1].split(",")[4]), 1.0, abs_tol=1e-9)
