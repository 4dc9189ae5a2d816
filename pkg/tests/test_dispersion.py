import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latticemap.dispersion import (
    CosineBand, EffectiveMass, PowerLaw, SpectralDensity, Tabulated, density_of_states, evaluate,
    from_dict, group_velocity, mode_grid, spectral_to_dispersion, to_dict,
)
from latticemap.exceptions import BandEdgeError, DomainError, NoStateError

BAND = CosineBand(A=1, B=0.5, k0=math.pi, h0=1)


def test_cosine_band_values():
    assert evaluate(BAND, math.pi) == pytest.approx(1.5, abs=1e-15)
    assert evaluate(BAND, 0.0) == pytest.approx(0.5, abs=1e-15)


def test_power_law_value():
    assert evaluate(PowerLaw(A=0.5, p=0.5), 4.0) == pytest.approx(1.0, abs=1e-15)


def test_domain_errors_name_family_and_bounds():
    with pytest.raises(DomainError, match=r"CosineBand.*\[") as err:
        evaluate(BAND, 4.0)
    assert "3.14159" in str(err.value)
    with pytest.raises(DomainError, match="PowerLaw"):
        evaluate(PowerLaw(0.5, 0.5), -1.0)
    tab = Tabulated((0.0, 1.0, 2.0), (0.0, 1.0, 3.0))
    with pytest.raises(DomainError, match="Tabulated"):
        evaluate(tab, 2.5)


def test_cosine_range_over_zone():
    k = np.linspace(-math.pi, math.pi, 10_001)
    w = evaluate(BAND, k)
    assert abs(w.min() - 0.5) < 1e-12
    assert abs(w.max() - 1.5) < 1e-12


def test_dos_band_centre():
    assert density_of_states(BAND, 1.0) == pytest.approx(2.0, rel=1e-12)


def test_dos_power_law():
    # dω/dk = 1/4 k^(-1/2) at k = 4 is 1/8, so the density of states is 8
    assert density_of_states(PowerLaw(A=0.5, p=0.5), 1.0) == pytest.approx(8.0, rel=1e-12)


def test_dos_band_edge_and_gap():
    with pytest.raises(BandEdgeError):
        density_of_states(BAND, 1.5)
    with pytest.raises(NoStateError):
        density_of_states(BAND, 0.2)
    with pytest.raises(NoStateError):
        density_of_states(PowerLaw(0.5, 0.5, k_max=4.0), 1.5)


def test_cosine_inverse_on_principal_branch():
    w = np.linspace(0.51, 1.49, 50)
    k = BAND.k_of_omega(w)
    assert np.all((k >= 0) & (k <= math.pi))
    np.testing.assert_allclose(evaluate(BAND, k), w, atol=1e-13)


@pytest.mark.parametrize(
    "s, p, scale",
    [(1.0, 0.5, 0.5), (0.5, 2 / 3, 4 / 9), (2.0, 1 / 3, math.sqrt(1 / 3))],
)
def test_spectral_map_constants(s, p, scale):
    mapping = spectral_to_dispersion(SpectralDensity(alpha=0.2, s=s, omega_c=1.0))
    assert mapping.dispersion.p == pytest.approx(p, rel=1e-14)
    assert mapping.scale == pytest.approx(scale, rel=1e-14)
    assert mapping.coupling == pytest.approx(math.sqrt(0.2), rel=1e-14)


def test_spectral_map_constant_scales_with_cutoff():
    wc = 2.5
    assert spectral_to_dispersion(SpectralDensity(1.0, 0.5, wc)).scale == pytest.approx(4 * wc / 9, rel=1e-13)
    assert spectral_to_dispersion(SpectralDensity(1.0, 2.0, wc)).scale == pytest.approx(math.sqrt(1 / (3 * wc)), rel=1e-13)


@pytest.mark.parametrize("s", [0.5, 1.0, 1.5, 2.0])
def test_spectral_round_trip(s):
    spec = SpectralDensity(alpha=0.3, s=s, omega_c=1.7)
    disp, g = spectral_to_dispersion(spec)
    w = np.linspace(0, spec.omega_c, 102)[1:-1]
    got = g**2 * density_of_states(disp, w)
    np.testing.assert_allclose(got, spec(w), rtol=1e-10)
    assert disp.band[1] == pytest.approx(spec.omega_c, rel=1e-12)


def test_spectral_density_cutoff():
    spec = SpectralDensity(0.1, 1.0, 1.0)
    assert spec(1.5) == 0.0
    assert spec(0.5) == pytest.approx(0.05)


FAMILIES = [
    BAND,
    CosineBand(A=2.0, B=0.3, k0=0.0, h0=2.0),
    EffectiveMass(omega_c=0.5, B=0.5),
    PowerLaw(A=0.7, p=1.3, k_max=5.0),
]


@pytest.mark.parametrize("disp", FAMILIES, ids=lambda d: type(d).__name__)
@settings(max_examples=20, deadline=None)
@given(u=st.floats(0.02, 0.98))
def test_derivative_matches_finite_difference(disp, u):
    lo, hi = disp.domain
    k = lo + u * (hi - lo)
    h = 1e-5 * (hi - lo)
    fd = (evaluate(disp, k + h) - evaluate(disp, k - h)) / (2 * h)
    exact = group_velocity(disp, k)
    assert abs(fd - exact) <= 1e-8 * max(abs(exact), 1e-3 * (disp.band[1] - disp.band[0]))


def test_tabulated_monotone_and_inverse():
    k = np.linspace(0, 2, 9)
    tab = Tabulated(tuple(k), tuple(k**2 + 0.1))
    kk = np.linspace(0, 2, 200)
    assert np.all(np.diff(evaluate(tab, kk)) >= 0)
    assert tab.k_of_omega(1.0) == pytest.approx(math.sqrt(0.9), abs=2e-3)
    assert evaluate(tab, tab.k_of_omega(1.0)) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        Tabulated((0.0, 0.0, 1.0), (1.0, 2.0, 3.0))


@pytest.mark.parametrize("disp", FAMILIES + [Tabulated((0.0, 1.0), (1.0, 2.0))], ids=lambda d: type(d).__name__)
def test_serialisation_round_trip(disp):
    assert from_dict(to_dict(disp)) == disp


def test_from_dict_spectral_family():
    disp = from_dict({"family": "spectral", "alpha": 0.1, "s": 1.0, "omega_c": 1.0})
    assert isinstance(disp, PowerLaw) and disp.p == pytest.approx(0.5)
    with pytest.raises(ValueError):
        from_dict({"family": "unknown"})


def test_invalid_parameters():
    with pytest.raises(ValueError):
        CosineBand(B=-1)
    with pytest.raises(ValueError):
        PowerLaw(A=0, p=1)
    with pytest.raises(ValueError):
        SpectralDensity(1.0, 0.0, 1.0)


def test_mode_grid_inside_zone():
    for disp in FAMILIES:
        k = mode_grid(disp, 37)
        lo, hi = disp.domain
        assert np.all(k >= lo) and np.all(k <= hi)
        assert len(np.unique(np.round(k, 12))) == 37
