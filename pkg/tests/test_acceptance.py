"""Acceptance suite: every criterion at its stated tolerance and runtime budget.

Each test records one PASS/FAIL line (printed and repeated in the terminal summary).
"""
import math
import pathlib

import numpy as np
import pytest

from latticemap.cli import load_config, run
from latticemap.correlation import sample_kernel
from latticemap.dispersion import CosineBand, EffectiveMass, PowerLaw, SpectralDensity, density_of_states, mode_grid
from latticemap.dispersion import spectral_to_dispersion
from latticemap.dynamics import (
    SectorBasis, SectorState, build_hamiltonian_direct_k, build_hamiltonian_mapped, evolve, participation_ratio,
    steady_histogram, volterra_oracle,
)
from latticemap.mapping import attach_atoms, build_f_matrix
from latticemap.master_eq import AtomicSystem, basis_state, integrate_me
from latticemap.polariton import (
    detect_bound_states, diagonalize_single_exc, first_drop, polariton_report, split_region, subspace_weight,
    threshold_sensitivity,
)

from acceptance_log import criterion

CONFIGS = pathlib.Path(__file__).resolve().parents[1] / "configs"


def chain_system(M, N, g, w0, J=0.0, A=1.0, B=0.5):
    return attach_atoms(build_f_matrix(CosineBand(A=A, B=B), M), N, 1, g, w0, J)


def first_atom(sys):
    return SectorState.excite(SectorBasis(sys.N, sys.M), (1,))


def me_run(B, coupling, t_max, M=100, g=0.1, w0=0.3, h=0.01):
    times = np.round(np.arange(int(round(t_max / h)) + 1) * h, 12)
    ktimes = np.arange(2 * (len(times) - 1) + 1) * (h / 2)
    kernel = sample_kernel(CosineBand(A=1, B=B), g * g, ktimes, (-1, 0, 1), method="discrete", M=M)
    psi = basis_state(2, (1,))
    return times, integrate_me(kernel, AtomicSystem(2, w0, coupling=coupling), np.outer(psi, psi), times)


def test_criterion_01_mapping_exactness():
    with criterion(1, "mapped vs direct-k populations", 10) as check:
        sys = chain_system(64, 2, 0.1, 0.3)
        t = np.linspace(0, 100, 1001)
        a = evolve(build_hamiltonian_mapped(sys), first_atom(sys), t).atomic
        b = evolve(build_hamiltonian_direct_k(sys), first_atom(sys), t).atomic
        diff = float(np.max(np.abs(a - b)))
        check("max|Δ|", diff < 1e-10, f"{diff:.2e} < 1e-10")


def test_criterion_02_environment_spectrum():
    with criterion(2, "ring spectrum equals mode frequencies", 5) as check:
        families = {
            "cosine": CosineBand(A=1, B=0.5),
            "effective-mass": EffectiveMass(omega_c=0.5, B=0.5),
            "power-law": PowerLaw(A=0.5, p=0.5, k_max=2 * math.pi),
        }
        for name, disp in families.items():
            worst = 0.0
            for M in (4, 16, 50, 101):
                eig = np.sort(np.linalg.eigvalsh(build_f_matrix(disp, M).dense()))
                worst = max(worst, float(np.max(np.abs(eig - np.sort(disp.evaluate(mode_grid(disp, M)))))))
            check(name, worst < 1e-12, f"{worst:.2e} < 1e-12")


def test_criterion_03_master_equation_failure():
    with criterion(3, "chain vs second-order master equation", 60) as check:
        sys = chain_system(100, 2, 0.1, 0.3)
        traj = evolve(build_hamiltonian_mapped(sys), first_atom(sys), np.linspace(0, 100, 1001))
        lo = min(traj.atomic.min(), traj.photonic.min())
        hi = max(traj.atomic.max(), traj.photonic.max())
        check("(a) norm", traj.norm_drift < 1e-9, f"drift {traj.norm_drift:.1e} < 1e-9")
        check("(a) populations", lo >= 0 and hi <= 1 + 1e-9, f"range [{lo:.1e}, {hi:.6f}]")
        negs = {B: float(me_run(B, "dipole", 100)[1].negativity.min()) for B in (0.8, 1.0)}
        check("(b) negativity", min(negs.values()) < -1e-4,
              ", ".join(f"B={B}: {v:.2e}" for B, v in negs.items()) + " < -1e-4 for one B")
        times, me = me_run(0.5, "rwa", 5)
        chain = evolve(build_hamiltonian_mapped(sys), first_atom(sys), times).atomic
        diff = float(np.max(np.abs(chain - me.populations)))
        check("(c) short times", diff < 5e-3, f"max|Δ| {diff:.2e} < 5e-3 on [0, 5]")


def test_criterion_04_rabi_limit():
    with criterion(4, "single-mode Rabi limit", 1) as check:
        g = 0.1
        flat = build_f_matrix(CosineBand(A=1.0, B=0.0), 4)
        sys = attach_atoms(flat, 1, 1, g, 1.0)
        t = np.linspace(0, 100, 1001)
        pat = evolve(build_hamiltonian_mapped(sys), first_atom(sys), t).atomic[:, 0]
        err = float(np.max(np.abs(pat - np.cos(g * t) ** 2)))
        check("resonant", err < 1e-9, f"max|P - cos²(gt)| {err:.1e} < 1e-9")
        delta = 0.15
        sys = attach_atoms(flat, 1, 1, g, 1.0 + delta)
        t_min = math.pi / math.sqrt(delta**2 + 4 * g * g)
        pmin = evolve(build_hamiltonian_mapped(sys), first_atom(sys), [0.0, t_min]).atomic[1, 0]
        err = abs(pmin - delta**2 / (delta**2 + 4 * g * g))
        check("detuned minimum", err < 1e-9, f"|Δ| {err:.1e} < 1e-9")


def test_criterion_05_volterra_oracle():
    with criterion(5, "chain vs integro-differential oracle", 30) as check:
        t = np.linspace(0, 50, 1001)
        kernel = sample_kernel(CosineBand(A=1, B=0.5), 0.01, t, method="closed")
        oracle = np.abs(volterra_oracle(kernel, 0.3, t)) ** 2
        sys = chain_system(400, 1, 0.1, 0.3)
        chain = evolve(build_hamiltonian_mapped(sys), first_atom(sys), t).atomic[:, 0]
        diff = float(np.max(np.abs(chain - oracle)))
        check("max|Δ|c|²|", diff < 1e-3, f"{diff:.2e} < 1e-3")


CRITERION6_POINTS = {"gap": (0.1, 0.0), "mid-band": (1.0, 0.0), "split": (0.5, 0.25)}


def test_criterion_06_polariton_count_and_trapping():
    with criterion(6, "bound states and trapped population", 30) as check:
        reports = {}
        for label, (w0, J) in CRITERION6_POINTS.items():
            sys = chain_system(50, 2, 0.1, w0, J)
            reports[label] = (sys, polariton_report(build_hamiltonian_mapped(sys), sys, first_atom(sys)))
        sys, gap = reports["gap"]
        sens = threshold_sensitivity(gap.eigenpairs, sys, [1e-1, 1e-3, 1e-6, 1e-9, 1e-12])
        check("count", gap.count == 4,
              f"found {gap.count}, expected exactly 4; counts over thresholds 1e-1..1e-12: "
              + "/".join(str(c) for _, c in sens))
        check("P_pol gap", gap.P_pol >= 0.9, f"{gap.P_pol:.4f} >= 0.9")
        mid = reports["mid-band"][1].P_pol
        check("P_pol mid-band", mid < 1e-2, f"{mid:.2e} < 1e-2")
        split = reports["split"][1].P_pol
        check("P_pol split", abs(split - 0.5) <= 0.1, f"{split:.4f} = 0.5 ± 0.1")
        region = split_region(0.25, 1, 0.5)[0]
        check("split region", region == (0.25, 0.75), f"{region}")


def test_criterion_07_half_width():
    with criterion(7, "first drop of P_pol against J", 120) as check:
        J = np.round(np.arange(31) * 0.02, 12)
        p = []
        for j in J:
            sys = chain_system(50, 2, 0.1, 0.1, j)
            p.append(polariton_report(build_hamiltonian_mapped(sys), sys, first_atom(sys)).P_pol)
        drop = first_drop(J, p, tolerance=0.05)
        ok = drop is not None and abs(drop - 0.4) <= 0.02 + 1e-12
        check("J_drop", ok, f"{drop} within 0.40 ± 0.02")


def test_criterion_08_localization_contrast():
    with criterion(8, "mode participation ratio contrast", 60) as check:
        pr = {}
        for w0 in (0.1, 0.5):
            sys = chain_system(50, 2, 0.1, w0)
            traj = evolve(build_hamiltonian_mapped(sys), first_atom(sys), np.linspace(0, 400, 2001))
            pr[w0] = participation_ratio(steady_histogram(traj, (200, 400)).photonic)
        ratio = pr[0.5] / pr[0.1]
        check("ratio", ratio >= 3, f"PR {pr[0.5]:.2f} / {pr[0.1]:.2f} = {ratio:.2f} >= 3")


def test_criterion_09_spectral_round_trip():
    with criterion(9, "spectral density round trip", 1) as check:
        for s in (0.5, 1.0, 2.0):
            spec = SpectralDensity(alpha=0.1, s=s, omega_c=1.0)
            disp, g = spectral_to_dispersion(spec)
            w = np.linspace(0, spec.omega_c, 102)[1:-1]
            rel = float(np.max(np.abs(g * g * density_of_states(disp, w) / spec(w) - 1)))
            check(f"s={s:g}", rel < 1e-10, f"{rel:.1e} < 1e-10")


def test_criterion_10_invariant_subspace():
    with criterion(10, "bound-subspace overlap conservation", 30) as check:
        for label, (w0, J) in CRITERION6_POINTS.items():
            sys = chain_system(50, 2, 0.1, w0, J)
            H = build_hamiltonian_mapped(sys)
            bound = detect_bound_states(diagonalize_single_exc(H), sys)
            traj = evolve(H, first_atom(sys), np.linspace(0, 300, 301), keep_states=True)
            w = subspace_weight(bound, traj.states)
            drift = float(np.max(np.abs(w - w[0])))
            check(label, drift < 1e-9, f"drift {drift:.1e} < 1e-9")


CLI_CONFIGS = [
    "evolve_mapped", "evolve_direct", "me_rwa", "me_dipole_B08", "me_dipole_B10", "rabi", "volterra",
    "polariton_gap", "polariton_midband", "polariton_split", "polariton_map", "pt_map", "polariton_vs_j",
    "histogram_gap", "histogram_edge",
    "spectral_s0.5", "spectral_s1", "spectral_s2",
]


@pytest.mark.parametrize("threads", [(1, 8)], ids=["1-vs-8"])
def test_criterion_11_determinism(tmp_path, threads):
    with criterion(11, "CSV bytes across thread counts", 300) as check:
        mismatched, codes, n_files = [], [], 0
        for name in CLI_CONFIGS:
            cfg = load_config(CONFIGS / f"{name}.ini")
            outs = []
            for n in threads:
                out = tmp_path / f"{name}-{n}"
                codes.append(run(cfg, out, threads=n)[0])
                outs.append(out)
            csvs = sorted(p.name for p in outs[0].glob("*.csv"))
            n_files += len(csvs)
            mismatched += [f"{name}/{c}" for c in csvs if (outs[0] / c).read_bytes() != (outs[1] / c).read_bytes()]
        check("exit codes", set(codes) == {0}, f"{len(codes)} runs")
        check("byte identity", not mismatched, f"{n_files} CSVs compared, mismatched: {mismatched or 'none'}")
