"""Named experiments. Each writes its CSV and SVG products into an output directory.

An experiment returns the file names it wrote plus any failed sweep points;
grid points are independent, run on a thread pool and merged by index.
"""
from __future__ import annotations

import csv
import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..correlation import sample_kernel
from ..dispersion import CosineBand, SpectralDensity, density_of_states, spectral_to_dispersion
from ..dynamics import (
    SectorBasis, SectorState, build_hamiltonian_direct_k, build_hamiltonian_mapped, evolve,
    participation_ratio, steady_histogram, total_population_average, volterra_oracle,
)
from ..exceptions import LatticeMapError
from ..mapping import attach_atoms, build_f_matrix
from ..master_eq import AtomicSystem, basis_state, integrate_me
from ..polariton import first_drop, polariton_report, subspace_weight
from .plots import emit_plot

NUMERIC_ERRORS = (LatticeMapError, ArithmeticError, ValueError, np.linalg.LinAlgError)


@dataclass
class Outcome:
    files: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)


def _num(x):
    return f"{float(x):.16e}"


def write_table(path, header, rows):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, (str, int)) and not isinstance(v, bool) else _num(v) for v in row])
    return Path(path).name


def time_grid(t_max, dt):
    n = max(1, int(round(t_max / dt)))
    return np.linspace(0.0, n * dt, n + 1)


def make_dispersion(p):
    return CosineBand(A=p["A"], B=p["B"], k0=p["k0h0"], h0=1.0)


def make_system(cfg):
    p = cfg.params
    chain = build_f_matrix(make_dispersion(p), p["M"], p["boundary"])
    return attach_atoms(chain, p["N"], p["P"], cfg.coupling_g, p["omega0"], p["J"])


def initial_state(cfg):
    p = cfg.params
    basis = SectorBasis(p["N"], p["M"], p["sector"])
    return SectorState.excite(basis, tuple(int(a) for a in p["psi0"]))


def run_grid(cfg, func, threads):
    """Evaluate ``func(point_config)`` over the sweep grid, merged by grid index."""
    grid = cfg.grid()

    def task(item):
        index, point = item
        try:
            return index, point, func(cfg.with_point(point)), None
        except NUMERIC_ERRORS as exc:
            return index, point, None, f"{type(exc).__name__}: {exc}"

    workers = max(1, min(int(threads), len(grid)))
    if workers == 1:
        results = [task(item) for item in grid]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(task, grid))
    results.sort(key=lambda r: r[0])
    failures = [{"index": i, "point": pt, "error": err} for i, pt, _, err in results if err is not None]
    return results, failures


def _trajectory(cfg):
    p = cfg.params
    sys = make_system(cfg)
    H = build_hamiltonian_direct_k(sys, p["sector"]) if p["basis"] == "direct" else build_hamiltonian_mapped(sys, p["sector"])
    return sys, evolve(H, initial_state(cfg), time_grid(p["t_max"], p["dt"]))


def _plot_atoms(out, name, traj, title):
    series = [(f"atom {j + 1}", traj.atomic[:, j]) for j in range(traj.atomic.shape[1])]
    return emit_plot("lines", {"x": traj.times, "series": series}, out / name,
                     {"title": title, "xlabel": "t", "ylabel": "population"}).name


def exp_evolve(cfg, out, threads):
    res = Outcome()
    p = cfg.params
    sys, traj = _trajectory(cfg)
    res.files.append(traj.write_csv(out / "trajectory.csv").name)
    chain = sys.coupling
    eig = np.sort(np.linalg.eigvalsh(chain.dense()))
    omega = np.sort(chain.mode_energies)
    res.files.append(write_table(out / "spectrum.csv", ["index", "omega_q", "eigenvalue", "abs_diff"],
                                 [(i, w, e, abs(w - e)) for i, (w, e) in enumerate(zip(omega, eig))]))
    res.files.append(_plot_atoms(out, "trajectory.svg", traj, f"{p['basis']} basis"))
    res.summary = {"norm_drift": traj.norm_drift, "spectrum_error": float(np.max(np.abs(omega - eig)))}
    return res


def exp_compare_me(cfg, out, threads):
    res = Outcome()
    p = cfg.params
    if p["sector"] != 1:
        raise LatticeMapError("compare-me runs in the single-excitation sector")
    g = cfg.coupling_g
    h = p["me_step"]
    stride = int(round(p["dt"] / h))
    if stride < 1 or abs(stride * h - p["dt"]) > 1e-9 * p["dt"]:
        raise ValueError("dt must be a multiple of me_step")
    times = time_grid(p["t_max"], h)
    sys = make_system(cfg)
    traj = evolve(build_hamiltonian_mapped(sys), initial_state(cfg), times)
    seps = sorted({(l - j) * p["P"] for l in range(p["N"]) for j in range(p["N"])})
    ktimes = np.arange(2 * (len(times) - 1) + 1) * (h / 2)
    kernel = sample_kernel(make_dispersion(p), g * g, ktimes, seps, method="discrete", M=p["M"])
    atoms = AtomicSystem(p["N"], p["omega0"], p["J"], p["P"], p["me_coupling"])
    psi = basis_state(p["N"], tuple(int(a) for a in p["psi0"]))
    me = integrate_me(kernel, atoms, np.outer(psi, psi.conj()), times)
    keep = slice(None, None, stride)
    N = p["N"]
    header = ["t"] + [f"chain_{j + 1}" for j in range(N)] + [f"me_{j + 1}" for j in range(N)] + ["negativity"]
    rows = [
        [t, *c, *m, n]
        for t, c, m, n in zip(times[keep], traj.atomic[keep], me.populations[keep], me.negativity[keep])
    ]
    res.files.append(write_table(out / "compare.csv", header, rows))
    series = [(f"chain {j + 1}", traj.atomic[keep, j]) for j in range(N)]
    series += [(f"ME {j + 1}", me.populations[keep, j]) for j in range(N)]
    res.files.append(emit_plot("lines", {"x": times[keep], "series": series}, out / "compare.svg",
                               {"title": "chain vs master equation", "xlabel": "t", "ylabel": "population"}).name)
    res.files.append(emit_plot("lines", {"x": times[keep], "series": [("negativity", me.negativity[keep])]},
                               out / "negativity.svg", {"xlabel": "t", "ylabel": "sum of negative eigenvalues"}).name)
    res.summary = {
        "max_difference": float(np.max(np.abs(traj.atomic - me.populations))),
        "min_negativity": float(me.negativity.min()),
        "trace_drift": me.trace_drift,
    }
    return res


def _pt_point(cfg):
    p = cfg.params
    sys = make_system(cfg)
    traj = evolve(build_hamiltonian_mapped(sys, p["sector"]), initial_state(cfg), time_grid(p["t_avg"], p["dt"]))
    return total_population_average(traj, p["t_avg"])


def _axes_table(cfg, results, names, values_of):
    rows = []
    for _, point, value, _ in results:
        vals = values_of(value)
        rows.append([point[ax.name] for ax in cfg.sweeps] + vals)
    return [ax.name for ax in cfg.sweeps] + names, rows


def _density_plot(cfg, results, pick, path, zlabel):
    x_ax, y_ax = cfg.sweeps
    z = np.array([pick(v) for _, _, v, _ in results], dtype=float).reshape(x_ax.points, y_ax.points)
    return emit_plot("density", {"x": x_ax.values, "y": y_ax.values, "z": z}, path,
                     {"xlabel": x_ax.name, "ylabel": y_ax.name, "zlabel": zlabel}).name


def exp_sweep_pt(cfg, out, threads):
    res = Outcome()
    results, res.failures = run_grid(cfg, _pt_point, threads)
    header, rows = _axes_table(cfg, results, ["P_T"], lambda v: [math.nan if v is None else v])
    res.files.append(write_table(out / "density.csv", header, rows))
    res.files.append(_density_plot(cfg, results, lambda v: math.nan if v is None else v, out / "density.svg", "P_T"))
    return res


def _report(cfg):
    sys = make_system(cfg)
    H = build_hamiltonian_mapped(sys)
    return sys, H, polariton_report(H, sys, initial_state(cfg), cfg.params["threshold"])


def _pol_point(cfg):
    _, _, rep = _report(cfg)
    return rep.P_pol, rep.count


def exp_polariton_map(cfg, out, threads):
    res = Outcome()
    p = cfg.params
    if p["sector"] != 1:
        raise LatticeMapError("bound states are classified in the single-excitation sector")
    if not cfg.sweeps:
        sys, H, rep = _report(cfg)
        res.files.append(rep.write_csv(out / "bound_states.csv").name)
        traj = evolve(H, initial_state(cfg), time_grid(p["t_max"], p["dt"]), keep_states=True)
        weight = subspace_weight(rep.bound, traj.states)
        res.files.append(write_table(out / "subspace.csv", ["t", "bound_weight", "atomic_total"],
                                     zip(traj.times, weight, traj.total_atomic)))
        res.files.append(emit_plot("lines", {"x": traj.times, "series": [
            ("bound-subspace weight", weight), ("atomic population", traj.total_atomic)]},
            out / "subspace.svg", {"xlabel": "t", "ylabel": "population", "title": rep.summary()}).name)
        res.summary = {
            "bound_states": rep.count, "P_pol": rep.P_pol,
            "subspace_drift": float(weight.max() - weight.min()) if weight.size else 0.0,
        }
        return res
    results, res.failures = run_grid(cfg, _pol_point, threads)
    nan2 = (math.nan, math.nan)
    header, rows = _axes_table(cfg, results, ["P_pol", "bound_states"],
                               lambda v: [(v or nan2)[0], (v or nan2)[1]])
    res.files.append(write_table(out / "polariton_map.csv", header, rows))
    pick = lambda v: math.nan if v is None else v[0]  # noqa: E731
    if len(cfg.sweeps) == 2:
        res.files.append(_density_plot(cfg, results, pick, out / "polariton_map.svg", "P_pol"))
    else:
        ax = cfg.sweeps[0]
        res.files.append(emit_plot("lines", {"x": ax.values, "series": [("P_pol", [pick(r[2]) for r in results])]},
                                   out / "polariton_map.svg", {"xlabel": ax.name, "ylabel": "P_pol"}).name)
    return res


def exp_polariton_vs_j(cfg, out, threads):
    res = Outcome()
    J_axis = cfg.sweeps[0]
    rows, series, drops = [], [], []
    for w0 in cfg.params["omega0_values"]:
        sub = dataclasses.replace(cfg, params={**cfg.params, "omega0": float(w0)})
        results, failures = run_grid(sub, _pol_point, threads)
        res.failures += [dict(f, point={**f["point"], "omega0": float(w0)}) for f in failures]
        p_vals = [math.nan if v is None else v[0] for _, _, v, _ in results]
        for (_, point, v, _), pv in zip(results, p_vals):
            rows.append([w0, point["J"], pv, math.nan if v is None else v[1]])
        series.append((f"omega0={w0:g}", p_vals))
        drop = first_drop(J_axis.values, p_vals, cfg.params["drop_tolerance"])
        drops.append([w0, math.nan if drop is None else drop, 0.5 * p_vals[0] + cfg.params["drop_tolerance"]])
    res.files.append(write_table(out / "curves.csv", ["omega0", "J", "P_pol", "bound_states"], rows))
    res.files.append(write_table(out / "drop.csv", ["omega0", "J_drop", "level"], drops))
    res.files.append(emit_plot("lines", {"x": J_axis.values, "series": series}, out / "curves.svg",
                               {"xlabel": "J", "ylabel": "P_pol"}).name)
    return res


def exp_histogram(cfg, out, threads):
    res = Outcome()
    p = cfg.params
    window = p["window"] or (0.5 * p["t_max"], p["t_max"])
    _, traj = _trajectory(cfg)
    if window[1] > traj.times[-1] + 1e-9:
        raise ValueError(f"window end {window[1]} beyond t_max {p['t_max']}")
    hist = steady_histogram(traj, window)
    res.files.append(hist.write_csv(out / "histogram.csv").name)
    pr_modes = participation_ratio(hist.photonic)
    pr_atoms = participation_ratio(hist.atomic)
    res.files.append(write_table(out / "participation.csv", ["species", "participation_ratio"],
                                 [("atom", pr_atoms), ("mode", pr_modes)]))
    sites = np.arange(1, max(p["N"], p["M"]) + 1)
    atoms = np.zeros(len(sites))
    atoms[: p["N"]] = hist.atomic
    modes = np.zeros(len(sites))
    modes[: p["M"]] = hist.photonic
    res.files.append(emit_plot("histogram", {"sites": sites, "series": [("atoms", atoms), ("modes", modes)]},
                               out / "histogram.svg", {"xlabel": "site", "ylabel": "time-averaged population"}).name)
    res.summary = {"participation_modes": pr_modes, "participation_atoms": pr_atoms}
    return res


def exp_spectral_map(cfg, out, threads):
    res = Outcome()
    p = cfg.params
    spec = SpectralDensity(p["alpha"], p["s"], p["omega_c"])
    mapping = spectral_to_dispersion(spec)
    disp, g = mapping
    omegas = np.linspace(0.0, p["omega_c"], p["points"] + 2)[1:-1]
    target = spec(omegas)
    got = g * g * np.array([density_of_states(disp, w) for w in omegas])
    rel = np.abs(got - target) / np.abs(target)
    res.files.append(write_table(out / "spectral_map.csv", ["omega", "J_target", "g2_rho", "rel_err"],
                                 zip(omegas, target, got, rel)))
    res.files.append(emit_plot("lines", {"x": omegas, "series": [("J(omega)", target), ("g^2 rho(omega)", got)]},
                               out / "spectral_map.svg", {"xlabel": "omega", "ylabel": "spectral density"}).name)
    res.summary = {"max_rel_err": float(rel.max())}
    return res


def exp_oracle_volterra(cfg, out, threads):
    res = Outcome()
    p = cfg.params
    if p["N"] != 1:
        raise ValueError("oracle-volterra is defined for a single atom (N = 1)")
    g = cfg.coupling_g
    times = time_grid(p["t_max"], p["dt"])
    sys = make_system(cfg)
    traj = evolve(build_hamiltonian_mapped(sys), initial_state(cfg), times)
    kernel = sample_kernel(make_dispersion(p), g * g, times, (0,), method="closed")
    c = volterra_oracle(kernel, p["omega0"], times)
    vol = np.abs(c) ** 2
    chain = traj.atomic[:, 0]
    res.files.append(write_table(out / "volterra.csv", ["t", "chain", "volterra", "abs_diff"],
                                 zip(times, chain, vol, np.abs(chain - vol))))
    res.files.append(emit_plot("lines", {"x": times, "series": [("chain", chain), ("Volterra", vol)]},
                               out / "volterra.svg", {"xlabel": "t", "ylabel": "|c(t)|^2"}).name)
    res.summary = {"max_difference": float(np.max(np.abs(chain - vol)))}
    return res


EXPERIMENT_FUNCS = {
    "evolve": exp_evolve,
    "compare-me": exp_compare_me,
    "sweep-PT": exp_sweep_pt,
    "polariton-map": exp_polariton_map,
    "polariton-vs-J": exp_polariton_vs_j,
    "histogram": exp_histogram,
    "spectral-map": exp_spectral_map,
    "oracle-volterra": exp_oracle_volterra,
}
