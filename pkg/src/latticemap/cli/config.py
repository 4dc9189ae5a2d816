"""Experiment configuration files.

One experiment per INI-style file::

    [experiment]
    name = sweep-PT
    A = 1
    g = 0.1
    t_avg = 300

    [sweep omega0]
    min = 0
    max = 1.6
    points = 17

Keys are case-sensitive. Every problem found is reported at once.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..exceptions import ConfigurationError

EXPERIMENTS = (
    "evolve", "compare-me", "sweep-PT", "polariton-map",
    "polariton-vs-J", "histogram", "spectral-map", "oracle-volterra",
)
SWEEPABLE = {"sweep-PT": 2, "polariton-map": 2, "polariton-vs-J": 1}
SWEEP_PARAMS = ("A", "B", "g", "omega0", "J")

_FLOAT, _INT, _STR, _LIST = "float", "int", "str", "list"

# name: (kind, default). Only physical/numerical knobs that some experiment reads.
PARAMETERS = {
    "A": (_FLOAT, 1.0),
    "B": (_FLOAT, 0.5),
    "k0h0": (_FLOAT, math.pi),
    "g": (_FLOAT, 0.1),
    "gamma": (_FLOAT, None),
    "omega0": (_FLOAT, 0.3),
    "J": (_FLOAT, 0.0),
    "M": (_INT, 100),
    "N": (_INT, 2),
    "P": (_INT, 1),
    "boundary": (_STR, "ring"),
    "sector": (_INT, 1),
    "psi0": (_LIST, (1.0,)),
    "basis": (_STR, "mapped"),
    "t_max": (_FLOAT, 100.0),
    "dt": (_FLOAT, 0.1),
    "t_avg": (_FLOAT, 300.0),
    "window": (_LIST, None),
    "nodes": (_INT, None),
    "threshold": (_FLOAT, 1e-3),
    "drop_tolerance": (_FLOAT, 0.05),
    "omega0_values": (_LIST, (0.1, 0.2, 0.3, 0.4, 0.5)),
    "me_coupling": (_STR, "rwa"),
    "me_step": (_FLOAT, 0.01),
    "s": (_FLOAT, 1.0),
    "alpha": (_FLOAT, 0.1),
    "omega_c": (_FLOAT, 1.0),
    "points": (_INT, 100),
    "seed": (_INT, 0),
}
CHOICES = {
    "boundary": ("ring", "open"),
    "basis": ("mapped", "direct"),
    "me_coupling": ("rwa", "dipole"),
    "sector": (1, 2),
}


@dataclass(frozen=True)
class SweepAxis:
    name: str
    start: float
    stop: float
    points: int

    @property
    def values(self):
        # rounded so that grids such as 0, 0.02, ... print and compare exactly
        return np.round(np.linspace(self.start, self.stop, self.points), 12)


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    params: dict
    sweeps: tuple = ()
    source: str | None = None
    explicit: frozenset = field(default_factory=frozenset)

    def __getitem__(self, key):
        return self.params[key]

    @property
    def coupling_g(self):
        """g, derived from γ = g^2 when γ is given."""
        gamma = self.params.get("gamma")
        return math.sqrt(gamma) if gamma is not None else self.params["g"]

    def grid(self):
        """Sweep points in row-major order as (index, {param: value})."""
        if not self.sweeps:
            return [(0, {})]
        axes = [ax.values for ax in self.sweeps]
        mesh = np.meshgrid(*axes, indexing="ij")
        flat = [m.ravel() for m in mesh]
        return [(i, {ax.name: float(f[i]) for ax, f in zip(self.sweeps, flat)}) for i in range(flat[0].size)]

    def with_point(self, point):
        params = dict(self.params)
        params.update(point)
        if "g" in point:
            params["gamma"] = None
        return ExperimentConfig(self.name, params, (), self.source, self.explicit)

    def echo(self):
        """Resolved configuration as plain JSON-ready data."""
        def plain(v):
            if isinstance(v, tuple):
                return [plain(x) for x in v]
            return v
        return {
            "name": self.name,
            "parameters": {k: plain(v) for k, v in sorted(self.params.items())},
            "sweeps": [
                {"parameter": ax.name, "min": ax.start, "max": ax.stop, "points": ax.points}
                for ax in self.sweeps
            ],
        }


def _convert(kind, raw):
    if kind == _FLOAT:
        v = float(raw)
        if not math.isfinite(v):
            raise ValueError("must be finite")
        return v
    if kind == _INT:
        f = float(raw)
        if f != int(f):
            raise ValueError("must be an integer")
        return int(f)
    if kind == _LIST:
        return tuple(float(x) for x in raw.replace(",", " ").split())
    return raw.strip()


def _check_ranges(p, errors):
    def need(cond, key, msg):
        if not cond:
            errors.append(f"{key}: {msg}")

    for key, opts in CHOICES.items():
        need(p[key] in opts, key, f"must be one of {', '.join(map(str, opts))}")
    need(p["B"] >= 0, "B", "must be >= 0")
    need(p["g"] >= 0, "g", "must be >= 0")
    if p["gamma"] is not None:
        need(p["gamma"] >= 0, "gamma", "must be >= 0")
    need(p["M"] >= 4, "M", "must be >= 4")
    need(p["N"] >= 1, "N", "must be >= 1")
    need(p["P"] >= 1, "P", "must be >= 1")
    need(p["N"] * p["P"] <= p["M"], "N", "N*P must not exceed M")
    need(p["t_max"] > 0, "t_max", "must be > 0")
    need(p["t_avg"] > 0, "t_avg", "must be > 0")
    need(p["dt"] > 0, "dt", "must be > 0")
    need(p["me_step"] > 0, "me_step", "must be > 0")
    need(p["threshold"] > 0, "threshold", "must be > 0")
    need(p["points"] >= 2, "points", "must be >= 2")
    need(p["omega_c"] > 0, "omega_c", "must be > 0")
    need(p["s"] > 0, "s", "must be > 0")
    need(p["alpha"] > 0, "alpha", "must be > 0")
    atoms = p["psi0"]
    need(len(atoms) >= 1 and all(a == int(a) and 1 <= a <= p["N"] for a in atoms) and len(set(atoms)) == len(atoms),
         "psi0", f"must list distinct excited atoms between 1 and N={p['N']}")
    need(len(atoms) == p["sector"], "psi0", f"must excite exactly sector={p['sector']} atom(s)")
    if p["window"] is not None:
        w = p["window"]
        need(len(w) == 2 and w[1] > w[0] >= 0, "window", "must be two times 0 <= t_a < t_b")
    need(len(p["omega0_values"]) >= 1, "omega0_values", "must hold at least one value")


def parse_config(text, source=None) -> ExperimentConfig:
    """Parse and validate a configuration; raises ConfigurationError listing every problem."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    errors = []
    try:
        parser.read_string(text, source=source or "<config>")
    except configparser.Error as exc:
        raise ConfigurationError(f"unreadable config: {exc}") from exc

    if not parser.has_section("experiment"):
        raise ConfigurationError("missing [experiment] section")
    section = dict(parser["experiment"])
    name = section.pop("name", None)
    if name is None:
        errors.append("name: missing experiment name")
    elif name not in EXPERIMENTS:
        errors.append(f"name: unknown experiment {name!r} (choose from {', '.join(EXPERIMENTS)})")

    params = {k: default for k, (kind, default) in PARAMETERS.items()}
    unreadable = False
    for key, raw in section.items():
        if key not in PARAMETERS:
            errors.append(f"{key}: unknown parameter")
            continue
        try:
            params[key] = _convert(PARAMETERS[key][0], raw)
        except ValueError as exc:
            errors.append(f"{key}: cannot read {raw!r} ({exc})")
            unreadable = True
    if not unreadable:
        _check_ranges(params, errors)

    sweeps = []
    for sec in parser.sections():
        if sec == "experiment":
            continue
        head, _, param = sec.partition(" ")
        if head != "sweep" or not param:
            errors.append(f"[{sec}]: unknown section (expected [sweep <parameter>])")
            continue
        if param not in SWEEP_PARAMS:
            errors.append(f"[{sec}]: parameter {param!r} cannot be swept (choose from {', '.join(SWEEP_PARAMS)})")
            continue
        body = dict(parser[sec])
        try:
            lo, hi, n = float(body["min"]), float(body["max"]), _convert(_INT, body["points"])
        except (KeyError, ValueError) as exc:
            errors.append(f"[{sec}]: needs numeric min, max and integer points ({exc})")
            continue
        if n < 1:
            errors.append(f"[{sec}]: points must be >= 1")
        elif n == 1 and lo != hi:
            errors.append(f"[{sec}]: a single point needs min == max")
        elif hi < lo:
            errors.append(f"[{sec}]: max must be >= min")
        else:
            sweeps.append(SweepAxis(param, lo, hi, n))
    if name in EXPERIMENTS:
        allowed = SWEEPABLE.get(name, 0)
        if len(sweeps) > allowed:
            errors.append(f"sweeps: {name} accepts at most {allowed} sweep axes, got {len(sweeps)}")
        if name == "sweep-PT" and len(sweeps) != 2:
            errors.append("sweeps: sweep-PT needs exactly two sweep axes")
        if name == "polariton-vs-J" and [ax.name for ax in sweeps] != ["J"]:
            errors.append("sweeps: polariton-vs-J needs one [sweep J] axis")
        if len({ax.name for ax in sweeps}) != len(sweeps):
            errors.append("sweeps: an axis is declared twice")
    if errors:
        raise ConfigurationError("invalid configuration:\n  " + "\n  ".join(errors))
    return ExperimentConfig(name, params, tuple(sweeps), source, frozenset(section))


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, source=str(path))
