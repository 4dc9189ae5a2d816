"""Batch runner: ``latticemap <experiment> --config FILE [--out DIR] [--threads N] [--validate-only]``.

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

from .. import __version__
from ..exceptions import ConfigurationError
from .config import EXPERIMENTS, ExperimentConfig, load_config, parse_config
from .experiments import EXPERIMENT_FUNCS, NUMERIC_ERRORS, Outcome
from .plots import emit_plot

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

__all__ = ["main", "run", "load_config", "parse_config", "ExperimentConfig", "emit_plot"]


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def run(cfg: ExperimentConfig, out, threads=1):
    """Execute one experiment; returns (exit code, Outcome). Writes manifest.json."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    error = None
    try:
        outcome = EXPERIMENT_FUNCS[cfg.name](cfg, out, threads)
    except NUMERIC_ERRORS as exc:
        outcome = Outcome()
        error = f"{type(exc).__name__}: {exc}"
    wall = time.perf_counter() - start
    if outcome.failures:
        (out / "failures.json").write_text(json.dumps(outcome.failures, indent=2, sort_keys=True) + "\n")
        outcome.files.append("failures.json")
    manifest = {
        "experiment": cfg.name,
        "config": cfg.echo(),
        "version": __version__,
        "wall_time_s": wall,
        "threads": threads,
        "files": {name: _sha256(out / name) for name in sorted(outcome.files)},
        "summary": outcome.summary,
        "error": error,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=float) + "\n")
    code = EXIT_NUMERIC if (error or outcome.failures) else EXIT_OK
    return code, outcome


def build_parser():
    parser = argparse.ArgumentParser(prog="latticemap", description=__doc__.splitlines()[0])
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", required=True, type=Path, help="experiment configuration file")
    parser.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    parser.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="sweep worker threads")
    parser.add_argument("--validate-only", action="store_true", help="check the configuration and exit")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = load_config(args.config)
        if cfg.name != args.experiment:
            raise ConfigurationError(f"config describes {cfg.name!r} but {args.experiment!r} was requested")
        if args.threads < 1:
            raise ConfigurationError("--threads must be >= 1")
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.validate_only:
        print(f"{args.config}: valid {cfg.name} configuration")
        return EXIT_OK
    code, outcome = run(cfg, args.out, args.threads)
    for f in outcome.failures:
        print(f"grid point {f['index']} {f['point']}: {f['error']}", file=sys.stderr)
    if code == EXIT_NUMERIC and not outcome.failures:
        print(f"error: {json.loads((args.out / 'manifest.json').read_text())['error']}", file=sys.stderr)
    return code
