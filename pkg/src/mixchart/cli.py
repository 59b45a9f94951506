"""Command-line front end: ``mixchart {moments,simulate,chart,optimize}``.

Exit codes: 0 success, 2 configuration error, 3 numerical tolerance
exceeded, 4 solver did not converge.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import platform
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .chart import ChartParams, build_model
from .config import RunConfig, load_config
from .distributions import MixtureShiftSpec
from .errors import (
    ConfigError,
    ConvergenceError,
    GridTooSmallError,
    ParameterError,
    ToleranceError,
    TruncationError,
    UnsupportedInputError,
)
from .moments import IntervalCostInput, c2, c2_series_oracle
from .optimize import SearchSpace, grid_search
from .oracle import estimate_c2, simulate_chart_run

log = logging.getLogger("mixchart")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TOLERANCE = 3
EXIT_CONVERGENCE = 4

MANIFEST_VERSION = 1


def _manifest(command, cfg: RunConfig, args):
    return {
        "manifest_version": MANIFEST_VERSION,
        "command": command,
        "config": cfg.raw,
        "seed": cfg.seed,
        "format": args.format,
        "versions": {
            "mixchart": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }


def _write_json(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n", encoding="utf-8")


def _write_table(out: Path, stem: str, header, rows, fmt: str):
    """Emit ``rows`` as RFC 4180 CSV or as a JSON list of records."""
    if fmt == "json":
        path = out / f"{stem}.json"
        _write_json(path, [dict(zip(header, row)) for row in rows])
        return path
    path = out / f"{stem}.csv"
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return path


def _interval(cfg: RunConfig) -> IntervalCostInput:
    if cfg.interval_h is None:
        raise ConfigError("interval/h is required (or give a scalar chart/h)")
    try:
        return IntervalCostInput(h=cfg.interval_h, j=cfg.interval_j, s=cfg.process.s, shift=cfg.shift)
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc


def _need_mixture(cfg: RunConfig, what: str) -> MixtureShiftSpec:
    if not isinstance(cfg.shift, MixtureShiftSpec):
        raise ConfigError(f"shift/kind: {what} needs a mixture shift description")
    return cfg.shift


def cmd_moments(cfg: RunConfig, args, out: Path):
    inp = _interval(cfg)
    try:
        closed = c2(inp.h, inp.j, inp.s, inp.shift)
    except UnsupportedInputError as exc:
        raise ConfigError(f"interval/j: {exc}") from exc
    num = cfg.numerics
    oracle, trunc_err, quad_err = c2_series_oracle(inp, k_max=num["k_max"], n_quad=num["n_quad"], return_error=True)
    scale = abs(oracle) if oracle != 0.0 else 1.0
    rel = abs(closed.integral - oracle) / scale
    report = {
        "h": inp.h,
        "j": inp.j,
        "s": inp.s,
        "integral": closed.integral,
        "per_unit_time": closed.per_unit_time,
        "series_oracle": oracle,
        "oracle_truncation_error": trunc_err,
        "oracle_quadrature_error": quad_err,
        "relative_difference": rel,
        "rtol": num["rtol"],
        "pass": rel <= num["rtol"],
    }
    _write_json(out / "moments.json", report)
    if not report["pass"]:
        raise ToleranceError(f"closed form and series oracle differ by {rel:.3e} > {num['rtol']:.1e}")
    return report


def cmd_simulate(cfg: RunConfig, args, out: Path):
    spec = _need_mixture(cfg, "simulation")
    inp = _interval(cfg)
    num = cfg.numerics
    est, samples = estimate_c2(inp.j, inp.h, inp.s, spec, n_paths=num["n_paths"], seed=cfg.seed,
                               batch_size=num["batch_size"], workers=args.threads, return_samples=True)
    closed = c2(inp.h, inp.j, inp.s, spec).integral
    report = {
        "c2": {
            "mean": est.mean,
            "std_error": est.std_error,
            "n_paths": est.n_paths,
            "seed": est.seed,
            "closed_form": closed,
            "z_score": est.z_score(closed),
        }
    }
    if args.per_path:
        _write_table(out, "per_path", ["path", "square_integral"],
                     [(i, float(v)) for i, v in enumerate(samples)], args.format)
    if args.chart:
        if not isinstance(cfg.chart, ChartParams):
            raise ConfigError("chart: --chart needs scalar chart/h and chart/K")
        run = simulate_chart_run(cfg.chart, cfg.process, spec, cfg.costs, n_intervals=num["n_intervals"],
                                 seed=cfg.seed, n_chains=num["n_chains"], burn_in=num["burn_in"],
                                 workers=args.threads)
        report["chart"] = {
            "mean": run.estimate.mean,
            "std_error": run.estimate.std_error,
            "n_intervals": run.estimate.n_paths,
            "seed": run.estimate.seed,
        }
    _write_json(out / "simulate.json", report)
    return report


def cmd_chart(cfg: RunConfig, args, out: Path):
    spec = _need_mixture(cfg, "the chart model")
    if not isinstance(cfg.chart, ChartParams):
        raise ConfigError("chart: the chart command needs scalar chart/h and chart/K")
    num = cfg.numerics
    model = build_model(cfg.chart, cfg.process, spec, cfg.costs, num["grid_step"], num["v_max"],
                        k_max=num["k_max"], tol=num["stationary_tol"], scheme=num["scheme"])
    rows = [
        (i, level, int(alarm), float(p), float(c))
        for i, ((level, alarm), p, c) in enumerate(zip(model.state_labels(), model.stationary, model.cost_vector))
    ]
    _write_table(out, "states", ["state", "level", "alarm", "probability", "cost"], rows, args.format)
    report = {
        "h": cfg.chart.h,
        "K": cfg.chart.K,
        "expected_cost": model.expected_cost,
        "stationary_residual": model.residual,
        "n_states": len(rows),
    }
    _write_json(out / "summary.json", report)
    return report


def cmd_optimize(cfg: RunConfig, args, out: Path):
    spec = _need_mixture(cfg, "optimisation")
    space = cfg.chart
    if isinstance(space, ChartParams):
        space = SearchSpace(h_values=(space.h,), K_values=(space.K,))
    if space is None:
        raise ConfigError("chart: the optimize command needs chart/h and chart/K ranges")
    num = cfg.numerics
    opt = grid_search(space, cfg.process, spec, cfg.costs, num["grid_step"], num["v_max"], k_max=num["k_max"],
                      scheme=num["scheme"], workers=args.threads)
    rows = [(p.h, p.K, p.cost, p.error or "") for p in opt.cost_surface]
    _write_table(out, "surface", ["h", "K", "expected_cost", "error"], rows, args.format)
    report = {
        "best_h": opt.best_params.h if opt.best_params else None,
        "best_K": opt.best_params.K if opt.best_params else None,
        "best_cost": None if math.isnan(opt.best_cost) else opt.best_cost,
        "n_points": len(opt.cost_surface),
        "n_failed": len(opt.failures),
    }
    _write_json(out / "optimum.json", report)
    return report


COMMANDS = {
    "moments": cmd_moments,
    "simulate": cmd_simulate,
    "chart": cmd_chart,
    "optimize": cmd_optimize,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mixchart", description="Cost-optimal control charts under mixture shifts.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("moments", "closed-form squared-shift integral vs. series oracle"),
        ("simulate", "Monte Carlo estimates of the interval integral (and optionally the chart cost)"),
        ("chart", "stationary distribution, cost vector and expected cost of one chart"),
        ("optimize", "grid search of the expected cost over (h, K)"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON config (or a manifest from an earlier run)")
        p.add_argument("--out", default="mixchart-out", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override numerics/seed (unsigned 64-bit)")
        p.add_argument("--threads", type=int, default=1, help="maximum worker processes")
        p.add_argument("--format", choices=("csv", "json"), default="csv", help="table output format")
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "simulate":
            p.add_argument("--per-path", action="store_true", help="also write per-path integrals")
            p.add_argument("--chart", action="store_true", help="also simulate the chart (needs scalar h, K)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            cfg.raw["numerics"]["seed"] = args.seed
            cfg.numerics["seed"] = args.seed
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "manifest.json", _manifest(args.command, cfg, args))
        report = COMMANDS[args.command](cfg, args, out)
    except (ConfigError, GridTooSmallError, TruncationError, ParameterError, UnsupportedInputError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ToleranceError as exc:
        print(f"tolerance failure: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE
    except ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
