"""Command-line interface.

Subcommands
-----------
estimate   threshold the residual covariance of a CSV observation matrix
coverage   Monte Carlo check of the threshold's simultaneous-coverage target
rate       Monte Carlo error-decay experiment along an n- or p-grid
identify   deterministic tail-eigencomponent recovery sweep over p

Experiment parameters may come from flags, from a JSON config file
(``--config``), or both; flags override file values. All randomness flows
from the configured seed. Exit codes: 0 success, 2 user/input error,
3 internal numeric error.

The environment variable FACTORCOV_LOG in {quiet, info, debug} controls
diagnostic verbosity on stderr (default quiet).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from factorcov import io
from factorcov.identification import identification_sweep
from factorcov.simulation import (
    Banded,
    BlockDiagonal,
    DGPSpec,
    RandomSparse,
    coverage_experiment,
    rate_experiment,
)
from factorcov.thresholding import (
    CrossValidation,
    FixedConstant,
    PlugIn,
    estimate_covariance,
)

log = logging.getLogger("factorcov")

EXIT_OK = 0
EXIT_USER_ERROR = 2
EXIT_NUMERIC_ERROR = 3


def _configure_logging():
    level_name = os.environ.get("FACTORCOV_LOG", "quiet").strip().lower()
    level = {"quiet": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}.get(
        level_name, logging.WARNING
    )
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(message)s")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="factorcov",
        description="Sparse idiosyncratic covariance estimation for factor models",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="estimate the idiosyncratic covariance from a CSV")
    est.add_argument("--input", required=True, help="CSV matrix, rows = variables")
    est.add_argument("--output", required=True, help="CSV path for the estimate")
    est.add_argument("--k", type=int, required=True, help="number of factors")
    est.add_argument("--rule", choices=["plugin", "cv", "fixed"], default="plugin")
    est.add_argument("--c0", type=float, default=1.1)
    est.add_argument("--alpha", type=float, default=0.05)
    est.add_argument("--cv-folds", type=int, default=5)
    est.add_argument("--cv-grid", default="0.25,0.5,1.0,1.5,2.0,2.5",
                     help="comma-separated candidate constants")
    est.add_argument("--fixed-constant", type=float, default=0.0)
    est.add_argument("--demean", action="store_true", help="demean each variable row first")
    est.add_argument("--transpose", action="store_true",
                     help="input has observations in rows; transpose on read")
    est.add_argument("--pd-floor", action="store_true",
                     help="lift eigenvalues below 1e-8*trace/p after thresholding")

    for name in ("coverage", "rate", "identify"):
        cmd = sub.add_parser(name, help=f"run the {name} experiment")
        cmd.add_argument("--config", help="JSON file with experiment parameters")
        cmd.add_argument("--output", required=True, help="JSON report path")
        cmd.add_argument("--seed", type=int, default=None)
        cmd.add_argument("--threads", type=int, default=None,
                         help="worker threads (default: available parallelism)")
        cmd.add_argument("--k", type=int, default=None)
        if name in ("coverage", "rate"):
            cmd.add_argument("--p", type=int, default=None)
            cmd.add_argument("--n", type=int, default=None)
            cmd.add_argument("--reps", type=int, default=None)
            cmd.add_argument("--c0", type=float, default=None)
            cmd.add_argument("--alpha", type=float, default=None)
            cmd.add_argument("--structure",
                             choices=["banded", "block", "random-sparse"], default=None)
            cmd.add_argument("--bandwidth", type=int, default=None)
            cmd.add_argument("--decay", type=float, default=None)
            cmd.add_argument("--block-size", type=int, default=None)
            cmd.add_argument("--within-corr", type=float, default=None)
            cmd.add_argument("--q", type=float, default=None)
            cmd.add_argument("--m-p-target", type=float, default=None)
            cmd.add_argument("--structure-seed", type=int, default=None)
            cmd.add_argument("--noise", choices=["normal", "uniform"], default=None)
        if name == "rate":
            cmd.add_argument("--axis", choices=["n", "p"], default=None)
            cmd.add_argument("--grid", default=None, help="comma-separated grid values")
        if name == "identify":
            cmd.add_argument("--grid", default=None, help="comma-separated p values")
            cmd.add_argument("--bandwidth", type=int, default=None)
            cmd.add_argument("--decay", type=float, default=None)
    return parser


def _load_config(args):
    config = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            config = json.load(fh)
        if not isinstance(config, dict):
            raise ValueError(f"{args.config}: config must be a JSON object")
    return config


def _setting(args, config, name, default):
    """Flag value if given, else config file value, else default."""
    value = getattr(args, name.replace("-", "_"), None)
    if value is not None:
        return value
    for key in (name, name.replace("-", "_"), name.replace("_", "-")):
        if key in config and config[key] is not None:
            return config[key]
    return default


def _parse_grid(raw, what="grid"):
    if raw is None:
        raise ValueError(f"missing {what}: pass --grid or set it in the config file")
    if isinstance(raw, str):
        parts = [s for s in raw.replace(" ", "").split(",") if s]
        try:
            return [int(s) for s in parts]
        except ValueError:
            raise ValueError(f"invalid {what}: {raw!r}") from None
    return [int(v) for v in raw]


def _build_structure(args, config):
    kind = _setting(args, config, "structure", "banded")
    if kind == "banded":
        return Banded(
            bandwidth=int(_setting(args, config, "bandwidth", 2)),
            decay=float(_setting(args, config, "decay", 0.4)),
        )
    if kind == "block":
        return BlockDiagonal(
            block_size=int(_setting(args, config, "block-size", 4)),
            within_corr=float(_setting(args, config, "within-corr", 0.3)),
        )
    if kind == "random-sparse":
        return RandomSparse(
            q=float(_setting(args, config, "q", 0.0)),
            m_p_target=float(_setting(args, config, "m-p-target", 5.0)),
            seed=int(_setting(args, config, "structure-seed", 0)),
        )
    raise ValueError(f"unknown covariance structure {kind!r}")


def _build_spec(args, config, default_p, default_n, default_k):
    return DGPSpec(
        p=int(_setting(args, config, "p", default_p)),
        n=int(_setting(args, config, "n", default_n)),
        k=int(_setting(args, config, "k", default_k)),
        sigma_u_structure=_build_structure(args, config),
        noise_dist=str(_setting(args, config, "noise", "normal")),
        seed=int(_setting(args, config, "seed", 0)),
    )


def _threads(args, config):
    value = _setting(args, config, "threads", None)
    if value is None:
        return os.cpu_count() or 1
    return int(value)


def _sidecar_path(output):
    out = Path(output)
    return out.with_suffix(".json") if out.suffix.lower() == ".csv" else Path(str(out) + ".json")


def _cmd_estimate(args):
    y = io.read_matrix_csv(args.input, transpose=args.transpose)
    if args.demean:
        y = y - y.mean(axis=1, keepdims=True)
    if args.rule == "plugin":
        rule = PlugIn(c0=args.c0, alpha=args.alpha)
    elif args.rule == "cv":
        grid = tuple(float(s) for s in args.cv_grid.replace(" ", "").split(",") if s)
        rule = CrossValidation(folds=args.cv_folds, grid=grid)
    else:
        rule = FixedConstant(c=args.fixed_constant)
    log.info("estimating: %s variables x %s observations, k=%s, rule=%s",
             y.shape[0], y.shape[1], args.k, args.rule)
    estimate = estimate_covariance(y, args.k, rule=rule, eigenvalue_floor=args.pd_floor)
    io.write_matrix_csv(args.output, estimate.sigma_u)

    sidecar = {
        "p": int(y.shape[0]),
        "n": int(y.shape[1]),
        "k": int(args.k),
        "rule": args.rule,
        "c0": args.c0 if args.rule == "plugin" else None,
        "alpha": args.alpha if args.rule == "plugin" else None,
        "zero_fraction": estimate.zero_fraction,
        "min_eigenvalue": estimate.min_eigenvalue,
        "guard_flags": list(estimate.guard_flags),
        "demean": bool(args.demean),
        "transpose": bool(args.transpose),
    }
    io.write_report_json(_sidecar_path(args.output), sidecar)
    return EXIT_OK


def _cmd_coverage(args):
    config = _load_config(args)
    spec = _build_spec(args, config, default_p=100, default_n=400, default_k=3)
    reps = int(_setting(args, config, "reps", 500))
    log.info("coverage experiment: p=%s n=%s k=%s reps=%s seed=%s",
             spec.p, spec.n, spec.k, reps, spec.seed)
    report = coverage_experiment(
        spec,
        reps=reps,
        c0=float(_setting(args, config, "c0", 1.1)),
        alpha=float(_setting(args, config, "alpha", 0.05)),
        threads=_threads(args, config),
    )
    io.write_report_json(args.output, report)
    io.write_points_csv(Path(args.output).with_suffix(".csv"), report)
    print(f"coverage frequency: {report.coverage_frequency:.6f} "
          f"(se {report.coverage_se:.6f}, reps {report.reps})")
    for flag in report.flags:
        print(f"note: {flag}")
    return EXIT_OK


def _cmd_rate(args):
    config = _load_config(args)
    axis = _setting(args, config, "axis", "n")
    grid = _parse_grid(_setting(args, config, "grid", None))
    base_default_n = 400 if axis == "p" else grid[0]
    spec = _build_spec(
        args, config,
        default_p=200 if axis == "n" else grid[0],
        default_n=base_default_n,
        default_k=3,
    )
    reps = int(_setting(args, config, "reps", 100))
    log.info("rate experiment: axis=%s grid=%s reps=%s seed=%s", axis, grid, reps, spec.seed)
    report = rate_experiment(
        spec,
        axis=axis,
        grid=grid,
        reps=reps,
        c0=float(_setting(args, config, "c0", 1.1)),
        alpha=float(_setting(args, config, "alpha", 0.05)),
        threads=_threads(args, config),
    )
    io.write_report_json(args.output, report)
    io.write_points_csv(Path(args.output).with_suffix(".csv"), report)
    for name, (slope, se) in report.fitted_slopes.items():
        print(f"{name} slope vs {axis}: {slope:.4f} (se {se:.4f})")
    for flag in report.flags:
        print(f"note: {flag}")
    return EXIT_OK


def _cmd_identify(args):
    config = _load_config(args)
    grid = _parse_grid(_setting(args, config, "grid", None), what="p grid")
    report = identification_sweep(
        grid,
        k=int(_setting(args, config, "k", 3)),
        bandwidth=int(_setting(args, config, "bandwidth", 2)),
        decay=float(_setting(args, config, "decay", 0.4)),
    )
    io.write_report_json(args.output, report)
    io.write_identification_csv(Path(args.output).with_suffix(".csv"), report)
    print(f"recovery error log-log slope vs p: {report.slope:.4f} (se {report.slope_se:.4f})")
    return EXIT_OK


_COMMANDS = {
    "estimate": _cmd_estimate,
    "coverage": _cmd_coverage,
    "rate": _cmd_rate,
    "identify": _cmd_identify,
}


def main(argv=None):
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    # LinAlgError subclasses ValueError, so the numeric branch must come first
    except (np.linalg.LinAlgError, FloatingPointError, OverflowError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC_ERROR
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER_ERROR


if __name__ == "__main__":
    sys.exit(main())
