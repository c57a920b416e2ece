"""Command-line front end.

Exit codes: 0 success, 2 usage/config error, 3 degenerate data,
4 integrability check failed.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from .deconvolution import CLOSED, InversionPlan, KernelSpec
from .errors import DegenerateDesignError, DeconvarError, UnsupportedCombinationError
from .estimators import (
    ARMA, DECONV_GENERAL, DECONV_N, DECONV_SC, NAIVE, ORACLE,
    ThetaBox, estimate_argmin, estimate_arma, estimate_closed, estimate_general,
    estimate_naive, estimate_oracle,
)
from .montecarlo import MCConfig, emit_boxplot_data, emit_table, run_mc
from .noise import ErrorModel, split_rng
from .process import CAUCHY, LINEAR, PRESETS, Scenario, make_preset, simulate
from .weights import WeightSpec, condition_c11_report

EXIT_OK, EXIT_USAGE, EXIT_DEGENERATE, EXIT_CONDITION = 0, 2, 3, 4

ESTIMATOR_NAMES = {
    "deconv-n": DECONV_N, "deconv-sc": DECONV_SC, "oracle": ORACLE,
    "naive": NAIVE, "arma": ARMA, "deconv-general": DECONV_GENERAL,
}


class UsageError(Exception):
    pass


def _write(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _plan(args):
    return InversionPlan(t_max=args.tmax, points=args.points, mode=CLOSED)


def _scenario_from_args(args, need_n=True):
    if getattr(args, "config", None):
        try:
            return Scenario.from_json(Path(args.config).read_text())
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise UsageError(f"invalid scenario config {args.config}: {exc}") from exc
    if not args.preset:
        raise UsageError("give --preset or --config")
    if args.s2n is None:
        raise UsageError("--s2n is required with --preset")
    return make_preset(args.preset, args.n if need_n else 2, args.s2n, args.error)


# ------------------------------------------------------------------ commands

def cmd_simulate(args):
    if args.seed is None:
        raise UsageError("--seed is required")
    scenario = _scenario_from_args(args)
    traj = simulate(scenario, split_rng(args.seed, 0))
    lines = ["index,x,z"] + [f"{i},{x!r},{z!r}" for i, (x, z) in enumerate(zip(traj.x.tolist(), traj.z.tolist()))]
    _write("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def read_series(path):
    """Read a headered CSV with a ``z`` column and optionally ``x``."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    if not rows or "z" not in rows[0]:
        raise UsageError(f"{path} has no z column")
    try:
        z = np.array([float(r["z"]) for r in rows])
        x = np.array([float(r["x"]) for r in rows]) if "x" in rows[0] and rows[0]["x"] not in (None, "") else None
    except ValueError as exc:
        raise UsageError(f"non-numeric value in {path}: {exc}") from exc
    return x, z


def _error_from_args(args):
    if args.sigma_eps is not None:
        return ErrorModel(args.error, args.sigma_eps)
    if args.preset and args.s2n is not None:
        return make_preset(args.preset, 2, args.s2n, args.error).error
    raise UsageError("the error law needs --sigma-eps, or --preset with --s2n")


def _family_from_args(args):
    if args.family:
        return args.family
    if args.preset:
        return CAUCHY if args.preset == "cauchy" else LINEAR
    return LINEAR


def run_estimate(x, z, estimator, family, err=None, plan=InversionPlan(), kernel=KernelSpec(),
                 weight="sc", argmin=False, box=None):
    """Library path behind ``deconvar estimate``."""
    tag = ESTIMATOR_NAMES[estimator]
    if tag == ORACLE:
        if x is None:
            raise UsageError("the oracle estimator needs an x column")
        return estimate_oracle(x, family)
    if tag == NAIVE:
        return estimate_naive(z, family)
    if tag == ARMA:
        if family != LINEAR:
            raise UsageError("arma only applies to the linear family")
        return estimate_arma(z)
    if err is None:
        raise UsageError("deconvolution estimators need the error law")
    cauchy = family == CAUCHY
    if tag == DECONV_GENERAL:
        w = WeightSpec.from_name(weight, err.sigma_eps)
        w = WeightSpec(w.base, cauchy, err.sigma_eps)
        return estimate_general(z, box, w, err, kernel, plan, family)
    w = WeightSpec("N" if tag == DECONV_N else "SC", cauchy, err.sigma_eps)
    if argmin:
        rec = estimate_argmin(z, box, w, err, plan, family)
    else:
        rec = estimate_closed(z, w, err, plan, family)
    rec.tag = tag
    return rec


def cmd_estimate(args):
    x, z = read_series(args.data)
    family = _family_from_args(args)
    tag = ESTIMATOR_NAMES[args.estimator]
    err = _error_from_args(args) if tag in (DECONV_N, DECONV_SC, DECONV_GENERAL) else None
    kernel = KernelSpec(math.inf if args.cn is None else args.cn, args.taper)
    rec = run_estimate(x, z, args.estimator, family, err, _plan(args), kernel, args.weight, args.argmin)
    _write(rec.to_json() + "\n", args.out)
    return EXIT_OK


def _mc_config_from_args(args):
    if args.config:
        try:
            return MCConfig.from_dict(json.loads(Path(args.config).read_text()))
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise UsageError(f"invalid mc config {args.config}: {exc}") from exc
    if args.seed is None:
        raise UsageError("--seed is required")
    if not args.preset or args.s2n is None:
        raise UsageError("give --config, or --preset with --s2n")
    tags = [ESTIMATOR_NAMES[e] for e in (args.estimator or [])]
    return MCConfig(preset=args.preset, n=args.n, s2n=args.s2n, error=args.error, reps=args.reps,
                    estimators=tuple(tags), master_seed=args.seed, plan=_plan(args),
                    kernel=KernelSpec(math.inf if args.cn is None else args.cn, args.taper),
                    general_weight=args.weight.upper())


def cmd_mc(args):
    cfg = _mc_config_from_args(args)
    report = run_mc(cfg, workers=args.workers)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json() + "\n")
    (out / "table.csv").write_text(emit_table(report, "csv"))
    (out / "table.md").write_text(emit_table(report, "markdown"))
    (out / "boxplot.csv").write_text(emit_boxplot_data(report))
    return EXIT_OK


def cmd_check_conditions(args):
    scenario = _scenario_from_args(args, need_n=False)
    err = scenario.error if args.sigma_eps is None else ErrorModel(scenario.error.kind, args.sigma_eps)
    w = WeightSpec.from_name(args.weight, args.weight_sigma or err.sigma_eps)
    if scenario.regression.kind == CAUCHY and not w.cauchy_factor:
        w = WeightSpec(w.base, True, w.sigma_eps)
    report = condition_c11_report(w, err, scenario.regression, points=args.points)
    _write(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK if report.converged else EXIT_CONDITION


# -------------------------------------------------------------------- parser

def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def build_parser():
    p = argparse.ArgumentParser(prog="deconvar", description="Deconvolution estimation for noisy autoregressions.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, n_default=1000):
        sp.add_argument("--preset", choices=sorted(PRESETS))
        sp.add_argument("--n", type=int, default=n_default)
        sp.add_argument("--s2n", type=_positive_float)
        sp.add_argument("--error", choices=["laplace", "gaussian"], default="laplace")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out")

    def numeric(sp):
        sp.add_argument("--tmax", type=_positive_float)
        sp.add_argument("--points", type=int, default=4096)
        sp.add_argument("--cn", type=_positive_float, help="kernel cut-off (default: none)")
        sp.add_argument("--taper", type=float, default=0.0)
        sp.add_argument("--weight", default="sc", help="n or sc (Cauchy presets use N_c / SC_c)")

    s = sub.add_parser("simulate", help="simulate a trajectory and write index,x,z CSV")
    common(s)
    s.add_argument("--config", help="scenario JSON")
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("estimate", help="estimate theta from a CSV series")
    common(e)
    numeric(e)
    e.add_argument("--data", required=True)
    e.add_argument("--estimator", choices=sorted(ESTIMATOR_NAMES), required=True)
    e.add_argument("--family", choices=[LINEAR, CAUCHY])
    e.add_argument("--sigma-eps", type=_positive_float)
    e.add_argument("--argmin", action="store_true", help="minimise the contrast numerically")
    e.set_defaults(func=cmd_estimate)

    m = sub.add_parser("mc", help="run a Monte Carlo cell")
    common(m)
    numeric(m)
    m.add_argument("--config", help="MC config JSON")
    m.add_argument("--reps", type=int, default=100)
    m.add_argument("--estimator", action="append", choices=sorted(ESTIMATOR_NAMES))
    m.add_argument("--workers", type=int, default=1)
    m.set_defaults(func=cmd_mc)

    c = sub.add_parser("check-conditions", help="integrability diagnostic for a weight/error/regression triple")
    common(c)
    c.add_argument("--config", help="scenario JSON")
    c.add_argument("--weight", default="sc")
    c.add_argument("--sigma-eps", type=_positive_float)
    c.add_argument("--weight-sigma", type=_positive_float, help="width of N if it should differ from sigma_eps")
    c.add_argument("--points", type=int, default=4096)
    c.set_defaults(func=cmd_check_conditions)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DegenerateDesignError as exc:
        print(f"deconvar: degenerate data: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (UsageError, UnsupportedCombinationError, ValueError) as exc:
        print(f"deconvar: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DeconvarError as exc:
        print(f"deconvar: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
