"""Replication harness: bias/MSE tables and box-plot data.

Replication ``r`` draws from ``split_rng(master_seed, r)`` and results are
folded in replication order, so a report depends only on its config.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .deconvolution import InversionPlan, KernelSpec
from .errors import DeconvarError
from .estimators import (
    ARMA,
    COORDINATES,
    DECONV_GENERAL,
    DECONV_N,
    DECONV_SC,
    NAIVE,
    ORACLE,
    TAGS,
    ThetaBox,
    estimate_arma,
    estimate_closed,
    estimate_general,
    estimate_naive,
    estimate_oracle,
)
from .noise import LAPLACE, split_rng
from .process import CAUCHY, PRESETS, make_preset, simulate
from .weights import WeightSpec


@dataclass(frozen=True)
class MCConfig:
    preset: str
    n: int
    s2n: float
    error: str = LAPLACE
    reps: int = 100
    estimators: tuple = (DECONV_N, DECONV_SC, ORACLE, NAIVE)
    master_seed: int = 0
    plan: InversionPlan = InversionPlan()
    kernel: KernelSpec = KernelSpec()
    general_weight: str = "SC"
    box: ThetaBox | None = None

    def __post_init__(self):
        object.__setattr__(self, "estimators", tuple(self.estimators))
        if self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        bad = [t for t in self.estimators if t not in TAGS]
        if bad:
            raise ValueError(f"unknown estimator tag(s) {bad}")
        if len(set(self.estimators)) != len(self.estimators):
            raise ValueError("estimator list has duplicates")
        if self.preset == "cauchy" and ARMA in self.estimators:
            raise ValueError("the ARMA baseline only applies to the linear presets")
        self.scenario()  # validates n, s2n and error kind

    def scenario(self):
        return make_preset(self.preset, self.n, self.s2n, self.error)

    def to_dict(self):
        return {
            "preset": self.preset, "n": self.n, "s2n": self.s2n, "error": self.error,
            "reps": self.reps, "estimators": list(self.estimators), "master_seed": self.master_seed,
            "plan": self.plan.to_dict(), "kernel": self.kernel.to_dict(),
            "general_weight": self.general_weight,
            "box": None if self.box is None else self.box.to_dict(),
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "plan" in d:
            d["plan"] = InversionPlan.from_dict(d["plan"])
        if "kernel" in d:
            d["kernel"] = KernelSpec.from_dict(d["kernel"])
        if d.get("box") is not None:
            d["box"] = ThetaBox(tuple(d["box"]["lower"]), tuple(d["box"]["upper"]))
        d["estimators"] = tuple(d.get("estimators", ()))
        return cls(**d)


@dataclass
class EstimatorSummary:
    tag: str
    coordinates: tuple
    true_theta: tuple
    estimates: list                      # one list per replication, None on failure
    failures: list = field(default_factory=list)   # (replication, message)
    flagged: int = 0

    @property
    def successes(self):
        return sum(e is not None for e in self.estimates)

    def matrix(self):
        ok = [e for e in self.estimates if e is not None]
        return np.asarray(ok, dtype=float).reshape(len(ok), len(self.coordinates))

    def mean(self):
        m = self.matrix()
        return m.mean(axis=0) if len(m) else np.full(len(self.coordinates), np.nan)

    def bias(self):
        return self.mean() - np.asarray(self.true_theta)

    def mse(self):
        m = self.matrix()
        if not len(m):
            return np.full(len(self.coordinates), np.nan)
        return np.mean((m - np.asarray(self.true_theta)) ** 2, axis=0)

    def variance(self):
        m = self.matrix()
        return m.var(axis=0) if len(m) else np.full(len(self.coordinates), np.nan)

    def to_dict(self):
        return {
            "tag": self.tag, "coordinates": list(self.coordinates), "true_theta": list(self.true_theta),
            "estimates": self.estimates, "failures": [list(f) for f in self.failures],
            "flagged": self.flagged, "successes": self.successes,
            "mean": self.mean().tolist(), "bias": self.bias().tolist(), "mse": self.mse().tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["tag"], tuple(d["coordinates"]), tuple(d["true_theta"]),
                   [None if e is None else list(e) for e in d["estimates"]],
                   [tuple(f) for f in d["failures"]], d.get("flagged", 0))


@dataclass
class MCReport:
    config: MCConfig
    summaries: dict

    def __getitem__(self, tag):
        return self.summaries[tag]

    def to_dict(self):
        return {"config": self.config.to_dict(),
                "estimators": [self.summaries[t].to_dict() for t in self.config.estimators]}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        cfg = MCConfig.from_dict(d["config"])
        return cls(cfg, {e["tag"]: EstimatorSummary.from_dict(e) for e in d["estimators"]})


def _run_estimator(tag, traj, scenario, cfg):
    family = scenario.regression.kind
    err = scenario.error
    cauchy = family == CAUCHY
    if tag == ORACLE:
        return estimate_oracle(traj.x, family)
    if tag == NAIVE:
        return estimate_naive(traj.z, family)
    if tag == ARMA:
        return estimate_arma(traj.z)
    if tag in (DECONV_N, DECONV_SC):
        w = WeightSpec("N" if tag == DECONV_N else "SC", cauchy, err.sigma_eps)
        rec = estimate_closed(traj.z, w, err, cfg.plan, family)
        rec.tag = tag
        return rec
    if tag == DECONV_GENERAL:
        w = WeightSpec(cfg.general_weight.upper(), cauchy, err.sigma_eps)
        return estimate_general(traj.z, cfg.box, w, err, cfg.kernel, cfg.plan, family)
    raise ValueError(tag)


def run_replication(cfg: MCConfig, r: int):
    """Estimates of every requested estimator on replication ``r``.

    Returns ``{tag: (theta or None, message, flagged)}``.
    """
    scenario = cfg.scenario()
    traj = simulate(scenario, split_rng(cfg.master_seed, r))
    out = {}
    for tag in cfg.estimators:
        try:
            rec = _run_estimator(tag, traj, scenario, cfg)
        except DeconvarError as exc:
            out[tag] = (None, f"{type(exc).__name__}: {exc}", False)
            continue
        theta = [float(v) for v in rec.theta_hat]
        if not all(math.isfinite(v) for v in theta):
            out[tag] = (None, "non-finite estimate", False)
            continue
        flagged = rec.diagnostics.get("converged") is False
        out[tag] = (theta, "", flagged)
    return out


def _run_chunk(args):
    cfg, reps = args
    return [run_replication(cfg, r) for r in reps]


def run_mc(cfg: MCConfig, workers: int = 1) -> MCReport:
    """Simulate ``cfg.reps`` trajectories and run every estimator on each.

    Failed replications are excluded from the aggregates and listed with
    their error message.
    """
    reps = list(range(cfg.reps))
    if workers > 1 and cfg.reps > 1:
        chunks = [reps[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, [(cfg, c) for c in chunks]))
        by_rep = {}
        for c, res in zip(chunks, parts):
            by_rep.update(zip(c, res))
        results = [by_rep[r] for r in reps]
    else:
        results = [run_replication(cfg, r) for r in reps]

    scenario = cfg.scenario()
    family = scenario.regression.kind
    truth = tuple(scenario.regression.params)
    summaries = {}
    for tag in cfg.estimators:
        s = EstimatorSummary(tag, COORDINATES[family], truth, [])
        for r, res in enumerate(results):
            theta, msg, flagged = res[tag]
            s.estimates.append(theta)
            if theta is None:
                s.failures.append((r, msg))
            s.flagged += int(flagged)
        summaries[tag] = s
    return MCReport(cfg, summaries)


# ------------------------------------------------------------------ emitters

TABLE_COLUMNS = ("estimator", "coordinate", "true_value", "mean", "bias", "mse", "successes", "failures")


def _rows(report: MCReport):
    for tag in report.config.estimators:
        s = report.summaries[tag]
        mean, bias, mse = s.mean(), s.bias(), s.mse()
        for k, coord in enumerate(s.coordinates):
            yield (tag, coord, s.true_theta[k], float(mean[k]), float(bias[k]), float(mse[k]),
                   s.successes, len(s.failures))


def emit_table(report: MCReport, fmt="csv", digits=4) -> str:
    """Summary table, one row per (estimator, coordinate).

    CSV keeps full float precision (``repr``); markdown shows the
    ``mean (MSE)`` layout at ``digits`` decimals.
    """
    if fmt == "csv":
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(TABLE_COLUMNS)
        for row in _rows(report):
            wr.writerow([repr(v) if isinstance(v, float) else v for v in row])
        return buf.getvalue()
    if fmt == "markdown":
        lines = ["| estimator | coordinate | true | mean (MSE) | failures |",
                 "|---|---|---|---|---|"]
        for tag, coord, true, mean, _, mse, _, nfail in _rows(report):
            lines.append(f"| {tag} | {coord} | {true:.{digits}f} | {mean:.{digits}f} ({mse:.{digits}f}) | {nfail} |")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown table format {fmt!r}")


def parse_table_csv(text):
    """Inverse of ``emit_table(..., "csv")``: list of dict rows with floats restored."""
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        for key in ("true_value", "mean", "bias", "mse"):
            rec[key] = float(rec[key])
        for key in ("successes", "failures"):
            rec[key] = int(rec[key])
        rows.append(rec)
    return rows


def box_stats(values):
    """Quartiles and 1.5 IQR whiskers (whiskers snap to the extreme data inside the fences)."""
    v = np.sort(np.asarray(values, dtype=float))
    if not v.size:
        return None
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = v[(v >= lo_fence) & (v <= hi_fence)]
    return {
        "q1": float(q1), "median": float(med), "q3": float(q3), "iqr": float(iqr),
        "whisker_low": float(inside.min()), "whisker_high": float(inside.max()),
        "n_outliers": int(v.size - inside.size),
    }


BOX_COLUMNS = ("estimator", "coordinate", "kind", "index", "value")


def emit_boxplot_data(report: MCReport) -> str:
    """Long-format CSV: every replication value plus the box statistics."""
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(BOX_COLUMNS)
    for tag in report.config.estimators:
        s = report.summaries[tag]
        m = s.matrix()
        for k, coord in enumerate(s.coordinates):
            col = m[:, k] if len(m) else np.array([])
            for i, v in enumerate(col):
                wr.writerow([tag, coord, "replicate", i, repr(float(v))])
            stats = box_stats(col)
            if stats is None:
                continue
            for key, v in stats.items():
                wr.writerow([tag, coord, key, "", repr(v) if isinstance(v, float) else v])
    return buf.getvalue()
