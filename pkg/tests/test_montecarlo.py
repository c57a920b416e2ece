import csv
import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import deconvar.montecarlo as mc
from deconvar.errors import DegenerateDesignError
from deconvar.montecarlo import (
    MCConfig,
    MCReport,
    box_stats,
    emit_boxplot_data,
    emit_table,
    parse_table_csv,
    run_mc,
    run_replication,
)


def small_cfg(**kw):
    base = dict(preset="case-a", n=400, s2n=1.0, reps=6,
                estimators=("DeconvN", "DeconvSC", "Oracle", "Naive"), master_seed=3)
    base.update(kw)
    return MCConfig(**base)


def type7(values, p):
    v = sorted(values)
    h = (len(v) - 1) * p
    lo = math.floor(h)
    hi = min(lo + 1, len(v) - 1)
    return v[lo] + (h - lo) * (v[hi] - v[lo])


# ------------------------------------------------------------------- config

def test_config_validation():
    with pytest.raises(ValueError):
        small_cfg(reps=0)
    with pytest.raises(ValueError):
        small_cfg(preset="case-z")
    with pytest.raises(ValueError):
        small_cfg(estimators=("Bogus",))
    with pytest.raises(ValueError):
        small_cfg(estimators=("Naive", "Naive"))
    with pytest.raises(ValueError):
        small_cfg(preset="cauchy", estimators=("Arma",))
    with pytest.raises(ValueError):
        small_cfg(error="uniform")


def test_config_dict_round_trip():
    cfg = small_cfg(estimators=("DeconvGeneral",))
    assert MCConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


# -------------------------------------------------------------- determinism

def test_same_seed_same_report():
    a = run_mc(small_cfg())
    b = run_mc(small_cfg())
    assert a.to_json() == b.to_json()


def test_different_seed_changes_report():
    assert run_mc(small_cfg()).to_json() != run_mc(small_cfg(master_seed=4)).to_json()


def test_parallel_matches_serial():
    cfg = small_cfg(reps=5, estimators=("DeconvSC", "Naive", "Arma"))
    assert run_mc(cfg, workers=2).to_json() == run_mc(cfg).to_json()


def test_replication_depends_only_on_index():
    cfg = small_cfg(reps=4)
    report = run_mc(cfg)
    alone = run_replication(cfg, 2)
    for tag, (theta, _, _) in alone.items():
        assert report[tag].estimates[2] == theta


def test_oracle_equals_naive_without_noise():
    cfg = small_cfg(reps=1, s2n=1e-20, estimators=("Oracle", "Naive"))
    rep = run_mc(cfg)
    assert len(rep["Oracle"].estimates) == 1
    np.testing.assert_allclose(rep["Oracle"].estimates[0], rep["Naive"].estimates[0], atol=1e-8)


# --------------------------------------------------------------- aggregation

def test_exclusion_accounting(monkeypatch):
    real = mc._run_estimator
    calls = {"n": 0}

    def flaky(tag, traj, scenario, cfg):
        if tag == "Naive":
            calls["n"] += 1
            if calls["n"] % 3 == 0:
                raise DegenerateDesignError("synthetic failure")
        return real(tag, traj, scenario, cfg)

    monkeypatch.setattr(mc, "_run_estimator", flaky)
    cfg = small_cfg(reps=7, estimators=("Oracle", "Naive"))
    rep = run_mc(cfg)
    naive = rep["Naive"]
    assert naive.successes + len(naive.failures) == cfg.reps
    assert [r for r, _ in naive.failures] == [2, 5]
    assert all("synthetic failure" in msg for _, msg in naive.failures)
    assert naive.matrix().shape == (5, 2)
    assert rep["Oracle"].successes == cfg.reps
    rows = {(r["estimator"], r["coordinate"]): r for r in parse_table_csv(emit_table(rep))}
    assert rows[("Naive", "a")]["failures"] == 2


def test_mse_identity():
    rep = run_mc(small_cfg(reps=8))
    for tag in rep.config.estimators:
        s = rep[tag]
        np.testing.assert_allclose(s.mse(), s.bias() ** 2 + s.variance(), rtol=0, atol=1e-12)
        m = s.matrix()
        manual = np.array([sum((m[k, j] - s.true_theta[j]) ** 2 for k in range(len(m))) / len(m)
                           for j in range(m.shape[1])])
        np.testing.assert_allclose(s.mse(), manual, rtol=1e-13)


def test_cauchy_report_has_one_coordinate():
    rep = run_mc(MCConfig("cauchy", 300, 1.0, reps=3, estimators=("DeconvN", "DeconvSC", "Naive")))
    for tag in ("DeconvN", "DeconvSC", "Naive"):
        assert rep[tag].coordinates == ("theta",)
        assert rep[tag].matrix().shape == (3, 1)


def test_general_estimator_runs_in_harness():
    rep = run_mc(small_cfg(reps=2, estimators=("DeconvGeneral", "DeconvSC")))
    np.testing.assert_array_equal(rep["DeconvGeneral"].matrix().round(4), rep["DeconvSC"].matrix().round(4))


def test_report_json_round_trip():
    rep = run_mc(small_cfg(reps=3))
    back = MCReport.from_json(rep.to_json())
    assert back.config == rep.config
    assert back.to_json() == rep.to_json()


# ------------------------------------------------------------------- tables

def test_empty_estimator_list_gives_header_only():
    rep = run_mc(small_cfg(reps=2, estimators=()))
    assert emit_table(rep).strip() == ",".join(mc.TABLE_COLUMNS)
    md = emit_table(rep, "markdown").strip().splitlines()
    assert len(md) == 2
    assert emit_boxplot_data(rep).strip() == ",".join(mc.BOX_COLUMNS)


def test_markdown_has_mean_mse_cells():
    rep = run_mc(small_cfg(reps=3))
    md = emit_table(rep, "markdown")
    rows = md.strip().splitlines()[2:]
    assert len(rows) == 2 * len(rep.config.estimators)
    for tag in rep.config.estimators:
        s = rep[tag]
        cell = f"{s.mean()[0]:.4f} ({s.mse()[0]:.4f})"
        assert any(f"| {tag} | a |" in r and cell in r for r in rows)


def test_csv_round_trip_matches_report():
    rep = run_mc(small_cfg(reps=4))
    back = MCReport.from_json(rep.to_json())
    rows = parse_table_csv(emit_table(back))
    assert len(rows) == 8
    for r in rows:
        s = rep[r["estimator"]]
        k = s.coordinates.index(r["coordinate"])
        assert abs(r["mean"] - s.mean()[k]) <= 1e-12
        assert abs(r["mse"] - s.mse()[k]) <= 1e-12
        assert abs(r["bias"] - s.bias()[k]) <= 1e-12


def test_unknown_table_format():
    with pytest.raises(ValueError):
        emit_table(run_mc(small_cfg(reps=1, estimators=("Naive",))), "html")


# ---------------------------------------------------------------- box plots

def test_box_stats_constant_vector():
    b = box_stats([0.3] * 9)
    assert b["iqr"] == 0
    assert b["whisker_low"] == b["whisker_high"] == b["median"] == 0.3
    assert b["n_outliers"] == 0


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=60))
def test_box_stats_match_sorted_order_statistics(values):
    b = box_stats(values)
    for key, p in (("q1", 0.25), ("median", 0.5), ("q3", 0.75)):
        assert b[key] == pytest.approx(type7(values, p), abs=1e-9)
    lo, hi = b["q1"] - 1.5 * b["iqr"], b["q3"] + 1.5 * b["iqr"]
    inside = [v for v in values if lo <= v <= hi]
    assert b["whisker_low"] == min(inside) and b["whisker_high"] == max(inside)
    assert b["n_outliers"] == len(values) - len(inside)


def test_boxplot_csv_layout():
    rep = run_mc(small_cfg(reps=5, estimators=("Naive", "DeconvSC")))
    rows = list(csv.DictReader(io.StringIO(emit_boxplot_data(rep))))
    reps = [r for r in rows if r["estimator"] == "Naive" and r["coordinate"] == "a" and r["kind"] == "replicate"]
    assert [float(r["value"]) for r in reps] == [e[0] for e in rep["Naive"].estimates]
    med = [r for r in rows if r["estimator"] == "DeconvSC" and r["coordinate"] == "b" and r["kind"] == "median"]
    assert float(med[0]["value"]) == pytest.approx(np.median(rep["DeconvSC"].matrix()[:, 1]))


def test_case_b_box_centres():
    rep = run_mc(MCConfig("case-b", 5000, 0.5, "gaussian", reps=30, estimators=("DeconvN", "DeconvSC", "Naive"),
                          master_seed=1))
    assert box_stats(rep["Naive"].matrix()[:, 0])["median"] == pytest.approx(0.22, abs=0.02)
    for tag in ("DeconvN", "DeconvSC"):
        assert box_stats(rep[tag].matrix()[:, 0])["median"] == pytest.approx(1 / 3, abs=0.05)
