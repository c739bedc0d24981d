import csv
import io
import math

import numpy as np
import pytest

from leakage_measures.errors import ParameterError
from leakage_measures.harness import (CSV_COLUMNS, ESTIMATORS, FAILED, OK, SKIPPED, EstimateRecord,
                                      EstimatorConfig, SweepSpec, emit_csv, knn_label, preset_spans,
                                      run_sweep, summarize, sweep_metadata, value_table, write_csv)
from leakage_measures.hist_divergence import kl_hist
from leakage_measures.histogram import build_histogram, joint_range
from leakage_measures.scenarios import ScenarioSpec, sample_joint, sample_product_of_marginals

SHARE = ScenarioSpec("share", 1.0, 10.0, 0)
THREE = ScenarioSpec("three_party_mult", 1.0, 10.0, 0)


def _rec(value, trial=0, est="kl-hist", n=100, bins=8, status=OK, conv=None):
    return EstimateRecord(est, n, bins, trial, value, 0.5, conv, status, "", 0.1)


def _csv_rows(summaries):
    buf = io.StringIO()
    write_csv(summaries, buf)
    return list(csv.reader(io.StringIO(buf.getvalue())))


# summaries

def test_summary_mean_and_unbiased_std():
    (s,) = summarize([_rec(1.0, 0), _rec(3.0, 1)])
    assert s.mean == 2.0
    assert s.std == pytest.approx(math.sqrt(2.0), rel=1e-15)
    assert s.n_ok == 2 and s.mean_runtime_s == 0.5


def test_single_trial_std_is_zero():
    (s,) = summarize([_rec(0.7)])
    assert s.std == 0.0


def test_skipped_and_failed_counted_not_averaged():
    recs = [_rec(1.0, 0), _rec(math.nan, 1, status=SKIPPED), _rec(math.nan, 2, status=FAILED)]
    (s,) = summarize(recs)
    assert s.mean == 1.0 and (s.n_ok, s.n_skipped, s.n_failed) == (1, 1, 1)


def test_all_skipped_group_has_nan_mean():
    (s,) = summarize([_rec(math.nan, status=SKIPPED)])
    assert math.isnan(s.mean) and s.n_ok == 0


def test_convergence_flag_aggregates():
    (s,) = summarize([_rec(1.0, 0, "w1-sinkhorn", conv=True), _rec(1.0, 1, "w1-sinkhorn", conv=False)])
    assert s.all_converged is False


def test_bound_flags_from_group_means():
    recs = [_rec(0.0477, est="kl-hist"), _rec(0.10, est="tv-hist"), _rec(0.03, est="js-hist")]
    out = summarize(recs)
    flags = out[0].bound_checks
    assert flags == {"js_le_tv": True, "tv_le_1": True, "pinsker": True, "bretagnolle": True}
    assert all(s.bound_checks == flags for s in out)


def test_bound_flags_record_violation():
    recs = [_rec(0.001, est="kl-hist"), _rec(0.3, est="tv-hist"), _rec(0.03, est="js-hist")]
    assert summarize(recs)[0].bound_checks["pinsker"] is False


# CSV

def test_empty_csv_is_header_only():
    rows = _csv_rows([])
    assert len(rows) == 1
    assert rows[0][:len(CSV_COLUMNS)] == list(CSV_COLUMNS)
    assert all(c.startswith("bound_") for c in rows[0][len(CSV_COLUMNS):])


def test_single_group_csv():
    rows = _csv_rows(summarize([_rec(1.0, 0), _rec(3.0, 1)]))
    assert len(rows) == 2
    row = dict(zip(rows[0], rows[1]))
    assert row["estimator"] == "kl-hist" and row["mean"] == "2" and row["n_ok"] == "2"
    assert row["bound_pinsker"] == ""


def test_emit_csv_file_and_bad_path(tmp_path):
    out = tmp_path / "s.csv"
    emit_csv(summarize([_rec(1.0)]), out)
    assert out.read_text().count("\n") == 2
    with pytest.raises(OSError):
        emit_csv([], tmp_path / "missing" / "s.csv")


# spec validation and presets

def test_spec_validation():
    with pytest.raises(ParameterError):
        SweepSpec(SHARE, ("kl-hist", "bogus"), (100,), (8,))
    with pytest.raises(ParameterError):
        SweepSpec(SHARE, (), (100,), (8,))
    with pytest.raises(ParameterError):
        SweepSpec(SHARE, ("kl-hist",), (), (8,))
    with pytest.raises(ParameterError):
        SweepSpec(SHARE, ("kl-hist",), (100,), (8,), trials=0)
    with pytest.raises(ParameterError):
        EstimatorConfig(lam=0.0)
    with pytest.raises(ParameterError):
        EstimatorConfig(knn_k=(0,))


def test_presets():
    desk = preset_spans("desk", "samples")
    assert max(desk["sample_span"]) == 1_000_000 and desk["bin_span"] == (24,)
    assert max(desk["sample_estimator_span"]) == 20_000
    paper = preset_spans("paper", "samples")
    assert max(paper["sample_span"]) == 100_000_000
    bins = preset_spans("desk", "bins")
    assert max(bins["bin_span"]) == 24 and bins["sample_estimator_span"] == ()
    assert preset_spans("paper", "bins")["bin_span"][-1] == 30
    with pytest.raises(ParameterError):
        preset_spans("huge", "samples")


# sweeps

def test_row_count_and_layout():
    spec = SweepSpec(SHARE, ESTIMATORS, (200, 400), (4, 6), trials=2,
                     sample_estimator_span=(200,), config=EstimatorConfig(knn_k=(1, 3)))
    recs = run_sweep(spec)
    # 5 grid estimators x 2 N x 2 bins x 2 trials + 3 sample estimators x 1 N x 2 trials
    assert len(recs) == 5 * 2 * 2 * 2 + 3 * 2
    assert all(r.status == OK for r in recs)
    assert {r.estimator for r in recs if r.bins == 0} == {knn_label(1), knn_label(3), "mmd"}
    summaries = summarize(recs)
    assert len(summaries) == 5 * 4 + 3
    assert len(_csv_rows(summaries)) == len(summaries) + 1
    assert all(s.bound_checks.get("w1_upper") is None for s in summaries)
    assert all(s.bound_checks for s in summaries if s.bins > 0)


def test_values_are_deterministic():
    spec = SweepSpec(SHARE, ("kl-hist", "w1-sinkhorn", "kl-knn", "mmd"), (300,), (5,), trials=3,
                     seed_base=17)
    a, b = value_table(run_sweep(spec)), value_table(run_sweep(spec))
    assert a == b


def test_threads_do_not_change_values():
    spec = SweepSpec(SHARE, ("kl-hist", "tv-hist", "w1-lp", "kl-knn"), (300, 600), (5,), trials=3)
    assert value_table(run_sweep(spec, workers=3)) == value_table(run_sweep(spec))


def test_trial_seeds_and_shared_grid():
    spec = SweepSpec(SHARE, ("kl-hist",), (500,), (6,), trials=2, seed_base=40)
    recs = run_sweep(spec)
    scn = SHARE.with_seed(41)
    joint, prod = sample_joint(scn, 500), sample_product_of_marginals(scn, 500)
    r = joint_range(joint, prod)
    want = kl_hist(build_histogram(joint, 6, r), build_histogram(prod, 6, r)).value
    assert recs[1].trial == 1 and recs[1].value == want
    assert recs[0].value != recs[1].value


def test_resource_guard_cells_are_skipped():
    cfg = EstimatorConfig(max_cost_entries=1000)
    spec = SweepSpec(SHARE, ("kl-hist", "w1-lp", "w1-sinkhorn"), (200,), (4, 8), trials=1, config=cfg)
    recs = {(r.estimator, r.bins): r for r in run_sweep(spec)}
    assert recs["w1-lp", 4].status == OK
    for est in ("w1-lp", "w1-sinkhorn"):
        assert recs[est, 8].status == SKIPPED
        assert recs[est, 8].reason.startswith("resource")
    assert recs["kl-hist", 8].status == OK


def test_mmd_cap_skips_without_aborting():
    cfg = EstimatorConfig(mmd_max_samples=100)
    spec = SweepSpec(SHARE, ("kl-hist", "mmd"), (50, 200), (4,), trials=1, config=cfg)
    recs = {(r.estimator, r.n_samples): r for r in run_sweep(spec)}
    assert recs["mmd", 50].status == OK
    assert recs["mmd", 200].status == SKIPPED
    assert recs["kl-hist", 200].status == OK


def test_three_party_transport_is_skipped():
    spec = SweepSpec(THREE, ("kl-hist", "tv-hist", "js-hist", "w1-lp", "w1-sinkhorn"),
                     (500,), (24,), trials=1)
    recs = {r.estimator: r for r in run_sweep(spec)}
    for est in ("kl-hist", "tv-hist", "js-hist"):
        assert recs[est].status == OK and np.isfinite(recs[est].value)
    for est in ("w1-lp", "w1-sinkhorn"):
        assert recs[est].status == SKIPPED
        assert "exceeds the memory guard" in recs[est].reason


def test_failures_are_recorded():
    # N=1 makes k-NN impossible; the histogram cells still run
    spec = SweepSpec(SHARE, ("kl-hist", "kl-knn"), (1,), (2,), trials=1)
    recs = {r.estimator: r for r in run_sweep(spec)}
    assert recs[knn_label(1)].status == FAILED
    assert "ParameterError" in recs[knn_label(1)].reason
    assert recs["kl-hist"].status == OK


def test_progress_callback_and_metadata():
    seen = []
    spec = SweepSpec(SHARE, ("tv-hist",), (100, 200), (4,), trials=2)
    run_sweep(spec, progress=seen.append)
    assert len(seen) == 4
    meta = sweep_metadata(spec)
    assert meta["trials"] == 2 and meta["scenario"]["kind"] == "share"
