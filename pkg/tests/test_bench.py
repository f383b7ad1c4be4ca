from __future__ import annotations

import json
import math

import numpy as np
import pytest

from rtautoml.bench import (APPROACHES, BASELINE_THETA_P, ComparisonReport,
                            DatasetSpec, ExperimentSpec, accuracy_at_seconds,
                            accuracy_gain_per_second, accuracy_per_second,
                            aggregate_results_dir, approach_learner_kind,
                            diagnostics_predicted_vs_actual, execute_approach,
                            run_experiment, write_report_tables)
from rtautoml.clusterapp import stratified_two_folds
from rtautoml.core import RunConfig, RunLog, RunRecord
from rtautoml.designs import Design
from rtautoml.ga import GaParams
from rtautoml.metalearners import MlParams
from rtautoml import rng as rngmod

from helpers import FAKE_SCHEMA_ID

TINY_GA = GaParams(population_size=4, generations=1)
TINY_ML = MlParams(knn_k=3, rf_trees=5, gbt_rounds=3)
TINY_DATASET = DatasetSpec(kind="blobs", n=16, k_true=2, d=2, separation=8.0)


def tiny_config(kind="knn", seed=5, **kw) -> RunConfig:
    kw.setdefault("total_timesteps", 3)
    kw.setdefault("theta_t", 1)
    return RunConfig(meta_learner_kind=kind, seed=seed, ga_params=TINY_GA,
                     ml_params=TINY_ML, **kw)


def tiny_spec(approaches, repeats=1, out_dir=None, workers=1, seed=5) -> ExperimentSpec:
    return ExperimentSpec(approaches=tuple(approaches), dataset=TINY_DATASET,
                          run_config=tiny_config(seed=seed), repeats=repeats,
                          out_dir=out_dir, n_landscape_samples=8, workers=workers)


def mk_log(accs, elapsed=None, preds=None, invoked=None) -> RunLog:
    d = Design(FAKE_SCHEMA_ID, (0, 0.5))
    elapsed = elapsed or [1.0] * len(accs)
    preds = preds or [None] * len(accs)
    invoked = invoked if invoked is not None else [True] * len(accs)
    return RunLog([RunRecord(t, d, a, p, g, e)
                   for t, (a, p, g, e) in enumerate(zip(accs, preds, invoked,
                                                        elapsed))])


# ---------------------------------------------------------------- naming

def test_approach_names_frozen():
    assert APPROACHES == ("baseline", "onmar_knn", "onmar_rf", "onmar_gbt",
                          "offmar_knn", "offmar_rf", "offmar_gbt")


def test_approach_learner_kind():
    assert approach_learner_kind("baseline", "gbt") == "gbt"
    assert approach_learner_kind("onmar_knn", "gbt") == "knn"
    assert approach_learner_kind("offmar_rf", "gbt") == "rf"
    assert approach_learner_kind("onmar_gbt", "knn") == "gbt"


# ---------------------------------------------------------------- specs

def test_dataset_spec_round_trip():
    spec = DatasetSpec(kind="blobs", n=50, k_true=3, d=2, separation=4.0)
    assert DatasetSpec.from_dict(spec.to_dict()) == spec
    csv_spec = DatasetSpec(kind="csv", path="/tmp/x.csv")
    assert DatasetSpec.from_dict(csv_spec.to_dict()) == csv_spec


def test_dataset_spec_from_string():
    spec = DatasetSpec.from_string("blobs:50,3,2,4.0")
    assert (spec.n, spec.k_true, spec.d, spec.separation) == (50, 3, 2, 4.0)
    assert DatasetSpec.from_string("csv:/tmp/x.csv").path == "/tmp/x.csv"
    for bad in ("blobs:1,2", "parquet:x", "blobs", ""):
        with pytest.raises(ValueError):
            DatasetSpec.from_string(bad)


def test_dataset_spec_validation():
    with pytest.raises(ValueError):
        DatasetSpec(kind="csv")
    with pytest.raises(ValueError):
        DatasetSpec(kind="weird")


def test_dataset_spec_label():
    assert TINY_DATASET.label() == "blobs_n16_k2_d2_sep8"
    assert DatasetSpec(kind="csv", path="/data/iris.csv").label() == "iris"


def test_dataset_spec_realise_deterministic():
    a = TINY_DATASET.realise(42)
    b = TINY_DATASET.realise(42)
    c = TINY_DATASET.realise(43)
    assert np.array_equal(a.features, b.features)
    assert not np.array_equal(a.features, c.features)


def test_experiment_spec_json_round_trip():
    spec = tiny_spec(["baseline", "onmar_knn"], repeats=2)
    back = ExperimentSpec.from_json(spec.to_json())
    assert back.approaches == spec.approaches
    assert back.dataset == spec.dataset
    assert back.repeats == 2
    assert back.run_config == spec.run_config
    assert back.n_landscape_samples == 8


def test_experiment_spec_validation():
    with pytest.raises(ValueError):
        tiny_spec([])
    with pytest.raises(ValueError):
        tiny_spec(["onmar_svm"])
    with pytest.raises(ValueError):
        tiny_spec(["baseline", "baseline"])
    with pytest.raises(ValueError):
        tiny_spec(["baseline"], repeats=0)
    with pytest.raises(ValueError):
        tiny_spec(["baseline"], workers=0)


# ---------------------------------------------------------------- traces

def test_accuracy_gain_per_second():
    assert accuracy_gain_per_second(mk_log([0.2, 0.8], [1.0, 3.0])) == pytest.approx(0.15)
    assert accuracy_gain_per_second(RunLog()) == 0.0
    assert accuracy_gain_per_second(mk_log([0.2, 0.8], [0.0, 0.0])) == 0.0


def test_accuracy_at_seconds_hand_trace():
    log = mk_log([0.2, 0.5, 0.9], [1.0, 1.0, 1.0])  # completes at t = 1, 2, 3
    got = accuracy_at_seconds(log, [0.5, 1.0, 2.5, 3.0, 99.0])
    assert got.tolist() == [0.2, 0.2, 0.5, 0.9, 0.9]
    with pytest.raises(ValueError):
        accuracy_at_seconds(RunLog(), [1.0])


def test_accuracy_per_second_normalisation():
    logs = {"slow": [mk_log([0.2, 0.4], [1.0, 1.0])],
            "fast": [mk_log([0.2, 0.8], [1.0, 1.0])],
            "mid": [mk_log([0.2, 0.6], [1.0, 1.0])]}
    out = accuracy_per_second(logs)
    assert out["fast"] == pytest.approx(1.0)
    assert out["slow"] == pytest.approx(0.0)
    assert 0.0 < out["mid"] < 1.0


def test_accuracy_per_second_degenerate_collapses():
    logs = {"a": [mk_log([0.2, 0.4], [1.0, 1.0])],
            "b": [mk_log([0.3, 0.5], [1.0, 1.0])]}
    out = accuracy_per_second(logs)  # identical gains either side
    assert out == {"a": 0.0, "b": 0.0}
    assert accuracy_per_second({"only": []}) == {"only": 0.0}


# ---------------------------------------------------------------- diagnostics

def test_diagnostics_flags_persistent_gap():
    n = 12
    accs = [0.3] * n
    preds = [0.8] * n
    invoked = [False] * n
    series, flag = diagnostics_predicted_vs_actual(mk_log(accs, None, preds, invoked),
                                                   delta=0.2, window=10)
    assert flag
    assert np.allclose(series, 0.5)


def test_diagnostics_engine_invocation_breaks_streak():
    n = 12
    accs = [0.3] * n
    preds = [0.8] * n
    invoked = [False] * n
    invoked[5] = True  # resets the streak midway
    _, flag = diagnostics_predicted_vs_actual(mk_log(accs, None, preds, invoked),
                                              delta=0.2, window=10)
    assert not flag


def test_diagnostics_missing_predictions_break_streak():
    n = 12
    accs = [0.3] * n
    preds: list = [0.8] * n
    preds[5] = None
    invoked = [False] * n
    series, flag = diagnostics_predicted_vs_actual(mk_log(accs, None, preds, invoked),
                                                   delta=0.2, window=10)
    assert not flag
    assert math.isnan(series[5])


def test_diagnostics_small_gap_never_flags():
    n = 20
    accs = [0.5] * n
    preds = [0.6] * n  # gap 0.1 <= delta
    invoked = [False] * n
    series, flag = diagnostics_predicted_vs_actual(mk_log(accs, None, preds, invoked),
                                                   delta=0.2, window=5)
    assert not flag
    assert np.allclose(series, 0.1)


def test_diagnostics_window_edge():
    n = 10
    accs = [0.3] * n
    preds = [0.8] * n
    invoked = [False] * n
    _, flag = diagnostics_predicted_vs_actual(mk_log(accs, None, preds, invoked),
                                              delta=0.2, window=10)
    assert flag  # exactly window consecutive gaps
    _, flag9 = diagnostics_predicted_vs_actual(
        mk_log(accs[:9], None, preds[:9], invoked[:9]), delta=0.2, window=10)
    assert not flag9


# ---------------------------------------------------------------- execution

def folds_for(seed=5):
    dataset = TINY_DATASET.realise(seed)
    return stratified_two_folds(dataset, rngmod.child_rng(seed, rngmod.FOLD))


@pytest.mark.parametrize("approach", ["baseline", "onmar_knn", "offmar_gbt"])
def test_execute_approach_families(approach):
    fold1, fold2 = folds_for()
    kind = approach_learner_kind(approach, "knn")
    run = execute_approach(approach, tiny_config(kind), fold1, fold2,
                           n_landscape_samples=8)
    assert run.approach == approach
    assert len(run.runlog) == 4  # timesteps 0..3
    assert 0.0 <= run.final_accuracy <= 1.0
    assert run.wall_seconds > 0.0
    if approach.startswith("offmar"):
        assert run.phase1_log is not None
        assert len(run.phase1_log) == 4
        assert run.ga_invocations == 4  # engine ran only in phase 1
        assert run.runlog.ga_invocations() == 0
    else:
        assert run.phase1_log is None
        assert run.ga_invocations == run.runlog.ga_invocations()
    repo = json.loads(run.repository_json)
    assert len(repo["entries"]) == 4


def test_baseline_invokes_engine_every_timestep():
    fold1, fold2 = folds_for()
    run = execute_approach("baseline", tiny_config(), fold1, fold2, 8)
    assert run.ga_invocations == len(run.runlog)
    for r in run.runlog:
        assert r.ga_invoked


def test_baseline_threshold_is_unreachable():
    assert BASELINE_THETA_P > 1.0


def test_onmar_never_exceeds_baseline_invocations():
    fold1, fold2 = folds_for()
    base = execute_approach("baseline", tiny_config(), fold1, fold2, 8)
    onm = execute_approach("onmar_knn", tiny_config(), fold1, fold2, 8)
    assert onm.runlog.ga_invocations() <= base.runlog.ga_invocations()


def test_execute_approach_deterministic():
    fold1, fold2 = folds_for()
    a = execute_approach("onmar_knn", tiny_config(), fold1, fold2, 8)
    b = execute_approach("onmar_knn", tiny_config(), fold1, fold2, 8)
    assert a.runlog.fingerprint() == b.runlog.fingerprint()
    assert a.repository_json == b.repository_json


def test_execute_approach_rejects_unknown():
    fold1, fold2 = folds_for()
    with pytest.raises(ValueError):
        execute_approach("magic", tiny_config(), fold1, fold2, 8)


# ---------------------------------------------------------------- sweeps

def test_run_experiment_single_repeat(tmp_path):
    out = tmp_path / "results"
    spec = tiny_spec(["baseline", "onmar_knn"], repeats=1, out_dir=str(out))
    report = run_experiment(spec)
    assert report.repeats == 1
    assert set(report.samples) == {"baseline", "onmar_knn"}
    assert all(len(v) == 1 for v in report.samples.values())
    assert report.incomplete == {"baseline": [], "onmar_knn": []}
    # single-sample cells cannot reject anything
    assert all(p == 1.0 for p in report.pairwise_p.values())

    label = TINY_DATASET.label()
    for approach in ("baseline", "onmar_knn"):
        run_dir = out / f"{approach}__{label}" / "run_000"
        assert (run_dir / "runlog.jsonl").exists()
        assert (run_dir / "repository.json").exists()
        meta = json.loads((run_dir / "meta.json").read_text())
        assert meta["approach"] == approach
        assert meta["total_timesteps"] == 3
    assert (out / "report.json").exists()
    assert (out / "samples.csv").exists()
    assert (out / "pairwise.csv").exists()
    assert (out / "ranks.csv").exists()


def test_run_experiment_offmar_persists_phase1(tmp_path):
    out = tmp_path / "results"
    spec = tiny_spec(["offmar_knn"], repeats=1, out_dir=str(out))
    run_experiment(spec)
    run_dir = out / f"offmar_knn__{TINY_DATASET.label()}" / "run_000"
    assert (run_dir / "phase1.jsonl").exists()


def test_report_json_round_trip(tmp_path):
    spec = tiny_spec(["baseline", "onmar_knn"], repeats=2)
    report = run_experiment(spec)
    back = ComparisonReport.from_json(report.to_json())
    assert back.fingerprint() == report.fingerprint()
    assert back.samples == report.samples


def test_aggregate_results_dir_matches_live_report(tmp_path):
    out = tmp_path / "results"
    spec = tiny_spec(["baseline", "onmar_knn"], repeats=2, out_dir=str(out))
    live = run_experiment(spec)
    rebuilt = aggregate_results_dir(out)
    assert rebuilt.fingerprint() == live.fingerprint()


def test_aggregate_results_dir_requires_runs(tmp_path):
    with pytest.raises(FileNotFoundError):
        aggregate_results_dir(tmp_path)


def test_run_experiment_workers_equivalent(tmp_path):
    seq = run_experiment(tiny_spec(["baseline", "onmar_knn"], repeats=2, workers=1))
    par = run_experiment(tiny_spec(["baseline", "onmar_knn"], repeats=2, workers=2))
    assert par.fingerprint() == seq.fingerprint()


def test_run_experiment_shared_folds_per_repeat(tmp_path):
    out = tmp_path / "results"
    spec = tiny_spec(["baseline", "onmar_knn"], repeats=1, out_dir=str(out))
    run_experiment(spec)
    metas = [json.loads((out / f"{a}__{TINY_DATASET.label()}" / "run_000"
                         / "meta.json").read_text())
             for a in ("baseline", "onmar_knn")]
    assert metas[0]["seed"] == metas[1]["seed"]  # same repeat, same seed


def test_write_report_tables_contents(tmp_path):
    report = run_experiment(tiny_spec(["baseline", "onmar_knn"], repeats=1))
    write_report_tables(report, tmp_path)
    samples = (tmp_path / "samples.csv").read_text().strip().splitlines()
    assert samples[0] == "approach,repeat,final_accuracy,wall_seconds,ga_invocations"
    assert len(samples) == 3  # header + one row per (approach, repeat)
    ranks = (tmp_path / "ranks.csv").read_text().strip().splitlines()
    assert len(ranks) == 3
