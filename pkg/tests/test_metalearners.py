from __future__ import annotations

import numpy as np
import pytest

from rtautoml.designs import Design, GeneSchema, NumericGene
from rtautoml.metafeatures import MetaFeatureVector
from rtautoml.metalearners import (KINDS, MODES, MetaLearnerModel, MlParams,
                                   TrainingMatrix, fit, model_from_json,
                                   model_to_json, predict_design,
                                   predict_performance, staged_train_mse)
from rtautoml.trees import TreeNode

from helpers import FAKE_SCHEMA_ID, brute_knn_regression, fake_schema

UNIT_SCHEMA = GeneSchema("unit-v1", (NumericGene("x", 0.0, 1.0),))


def unit_design(x: float) -> Design:
    return Design("unit-v1", (float(x),))


def mf_of(values) -> MetaFeatureVector:
    values = np.asarray(values, dtype=float)
    schema = tuple(f"f{i}" for i in range(len(values)))
    return MetaFeatureVector(values, schema, np.ones(len(values), dtype=bool))


def regress_matrix(rows, targets) -> TrainingMatrix:
    return TrainingMatrix(np.asarray(rows, dtype=float), np.asarray(targets, dtype=float),
                          "regress", (), design_schema=UNIT_SCHEMA)


def design_matrix(rows, targets, designs) -> TrainingMatrix:
    return TrainingMatrix(np.asarray(rows, dtype=float),
                          np.asarray(targets, dtype=np.int64), "design",
                          tuple(designs), design_schema=UNIT_SCHEMA)


# ---------------------------------------------------------------- params

def test_params_defaults():
    p = MlParams()
    assert (p.knn_k, p.rf_trees, p.rf_max_depth) == (5, 100, 8)
    assert (p.gbt_rounds, p.gbt_learning_rate, p.gbt_max_depth) == (100, 0.1, 3)


@pytest.mark.parametrize("kw", [dict(knn_k=0), dict(rf_trees=0), dict(rf_max_depth=-1),
                                dict(gbt_rounds=-1), dict(gbt_max_depth=0),
                                dict(gbt_learning_rate=0.0),
                                dict(gbt_learning_rate=1.5)])
def test_params_validation(kw):
    with pytest.raises(ValueError):
        MlParams(**kw)


# ---------------------------------------------------------------- training matrix

def test_matrix_validation():
    with pytest.raises(ValueError):
        TrainingMatrix(np.zeros((2, 3)), np.zeros(2), "nope", ())
    with pytest.raises(ValueError):
        TrainingMatrix(np.zeros((0, 3)), np.zeros(0), "regress", ())
    with pytest.raises(ValueError):
        TrainingMatrix(np.array([[np.nan]]), np.zeros(1), "regress", ())
    with pytest.raises(ValueError):
        TrainingMatrix(np.zeros((2, 3)), np.array([0.5, 1.5]), "regress", ())
    with pytest.raises(ValueError):
        TrainingMatrix(np.zeros((2, 3)), np.array([0.5]), "regress", ())
    with pytest.raises(ValueError):
        TrainingMatrix(np.zeros((2, 3)), np.array([0, 1]), "design", ())
    with pytest.raises(ValueError):
        TrainingMatrix(np.zeros((2, 3)), np.array([0, 2]), "design",
                       (unit_design(0.1), unit_design(0.2)))


def test_matrix_from_repository():
    from rtautoml.core import KnowledgeEntry, KnowledgeRepository

    schema = fake_schema()
    feat_names = ("f0", "f1", "f2")
    kr = KnowledgeRepository(feat_names, FAKE_SCHEMA_ID)
    d1 = Design(FAKE_SCHEMA_ID, (0, 0.5))
    d2 = Design(FAKE_SCHEMA_ID, (1, 0.25))
    for t, (d, perf) in enumerate([(d1, 0.3), (d2, 0.9), (d1, 0.5)]):
        mfv = MetaFeatureVector(np.array([t, 1.0, 2.0]), feat_names,
                                np.ones(3, dtype=bool))
        kr.append(KnowledgeEntry(mfv, d, perf, t))

    reg = TrainingMatrix.from_repository(kr, schema, "regress")
    assert reg.features.shape == (3, 3 + schema.encoded_width)
    assert reg.targets.tolist() == [0.3, 0.9, 0.5]

    des = TrainingMatrix.from_repository(kr, schema, "design")
    assert des.features.shape == (3, 3)
    assert des.targets.tolist() == [0, 1, 0]  # duplicate design deduplicated
    assert des.designs == (d1, d2)


def test_matrix_from_empty_repository():
    from rtautoml.core import KnowledgeRepository

    kr = KnowledgeRepository(("f0",), FAKE_SCHEMA_ID)
    with pytest.raises(ValueError):
        TrainingMatrix.from_repository(kr, fake_schema(), "regress")


# ---------------------------------------------------------------- knn regression

def test_knn_matches_brute_oracle(rng0):
    for _ in range(20):
        n = int(rng0.integers(4, 12))
        X = rng0.random((n, 4))
        y = rng0.random(n)
        k = int(rng0.integers(1, n + 1))
        model = fit("knn", "regress", regress_matrix(X, y), MlParams(knn_k=k))
        q = rng0.random(4)
        mf = mf_of(q[:3])
        got = predict_performance(model, mf, unit_design(q[3]))
        want = brute_knn_regression(X, y, q, k)
        assert got == pytest.approx(min(max(want, 0.0), 1.0), abs=1e-12)


def test_knn_single_row_returns_its_target():
    model = fit("knn", "regress", regress_matrix([[0.1, 0.2, 0.3, 0.4]], [0.7]))
    got = predict_performance(model, mf_of([9.0, 9.0, 9.0]), unit_design(0.0))
    assert got == pytest.approx(0.7)


def test_knn_k1_recovers_training_targets(rng0):
    X = rng0.random((6, 4))
    y = rng0.random(6)
    model = fit("knn", "regress", regress_matrix(X, y), MlParams(knn_k=1))
    for i in range(6):
        got = predict_performance(model, mf_of(X[i, :3]),
                                  unit_design(X[i, 3]))
        assert got == pytest.approx(y[i], abs=1e-12)


def test_knn_equidistant_pair_averages():
    # encoded rows are [0.0] and [1.0]; the query encodes to 0.5, equidistant
    data = TrainingMatrix(np.array([[0.0], [1.0]]), np.array([0.2, 0.8]),
                          "regress", (), design_schema=UNIT_SCHEMA)
    model = fit("knn", "regress", data, MlParams(knn_k=2))
    got = predict_performance(model, mf_of([]), unit_design(0.5))
    assert got == pytest.approx(0.5)


# ---------------------------------------------------------------- boosting

def test_gbt_zero_rounds_predicts_mean(rng0):
    X = rng0.random((8, 4))
    y = rng0.random(8)
    model = fit("gbt", "regress", regress_matrix(X, y), MlParams(gbt_rounds=0))
    got = predict_performance(model, mf_of(rng0.random(3)),
                              unit_design(rng0.random()))
    assert got == pytest.approx(float(y.mean()))


def test_gbt_staged_mse_non_increasing(rng0):
    X = rng0.random((20, 5))
    y = rng0.random(20)
    data = regress_matrix(X, y)
    model = fit("gbt", "regress", data, MlParams(gbt_rounds=25))
    mses = staged_train_mse(model, data)
    assert len(mses) == 26
    assert np.all(np.diff(mses) <= 1e-12)


def test_staged_mse_requires_gbt_regress(rng0):
    X = rng0.random((5, 4))
    y = rng0.random(5)
    data = regress_matrix(X, y)
    knn = fit("knn", "regress", data)
    with pytest.raises(ValueError):
        staged_train_mse(knn, data)


# ---------------------------------------------------------------- forest

def test_rf_regression_within_target_range(rng0):
    X = rng0.random((15, 4))
    y = rng0.random(15) * 0.6 + 0.2
    model = fit("rf", "regress", regress_matrix(X, y), MlParams(rf_trees=20),
                rng=np.random.default_rng(0))
    for _ in range(5):
        got = predict_performance(model, mf_of(rng0.random(3)),
                                  unit_design(rng0.random()))
        assert y.min() - 1e-12 <= got <= y.max() + 1e-12


def test_rf_deterministic_given_rng(rng0):
    X = rng0.random((10, 4))
    y = rng0.random(10)
    data = regress_matrix(X, y)
    q = (mf_of([0.1, 0.2, 0.3]), unit_design(0.4))
    a = fit("rf", "regress", data, MlParams(rf_trees=10), np.random.default_rng(3))
    b = fit("rf", "regress", data, MlParams(rf_trees=10), np.random.default_rng(3))
    assert predict_performance(a, *q) == predict_performance(b, *q)


# ---------------------------------------------------------------- design mode

def test_single_design_always_returned(rng0):
    d = unit_design(0.3)
    data = design_matrix(rng0.random((4, 3)), [0, 0, 0, 0], [d])
    for kind in KINDS:
        model = fit(kind, "design", data, MlParams(rf_trees=5, gbt_rounds=5),
                    np.random.default_rng(0))
        assert predict_design(model, mf_of(rng0.random(3))).genes == d.genes


def test_knn_k1_design_lookup(rng0):
    rows = rng0.random((5, 3)) * 10.0
    designs = [unit_design(x) for x in (0.1, 0.3, 0.5, 0.7, 0.9)]
    data = design_matrix(rows, [0, 1, 2, 3, 4], designs)
    model = fit("knn", "design", data, MlParams(knn_k=1))
    for i in range(5):
        assert predict_design(model, mf_of(rows[i])).genes == designs[i].genes


def test_knn_vote_tie_goes_to_nearest():
    rows = np.array([[0.0], [1.0]])
    a, b = unit_design(0.2), unit_design(0.8)
    data = design_matrix(rows, [0, 1], [a, b])
    model = fit("knn", "design", data, MlParams(knn_k=2))
    assert predict_design(model, mf_of([0.9])).genes == b.genes
    assert predict_design(model, mf_of([0.1])).genes == a.genes


def test_rf_design_majority_vote():
    a, b = unit_design(0.2), unit_design(0.8)
    leaves = [TreeNode(value=0.0), TreeNode(value=0.0), TreeNode(value=0.0),
              TreeNode(value=1.0), TreeNode(value=1.0)]
    model = MetaLearnerModel(kind="rf", mode="design", params=MlParams(),
                             design_schema=UNIT_SCHEMA, designs=(a, b))
    model.forest = leaves
    assert predict_design(model, mf_of([0.0, 0.0])).genes == a.genes


def test_design_mode_separable_classes(rng0):
    lo = rng0.random((10, 2))
    hi = rng0.random((10, 2)) + 100.0
    rows = np.vstack([lo, hi])
    targets = [0] * 10 + [1] * 10
    designs = [unit_design(0.1), unit_design(0.9)]
    data = design_matrix(rows, targets, designs)
    for kind in KINDS:
        model = fit(kind, "design", data, MlParams(rf_trees=15, gbt_rounds=10),
                    np.random.default_rng(1))
        assert predict_design(model, mf_of([0.5, 0.5])).genes == designs[0].genes
        assert predict_design(model, mf_of([100.5, 100.5])).genes == designs[1].genes


def test_prediction_is_always_a_stored_design(rng0):
    designs = [unit_design(x) for x in (0.1, 0.5, 0.9)]
    data = design_matrix(rng0.random((9, 3)), list(range(3)) * 3, designs)
    stored = {d.genes for d in designs}
    for kind in KINDS:
        model = fit(kind, "design", data, MlParams(rf_trees=7, gbt_rounds=5),
                    np.random.default_rng(2))
        for _ in range(5):
            assert predict_design(model, mf_of(rng0.random(3))).genes in stored


# ---------------------------------------------------------------- surface errors

def test_fit_rejects_unknown_kind_or_mode(rng0):
    data = regress_matrix(rng0.random((3, 4)), rng0.random(3))
    with pytest.raises(ValueError):
        fit("svm", "regress", data)
    with pytest.raises(ValueError):
        fit("knn", "classify", data)
    with pytest.raises(ValueError):
        fit("knn", "design", data)  # matrix was built for regress


def test_mode_mismatch_at_predict(rng0):
    reg = fit("knn", "regress", regress_matrix(rng0.random((3, 4)), rng0.random(3)))
    with pytest.raises(ValueError):
        predict_design(reg, mf_of(rng0.random(3)))
    des = fit("knn", "design", design_matrix(rng0.random((3, 3)), [0, 0, 0],
                                             [unit_design(0.5)]))
    with pytest.raises(ValueError):
        predict_performance(des, mf_of(rng0.random(3)), unit_design(0.5))


# ---------------------------------------------------------------- serialisation

@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("mode", MODES)
def test_json_round_trip(kind, mode, rng0):
    params = MlParams(knn_k=2, rf_trees=5, gbt_rounds=5)
    if mode == "regress":
        data = regress_matrix(rng0.random((8, 4)), rng0.random(8))
    else:
        designs = [unit_design(0.2), unit_design(0.8)]
        data = design_matrix(rng0.random((8, 3)), [0, 1] * 4, designs)
    model = fit(kind, mode, data, params, np.random.default_rng(4))
    back = model_from_json(model_to_json(model))
    assert back.kind == kind and back.mode == mode
    for _ in range(5):
        if mode == "regress":
            mf, d = mf_of(rng0.random(3)), unit_design(rng0.random())
            assert predict_performance(back, mf, d) == pytest.approx(
                predict_performance(model, mf, d), abs=1e-12)
        else:
            mf = mf_of(rng0.random(3))
            assert predict_design(back, mf).genes == predict_design(model, mf).genes
