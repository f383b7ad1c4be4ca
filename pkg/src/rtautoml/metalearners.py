"""kNN, random forest, and gradient-boosted meta-learners.

Two modes share one surface. ``regress`` maps (meta-features ++ encoded
design) to a performance in [0, 1]; ``design`` maps meta-features to one of
the stored designs. Models serialise to JSON and reload with identical
predictions.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import trees
from .designs import Design, GeneSchema
from .metafeatures import MetaFeatureVector

KINDS = ("knn", "rf", "gbt")
MODES = ("regress", "design")


@dataclass(frozen=True)
class MlParams:
    knn_k: int = 5
    rf_trees: int = 100
    rf_max_depth: int = 8
    gbt_rounds: int = 100
    gbt_learning_rate: float = 0.1
    gbt_max_depth: int = 3

    def __post_init__(self):
        if self.knn_k < 1 or self.rf_trees < 1 or self.rf_max_depth < 0:
            raise ValueError("invalid kNN/forest parameters")
        if self.gbt_rounds < 0 or self.gbt_max_depth < 1:
            raise ValueError("invalid boosting parameters")
        if not 0.0 < self.gbt_learning_rate <= 1.0:
            raise ValueError("gbt_learning_rate must be in (0, 1]")

    def to_dict(self) -> dict:
        return {"knn_k": self.knn_k, "rf_trees": self.rf_trees,
                "rf_max_depth": self.rf_max_depth, "gbt_rounds": self.gbt_rounds,
                "gbt_learning_rate": self.gbt_learning_rate,
                "gbt_max_depth": self.gbt_max_depth}


@dataclass(frozen=True, eq=False)
class TrainingMatrix:
    """Feature rows plus targets (performances or stored-design identifiers)."""

    features: np.ndarray
    targets: np.ndarray
    mode: str
    designs: tuple[Design, ...]
    design_schema: GeneSchema | None = None

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if X.ndim != 2 or len(X) < 1:
            raise ValueError("features must be a non-empty (n, w) matrix")
        if not np.all(np.isfinite(X)):
            raise ValueError("features must be finite")
        if self.mode == "regress":
            t = np.asarray(self.targets, dtype=float)
            if np.any(t < 0) or np.any(t > 1):
                raise ValueError("performance targets must lie in [0, 1]")
        else:
            t = np.asarray(self.targets, dtype=np.int64)
            if not self.designs or t.min() < 0 or t.max() >= len(self.designs):
                raise ValueError("design targets must index the stored designs")
        if len(t) != len(X):
            raise ValueError("targets must align with features")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "targets", t)

    @staticmethod
    def from_repository(repository, schema: GeneSchema, mode: str) -> "TrainingMatrix":
        entries = list(repository)
        if not entries:
            raise ValueError("repository is empty")
        if mode == "regress":
            rows = [np.concatenate([e.meta_features.values, schema.encode(e.design)])
                    for e in entries]
            targets = [e.performance for e in entries]
            return TrainingMatrix(np.vstack(rows), np.asarray(targets), "regress", (),
                                  design_schema=schema)
        ids: dict[tuple, int] = {}
        designs: list[Design] = []
        targets = []
        for e in entries:
            key = e.design.genes
            if key not in ids:
                ids[key] = len(designs)
                designs.append(e.design)
            targets.append(ids[key])
        rows = np.vstack([e.meta_features.values for e in entries])
        return TrainingMatrix(rows, np.asarray(targets), "design", tuple(designs),
                              design_schema=schema)


@dataclass(eq=False)
class MetaLearnerModel:
    kind: str
    mode: str
    params: MlParams
    design_schema: GeneSchema | None
    designs: tuple[Design, ...]
    # kNN state
    feat_mean: np.ndarray | None = None
    feat_scale: np.ndarray | None = None
    rows: np.ndarray | None = None
    targets: np.ndarray | None = None
    # forest / boosting state
    forest: list[trees.TreeNode] = field(default_factory=list)
    base_score: float = 0.0
    boost_trees: list[trees.TreeNode] = field(default_factory=list)
    ovr: list[tuple[float, list[trees.TreeNode]]] = field(default_factory=list)


def fit(kind: str, mode: str, data: TrainingMatrix, params: MlParams | None = None,
        rng: np.random.Generator | None = None) -> MetaLearnerModel:
    """Train a meta-learner of the given kind on the training matrix.

    rng drives forest bootstraps and per-node feature subsets only; kNN and
    boosting are deterministic. Training is a full refit (no warm state).
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if mode != data.mode:
        raise ValueError(f"training matrix was built for mode {data.mode!r}")
    params = params if params is not None else MlParams()
    model = MetaLearnerModel(kind=kind, mode=mode, params=params,
                             design_schema=data.design_schema, designs=data.designs)
    X, y = data.features, data.targets
    if kind == "knn":
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale[scale == 0] = 1.0  # constant columns keep unit scale
        model.feat_mean = mean
        model.feat_scale = scale
        model.rows = (X - mean) / scale
        model.targets = y.copy()
        return model
    if kind == "rf":
        if rng is None:
            rng = np.random.default_rng(0)
        n, F = X.shape
        n_sub = max(1, int(round(math.sqrt(F))))
        n_classes = len(data.designs) if mode == "design" else 0
        for _ in range(params.rf_trees):
            idx = rng.integers(0, n, size=n)
            model.forest.append(trees.fit_tree(X[idx], y[idx], params.rf_max_depth,
                                               rng=rng, n_feature_subset=n_sub,
                                               classify=mode == "design",
                                               n_classes=n_classes))
        return model
    if mode == "regress":
        model.base_score, model.boost_trees = _fit_gbt(X, y.astype(float), params)
    else:
        for c in range(len(data.designs)):
            model.ovr.append(_fit_gbt(X, (y == c).astype(float), params))
    return model


def _fit_gbt(X, y, params: MlParams) -> tuple[float, list[trees.TreeNode]]:
    """Stagewise squared-error boosting from the mean base score."""
    base = float(y.mean())
    pred = np.full(len(y), base)
    fitted: list[trees.TreeNode] = []
    for _ in range(params.gbt_rounds):
        t = trees.fit_tree(X, y - pred, params.gbt_max_depth)
        pred = pred + params.gbt_learning_rate * trees.tree_predict(t, X)
        fitted.append(t)
    return base, fitted


def _gbt_predict(base: float, fitted: list[trees.TreeNode], x: np.ndarray,
                 lr: float) -> float:
    v = base
    for t in fitted:
        v += lr * float(trees.tree_predict(t, x[None, :])[0])
    return v


def _regress_row(model: MetaLearnerModel, mf: MetaFeatureVector,
                 design: Design) -> np.ndarray:
    if model.design_schema is None:
        raise ValueError("model lacks a design schema for regression input")
    return np.concatenate([mf.values, model.design_schema.encode(design)])


def _knn_neighbours(model: MetaLearnerModel, x: np.ndarray) -> np.ndarray:
    z = (x - model.feat_mean) / model.feat_scale
    d2 = ((model.rows - z) ** 2).sum(axis=1)
    order = np.argsort(d2, kind="stable")
    return order[: min(model.params.knn_k, len(order))]


def predict_performance(model: MetaLearnerModel, mf: MetaFeatureVector,
                        design: Design) -> float:
    """Predicted performance of the design under the meta-features, in [0, 1]."""
    if model.mode != "regress":
        raise ValueError("model was fit in design mode")
    x = _regress_row(model, mf, design)
    if model.kind == "knn":
        v = float(np.mean(model.targets[_knn_neighbours(model, x)]))
    elif model.kind == "rf":
        v = float(np.mean([trees.tree_predict(t, x[None, :])[0] for t in model.forest]))
    else:
        v = _gbt_predict(model.base_score, model.boost_trees, x,
                         model.params.gbt_learning_rate)
    return float(min(max(v, 0.0), 1.0))


def predict_design(model: MetaLearnerModel, mf: MetaFeatureVector) -> Design:
    """The stored design the meta-features point to."""
    if model.mode != "design":
        raise ValueError("model was fit in regress mode")
    x = np.asarray(mf.values, dtype=float)
    if model.kind == "knn":
        near = _knn_neighbours(model, x)
        ids = model.targets[near]
        counts = np.bincount(ids, minlength=len(model.designs))
        top = counts.max()
        for i in ids:  # ties go to the nearest neighbour
            if counts[i] == top:
                return model.designs[int(i)]
    if model.kind == "rf":
        votes = np.bincount([int(trees.tree_predict(t, x[None, :])[0])
                             for t in model.forest], minlength=len(model.designs))
        return model.designs[int(votes.argmax())]
    scores = [_gbt_predict(base, fitted, x, model.params.gbt_learning_rate)
              for base, fitted in model.ovr]
    return model.designs[int(np.argmax(scores))]


def staged_train_mse(model: MetaLearnerModel, data: TrainingMatrix) -> np.ndarray:
    """Training MSE after the base score and after each boosting round."""
    if model.kind != "gbt" or model.mode != "regress":
        raise ValueError("staged MSE applies to regress-mode gbt models")
    X = data.features
    y = data.targets.astype(float)
    pred = np.full(len(y), model.base_score)
    mses = [float(np.mean((y - pred) ** 2))]
    for t in model.boost_trees:
        pred = pred + model.params.gbt_learning_rate * trees.tree_predict(t, X)
        mses.append(float(np.mean((y - pred) ** 2)))
    return np.asarray(mses)


def model_to_json(model: MetaLearnerModel) -> str:
    doc: dict = {
        "kind": model.kind,
        "mode": model.mode,
        "params": model.params.to_dict(),
        "design_schema": model.design_schema.to_dict() if model.design_schema else None,
        "designs": [d.to_dict() for d in model.designs],
    }
    if model.kind == "knn":
        doc.update(feat_mean=model.feat_mean.tolist(), feat_scale=model.feat_scale.tolist(),
                   rows=model.rows.tolist(), targets=model.targets.tolist())
    elif model.kind == "rf":
        doc["forest"] = [trees.tree_to_dict(t) for t in model.forest]
    else:
        doc["base_score"] = model.base_score
        doc["boost_trees"] = [trees.tree_to_dict(t) for t in model.boost_trees]
        doc["ovr"] = [{"base": b, "trees": [trees.tree_to_dict(t) for t in ts]}
                      for b, ts in model.ovr]
    return json.dumps(doc)


def model_from_json(text: str) -> MetaLearnerModel:
    doc = json.loads(text)
    params = MlParams(**doc["params"])
    schema = GeneSchema.from_dict(doc["design_schema"]) if doc["design_schema"] else None
    model = MetaLearnerModel(kind=doc["kind"], mode=doc["mode"], params=params,
                             design_schema=schema,
                             designs=tuple(Design.from_dict(d) for d in doc["designs"]))
    if model.kind == "knn":
        model.feat_mean = np.asarray(doc["feat_mean"], dtype=float)
        model.feat_scale = np.asarray(doc["feat_scale"], dtype=float)
        model.rows = np.asarray(doc["rows"], dtype=float)
        tgt = np.asarray(doc["targets"])
        model.targets = tgt.astype(np.int64) if model.mode == "design" else tgt.astype(float)
    elif model.kind == "rf":
        model.forest = [trees.tree_from_dict(t) for t in doc["forest"]]
    else:
        model.base_score = doc["base_score"]
        model.boost_trees = [trees.tree_from_dict(t) for t in doc["boost_trees"]]
        model.ovr = [(o["base"], [trees.tree_from_dict(t) for t in o["trees"]])
                     for o in doc["ovr"]]
    return model
