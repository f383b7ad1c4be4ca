"""Composable clustering application.

The chromosome composes one clustering iteration from interchangeable parts:
distance measure, centroid initialisation, assignment rule, update rule, k,
and a learning rate. A design executes exactly one iteration per timestep,
continuing from the carried state; changing k re-initialises centroids with
the design's own initialisation technique.
"""
from __future__ import annotations

import csv as _csv
import json
import zlib
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import rng as rngmod
from .cluster_metrics import clustering_accuracy
from .designs import CategoricalGene, Design, GeneSchema, NumericGene
from .distances import pairwise_distances

CLUSTER_SCHEMA_ID = "cluster-v1"
DISTANCE_GENE, INIT_GENE, ASSIGN_GENE, UPDATE_GENE, K_GENE, ETA_GENE = range(6)

DEFAULT_TOTAL_TIMESTEPS = 100


class DatasetFormatError(ValueError):
    pass


def build_cluster_schema() -> GeneSchema:
    return GeneSchema(CLUSTER_SCHEMA_ID, (
        CategoricalGene("distance", ("euclidean", "manhattan", "cosine", "minkowski_p3")),
        CategoricalGene("init", ("uniform_random", "sample_points", "spread_maximal")),
        CategoricalGene("assignment", ("hard_nearest", "softmax_weighted")),
        CategoricalGene("update", ("mean", "median", "online_eta")),
        NumericGene("k", 2, 10, integer=True),
        NumericGene("eta", 0.01, 0.5),
    ))


_SCHEMA = build_cluster_schema()


def design_metric(design: Design) -> str:
    return _SCHEMA.genes[DISTANCE_GENE].options[design.genes[DISTANCE_GENE]]


def design_init(design: Design) -> str:
    return _SCHEMA.genes[INIT_GENE].options[design.genes[INIT_GENE]]


def design_assignment(design: Design) -> str:
    return _SCHEMA.genes[ASSIGN_GENE].options[design.genes[ASSIGN_GENE]]


def design_update(design: Design) -> str:
    return _SCHEMA.genes[UPDATE_GENE].options[design.genes[UPDATE_GENE]]


def design_k(design: Design) -> int:
    return int(design.genes[K_GENE])


def design_eta(design: Design) -> float:
    return float(design.genes[ETA_GENE])


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    features: np.ndarray
    labels: np.ndarray
    name: str = "dataset"

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        y = np.asarray(self.labels)
        if X.ndim != 2 or y.ndim != 1 or len(X) != len(y):
            raise ValueError("features must be (n, d) aligned with 1-d labels")
        if len(X) < 2:
            raise ValueError("need at least two instances")
        if not np.all(np.isfinite(X)):
            raise ValueError("features must be finite")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y.astype(np.int64))

    def __len__(self) -> int:
        return len(self.labels)


@dataclass(frozen=True, eq=False)
class Clustering:
    assignments: np.ndarray
    centroids: np.ndarray
    k: int


@dataclass(frozen=True, eq=False)
class ClusterState:
    clustering: Clustering
    iteration: int


def init_centroids(design: Design, dataset: LabeledDataset,
                   rng: np.random.Generator) -> np.ndarray:
    """Initial (k, d) centroids by the design's initialisation technique."""
    X = dataset.features
    k = design_k(design)
    tech = design_init(design)
    if tech == "uniform_random":
        lo = X.min(axis=0)
        hi = X.max(axis=0)
        return lo + rng.random((k, X.shape[1])) * (hi - lo)
    if tech == "sample_points":
        idx = rng.choice(len(X), size=k, replace=k > len(X))
        return X[idx].copy()
    if tech == "spread_maximal":
        chosen = [int(rng.integers(len(X)))]
        dmin = np.linalg.norm(X - X[chosen[0]], axis=1)
        for _ in range(k - 1):
            nxt = int(np.argmax(dmin))
            chosen.append(nxt)
            dmin = np.minimum(dmin, np.linalg.norm(X - X[nxt], axis=1))
        return X[chosen].copy()
    raise ValueError(f"unknown init technique: {tech!r}")


def _assign_with_repair(X: np.ndarray, centroids: np.ndarray,
                        metric: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Assign points to nearest centroids, reseeding empty clusters.

    Repair round: each empty centroid moves to the point farthest from its
    nearest current centroid (ties to the lowest point index), then all points
    reassign. At most k rounds; pathological duplicates may keep a cluster
    empty, which downstream updates tolerate.
    """
    centroids = centroids.copy()
    k = len(centroids)
    labels = np.zeros(len(X), dtype=int)
    D = np.zeros((len(X), k))
    for _ in range(k + 1):
        D = pairwise_distances(X, centroids, metric)
        D = np.nan_to_num(D, nan=np.inf, posinf=np.inf)
        labels = np.argmin(D, axis=1)
        counts = np.bincount(labels, minlength=k)
        empty = np.flatnonzero(counts == 0)
        if len(empty) == 0:
            break
        nearest = D[np.arange(len(X)), labels].copy()
        for j in empty:
            far = int(np.argmax(nearest))
            centroids[j] = X[far]
            nearest[far] = 0.0
    return labels, centroids, D


def app_step(state: ClusterState, design: Design, dataset: LabeledDataset,
             rng: np.random.Generator) -> tuple[ClusterState, float]:
    """Advance the clustering by exactly one iteration of the design.

    A k different from the carried state re-initialises centroids with the
    design's initialisation technique (the only use of rng). Points are then
    (re)assigned under the design's distance, centroids updated by the
    design's update rule, and performance is the optimal-assignment accuracy
    of the new labels against the dataset classes. Inputs are not mutated.
    """
    X = dataset.features
    k = design_k(design)
    carried = state.clustering
    if carried.k != k or carried.centroids.shape != (k, X.shape[1]):
        centroids = init_centroids(design, dataset, rng)
    else:
        centroids = carried.centroids
    metric = design_metric(design)
    labels, centroids, D = _assign_with_repair(X, centroids, metric)
    counts = np.bincount(labels, minlength=k).astype(float)

    update = design_update(design)
    if update == "mean" and design_assignment(design) == "softmax_weighted":
        finite = D[np.isfinite(D)]
        scale = float(finite.mean()) if len(finite) else 0.0
        if scale > 0:
            beta = 3.0 / scale
            W = np.exp(-beta * (D - D.min(axis=1, keepdims=True)))
            W[~np.isfinite(W)] = 0.0
            W /= np.maximum(W.sum(axis=1, keepdims=True), 1e-300)
            mass = np.maximum(W.sum(axis=0), 1e-12)
            new_c = (W.T @ X) / mass[:, None]
        else:
            new_c = _hard_means(X, labels, counts, centroids)
    elif update == "mean":
        new_c = _hard_means(X, labels, counts, centroids)
    elif update == "median":
        new_c = centroids.copy()
        for j in range(k):
            members = X[labels == j]
            if len(members):
                new_c[j] = np.median(members, axis=0)
    elif update == "online_eta":
        eta = design_eta(design)
        means = _hard_means(X, labels, counts, centroids)
        new_c = centroids + eta * (means - centroids)
    else:
        raise ValueError(f"unknown update rule: {update!r}")

    perf = clustering_accuracy(labels, dataset.labels)
    new = ClusterState(Clustering(labels, new_c, k), state.iteration + 1)
    return new, perf


def _hard_means(X, labels, counts, centroids):
    k = len(centroids)
    sums = np.zeros_like(centroids)
    for j in range(X.shape[1]):
        sums[:, j] = np.bincount(labels, weights=X[:, j], minlength=k)
    safe = np.maximum(counts, 1.0)[:, None]
    means = sums / safe
    means[counts == 0] = centroids[counts == 0]  # unrepaired empties keep place
    return means


def ga_fitness_for_timestep(state: ClusterState, dataset: LabeledDataset, timestep: int,
                            seed: int) -> Callable[[Design], float]:
    """Fitness: performance of one app_step lookahead from the carried state.

    Deterministic per design: the step rng derives from (seed, timestep,
    crc32 of the gene tuple), so re-evaluations and caches agree in a run.
    """
    def fitness(design: Design) -> float:
        key = zlib.crc32(json.dumps(design.genes).encode())
        r = rngmod.child_rng(seed, rngmod.FITNESS, timestep, key)
        _, perf = app_step(state, design, dataset, r)
        return perf

    return fitness


class ComposableClustering:
    """Application adapter the run controllers drive."""

    def __init__(self):
        self._schema = build_cluster_schema()

    @property
    def schema(self) -> GeneSchema:
        return self._schema

    def initial_state(self, dataset: LabeledDataset,
                      rng: np.random.Generator) -> ClusterState:
        design = self._schema.default_design()
        centroids = init_centroids(design, dataset, rng)
        labels, centroids, _ = _assign_with_repair(dataset.features, centroids,
                                                   design_metric(design))
        return ClusterState(Clustering(labels, centroids, design_k(design)), 0)

    def step(self, state, design, dataset, rng):
        return app_step(state, design, dataset, rng)

    def fitness_fn(self, state, dataset, timestep, seed):
        return ga_fitness_for_timestep(state, dataset, timestep, seed)


def generate_blobs(n: int, k_true: int, d: int, separation: float,
                   rng: np.random.Generator, name: str | None = None) -> LabeledDataset:
    """Isotropic unit-variance Gaussian blobs with centers >= separation apart.

    Centers are rejection-sampled inside a box that expands when placement
    stalls; class counts are balanced to within one instance and the row
    order is shuffled.
    """
    if n < 2 or k_true < 1 or n < k_true or d < 1 or separation < 0:
        raise ValueError("invalid blob parameters")
    box = max(separation, 1.0) * max(k_true, 2)
    centers: list[np.ndarray] = []
    attempts = 0
    while len(centers) < k_true:
        cand = rng.random(d) * box
        if all(float(np.linalg.norm(cand - c)) >= separation for c in centers):
            centers.append(cand)
        attempts += 1
        if attempts > 1000 * k_true:
            box *= 2.0
            attempts = 0
    counts = [n // k_true + (1 if i < n % k_true else 0) for i in range(k_true)]
    feats = [centers[i] + rng.standard_normal((counts[i], d)) for i in range(k_true)]
    labels = np.concatenate([np.full(counts[i], i) for i in range(k_true)])
    X = np.vstack(feats)
    order = rng.permutation(n)
    return LabeledDataset(X[order], labels[order],
                          name or f"blobs_n{n}_k{k_true}_d{d}_sep{separation:g}")


def stratified_two_folds(dataset: LabeledDataset,
                         rng: np.random.Generator) -> tuple[LabeledDataset, LabeledDataset]:
    """Split into two class-stratified folds; fold 1 takes the ceil half per class."""
    labels = dataset.labels
    idx1: list[np.ndarray] = []
    idx2: list[np.ndarray] = []
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        if len(members) < 2:
            raise ValueError(f"class {cls} has fewer than two instances")
        perm = rng.permutation(members)
        half = (len(members) + 1) // 2
        idx1.append(perm[:half])
        idx2.append(perm[half:])
    i1 = np.sort(np.concatenate(idx1))
    i2 = np.sort(np.concatenate(idx2))
    return (LabeledDataset(dataset.features[i1], labels[i1], dataset.name + "/fold1"),
            LabeledDataset(dataset.features[i2], labels[i2], dataset.name + "/fold2"))


def load_csv(path: str, has_header: bool = False) -> LabeledDataset:
    """Numeric feature columns with a trailing label column.

    Label tokens become integer codes in first-seen order. Ragged rows and
    non-numeric features raise DatasetFormatError with the line number.
    """
    with open(path, newline="") as fh:
        rows = list(_csv.reader(fh))
    start = 1 if has_header else 0
    body = [(i + 1, row) for i, row in enumerate(rows[start:], start=start) if row]
    if not body:
        raise DatasetFormatError(f"{path}: no data rows")
    width = len(body[0][1])
    if width < 2:
        raise DatasetFormatError(f"{path}: need at least one feature column plus labels")
    feats = np.empty((len(body), width - 1))
    codes: dict[str, int] = {}
    labels = np.empty(len(body), dtype=np.int64)
    for r, (ln, row) in enumerate(body):
        if len(row) != width:
            raise DatasetFormatError(f"{path}: line {ln}: expected {width} columns, got {len(row)}")
        for c, tok in enumerate(row[:-1]):
            try:
                feats[r, c] = float(tok)
            except ValueError as e:
                raise DatasetFormatError(f"{path}: line {ln}: non-numeric feature {tok!r}") from e
        labels[r] = codes.setdefault(row[-1].strip(), len(codes))
    return LabeledDataset(feats, labels, name=path)
