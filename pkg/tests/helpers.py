"""Independent oracles and lightweight fakes shared across the test suite.

Everything here is deliberately written from first principles (itertools
enumeration, scipy distance kernels, naive loops) rather than by calling the
package under test, so agreement is evidence and not tautology.
"""
from __future__ import annotations

import itertools
from math import comb

import numpy as np
from scipy.spatial.distance import cdist

from rtautoml.designs import CategoricalGene, Design, GeneSchema, NumericGene
from rtautoml.metafeatures import MetaFeatureVector


def pair_count_u(a, b) -> float:
    """U statistic of sample a by direct pair counting (ties count half)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    gt = (a[:, None] > b[None, :]).sum()
    eq = (a[:, None] == b[None, :]).sum()
    return float(gt) + 0.5 * float(eq)


def mwu_enumeration_oracle(a, b, alternative: str) -> float:
    """Exact MWU p-value by enumerating every split of the pooled values."""
    a = list(map(float, a))
    b = list(map(float, b))
    pool = a + b
    n1 = len(a)
    observed = pair_count_u(a, b)
    total = comb(len(pool), n1)
    le = ge = 0
    for idx in itertools.combinations(range(len(pool)), n1):
        chosen = [pool[i] for i in idx]
        rest = [pool[i] for i in range(len(pool)) if i not in set(idx)]
        u = pair_count_u(chosen, rest)
        if u <= observed:
            le += 1
        if u >= observed:
            ge += 1
    p_less = le / total
    p_greater = ge / total
    if alternative == "less":
        return p_less
    if alternative == "greater":
        return p_greater
    return min(1.0, 2.0 * min(p_less, p_greater))


def exhaustive_mapping_accuracy(pred, truth) -> float:
    """Best correct fraction over all injective cluster-to-class mappings."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    pv = np.unique(pred)
    tv = np.unique(truth)
    best = 0
    if len(pv) <= len(tv):
        for assign in itertools.permutations(tv, len(pv)):
            hit = sum(int(np.sum((pred == p) & (truth == t)))
                      for p, t in zip(pv, assign))
            best = max(best, hit)
    else:
        for assign in itertools.permutations(pv, len(tv)):
            hit = sum(int(np.sum((pred == p) & (truth == t)))
                      for p, t in zip(assign, tv))
            best = max(best, hit)
    return best / len(pred)


def brute_knn_regression(train_x, train_y, query, k: int) -> float:
    """kNN mean with z-scored features, stable index tie-break, via cdist."""
    X = np.asarray(train_x, dtype=float)
    y = np.asarray(train_y, dtype=float)
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std == 0, 1.0, std)
    Z = (X - mean) / std
    zq = (np.asarray(query, dtype=float) - mean) / std
    d = cdist(zq[None, :], Z, metric="sqeuclidean")[0]
    order = sorted(range(len(y)), key=lambda i: (d[i], i))
    return float(np.mean(y[order[: min(k, len(y))]]))


def lloyd_iteration(X, centroids):
    """One textbook Lloyd step: nearest-centroid labels, then member means.

    Returns (labels, new_centroids, had_empty); empty clusters keep their
    centroid (the package repairs them instead, so callers skip such draws).
    """
    X = np.asarray(X, dtype=float)
    C = np.asarray(centroids, dtype=float)
    labels = np.argmin(cdist(X, C, metric="euclidean"), axis=1)
    new_c = C.copy()
    had_empty = False
    for j in range(len(C)):
        members = X[labels == j]
        if len(members) == 0:
            had_empty = True
        else:
            new_c[j] = members.mean(axis=0)
    return labels, new_c, had_empty


# --- fakes for fast controller tests -----------------------------------------

FAKE_SCHEMA_ID = "fake-v1"


def fake_schema() -> GeneSchema:
    return GeneSchema(FAKE_SCHEMA_ID, (
        CategoricalGene("op", ("a", "b", "c")),
        NumericGene("x", 0.0, 1.0),
    ))


class FakeState:
    def __init__(self, t: int = 0):
        self.t = t


def deterministic_perf(t: int, design: Design, rng) -> float:
    """Seed-independent performance in [0.2, 0.8], varying with t."""
    return 0.2 + 0.6 * ((t * 37) % 10) / 10.0


def seeded_perf(t: int, design: Design, rng) -> float:
    """Performance drawn from the step stream, so different seeds diverge."""
    return float(rng.random())


class FakeApp:
    """App stub satisfying the controller protocol without clustering work."""

    def __init__(self, perf_fn=deterministic_perf):
        self._schema = fake_schema()
        self.perf_fn = perf_fn

    @property
    def schema(self) -> GeneSchema:
        return self._schema

    def initial_state(self, dataset, rng) -> FakeState:
        rng.random()  # consume the init stream like the real app does
        return FakeState(0)

    def step(self, state, design, dataset, rng):
        perf = float(self.perf_fn(state.t, design, rng))
        return FakeState(state.t + 1), perf

    def fitness_fn(self, state, dataset, timestep, seed):
        def fitness(design: Design) -> float:
            return (design.genes[0] / 2.0 + design.genes[1]) / 2.0

        return fitness


class FakeExtractor:
    """Emits a deterministic 3-feature vector per timestep."""

    schema = ("f0", "f1", "f2")

    def extract(self, dataset, state, design, timestep, rng) -> MetaFeatureVector:
        values = np.array([float(timestep), float(timestep % 5), 1.0])
        return MetaFeatureVector(values, self.schema, np.ones(3, dtype=bool))


class FakeEngine:
    """Proposes schema samples and counts invocations."""

    def __init__(self, schema: GeneSchema):
        self.schema = schema
        self.invocations = 0

    def propose(self, fitness_fn, rng) -> Design:
        self.invocations += 1
        return self.schema.sample(rng)


class BadEngine:
    """Proposes an out-of-domain design to exercise the abort path."""

    def propose(self, fitness_fn, rng) -> Design:
        return Design(FAKE_SCHEMA_ID, (99, 0.5))
