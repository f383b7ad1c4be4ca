"""Latin hypercube sampling and clustering-landscape construction."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cluster_metrics import clustering_accuracy
from .distances import pairwise_distances


def latin_hypercube_sample(n_samples: int, bounds, rng: np.random.Generator) -> np.ndarray:
    """n_samples points in the box ``bounds`` (d x 2), one per axis stratum.

    Per dimension a random permutation assigns each sample to a stratum and a
    uniform jitter places it inside, so every column occupies each of the
    n_samples equal strata exactly once.
    """
    bounds = np.asarray(bounds, dtype=float)
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if bounds.ndim != 2 or bounds.shape[1] != 2:
        raise ValueError("bounds must be a (d, 2) array")
    lo, hi = bounds[:, 0], bounds[:, 1]
    if not np.all(hi > lo):
        raise ValueError("each bound must satisfy lo < hi")
    d = len(bounds)
    out = np.empty((n_samples, d))
    for j in range(d):
        cells = rng.permutation(n_samples)
        u = rng.random(n_samples)
        out[:, j] = lo[j] + (cells + u) / n_samples * (hi[j] - lo[j])
    return out


@dataclass(frozen=True, eq=False)
class LandscapeSample:
    """Probe of a clustering landscape: xs rows are flattened centroid sets."""

    xs: np.ndarray
    ys: np.ndarray
    bounds: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        bounds = np.asarray(self.bounds, dtype=float)
        if xs.ndim != 2 or ys.ndim != 1 or len(xs) != len(ys):
            raise ValueError("xs must be (n, d) aligned with 1-d ys")
        if bounds.shape != (xs.shape[1], 2):
            raise ValueError("bounds must be (d, 2)")
        if np.any(xs < bounds[:, 0]) or np.any(xs > bounds[:, 1]):
            raise ValueError("sample points must lie inside bounds")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "bounds", bounds)

    def __len__(self) -> int:
        return len(self.ys)


def centroid_point_accuracy(features, labels, centroids, metric: str) -> float:
    """Accuracy of labelling every instance by its nearest candidate centroid."""
    D = pairwise_distances(features, centroids, metric)
    D = np.nan_to_num(D, nan=np.inf, posinf=np.inf)  # undefined distances never win
    pred = np.argmin(D, axis=1)
    return clustering_accuracy(pred, labels)


def build_landscape_grid(features, labels, k: int, metric: str, n_samples: int,
                         rng: np.random.Generator) -> LandscapeSample:
    """LHS-sample k-centroid sets over the data box and score each by accuracy.

    Constant feature dimensions are widened to [v - 0.5, v + 0.5] so strata
    remain well defined.
    """
    X = np.asarray(features, dtype=float)
    if k < 1:
        raise ValueError("k must be >= 1")
    lo = X.min(axis=0).copy()
    hi = X.max(axis=0).copy()
    flat = hi <= lo
    lo[flat] -= 0.5
    hi[flat] += 0.5
    d = X.shape[1]
    bounds = np.tile(np.column_stack([lo, hi]), (k, 1))
    xs = latin_hypercube_sample(n_samples, bounds, rng)
    ys = np.array([centroid_point_accuracy(X, labels, x.reshape(k, d), metric) for x in xs])
    return LandscapeSample(xs=xs, ys=ys, bounds=bounds)
