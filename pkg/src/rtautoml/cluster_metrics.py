"""Clustering comparison metrics.

External and internal validity indices delegate to sklearn (they are the
standard published definitions); pair statistics, contingency features,
centroid distances, size-distribution PMF fits, and optimal-assignment
accuracy are implemented here. Degenerate inputs yield NaN so the feature
extractor can apply its sentinel policy.
"""
from __future__ import annotations

import math
import warnings

import numpy as np
from scipy.optimize import brentq, linear_sum_assignment
from scipy.special import betaln, zeta as _zeta
from sklearn import metrics as _skm

from .distances import pairwise_distances

PMF_KEYS = ("pmf_bernoulli", "pmf_laplace", "pmf_zeta", "pmf_poisson", "pmf_planck",
            "pmf_log_series", "pmf_yule_simon")
CENTROID_METRICS = ("cosine", "euclidean", "minkowski_p3", "manhattan")


def _as_labels(a) -> np.ndarray:
    arr = np.asarray(a)
    if arr.ndim != 1:
        raise ValueError("label arrays must be 1-d")
    return arr


def _check_pair(pred, truth) -> tuple[np.ndarray, np.ndarray]:
    pred = _as_labels(pred)
    truth = _as_labels(truth)
    if len(pred) != len(truth):
        raise ValueError("pred and truth must have equal length")
    if len(pred) < 2:
        raise ValueError("need at least two instances")
    return pred, truth


def contingency_table(pred, truth) -> np.ndarray:
    """Counts M[i, j] = |pred cluster i intersect true class j| over occupied labels."""
    pred, truth = _check_pair(pred, truth)
    pi = np.unique(pred, return_inverse=True)[1]
    ti = np.unique(truth, return_inverse=True)[1]
    kp = int(pi.max()) + 1
    kt = int(ti.max()) + 1
    return np.bincount(pi * kt + ti, minlength=kp * kt).reshape(kp, kt)


def external_scores(pred, truth) -> dict[str, float]:
    """Truth-referenced agreement indices of a hard clustering."""
    pred, truth = _check_pair(pred, truth)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return {
            "ari": float(_skm.adjusted_rand_score(truth, pred)),
            "ami": float(_skm.adjusted_mutual_info_score(truth, pred)),
            "homogeneity": float(_skm.homogeneity_score(truth, pred)),
            "completeness": float(_skm.completeness_score(truth, pred)),
            "v_measure": float(_skm.v_measure_score(truth, pred)),
            "fowlkes_mallows": float(_skm.fowlkes_mallows_score(truth, pred)),
        }


def internal_scores(features, labels) -> dict[str, float]:
    """Geometry-only scores; degenerate clusterings (k < 2 or k >= n) give NaN.

    Empty clusters are dropped first (labels relabelled over occupied values);
    singleton clusters contribute silhouette 0 per the sklearn convention.
    """
    X = np.asarray(features, dtype=float)
    labels = _as_labels(labels)
    if X.ndim != 2 or len(X) != len(labels):
        raise ValueError("features must be 2-d and aligned with labels")
    inv = np.unique(labels, return_inverse=True)[1]
    k = int(inv.max()) + 1
    out = {"silhouette": math.nan, "davies_bouldin": math.nan, "calinski_harabasz": math.nan}
    if k < 2 or k >= len(labels):
        return out
    with np.errstate(all="ignore"), warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for key, fn in (("silhouette", _skm.silhouette_score),
                        ("davies_bouldin", _skm.davies_bouldin_score),
                        ("calinski_harabasz", _skm.calinski_harabasz_score)):
            try:
                v = float(fn(X, inv))
            except Exception:
                v = math.nan
            out[key] = v if math.isfinite(v) else math.nan
    return out


def pair_confusion(pred, truth) -> np.ndarray:
    """2x2 unordered-pair counts: rows same/diff true class, cols same/diff cluster."""
    M = contingency_table(pred, truth)
    n = int(M.sum())

    def c2(x):
        x = np.asarray(x, dtype=np.int64)
        return x * (x - 1) // 2

    both = int(c2(M).sum())
    same_true = int(c2(M.sum(axis=0)).sum())
    same_pred = int(c2(M.sum(axis=1)).sum())
    total = n * (n - 1) // 2
    return np.array([[both, same_true - both],
                     [same_pred - both, total - same_true - same_pred + both]],
                    dtype=np.int64)


def intersection_cardinalities(pred, truth) -> tuple[np.ndarray, dict[str, float]]:
    """Contingency table plus max/mean/entropy summaries of the table normalised by n."""
    M = contingency_table(pred, truth)
    P = M / M.sum()
    nz = P[P > 0]
    feats = {
        "ix_max": float(P.max()),
        "ix_mean": float(P.mean()),
        "ix_entropy": float(-(nz * np.log(nz)).sum()),
    }
    return M, feats


def centroid_distance_features(centroids) -> dict[str, float]:
    """Mean pairwise centroid distance per metric; hamming over sign-binarised rows."""
    C = np.asarray(centroids, dtype=float)
    if C.ndim != 2 or len(C) < 2:
        raise ValueError("need at least two centroids")
    iu = np.triu_indices(len(C), k=1)
    out = {}
    for m in CENTROID_METRICS:
        D = pairwise_distances(C, C, m)
        out[f"cd_{m}"] = float(np.mean(D[iu]))  # NaN propagates (cosine on zero rows)
    B = (C > 0).astype(float)
    H = np.abs(B[:, None, :] - B[None, :, :]).mean(axis=2)
    out["cd_hamming"] = float(np.mean(H[iu]))
    return out


def _pmf_poisson(lam: float, x: float) -> float:
    return math.exp(-lam + x * math.log(lam) - math.lgamma(x + 1.0)) if lam > 0 else math.nan


def pmf_features(labels) -> dict[str, float]:
    """Moment-fit discrete PMF families to the cluster-size multiset.

    Each family is fit by matching its mean (variance for the centred discrete
    Laplace) to the size distribution and evaluated at the modal cluster size
    (most frequent size, ties to the larger). Fewer than two clusters or
    unfittable moments give NaN for the affected family.
    """
    labels = _as_labels(labels)
    sizes = np.bincount(np.unique(labels, return_inverse=True)[1]).astype(float)
    out = {k: math.nan for k in PMF_KEYS}
    if len(sizes) < 2:
        return out
    n = float(sizes.sum())
    vals, counts = np.unique(sizes, return_counts=True)
    mode = float(vals[counts == counts.max()].max())
    m = float(sizes.mean())
    v = float(sizes.var())

    out["pmf_bernoulli"] = float(sizes.max() / n)
    out["pmf_poisson"] = _pmf_poisson(m, mode)

    lam = math.log1p(1.0 / m)  # discrete exponential on {0,1,...} with mean m
    out["pmf_planck"] = (1.0 - math.exp(-lam)) * math.exp(-lam * mode)

    # discrete Laplace on centred sizes: var = 2p/(1-p)^2
    j = abs(round(mode - m))
    if v > 0:
        p = (v + 1.0 - math.sqrt(2.0 * v + 1.0)) / v
        out["pmf_laplace"] = (1.0 - p) / (1.0 + p) * p ** j
    else:
        out["pmf_laplace"] = 1.0 if j == 0 else 0.0

    if m > 1.0:
        try:
            s = brentq(lambda t: _zeta(t - 1.0) / _zeta(t) - m, 2.0 + 1e-9, 60.0)
            out["pmf_zeta"] = mode ** (-s) / _zeta(s)
        except ValueError:
            pass
        rho = m / (m - 1.0)
        out["pmf_yule_simon"] = rho * math.exp(betaln(mode, rho + 1.0))
        try:
            def ls_mean(p):
                return -p / ((1.0 - p) * math.log1p(-p)) - m
            p = brentq(ls_mean, 1e-12, 1.0 - 1e-12)
            out["pmf_log_series"] = -(p ** mode) / (mode * math.log1p(-p))
        except ValueError:
            pass
    else:
        # every cluster is a singleton: the fitted limits concentrate at 1
        out["pmf_zeta"] = 1.0 if mode == 1.0 else 0.0
        out["pmf_yule_simon"] = 1.0 if mode == 1.0 else 0.0
        out["pmf_log_series"] = 1.0 if mode == 1.0 else 0.0
    return out


def clustering_accuracy(pred, truth) -> float:
    """Best match fraction over injective mappings of clusters onto classes."""
    M = contingency_table(pred, truth)
    r, c = linear_sum_assignment(M, maximize=True)
    return float(M[r, c].sum() / M.sum())
