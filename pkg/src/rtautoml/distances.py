"""Vectorised point-set distance kernels shared by the app, metrics, and features."""
from __future__ import annotations

import numpy as np

METRICS = ("euclidean", "manhattan", "cosine", "minkowski_p3")


def pairwise_distances(X: np.ndarray, C: np.ndarray, metric: str) -> np.ndarray:
    """Distance matrix between rows of X (n x d) and rows of C (m x d).

    Cosine distance is undefined against zero vectors and yields NaN there;
    callers decide whether that means "never assign" or "sentinel".
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    if X.shape[1] != C.shape[1]:
        raise ValueError("dimension mismatch")
    if metric == "euclidean":
        diff = X[:, None, :] - C[None, :, :]
        return np.sqrt(np.sum(diff * diff, axis=2))
    if metric == "manhattan":
        return np.abs(X[:, None, :] - C[None, :, :]).sum(axis=2)
    if metric == "cosine":
        xn = np.linalg.norm(X, axis=1)
        cn = np.linalg.norm(C, axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            sim = (X @ C.T) / (xn[:, None] * cn[None, :])
        out = 1.0 - sim
        out[~np.isfinite(out)] = np.nan
        return out
    if metric == "minkowski_p3":
        diff = np.abs(X[:, None, :] - C[None, :, :])
        return np.cbrt(np.sum(diff * diff * diff, axis=2))
    raise ValueError(f"unknown metric: {metric!r}")
