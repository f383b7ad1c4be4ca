"""Plain CART trees used by the ensemble meta-learners."""
from __future__ import annotations

import numpy as np


class TreeNode:
    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self, feature=None, threshold=None, left=None, right=None, value=None):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right
        self.value = value

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


def _best_split_regression(X, y, feats):
    """Maximise sum-of-squares gain over all (feature, threshold) candidates.

    Vectorised across the candidate features at once: sort each column, take
    prefix sums of targets, and score every split position via the identity
    SSE_left + SSE_right = sum(y^2) - (S_l^2/n_l + S_r^2/n_r).
    """
    n = len(y)
    Xs = X[:, feats]
    order = np.argsort(Xs, axis=0, kind="stable")
    xs = np.take_along_axis(Xs, order, axis=0)
    ys = y[order]
    csum = np.cumsum(ys, axis=0)
    total = csum[-1]
    nl = np.arange(1, n, dtype=float)[:, None]
    nr = n - nl
    sl = csum[:-1]
    sr = total[None, :] - sl
    score = sl * sl / nl + sr * sr / nr
    score[xs[1:] <= xs[:-1]] = -np.inf  # no room between equal values
    flat = int(np.argmax(score))
    i, j = divmod(flat, score.shape[1])
    if not np.isfinite(score[i, j]):
        return None
    thr = 0.5 * (xs[i, j] + xs[i + 1, j])
    return int(feats[j]), float(thr)


def _best_split_gini(X, y, feats, n_classes):
    """Maximise the class-purity score sum_c(S_lc^2)/n_l + sum_c(S_rc^2)/n_r."""
    n = len(y)
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), y] = 1.0
    best = None
    best_score = -np.inf
    for f in feats:
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        csum = np.cumsum(onehot[order], axis=0)
        total = csum[-1]
        nl = np.arange(1, n, dtype=float)
        nr = n - nl
        sl = csum[:-1]
        sr = total[None, :] - sl
        score = (sl * sl).sum(axis=1) / nl + (sr * sr).sum(axis=1) / nr
        score[xs[1:] <= xs[:-1]] = -np.inf
        i = int(np.argmax(score))
        if score[i] > best_score:
            best_score = score[i]
            best = (int(f), 0.5 * float(xs[i] + xs[i + 1]))
    if best is None or not np.isfinite(best_score):
        return None
    return best


def fit_tree(X: np.ndarray, y: np.ndarray, max_depth: int,
             rng: np.random.Generator | None = None,
             n_feature_subset: int | None = None,
             classify: bool = False, n_classes: int = 0) -> TreeNode:
    """Grow a CART tree. Regression leaves store means, classification leaves
    the modal class id (ties to the lowest id). A feature subset, when given,
    is redrawn per node from rng."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)

    def leaf(y_node):
        if classify:
            return TreeNode(value=int(np.bincount(y_node, minlength=n_classes).argmax()))
        return TreeNode(value=float(y_node.mean()))

    def grow(X_node, y_node, depth):
        if depth >= max_depth or len(y_node) < 2 or np.all(y_node == y_node[0]):
            return leaf(y_node)
        F = X_node.shape[1]
        if n_feature_subset is not None and n_feature_subset < F and rng is not None:
            feats = np.sort(rng.choice(F, size=n_feature_subset, replace=False))
        else:
            feats = np.arange(F)
        if classify:
            split = _best_split_gini(X_node, y_node, feats, n_classes)
        else:
            split = _best_split_regression(X_node, y_node.astype(float), feats)
        if split is None:
            return leaf(y_node)
        f, thr = split
        mask = X_node[:, f] <= thr
        return TreeNode(feature=f, threshold=thr,
                        left=grow(X_node[mask], y_node[mask], depth + 1),
                        right=grow(X_node[~mask], y_node[~mask], depth + 1))

    return grow(X, y, 0)


def tree_predict(node: TreeNode, X: np.ndarray) -> np.ndarray:
    """Vectorised traversal; returns one value per row of X."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = np.empty(len(X))

    def fill(nd, idx):
        if nd.is_leaf:
            out[idx] = nd.value
            return
        mask = X[idx, nd.feature] <= nd.threshold
        fill(nd.left, idx[mask])
        fill(nd.right, idx[~mask])

    fill(node, np.arange(len(X)))
    return out


def tree_to_dict(node: TreeNode) -> dict:
    if node.is_leaf:
        return {"value": node.value}
    return {"feature": node.feature, "threshold": node.threshold,
            "left": tree_to_dict(node.left), "right": tree_to_dict(node.right)}


def tree_from_dict(d: dict) -> TreeNode:
    if "value" in d:
        return TreeNode(value=d["value"])
    return TreeNode(feature=d["feature"], threshold=d["threshold"],
                    left=tree_from_dict(d["left"]), right=tree_from_dict(d["right"]))
