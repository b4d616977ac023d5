"""Regression trees for the forest and boosting models.

Exact greedy splits on the variance-reduction (SSE) criterion.  Each column
is argsorted once per tree and the sorted index lists are partitioned at
every split, so no re-sorting happens below the root.  Candidate thresholds
are midpoints between consecutive distinct values; ties in the criterion
keep the earliest position of the lowest-index feature, which makes fits
deterministic for a given input and feature sample.
"""

from __future__ import annotations

import numpy as np

from .rng import Stream


class TreeNode:
    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self, value: float | None = None):
        self.feature = -1
        self.threshold = 0.0
        self.left = None
        self.right = None
        self.value = value

    @property
    def is_leaf(self) -> bool:
        return self.left is None


def fit_tree(X: np.ndarray, y: np.ndarray, max_depth: int, min_leaf: int,
             feature_subsample: int | None = None, rng: Stream | None = None) -> TreeNode:
    """Grow one regression tree; `feature_subsample` features are drawn per
    split from `rng` when given (random-forest mode)."""
    n, d = X.shape
    sorted_rows = [np.argsort(X[:, f], kind="stable") for f in range(d)]
    return _build(X, y, sorted_rows, 0, max_depth, min_leaf, feature_subsample, rng)


def _build(X, y, sorted_rows, depth, max_depth, min_leaf, feature_subsample, rng):
    rows = sorted_rows[0]
    n = rows.shape[0]
    ys_any = y[rows]
    total = float(ys_any.sum())
    total2 = float((ys_any * ys_any).sum())
    mean = total / n
    sse_parent = total2 - total * total / n

    node = TreeNode(value=mean)
    if depth >= max_depth or n < 2 * min_leaf or sse_parent <= 1e-12:
        return node

    d = len(sorted_rows)
    if feature_subsample is not None and feature_subsample < d:
        candidates = sorted(rng.sample_without_replacement(d, feature_subsample))
    else:
        candidates = range(d)

    best_sse = sse_parent
    best = None  # (feature, position, threshold)
    for f in candidates:
        idx = sorted_rows[f]
        xs = X[idx, f]
        ys = y[idx]
        boundaries = np.flatnonzero(xs[:-1] < xs[1:])
        boundaries = boundaries[(boundaries >= min_leaf - 1) & (boundaries <= n - min_leaf - 1)]
        if boundaries.size == 0:
            continue
        cy = np.cumsum(ys)
        cy2 = np.cumsum(ys * ys)
        nl = (boundaries + 1).astype(np.float64)
        nr = n - nl
        sse_left = cy2[boundaries] - cy[boundaries] ** 2 / nl
        sse_right = (cy2[-1] - cy2[boundaries]) - (cy[-1] - cy[boundaries]) ** 2 / nr
        sse = sse_left + sse_right
        local = int(np.argmin(sse))
        if sse[local] < best_sse:
            best_sse = float(sse[local])
            pos = int(boundaries[local])
            best = (f, pos, (xs[pos] + xs[pos + 1]) / 2.0)

    if best is None:
        return node
    f, pos, threshold = best
    left_ids = sorted_rows[f][:pos + 1]
    membership = np.zeros(X.shape[0], dtype=bool)
    membership[left_ids] = True
    left_sorted = []
    right_sorted = []
    for g in range(d):
        arr = sorted_rows[g]
        mask = membership[arr]
        left_sorted.append(arr[mask])
        right_sorted.append(arr[~mask])

    node.feature = f
    node.threshold = float(threshold)
    node.left = _build(X, y, left_sorted, depth + 1, max_depth, min_leaf,
                       feature_subsample, rng)
    node.right = _build(X, y, right_sorted, depth + 1, max_depth, min_leaf,
                        feature_subsample, rng)
    return node


def predict_tree(root: TreeNode, X: np.ndarray) -> np.ndarray:
    out = np.empty(X.shape[0])
    stack = [(root, np.arange(X.shape[0]))]
    while stack:
        node, idx = stack.pop()
        if node.is_leaf:
            out[idx] = node.value
            continue
        go_left = X[idx, node.feature] <= node.threshold
        stack.append((node.left, idx[go_left]))
        stack.append((node.right, idx[~go_left]))
    return out
