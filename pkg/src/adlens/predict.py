"""CTR prediction stage: filtering, correlations, features, three model
families, RMSE evaluation.

Records enter modeling when impressions >= 5000 and CTR <= 0.2 (both
boundaries kept).  The three feature sets are [width, height], the raw
embedding, and their concatenation; the target is the unscaled CTR.  The
linear model standardizes columns internally and falls back to a small ridge
on rank deficiency; the forest and boosted trees are grown by trees.py with
seeded substreams so results are reproducible and thread-count independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .corpus import Corpus, ctr
from .rng import TAG_FOREST_TREE, TAG_SPLIT, Stream
from .trees import TreeNode, fit_tree, predict_tree

DIMS_ONLY = "dims_only"
VECTOR_ONLY = "vector_only"
ALL_FEATURES = "all_features"
FEATURE_KINDS = (DIMS_ONLY, VECTOR_ONLY, ALL_FEATURES)

LINEAR = "linear"
RANDOM_FOREST = "random_forest"
BOOSTED_TREES = "boosted_trees"
MODEL_KINDS = (LINEAR, RANDOM_FOREST, BOOSTED_TREES)


@dataclass(frozen=True)
class FeatureSet:
    kind: str
    dimension: int

    @staticmethod
    def for_corpus(kind: str, dim: int) -> "FeatureSet":
        sizes = {DIMS_ONLY: 2, VECTOR_ONLY: dim, ALL_FEATURES: dim + 2}
        if kind not in sizes:
            raise ValueError(f"unknown feature kind: {kind!r}")
        return FeatureSet(kind=kind, dimension=sizes[kind])


@dataclass
class RegressionModel:
    kind: str
    feature_set: FeatureSet | None
    training_meta: dict
    weights: np.ndarray | None = None
    intercept: float | None = None
    trees: list[TreeNode] | None = None
    base_prediction: float | None = None
    shrinkage: float | None = None
    train_losses: list[float] = field(default_factory=list)

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if self.kind == LINEAR:
            return X @ self.weights + self.intercept
        if self.kind == RANDOM_FOREST:
            per_tree = np.stack([predict_tree(t, X) for t in self.trees])
            # fsum per row: the mean is exact and independent of tree order
            return np.array([math.fsum(col) for col in per_tree.T]) / len(self.trees)
        if self.kind == BOOSTED_TREES:
            out = np.full(X.shape[0], self.base_prediction)
            for tree in self.trees:
                out += self.shrinkage * predict_tree(tree, X)
            return out
        raise ValueError(f"unknown model kind: {self.kind!r}")


@dataclass
class EvalReport:
    rmse_test: dict[str, dict[str, float]]
    rmse_train: dict[str, dict[str, float]]
    correlations: dict[str, float]
    split_fraction: float
    seed: int
    n_train: int
    n_test: int


def filter_ads(corpus: Corpus, min_impressions: int = 5000, max_ctr: float = 0.2) -> Corpus:
    """Keep records with impressions >= min_impressions and CTR <= max_ctr."""
    kept = [
        r for r in corpus.records
        if r.impressions >= min_impressions and ctr(r) <= max_ctr
    ]
    return Corpus(records=kept, dim=corpus.dim, num_classes=corpus.num_classes)


def pearson(x, y) -> float:
    """Sample Pearson correlation, clamped into [-1, 1]."""
    xs = [float(v) for v in x]
    ys = [float(v) for v in y]
    if len(xs) != len(ys):
        raise ValueError("series lengths differ")
    n = len(xs)
    if n < 2:
        raise ValueError("need at least 2 observations")
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    sxx = math.fsum((v - mx) ** 2 for v in xs)
    syy = math.fsum((v - my) ** 2 for v in ys)
    if sxx == 0.0 or syy == 0.0:
        raise ValueError("undefined correlation: zero variance")
    sxy = math.fsum((a - mx) * (b - my) for a, b in zip(xs, ys))
    return max(-1.0, min(1.0, sxy / math.sqrt(sxx * syy)))


def build_features(corpus: Corpus, kind: str) -> tuple[np.ndarray, np.ndarray, FeatureSet]:
    """Design matrix plus CTR target in corpus record order."""
    if not corpus.records:
        raise ValueError("no trainable records")
    feature_set = FeatureSet.for_corpus(kind, corpus.dim)
    y = np.array([ctr(r) for r in corpus.records])
    dims = np.array([[r.width, r.height] for r in corpus.records], dtype=np.float64)
    if kind == DIMS_ONLY:
        X = dims
    elif kind == VECTOR_ONLY:
        X = corpus.matrix()
    else:
        X = np.hstack([dims, corpus.matrix()])
    return X, y, feature_set


def split_indices(n: int, fraction: float = 0.8, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Seeded permutation split; ceil(fraction*n) rows train, rest test.

    The train size is clamped into [1, n-1] so both sides stay non-empty.
    """
    if not (0.0 < fraction < 1.0):
        raise ValueError("fraction must be in (0, 1)")
    if n < 2:
        raise ValueError("too few rows to split")
    perm = Stream(seed).spawn(TAG_SPLIT).permutation(n)
    n_train = math.ceil(fraction * n - 1e-9)
    n_train = max(1, min(n_train, n - 1))
    return perm[:n_train], perm[n_train:]


def split(X: np.ndarray, y: np.ndarray, fraction: float = 0.8, seed: int = 0):
    """(X_train, y_train, X_test, y_test) under the seeded permutation split."""
    train_idx, test_idx = split_indices(X.shape[0], fraction, seed)
    return X[train_idx], y[train_idx], X[test_idx], y[test_idx]


def train_linear(X: np.ndarray, y: np.ndarray, ridge_lambda: float = 1e-8,
                 feature_set: FeatureSet | None = None, seed: int = 0) -> RegressionModel:
    """Least squares with intercept on standardized columns; ridge fallback
    with the given lambda when the design is rank deficient."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] == 0:
        raise ValueError("no training rows")
    mu = X.mean(axis=0)
    sigma = X.std(axis=0)
    scale = np.where(sigma > 0, sigma, 1.0)
    Xs = (X - mu) / scale
    ym = y.mean()
    yc = y - ym
    beta_std, _, rank, _ = np.linalg.lstsq(Xs, yc, rcond=None)
    if rank < X.shape[1]:
        gram = Xs.T @ Xs + ridge_lambda * np.eye(X.shape[1])
        beta_std = np.linalg.solve(gram, Xs.T @ yc)
    weights = beta_std / scale
    intercept = ym - float(weights @ mu)
    return RegressionModel(
        kind=LINEAR,
        feature_set=feature_set,
        training_meta={"seed": seed, "ridge_lambda": ridge_lambda, "rank": int(rank)},
        weights=weights,
        intercept=intercept,
    )


def _bootstrap_indices(rng: Stream, n: int) -> np.ndarray:
    draws = rng.uniforms(n) * n
    return np.minimum(draws.astype(np.int64), n - 1)


def train_random_forest(X: np.ndarray, y: np.ndarray, num_trees: int = 100,
                        seed: int = 0, max_depth: int = 6, min_leaf: int = 2,
                        feature_subsample: int | None = None,
                        feature_set: FeatureSet | None = None,
                        threads: int = 1) -> RegressionModel:
    """Bagged trees on bootstrap samples with per-split feature subsampling
    (default max(1, d//3)); prediction is the exact mean over trees."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, d = X.shape
    if n == 0:
        raise ValueError("no training rows")
    if feature_subsample is None:
        feature_subsample = max(1, d // 3)

    def grow(t: int) -> TreeNode:
        rng = Stream(seed).spawn(TAG_FOREST_TREE, t)
        boot = _bootstrap_indices(rng, n)
        return fit_tree(X[boot], y[boot], max_depth, min_leaf, feature_subsample, rng)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trees = list(pool.map(grow, range(num_trees)))
    else:
        trees = [grow(t) for t in range(num_trees)]
    return RegressionModel(
        kind=RANDOM_FOREST,
        feature_set=feature_set,
        training_meta={
            "seed": seed, "num_trees": num_trees, "max_depth": max_depth,
            "min_leaf": min_leaf, "feature_subsample": feature_subsample,
        },
        trees=trees,
    )


def train_boosted_trees(X: np.ndarray, y: np.ndarray, iterations: int = 100,
                        seed: int = 0, max_depth: int = 6, min_leaf: int = 2,
                        shrinkage: float = 0.1,
                        feature_set: FeatureSet | None = None) -> RegressionModel:
    """Gradient boosting on squared loss: trees fit to residuals, scaled by
    the shrinkage, starting from the target mean.  Training MSE is recorded
    per iteration and must never increase."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] == 0:
        raise ValueError("no training rows")
    base = float(y.mean())
    residual = y - base
    trees: list[TreeNode] = []
    losses: list[float] = [float(np.mean(residual ** 2))]
    for _ in range(iterations):
        tree = fit_tree(X, residual, max_depth, min_leaf, None, None)
        residual = residual - shrinkage * predict_tree(tree, X)
        loss = float(np.mean(residual ** 2))
        if not loss <= losses[-1]:
            raise RuntimeError(f"boosting loss increased: {losses[-1]!r} -> {loss!r}")
        losses.append(loss)
        trees.append(tree)
    return RegressionModel(
        kind=BOOSTED_TREES,
        feature_set=feature_set,
        training_meta={
            "seed": seed, "iterations": iterations, "max_depth": max_depth,
            "min_leaf": min_leaf, "shrinkage": shrinkage,
        },
        trees=trees,
        base_prediction=base,
        shrinkage=shrinkage,
        train_losses=losses,
    )


def rmse(predictions, targets) -> float:
    preds = np.asarray(predictions, dtype=np.float64)
    targs = np.asarray(targets, dtype=np.float64)
    if preds.shape != targs.shape:
        raise ValueError("length mismatch between predictions and targets")
    if preds.size == 0:
        raise ValueError("rmse of empty series")
    return math.sqrt(math.fsum(((preds - targs) ** 2).tolist()) / preds.size)


def _train_one(kind: str, X_train, y_train, feature_set, seed, config) -> RegressionModel:
    if kind == LINEAR:
        return train_linear(X_train, y_train, feature_set=feature_set, seed=seed)
    if kind == RANDOM_FOREST:
        return train_random_forest(
            X_train, y_train, num_trees=config.get("forest_trees", 100),
            seed=seed, max_depth=config.get("tree_depth", 6),
            min_leaf=config.get("min_leaf", 2), threads=config.get("threads", 1),
            feature_set=feature_set,
        )
    if kind == BOOSTED_TREES:
        return train_boosted_trees(
            X_train, y_train, iterations=config.get("boost_iterations", 100),
            seed=seed, max_depth=config.get("tree_depth", 6),
            min_leaf=config.get("min_leaf", 2),
            shrinkage=config.get("shrinkage", 0.1), feature_set=feature_set,
        )
    raise ValueError(f"unknown model kind: {kind!r}")


def evaluate_all(corpus: Corpus, seed: int = 0, split_fraction: float = 0.8,
                 min_impressions: int = 5000, max_ctr: float = 0.2,
                 **config) -> EvalReport:
    """Filter, correlate, then train all 3 model kinds x 3 feature sets on
    one shared split; reports held-out and training RMSE for each cell."""
    filtered = filter_ads(corpus, min_impressions=min_impressions, max_ctr=max_ctr)
    if not filtered.records:
        raise ValueError("no trainable records after filtering")
    rates = [ctr(r) for r in filtered.records]
    widths = [r.width for r in filtered.records]
    heights = [r.height for r in filtered.records]
    pixels = [r.width * r.height for r in filtered.records]
    correlations = {
        "width": pearson(widths, rates),
        "height": pearson(heights, rates),
        "pixels": pearson(pixels, rates),
    }
    train_idx, test_idx = split_indices(len(filtered.records), split_fraction, seed)
    rmse_test: dict[str, dict[str, float]] = {}
    rmse_train: dict[str, dict[str, float]] = {}
    for fkind in FEATURE_KINDS:
        X, y, feature_set = build_features(filtered, fkind)
        rmse_test[fkind] = {}
        rmse_train[fkind] = {}
        for mkind in MODEL_KINDS:
            model = _train_one(mkind, X[train_idx], y[train_idx], feature_set, seed, config)
            rmse_test[fkind][mkind] = rmse(model.predict(X[test_idx]), y[test_idx])
            rmse_train[fkind][mkind] = rmse(model.predict(X[train_idx]), y[train_idx])
    return EvalReport(
        rmse_test=rmse_test,
        rmse_train=rmse_train,
        correlations=correlations,
        split_fraction=split_fraction,
        seed=seed,
        n_train=len(train_idx),
        n_test=len(test_idx),
    )
