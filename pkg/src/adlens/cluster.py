"""k-means++ clustering, WCSS, repeated-fit k selection, cluster profiling.

Distances are squared Euclidean computed by direct elementwise subtraction
(chunked over rows so memory stays bounded); WCSS reduces the per-point
distances with compensated summation.  Assignment ties go to the lowest
cluster index.  Empty clusters are re-seeded to the point currently farthest
from its assigned centroid.  Per-iteration WCSS is asserted non-increasing;
a violation raises RuntimeError rather than returning a bad model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .corpus import Corpus
from .rng import TAG_KMEANS_SEED, TAG_PROFILE_SAMPLE, TAG_SELECT_K, Stream

_CHUNK_ROWS = 2048


@dataclass
class ClusterModel:
    k: int
    centroids: np.ndarray
    assignment: np.ndarray
    wcss: float
    iterations_run: int
    seed: int
    wcss_history: list[float] = field(default_factory=list)


@dataclass
class KSelectionReport:
    k_range: tuple[int, int]
    repeats: int
    mean_wcss: dict[int, float]
    selected_k: int


@dataclass
class ClusterProfile:
    clusters: dict[int, dict]


def _pairwise_sq_dists(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Exact (n, k) squared distances via chunked direct subtraction."""
    n = points.shape[0]
    out = np.empty((n, centroids.shape[0]))
    for start in range(0, n, _CHUNK_ROWS):
        chunk = points[start:start + _CHUNK_ROWS]
        diff = chunk[:, None, :] - centroids[None, :, :]
        out[start:start + _CHUNK_ROWS] = np.einsum("ijk,ijk->ij", diff, diff)
    return out


def _distinct_count(vectors: np.ndarray) -> int:
    return np.unique(vectors, axis=0).shape[0]


def wcss_of(points: np.ndarray, centroids: np.ndarray, assignment: np.ndarray) -> float:
    """Compensated sum of squared distances to assigned centroids."""
    diff = points - centroids[assignment]
    per_point = np.einsum("ij,ij->i", diff, diff)
    return math.fsum(per_point.tolist())


def seed_kmeanspp(vectors: np.ndarray, k: int, rng: Stream) -> np.ndarray:
    """D^2-weighted seeding: first centroid uniform, then proportional to
    squared distance to the nearest chosen centroid."""
    n = vectors.shape[0]
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > _distinct_count(vectors):
        raise ValueError(f"k={k} exceeds the number of distinct points")
    centroids = np.empty((k, vectors.shape[1]))
    first = rng.randint_below(n)
    centroids[0] = vectors[first]
    if k == 1:
        return centroids
    diff = vectors - centroids[0]
    d2 = np.einsum("ij,ij->i", diff, diff)
    for j in range(1, k):
        cumulative = np.cumsum(d2)
        pick = rng.weighted_index(cumulative)
        centroids[j] = vectors[pick]
        diff = vectors - centroids[j]
        d2 = np.minimum(d2, np.einsum("ij,ij->i", diff, diff))
    return centroids


def _seed_uniform(vectors: np.ndarray, k: int, rng: Stream) -> np.ndarray:
    """Baseline seeding: k distinct data points chosen uniformly."""
    n = vectors.shape[0]
    if k > _distinct_count(vectors):
        raise ValueError(f"k={k} exceeds the number of distinct points")
    chosen: list[int] = []
    seen_rows: set[bytes] = set()
    while len(chosen) < k:
        i = rng.randint_below(n)
        key = vectors[i].tobytes()
        if key in seen_rows:
            continue
        seen_rows.add(key)
        chosen.append(i)
    return vectors[chosen].copy()


def fit_kmeans(vectors: np.ndarray, k: int, max_iter: int = 15, seed: int = 0,
               init: str = "kmeans++") -> ClusterModel:
    """Lloyd iterations from a seeded start until assignments stabilize or
    max_iter assignment passes have run."""
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    vectors = np.asarray(vectors, dtype=np.float64)
    rng = Stream(seed).spawn(TAG_KMEANS_SEED)
    if init == "kmeans++":
        centroids = seed_kmeanspp(vectors, k, rng)
    elif init == "random":
        centroids = _seed_uniform(vectors, k, rng)
    else:
        raise ValueError(f"unknown init: {init!r}")

    assignment = None
    wcss_history: list[float] = []
    for iteration in range(1, max_iter + 1):
        d2 = _pairwise_sq_dists(vectors, centroids)
        new_assignment = np.argmin(d2, axis=1)
        nearest = d2[np.arange(len(vectors)), new_assignment]
        wcss = math.fsum(nearest.tolist())
        if wcss_history and not wcss <= wcss_history[-1]:
            raise RuntimeError(
                f"WCSS increased: {wcss_history[-1]!r} -> {wcss!r} at iteration {iteration}"
            )
        wcss_history.append(wcss)
        converged = assignment is not None and np.array_equal(new_assignment, assignment)
        assignment = new_assignment
        if converged or iteration == max_iter:
            break
        sums = np.zeros_like(centroids)
        np.add.at(sums, assignment, vectors)
        counts = np.bincount(assignment, minlength=k).astype(np.float64)
        nonempty = counts > 0
        centroids = centroids.copy()
        centroids[nonempty] = sums[nonempty] / counts[nonempty, None]
        empties = np.flatnonzero(~nonempty)
        if empties.size:
            candidates = nearest.copy()
            for j in empties:
                far = int(np.argmax(candidates))
                centroids[j] = vectors[far]
                candidates[far] = -np.inf

    return ClusterModel(
        k=k,
        centroids=centroids,
        assignment=assignment,
        wcss=wcss_history[-1],
        iterations_run=len(wcss_history),
        seed=seed,
        wcss_history=wcss_history,
    )


def select_k(vectors: np.ndarray, k_range: tuple[int, int] = (2, 50),
             repeats: int = 50, max_iter: int = 15, seed: int = 0,
             threads: int = 1) -> KSelectionReport:
    """Mean final WCSS over `repeats` seeded fits per k; argmin with
    smallest-k tie-break."""
    k_min, k_max = k_range
    if k_min < 1 or k_max < k_min:
        raise ValueError(f"invalid k_range: {k_range}")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    vectors = np.asarray(vectors, dtype=np.float64)
    # k values beyond the distinct-point count are fitted at the cap (their
    # exact optimum, WCSS 0) so wide default ranges work on tiny fixtures.
    distinct = _distinct_count(vectors)

    tasks = [(k, r) for k in range(k_min, k_max + 1) for r in range(repeats)]

    def run(task):
        k, r = task
        sub_seed = Stream(seed).spawn(TAG_SELECT_K, k, r).seed
        return fit_kmeans(vectors, min(k, distinct), max_iter=max_iter, seed=sub_seed).wcss

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, tasks))
    else:
        results = [run(t) for t in tasks]

    mean_wcss: dict[int, float] = {}
    for i, k in enumerate(range(k_min, k_max + 1)):
        values = results[i * repeats:(i + 1) * repeats]
        mean_wcss[k] = math.fsum(values) / repeats

    selected_k = k_min
    best = mean_wcss[k_min]
    for k in range(k_min + 1, k_max + 1):
        if mean_wcss[k] < best:
            best = mean_wcss[k]
            selected_k = k
    return KSelectionReport(
        k_range=(k_min, k_max), repeats=repeats, mean_wcss=mean_wcss, selected_k=selected_k
    )


def profile_clusters(corpus: Corpus, model: ClusterModel, sample_size: int = 50,
                     seed: int = 0) -> ClusterProfile:
    """Per-cluster category/object fractions, mean dimensions, and a uniform
    sample of record ids without replacement."""
    if len(corpus.records) != model.assignment.shape[0]:
        raise ValueError("model was not fitted on this corpus")
    clusters: dict[int, dict] = {}
    for j in range(model.k):
        member_idx = np.flatnonzero(model.assignment == j)
        size = int(member_idx.size)
        if size == 0:
            clusters[j] = {
                "size": 0, "top_categories": [], "top_objects": [],
                "mean_width": None, "mean_height": None, "sample_ids": [],
            }
            continue
        members = [corpus.records[int(i)] for i in member_idx]
        cat_counts: dict[str, int] = {}
        obj_counts: dict[int, int] = {}
        for record in members:
            cat_counts[record.category] = cat_counts.get(record.category, 0) + 1
            for cid in {lab.class_id for lab in record.labels}:
                obj_counts[cid] = obj_counts.get(cid, 0) + 1
        top_categories = sorted(
            ((c, n / size) for c, n in cat_counts.items()), key=lambda p: (-p[1], p[0])
        )
        top_objects = sorted(
            ((o, n / size) for o, n in obj_counts.items()), key=lambda p: (-p[1], p[0])
        )
        rng = Stream(seed).spawn(TAG_PROFILE_SAMPLE, j)
        take = min(sample_size, size)
        sample = rng.sample_without_replacement(size, take)
        clusters[j] = {
            "size": size,
            "top_categories": top_categories,
            "top_objects": top_objects,
            "mean_width": math.fsum(r.width for r in members) / size,
            "mean_height": math.fsum(r.height for r in members) / size,
            "sample_ids": [members[i].id for i in sample],
        }
    return ClusterProfile(clusters=clusters)


def adjusted_rand_index(labels_a, labels_b) -> float:
    """Chance-corrected partition agreement via the pair-counting contingency table."""
    a = list(labels_a)
    b = list(labels_b)
    if len(a) != len(b):
        raise ValueError("label sequences differ in length")
    n = len(a)
    if n == 0:
        raise ValueError("empty labelings")
    table: dict[tuple, int] = {}
    a_sizes: dict = {}
    b_sizes: dict = {}
    for x, y in zip(a, b):
        table[(x, y)] = table.get((x, y), 0) + 1
        a_sizes[x] = a_sizes.get(x, 0) + 1
        b_sizes[y] = b_sizes.get(y, 0) + 1

    def comb2(x: int) -> int:
        return x * (x - 1) // 2

    sum_cells = sum(comb2(c) for c in table.values())
    sum_a = sum(comb2(c) for c in a_sizes.values())
    sum_b = sum(comb2(c) for c in b_sizes.values())
    total = comb2(n)
    expected = sum_a * sum_b / total if total else 0.0
    max_index = (sum_a + sum_b) / 2.0
    if max_index == expected:
        return 1.0
    return (sum_cells - expected) / (max_index - expected)
