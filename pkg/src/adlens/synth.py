"""Synthetic ad corpora with planted ground truth.

Every record is generated from its own substream keyed by (seed, record
index), so output is reproducible and independent of generation order.  The
per-record draw layout is fixed and documented in docs/formats.md; changing
it is a format break.

Planted structure:
  * embeddings: isotropic unit Gaussians around cluster centroids placed on
    the first `num_clusters` axes at separation/sqrt(2), giving exact
    pairwise centroid distance `cluster_separation`;
  * top-5 labels: the category's object list is split round-robin into five
    slots and each slot draws one object, so an object's per-ad presence
    probability is exactly its within-slot normalized weight;
  * CTR: linear weights on width/1000, height/1000 and embedding entries,
    plus optional pairwise embedding interaction terms, plus Gaussian noise,
    clamped to [0, 1]; clicks = round-half-to-even(impressions * ctr).
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .corpus import AdRecord, Corpus, ObjectLabel
from .rng import TAG_RECORD, Stream

NUM_SLOTS = 5


@dataclass(frozen=True)
class CtrModel:
    """Planted CTR as a function of (width, height, embedding)."""

    intercept: float = 0.0
    width_weight: float = 0.0
    height_weight: float = 0.0
    vector_weights: tuple[tuple[int, float], ...] = ()
    interactions: tuple[tuple[int, int, float], ...] = ()
    noise_sd: float = 0.0

    def evaluate(self, width: int, height: int, vector: np.ndarray) -> float:
        value = self.intercept
        value += self.width_weight * (width / 1000.0)
        value += self.height_weight * (height / 1000.0)
        for i, w in self.vector_weights:
            value += w * float(vector[i])
        for i, j, w in self.interactions:
            value += w * float(vector[i]) * float(vector[j])
        return value

    def to_dict(self) -> dict:
        return {
            "intercept": self.intercept,
            "width_weight": self.width_weight,
            "height_weight": self.height_weight,
            "vector_weights": [[i, w] for i, w in self.vector_weights],
            "interactions": [[i, j, w] for i, j, w in self.interactions],
            "noise_sd": self.noise_sd,
        }


@dataclass(frozen=True)
class SynthSpec:
    seed: int
    num_records: int
    dim: int
    num_clusters: int
    cluster_separation: float
    categories: tuple[tuple[str, float], ...]
    object_profile: dict[str, tuple[tuple[int, float], ...]]
    ctr_model: CtrModel = CtrModel()
    impressions_range: tuple[int, int] = (5000, 50000)
    width_range: tuple[int, int] = (120, 970)
    height_range: tuple[int, int] = (60, 600)
    num_classes: int = 1000


@dataclass
class PlantedTruth:
    cluster_of: dict[str, int]
    category_object_freq: dict[str, dict[int, float]]
    ctr_weights: CtrModel
    centroids: np.ndarray | None = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {
            "cluster_of": dict(sorted(self.cluster_of.items())),
            "category_object_freq": {
                cat: {str(cid): p for cid, p in sorted(freq.items())}
                for cat, freq in sorted(self.category_object_freq.items())
            },
            "ctr_weights": self.ctr_weights.to_dict(),
        }


def validate_spec(spec: SynthSpec) -> None:
    if spec.num_records < 0:
        raise ValueError("num_records must be >= 0")
    if spec.dim <= 0:
        raise ValueError("dim must be positive")
    if spec.num_clusters < 1:
        raise ValueError("num_clusters must be >= 1")
    if spec.num_clusters > spec.dim:
        raise ValueError("num_clusters must not exceed dim (axis centroid placement)")
    if spec.cluster_separation < 0:
        raise ValueError("cluster_separation must be >= 0")
    if not spec.categories:
        raise ValueError("at least one category required")
    weights = [w for _, w in spec.categories]
    if any(w < 0 for w in weights) or sum(weights) <= 0:
        raise ValueError("category weights must be non-negative and not all zero")
    for name, _ in spec.categories:
        profile = spec.object_profile.get(name)
        if profile is None:
            raise ValueError(f"category {name!r} missing from object_profile")
        if len(profile) < NUM_SLOTS:
            raise ValueError(f"category {name!r} needs at least {NUM_SLOTS} profile objects")
        cids = [cid for cid, _ in profile]
        if len(set(cids)) != len(cids):
            raise ValueError(f"category {name!r} has duplicate class_ids in profile")
        if any(not (0 <= cid < spec.num_classes) for cid in cids):
            raise ValueError(f"category {name!r} profile class_id outside [0, num_classes)")
        if any(w < 0 for _, w in profile):
            raise ValueError(f"category {name!r} has negative profile weight")
    for lo, hi, what in (
        (*spec.impressions_range, "impressions_range"),
        (*spec.width_range, "width_range"),
        (*spec.height_range, "height_range"),
    ):
        if lo < 1 or hi < lo:
            raise ValueError(f"invalid {what}: ({lo}, {hi})")
    if spec.ctr_model.noise_sd < 0:
        raise ValueError("noise_sd must be >= 0")
    for i, w in spec.ctr_model.vector_weights:
        if not (0 <= i < spec.dim):
            raise ValueError(f"ctr vector weight index {i} outside [0, dim)")
    for i, j, w in spec.ctr_model.interactions:
        if not (0 <= i < spec.dim and 0 <= j < spec.dim):
            raise ValueError("ctr interaction index outside [0, dim)")


def _slot_tables(profile) -> tuple[list[list[int]], list[np.ndarray], dict[int, float]]:
    """Round-robin the profile into 5 slots; return ids, cumweights, presence probs."""
    slot_ids: list[list[int]] = [[] for _ in range(NUM_SLOTS)]
    slot_weights: list[list[float]] = [[] for _ in range(NUM_SLOTS)]
    for pos, (cid, w) in enumerate(profile):
        slot_ids[pos % NUM_SLOTS].append(cid)
        slot_weights[pos % NUM_SLOTS].append(float(w))
    cumulative = []
    presence: dict[int, float] = {}
    for s in range(NUM_SLOTS):
        weights = np.asarray(slot_weights[s], dtype=np.float64)
        total = float(weights.sum())
        if total <= 0:
            raise ValueError("each label slot needs positive total weight")
        cumulative.append(np.cumsum(weights))
        for cid, w in zip(slot_ids[s], weights):
            presence[cid] = float(w / total)
    return slot_ids, cumulative, presence


def planted_centroids(spec: SynthSpec) -> np.ndarray:
    """Cluster j sits on axis j; pairwise centroid distance is
    cluster_separation times the within-cluster RMS radius sqrt(dim)."""
    centroids = np.zeros((spec.num_clusters, spec.dim))
    scale = spec.cluster_separation * math.sqrt(spec.dim) / math.sqrt(2.0)
    for j in range(spec.num_clusters):
        centroids[j, j] = scale
    return centroids


def _record_id(index: int, category: str, width: int, height: int,
               impressions: int, clicks: int, labels, vector: np.ndarray) -> str:
    h = hashlib.md5()
    h.update(f"{index}|{category}|{width}x{height}|{impressions}|{clicks}|".encode())
    h.update("|".join(f"{lab.class_id}:{lab.score!r}" for lab in labels).encode())
    h.update(vector.astype("<f8").tobytes())
    return h.hexdigest()


def generate_corpus(spec: SynthSpec) -> tuple[Corpus, PlantedTruth]:
    """Deterministic corpus + planted truth for a spec (same spec, same bytes)."""
    validate_spec(spec)
    centroids = planted_centroids(spec)
    cat_names = [name for name, _ in spec.categories]
    cat_cum = np.cumsum(np.asarray([w for _, w in spec.categories], dtype=np.float64))
    slots = {name: _slot_tables(spec.object_profile[name]) for name in cat_names}

    records: list[AdRecord] = []
    cluster_of: dict[str, int] = {}
    for i in range(spec.num_records):
        rs = Stream(spec.seed).spawn(TAG_RECORD, i)
        cluster = rs.randint_below(spec.num_clusters)
        category = cat_names[rs.weighted_index(cat_cum)]
        w_lo, w_hi = spec.width_range
        h_lo, h_hi = spec.height_range
        i_lo, i_hi = spec.impressions_range
        width = w_lo + rs.randint_below(w_hi - w_lo + 1)
        height = h_lo + rs.randint_below(h_hi - h_lo + 1)
        impressions = i_lo + rs.randint_below(i_hi - i_lo + 1)

        slot_ids, slot_cum, _ = slots[category]
        picked = [slot_ids[s][rs.weighted_index(slot_cum[s])] for s in range(NUM_SLOTS)]
        scores = sorted(rs.uniforms(NUM_SLOTS).tolist(), reverse=True)
        labels = tuple(
            ObjectLabel(class_id=cid, name=f"object_{cid:04d}", score=score)
            for score, cid in sorted(
                zip(scores, picked), key=lambda p: (-p[0], p[1])
            )
        )

        vector = centroids[cluster] + rs.gaussians(spec.dim)
        noise = rs.gaussian() * spec.ctr_model.noise_sd
        rate = spec.ctr_model.evaluate(width, height, vector) + noise
        rate = min(max(rate, 0.0), 1.0)
        clicks = min(round(impressions * rate), impressions)

        rid = _record_id(i, category, width, height, impressions, clicks, labels, vector)
        records.append(
            AdRecord(
                id=rid,
                width=width,
                height=height,
                category=category,
                impressions=impressions,
                clicks=clicks,
                labels=labels,
                vector=vector,
            )
        )
        cluster_of[rid] = cluster

    truth = PlantedTruth(
        cluster_of=cluster_of,
        category_object_freq={name: slots[name][2] for name in cat_names},
        ctr_weights=spec.ctr_model,
        centroids=centroids,
    )
    return Corpus(records=records, dim=spec.dim, num_classes=spec.num_classes), truth


def default_object_profile(categories, objects_per_category: int = 15,
                           first_class_id: int = 5,
                           stop_object_share: float = 0.0,
                           stop_object_id: int = 0) -> dict[str, tuple[tuple[int, float], ...]]:
    """Disjoint per-category object lists with harmonically decaying weights.

    With stop_object_share > 0, `stop_object_id` is prepended to every
    category's slot 0 with the weight that makes its within-slot presence
    probability exactly that share.
    """
    if not (0.0 <= stop_object_share < 1.0):
        raise ValueError("stop_object_share must be in [0, 1)")
    profile = {}
    for ci, name in enumerate(categories):
        base = first_class_id + ci * objects_per_category
        entries = [(base + j, 1.0 / (j + 1)) for j in range(objects_per_category)]
        if stop_object_share > 0.0:
            rest_slot0 = math.fsum(w for pos, (_, w) in enumerate(entries) if (pos + 1) % NUM_SLOTS == 0)
            w0 = stop_object_share / (1.0 - stop_object_share) * rest_slot0
            entries = [(stop_object_id, w0)] + entries
        profile[name] = tuple(entries)
    return profile
