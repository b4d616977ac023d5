"""Manifest data model: parsing, validation, deduplication, CTR.

A corpus lives in a line-delimited JSON manifest.  Line 1 is a header object
declaring {format, version, dim, num_classes} and, optionally, the name of a
binary vector sidecar.  Every following line is one ad record.  The exact
byte-level layout is documented in docs/formats.md; `write_manifest` is the
canonical emitter and round-trips through `parse_manifest`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MANIFEST_FORMAT = "ad-manifest"
MANIFEST_VERSION = 1
NUM_LABELS = 5
DEFAULT_NUM_CLASSES = 1000


class ManifestError(ValueError):
    """Manifest parse/validation failure; carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class ObjectLabel:
    class_id: int
    name: str
    score: float


@dataclass(frozen=True, eq=False)
class AdRecord:
    id: str
    width: int
    height: int
    category: str
    impressions: int
    clicks: int
    labels: tuple[ObjectLabel, ...]
    vector: np.ndarray


@dataclass(eq=False)
class Corpus:
    records: list[AdRecord]
    dim: int
    num_classes: int = DEFAULT_NUM_CLASSES
    duplicates_dropped: int = 0
    categories: tuple[str, ...] = field(init=False)

    def __post_init__(self):
        self.categories = tuple(sorted({r.category for r in self.records}))

    def __len__(self) -> int:
        return len(self.records)

    def matrix(self) -> np.ndarray:
        """All embedding vectors as one (n, dim) float64 matrix."""
        if not self.records:
            return np.zeros((0, self.dim))
        return np.stack([r.vector for r in self.records])


@dataclass
class CorpusStats:
    total: int
    per_category: dict[str, int]
    distinct_objects: int
    mean_width: float | None
    mean_height: float | None


def ctr(record: AdRecord) -> float:
    """Click-through rate: clicks / impressions."""
    if record.impressions <= 0:
        raise ValueError("undefined CTR: record has no impressions")
    return record.clicks / record.impressions


def validate_record(record: AdRecord, dim: int, num_classes: int, line: int | None = None) -> None:
    if not record.id:
        raise ManifestError("empty record id", line)
    if record.width <= 0 or record.height <= 0:
        raise ManifestError("non-positive dimensions", line)
    if record.impressions < 0 or record.clicks < 0:
        raise ManifestError("negative impressions or clicks", line)
    if record.clicks > record.impressions:
        raise ManifestError("clicks > impressions", line)
    if len(record.labels) != NUM_LABELS:
        raise ManifestError(f"expected {NUM_LABELS} labels, got {len(record.labels)}", line)
    for lab in record.labels:
        if not (0 <= lab.class_id < num_classes):
            raise ManifestError(f"class_id {lab.class_id} outside [0, {num_classes})", line)
        if not (math.isfinite(lab.score) and 0.0 <= lab.score <= 1.0):
            raise ManifestError(f"label score {lab.score} outside [0, 1]", line)
    for a, b in zip(record.labels, record.labels[1:]):
        if (a.score, -a.class_id) < (b.score, -b.class_id):
            raise ManifestError("labels not sorted by descending score", line)
    if record.vector.shape != (dim,):
        raise ManifestError(
            f"vector length mismatch: got {record.vector.shape[0] if record.vector.ndim == 1 else record.vector.shape}, header dim {dim}",
            line,
        )
    if not np.all(np.isfinite(record.vector)):
        raise ManifestError("non-finite vector entry", line)


def _parse_header(line: str) -> dict:
    try:
        header = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"malformed header: {exc.msg}", 1) from exc
    if not isinstance(header, dict) or header.get("format") != MANIFEST_FORMAT:
        raise ManifestError("missing or wrong format marker", 1)
    if header.get("version") != MANIFEST_VERSION:
        raise ManifestError(f"unknown header version: {header.get('version')!r}", 1)
    dim = header.get("dim")
    if not isinstance(dim, int) or dim <= 0:
        raise ManifestError("header dim must be a positive integer", 1)
    num_classes = header.get("num_classes", DEFAULT_NUM_CLASSES)
    if not isinstance(num_classes, int) or num_classes <= 0:
        raise ManifestError("header num_classes must be a positive integer", 1)
    return header


def _record_from_obj(obj: dict, dim: int, sidecar_rows: np.ndarray | None, line: int) -> AdRecord:
    try:
        labels = tuple(
            ObjectLabel(class_id=int(lab[0]), name=str(lab[1]), score=float(lab[2]))
            for lab in obj["labels"]
        )
        if "vector_row" in obj:
            if sidecar_rows is None:
                raise ManifestError("record references vector_row but header names no sidecar", line)
            row = int(obj["vector_row"])
            if not (0 <= row < sidecar_rows.shape[0]):
                raise ManifestError(f"vector_row {row} outside sidecar with {sidecar_rows.shape[0]} rows", line)
            vector = sidecar_rows[row].astype(np.float64)
        else:
            vector = np.asarray(obj["vector"], dtype=np.float64)
        return AdRecord(
            id=str(obj["id"]),
            width=int(obj["width"]),
            height=int(obj["height"]),
            category=str(obj["category"]),
            impressions=int(obj["impressions"]),
            clicks=int(obj["clicks"]),
            labels=labels,
            vector=vector,
        )
    except ManifestError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ManifestError(f"malformed record: {exc}", line) from exc


def parse_manifest(path: str | Path) -> Corpus:
    """Parse and validate a manifest; duplicate ids keep the first occurrence.

    Raises FileNotFoundError if the manifest is missing and ManifestError
    (with line number) on any malformed or invariant-breaking content.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ManifestError("empty file: missing header", 1)
    header = _parse_header(lines[0])
    dim = header["dim"]
    num_classes = header.get("num_classes", DEFAULT_NUM_CLASSES)

    sidecar_rows = None
    if "sidecar" in header:
        sidecar_path = path.parent / header["sidecar"]
        if not sidecar_path.exists():
            raise ManifestError(f"sidecar file not found: {header['sidecar']}", 1)
        raw = np.fromfile(sidecar_path, dtype="<f4")
        if raw.size % dim != 0:
            raise ManifestError(f"sidecar size {raw.size} not a multiple of dim {dim}", 1)
        sidecar_rows = raw.reshape(-1, dim)

    records: list[AdRecord] = []
    seen: set[str] = set()
    dropped = 0
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            raise ManifestError("blank line inside manifest", lineno)
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"malformed line: {exc.msg}", lineno) from exc
        record = _record_from_obj(obj, dim, sidecar_rows, lineno)
        validate_record(record, dim, num_classes, lineno)
        if record.id in seen:
            dropped += 1
            continue
        seen.add(record.id)
        records.append(record)
    return Corpus(records=records, dim=dim, num_classes=num_classes, duplicates_dropped=dropped)


def _record_to_obj(record: AdRecord, vector_row: int | None) -> dict:
    obj = {
        "id": record.id,
        "width": record.width,
        "height": record.height,
        "category": record.category,
        "impressions": record.impressions,
        "clicks": record.clicks,
        "labels": [[lab.class_id, lab.name, lab.score] for lab in record.labels],
    }
    if vector_row is None:
        obj["vector"] = [float(v) for v in record.vector]
    else:
        obj["vector_row"] = vector_row
    return obj


def write_manifest(corpus: Corpus, path: str | Path, sidecar: bool = False) -> None:
    """Write the canonical manifest form (stable bytes for a given corpus).

    With sidecar=True, vectors go to `<name>.vec` as little-endian float32
    rows and records carry a row index instead of an inline array.
    """
    path = Path(path)
    header: dict = {
        "format": MANIFEST_FORMAT,
        "version": MANIFEST_VERSION,
        "dim": corpus.dim,
        "num_classes": corpus.num_classes,
    }
    sidecar_name = path.name + ".vec"
    if sidecar:
        header["sidecar"] = sidecar_name
    lines = [json.dumps(header, separators=(",", ":"), sort_keys=True)]
    for row, record in enumerate(corpus.records):
        obj = _record_to_obj(record, row if sidecar else None)
        lines.append(json.dumps(obj, separators=(",", ":")))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    if sidecar:
        mat = corpus.matrix().astype("<f4")
        mat.tofile(path.parent / sidecar_name)


def dedup(corpus: Corpus) -> Corpus:
    """Collapse duplicate ids keeping the first occurrence (idempotent)."""
    seen: set[str] = set()
    kept = []
    for record in corpus.records:
        if record.id in seen:
            continue
        seen.add(record.id)
        kept.append(record)
    return Corpus(
        records=kept,
        dim=corpus.dim,
        num_classes=corpus.num_classes,
        duplicates_dropped=corpus.duplicates_dropped + (len(corpus.records) - len(kept)),
    )


def corpus_stats(corpus: Corpus) -> CorpusStats:
    """Per-category counts, total, distinct objects, mean width/height."""
    per_category: dict[str, int] = {}
    objects: set[int] = set()
    for record in corpus.records:
        per_category[record.category] = per_category.get(record.category, 0) + 1
        objects.update(lab.class_id for lab in record.labels)
    n = len(corpus.records)
    mean_width = math.fsum(r.width for r in corpus.records) / n if n else None
    mean_height = math.fsum(r.height for r in corpus.records) / n if n else None
    return CorpusStats(
        total=n,
        per_category=dict(sorted(per_category.items())),
        distinct_objects=len(objects),
        mean_width=mean_width,
        mean_height=mean_height,
    )


def records_equal(a: AdRecord, b: AdRecord) -> bool:
    return (
        a.id == b.id
        and a.width == b.width
        and a.height == b.height
        and a.category == b.category
        and a.impressions == b.impressions
        and a.clicks == b.clicks
        and a.labels == b.labels
        and a.vector.shape == b.vector.shape
        and bool(np.all(a.vector == b.vector))
    )


def corpora_equal(a: Corpus, b: Corpus) -> bool:
    """Field-for-field equality (ignores duplicates_dropped bookkeeping)."""
    if a.dim != b.dim or a.num_classes != b.num_classes or len(a) != len(b):
        return False
    return all(records_equal(x, y) for x, y in zip(a.records, b.records))
