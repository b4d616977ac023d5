"""Directory-of-images -> manifest export.

Metadata is a CSV with columns filename, category, impressions, clicks; it
must cover exactly the image files present in the directory (missing
metadata or missing files are hard errors).  Undecodable images are skipped
with a logged warning and a per-file error record.  Record ids are MD5
hashes of the raw image bytes, so byte-identical files collapse to one
record on ingest.  Output order is sorted file names, independent of batch
size.
"""

from __future__ import annotations

import csv
import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .backends import load_backend
from .manifest import ManifestRecord, write_manifest

log = logging.getLogger("adexport")

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".gif", ".webp"}
TOP_K = 5


@dataclass
class ExportJob:
    image_dir: Path
    metadata_file: Path
    output: Path
    backend: str = "pixelstat"
    batch_size: int = 16
    sidecar: bool = False


@dataclass
class ExportResult:
    manifest_path: Path
    records_written: int
    dim: int
    skipped: list[dict] = field(default_factory=list)


@dataclass(frozen=True)
class _Metadata:
    category: str
    impressions: int
    clicks: int


def read_metadata(path: Path) -> dict[str, _Metadata]:
    if not path.exists():
        raise FileNotFoundError(f"metadata file not found: {path}")
    rows: dict[str, _Metadata] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"filename", "category", "impressions", "clicks"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise ValueError(f"metadata needs columns {sorted(required)}")
        for lineno, row in enumerate(reader, start=2):
            name = row["filename"].strip()
            if not name:
                raise ValueError(f"metadata line {lineno}: empty filename")
            if name in rows:
                raise ValueError(f"metadata line {lineno}: duplicate filename {name!r}")
            try:
                impressions = int(row["impressions"])
                clicks = int(row["clicks"])
            except ValueError as exc:
                raise ValueError(f"metadata line {lineno}: {exc}") from exc
            if impressions < 0 or clicks < 0 or clicks > impressions:
                raise ValueError(
                    f"metadata line {lineno}: need 0 <= clicks <= impressions"
                )
            rows[name] = _Metadata(row["category"], impressions, clicks)
    if not rows:
        raise ValueError("metadata file has no rows")
    return rows


def _top_labels(score_row: np.ndarray, backend) -> tuple[tuple[int, str, float], ...]:
    # descending score, ties broken by ascending class_id
    order = np.lexsort((np.arange(score_row.shape[0]), -score_row))[:TOP_K]
    return tuple(
        (int(cid), backend.class_name(int(cid)), float(score_row[cid])) for cid in order
    )


def export(job: ExportJob) -> ExportResult:
    image_dir = Path(job.image_dir)
    if not image_dir.is_dir():
        raise FileNotFoundError(f"image directory not found: {image_dir}")
    metadata = read_metadata(Path(job.metadata_file))
    if job.batch_size < 1:
        raise ValueError("batch_size must be >= 1")

    files = sorted(
        p.name for p in image_dir.iterdir()
        if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES
    )
    missing_on_disk = sorted(set(metadata) - set(files))
    if missing_on_disk:
        raise ValueError(f"metadata references missing files: {missing_on_disk}")
    without_metadata = sorted(set(files) - set(metadata))
    if without_metadata:
        raise ValueError(f"images missing from metadata: {without_metadata}")

    backend = load_backend(job.backend)
    skipped: list[dict] = []
    decoded: list[tuple[str, str, Image.Image, int, int]] = []
    for name in files:
        path = image_dir / name
        raw = path.read_bytes()
        digest = hashlib.md5(raw).hexdigest()
        try:
            with Image.open(path) as img:
                img.load()
                width, height = img.size
                decoded.append((name, digest, img.convert("RGB"), width, height))
        except (UnidentifiedImageError, OSError) as exc:
            log.warning("skipping undecodable image %s: %s", name, exc)
            skipped.append({"filename": name, "error": str(exc)})

    records: list[ManifestRecord] = []
    for start in range(0, len(decoded), job.batch_size):
        batch = decoded[start:start + job.batch_size]
        embeddings, scores = backend.embed_batch([img for _, _, img, _, _ in batch])
        for (name, digest, _, width, height), vector, score_row in zip(
            batch, embeddings, scores
        ):
            meta = metadata[name]
            records.append(
                ManifestRecord(
                    id=digest,
                    width=width,
                    height=height,
                    category=meta.category,
                    impressions=meta.impressions,
                    clicks=meta.clicks,
                    labels=_top_labels(score_row, backend),
                    vector=np.asarray(vector, dtype=np.float32),
                )
            )

    output = Path(job.output)
    output.parent.mkdir(parents=True, exist_ok=True)
    write_manifest(records, backend.dim, backend.num_classes, output, sidecar=job.sidecar)
    return ExportResult(
        manifest_path=output,
        records_written=len(records),
        dim=backend.dim,
        skipped=skipped,
    )
