"""Writer for the ad-manifest interchange format.

Implements the byte layout documented in the primary toolkit's
docs/formats.md: JSON-lines, fixed record key order, sorted header keys,
repr floats, `\n` endings, optional little-endian float32 sidecar.  The
format is the contract between this exporter and the analytics side; no
code is shared.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MANIFEST_FORMAT = "ad-manifest"
MANIFEST_VERSION = 1


@dataclass(frozen=True)
class ManifestRecord:
    id: str
    width: int
    height: int
    category: str
    impressions: int
    clicks: int
    labels: tuple[tuple[int, str, float], ...]  # (class_id, name, score), score desc
    vector: np.ndarray


def write_manifest(records: list[ManifestRecord], dim: int, num_classes: int,
                   path: str | Path, sidecar: bool = False) -> None:
    path = Path(path)
    header: dict = {
        "format": MANIFEST_FORMAT,
        "version": MANIFEST_VERSION,
        "dim": dim,
        "num_classes": num_classes,
    }
    sidecar_name = path.name + ".vec"
    if sidecar:
        header["sidecar"] = sidecar_name
    lines = [json.dumps(header, separators=(",", ":"), sort_keys=True)]
    for row, record in enumerate(records):
        obj = {
            "id": record.id,
            "width": record.width,
            "height": record.height,
            "category": record.category,
            "impressions": record.impressions,
            "clicks": record.clicks,
            "labels": [[cid, name, score] for cid, name, score in record.labels],
        }
        if sidecar:
            obj["vector_row"] = row
        else:
            obj["vector"] = [float(v) for v in record.vector]
        lines.append(json.dumps(obj, separators=(",", ":")))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    if sidecar:
        mat = np.stack([r.vector for r in records]).astype("<f4") if records else \
            np.zeros((0, dim), dtype="<f4")
        mat.tofile(path.parent / sidecar_name)
