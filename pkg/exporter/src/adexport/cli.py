"""ad-export command line: image directory + metadata CSV -> manifest."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .export import ExportJob, export


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ad-export",
        description="Export ad images to an ad-manifest with embeddings and top-5 labels",
    )
    parser.add_argument("--images", required=True, help="directory of ad image files")
    parser.add_argument("--metadata", required=True,
                        help="CSV with columns filename,category,impressions,clicks")
    parser.add_argument("--out", required=True, help="output manifest path")
    parser.add_argument("--backend", default="pixelstat",
                        help="pixelstat (offline) or a torchvision model name, e.g. resnet18")
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--sidecar", action="store_true",
                        help="write vectors to a float32 sidecar instead of inline")
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    job = ExportJob(
        image_dir=Path(args.images),
        metadata_file=Path(args.metadata),
        output=Path(args.out),
        backend=args.backend,
        batch_size=args.batch_size,
        sidecar=args.sidecar,
    )
    try:
        result = export(job)
    except FileNotFoundError as exc:
        print(json.dumps({"error": "FileNotFoundError", "message": str(exc)}), file=sys.stderr)
        return 2
    except ValueError as exc:
        print(json.dumps({"error": "ValueError", "message": str(exc)}), file=sys.stderr)
        return 3
    report = {
        "manifest": str(result.manifest_path),
        "records_written": result.records_written,
        "dim": result.dim,
        "backend": args.backend,
        "skipped": result.skipped,
    }
    report_path = result.manifest_path.parent / "export_report.json"
    report_path.write_text(json.dumps(report, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    print(json.dumps({"records_written": result.records_written,
                      "skipped": len(result.skipped), "dim": result.dim}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
