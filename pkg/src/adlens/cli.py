"""Command-line front end wiring the pipeline stages together.

Exit codes: 0 success, 2 missing input file, 3 validation failure, 4
internal invariant breach.  On failure a machine-readable JSON error
document goes to stderr.  Every report embeds the seed and the effective
merged config (flags > config file > defaults); the output directory is
resolved as flag > ADLENS_OUT env var > config and is never echoed into
reports so identical runs into different directories stay byte-identical.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import catgraph, cluster, objstats, predict
from .config import (
    RunConfig,
    load_config,
    parse_indexed_weights,
    parse_interactions,
    parse_weighted_list,
    validate_config,
)
from .corpus import ManifestError, corpus_stats, parse_manifest, write_manifest
from .synth import CtrModel, SynthSpec, default_object_profile, generate_corpus

EXIT_OK = 0
EXIT_MISSING_INPUT = 2
EXIT_VALIDATION = 3
EXIT_INTERNAL = 4

MANIFEST_NAME = "manifest.jsonl"


def _write_report(out_dir: Path, name: str, payload: dict) -> None:
    (out_dir / name).write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8", newline="\n"
    )


def _echo_config(config: RunConfig) -> dict:
    # out_dir and threads are execution knobs that must not change report
    # bytes, so they stay out of the echoed config.
    merged = config.as_dict()
    merged["run"].pop("out_dir", None)
    merged["run"].pop("threads", None)
    return merged


def _base_payload(command: str, config: RunConfig) -> dict:
    return {
        "command": command,
        "seed": config.get("run", "seed"),
        "config": _echo_config(config),
    }


def _load_corpus(config: RunConfig):
    manifest = config.get("run", "manifest")
    if not manifest:
        raise FileNotFoundError("no manifest given (flag --manifest or [run] manifest)")
    return parse_manifest(manifest)


def _filtered_view(corpus, config: RunConfig):
    table = objstats.object_frequencies(corpus)
    report = objstats.detect_stop_objects(table, config.get("objects", "stop_threshold"))
    return objstats.filter_stop_objects(corpus, report), report


def cmd_synth(config: RunConfig, out_dir: Path) -> None:
    s = config.section("synth")
    categories = parse_weighted_list(s["categories"])
    profile = default_object_profile(
        [name for name, _ in categories],
        objects_per_category=s["objects_per_category"],
        stop_object_share=s["stop_object_share"],
    )
    spec = SynthSpec(
        seed=config.get("run", "seed"),
        num_records=s["num_records"],
        dim=s["dim"],
        num_clusters=s["num_clusters"],
        cluster_separation=s["cluster_separation"],
        categories=categories,
        object_profile=profile,
        ctr_model=CtrModel(
            intercept=s["ctr_intercept"],
            width_weight=s["ctr_width_weight"],
            height_weight=s["ctr_height_weight"],
            vector_weights=parse_indexed_weights(s["ctr_vector_weights"]),
            interactions=parse_interactions(s["ctr_interactions"]),
            noise_sd=s["ctr_noise_sd"],
        ),
        impressions_range=(s["impressions_min"], s["impressions_max"]),
        width_range=(s["width_min"], s["width_max"]),
        height_range=(s["height_min"], s["height_max"]),
        num_classes=s["num_classes"],
    )
    corpus, truth = generate_corpus(spec)
    write_manifest(corpus, out_dir / MANIFEST_NAME, sidecar=s["sidecar"])
    (out_dir / "truth.json").write_text(
        json.dumps(truth.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8", newline="\n"
    )
    payload = _base_payload("synth", config)
    payload.update(
        {
            "manifest": MANIFEST_NAME,
            "num_records": len(corpus),
            "dim": corpus.dim,
            "categories": list(corpus.categories),
        }
    )
    _write_report(out_dir, "synth_report.json", payload)


def cmd_ingest(config: RunConfig, out_dir: Path) -> None:
    corpus = _load_corpus(config)
    stats = corpus_stats(corpus)
    payload = _base_payload("ingest", config)
    payload.update(
        {
            "manifest": config.get("run", "manifest"),
            "records": stats.total,
            "duplicates_dropped": corpus.duplicates_dropped,
            "dim": corpus.dim,
            "num_classes": corpus.num_classes,
            "per_category": stats.per_category,
            "distinct_objects": stats.distinct_objects,
            "mean_width": stats.mean_width,
            "mean_height": stats.mean_height,
        }
    )
    _write_report(out_dir, "ingest_report.json", payload)


def cmd_objects(config: RunConfig, out_dir: Path) -> None:
    corpus = _load_corpus(config)
    view, stop_report = _filtered_view(corpus, config)
    top = objstats.top_objects_per_category(view, config.get("objects", "top_n"))
    payload = _base_payload("objects", config)
    payload.update(
        {
            "stop_threshold": stop_report.threshold,
            "stop_objects": [
                {"class_id": cid, "percent": round(frac * 100.0, 2)}
                for cid, frac in stop_report.stop_objects
            ],
            "top_objects_per_category": {
                cat: [
                    {"class_id": cid, "percent": round(frac * 100.0, 2)}
                    for cid, frac in ranked
                ]
                for cat, ranked in top.items()
            },
        }
    )
    _write_report(out_dir, "objects_report.json", payload)


def cmd_graph(config: RunConfig, out_dir: Path) -> None:
    corpus = _load_corpus(config)
    view, _ = _filtered_view(corpus, config)
    graph = catgraph.build_graph(view, config.get("graph", "edge_threshold"))
    partition = catgraph.detect_communities(graph, seed=config.get("run", "seed"))
    catgraph.export_graph(graph, partition, "edge-list-tsv", out_dir / "graph_edges.tsv")
    catgraph.export_graph(graph, partition, "graphml", out_dir / "graph.graphml")
    payload = _base_payload("graph", config)
    payload.update(
        {
            "edge_threshold": config.get("graph", "edge_threshold"),
            "num_categories": len(graph.categories),
            "num_objects": len(graph.objects),
            "num_vertices": graph.num_vertices,
            "num_edges": len(graph.edges),
            "num_communities": partition.num_communities,
            "modularity": partition.modularity,
        }
    )
    _write_report(out_dir, "graph_report.json", payload)


def cmd_cluster(config: RunConfig, out_dir: Path) -> None:
    corpus = _load_corpus(config)
    if not corpus.records:
        raise ValueError("empty corpus")
    model = cluster.fit_kmeans(
        corpus.matrix(),
        config.get("cluster", "k"),
        max_iter=config.get("cluster", "max_iter"),
        seed=config.get("run", "seed"),
    )
    profile = cluster.profile_clusters(
        corpus, model,
        sample_size=config.get("cluster", "sample_size"),
        seed=config.get("run", "seed"),
    )
    payload = _base_payload("cluster", config)
    payload.update(
        {
            "k": model.k,
            "wcss": model.wcss,
            "iterations_run": model.iterations_run,
            "wcss_history": model.wcss_history,
            "clusters": {
                str(j): {
                    "size": info["size"],
                    "mean_width": info["mean_width"],
                    "mean_height": info["mean_height"],
                    "top_categories": [[c, f] for c, f in info["top_categories"][:10]],
                    "top_objects": [[o, f] for o, f in info["top_objects"][:10]],
                    "sample_ids": info["sample_ids"],
                }
                for j, info in profile.clusters.items()
            },
        }
    )
    _write_report(out_dir, "cluster_report.json", payload)


def cmd_select_k(config: RunConfig, out_dir: Path) -> None:
    corpus = _load_corpus(config)
    if not corpus.records:
        raise ValueError("empty corpus")
    report = cluster.select_k(
        corpus.matrix(),
        k_range=(config.get("select_k", "k_min"), config.get("select_k", "k_max")),
        repeats=config.get("select_k", "repeats"),
        max_iter=config.get("select_k", "max_iter"),
        seed=config.get("run", "seed"),
        threads=config.get("run", "threads"),
    )
    csv_lines = ["k,mean_wcss"] + [
        f"{k},{report.mean_wcss[k]!r}" for k in sorted(report.mean_wcss)
    ]
    (out_dir / "mean_wcss.csv").write_text("\n".join(csv_lines) + "\n", encoding="utf-8", newline="\n")
    payload = _base_payload("select_k", config)
    payload.update(
        {
            "k_range": list(report.k_range),
            "repeats": report.repeats,
            "selected_k": report.selected_k,
            "mean_wcss": {str(k): v for k, v in sorted(report.mean_wcss.items())},
        }
    )
    _write_report(out_dir, "select_k_report.json", payload)


def cmd_predict(config: RunConfig, out_dir: Path) -> None:
    corpus = _load_corpus(config)
    p = config.section("predict")
    report = predict.evaluate_all(
        corpus,
        seed=config.get("run", "seed"),
        split_fraction=p["split_fraction"],
        min_impressions=p["min_impressions"],
        max_ctr=p["max_ctr"],
        forest_trees=p["forest_trees"],
        boost_iterations=p["boost_iterations"],
        tree_depth=p["tree_depth"],
        min_leaf=p["min_leaf"],
        shrinkage=p["shrinkage"],
        threads=config.get("run", "threads"),
    )
    payload = _base_payload("predict", config)
    payload.update(
        {
            "correlations": report.correlations,
            "rmse_test": {
                f: {m: f"{v:.6g}" for m, v in row.items()}
                for f, row in report.rmse_test.items()
            },
            "rmse_train": {
                f: {m: f"{v:.6g}" for m, v in row.items()}
                for f, row in report.rmse_train.items()
            },
            "rmse_test_raw": report.rmse_test,
            "rmse_train_raw": report.rmse_train,
            "split_fraction": report.split_fraction,
            "n_train": report.n_train,
            "n_test": report.n_test,
        }
    )
    _write_report(out_dir, "predict_report.json", payload)


COMMANDS = {
    "synth": cmd_synth,
    "ingest": cmd_ingest,
    "objects": cmd_objects,
    "graph": cmd_graph,
    "cluster": cmd_cluster,
    "select-k": cmd_select_k,
    "predict": cmd_predict,
}

# flag name -> (section, key); used by every subcommand that declares it
FLAG_MAP = {
    "seed": ("run", "seed"),
    "manifest": ("run", "manifest"),
    "threads": ("run", "threads"),
    "num_records": ("synth", "num_records"),
    "dim": ("synth", "dim"),
    "num_clusters": ("synth", "num_clusters"),
    "cluster_separation": ("synth", "cluster_separation"),
    "noise_sd": ("synth", "ctr_noise_sd"),
    "sidecar": ("synth", "sidecar"),
    "stop_threshold": ("objects", "stop_threshold"),
    "top_n": ("objects", "top_n"),
    "edge_threshold": ("graph", "edge_threshold"),
    "k": ("cluster", "k"),
    "max_iter": ("cluster", "max_iter"),
    "sample_size": ("cluster", "sample_size"),
    "k_min": ("select_k", "k_min"),
    "k_max": ("select_k", "k_max"),
    "repeats": ("select_k", "repeats"),
    "select_max_iter": ("select_k", "max_iter"),
    "min_impressions": ("predict", "min_impressions"),
    "max_ctr": ("predict", "max_ctr"),
    "split_fraction": ("predict", "split_fraction"),
    "forest_trees": ("predict", "forest_trees"),
    "boost_iterations": ("predict", "boost_iterations"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adlens", description="Image-ad corpus analytics pipeline"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="INI config file")
        p.add_argument("--out", help="output directory (or ADLENS_OUT env var)")
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=int)

    p = sub.add_parser("synth", help="generate a synthetic corpus with planted truth")
    common(p)
    p.add_argument("--num-records", dest="num_records", type=int)
    p.add_argument("--dim", type=int)
    p.add_argument("--num-clusters", dest="num_clusters", type=int)
    p.add_argument("--cluster-separation", dest="cluster_separation", type=float)
    p.add_argument("--noise-sd", dest="noise_sd", type=float)
    p.add_argument("--sidecar", action="store_const", const=True)

    for name, help_text in (
        ("ingest", "validate a manifest and report corpus statistics"),
        ("objects", "object frequencies, stop-objects, per-category top tables"),
        ("graph", "category-object graph with communities and exports"),
        ("cluster", "k-means++ fit and cluster profiles"),
        ("select-k", "mean-WCSS k selection curve"),
        ("predict", "CTR filtering, correlations, regression models"),
    ):
        p = sub.add_parser(name, help=help_text)
        common(p)
        p.add_argument("--manifest")
        if name == "objects":
            p.add_argument("--stop-threshold", dest="stop_threshold", type=float)
            p.add_argument("--top-n", dest="top_n", type=int)
        elif name == "graph":
            p.add_argument("--stop-threshold", dest="stop_threshold", type=float)
            p.add_argument("--edge-threshold", dest="edge_threshold", type=float)
        elif name == "cluster":
            p.add_argument("--k", type=int)
            p.add_argument("--max-iter", dest="max_iter", type=int)
            p.add_argument("--sample-size", dest="sample_size", type=int)
        elif name == "select-k":
            p.add_argument("--k-min", dest="k_min", type=int)
            p.add_argument("--k-max", dest="k_max", type=int)
            p.add_argument("--repeats", type=int)
            p.add_argument("--max-iter", dest="select_max_iter", type=int)
        elif name == "predict":
            p.add_argument("--min-impressions", dest="min_impressions", type=int)
            p.add_argument("--max-ctr", dest="max_ctr", type=float)
            p.add_argument("--split-fraction", dest="split_fraction", type=float)
            p.add_argument("--forest-trees", dest="forest_trees", type=int)
            p.add_argument("--boost-iterations", dest="boost_iterations", type=int)
    return parser


def _resolve(args: argparse.Namespace) -> tuple[RunConfig, Path]:
    config = load_config(args.config)
    for flag, (section, key) in FLAG_MAP.items():
        value = getattr(args, flag, None)
        if value is not None:
            config.set(section, key, value)
    validate_config(config)
    out = args.out or os.environ.get("ADLENS_OUT") or config.get("run", "out_dir")
    if not out:
        raise ValueError("no output directory (flag --out, ADLENS_OUT, or [run] out_dir)")
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    return config, out_dir


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    command = args.command
    try:
        config, out_dir = _resolve(args)
        COMMANDS[command](config, out_dir)
        return EXIT_OK
    except FileNotFoundError as exc:
        return _fail(command, exc, EXIT_MISSING_INPUT)
    except (ManifestError, ValueError) as exc:
        return _fail(command, exc, EXIT_VALIDATION)
    except OSError as exc:  # unreadable input / unwritable output
        return _fail(command, exc, EXIT_MISSING_INPUT)
    except (AssertionError, RuntimeError) as exc:
        return _fail(command, exc, EXIT_INTERNAL)


def _fail(command: str, exc: Exception, code: int) -> int:
    doc = {"command": command, "error": type(exc).__name__, "message": str(exc), "exit_code": code}
    print(json.dumps(doc, sort_keys=True), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
