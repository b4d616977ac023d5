"""Run configuration: INI file with one section per stage, flag overrides.

Precedence for every value: command-line flag > config file > built-in
default; the output directory alone may also come from the ADLENS_OUT
environment variable (flag > env > config).  The fully resolved config is
embedded in every report so any report can be regenerated from
(manifest, config, seed).
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

DEFAULTS: dict[str, dict] = {
    "run": {
        "seed": 0,
        "threads": 1,
        "manifest": "",
        "out_dir": "",
    },
    "synth": {
        "num_records": 500,
        "dim": 16,
        "num_clusters": 4,
        "cluster_separation": 6.0,
        "categories": "Auto:2,Retail:1,Finance:1,Travel:1",
        "objects_per_category": 15,
        "stop_object_share": 0.0,
        "impressions_min": 5000,
        "impressions_max": 50000,
        "width_min": 120,
        "width_max": 970,
        "height_min": 60,
        "height_max": 600,
        "num_classes": 1000,
        "ctr_intercept": 0.05,
        "ctr_width_weight": 0.0,
        "ctr_height_weight": 0.0,
        "ctr_vector_weights": "",
        "ctr_interactions": "",
        "ctr_noise_sd": 0.0,
        "sidecar": False,
    },
    "objects": {
        "stop_threshold": 0.05,
        "top_n": 10,
    },
    "graph": {
        "edge_threshold": 0.01,
    },
    "cluster": {
        "k": 5,
        "max_iter": 15,
        "sample_size": 50,
    },
    "select_k": {
        "k_min": 2,
        "k_max": 50,
        "repeats": 50,
        "max_iter": 15,
    },
    "predict": {
        "min_impressions": 5000,
        "max_ctr": 0.2,
        "split_fraction": 0.8,
        "forest_trees": 100,
        "boost_iterations": 100,
        "tree_depth": 6,
        "min_leaf": 2,
        "shrinkage": 0.1,
    },
}


@dataclass
class RunConfig:
    values: dict[str, dict] = field(default_factory=dict)

    def get(self, section: str, key: str):
        return self.values[section][key]

    def set(self, section: str, key: str, value) -> None:
        self.values[section][key] = value

    def section(self, name: str) -> dict:
        return dict(self.values[name])

    def as_dict(self) -> dict:
        return {s: dict(kv) for s, kv in sorted(self.values.items())}


def _coerce(default, raw: str):
    if isinstance(default, bool):
        lowered = raw.strip().lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected boolean, got {raw!r}")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


def load_config(path: str | Path | None = None) -> RunConfig:
    """Defaults, optionally overlaid with an INI file."""
    values = {s: dict(kv) for s, kv in DEFAULTS.items()}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"config file not found: {path}")
        parser = configparser.ConfigParser()
        parser.read(path, encoding="utf-8")
        for section in parser.sections():
            if section not in values:
                raise ValueError(f"unknown config section: [{section}]")
            for key, raw in parser.items(section):
                if key not in values[section]:
                    raise ValueError(f"unknown config key: [{section}] {key}")
                values[section][key] = _coerce(DEFAULTS[section][key], raw)
    return RunConfig(values=values)


def validate_config(config: RunConfig) -> None:
    def check(cond: bool, message: str) -> None:
        if not cond:
            raise ValueError(f"invalid config: {message}")

    check(0.0 < config.get("objects", "stop_threshold") < 1.0,
          "objects.stop_threshold must be in (0, 1)")
    check(config.get("objects", "top_n") >= 1, "objects.top_n must be >= 1")
    check(0.0 < config.get("graph", "edge_threshold") < 1.0,
          "graph.edge_threshold must be in (0, 1)")
    check(config.get("cluster", "k") >= 1, "cluster.k must be >= 1")
    check(config.get("cluster", "max_iter") >= 1, "cluster.max_iter must be >= 1")
    check(config.get("cluster", "sample_size") >= 0, "cluster.sample_size must be >= 0")
    check(1 <= config.get("select_k", "k_min") <= config.get("select_k", "k_max"),
          "select_k.k_min must be in [1, k_max]")
    check(config.get("select_k", "repeats") >= 1, "select_k.repeats must be >= 1")
    check(config.get("select_k", "max_iter") >= 1, "select_k.max_iter must be >= 1")
    check(0.0 < config.get("predict", "split_fraction") < 1.0,
          "predict.split_fraction must be in (0, 1)")
    check(config.get("predict", "min_impressions") >= 1,
          "predict.min_impressions must be >= 1")
    check(config.get("predict", "max_ctr") > 0.0, "predict.max_ctr must be > 0")
    check(config.get("predict", "forest_trees") >= 1, "predict.forest_trees must be >= 1")
    check(config.get("predict", "boost_iterations") >= 1,
          "predict.boost_iterations must be >= 1")
    check(config.get("run", "threads") >= 1, "run.threads must be >= 1")


def parse_weighted_list(raw: str) -> tuple[tuple[str, float], ...]:
    """'Auto:2,Retail:1' -> (('Auto', 2.0), ('Retail', 1.0))."""
    out = []
    for chunk in raw.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        name, _, weight = chunk.rpartition(":")
        if not name:
            raise ValueError(f"malformed weighted entry: {chunk!r}")
        out.append((name, float(weight)))
    if not out:
        raise ValueError("empty weighted list")
    return tuple(out)


def parse_indexed_weights(raw: str) -> tuple[tuple[int, float], ...]:
    """'0:0.01,3:-0.005' -> ((0, 0.01), (3, -0.005))."""
    out = []
    for chunk in raw.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        idx, _, weight = chunk.partition(":")
        out.append((int(idx), float(weight)))
    return tuple(out)


def parse_interactions(raw: str) -> tuple[tuple[int, int, float], ...]:
    """'0x1:0.01,2x3:-0.002' -> ((0, 1, 0.01), (2, 3, -0.002))."""
    out = []
    for chunk in raw.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        pair, _, weight = chunk.partition(":")
        i, _, j = pair.partition("x")
        out.append((int(i), int(j), float(weight)))
    return tuple(out)
