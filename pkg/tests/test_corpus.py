import json

import numpy as np
import pytest

from adlens.corpus import (
    Corpus,
    ManifestError,
    corpora_equal,
    corpus_stats,
    ctr,
    dedup,
    parse_manifest,
    write_manifest,
)
from helpers import make_corpus, make_record


def write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


HEADER = json.dumps({"format": "ad-manifest", "version": 1, "dim": 4, "num_classes": 1000})


def record_line(rid="a1", vector=(0.0, 0.0, 0.0, 0.0), clicks=10, impressions=100,
                width=300, height=250, labels=None):
    if labels is None:
        labels = [[i + 1, f"object_{i + 1:04d}", 0.9 - 0.1 * i] for i in range(5)]
    return json.dumps({
        "id": rid, "width": width, "height": height, "category": "Auto",
        "impressions": impressions, "clicks": clicks, "labels": labels,
        "vector": list(vector),
    })


def test_parse_dedups_keeping_first(tmp_path):
    path = tmp_path / "m.jsonl"
    write_lines(path, [HEADER, record_line("a", clicks=1), record_line("b"), record_line("a", clicks=99)])
    corpus = parse_manifest(path)
    assert len(corpus) == 2
    assert corpus.duplicates_dropped == 1
    assert corpus.records[0].clicks == 1  # first occurrence wins


def test_vector_length_mismatch(tmp_path):
    path = tmp_path / "m.jsonl"
    write_lines(path, [HEADER, record_line(vector=[0.0] * 3)])
    with pytest.raises(ManifestError, match="vector length mismatch"):
        parse_manifest(path)


def test_empty_manifest_header_only(tmp_path):
    path = tmp_path / "m.jsonl"
    write_lines(path, [HEADER])
    corpus = parse_manifest(path)
    assert len(corpus) == 0
    assert corpus.dim == 4


def test_malformed_line_reports_line_number(tmp_path):
    path = tmp_path / "m.jsonl"
    write_lines(path, [HEADER, record_line(), "{not json"])
    with pytest.raises(ManifestError, match="line 3"):
        parse_manifest(path)


def test_clicks_exceeding_impressions_rejected(tmp_path):
    path = tmp_path / "m.jsonl"
    write_lines(path, [HEADER, record_line(clicks=101, impressions=100)])
    with pytest.raises(ManifestError, match="clicks > impressions"):
        parse_manifest(path)


def test_non_positive_dimensions_rejected(tmp_path):
    path = tmp_path / "m.jsonl"
    write_lines(path, [HEADER, record_line(width=0)])
    with pytest.raises(ManifestError, match="non-positive dimensions"):
        parse_manifest(path)


def test_unknown_header_version_rejected(tmp_path):
    path = tmp_path / "m.jsonl"
    header = json.dumps({"format": "ad-manifest", "version": 9, "dim": 4})
    write_lines(path, [header])
    with pytest.raises(ManifestError, match="unknown header version"):
        parse_manifest(path)


def test_unsorted_labels_rejected(tmp_path):
    path = tmp_path / "m.jsonl"
    labels = [[1, "a", 0.1], [2, "b", 0.9], [3, "c", 0.08], [4, "d", 0.07], [5, "e", 0.06]]
    write_lines(path, [HEADER, record_line(labels=labels)])
    with pytest.raises(ManifestError, match="not sorted"):
        parse_manifest(path)


def test_missing_manifest_raises_file_not_found(tmp_path):
    with pytest.raises(FileNotFoundError):
        parse_manifest(tmp_path / "absent.jsonl")


def test_roundtrip_identity(tmp_path):
    rng = np.random.default_rng(0)
    records = [
        make_record(f"r{i}", category=("Auto" if i % 2 else "Retail"),
                    impressions=1000 + i, clicks=i, vector=rng.normal(size=4))
        for i in range(20)
    ]
    corpus = make_corpus(records)
    path = tmp_path / "m.jsonl"
    write_manifest(corpus, path)
    again = parse_manifest(path)
    assert corpora_equal(corpus, again)
    path2 = tmp_path / "m2.jsonl"
    write_manifest(again, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_sidecar_roundtrip(tmp_path):
    rng = np.random.default_rng(1)
    corpus = make_corpus(
        [make_record(f"r{i}", vector=rng.normal(size=4)) for i in range(7)]
    )
    path = tmp_path / "m.jsonl"
    write_manifest(corpus, path, sidecar=True)
    assert (tmp_path / "m.jsonl.vec").exists()
    again = parse_manifest(path)
    assert len(again) == 7
    # sidecar quantizes to float32; a second trip is lossless
    write_manifest(again, tmp_path / "m2.jsonl", sidecar=True)
    third = parse_manifest(tmp_path / "m2.jsonl")
    assert corpora_equal(again, third)


def test_dedup_is_idempotent():
    records = [make_record("a"), make_record("b"), make_record("a")]
    corpus = make_corpus(records)
    once = dedup(corpus)
    twice = dedup(once)
    assert [r.id for r in once.records] == ["a", "b"]
    assert corpora_equal(once, twice)
    assert twice.duplicates_dropped == once.duplicates_dropped == 1


def test_ctr_values_and_error():
    assert ctr(make_record("a", impressions=5000, clicks=0)) == 0.0
    assert ctr(make_record("a", impressions=5000, clicks=1000)) == 0.2
    with pytest.raises(ValueError, match="undefined CTR"):
        ctr(make_record("a", impressions=0, clicks=0))


def test_ctr_is_exact_division():
    r = make_record("a", impressions=7, clicks=3)
    assert ctr(r) == 3 / 7
    assert 0.0 <= ctr(r) <= 1.0


def test_corpus_stats_counts():
    corpus = make_corpus([make_record("a"), make_record("b")])
    stats = corpus_stats(corpus)
    assert stats.per_category == {"Auto": 2}
    assert stats.total == 2
    assert stats.distinct_objects == 5
    assert stats.mean_width == 300.0


def test_corpus_stats_empty():
    stats = corpus_stats(make_corpus([]))
    assert stats.total == 0
    assert stats.per_category == {}
    assert stats.mean_width is None and stats.mean_height is None


def test_corpus_stats_matches_planted_composition():
    records = [make_record(f"a{i}", category="Auto") for i in range(6)]
    records += [make_record(f"r{i}", category="Retail") for i in range(4)]
    stats = corpus_stats(make_corpus(records))
    assert stats.per_category == {"Auto": 6, "Retail": 4}
    assert sum(stats.per_category.values()) == stats.total == 10


def test_category_counts_sum_to_total():
    records = [make_record(f"x{i}", category=f"c{i % 3}") for i in range(11)]
    stats = corpus_stats(make_corpus(records))
    assert sum(stats.per_category.values()) == stats.total
