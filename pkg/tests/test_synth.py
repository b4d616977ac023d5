import math

import numpy as np
import pytest

from adlens.corpus import corpora_equal, parse_manifest, write_manifest
from adlens.synth import (
    CtrModel,
    SynthSpec,
    default_object_profile,
    generate_corpus,
    validate_spec,
)


def basic_spec(**overrides):
    cats = overrides.pop("cat_names", ("Auto", "Retail"))
    fields = dict(
        seed=13,
        num_records=200,
        dim=8,
        num_clusters=3,
        cluster_separation=4.0,
        categories=tuple((c, 1.0) for c in cats),
        object_profile=default_object_profile(cats, objects_per_category=10),
        ctr_model=CtrModel(intercept=0.05),
    )
    fields.update(overrides)
    return SynthSpec(**fields)


def test_same_spec_gives_byte_identical_manifests(tmp_path):
    spec = basic_spec()
    c1, _ = generate_corpus(spec)
    c2, _ = generate_corpus(spec)
    write_manifest(c1, tmp_path / "a.jsonl")
    write_manifest(c2, tmp_path / "b.jsonl")
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()


def test_different_seed_changes_output():
    c1, _ = generate_corpus(basic_spec(seed=1))
    c2, _ = generate_corpus(basic_spec(seed=2))
    assert not corpora_equal(c1, c2)


def test_single_cluster_plants_everything_in_cluster_zero():
    corpus, truth = generate_corpus(basic_spec(num_clusters=1, cluster_separation=0.0))
    assert set(truth.cluster_of.values()) == {0}
    assert set(truth.cluster_of) == {r.id for r in corpus.records}


def test_noise_free_ctr_matches_planted_function_up_to_click_rounding():
    model = CtrModel(intercept=0.0, width_weight=2.0 * 0.05, height_weight=3.0 * 0.05,
                     noise_sd=0.0)
    # weights scaled so the clamp to [0, 1] stays inactive for all dims
    spec = basic_spec(ctr_model=model, num_records=300)
    corpus, truth = generate_corpus(spec)
    for r in corpus.records:
        planted = model.evaluate(r.width, r.height, r.vector)
        assert 0.0 < planted < 1.0
        observed = r.clicks / r.impressions
        assert abs(observed - planted) <= 0.5 / r.impressions + 1e-12


def test_generated_manifest_parses_with_zero_errors(tmp_path):
    corpus, _ = generate_corpus(basic_spec())
    path = tmp_path / "m.jsonl"
    write_manifest(corpus, path)
    parsed = parse_manifest(path)
    assert parsed.duplicates_dropped == 0
    assert corpora_equal(corpus, parsed)


def test_empirical_object_frequencies_match_planted_profile():
    cats = ("Auto", "Retail")
    spec = basic_spec(cat_names=cats, num_records=10000, seed=91)
    corpus, truth = generate_corpus(spec)
    cat_records = {}
    for r in corpus.records:
        cat_records.setdefault(r.category, []).append(r)
    for cat, planted in truth.category_object_freq.items():
        records = cat_records[cat]
        n = len(records)
        for cid, p in planted.items():
            count = sum(1 for r in records if cid in {lab.class_id for lab in r.labels})
            se = math.sqrt(max(p * (1 - p), 1e-12) / n)
            assert abs(count / n - p) <= 3 * se + 1e-12, (cat, cid)


def test_planted_truth_covers_every_record_once():
    corpus, truth = generate_corpus(basic_spec())
    assert len(truth.cluster_of) == len(corpus)


def test_clicks_never_exceed_impressions_even_with_noise():
    model = CtrModel(intercept=0.9, noise_sd=0.5)
    corpus, _ = generate_corpus(basic_spec(ctr_model=model))
    for r in corpus.records:
        assert 0 <= r.clicks <= r.impressions


def test_click_rounding_is_half_to_even():
    # impressions * ctr == 2.5 -> 2 and 3.5 -> 4 under banker's rounding
    assert round(2.5) == 2 and round(3.5) == 4


def test_centroid_pairwise_distance_scales_with_dim():
    from adlens.synth import planted_centroids

    spec = basic_spec(dim=16, num_clusters=3, cluster_separation=5.0)
    cents = planted_centroids(spec)
    d01 = np.linalg.norm(cents[0] - cents[1])
    assert d01 == pytest.approx(5.0 * math.sqrt(16), rel=1e-12)


def test_invalid_specs_rejected():
    with pytest.raises(ValueError, match="num_clusters"):
        validate_spec(basic_spec(num_clusters=0))
    with pytest.raises(ValueError, match="cluster_separation"):
        validate_spec(basic_spec(cluster_separation=-1.0))
    with pytest.raises(ValueError, match="weights"):
        validate_spec(basic_spec(categories=(("Auto", 0.0), ("Retail", 0.0))))
    with pytest.raises(ValueError, match="profile"):
        validate_spec(basic_spec(object_profile={"Auto": ((1, 1.0),) * 5}))
    with pytest.raises(ValueError, match="exceed dim"):
        validate_spec(basic_spec(num_clusters=9, dim=8))


def test_stop_object_share_plants_exact_presence_probability():
    cats = ("Auto",)
    profile = default_object_profile(cats, objects_per_category=10, stop_object_share=0.3)
    spec = basic_spec(cat_names=cats, object_profile=profile)
    _, truth = generate_corpus(spec)
    assert truth.category_object_freq["Auto"][0] == pytest.approx(0.3, abs=1e-12)
