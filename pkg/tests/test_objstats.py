import pytest

from adlens.objstats import (
    ObjectFrequencyTable,
    detect_stop_objects,
    filter_stop_objects,
    make_view,
    object_frequencies,
    top_objects_per_category,
)
from adlens.synth import CtrModel, SynthSpec, generate_corpus
from helpers import make_corpus, make_record
from oracles import oracle_frequencies, oracle_stop_objects


def table_with(fractions):
    return ObjectFrequencyTable(
        per_object_corpus_fraction=dict(fractions),
        per_category={},
        total_ads=100,
    )


def test_corpus_fraction_direct_count():
    records = [
        make_record(f"r{i}", label_ids=((7, 2, 3, 4, 5) if i < 3 else (10, 11, 12, 13, 14)))
        for i in range(10)
    ]
    table = object_frequencies(make_corpus(records))
    assert table.per_object_corpus_fraction[7] == 0.3


def test_repeated_label_counts_once():
    # pathological top-5 listing object 7 twice
    r = make_record("a", label_ids=(7, 7, 3, 4, 5))
    table = object_frequencies(make_corpus([r, make_record("b", label_ids=(1, 2, 3, 4, 5))]))
    assert table.per_object_corpus_fraction[7] == 0.5


def test_empty_corpus_rejected():
    with pytest.raises(ValueError, match="empty corpus"):
        object_frequencies(make_corpus([]))


def test_frequencies_match_planted_profile_within_3_se():
    import math

    cats = ("Auto", "Retail")
    spec = SynthSpec(
        seed=17, num_records=10000, dim=4, num_clusters=2, cluster_separation=3.0,
        categories=tuple((c, 1.0) for c in cats),
        object_profile={
            c: tuple((10 + 20 * ci + j, 1.0 / (j + 1)) for j in range(10))
            for ci, c in enumerate(cats)
        },
        ctr_model=CtrModel(intercept=0.05),
    )
    corpus, truth = generate_corpus(spec)
    table = object_frequencies(corpus)
    for cat, planted in truth.category_object_freq.items():
        n = table.category_counts[cat]
        for cid, p in planted.items():
            got = table.per_category[cat].get(cid, 0.0)
            se = math.sqrt(max(p * (1 - p), 1e-12) / n)
            assert abs(got - p) <= 3 * se + 1e-12, (cat, cid)


def test_stop_detection_thresholds():
    table = table_with({7: 0.2382, 8: 0.05, 9: 0.049})
    report = detect_stop_objects(table, threshold=0.05)
    assert report.stop_objects == [(7, 0.2382)]


def test_exact_threshold_fraction_not_flagged():
    # 5/100 == 0.05 exactly; strict "over 5%" keeps it
    records = [
        make_record(f"r{i}", label_ids=((42, 2, 3, 4, 5) if i < 5 else (1, 2, 3, 4, 5)))
        for i in range(100)
    ]
    table = object_frequencies(make_corpus(records))
    assert table.per_object_corpus_fraction[42] == 0.05
    report = detect_stop_objects(table)
    assert all(cid != 42 for cid, _ in report.stop_objects)


def test_stop_detection_sorted_descending():
    table = table_with({1: 0.10, 2: 0.30, 3: 0.10})
    report = detect_stop_objects(table)
    assert report.stop_objects == [(2, 0.30), (1, 0.10), (3, 0.10)]


def test_threshold_out_of_range_rejected():
    table = table_with({1: 0.5})
    with pytest.raises(ValueError):
        detect_stop_objects(table, threshold=0.0)
    with pytest.raises(ValueError):
        detect_stop_objects(table, threshold=1.0)


def test_filter_leaves_sports_car_on_top(auto_20pct_corpus):
    table = object_frequencies(auto_20pct_corpus)
    report = detect_stop_objects(table)
    assert [cid for cid, _ in report.stop_objects] == [0]
    view = filter_stop_objects(auto_20pct_corpus, report)
    top = top_objects_per_category(view, 1)
    cid, frac = top["Auto"][0]
    assert cid == 900
    assert frac == 2017 / 10000
    assert round(frac * 100, 2) == 20.17


def test_filter_with_empty_stop_list_is_identity():
    records = [make_record(f"r{i}", label_ids=(1, 2, 3, 4, 5)) for i in range(9)]
    records.append(make_record("r9", label_ids=(6, 7, 8, 9, 10)))
    corpus = make_corpus(records)
    report = detect_stop_objects(object_frequencies(corpus), threshold=0.95)
    assert report.stop_objects == []
    view = filter_stop_objects(corpus, report)
    assert object_frequencies(view).per_object_corpus_fraction == (
        object_frequencies(corpus).per_object_corpus_fraction
    )


def test_filter_promotes_second_ranked_object():
    # object 1 in 8/10 ads (stop at threshold 0.5), object 2 in 6/10
    records = []
    for i in range(10):
        ids = [100 + i, 200 + i, 300 + i]
        if i < 8:
            ids.insert(0, 1)
        if i < 6:
            ids.insert(1, 2)
        records.append(make_record(f"r{i}", label_ids=tuple(ids[:5])))
    corpus = make_corpus(records)
    table = object_frequencies(corpus)
    report = detect_stop_objects(table, threshold=0.7)
    assert [cid for cid, _ in report.stop_objects] == [1]
    view = filter_stop_objects(corpus, report)
    corpus_frac, _ = oracle_frequencies(corpus.records, excluded={1})
    got = object_frequencies(view).per_object_corpus_fraction
    assert got == dict(sorted(corpus_frac.items()))
    top = top_objects_per_category(view, 1)
    assert top["Auto"][0][0] == 2


def test_top_objects_truncates_to_available():
    records = [make_record("a", label_ids=(1, 2, 3, 3, 3))]
    top = top_objects_per_category(make_corpus(records), 5)
    assert len(top["Auto"]) == 3


def test_top_objects_tie_breaks_by_class_id():
    # objects 30 and 20 each in 1 of 10 ads
    records = [make_record(f"r{i}", label_ids=(1, 2, 3, 4, 5)) for i in range(8)]
    records.append(make_record("x", label_ids=(30, 2, 3, 4, 5)))
    records.append(make_record("y", label_ids=(20, 2, 3, 4, 5)))
    top = top_objects_per_category(make_corpus(records), 10)["Auto"]
    ranked = [cid for cid, frac in top if frac == 0.1]
    assert ranked == [20, 30]


def test_planted_ranking_recovered_at_10k_records():
    # presence probabilities chosen with gaps >> 3 standard errors
    probs = (0.95, 0.80, 0.65, 0.55, 0.52)
    profile = tuple((10 + pos, p) for pos, p in enumerate(probs)) + tuple(
        (15 + pos, 1.0 - p) for pos, p in enumerate(probs)
    )
    spec = SynthSpec(
        seed=29, num_records=10000, dim=4, num_clusters=1, cluster_separation=0.0,
        categories=(("Auto", 1.0),), object_profile={"Auto": profile},
        ctr_model=CtrModel(intercept=0.05),
    )
    corpus, truth = generate_corpus(spec)
    planted_order = [cid for cid, _ in sorted(
        truth.category_object_freq["Auto"].items(), key=lambda kv: (-kv[1], kv[0])
    )]
    got = [cid for cid, _ in top_objects_per_category(corpus, 10)["Auto"]]
    assert got == planted_order


def test_fractions_match_bruteforce_recount():
    spec = SynthSpec(
        seed=5, num_records=600, dim=4, num_clusters=2, cluster_separation=2.0,
        categories=(("Auto", 2.0), ("Retail", 1.0)),
        object_profile={
            "Auto": tuple((j, 1.0) for j in range(8)),
            "Retail": tuple((j + 8, 1.0) for j in range(8)),
        },
        ctr_model=CtrModel(intercept=0.05),
    )
    corpus, _ = generate_corpus(spec)
    table = object_frequencies(corpus)
    corpus_frac, per_cat = oracle_frequencies(corpus.records)
    assert table.per_object_corpus_fraction == dict(sorted(corpus_frac.items()))
    assert {c: dict(sorted(v.items())) for c, v in sorted(per_cat.items())} == table.per_category
    report = detect_stop_objects(table, 0.05)
    assert report.stop_objects == oracle_stop_objects(corpus_frac, 0.05)
    for fracs in [table.per_object_corpus_fraction, *table.per_category.values()]:
        assert all(0.0 <= f <= 1.0 for f in fracs.values())


def test_filter_never_increases_any_fraction(auto_20pct_corpus):
    before = object_frequencies(auto_20pct_corpus).per_object_corpus_fraction
    report = detect_stop_objects(object_frequencies(auto_20pct_corpus))
    after = object_frequencies(
        filter_stop_objects(auto_20pct_corpus, report)
    ).per_object_corpus_fraction
    for cid, frac in after.items():
        assert frac <= before[cid]


def test_near_unity_threshold_flags_nothing():
    records = [
        make_record(f"r{i}", label_ids=(i % 3, 10 + i % 2, 20 + i % 3, 30 + i % 5, 40 + i % 7))
        for i in range(30)
    ]
    table = object_frequencies(make_corpus(records))
    assert all(f < 1.0 for f in table.per_object_corpus_fraction.values())
    report = detect_stop_objects(table, threshold=1.0 - 1e-12)
    assert report.stop_objects == []


def test_make_view_starts_unfiltered():
    corpus = make_corpus([make_record("a")])
    view = make_view(corpus)
    assert view.excluded == frozenset()
