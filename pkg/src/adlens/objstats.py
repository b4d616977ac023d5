"""Object-frequency statistics, stop-object removal, per-category top tables.

Frequencies use presence semantics: an ad contributes at most once per object
no matter how often the object repeats in its top-5 list.  Scores are
ignored.  Stop-objects are detected corpus-wide with a strict `>` threshold
and removed from every ad's label set; denominators stay the full ad counts,
so surviving objects keep their exact fractions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .corpus import Corpus


@dataclass(frozen=True)
class CorpusView:
    """A corpus with a set of object classes masked out of every label list."""

    corpus: Corpus
    excluded: frozenset[int] = frozenset()

    def present_objects(self, record) -> set[int]:
        return {lab.class_id for lab in record.labels} - self.excluded


@dataclass
class ObjectFrequencyTable:
    per_object_corpus_fraction: dict[int, float]
    per_category: dict[str, dict[int, float]]
    total_ads: int
    category_counts: dict[str, int] = field(default_factory=dict)


@dataclass
class StopObjectReport:
    stop_objects: list[tuple[int, float]]
    threshold: float


def make_view(corpus: Corpus) -> CorpusView:
    return CorpusView(corpus=corpus)


def _as_view(corpus_or_view) -> CorpusView:
    if isinstance(corpus_or_view, CorpusView):
        return corpus_or_view
    return CorpusView(corpus=corpus_or_view)


def object_frequencies(corpus_or_view) -> ObjectFrequencyTable:
    """Fraction of ads (corpus-wide and per category) whose top-5 contains each object."""
    view = _as_view(corpus_or_view)
    records = view.corpus.records
    if not records:
        raise ValueError("empty corpus")
    corpus_counts: dict[int, int] = {}
    cat_counts: dict[str, dict[int, int]] = {}
    cat_totals: dict[str, int] = {}
    for record in records:
        cat_totals[record.category] = cat_totals.get(record.category, 0) + 1
        per_cat = cat_counts.setdefault(record.category, {})
        for cid in view.present_objects(record):
            corpus_counts[cid] = corpus_counts.get(cid, 0) + 1
            per_cat[cid] = per_cat.get(cid, 0) + 1
    n = len(records)
    return ObjectFrequencyTable(
        per_object_corpus_fraction={cid: c / n for cid, c in sorted(corpus_counts.items())},
        per_category={
            cat: {cid: c / cat_totals[cat] for cid, c in sorted(counts.items())}
            for cat, counts in sorted(cat_counts.items())
        },
        total_ads=n,
        category_counts=dict(sorted(cat_totals.items())),
    )


def detect_stop_objects(table: ObjectFrequencyTable, threshold: float = 0.05) -> StopObjectReport:
    """Objects whose corpus fraction is strictly above the threshold."""
    if not (0.0 < threshold < 1.0):
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    flagged = [
        (cid, frac)
        for cid, frac in table.per_object_corpus_fraction.items()
        if frac > threshold
    ]
    flagged.sort(key=lambda item: (-item[1], item[0]))
    return StopObjectReport(stop_objects=flagged, threshold=threshold)


def filter_stop_objects(corpus_or_view, report: StopObjectReport) -> CorpusView:
    """View with the report's stop-objects removed from every ad's label set."""
    view = _as_view(corpus_or_view)
    stop_ids = frozenset(cid for cid, _ in report.stop_objects)
    return CorpusView(corpus=view.corpus, excluded=view.excluded | stop_ids)


def top_objects_per_category(corpus_or_view, n: int) -> dict[str, list[tuple[int, float]]]:
    """Per category, the n highest-fraction objects; ties go to the lower class_id."""
    if n < 1:
        raise ValueError("n must be >= 1")
    table = object_frequencies(corpus_or_view)
    return {
        cat: sorted(freqs.items(), key=lambda item: (-item[1], item[0]))[:n]
        for cat, freqs in table.per_category.items()
    }
