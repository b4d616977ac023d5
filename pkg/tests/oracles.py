"""Independent brute-force oracles used by unit and acceptance tests.

These deliberately re-derive results with plain loops and direct formulas —
no calls into the code paths they check.
"""

import numpy as np


def oracle_frequencies(records, excluded=frozenset()):
    """Recount object fractions corpus-wide and per category."""
    corpus_counts = {}
    cat_counts = {}
    cat_totals = {}
    for r in records:
        cat_totals[r.category] = cat_totals.get(r.category, 0) + 1
        present = {lab.class_id for lab in r.labels} - set(excluded)
        for cid in present:
            corpus_counts[cid] = corpus_counts.get(cid, 0) + 1
            cat_counts.setdefault(r.category, {})
            cat_counts[r.category][cid] = cat_counts[r.category].get(cid, 0) + 1
    n = len(records)
    corpus_frac = {cid: c / n for cid, c in corpus_counts.items()}
    per_cat = {
        cat: {cid: c / cat_totals[cat] for cid, c in counts.items()}
        for cat, counts in cat_counts.items()
    }
    return corpus_frac, per_cat


def oracle_stop_objects(corpus_frac, threshold):
    flagged = [(cid, f) for cid, f in corpus_frac.items() if f > threshold]
    return sorted(flagged, key=lambda item: (-item[1], item[0]))


def oracle_graph_edges(records, excluded, threshold):
    """Set of (category, class_id, weight) with per-category fraction >= threshold."""
    _, per_cat = oracle_frequencies(records, excluded)
    edges = set()
    for cat, freqs in per_cat.items():
        for cid, frac in freqs.items():
            if frac >= threshold:
                edges.add((cat, cid, frac))
    return edges


def oracle_filter_ads(records, min_impressions=5000, max_ctr=0.2):
    kept = []
    for r in records:
        if r.impressions < min_impressions:
            continue
        if r.clicks / r.impressions > max_ctr:
            continue
        kept.append(r.id)
    return kept


def oracle_linear_fit(X, y):
    """Normal equations with an explicit intercept column."""
    A = np.hstack([np.ones((X.shape[0], 1)), X])
    coef = np.linalg.solve(A.T @ A, A.T @ y)
    return coef[1:], coef[0]


def all_partitions(items):
    """Every partition of a list (Bell-number enumeration)."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in all_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


def oracle_best_partition(graph, modularity_fn):
    """Exhaustive modularity maximum over all partitions (use on <= 8 vertices)."""
    best_q = -1.0
    best = None
    for part in all_partitions(list(graph.vertices)):
        community = {v: i for i, group in enumerate(part) for v in group}
        q = modularity_fn(graph, community)
        if q > best_q:
            best_q = q
            best = [set(group) for group in part]
    return best_q, best
