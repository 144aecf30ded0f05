"""Partition comparison metrics and event matching.

Partitions are given as label sequences: ``labels[i]`` is the cluster
label of item ``i``. Any hashable labels work; the metrics only depend
on the grouping, never on the label values themselves.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "contingency_table",
    "rand_index",
    "adjusted_rand_index",
    "match_events",
    "onset_fmeasure",
    "greedy_label_mapping",
    "prediction_ari",
    "blocks_to_labels",
    "metric_report",
    "write_match_csv",
]


def blocks_to_labels(blocks, n_items=None):
    """Convert a partition given as blocks of indices to a label array.

    Blocks use 0-based item indices. Labels are block positions.
    """
    if n_items is None:
        n_items = sum(len(b) for b in blocks)
    labels = np.full(n_items, -1, dtype=int)
    for k, block in enumerate(blocks):
        for i in block:
            if labels[i] != -1:
                raise ValueError(f"item {i} appears in more than one block")
            labels[i] = k
    if np.any(labels < 0):
        raise ValueError("blocks do not cover all items")
    return labels


def _as_label_indices(labels):
    """Map arbitrary hashable labels to dense integer codes."""
    codes = {}
    out = np.empty(len(labels), dtype=int)
    for i, lab in enumerate(labels):
        out[i] = codes.setdefault(lab, len(codes))
    return out, len(codes)


def contingency_table(a_labels, c_labels):
    """Cross-tabulate two label sequences over the same items.

    Returns ``(table, a_values, c_values)`` where ``table[i, j]`` counts
    items with ``a_labels == a_values[i]`` and ``c_labels == c_values[j]``.
    Value lists are in first-appearance order.
    """
    if len(a_labels) != len(c_labels):
        raise ValueError("label sequences must have equal length")
    a_idx, na = _as_label_indices(a_labels)
    c_idx, nc = _as_label_indices(c_labels)
    table = np.zeros((na, nc), dtype=np.int64)
    np.add.at(table, (a_idx, c_idx), 1)

    def _first_seen(labels):
        seen, order = set(), []
        for lab in labels:
            if lab not in seen:
                seen.add(lab)
                order.append(lab)
        return order

    return table, _first_seen(a_labels), _first_seen(c_labels)


def _comb2(x):
    x = np.asarray(x, dtype=np.int64)
    return x * (x - 1) // 2


def rand_index(a_labels, c_labels):
    """Fraction of item pairs on which the two partitions agree.

    Agreement means the pair is grouped together in both partitions or
    separated in both. Requires at least two items.
    """
    t = len(a_labels)
    if t < 2:
        raise ValueError("rand_index needs at least 2 items")
    table, _, _ = contingency_table(a_labels, c_labels)
    total_pairs = _comb2(t)
    same_same = _comb2(table).sum()
    same_a = _comb2(table.sum(axis=1)).sum()
    same_c = _comb2(table.sum(axis=0)).sum()
    diff_diff = total_pairs - same_a - same_c + same_same
    return float((same_same + diff_diff) / total_pairs)


def adjusted_rand_index(a_labels, c_labels):
    """Chance-corrected Rand index (Hubert-Arabie permutation model).

    1 for identical partitions, approximately 0 for independent random
    partitions. Degenerate cases where the permutation-model denominator
    vanishes (both partitions single-block or both all-singletons) score
    1 when the partitions are equal and 0 otherwise.
    """
    t = len(a_labels)
    if t < 2:
        raise ValueError("adjusted_rand_index needs at least 2 items")
    table, _, _ = contingency_table(a_labels, c_labels)
    sum_ij = _comb2(table).sum()
    sum_a = _comb2(table.sum(axis=1)).sum()
    sum_c = _comb2(table.sum(axis=0)).sum()
    total_pairs = _comb2(t)
    expected = sum_a * sum_c / total_pairs
    denom = 0.5 * (sum_a + sum_c) - expected
    if denom == 0.0:
        # Both trivial in the same direction: equality decides.
        same = _as_label_indices(a_labels)[0]
        other = _as_label_indices(c_labels)[0]
        return 1.0 if np.array_equal(same, other) else 0.0
    return float((sum_ij - expected) / denom)


def match_events(estimated, annotated, tolerance):
    """Greedy one-to-one matching of two time lists.

    Candidate pairs within ``tolerance`` seconds are taken in order of
    ascending absolute time difference; each event matches at most once.
    Returns a list of ``(estimated_index, annotated_index)`` pairs.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    estimated = np.asarray(estimated, dtype=float)
    annotated = np.asarray(annotated, dtype=float)
    candidates = []
    for i, e in enumerate(estimated):
        for j, a in enumerate(annotated):
            d = abs(e - a)
            if d <= tolerance:
                candidates.append((d, i, j))
    candidates.sort()
    used_e, used_a, pairs = set(), set(), []
    for _, i, j in candidates:
        if i in used_e or j in used_a:
            continue
        used_e.add(i)
        used_a.add(j)
        pairs.append((i, j))
    pairs.sort()
    return pairs


def onset_fmeasure(estimated, annotated, tolerance=0.05):
    """Precision, recall and F-measure of onset detection.

    Uses greedy one-to-one matching within ``tolerance`` seconds.
    """
    pairs = match_events(estimated, annotated, tolerance)
    n_match = len(pairs)
    precision = n_match / len(estimated) if len(estimated) else 0.0
    recall = n_match / len(annotated) if len(annotated) else 0.0
    f = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return precision, recall, f


def greedy_label_mapping(table):
    """Bind cluster columns to annotation rows by repeatedly taking the
    globally maximal co-occurrence entry.

    Ties resolve toward the smallest (row, column) pair. Zero entries are
    never bound, so surplus clusters stay unmapped. Returns a dict
    ``{column_index: row_index}``.
    """
    table = np.asarray(table)
    if table.size == 0:
        raise ValueError("matching matrix is empty")
    work = table.astype(float).copy()
    mapping = {}
    n_rounds = min(work.shape)
    for _ in range(n_rounds):
        best = work.max()
        if best <= 0:
            break
        row, col = np.unravel_index(np.argmax(work), work.shape)
        mapping[int(col)] = int(row)
        work[row, :] = -1.0
        work[:, col] = -1.0
    return mapping


def metric_report(metric, value, params=None):
    """Uniform JSON-able report shape for any metric result."""
    return {"metric": metric, "value": value, "params": dict(params or {})}


def write_match_csv(rows, path):
    """Dump per-event matching details as CSV.

    ``rows`` are dicts with ``index``, ``time``, ``symbol``,
    ``predicted_symbol``, ``predicted_time`` and ``match`` keys (extra
    keys are ignored); empty fields render blank.
    """
    columns = ["index", "time", "symbol", "predicted_symbol",
               "predicted_time", "match"]
    with open(path, "w") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(
                "" if row.get(c) is None else str(row[c])
                for c in columns) + "\n")


def prediction_ari(predicted_events, annotated_events, tolerance=0.15):
    """Score timed symbol predictions against timed annotations.

    Both arguments are time-sorted ``(symbol, time)`` lists. Predicted
    events are matched one-to-one to annotated events within
    ``tolerance`` seconds; every annotated event is then labeled either
    with its matched predicted symbol or with a unique singleton label,
    and that labeling is compared to the annotation labels with the
    adjusted Rand index.
    """
    ann_times = [t for _, t in annotated_events]
    pred_times = [t for _, t in predicted_events]
    pairs = match_events(pred_times, ann_times, tolerance)
    matched = {j: predicted_events[i][0] for i, j in pairs}
    pred_labels = []
    for j in range(len(annotated_events)):
        if j in matched:
            pred_labels.append(("sym", matched[j]))
        else:
            pred_labels.append(("miss", j))
    ann_labels = [sym for sym, _ in annotated_events]
    return adjusted_rand_index(ann_labels, pred_labels)
