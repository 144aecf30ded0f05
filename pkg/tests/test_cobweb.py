import json

import numpy as np
import pytest

from sonoseq.cobweb import ClusterTree, category_utility
from sonoseq.metrics import adjusted_rand_index


def assert_counts_consistent(node):
    if node.children:
        assert node.count == sum(c.count for c in node.children)
        for child in node.children:
            assert_counts_consistent(child)


def two_source_stream(n=200, separation=4.0, noise=0.4, dim=52, seed=0):
    rng = np.random.default_rng(seed)
    mu_b = np.zeros(dim)
    mu_b[:2] = separation
    stream, truth = [], []
    for i in range(n):
        src = i % 2
        mu = mu_b if src else np.zeros(dim)
        stream.append(mu + rng.normal(0, noise, dim))
        truth.append(src)
    return stream, truth


def crossfade_stream(n_sep=12, n_fade=30, n_tail=120, dim=4, seed=1):
    rng = np.random.default_rng(seed)
    center = np.zeros(dim)
    center[:2] = 3.0
    stream = []
    for i in range(n_sep + n_fade + n_tail):
        src = i % 2
        if i < n_sep:
            f = 0.0
        elif i < n_sep + n_fade:
            f = (i - n_sep) / n_fade
        else:
            f = 1.0
        mu = center / 2 + (1 - f) * (center / 2 if src else -center / 2)
        stream.append(mu + rng.normal(0, 0.3, dim))
    return stream


class TestCategoryUtility:
    def test_single_child_identical_to_parent(self):
        parent = (10, np.full(3, 5.0), np.full(3, 30.0))
        assert category_utility(parent, [parent], acuity=1.0) == \
            pytest.approx(0.0)

    def test_separated_point_masses(self):
        # parent holds values {0, 10} in one dimension, acuity 1
        parent = (2, np.array([10.0]), np.array([100.0]))
        children = [(1, np.array([0.0]), np.array([0.0])),
                    (1, np.array([10.0]), np.array([100.0]))]
        # children floored to 1/a = 1; parent sigma 5
        expected = ((0.5 * 1 + 0.5 * 1) - 1 / 5) / 2
        assert category_utility(parent, children, acuity=1.0) == \
            pytest.approx(expected)

    def test_acuity_floors_specificity(self):
        # a tight child contributes at most 1/acuity per dimension
        parent = (3, np.zeros(1), np.zeros(1))
        children = [(3, np.zeros(1), np.zeros(1))]
        for acuity in (0.5, 1.0, 2.0):
            cu = category_utility(parent, children, acuity)
            assert cu == pytest.approx(0.0)
        lone = [(1, np.zeros(1), np.zeros(1)), (2, np.zeros(1), np.zeros(1))]
        cu = category_utility(parent, lone, 2.0)
        assert cu <= 1 / 2.0


class TestIncorporate:
    def test_first_vector_creates_symbol_zero(self):
        tree = ClusterTree(3, acuity=1.0)
        symbol, events = tree.incorporate(np.zeros(3))
        assert symbol == 0
        assert [e.kind for e in events] == ["created"]
        assert tree.alphabet() == [0]

    def test_dimension_mismatch(self):
        tree = ClusterTree(3, acuity=1.0)
        with pytest.raises(ValueError):
            tree.incorporate(np.zeros(4))

    def test_non_finite_rejected(self):
        tree = ClusterTree(2, acuity=1.0)
        with pytest.raises(ValueError):
            tree.incorporate([np.nan, 0.0])

    def test_two_sources_two_symbols(self):
        stream, truth = two_source_stream()
        tree = ClusterTree(52, acuity=1.0)
        labels = [tree.incorporate(x)[0] for x in stream]
        assert len(tree.alphabet()) == 2
        assert adjusted_rand_index(truth, labels) >= 0.95
        assert_counts_consistent(tree.root)

    def test_crossfade_merges_to_single_symbol(self):
        tree = ClusterTree(4, acuity=1.0)
        merges = []
        for x in crossfade_stream():
            _, events = tree.incorporate(x)
            merges.extend(e for e in events if e.kind == "merged")
        assert len(merges) >= 1
        assert tree.alphabet() == [0]
        # survivor is the earliest-appearing source
        assert merges[0].survivor == min(merges[0].symbols)
        assert_counts_consistent(tree.root)


class TestAlphabetAndEvents:
    def test_empty_tree(self):
        assert ClusterTree(2, acuity=1.0).alphabet() == []

    def test_event_fold_equals_alphabet(self):
        rng = np.random.default_rng(5)
        tree = ClusterTree(3, acuity=0.8)
        for _ in range(150):
            tree.incorporate(rng.normal(0, 2.0, 3))
        view = []
        for ev in tree.events:
            if ev.kind == "created":
                view.extend(ev.symbols)
            elif ev.kind == "removed":
                view.remove(ev.symbols[0])
            elif ev.kind == "merged":
                for s in ev.symbols:
                    if s != ev.survivor:
                        view.remove(s)
        assert sorted(view) == tree.alphabet()

    def test_symbol_ids_never_reused(self):
        rng = np.random.default_rng(6)
        tree = ClusterTree(2, acuity=0.5)
        seen = set()
        for _ in range(200):
            tree.incorporate(rng.normal(0, 3.0, 2))
        created = [e.symbols[0] for e in tree.events if e.kind == "created"]
        assert len(created) == len(set(created))


class TestStatisticsExactness:
    def test_root_matches_batch(self):
        rng = np.random.default_rng(7)
        tree = ClusterTree(3, acuity=0.5)
        xs = [rng.normal(0, 2.0, 3) for _ in range(80)]
        for x in xs:
            tree.incorporate(x)
        batch = np.array(xs)
        assert np.allclose(tree.root.mean, batch.mean(axis=0))
        assert np.allclose(tree.root.sigma, batch.std(axis=0))
        assert tree.size() == 80

    def test_symbol_nodes_match_batch(self):
        stream, _ = two_source_stream(n=100, dim=4)
        tree = ClusterTree(4, acuity=1.0)
        assignments = {}
        alias = {}
        for x in stream:
            sym, events = tree.incorporate(x)
            for ev in events:
                if ev.kind == "merged":
                    for s in ev.symbols:
                        if s != ev.survivor:
                            alias[s] = ev.survivor
            assignments.setdefault(sym, []).append(x)
        resolved = {}
        for sym, vecs in assignments.items():
            while sym in alias:
                sym = alias[sym]
            resolved.setdefault(sym, []).extend(vecs)
        for node in tree.root.children:
            batch = np.array(resolved[node.symbol_id])
            assert node.count == len(batch)
            assert np.allclose(node.mean, batch.mean(axis=0))
            assert np.allclose(node.sigma, batch.std(axis=0))


class TestDeterminism:
    def test_identical_runs(self):
        stream, _ = two_source_stream(n=120, dim=6, seed=9)
        snaps, logs = [], []
        for _ in range(2):
            tree = ClusterTree(6, acuity=1.0)
            for x in stream:
                tree.incorporate(x)
            snaps.append(tree.snapshot_json())
            logs.append([(e.kind, e.symbols) for e in tree.events])
        assert snaps[0] == snaps[1]
        assert logs[0] == logs[1]


def test_snapshot_is_json_with_expected_fields():
    tree = ClusterTree(2, acuity=1.0)
    tree.incorporate([0.0, 0.0])
    tree.incorporate([5.0, 5.0])
    snap = json.loads(tree.snapshot_json())
    assert {"id", "symbol", "count", "mean", "sigma", "children"} <= set(snap)
    assert snap["count"] == 2
