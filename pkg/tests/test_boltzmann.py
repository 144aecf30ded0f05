from collections import Counter

import numpy as np
import pytest

from sonoseq.boltzmann import ConceptualBoltzmann, anneal_schedule
from sonoseq.cobweb import StructuralEvent


def fresh_net(symbols=(0, 1), n_slots=5, seed=0, **kw):
    net = ConceptualBoltzmann(n_slots=n_slots, seed=seed, **kw)
    for s in symbols:
        net.add_symbol(s)
    return net


def assert_invariants(net):
    assert np.allclose(net.weights, net.weights.T)
    assert np.all(np.diag(net.weights) == 0)
    for slot in range(net.n_slots):
        ids = net._slot_units(slot)
        for a in ids:
            for b in ids:
                assert not net.connected[a, b]
                if a != b:
                    assert net.weights[a, b] == 0.0


class TestSchedule:
    def test_endpoints_and_length(self):
        sched = anneal_schedule()
        assert len(sched) == 100
        assert sched[0] == pytest.approx(50.0)
        assert sched[-1] == pytest.approx(0.005)

    def test_strictly_decreasing(self):
        sched = anneal_schedule()
        assert np.all(np.diff(sched) < 0)

    def test_validation(self):
        with pytest.raises(ValueError):
            anneal_schedule(1.0, 2.0)
        with pytest.raises(ValueError):
            anneal_schedule(n_steps=0)


class TestUnitUpdate:
    def test_zero_weights_uniform(self):
        net = fresh_net((0, 1, 2), seed=3)
        counts = Counter()
        state = np.zeros(len(net.units))
        for _ in range(3000):
            counts[net.unit_update(state, 2, temperature=1.0)] += 1
        freqs = np.array([counts[s] for s in (0, 1, 2)]) / 3000
        assert np.all(np.abs(freqs - 1 / 3) < 0.05)

    def test_low_temperature_argmax(self):
        net = fresh_net((0, 1), seed=4)
        i = net._slot_unit(3, 0)
        j = net._slot_unit(4, 1)
        net.weights[i, j] = net.weights[j, i] = 1.0
        state = np.zeros(len(net.units))
        state[i] = 1.0  # clamp neighbor by hand
        picks = Counter(net.unit_update(state, 4, temperature=0.01)
                        for _ in range(200))
        assert picks[1] == 200

    def test_monte_carlo_matches_softmax(self):
        net = fresh_net((0, 1), seed=5)
        i = net._slot_unit(3, 0)
        j = net._slot_unit(4, 1)
        net.weights[i, j] = net.weights[j, i] = 0.8
        state = np.zeros(len(net.units))
        state[i] = 1.0
        temperature = 1.0
        # competitor net is zero, so the softmax reduces to the logistic
        # of the net difference
        expected = 1 / (1 + np.exp(-0.8 / temperature))
        picks = Counter(net.unit_update(state, 4, temperature)
                        for _ in range(10000))
        assert picks[1] / 10000 == pytest.approx(expected, abs=0.02)

    def test_temperature_positive(self):
        net = fresh_net()
        with pytest.raises(ValueError):
            net.unit_update(np.zeros(len(net.units)), 0, temperature=0.0)


class TestTraining:
    def test_repeated_ab_strengthens_transition(self):
        net = fresh_net((0, 1), seed=6)
        seq = [0, 1] * 10
        for t in range(1, len(seq)):
            net.train_instance(seq[max(0, t - 4):t + 1])
        w_ab = net.weight(3, 0, 4, 1)
        others = [net.weight(3, a, 4, b) for a in (0, 1) for b in (0, 1)
                  if (a, b) != (0, 1)]
        assert w_ab > 0
        assert w_ab >= max(others)
        assert_invariants(net)

    def test_learning_rate_default(self):
        assert ConceptualBoltzmann().learning_rate == pytest.approx(0.1)

    def test_unknown_symbol_rejected(self):
        net = fresh_net((0,))
        with pytest.raises(KeyError):
            net.train_instance([0, 7])


class TestChunking:
    def test_below_threshold_no_chunks(self):
        net = fresh_net((0, 1), seed=7)
        net.weights[net._slot_unit(0, 0), net._slot_unit(1, 1)] = 0.19
        net.weights[net._slot_unit(1, 1), net._slot_unit(0, 0)] = 0.19
        assert net.maybe_chunk() == []

    def test_trigger_creates_chunk_and_removes_weight(self):
        net = fresh_net((0, 1), seed=8)
        i, j = net._slot_unit(0, 0), net._slot_unit(1, 1)
        net.weights[i, j] = net.weights[j, i] = 0.25
        created = net.maybe_chunk()
        assert [(u.span, u.pattern) for u in created] == [((0, 2), (0, 1))]
        assert net.weights[i, j] == 0.0 and not net.connected[i, j]
        # the chunk is wired to its constituents with the trigger value
        cid = len(net.units) - 1
        assert net.weights[cid, i] == pytest.approx(0.25)
        assert net.weights[cid, j] == pytest.approx(0.25)
        assert_invariants(net)

    def test_chained_chunks_capped_at_window(self):
        net = fresh_net((0,), n_slots=3, seed=9)
        for a, b in ((0, 1), (1, 2)):
            i, j = net._slot_unit(a, 0), net._slot_unit(b, 0)
            net.weights[i, j] = net.weights[j, i] = 0.3
        net.maybe_chunk()
        # drive chunk-chunk and chunk-slot weights high repeatedly
        for _ in range(5):
            for i, u in enumerate(net.units):
                for j in range(i + 1, len(net.units)):
                    if net.connected[i, j]:
                        net.weights[i, j] = net.weights[j, i] = 0.9
            net.maybe_chunk()
        assert all(len(u.pattern) <= 3 for u in net.units
                   if u.kind == "chunk")


class TestAdaptStructure:
    def test_created_grows_each_slot_with_zero_weights(self):
        net = fresh_net((0,), seed=10)
        n_before = len(net.units)
        net.adapt_structure(StructuralEvent("created", (1,)))
        assert len(net.units) == n_before + net.n_slots
        assert_invariants(net)
        new_ids = [net._slot_unit(s, 1) for s in range(net.n_slots)]
        for i in new_ids:
            assert np.all(net.weights[i] == 0)

    def test_merged_sums_weights(self):
        net = fresh_net((0, 1, 2), n_slots=2, seed=11)
        a0, b1 = net._slot_unit(0, 0), net._slot_unit(1, 1)
        a0_, c1 = net._slot_unit(0, 0), net._slot_unit(1, 2)
        net.weights[a0, b1] = net.weights[b1, a0] = 0.4
        net.weights[a0_, c1] = net.weights[c1, a0_] = 0.3
        net.adapt_structure(StructuralEvent("merged", (1, 2), survivor=1))
        assert net.alphabet == [0, 1]
        assert net.weight(0, 0, 1, 1) == pytest.approx(0.7)
        assert_invariants(net)

    def test_merged_collapses_chunks(self):
        net = fresh_net((0, 1, 2), n_slots=3, seed=12)
        for sym in (1, 2):
            i, j = net._slot_unit(0, 0), net._slot_unit(1, sym)
            net.weights[i, j] = net.weights[j, i] = 0.3
        net.maybe_chunk()
        assert len(net.chunk_patterns()) == 2
        net.adapt_structure(StructuralEvent("merged", (1, 2), survivor=1))
        assert net.chunk_patterns() == [((0, 2), (0, 1))]

    def test_created_conserves_weight_mass(self):
        net = fresh_net((0, 1), seed=20)
        rng = np.random.default_rng(0)
        mask = net.connected
        net.weights[mask] = np.abs(rng.normal(0, 0.1, mask.sum()))
        net.weights = (net.weights + net.weights.T) / 2
        before = np.abs(net.weights).sum()
        net.adapt_structure(StructuralEvent("created", (2,)))
        assert np.abs(net.weights).sum() == pytest.approx(before)

    def test_merged_conserves_nonnegative_mass(self):
        net = fresh_net((0, 1, 2), n_slots=3, seed=21)
        rng = np.random.default_rng(1)
        for i in range(len(net.units)):
            for j in range(i + 1, len(net.units)):
                if net.connected[i, j]:
                    w = float(rng.uniform(0.0, 0.1))
                    net.weights[i, j] = net.weights[j, i] = w
        before = np.abs(net.weights).sum()
        net.adapt_structure(StructuralEvent("merged", (1, 2), survivor=1))
        assert np.abs(net.weights).sum() == pytest.approx(before)
        assert_invariants(net)

    def test_removed_deletes_units(self):
        net = fresh_net((0, 1), seed=13)
        net.adapt_structure(StructuralEvent("removed", (1,)))
        assert net.alphabet == [0]
        assert all(u.symbol == 0 for u in net.units if u.kind == "slot")

    def test_unknown_symbol_errors(self):
        net = fresh_net((0,))
        with pytest.raises(KeyError):
            net.adapt_structure(StructuralEvent("removed", (9,)))
        with pytest.raises(ValueError):
            net.adapt_structure(StructuralEvent("spawned", (1,)))


class TestPrediction:
    def test_untrained_roughly_uniform(self):
        net = fresh_net((0, 1), seed=14)
        picks = Counter(net.predict_next([0]) for _ in range(300))
        assert 0.3 < picks[0] / 300 < 0.7

    def test_trained_ab_predicts_b(self):
        net = fresh_net((0, 1), seed=15)
        seq = [0, 1] * 10
        for t in range(1, len(seq)):
            net.train_instance(seq[max(0, t - 4):t + 1])
        hits = sum(net.predict_next([0]) == 1 for _ in range(100))
        assert hits > 80

    def test_seed_reproducibility(self):
        def run(seed):
            net = fresh_net((0, 1), seed=seed)
            seq = [0, 1] * 6
            for t in range(1, len(seq)):
                net.train_instance(seq[max(0, t - 4):t + 1])
            return [net.predict_next([0]) for _ in range(20)]

        assert run(42) == run(42)

    def test_empty_network_rejected(self):
        net = ConceptualBoltzmann()
        with pytest.raises(ValueError):
            net.predict_next([0])


def test_snapshot_json():
    import json
    net = fresh_net((0, 1), seed=16)
    snap = json.loads(net.snapshot_json())
    assert snap["alphabet"] == [0, 1]
    assert len(snap["units"]) == len(net.units)
