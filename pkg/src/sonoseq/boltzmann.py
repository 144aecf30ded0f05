"""Categorical Boltzmann network over a sliding symbol window.

Each of the last N sequence positions is a categorical slot encoded as
one-hot binary units over the current alphabet; symmetric weights
connect adjacent slots. Weights crossing a per-level threshold spawn
hidden chunk units that stand for concatenated patterns, and the whole
architecture follows the clustering tree's structural events: new
symbols add units, merges sum weights, removals delete units.
Sampling is annealed Gibbs: a logistic activation per unit, normalized
within a slot so exactly one unit stays active.
"""

from __future__ import annotations

import json

import numpy as np

__all__ = ["ConceptualBoltzmann", "anneal_schedule"]


def anneal_schedule(t_start=50.0, t_end=0.005, n_steps=100):
    """Strictly decreasing geometric temperature ladder."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if not t_start > t_end > 0:
        raise ValueError("need t_start > t_end > 0")
    return np.geomspace(t_start, t_end, n_steps)


class _Unit:
    __slots__ = ("kind", "slot", "symbol", "span", "pattern")

    def __init__(self, kind, slot=None, symbol=None, span=None, pattern=None):
        self.kind = kind          # "slot" or "chunk"
        self.slot = slot
        self.symbol = symbol
        self.span = span          # (lo, hi) slot range, hi exclusive
        self.pattern = pattern    # tuple of symbols for chunks

    def describe(self):
        if self.kind == "slot":
            return {"kind": "slot", "slot": self.slot, "symbol": self.symbol}
        return {"kind": "chunk", "span": list(self.span),
                "pattern": list(self.pattern)}


class ConceptualBoltzmann:
    """Sequence model with on-the-fly architectural adaptation.

    Single-writer: training and structural updates must be serialized.
    All randomness flows from the seed given at construction.
    """

    def __init__(self, n_slots=5, learning_rate=0.1,
                 chunk_thresholds=(0.2, 0.15, 0.1, 0.05),
                 t_start=50.0, t_end=0.005, n_steps=100, seed=0):
        self.n_slots = n_slots
        self.learning_rate = learning_rate
        self.chunk_thresholds = tuple(chunk_thresholds)
        self.schedule = anneal_schedule(t_start, t_end, n_steps)
        self.alphabet = []
        self.units = []
        self.weights = np.zeros((0, 0))
        self.connected = np.zeros((0, 0), dtype=bool)
        self._rng = np.random.default_rng(seed)

    # -- structure -------------------------------------------------------

    def _slot_unit(self, slot, symbol):
        for i, u in enumerate(self.units):
            if u.kind == "slot" and u.slot == slot and u.symbol == symbol:
                return i
        raise KeyError(f"no unit for symbol {symbol!r} at slot {slot}")

    def _slot_units(self, slot):
        return [i for i, u in enumerate(self.units)
                if u.kind == "slot" and u.slot == slot]

    def _chunks(self):
        return [i for i, u in enumerate(self.units) if u.kind == "chunk"]

    def _grow(self, unit):
        self.units.append(unit)
        n = len(self.units)
        w = np.zeros((n, n))
        c = np.zeros((n, n), dtype=bool)
        w[:n - 1, :n - 1] = self.weights
        c[:n - 1, :n - 1] = self.connected
        self.weights, self.connected = w, c
        return n - 1

    def _drop(self, indices):
        keep = [i for i in range(len(self.units)) if i not in set(indices)]
        self.units = [self.units[i] for i in keep]
        self.weights = self.weights[np.ix_(keep, keep)]
        self.connected = self.connected[np.ix_(keep, keep)]

    def _connect(self, i, j, weight=0.0):
        if i == j:
            return
        self.weights[i, j] = self.weights[j, i] = weight
        self.connected[i, j] = self.connected[j, i] = True

    def add_symbol(self, symbol):
        """One new unit per slot, wired to adjacent slots with zero
        weight (the initial chain connectivity)."""
        if symbol in self.alphabet:
            raise ValueError(f"symbol {symbol!r} already present")
        self.alphabet.append(symbol)
        new = [self._grow(_Unit("slot", slot=s, symbol=symbol))
               for s in range(self.n_slots)]
        for s, i in enumerate(new):
            for ds in (-1, 1):
                if 0 <= s + ds < self.n_slots:
                    for j in self._slot_units(s + ds):
                        self._connect(i, j)
        return new

    def adapt_structure(self, event):
        """Follow a clustering StructuralEvent (created/merged/removed)."""
        if event.kind == "created":
            self.add_symbol(event.symbols[0])
        elif event.kind == "removed":
            self._remove_symbol(event.symbols[0])
        elif event.kind == "merged":
            self._merge_symbols(event.symbols, event.survivor)
        else:
            raise ValueError(f"unknown event kind {event.kind!r}")

    def _remove_symbol(self, symbol):
        if symbol not in self.alphabet:
            raise KeyError(f"unknown symbol {symbol!r}")
        self.alphabet.remove(symbol)
        dead = [i for i, u in enumerate(self.units)
                if (u.kind == "slot" and u.symbol == symbol)
                or (u.kind == "chunk" and symbol in u.pattern)]
        self._drop(dead)

    def _merge_symbols(self, sources, survivor):
        for s in sources:
            if s not in self.alphabet and s != survivor:
                raise KeyError(f"unknown symbol {s!r}")
        losers = [s for s in sources if s != survivor]
        # Fold slot-unit weights of each loser into the survivor.
        for loser in losers:
            for slot in range(self.n_slots):
                keep = self._slot_unit(slot, survivor)
                gone = self._slot_unit(slot, loser)
                self.weights[keep, :] += self.weights[gone, :]
                self.weights[:, keep] += self.weights[:, gone]
                self.weights[keep, keep] = 0.0
                self.connected[keep, :] |= self.connected[gone, :]
                self.connected[:, keep] |= self.connected[:, gone]
                self.connected[keep, keep] = False
            self.alphabet.remove(loser)
        dead = [i for i, u in enumerate(self.units)
                if u.kind == "slot" and u.symbol in losers]
        self._drop(dead)
        # Rewrite chunk patterns; colliding chunks keep the wiring with
        # the larger total weight magnitude.
        source_set = set(sources)
        seen = {}
        dead = []
        for i, u in enumerate(self.units):
            if u.kind != "chunk":
                continue
            u.pattern = tuple(survivor if s in source_set else s
                              for s in u.pattern)
            key = (u.span, u.pattern)
            if key in seen:
                prev = seen[key]
                a = np.abs(self.weights[prev]).sum()
                b = np.abs(self.weights[i]).sum()
                dead.append(i if a >= b else prev)
                if b > a:
                    seen[key] = i
            else:
                seen[key] = i
        self._drop(dead)

    def maybe_chunk(self):
        """Create hidden chunk units for weights above their level
        threshold; each trigger weight is removed and the new unit is
        wired to its constituents (inheriting the trigger value) and to
        the units adjacent to its span (zero weight)."""
        created = []
        while True:
            trigger = None
            for i in range(len(self.units)):
                for j in range(i + 1, len(self.units)):
                    if not self.connected[i, j]:
                        continue
                    combined = self._combination(i, j)
                    if combined is None:
                        continue
                    level = max(self._length(i), self._length(j))
                    if level > len(self.chunk_thresholds):
                        continue
                    if self.weights[i, j] > self.chunk_thresholds[level - 1]:
                        trigger = (i, j, combined)
                        break
                if trigger:
                    break
            if trigger is None:
                return created
            i, j, (span, pattern) = trigger
            value = self.weights[i, j]
            self.weights[i, j] = self.weights[j, i] = 0.0
            self.connected[i, j] = self.connected[j, i] = False
            if any(u.kind == "chunk" and u.span == span and u.pattern == pattern
                   for u in self.units):
                continue
            c = self._grow(_Unit("chunk", span=span, pattern=pattern))
            self._connect(c, i, value)
            self._connect(c, j, value)
            lo, hi = span
            for slot in (lo - 1, hi):
                if 0 <= slot < self.n_slots:
                    for k in self._slot_units(slot):
                        self._connect(c, k)
            created.append(self.units[c])

    def _length(self, i):
        u = self.units[i]
        return 1 if u.kind == "slot" else len(u.pattern)

    def _span(self, i):
        u = self.units[i]
        return (u.slot, u.slot + 1) if u.kind == "slot" else u.span

    def _combination(self, i, j):
        """Span and pattern of the chunk combining units i and j, if
        their spans are contiguous and short enough."""
        (alo, ahi), (blo, bhi) = self._span(i), self._span(j)
        if ahi == blo:
            left, right = i, j
        elif bhi == alo:
            left, right = j, i
        else:
            return None
        length = self._length(i) + self._length(j)
        if length > self.n_slots:
            return None
        lpat = (self.units[left].symbol,) if self.units[left].kind == "slot" \
            else self.units[left].pattern
        rpat = (self.units[right].symbol,) if self.units[right].kind == "slot" \
            else self.units[right].pattern
        return (min(alo, blo), max(ahi, bhi)), lpat + rpat

    # -- sampling ----------------------------------------------------------

    def unit_update(self, state, slot, temperature, rng=None):
        """Resample one categorical slot at the given temperature.

        The slot's value is drawn from the softmax of its units' net
        inputs scaled by 1/T (for two alternatives this is exactly the
        logistic rule on their net difference), so exactly one unit
        stays active and the T -> 0 limit concentrates on the argmax.
        Mutates ``state``; returns the sampled symbol.
        """
        if temperature <= 0:
            raise ValueError("temperature must be positive")
        rng = rng or self._rng
        ids = self._slot_units(slot)
        nets = self.weights[ids] @ state
        z = nets / temperature
        z = z - z.max()
        probs = np.exp(np.clip(z, -700, 0))
        probs /= probs.sum()
        pick = int(rng.choice(len(ids), p=probs))
        state[ids] = 0.0
        state[ids[pick]] = 1.0
        return self.units[ids[pick]].symbol

    def _chunk_update(self, state, cid, temperature, rng):
        net = self.weights[cid] @ state
        p = 1.0 / (1.0 + np.exp(-np.clip(net / temperature, -700, 700)))
        state[cid] = 1.0 if rng.random() < p else 0.0

    def _anneal(self, clamped, rng):
        """Run the full temperature ladder; clamped maps slot -> symbol.

        Chunk units whose span is fully clamped are pinned to whether
        their pattern matches the clamped symbols; the rest are sampled.
        Returns the final state vector.
        """
        n = len(self.units)
        state = np.zeros(n)
        free_slots = [s for s in range(self.n_slots) if s not in clamped]
        for s, sym in clamped.items():
            state[self._slot_unit(s, sym)] = 1.0
        for s in free_slots:
            ids = self._slot_units(s)
            if ids:
                state[ids[int(rng.integers(len(ids)))]] = 1.0
        pinned = {}
        free_chunks = []
        for cid in self._chunks():
            u = self.units[cid]
            lo, hi = u.span
            if all(s in clamped for s in range(lo, hi)):
                match = all(clamped[lo + k] == u.pattern[k]
                            for k in range(hi - lo))
                pinned[cid] = 1.0 if match else 0.0
                state[cid] = pinned[cid]
            else:
                free_chunks.append(cid)
                state[cid] = float(rng.integers(2))
        for temperature in self.schedule:
            for s in free_slots:
                if self._slot_units(s):
                    self.unit_update(state, s, temperature, rng)
            for cid in free_chunks:
                self._chunk_update(state, cid, temperature, rng)
        return state

    # -- learning ----------------------------------------------------------

    def train_instance(self, window, rng=None):
        """One contrastive update from a window of recent symbols.

        The window is clamped right-aligned (positive phase), a free
        phase anneals from random states, and every existing weight
        moves by ``mu * (s+ s+ - s- s-)``.
        """
        rng = rng or self._rng
        window = list(window)[-self.n_slots:]
        for sym in window:
            if sym not in self.alphabet:
                raise KeyError(f"symbol {sym!r} not in alphabet")
        clamped = {self.n_slots - len(window) + k: sym
                   for k, sym in enumerate(window)}
        s_pos = self._anneal(clamped, rng)
        s_neg = self._anneal({}, rng)
        outer_pos = np.outer(s_pos, s_pos)
        outer_neg = np.outer(s_neg, s_neg)
        delta = self.learning_rate * (outer_pos - outer_neg)
        self.weights += np.where(self.connected, delta, 0.0)

    def predict_next(self, context, rng=None):
        """Clamp the context right-aligned before the final slot, anneal
        the free units, and read the final slot's active symbol."""
        rng = rng or self._rng
        if not self.alphabet:
            raise ValueError("empty network")
        context = [s for s in context if s in self.alphabet]
        context = list(context)[-(self.n_slots - 1):]
        clamped = {self.n_slots - 1 - len(context) + k: sym
                   for k, sym in enumerate(context)}
        state = self._anneal(clamped, rng)
        ids = self._slot_units(self.n_slots - 1)
        active = [i for i in ids if state[i] > 0.5]
        return self.units[active[0]].symbol if active \
            else self.alphabet[int(rng.integers(len(self.alphabet)))]

    # -- introspection -------------------------------------------------------

    def weight(self, slot_a, sym_a, slot_b, sym_b):
        return float(self.weights[self._slot_unit(slot_a, sym_a),
                                  self._slot_unit(slot_b, sym_b)])

    def chunk_patterns(self):
        return sorted((u.span, u.pattern) for u in self.units
                      if u.kind == "chunk")

    def snapshot(self):
        return {
            "n_slots": self.n_slots,
            "alphabet": list(self.alphabet),
            "units": [u.describe() for u in self.units],
            "chunks": [u.describe() for u in self.units
                       if u.kind == "chunk"],
            "weights": self.weights.tolist(),
        }

    def snapshot_json(self):
        return json.dumps(self.snapshot(), sort_keys=True)
