"""Hierarchical n-gram over a dynamic symbol alphabet.

Keeps sparse counts of every observed pattern of length 1..N together
with, per pattern, the total number of same-length observations since
the pattern first appeared. Joint probabilities blend a pattern's own
counts with a compositional estimate built from its two length-(n-1)
sub-patterns, so rarely seen long patterns borrow statistical strength
from their parts. Cluster merges rewrite the registries in place,
summing the counts of patterns that collide.
"""

from __future__ import annotations

import json

import numpy as np

__all__ = ["HierarchicalNgram"]


class HierarchicalNgram:
    """Sparse multi-length pattern model with compositional smoothing.

    Patterns of each length are kept in first-appearance order; all
    count bookkeeping is index-free and survives merges of alphabet
    symbols. ``observe`` and ``apply_merge`` mutate the model and must
    be serialized; queries are read-only.
    """

    def __init__(self, max_length=5):
        if max_length < 1:
            raise ValueError("max_length must be >= 1")
        self.max_length = max_length
        # Per length n (1-based): patterns in first-appearance order,
        # pattern -> position index, counts C, totals-since-first-seen T.
        self._order = [[] for _ in range(max_length + 1)]
        self._index = [{} for _ in range(max_length + 1)]
        self._counts = [[] for _ in range(max_length + 1)]
        self._totals = [[] for _ in range(max_length + 1)]
        self._history = []
        self._n_observed = 0

    # -- bookkeeping ---------------------------------------------------

    @property
    def n_observed(self):
        return self._n_observed

    @property
    def alphabet(self):
        """Live symbols in first-appearance order."""
        return [p[0] for p in self._order[1]]

    def patterns(self, n):
        """Registered patterns of length n in first-appearance order."""
        return list(self._order[n])

    def count(self, pattern):
        pattern = tuple(pattern)
        n = len(pattern)
        if not 1 <= n <= self.max_length:
            return 0
        i = self._index[n].get(pattern)
        return 0 if i is None else self._counts[n][i]

    def total(self, pattern):
        pattern = tuple(pattern)
        n = len(pattern)
        i = self._index[n].get(pattern)
        return 0 if i is None else self._totals[n][i]

    def observe(self, symbol):
        """Ingest the next symbol of the stream.

        For every length n the n-suffix ending at this symbol is
        registered if new, its count incremented, and the totals of all
        registered length-n patterns incremented.
        """
        self._history.append(symbol)
        if len(self._history) > self.max_length:
            del self._history[0]
        self._n_observed += 1
        for n in range(1, min(self.max_length, self._n_observed) + 1):
            pattern = tuple(self._history[-n:])
            idx = self._index[n]
            if pattern not in idx:
                idx[pattern] = len(self._order[n])
                self._order[n].append(pattern)
                self._counts[n].append(0)
                self._totals[n].append(0)
            self._counts[n][idx[pattern]] += 1
            totals = self._totals[n]
            for i in range(len(totals)):
                totals[i] += 1

    def apply_merge(self, sources, survivor):
        """Redirect merged symbols: every pattern mentioning a source is
        rewritten with the survivor; patterns that collide sum their
        counts, keep the earliest registry position, and keep the larger
        total."""
        sources = set(sources)
        if len(sources) < 2:
            raise ValueError("a merge needs at least 2 source symbols")
        if survivor not in sources:
            raise ValueError("survivor must be one of the sources")
        registered = [s for s in self.alphabet if s in sources]
        if registered and registered[0] != survivor:
            raise ValueError(
                "survivor must be the earliest-appearing source symbol")
        for n in range(1, self.max_length + 1):
            new_order, new_index = [], {}
            new_counts, new_totals = [], []
            for pattern, c, t in zip(self._order[n], self._counts[n],
                                     self._totals[n]):
                rewritten = tuple(survivor if s in sources else s
                                  for s in pattern)
                if rewritten in new_index:
                    i = new_index[rewritten]
                    new_counts[i] += c
                    new_totals[i] = max(new_totals[i], t)
                else:
                    new_index[rewritten] = len(new_order)
                    new_order.append(rewritten)
                    new_counts.append(c)
                    new_totals.append(t)
            self._order[n] = new_order
            self._index[n] = new_index
            self._counts[n] = new_counts
            self._totals[n] = new_totals
        self._history = [survivor if s in sources else s
                         for s in self._history]

    # -- probabilities ---------------------------------------------------

    def joint_probabilities(self):
        """Joint probability estimates for all registered patterns.

        Returns a list indexed by length n (entry 0 unused) of arrays
        aligned with ``patterns(n)``. Length-1 probabilities are the
        empirical frequencies; longer lengths blend own counts with the
        width-(n-1) compositional estimate, weighting by how much of the
        stream predates each pattern's first appearance.
        """
        if self._n_observed == 0:
            raise ValueError("no observations yet")
        t11 = float(self._totals[1][0])
        probs = [None] * (self.max_length + 1)
        probs[1] = np.asarray(self._counts[1], dtype=float) / t11
        for n in range(2, self.max_length + 1):
            m = len(self._order[n])
            if m == 0:
                probs[n] = np.zeros(0)
                continue
            composed = self._width_minus_one(n, probs)
            blended = np.zeros(m)
            totals = self._totals[n]
            # Epoch sums accumulate over j < i; epoch j spans the events
            # between the first appearances of patterns j and j+1, with
            # epoch 0 covering everything before pattern 1 existed.
            epoch_sum = 0.0
            q_own = 1.0      # residual of blended mass after patterns <= j
            q_comp = 1.0     # residual of composed mass after patterns <= j
            for i in range(m):
                prev_total = t11 if i == 0 else totals[i - 1]
                delta = prev_total - totals[i]
                if q_comp > 1e-12 and q_own > 0.0:
                    epoch_sum += delta * q_own / q_comp
                blended[i] = (self._counts[n][i] + epoch_sum * composed[i]) / t11
                q_own -= blended[i]
                q_comp -= composed[i]
            total = blended.sum()
            if total > 1.0:
                blended /= total
            probs[n] = blended
        return probs

    def _width_minus_one(self, n, probs):
        """Compositional estimates for length-n patterns from length-(n-1)
        joints: P(prefix) * P(suffix) / sum_y P(interior + y)."""

        def lookup(pattern):
            i = self._index[len(pattern)].get(pattern)
            return 0.0 if i is None else float(probs[len(pattern)][i])

        out = np.zeros(len(self._order[n]))
        denom_cache = {}
        for i, pattern in enumerate(self._order[n]):
            prefix, suffix = pattern[:-1], pattern[1:]
            interior = pattern[1:-1]
            if interior not in denom_cache:
                denom_cache[interior] = sum(
                    lookup(interior + (y,)) for y in self.alphabet)
            denom = denom_cache[interior]
            if denom > 0.0:
                out[i] = lookup(prefix) * lookup(suffix) / denom
        return out

    def predict_next(self, context, alphabet=None):
        """Distribution over the next symbol given trailing context.

        Uses the longest usable context (at most ``max_length - 1``
        symbols) whose continuation patterns carry positive joint mass,
        backing off to shorter contexts and finally to the unigram
        distribution. Returns ``(probabilities, symbols, argmax_symbol)``
        with symbols in first-appearance order; argmax ties resolve
        toward the earliest-registered symbol.
        """
        symbols = self.alphabet
        if not symbols:
            if alphabet:
                k = len(alphabet)
                return np.full(k, 1.0 / k), list(alphabet), alphabet[0]
            raise ValueError("empty model and no alphabet provided")
        probs = self.joint_probabilities()
        context = tuple(context)
        max_ctx = min(len(context), self.max_length - 1)
        for ctx_len in range(max_ctx, 0, -1):
            ctx = context[len(context) - ctx_len:]
            n = ctx_len + 1
            index = self._index[n]
            mass = np.zeros(len(symbols))
            for j, y in enumerate(symbols):
                i = index.get(ctx + (y,))
                if i is not None:
                    mass[j] = probs[n][i]
            total = mass.sum()
            if total > 0.0:
                dist = mass / total
                return dist, symbols, symbols[int(np.argmax(dist))]
        unigram = probs[1]
        total = unigram.sum()
        if total > 0.0:
            dist = unigram / total
        else:
            dist = np.full(len(symbols), 1.0 / len(symbols))
        return dist, symbols, symbols[int(np.argmax(dist))]

    # -- serialization ---------------------------------------------------

    def dump(self):
        """JSON-able table dump: per length, ``{pattern, C, T}`` rows."""
        return {
            str(n): [
                {"pattern": list(p), "C": c, "T": t}
                for p, c, t in zip(self._order[n], self._counts[n],
                                   self._totals[n])
            ]
            for n in range(1, self.max_length + 1)
        }

    def dump_json(self):
        return json.dumps(self.dump(), sort_keys=True)
