"""Incremental concept tree with an acuity-bounded category utility.

Feature vectors are absorbed one at a time into a hierarchy of Gaussian
concepts (per-dimension mean and standard deviation from running sums).
The children of the root form the live symbol alphabet; structural
changes to that set are reported as events so downstream sequence
models can follow merges and removals. Incorporation is hill-climbing:
at every level the alternative with maximal category utility wins among
placing the vector in an existing child, opening a new partition, or
removing an internal partition and reparenting its children.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

__all__ = ["ConceptNode", "ClusterTree", "StructuralEvent", "category_utility"]


@dataclass
class StructuralEvent:
    """A change to the symbol alphabet: ``created``, ``merged`` or
    ``removed``. ``symbols`` lists the affected symbol(s); for merges the
    sources in id order, with ``survivor`` the earliest of them."""

    kind: str
    symbols: tuple
    survivor: int | None = None

    def to_dict(self):
        d = {"kind": self.kind, "symbols": list(self.symbols)}
        if self.survivor is not None:
            d["survivor"] = self.survivor
        return d


class ConceptNode:
    """One concept: running count, per-dimension sum and sum of squares,
    and an ordered list of child concepts."""

    __slots__ = ("node_id", "symbol_id", "count", "sums", "sumsqs", "children")

    def __init__(self, node_id, dim):
        self.node_id = node_id
        self.symbol_id = None
        self.count = 0
        self.sums = np.zeros(dim)
        self.sumsqs = np.zeros(dim)
        self.children = []

    def add(self, x):
        self.count += 1
        self.sums += x
        self.sumsqs += x * x

    def absorb(self, other):
        self.count += other.count
        self.sums += other.sums
        self.sumsqs += other.sumsqs

    @property
    def mean(self):
        if self.count == 0:
            return np.zeros_like(self.sums)
        return self.sums / self.count

    @property
    def sigma(self):
        if self.count == 0:
            return np.zeros_like(self.sums)
        var = self.sumsqs / self.count - (self.sums / self.count) ** 2
        return np.sqrt(np.maximum(var, 0.0))

    def to_dict(self):
        return {
            "id": self.node_id,
            "symbol": self.symbol_id,
            "count": self.count,
            "mean": self.mean.tolist(),
            "sigma": self.sigma.tolist(),
            "children": [c.to_dict() for c in self.children],
        }


def _specificity(count, sums, sumsqs, acuity):
    """Sum over dimensions of 1 / max(sigma, acuity)."""
    var = sumsqs / count - (sums / count) ** 2
    sigma = np.sqrt(np.maximum(var, 0.0))
    return float(np.sum(1.0 / np.maximum(sigma, acuity)))


def category_utility(parent_stats, child_stats, acuity):
    """Average per-child gain in specificity of a split.

    ``parent_stats`` is ``(count, sums, sumsqs)``; ``child_stats`` a
    non-empty list of the same triples. Standard deviations below the
    acuity are floored to it, in the parent term as well, so single
    instances contribute a finite 1/acuity per dimension.
    """
    p_count, p_sums, p_sumsqs = parent_stats
    k = len(child_stats)
    if k < 1:
        raise ValueError("need at least one child")
    weighted = 0.0
    for count, sums, sumsqs in child_stats:
        weighted += (count / p_count) * _specificity(count, sums, sumsqs, acuity)
    return (weighted - _specificity(p_count, p_sums, p_sumsqs, acuity)) / k


class ClusterTree:
    """Single-writer incremental clustering tree.

    ``incorporate`` must be serialized; read-only queries may interleave
    between writes. ``merge_rel_tol`` is the per-dimension relative
    specificity gain below which two sibling partitions are considered
    indistinguishable and merged (the survivor keeps the earlier id).
    """

    def __init__(self, dim, acuity, merge_rel_tol=0.02):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        if acuity <= 0:
            raise ValueError("acuity must be positive")
        self.dim = dim
        self.acuity = float(acuity)
        self.merge_rel_tol = float(merge_rel_tol)
        self._next_node_id = 0
        self._next_symbol_id = 0
        self.root = self._new_node()
        self.events = []

    # -- helpers ---------------------------------------------------------

    def _new_node(self):
        node = ConceptNode(self._next_node_id, self.dim)
        self._next_node_id += 1
        return node

    def _new_symbol(self, node):
        node.symbol_id = self._next_symbol_id
        self._next_symbol_id += 1
        return node.symbol_id

    def alphabet(self):
        """Current depth-1 symbols in order of first appearance."""
        return sorted(c.symbol_id for c in self.root.children)

    def size(self):
        return self.root.count

    def snapshot(self):
        """JSON-able dump of the full tree."""
        return self.root.to_dict()

    def snapshot_json(self):
        return json.dumps(self.snapshot(), sort_keys=True)

    def event_log_jsonl(self):
        """One JSON line per structural event, in emission order."""
        return "\n".join(
            json.dumps({"event_index": i, **e.to_dict()}, sort_keys=True)
            for i, e in enumerate(self.events))

    # -- incorporation ---------------------------------------------------

    def incorporate(self, x):
        """Absorb one vector; returns ``(symbol_id, events)``.

        The vector updates the statistics of every node on its path. The
        returned symbol is the depth-1 partition that received it;
        events record any alphabet changes in order.
        """
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape[0] != self.dim:
            raise ValueError(f"expected dim {self.dim}, got {x.shape[0]}")
        if not np.all(np.isfinite(x)):
            raise ValueError("vector must be finite")
        events = []
        self.root.add(x)
        if not self.root.children:
            child = self._new_node()
            child.add(x)
            self.root.children.append(child)
            events.append(StructuralEvent("created", (self._new_symbol(child),)))
            self.events.extend(events)
            return child.symbol_id, events

        node = self.root
        depth = 0
        symbol = None
        while True:
            action, target = self._choose(node, x)
            if action == "new":
                child = self._new_node()
                child.add(x)
                node.children.append(child)
                if depth == 0:
                    events.append(
                        StructuralEvent("created", (self._new_symbol(child),)))
                    symbol = child.symbol_id
                break
            if action == "remove":
                self._remove_reparent(node, target, depth, events)
                continue  # re-evaluate at the same level
            # action == "insert"
            child = target
            pre_stats = (child.count, child.sums.copy(), child.sumsqs.copy())
            was_leaf = not child.children
            child.add(x)
            child = self._merge_siblings(node, child, depth, events, x)
            if depth == 0:
                symbol = child.symbol_id
            if node is not self.root and len(node.children) == 1:
                # merging collapsed this level to a single partition:
                # splice the redundant node out (its statistics equal the
                # parent's) and re-place the vector among its children
                node.children = list(child.children)
                if not node.children:
                    break
                continue
            if child.children:
                node = child
                depth += 1
                continue
            # Reached a leaf. Identical instances accumulate in place;
            # anything else splits the leaf into its old self and the
            # newcomer so substructure can form. A leaf that just
            # swallowed a sibling keeps its pooled statistics unsplit.
            merged_here = child.count != pre_stats[0] + 1
            if was_leaf and not merged_here \
                    and not self._is_exact_match(pre_stats, x):
                old = self._new_node()
                old.count, old.sums, old.sumsqs = pre_stats
                fresh = self._new_node()
                fresh.add(x)
                child.children = [old, fresh]
            break
        self.events.extend(events)
        return symbol, events

    @staticmethod
    def _is_exact_match(stats, x):
        count, sums, sumsqs = stats
        if count == 0:
            return True
        mean = sums / count
        var = sumsqs / count - mean ** 2
        return bool(np.all(np.abs(x - mean) < 1e-9) and np.all(var < 1e-12))

    def _choose(self, node, x):
        """Best action at one level by category utility.

        Candidates: insert into each child, open a new partition and,
        for each internal child, remove it and reparent its children
        here (the vector then going to the best resulting child). Near
        ties (within 1e-9 relative) resolve toward no structural change,
        and among inserts toward the child with the nearest mean: the
        acuity floor saturates the utility for tight clusters, so exact
        ties between inserts are routine and must still route sensibly.
        """
        parent_stats = (node.count, node.sums, node.sumsqs)
        child_stats = [(c.count, c.sums, c.sumsqs) for c in node.children]

        def config_with_insert(stats_list, idx):
            out = list(stats_list)
            count, sums, sumsqs = out[idx]
            out[idx] = (count + 1, sums + x, sumsqs + x * x)
            return out

        best_action, best_cu, best_rank = None, None, None

        def consider(cu, rank, action):
            nonlocal best_action, best_cu, best_rank
            if best_cu is None:
                best_action, best_cu, best_rank = action, cu, rank
                return
            tol = 1e-9 * max(1.0, abs(cu), abs(best_cu))
            if cu > best_cu + tol or (cu > best_cu - tol and rank < best_rank):
                best_action, best_cu, best_rank = action, max(cu, best_cu), rank

        for i, child in enumerate(node.children):
            cu = category_utility(parent_stats,
                                  config_with_insert(child_stats, i),
                                  self.acuity)
            dist = float(np.linalg.norm(x - child.mean))
            consider(cu, (0, dist, i), ("insert", child))
        cu_new = category_utility(
            parent_stats, child_stats + [(1, x.copy(), x * x)], self.acuity)
        consider(cu_new, (1, 0.0, 0), ("new", None))
        for i, child in enumerate(node.children):
            if len(child.children) < 2:
                continue
            promoted = [(c.count, c.sums, c.sumsqs) for c in child.children]
            others = [(c.count, c.sums, c.sumsqs)
                      for c in node.children if c is not child]
            config = others + promoted
            cu_remove = max(
                category_utility(parent_stats,
                                 config_with_insert(config, j),
                                 self.acuity)
                for j in range(len(config)))
            consider(cu_remove, (2, 0.0, i), ("remove", child))
        return best_action

    def _remove_reparent(self, node, child, depth, events):
        """Remove a partition, promoting its children to this level."""
        pos = node.children.index(child)
        node.children[pos:pos + 1] = child.children
        if depth == 0:
            events.append(StructuralEvent("removed", (child.symbol_id,)))
            for promoted in child.children:
                events.append(
                    StructuralEvent("created", (self._new_symbol(promoted),)))

    def _merge_siblings(self, node, child, depth, events, pending):
        """Fold siblings that are no longer distinguishable into ``child``.

        Two partitions merge when no dimension gains more than
        ``merge_rel_tol`` relative specificity from keeping them apart
        (all standard deviations floored by the acuity). Cascades until
        no sibling qualifies; returns the surviving node. ``pending`` is
        the vector currently descending: it sits in ``child``'s level
        statistics but has not been placed in any subtree yet.
        """
        changed = True
        while changed:
            changed = False
            for sibling in list(node.children):
                if sibling is child:
                    continue
                if self._indistinguishable(child, sibling):
                    child = self._fuse(node, child, sibling, depth, events,
                                       pending)
                    changed = True
                    break
        return child

    def _indistinguishable(self, u, v):
        a = self.acuity
        wu = u.count / (u.count + v.count)
        wv = 1.0 - wu
        su = np.maximum(u.sigma, a)
        sv = np.maximum(v.sigma, a)
        m_count = u.count + v.count
        m_sums = u.sums + v.sums
        m_sumsqs = u.sumsqs + v.sumsqs
        m_var = m_sumsqs / m_count - (m_sums / m_count) ** 2
        sm = np.maximum(np.sqrt(np.maximum(m_var, 0.0)), a)
        gain = wu / su + wv / sv - 1.0 / sm
        return bool(np.all(gain <= self.merge_rel_tol / sm))

    def _fuse(self, node, u, v, depth, events, pending):
        """Merge sibling v into u (or vice versa); the node with the
        earlier identity survives and adopts the other's children.

        ``u`` carries the vector currently descending (``pending``): its
        level statistics include it but no subtree does yet."""
        if depth == 0:
            survivor, loser = (u, v) if u.symbol_id < v.symbol_id else (v, u)
        else:
            survivor, loser = (u, v) if u.node_id < v.node_id else (v, u)
        # A leaf holds its instances directly; when it fuses with an
        # internal node, wrap that mass as a child so every internal
        # node's count stays the sum of its children. The pending vector
        # is excluded from the wrap: descent will place it below.
        if survivor.children or loser.children:
            for leaf in (survivor, loser):
                if not leaf.children:
                    wrap = self._new_node()
                    wrap.count = leaf.count
                    wrap.sums = leaf.sums.copy()
                    wrap.sumsqs = leaf.sumsqs.copy()
                    if leaf is u:
                        wrap.count -= 1
                        wrap.sums -= pending
                        wrap.sumsqs -= pending * pending
                    if wrap.count > 0:
                        leaf.children = [wrap]
        survivor.absorb(loser)
        survivor.children.extend(loser.children)
        node.children.remove(loser)
        if depth == 0:
            events.append(StructuralEvent(
                "merged",
                tuple(sorted((u.symbol_id, v.symbol_id))),
                survivor=survivor.symbol_id))
        return survivor
