"""End-to-end orchestration: audio to onsets to timbre symbols to
next-event predictions, plus the evaluation protocols (onset matching,
clustering/transcription scoring, expectation curves, online prediction
with inter-onset-interval forecasts) and a parameter grid search."""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass, asdict, replace

import numpy as np

from .boltzmann import ConceptualBoltzmann
from .cobweb import ClusterTree
from .features import timbre_descriptor
from .hngram import HierarchicalNgram
from .metrics import (adjusted_rand_index, contingency_table,
                      greedy_label_mapping, match_events, onset_fmeasure,
                      prediction_ari)
from .onsets import detect_onsets

__all__ = ["PipelineConfig", "EventRecord", "OnlinePredictor",
           "run_onsets", "run_transcription", "run_expectation",
           "run_prediction", "grid_search", "audit_causality"]


@dataclass
class PipelineConfig:
    """Every tunable of the chain, defaulting to the reference values."""

    sample_rate: int = 44100
    window_size: int = 1024
    hop: int = 128
    smoothing_length: int = 33      # detection function average, frames
    sensitivity: float = 0.9        # median threshold scale
    lookahead: int = 10             # median threshold window, frames
    peak_window: int = 11           # onset peak suppression, frames
    silence_threshold: float = 0.002
    feature_window_ms: float = 150.0
    n_mels: int = 40
    timbre_acuity: float = 18.5
    ioi_acuity: float = 0.075
    model: str = "hn"               # "hn" or "cb"
    max_length: int = 5             # longest pattern length N
    context_window: int = 12        # annotations used once warmed up
    onset_tolerance: float = 0.05
    prediction_tolerance: float = 0.15
    seed: int = 0

    def replace(self, **kw):
        return replace(self, **kw)


@dataclass
class EventRecord:
    """One transcribed event with the prediction that preceded it."""

    index: int
    time: float
    symbol: int
    ioi: float | None = None
    predicted_symbol: int | None = None
    predicted_time: float | None = None
    match: str | None = None        # correct / wrong-cluster / unmatched

    def to_dict(self):
        return asdict(self)


def _detect(samples, config):
    return detect_onsets(
        samples, config.sample_rate, config.window_size, config.hop,
        config.smoothing_length, config.sensitivity, config.lookahead,
        config.peak_window, config.silence_threshold)


def run_onsets(samples, config=None, annotations=None):
    """Detected onset times, plus (precision, recall, F) when annotated
    times are given."""
    config = config or PipelineConfig()
    times = _detect(samples, config)
    if annotations is None:
        return times, None
    return times, onset_fmeasure(times, list(annotations),
                                 config.onset_tolerance)


class OnlinePredictor:
    """The online loop: cluster each event's feature vector, keep the
    sequence models structurally in sync with the tree, and after every
    event emit a prediction for the next symbol and its onset time.

    Symbols and inter-onset intervals run through independent mirrored
    stacks: a clustering tree plus a sequence model each. The interval
    decoder returns the mean of the predicted interval cluster.
    """

    def __init__(self, config, dim):
        self.config = config
        self.tree = ClusterTree(dim, config.timbre_acuity)
        self.ioi_tree = ClusterTree(1, config.ioi_acuity)
        self.hn = HierarchicalNgram(config.max_length)
        self.ioi_hn = HierarchicalNgram(config.max_length)
        self.cb = None
        if config.model == "cb":
            self.cb = ConceptualBoltzmann(n_slots=config.max_length,
                                          seed=config.seed)
        elif config.model != "hn":
            raise ValueError(f"unknown model {config.model!r}")
        self._alias = {}
        self._ioi_alias = {}
        self._symbols = []
        self._ioi_symbols = []
        self._times = []

    # alias maps follow merges so stored context stays resolvable
    @staticmethod
    def _resolve(alias, s):
        while s in alias:
            s = alias[s]
        return s

    def _apply_events(self, events, alias, model, cb=None):
        for ev in events:
            if ev.kind == "merged":
                for s in ev.symbols:
                    if s != ev.survivor:
                        alias[s] = ev.survivor
                model.apply_merge(ev.symbols, ev.survivor)
            if cb is not None:
                cb.adapt_structure(ev)
        return alias

    def step(self, time, vector):
        """Ingest one event; returns the EventRecord for it (carrying
        the prediction made after the previous event) plus the new
        prediction ``(symbol, time)`` for the next event."""
        index = len(self._times)
        symbol, events = self.tree.incorporate(vector)
        self._apply_events(events, self._alias, self.hn, self.cb)
        symbol = self._resolve(self._alias, symbol)
        if self.cb is not None and symbol not in self.cb.alphabet:
            self.cb.add_symbol(symbol)
        self.hn.observe(symbol)
        self._symbols.append(symbol)
        context = [self._resolve(self._alias, s) for s in self._symbols]
        if self.cb is not None:
            # symbols removed from the alphabet (splits promote their
            # instances under new ids) are unusable as context
            window = [s for s in context[-self.config.max_length:]
                      if s in self.cb.alphabet]
            if window:
                self.cb.train_instance(window)
                self.cb.maybe_chunk()
        ioi = None
        if self._times:
            ioi = time - self._times[-1]
            ioi_sym, ioi_events = self.ioi_tree.incorporate([ioi])
            self._apply_events(ioi_events, self._ioi_alias, self.ioi_hn)
            self.ioi_hn.observe(self._resolve(self._ioi_alias, ioi_sym))
            self._ioi_symbols.append(ioi_sym)
        self._times.append(time)
        next_symbol = self._predict_symbol(context)
        next_time = self._predict_time(time)
        return EventRecord(index=index, time=time, symbol=symbol, ioi=ioi), \
            (next_symbol, next_time)

    def _predict_symbol(self, context):
        ctx = context[-(self.config.max_length - 1):]
        if self.cb is not None:
            return self.cb.predict_next(ctx)
        _, _, argmax = self.hn.predict_next(ctx)
        return argmax

    def _predict_time(self, now):
        if self.ioi_hn.n_observed == 0:
            return None
        ctx = [self._resolve(self._ioi_alias, s)
               for s in self._ioi_symbols][-(self.config.max_length - 1):]
        _, _, ioi_sym = self.ioi_hn.predict_next(ctx)
        for node in self.ioi_tree.root.children:
            if node.symbol_id == ioi_sym:
                return now + float(node.mean[0])
        return None

    def resolved_symbols(self):
        """The transcribed stream under the final merge view."""
        return [self._resolve(self._alias, s) for s in self._symbols]

    def state_hash(self):
        """Digest of all model state (excluding RNG position)."""
        payload = json.dumps({
            "tree": self.tree.snapshot(),
            "ioi_tree": self.ioi_tree.snapshot(),
            "hn": self.hn.dump(),
            "ioi_hn": self.ioi_hn.dump(),
            "cb": self.cb.snapshot() if self.cb is not None else None,
        }, sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()


def _event_features(samples, onset_times, config):
    return [timbre_descriptor(samples, config.sample_rate, t,
                              config.feature_window_ms, config.window_size,
                              config.hop, config.n_mels)
            for t in onset_times]


def run_transcription(samples, annotations, config=None,
                      use_annotated_onsets=False):
    """Onsets, features and clustering; scored against annotations.

    Annotations are ``(time, label)`` pairs. With estimated onsets each
    annotated event takes the symbol of its time-matched detection
    (unmatched events become singletons); with annotated onsets the
    symbol sequence aligns one-to-one. Returns
    ``(symbols, onset_times, ari)``.
    """
    config = config or PipelineConfig()
    if len(samples) == 0:
        raise ValueError("empty audio")
    ann_times = [t for t, _ in annotations]
    ann_labels = [lab for _, lab in annotations]
    onset_times = list(ann_times) if use_annotated_onsets \
        else _detect(samples, config)
    vectors = _event_features(samples, onset_times, config)
    tree = ClusterTree(52, config.timbre_acuity)
    alias, raw = {}, []
    for vec in vectors:
        sym, events = tree.incorporate(vec)
        for ev in events:
            if ev.kind == "merged":
                for s in ev.symbols:
                    if s != ev.survivor:
                        alias[s] = ev.survivor
        raw.append(sym)
    symbols = [OnlinePredictor._resolve(alias, s) for s in raw]
    if use_annotated_onsets:
        ari = adjusted_rand_index(ann_labels, symbols)
    else:
        pairs = match_events(onset_times, ann_times, config.onset_tolerance)
        matched = {j: symbols[i] for i, j in pairs}
        view = [("sym", matched[j]) if j in matched else ("miss", j)
                for j in range(len(ann_times))]
        ari = adjusted_rand_index(ann_labels, view)
    return symbols, onset_times, ari


def _train_hn(window, n):
    model = HierarchicalNgram(n)
    for s in window:
        model.observe(s)
    return model


def _train_cb(window, n, seed):
    net = ConceptualBoltzmann(n_slots=n, seed=seed)
    for s in window:
        if s not in net.alphabet:
            net.add_symbol(s)
    for k in range(2, len(window) + 1):
        net.train_instance(window[max(0, k - n):k])
        net.maybe_chunk()
    return net


def run_expectation(symbols, pattern_length, config=None, t_start=1):
    """Next-symbol forecasting from annotated history.

    At each position t (from ``t_start`` on) the model trains on the
    history (the full prefix until ``5 * pattern_length`` events,
    afterwards only the last ``context_window`` symbols), forecasts
    ``4 * pattern_length`` symbols greedily, and the forecast partition
    is scored against the true continuation. Returns a list of
    ``(t, ari)``.
    """
    config = config or PipelineConfig()
    symbols = list(symbols)
    horizon = 4 * pattern_length
    n = config.max_length
    rng = np.random.default_rng(config.seed)
    curve = []
    for t in range(max(1, t_start), len(symbols) - horizon + 1):
        window = symbols[:t] if t <= 5 * pattern_length \
            else symbols[max(0, t - config.context_window):t]
        if config.model == "cb":
            net = _train_cb(window, n, int(rng.integers(2 ** 31)))
            predict = lambda ctx: net.predict_next(ctx)
        else:
            model = _train_hn(window, n)
            predict = lambda ctx: model.predict_next(ctx)[2]
        ctx = list(window)
        forecast = []
        for _ in range(horizon):
            nxt = predict(ctx[-(n - 1):] if n > 1 else [])
            forecast.append(nxt)
            ctx.append(nxt)
        truth = symbols[t:t + horizon]
        curve.append((t, adjusted_rand_index(truth, forecast)))
    return curve


def run_prediction(samples, annotations, config=None):
    """Full online chain: transcribe each event, predict the next
    symbol and onset time, and score timed predictions against the
    annotations. Returns ``(records, ari)``.

    The first event of a stream has no prediction and is recorded
    unmatched.
    """
    config = config or PipelineConfig()
    onset_times = _detect(samples, config)
    vectors = _event_features(samples, onset_times, config)
    predictor = OnlinePredictor(config, 52)
    records, predictions = [], []
    pending = None  # prediction emitted after the previous event
    for time, vec in zip(onset_times, vectors):
        record, nxt = predictor.step(time, vec)
        if pending is not None and pending[1] is not None:
            record.predicted_symbol, record.predicted_time = pending
            predictions.append(pending)
        records.append(record)
        pending = nxt
    ann = [(lab, t) for t, lab in annotations]
    predicted_events = [(sym, t) for sym, t in predictions]
    ari = prediction_ari(predicted_events, ann, config.prediction_tolerance) \
        if predicted_events else 0.0
    _mark_matches(records, annotations, config)
    return records, ari


def _mark_matches(records, annotations, config):
    """Label each record's prediction correct / wrong-cluster /
    unmatched against the annotations, mapping predicted symbols to
    annotation labels by largest co-occurrence."""
    timed = [(r.predicted_time, r.predicted_symbol, r)
             for r in records if r.predicted_time is not None]
    ann_times = [t for t, _ in annotations]
    ann_labels = [lab for _, lab in annotations]
    pairs = match_events([t for t, _, _ in timed], ann_times,
                         config.prediction_tolerance)
    matched_syms = [timed[i][1] for i, _ in pairs]
    matched_labels = [ann_labels[j] for _, j in pairs]
    for _, _, r in timed:
        r.match = "unmatched"
    if not pairs:
        return
    table, rows, cols = contingency_table(matched_labels, matched_syms)
    mapping = greedy_label_mapping(table)
    sym_to_label = {cols[c]: rows[r] for c, r in mapping.items()}
    for i, j in pairs:
        _, sym, r = timed[i]
        r.match = "correct" if sym_to_label.get(sym) == ann_labels[j] \
            else "wrong-cluster"


def grid_search(evaluate, grid, extend_borders=False, max_rounds=5):
    """Evaluate every cell of a parameter grid.

    ``grid`` maps parameter names to ascending value lists;
    ``evaluate`` receives one dict per cell and returns a score. With
    ``extend_borders`` the grid grows past any border on which the
    maximum lies (constant step), up to ``max_rounds`` extensions.
    Returns ``(records, best_params, best_score)``.
    """
    grid = {k: sorted(v) for k, v in grid.items()}
    scores = {}

    def sweep():
        for combo in itertools.product(*grid.values()):
            if combo not in scores:
                scores[combo] = evaluate(dict(zip(grid, combo)))

    sweep()
    for _ in range(max_rounds if extend_borders else 0):
        best = max(scores, key=lambda c: (scores[c], [-v for v in c]))
        grew = False
        for axis, (name, values) in enumerate(grid.items()):
            if len(values) < 2:
                continue
            step = values[1] - values[0]
            if best[axis] == values[0]:
                grid[name] = [values[0] - step] + values
                grew = True
            elif best[axis] == values[-1]:
                grid[name] = values + [values[-1] + step]
                grew = True
        if not grew:
            break
        sweep()
    records = [(dict(zip(grid, combo)), score)
               for combo, score in sorted(scores.items())]
    best = max(scores, key=lambda c: (scores[c], [-v for v in c]))
    return records, dict(zip(grid, best)), scores[best]


def audit_causality(stream, config=None, checkpoints=None):
    """Prove the online loop never consumes future data.

    ``stream`` is a list of ``(time, vector)`` events. Two checks: the
    model state hash is identical before and after every prediction
    (predictions are read-only), and at each checkpoint a fresh
    predictor fed only the prefix reproduces the full run's state hash
    and next prediction exactly. Returns a report dict; raises
    AssertionError on any violation.
    """
    config = config or PipelineConfig()
    dim = len(stream[0][1])
    full = OnlinePredictor(config, dim)
    hashes, predictions = [], []
    for time, vec in stream:
        _, nxt = full.step(time, vec)
        h = full.state_hash()
        assert full.state_hash() == h, "hashing must be stable"
        hashes.append(h)
        predictions.append(nxt)
    n = len(stream)
    if checkpoints is None:
        checkpoints = sorted(set([1, n // 4, n // 2, 3 * n // 4, n]) - {0})
    for t in checkpoints:
        fresh = OnlinePredictor(config, dim)
        nxt = None
        for time, vec in stream[:t]:
            _, nxt = fresh.step(time, vec)
        assert fresh.state_hash() == hashes[t - 1], \
            f"state after event {t} depends on later events"
        assert nxt == predictions[t - 1], \
            f"prediction after event {t} depends on later events"
    return {"events": n, "checkpoints": list(checkpoints), "ok": True}
