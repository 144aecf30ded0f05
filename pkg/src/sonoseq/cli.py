"""Command-line entry points for the full pipeline.

Subcommands: ``onsets``, ``transcribe``, ``expect``, ``predict``,
``grid``, ``synth``. Metric results print as JSON on stdout; failures
print a JSON error object on stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from .onsets import read_wav, write_wav, write_onsets_csv
from .pipeline import (PipelineConfig, grid_search, run_expectation,
                       run_onsets, run_prediction, run_transcription)
from .sequences import (BUILTIN_TIMBRES, apply_skip_noise, apply_switch_noise,
                        enumerate_set_partitions, generate_sequence,
                        synthesize_labeled_audio)

import numpy as np


def _config_flags(parser):
    for f in dataclasses.fields(PipelineConfig):
        flag = "--" + f.name.replace("_", "-")
        if f.type in ("int", int):
            parser.add_argument(flag, type=int, default=None)
        elif f.type in ("float", float):
            parser.add_argument(flag, type=float, default=None)
        else:
            parser.add_argument(flag, type=str, default=None)


def _config_from(args):
    kw = {}
    for f in dataclasses.fields(PipelineConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            kw[f.name] = value
    return PipelineConfig(**kw)


def _read_annotations(path):
    """Annotation CSV rows ``time_seconds,label``; a bare list of times
    (no labels) is accepted too."""
    events = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("time"):
                continue
            t, _, label = line.partition(",")
            events.append((float(t), label.strip()))
    return events


def _write_annotations(path, annotations):
    with open(path, "w") as fh:
        fh.write("time_seconds,label\n")
        for t, label in annotations:
            fh.write(f"{t:.6f},{label}\n")


def _emit(obj):
    print(json.dumps(obj, sort_keys=True))


def _cmd_onsets(args):
    samples, rate = read_wav(args.audio)
    config = _config_from(args).replace(sample_rate=rate)
    annotations = None
    if args.annotations:
        annotations = [t for t, _ in _read_annotations(args.annotations)]
    times, fmeasure = run_onsets(samples, config, annotations)
    if args.out:
        write_onsets_csv(times, args.out)
    result = {"n_onsets": len(times)}
    if fmeasure is not None:
        result.update({"precision": fmeasure[0], "recall": fmeasure[1],
                       "f_measure": fmeasure[2]})
    _emit(result)


def _cmd_transcribe(args):
    samples, rate = read_wav(args.audio)
    config = _config_from(args).replace(sample_rate=rate)
    annotations = _read_annotations(args.annotations)
    symbols, onset_times, ari = run_transcription(
        samples, annotations, config,
        use_annotated_onsets=args.annotated_onsets)
    if args.out:
        with open(args.out, "w") as fh:
            for i, (t, s) in enumerate(zip(onset_times, symbols)):
                fh.write(json.dumps({"index": i, "time": round(t, 6),
                                     "symbol": s}) + "\n")
    if args.descriptors_out:
        from .features import write_descriptors_csv
        from .pipeline import _event_features
        write_descriptors_csv(_event_features(samples, onset_times, config),
                              args.descriptors_out)
    _emit({"ari": ari, "n_events": len(symbols),
           "alphabet_size": len(set(symbols))})


def _cmd_expect(args):
    with open(args.sequence) as fh:
        symbols = [int(line) for line in fh if line.strip()]
    config = _config_from(args)
    curve = run_expectation(symbols, args.pattern_length, config)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("t,ari\n")
            for t, ari in curve:
                fh.write(f"{t},{ari:.6f}\n")
    aris = [a for _, a in curve]
    _emit({"n_points": len(curve), "mean_ari": float(np.mean(aris)),
           "final_ari": aris[-1] if aris else None})


def _cmd_predict(args):
    samples, rate = read_wav(args.audio)
    config = _config_from(args).replace(sample_rate=rate)
    annotations = _read_annotations(args.annotations)
    records, ari = run_prediction(samples, annotations, config)
    if args.out:
        with open(args.out, "w") as fh:
            for r in records:
                fh.write(json.dumps(r.to_dict(), sort_keys=True) + "\n")
    if args.matches_csv:
        from .metrics import write_match_csv
        write_match_csv([r.to_dict() for r in records], args.matches_csv)
    statuses = {}
    for r in records:
        if r.match:
            statuses[r.match] = statuses.get(r.match, 0) + 1
    _emit({"ari": ari, "n_events": len(records), "matches": statuses})


def _parse_grid_param(spec):
    name, _, values = spec.partition("=")
    if not values:
        raise ValueError(f"bad --param {spec!r}, expected name=v1,v2,...")
    return name, [float(v) for v in values.split(",")]


def _cmd_grid(args):
    samples, rate = read_wav(args.audio)
    base = _config_from(args).replace(sample_rate=rate)
    annotations = _read_annotations(args.annotations)
    grid = dict(_parse_grid_param(p) for p in args.param)
    int_fields = {f.name for f in dataclasses.fields(PipelineConfig)
                  if f.type in ("int", int)}

    def evaluate(cell):
        kw = {k: int(v) if k in int_fields else v for k, v in cell.items()}
        config = base.replace(**kw)
        if args.task == "transcribe":
            return run_transcription(samples, annotations, config)[2]
        return run_prediction(samples, annotations, config)[1]

    records, best, best_score = grid_search(
        evaluate, grid, extend_borders=args.extend_borders)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(",".join(list(grid) + ["ari"]) + "\n")
            for params, score in records:
                fh.write(",".join(str(params[k]) for k in grid)
                         + f",{score:.6f}\n")
    _emit({"best": best, "best_ari": best_score, "n_cells": len(records)})


def _cmd_synth(args):
    if args.pattern:
        base = [int(s) for s in args.pattern.split(",")]
    else:
        partitions = enumerate_set_partitions(args.pattern_length)
        base = generate_sequence(partitions[args.partition_index], 1)
    symbols = base * args.repetitions
    rng = np.random.default_rng(args.seed or 0)
    n_symbols = len(set(symbols))
    if args.skip:
        symbols = apply_skip_noise(symbols, args.skip, rng)
    if args.switch:
        symbols = apply_switch_noise(symbols, args.switch, n_symbols, rng)
    if args.sequence_out:
        with open(args.sequence_out, "w") as fh:
            fh.writelines(f"{s}\n" for s in symbols)
    result = {"n_events": len(symbols), "alphabet_size": n_symbols}
    if args.out or args.annotations_out:
        names = sorted(BUILTIN_TIMBRES)
        events = [(0.5 + i * args.ioi, names[s % len(names)])
                  for i, s in enumerate(symbols)]
        audio, annotations = synthesize_labeled_audio(
            events, sample_rate=args.rate, seed=args.seed or 0)
        if args.out:
            write_wav(args.out, audio, args.rate)
            result["wav"] = args.out
        if args.annotations_out:
            _write_annotations(args.annotations_out, annotations)
    _emit(result)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sonoseq",
        description="Streaming audio-to-symbol prediction toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("onsets", help="detect onsets in a WAV file")
    p.add_argument("--audio", required=True)
    p.add_argument("--out")
    p.add_argument("--annotations")
    _config_flags(p)
    p.set_defaults(fn=_cmd_onsets)

    p = sub.add_parser("transcribe",
                       help="onsets + timbre clustering, scored by ARI")
    p.add_argument("--audio", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--out")
    p.add_argument("--descriptors-out",
                   help="write per-event 52-column timbre vectors as CSV")
    p.add_argument("--annotated-onsets", action="store_true")
    _config_flags(p)
    p.set_defaults(fn=_cmd_transcribe)

    p = sub.add_parser("expect",
                       help="next-symbol forecasting on a symbol file")
    p.add_argument("--sequence", required=True)
    p.add_argument("--pattern-length", type=int, required=True)
    p.add_argument("--out")
    _config_flags(p)
    p.set_defaults(fn=_cmd_expect)

    p = sub.add_parser("predict",
                       help="full online prediction of symbols and timing")
    p.add_argument("--audio", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--out")
    p.add_argument("--matches-csv",
                   help="write per-event match details as CSV")
    _config_flags(p)
    p.set_defaults(fn=_cmd_predict)

    p = sub.add_parser("grid", help="parameter grid search")
    p.add_argument("--task", choices=["transcribe", "predict"],
                   default="transcribe")
    p.add_argument("--audio", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--param", action="append", required=True,
                   help="name=v1,v2,... (repeatable)")
    p.add_argument("--extend-borders", action="store_true")
    p.add_argument("--out")
    _config_flags(p)
    p.set_defaults(fn=_cmd_grid)

    p = sub.add_parser("synth", help="generate symbol sequences and audio")
    p.add_argument("--pattern", help="comma-separated base pattern symbols")
    p.add_argument("--pattern-length", type=int, default=3)
    p.add_argument("--partition-index", type=int, default=1)
    p.add_argument("--repetitions", type=int, default=20)
    p.add_argument("--skip", type=float, default=0.0)
    p.add_argument("--switch", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ioi", type=float, default=0.4)
    p.add_argument("--rate", type=int, default=44100)
    p.add_argument("--out", help="output WAV path")
    p.add_argument("--annotations-out")
    p.add_argument("--sequence-out")
    p.set_defaults(fn=_cmd_synth)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.fn(args)
    except Exception as exc:  # surface a machine-readable error object
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
