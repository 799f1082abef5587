"""``protoclust`` command line.

Exit status: 0 success, 1 soft failure (nothing to report), 2 bad input.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import effects, ingest, report, sweep, synth
from .distance import MEASURES, Measure, build_matrix
from .errors import (
    AllColumnsDropped,
    InsufficientValues,
    NoDefinedScores,
    PlanError,
    ProtoclustError,
    TooFewMessages,
)
from .hcluster import agglomerate, cut, cut_height, export_partition
from .preprocess import DEFAULT_MAX_SPARSITY, PreprocessConfig, featurize
from .validation import INDICES, Index, adjusted_rand, internal_scores

log = logging.getLogger("protoclust")

EXIT_OK, EXIT_SOFT, EXIT_INPUT = 0, 1, 2


def _err(msg: str) -> None:
    print(f"protoclust: {msg}", file=sys.stderr)


# -- extract ---------------------------------------------------------------

def cmd_extract(args) -> int:
    with open(args.pcap, "rb") as fh:
        corpus = ingest.classify_by_port(ingest.parse_pcap(fh), args.port, args.transport,
                                         direction=args.direction, source=str(args.pcap))
    ingest.write_messages(corpus, args.out)
    d = corpus.diagnostics
    skipped = ", ".join(f"{k}={v}" for k, v in d["skipped"].items()) or "none"
    print(f"{d['records']} records, {d['emitted']} emitted, skipped: {skipped}")
    if d["emitted"] == 0:
        _err(f"warning: no {args.transport} payloads on port {args.port}; wrote an empty messages file")
    return EXIT_OK


# -- sweep -----------------------------------------------------------------

def cmd_sweep(args) -> int:
    plan = sweep.load_plan(args.plan)
    corpus = ingest.load_corpus(args.messages, args.labels)
    plan.validate(corpus_size=len(corpus))

    def progress(rec, done, total):
        c = rec.config
        ari = "NA" if rec.adjusted_rand is None else f"{rec.adjusted_rand:.4f}"
        print(f"[{done}/{total}] {c.distance.value} sample={c.sample_size}@{c.sample_offset} "
              f"n={c.ngram} m={c.message_length} k={rec.k} ari={ari} {rec.status}", file=sys.stderr)

    workers = sweep.max_workers() if args.workers == 0 else args.workers
    records = sweep.run_sweep(corpus, plan, workers=workers, progress=None if args.quiet else progress)
    sweep.write_results(records, args.out)
    ok = sum(r.status == "ok" for r in records)
    print(f"{len(records)} configurations ({ok} ok) written to {args.out}")
    return EXIT_OK


# -- effects ---------------------------------------------------------------

def cmd_effects(args) -> int:
    records = sweep.read_results(args.results)
    if not any(r.adjusted_rand is not None for r in records):
        _err("results carry no adjusted Rand scores")
        return EXIT_SOFT
    wanted = args.variable or ["all"]
    variables = list(effects.Variable) if "all" in wanted else [effects.Variable.parse(v) for v in wanted]
    rep = effects.effects_report(records, variables)
    for v in rep["skipped"]:
        _err(f"{v}: {InsufficientValues.__name__}, fewer than two values with scores")
    if not rep["estimates"]:
        return EXIT_SOFT
    sys.stdout.write(report.format_effects(rep))
    if args.json:
        effects.write_json(rep, args.json)
    if args.svg:
        Path(args.svg).write_text(report.forest_svg(rep, title=args.title))
    return EXIT_OK


# -- select ----------------------------------------------------------------

def cmd_select(args) -> int:
    records = sweep.read_results(args.results)
    if not records:
        _err("results file has no rows")
        return EXIT_SOFT
    indices = list(INDICES) if args.index == "all" else [Index.parse(args.index)]
    rows = []
    for idx in indices:
        try:
            rows.append(report.table_row(sweep.select_optimal(records, idx, args.distance), idx))
        except NoDefinedScores as exc:
            _err(str(exc))
    if not rows:
        return EXIT_SOFT
    sys.stdout.write(report.format_table(rows))
    return EXIT_OK


# -- synth -----------------------------------------------------------------

def cmd_synth(args) -> int:
    spec = synth.SynthSpec(args.types, args.count, args.mode, args.seed,
                           (args.min_length, args.max_length), args.port)
    corpus = synth.generate(spec)
    ingest.write_messages(corpus, args.out)
    ingest.write_labels(corpus, args.labels)
    print(f"{len(corpus)} messages of {spec.type_count} types written to {args.out} and {args.labels}")
    return EXIT_OK


# -- cluster ---------------------------------------------------------------

def cmd_cluster(args) -> int:
    corpus = ingest.load_corpus(args.messages, args.labels)
    size = args.sample_size if args.sample_size is not None else len(corpus) - args.sample_offset
    cfg = PreprocessConfig(args.message_length, args.ngram, size, args.sample_offset, args.max_sparsity)
    try:
        fm = featurize(corpus, cfg)
        dm = build_matrix(fm, args.distance)
    except (AllColumnsDropped, TooFewMessages) as exc:
        _err(str(exc))
        return EXIT_SOFT
    dg = agglomerate(dm)
    h = cut_height(dg, dm.measure, args.cut_height, args.euclidean_quantile)
    part = cut(dg, h)
    sub = corpus.messages[args.sample_offset:args.sample_offset + size]
    export_partition(part, args.out, rows=[m.index for m in sub])
    truth = sweep.truth_for(ingest.Corpus(sub))
    scores = internal_scores(fm.dense(), part, args.sd_alpha)
    summary = {"k": part.k, "cut_height": h, "features": fm.shape[1],
               "adjusted_rand": None if truth is None else adjusted_rand(part.assign[truth[1]], truth[0])}
    summary.update(scores)
    print(json.dumps(summary, indent=2))
    return EXIT_OK


# -- parser ----------------------------------------------------------------

def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _type_count(text: str) -> int:
    v = int(text)
    if v < 2:
        raise argparse.ArgumentTypeError("need at least 2 message types")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="protoclust",
                                description="Cluster protocol messages by byte n-grams and pick configurations.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("extract", help="pcap -> messages file by port")
    s.add_argument("pcap")
    s.add_argument("--port", type=int, required=True)
    s.add_argument("--transport", choices=("udp", "tcp"), default="udp")
    s.add_argument("--direction", choices=[d.value for d in ingest.Direction], default="both")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_extract)

    s = sub.add_parser("sweep", help="run a configuration sweep")
    s.add_argument("messages")
    s.add_argument("--labels")
    s.add_argument("--plan", required=True, help="JSON sweep plan")
    s.add_argument("--out", required=True)
    s.add_argument("--workers", type=int, default=1, help="worker processes, 0 for one per CPU")
    s.add_argument("-q", "--quiet", action="store_true", help="no per-configuration progress")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("effects", help="Hedges' g per variable from a results CSV")
    s.add_argument("results")
    s.add_argument("--variable", action="append",
                   choices=["all"] + [v.value for v in effects.Variable], help="repeatable; default all")
    s.add_argument("--json")
    s.add_argument("--svg")
    s.add_argument("--title")
    s.set_defaults(func=cmd_effects)

    s = sub.add_parser("select", help="index-optimal configuration")
    s.add_argument("results")
    s.add_argument("--index", default="all", choices=["all"] + [i.value for i in INDICES])
    s.add_argument("--distance", choices=[m.value for m in MEASURES])
    s.set_defaults(func=cmd_select)

    s = sub.add_parser("synth", help="synthetic labeled messages")
    s.add_argument("--types", type=_type_count, default=5)
    s.add_argument("--count", type=_positive, default=2000)
    s.add_argument("--seed", type=int, default=7)
    s.add_argument("--mode", choices=[m.value for m in synth.Mode], default="binary")
    s.add_argument("--min-length", type=int, default=24)
    s.add_argument("--max-length", type=int, default=96)
    s.add_argument("--port", type=int, default=6969)
    s.add_argument("--out", required=True)
    s.add_argument("--labels", required=True)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("cluster", help="one configuration -> partition CSV")
    s.add_argument("messages")
    s.add_argument("--labels")
    s.add_argument("--distance", type=Measure.parse, default=Measure.BRAUN_BLANQUET)
    s.add_argument("--ngram", type=_positive, default=2)
    s.add_argument("--message-length", type=_positive, default=16)
    s.add_argument("--sample-size", type=_positive)
    s.add_argument("--sample-offset", type=int, default=0)
    s.add_argument("--cut-height", type=float, default=0.5)
    s.add_argument("--euclidean-quantile", type=float, default=0.5)
    s.add_argument("--max-sparsity", type=float, default=DEFAULT_MAX_SPARSITY)
    s.add_argument("--sd-alpha", type=float, default=1.0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_cluster)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ProtoclustError, OSError, ValueError) as exc:
        _err(f"{type(exc).__name__}: {exc}")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
