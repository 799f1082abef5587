"""Full-factorial configuration sweep and label-free configuration selection."""
from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .distance import MEASURES, Measure, build_matrix
from .errors import AllColumnsDropped, NoDefinedScores, NoLabels, PlanError, TooFewMessages
from .hcluster import Partition, agglomerate, cut, cut_height
from .ingest import Corpus
from .preprocess import DEFAULT_MAX_SPARSITY, PreprocessConfig, featurize
from .validation import INDICES, Index, adjusted_rand, internal_scores, rule_for

log = logging.getLogger(__name__)

RESULT_COLUMNS = ("distance", "sample_size", "sample_offset", "ngram", "message_length", "k",
                  "adjusted_rand") + tuple(i.value for i in INDICES) + ("status",)
NOT_DEFINED = "NA"


@dataclass(frozen=True)
class CutSpec:
    height: float = 0.5
    euclidean_quantile: float = 0.5


@dataclass(frozen=True)
class SweepPlan:
    message_lengths: tuple
    ngram_lengths: tuple
    subsamples: tuple
    distances: tuple = MEASURES
    cut: CutSpec = CutSpec()
    max_sparsity: float = DEFAULT_MAX_SPARSITY
    sd_alpha: float = 1.0

    def __post_init__(self):
        def dedupe(xs):
            return tuple(dict.fromkeys(xs))
        object.__setattr__(self, "message_lengths", dedupe(int(m) for m in self.message_lengths))
        object.__setattr__(self, "ngram_lengths", dedupe(int(n) for n in self.ngram_lengths))
        object.__setattr__(self, "subsamples", dedupe((int(s), int(o)) for s, o in self.subsamples))
        object.__setattr__(self, "distances", dedupe(Measure.parse(d) for d in self.distances))
        self.validate()

    def validate(self, corpus_size: Optional[int] = None) -> None:
        for name in ("message_lengths", "ngram_lengths", "subsamples", "distances"):
            if not getattr(self, name):
                raise PlanError(f"plan has no {name}")
        if min(self.message_lengths) < 1 or min(self.ngram_lengths) < 1:
            raise PlanError("message and n-gram lengths must be >= 1")
        if max(self.ngram_lengths) > min(self.message_lengths):
            raise PlanError(f"n-gram length {max(self.ngram_lengths)} exceeds message length "
                            f"{min(self.message_lengths)}: every n must satisfy n <= m")
        for size, offset in self.subsamples:
            if size < 1 or offset < 0:
                raise PlanError(f"bad sub-sample (size={size}, offset={offset})")
            if corpus_size is not None and offset + size > corpus_size:
                raise PlanError(f"sub-sample [{offset}, {offset + size}) exceeds corpus of {corpus_size}")
        if not 0.0 < self.max_sparsity <= 1.0:
            raise PlanError("max_sparsity must lie in (0, 1]")
        if self.cut.height < 0 or not 0.0 <= self.cut.euclidean_quantile <= 1.0:
            raise PlanError("cut height must be >= 0 and the quantile within [0, 1]")

    def configs(self) -> list:
        """Canonical plan order: distance, then sub-sample, n-gram, message length."""
        return [SweepConfig(d, s, o, n, m) for d, (s, o), n, m in
                itertools.product(self.distances, self.subsamples, self.ngram_lengths, self.message_lengths)]

    def __len__(self) -> int:
        return len(self.distances) * len(self.subsamples) * len(self.ngram_lengths) * len(self.message_lengths)

    @classmethod
    def from_dict(cls, raw: dict) -> "SweepPlan":
        try:
            subs = []
            for s in raw["subsamples"]:
                if isinstance(s, dict):
                    subs.append((s["size"], s.get("offset", 0)))
                else:
                    subs.append(tuple(s))
            cut_raw = raw.get("cut", {})
            if isinstance(cut_raw, (int, float)):
                cut_raw = {"height": cut_raw}
            return cls(
                message_lengths=tuple(raw["message_lengths"]),
                ngram_lengths=tuple(raw["ngram_lengths"]),
                subsamples=tuple(subs),
                distances=tuple(raw.get("distances", [m.value for m in MEASURES])),
                cut=CutSpec(**cut_raw),
                max_sparsity=float(raw.get("max_sparsity", DEFAULT_MAX_SPARSITY)),
                sd_alpha=float(raw.get("sd_alpha", 1.0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise PlanError(f"invalid plan: {exc}") from exc

    def to_dict(self) -> dict:
        return {
            "message_lengths": list(self.message_lengths),
            "ngram_lengths": list(self.ngram_lengths),
            "subsamples": [{"size": s, "offset": o} for s, o in self.subsamples],
            "distances": [d.value for d in self.distances],
            "cut": {"height": self.cut.height, "euclidean_quantile": self.cut.euclidean_quantile},
            "max_sparsity": self.max_sparsity,
            "sd_alpha": self.sd_alpha,
        }


def load_plan(path: Union[str, Path]) -> SweepPlan:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise PlanError(f"plan file is not valid JSON: {exc}") from exc
    return SweepPlan.from_dict(raw)


@dataclass(frozen=True, order=True)
class SweepConfig:
    distance: Measure
    sample_size: int
    sample_offset: int
    ngram: int
    message_length: int

    def sort_key(self):
        return (self.distance.value, self.sample_size, self.sample_offset, self.ngram, self.message_length)


@dataclass
class SweepRecord:
    config: SweepConfig
    adjusted_rand: Optional[float]
    internal: dict
    k: Optional[int]
    status: str = "ok"
    diagnostics: dict = field(default_factory=dict)

    def score(self, index) -> Optional[float]:
        return self.internal.get(Index.parse(index).value)


# -- pipeline ---------------------------------------------------------------------

def truth_for(corpus: Corpus):
    """Label array and mask of labeled positions, or None when nothing is labeled."""
    labels = corpus.labels
    mask = np.array([lab is not None for lab in labels], dtype=bool)
    if not mask.any():
        return None
    return Partition.from_labels([lab for lab in labels if lab is not None]), mask


def _failed(config: SweepConfig, status: str) -> SweepRecord:
    return SweepRecord(config, None, {i.value: None for i in INDICES}, None, status)


def run_feature_group(corpus: Corpus, plan: SweepPlan, subsample: tuple, ngram: int,
                      message_length: int) -> list:
    """Records for every distance measure sharing one feature space."""
    size, offset = subsample
    configs = [SweepConfig(d, size, offset, ngram, message_length) for d in plan.distances]
    pre = PreprocessConfig(message_length, ngram, size, offset, plan.max_sparsity)
    try:
        fm = featurize(corpus, pre)
    except AllColumnsDropped:
        return [_failed(c, "all_columns_dropped") for c in configs]
    if fm.shape[0] < 2:
        return [_failed(c, "too_few_messages") for c in configs]
    sub = corpus.messages[offset:offset + size]
    truth = truth_for(Corpus(sub))
    x = fm.dense()
    diag = {"features": fm.shape[1], "empty_rows": int(np.count_nonzero(np.diff(fm.presence.indptr) == 0))}
    out = []
    for c in configs:
        try:
            dm = build_matrix(fm, c.distance)
        except TooFewMessages:
            out.append(_failed(c, "too_few_messages"))
            continue
        dg = agglomerate(dm)
        h = cut_height(dg, c.distance, plan.cut.height, plan.cut.euclidean_quantile)
        part = cut(dg, h)
        ari = None
        if truth is not None:
            tp, mask = truth
            ari = float(adjusted_rand(part.assign[mask], tp))
        scores = internal_scores(x, part, plan.sd_alpha)
        out.append(SweepRecord(c, ari, {k: (None if v is None else float(v)) for k, v in scores.items()},
                               part.k, "ok", dict(diag, cut_height=h)))
    return out


_WORKER_CORPUS: Optional[Corpus] = None


def _init_worker(corpus: Corpus) -> None:
    global _WORKER_CORPUS
    _WORKER_CORPUS = corpus


def _worker(args):
    plan, subsample, ngram, mlen = args
    return run_feature_group(_WORKER_CORPUS, plan, subsample, ngram, mlen)


def run_sweep(corpus: Corpus, plan: SweepPlan, workers: int = 1,
              progress: Optional[Callable[[SweepRecord, int, int], None]] = None) -> list:
    """Run every configuration of ``plan`` and return records in canonical plan order."""
    if len(corpus) == 0:
        raise PlanError("corpus is empty")
    plan.validate(corpus_size=len(corpus))
    groups = list(itertools.product(plan.subsamples, plan.ngram_lengths, plan.message_lengths))
    total = len(plan)
    results = {}
    done = 0

    def collect(batch):
        nonlocal done
        for rec in batch:
            results[rec.config] = rec
            done += 1
            if progress is not None:
                progress(rec, done, total)

    if workers <= 1:
        for s, n, m in groups:
            collect(run_feature_group(corpus, plan, s, n, m))
    else:
        tasks = [(plan, s, n, m) for s, n, m in groups]
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(corpus,)) as ex:
            for batch in ex.map(_worker, tasks):
                collect(batch)
    return [results[c] for c in plan.configs()]


def max_workers() -> int:
    return max(2, os.cpu_count() or 1)


# -- results file ---------------------------------------------------------------------

def _fmt(v) -> str:
    return NOT_DEFINED if v is None else repr(float(v))


def format_results(records: Sequence[SweepRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_COLUMNS)
    for r in records:
        c = r.config
        ok = r.status == "ok"
        row = [c.distance.value, c.sample_size, c.sample_offset, c.ngram, c.message_length,
               "" if r.k is None else r.k,
               "" if r.adjusted_rand is None else repr(float(r.adjusted_rand))]
        row += [_fmt(r.internal.get(i.value)) if ok else "" for i in INDICES]
        row.append(r.status)
        w.writerow(row)
    return buf.getvalue()


def write_results(records: Sequence[SweepRecord], path: Union[str, Path]) -> None:
    Path(path).write_text(format_results(records))


def parse_results(text: str) -> list:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        return []
    missing = [c for c in RESULT_COLUMNS if c not in reader.fieldnames]
    if missing:
        raise ValueError(f"results file lacks columns: {', '.join(missing)}")

    def num(s):
        return None if s in ("", NOT_DEFINED) else float(s)

    out = []
    for row in reader:
        cfg = SweepConfig(Measure.parse(row["distance"]), int(row["sample_size"]), int(row["sample_offset"]),
                          int(row["ngram"]), int(row["message_length"]))
        out.append(SweepRecord(
            cfg,
            num(row["adjusted_rand"]),
            {i.value: num(row[i.value]) for i in INDICES},
            None if row["k"] == "" else int(row["k"]),
            row["status"],
        ))
    return out


def read_results(path: Union[str, Path]) -> list:
    return parse_results(Path(path).read_text())


# -- selection --------------------------------------------------------------------------

def select_optimal(records: Sequence[SweepRecord], index, distance=None) -> SweepRecord:
    """Record with the best defined score for ``index`` under its optimum rule.

    Ties go to the smaller cluster count, then the lexicographically smaller
    configuration.
    """
    rule = rule_for(index)
    key = rule.index.value
    pool = [r for r in records if r.internal.get(key) is not None]
    if distance is not None:
        distance = Measure.parse(distance)
        pool = [r for r in pool if r.config.distance is distance]
    if not pool:
        raise NoDefinedScores(f"no defined {key} scores"
                              + (f" for {distance.value}" if distance is not None else ""))
    sign = -1.0 if rule.direction.value == "maximize" else 1.0
    return min(pool, key=lambda r: (sign * r.internal[key],
                                    r.k if r.k is not None else float("inf"),
                                    r.config.sort_key()))


def rank_by_external(records: Sequence[SweepRecord]) -> list:
    """Descending adjusted Rand, ties in input order, unscored records last."""
    scored = [r for r in records if r.adjusted_rand is not None]
    if not scored:
        raise NoLabels("no record carries an adjusted Rand score")
    ranked = sorted(scored, key=lambda r: -r.adjusted_rand)
    return ranked + [r for r in records if r.adjusted_rand is None]
