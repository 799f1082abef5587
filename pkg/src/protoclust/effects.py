"""Standardised effect sizes of experimental variables on adjusted Rand scores."""
from __future__ import annotations

import enum
import itertools
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .errors import GroupTooSmall, InsufficientValues, ZeroPooledVariance

Z95 = 1.96


class Variable(str, enum.Enum):
    DISTANCE = "distance"
    MESSAGE_LENGTH = "message_length"
    NGRAM_LENGTH = "ngram"
    SAMPLE_SIZE = "sample_size"

    @classmethod
    def parse(cls, value) -> "Variable":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {"ngram_length": "ngram", "n_gram": "ngram", "message": "message_length",
                   "sample": "sample_size", "subsample": "sample_size"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ValueError(f"unknown variable {value!r}") from None


class Magnitude(str, enum.Enum):
    NEGLIGIBLE = "negligible"
    SMALL = "small"
    MEDIUM = "medium"
    LARGE = "large"


@dataclass(frozen=True)
class EffectEstimate:
    variable: str
    a: str
    b: str
    g: float
    se: float
    ci_low: float
    ci_high: float
    n_a: int
    n_b: int
    d: float = float("nan")

    @property
    def magnitude(self) -> Magnitude:
        return interpret(self.g)


@dataclass(frozen=True)
class AggregateEffect:
    variable: str
    mean_abs_g: float
    ci_low: float
    ci_high: float
    pair_count: int

    @property
    def magnitude(self) -> Magnitude:
        return interpret(self.mean_abs_g)


def hedges_g(group_a: Sequence[float], group_b: Sequence[float], *, variable: str = "",
             labels=("A", "B")) -> EffectEstimate:
    """Bias-corrected standardised mean difference of A minus B with a 95% CI.

    Two constant groups with equal means give g = 0; constant groups with
    different means raise ZeroPooledVariance.
    """
    a = np.asarray(group_a, dtype=np.float64)
    b = np.asarray(group_b, dtype=np.float64)
    na, nb = a.size, b.size
    if na < 2 or nb < 2:
        raise GroupTooSmall(f"each group needs >= 2 scores, got {na} and {nb}")
    diff = float(a.mean() - b.mean())
    pooled = ((na - 1) * a.var(ddof=1) + (nb - 1) * b.var(ddof=1)) / (na + nb - 2)
    if pooled == 0:
        if diff != 0:
            raise ZeroPooledVariance("both groups are constant with different means")
        d = 0.0
    else:
        d = diff / math.sqrt(pooled)
    g = d * (1.0 - 3.0 / (4.0 * (na + nb) - 9.0))
    se = math.sqrt((na + nb) / (na * nb) + g * g / (2.0 * (na + nb)))
    return EffectEstimate(str(variable), str(labels[0]), str(labels[1]), g, se,
                          g - Z95 * se, g + Z95 * se, na, nb, d)


def interpret(g: float) -> Magnitude:
    """Cohen's conventional bands on |g|: 0.2 small, 0.5 medium, 0.8 large."""
    m = abs(g)
    if m < 0.2:
        return Magnitude.NEGLIGIBLE
    if m < 0.5:
        return Magnitude.SMALL
    if m < 0.8:
        return Magnitude.MEDIUM
    return Magnitude.LARGE


def _value_key(record, variable: Variable):
    cfg = record.config
    if variable is Variable.DISTANCE:
        return cfg.distance.value
    if variable is Variable.MESSAGE_LENGTH:
        return cfg.message_length
    if variable is Variable.NGRAM_LENGTH:
        return cfg.ngram
    return (cfg.sample_size, cfg.sample_offset)


def _value_label(value, all_values) -> str:
    if isinstance(value, tuple):
        sizes = [v[0] for v in all_values]
        if sizes.count(value[0]) > 1:
            return f"{value[0]}@{value[1]}"
        return str(value[0])
    return str(value)


def group_scores(records: Iterable, variable) -> dict:
    """Adjusted Rand scores keyed by the value of ``variable``, first-seen order.

    Records without a score (failed configurations or no labels) are left out.
    """
    variable = Variable.parse(variable)
    groups: dict = {}
    for r in records:
        if r.adjusted_rand is None:
            continue
        groups.setdefault(_value_key(r, variable), []).append(r.adjusted_rand)
    return groups


def pairwise_effects(records: Iterable, variable) -> list:
    """One estimate per unordered pair of values, other variables pooled."""
    variable = Variable.parse(variable)
    groups = group_scores(records, variable)
    if len(groups) < 2:
        raise InsufficientValues(f"{variable.value}: need >= 2 distinct values, got {len(groups)}")
    values = list(groups)
    if variable is not Variable.DISTANCE:
        values.sort()
    out = []
    for va, vb in itertools.combinations(values, 2):
        labels = (_value_label(va, values), _value_label(vb, values))
        out.append(hedges_g(groups[va], groups[vb], variable=variable.value, labels=labels))
    return out


def aggregate_effect(estimates: Sequence[EffectEstimate]) -> AggregateEffect:
    """Mean |g|; CI half-width 1.96 * sqrt(sum SE^2) / m."""
    if not estimates:
        raise ValueError("need at least one estimate")
    m = len(estimates)
    mean_abs = float(np.mean([abs(e.g) for e in estimates]))
    half = Z95 * math.sqrt(sum(e.se ** 2 for e in estimates)) / m
    return AggregateEffect(estimates[0].variable, mean_abs, mean_abs - half, mean_abs + half, m)


def effects_report(records: Sequence, variables: Optional[Sequence] = None, *, strict: bool = False) -> dict:
    """Pairwise estimates and aggregates for each variable.

    Variables with fewer than two values are skipped unless ``strict``.
    """
    variables = [Variable.parse(v) for v in (variables or list(Variable))]
    estimates, aggregates, skipped = [], [], []
    for v in variables:
        try:
            est = pairwise_effects(records, v)
        except InsufficientValues:
            if strict:
                raise
            skipped.append(v.value)
            continue
        estimates.extend(est)
        aggregates.append(aggregate_effect(est))
    return {"estimates": estimates, "aggregates": aggregates, "skipped": skipped}


def _estimate_json(e: EffectEstimate) -> dict:
    d = asdict(e)
    d["magnitude"] = e.magnitude.value
    return d


def _aggregate_json(a: AggregateEffect) -> dict:
    d = asdict(a)
    d["magnitude"] = a.magnitude.value
    return d


def to_json(report: dict) -> str:
    payload = {
        "estimates": [_estimate_json(e) for e in report["estimates"]],
        "aggregates": [_aggregate_json(a) for a in report["aggregates"]],
        "skipped": list(report.get("skipped", [])),
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def from_json(text: str) -> dict:
    raw = json.loads(text)
    est = [EffectEstimate(**{k: v for k, v in e.items() if k != "magnitude"}) for e in raw["estimates"]]
    agg = [AggregateEffect(**{k: v for k, v in a.items() if k != "magnitude"}) for a in raw["aggregates"]]
    return {"estimates": est, "aggregates": agg, "skipped": raw.get("skipped", [])}


def write_json(report: dict, path: Union[str, Path]) -> None:
    Path(path).write_text(to_json(report))
