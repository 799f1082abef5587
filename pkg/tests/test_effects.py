import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from protoclust import effects as fx
from protoclust.distance import Measure
from protoclust.errors import GroupTooSmall, InsufficientValues, ZeroPooledVariance
from protoclust.sweep import SweepConfig, SweepRecord


def group_with(mean, sd, n):
    """n values with exactly the given sample mean and standard deviation."""
    z = np.arange(n, dtype=float)
    z = (z - z.mean()) / z.std(ddof=1)
    return mean + sd * z


def test_worked_example_twenty_each():
    e = fx.hedges_g(group_with(10, 2, 20), group_with(8, 2, 20))
    assert e.d == pytest.approx(1.0, abs=1e-9)
    assert e.g == pytest.approx(0.980132, abs=1e-6)
    se = math.sqrt(40 / 400 + e.g ** 2 / 80)
    assert e.se == pytest.approx(se)
    assert e.ci_low == pytest.approx(e.g - 1.96 * se)
    assert e.ci_high == pytest.approx(e.g + 1.96 * se)


def test_worked_example_small():
    e = fx.hedges_g([1, 2, 3], [2, 3, 4])
    assert e.d == -1.0
    assert e.g == -0.8


def test_errors():
    with pytest.raises(GroupTooSmall):
        fx.hedges_g([1.0], [1.0, 2.0])
    with pytest.raises(ZeroPooledVariance):
        fx.hedges_g([1.0, 1.0], [2.0, 2.0])
    assert fx.hedges_g([3.0, 3.0], [3.0, 3.0]).g == 0.0


@given(st.lists(st.floats(-5, 5), min_size=2, max_size=10), st.lists(st.floats(-5, 5), min_size=2, max_size=10))
def test_antisymmetry(a, b):
    try:
        ab = fx.hedges_g(a, b)
    except ZeroPooledVariance:
        return
    ba = fx.hedges_g(b, a)
    assert ab.g == pytest.approx(-ba.g, abs=1e-12)
    assert ab.ci_low <= ab.g <= ab.ci_high


@given(st.lists(st.floats(-5, 5), min_size=2, max_size=10), st.lists(st.floats(-5, 5), min_size=2, max_size=10),
       st.floats(-10, 10))
def test_shift_invariance(a, b, c):
    try:
        g0 = fx.hedges_g(a, b).g
    except ZeroPooledVariance:
        return
    if np.var(a) + np.var(b) < 1e-6:
        return
    assert fx.hedges_g(np.add(a, c), np.add(b, c)).g == pytest.approx(g0, rel=1e-6, abs=1e-6)


@pytest.mark.parametrize("g,band", [(0.1, "negligible"), (0.2, "small"), (-0.5, "medium"), (0.79, "medium"),
                                    (0.8, "large"), (3.0, "large")])
def test_interpret(g, band):
    assert fx.interpret(g).value == band


def record(distance, size, offset, ngram, mlen, ari):
    return SweepRecord(SweepConfig(Measure.parse(distance), size, offset, ngram, mlen), ari, {}, 3)


def toy_records():
    rng = np.random.default_rng(0)
    out = []
    for d, base in (("jaccard", 0.9), ("dice", 0.85), ("cosine", 0.4)):
        for size, off in ((100, 0), (100, 100)):
            for n in (2, 3):
                for m in (8, 16):
                    out.append(record(d, size, off, n, m, base + 0.05 * rng.standard_normal()))
    return out


def test_pairwise_counts_and_labels():
    recs = toy_records()
    est = fx.pairwise_effects(recs, "distance")
    assert len(est) == 3
    assert [(e.a, e.b) for e in est] == [("jaccard", "dice"), ("jaccard", "cosine"), ("dice", "cosine")]
    ss = fx.pairwise_effects(recs, "sample_size")
    assert [(e.a, e.b) for e in ss] == [("100@0", "100@100")]


def test_aggregate_formula():
    est = fx.pairwise_effects(toy_records(), "distance")
    agg = fx.aggregate_effect(est)
    mean = np.mean([abs(e.g) for e in est])
    half = 1.96 * math.sqrt(sum(e.se ** 2 for e in est)) / 3
    assert agg.mean_abs_g == pytest.approx(mean)
    assert agg.ci_high - agg.mean_abs_g == pytest.approx(half)
    assert agg.pair_count == 3


def test_insufficient_values_and_unscored_records():
    recs = [record("jaccard", 10, 0, 2, 8, 0.5), record("jaccard", 10, 0, 2, 8, 0.6),
            record("dice", 10, 0, 2, 8, None)]
    with pytest.raises(InsufficientValues):
        fx.pairwise_effects(recs, "distance")
    rep = fx.effects_report(recs)
    assert set(rep["skipped"]) == {"distance", "message_length", "ngram", "sample_size"}
    with pytest.raises(InsufficientValues):
        fx.effects_report(recs, strict=True)


def test_json_roundtrip():
    rep = fx.effects_report(toy_records())
    back = fx.from_json(fx.to_json(rep))
    assert back["estimates"] == rep["estimates"]
    assert back["aggregates"] == rep["aggregates"]


def test_variable_parse():
    assert fx.Variable.parse("n-gram") is fx.Variable.NGRAM_LENGTH
    with pytest.raises(ValueError):
        fx.Variable.parse("colour")


def _est(g):
    return fx.EffectEstimate("distance", "a", "b", g, 0.1, g - 0.2, g + 0.2, 10, 10)


def test_aggregate_examples():
    assert fx.aggregate_effect([_est(-0.8)]).mean_abs_g == pytest.approx(0.8)
    assert fx.aggregate_effect([_est(0.2), _est(-0.6)]).mean_abs_g == pytest.approx(0.4)
    assert fx.aggregate_effect([_est(0.0)] * 3).mean_abs_g == 0.0
    a = fx.aggregate_effect([_est(0.2), _est(-0.6), _est(1.1)])
    b = fx.aggregate_effect([_est(1.1), _est(0.2), _est(-0.6)])
    assert a.mean_abs_g == pytest.approx(b.mean_abs_g) and a.ci_low == pytest.approx(b.ci_low)


@given(st.lists(st.floats(-5, 5), min_size=2, max_size=10), st.lists(st.floats(-5, 5), min_size=2, max_size=10),
       st.floats(0.1, 50))
def test_scale_invariance_and_shrinkage(a, b, c):
    try:
        e = fx.hedges_g(a, b)
    except ZeroPooledVariance:
        return
    if np.var(a) + np.var(b) < 1e-6:
        return
    assert fx.hedges_g(np.multiply(a, c), np.multiply(b, c)).g == pytest.approx(e.g, rel=1e-6, abs=1e-9)
    assert abs(e.g) <= abs(e.d)


def test_identical_groups_symmetric_ci():
    e = fx.hedges_g([1, 2, 3], [1, 2, 3])
    assert e.g == 0.0 and e.ci_low == pytest.approx(-e.ci_high)


def test_message_length_three_values():
    assert len(fx.pairwise_effects(toy_records(), "message_length")) == 1
    recs = [record("dice", 10, 0, 2, m, 0.1 * i + 0.01 * j) for i, m in enumerate((16, 32, 64)) for j in range(3)]
    assert [(e.a, e.b) for e in fx.pairwise_effects(recs, "message_length")] == [("16", "32"), ("16", "64"),
                                                                                 ("32", "64")]
