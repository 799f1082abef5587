"""Acceptance criteria, one test per criterion.

Run with ``pytest tests/test_acceptance.py``; the terminal summary prints a
PASS/FAIL line for each criterion.  Criteria 6 to 8 share one end-to-end
sweep of the synthetic fixture.
"""
import math
import sys
import time

import numpy as np
import pytest

import oracles
from acceptance_log import criterion, note
from frames import udp_frame
from protoclust import distance as dist
from protoclust import effects, ingest, sweep, synth, validation
from protoclust.distance import MEASURES
from protoclust.hcluster import agglomerate, cut


# -- 1 ---------------------------------------------------------------------------

def test_criterion_1_ari_oracle():
    with criterion(1, "contingency ARI == pair-counting ARI on 200 pairs, N <= 30 (tol 1e-12, < 5 s)"):
        rng = np.random.default_rng(101)
        t0 = time.perf_counter()
        worst = 0.0
        for _ in range(200):
            n = int(rng.integers(1, 31))
            u = rng.integers(0, int(rng.integers(1, 7)), n)
            v = rng.integers(0, int(rng.integers(1, 7)), n)
            worst = max(worst, abs(validation.adjusted_rand(u, v) - oracles.ari_pairs(u.tolist(), v.tolist())))
        elapsed = time.perf_counter() - t0
        note(1, f"max |diff| {worst:.1e}, {elapsed:.2f} s")
        assert worst <= 1e-12
        assert elapsed < 5.0


# -- 2 ---------------------------------------------------------------------------

def _fixed_datasets():
    rng = np.random.default_rng(202)
    out = []
    for i in range(10):
        k = 2 + i % 4
        dim = 1 + i % 5
        sizes = rng.integers(2, 10, k)
        centres = rng.normal(0, 3, (k, dim))
        x = np.vstack([c + rng.normal(0, 1.0 + 0.2 * i, (s, dim)) for c, s in zip(centres, sizes)])
        lab = np.repeat(np.arange(k), sizes)
        perm = rng.permutation(lab.size)
        out.append((x[perm], lab[perm]))
    return out


def test_criterion_2_internal_index_oracles():
    with criterion(2, "six internal indices match brute force on 10 datasets (rel 1e-6)"):
        pairs = [(validation.ball_hall, oracles.ball_hall),
                 (validation.calinski_harabasz, oracles.calinski_harabasz),
                 (validation.davies_bouldin, oracles.davies_bouldin),
                 (validation.trace_wib, oracles.trace_wib),
                 (validation.sd_index, oracles.sd_index),
                 (validation.s_dbw, oracles.s_dbw)]
        worst = 0.0
        for x, lab in _fixed_datasets():
            for ours, ref in pairs:
                a, b = ours(x, lab), ref(x.tolist(), lab.tolist())
                rel = abs(a - b) / max(abs(b), 1e-300)
                worst = max(worst, rel)
                assert a == pytest.approx(b, rel=1e-6), ours.__name__
        note(2, f"max rel err {worst:.1e}")


# -- 3 ---------------------------------------------------------------------------

def _rand_dist(rng, n):
    d = np.triu(rng.random((n, n)), 1)
    return d + d.T


def test_criterion_3_linkage_oracle():
    with criterion(3, "complete-linkage heights equal brute force (100 x n <= 12); diameter bound (100 x n <= 60)"):
        rng = np.random.default_rng(303)
        for _ in range(100):
            n = int(rng.integers(2, 13))
            d = _rand_dist(rng, n)
            heights, _ = oracles.complete_linkage_heights(d.tolist())
            assert agglomerate(d).heights.tolist() == heights
        for _ in range(100):
            n = int(rng.integers(2, 61))
            d = _rand_dist(rng, n)
            h = float(rng.uniform(0.05, 1.0))
            a = cut(agglomerate(d), h).assign
            assert d[a[:, None] == a[None, :]].max() <= h


# -- 4 ---------------------------------------------------------------------------

def test_criterion_4_distance_laws():
    with criterion(4, "symmetry, zero self-distance, [0,1] range, Euclidean triangle; coefficient inequalities"):
        rng = np.random.default_rng(404)
        for _ in range(1000):
            x, y, z = (np.where(rng.random(16) < 0.4, rng.random(16) * 4, 0.0) for _ in range(3))
            for m in MEASURES:
                px, py = (x != 0, y != 0) if m.uses_presence else (x, y)
                dxy = dist.pair_distance(px, py, m)
                assert dxy == dist.pair_distance(py, px, m)
                assert dist.pair_distance(px, px, m) == 0.0
                if m.bounded:
                    assert 0.0 <= dxy <= 1.0
            e = dist.euclidean_distance
            assert e(x, z) <= e(x, y) + e(y, z) + 1e-12
        for a in range(11):
            for b in range(11):
                for c in range(11):
                    if a + b + c == 0:
                        continue
                    jac = a / (a + b + c)
                    assert jac <= 2 * a / (2 * a + b + c)
                    assert a / max(a + b, a + c) >= jac


# -- 5 ---------------------------------------------------------------------------

def test_criterion_5_hedges_worked_examples():
    with criterion(5, "Hedges' g worked examples (d = 1, g = 0.980132; g = -0.8)"):
        z = np.arange(20, dtype=float)
        z = (z - z.mean()) / z.std(ddof=1)
        e = effects.hedges_g(10 + 2 * z, 8 + 2 * z)
        assert abs(e.d - 1.0) <= 1e-6
        assert abs(e.g - 0.980132) <= 1e-6
        small = effects.hedges_g([1, 2, 3], [2, 3, 4])
        assert small.g == -0.8
        note(5, f"d = {e.d:.6f}, g = {e.g:.6f}, small g = {small.g}")


# -- 6, 7, 8: end-to-end sweep -----------------------------------------------------

FIXTURE = synth.SynthSpec(type_count=5, count=2000, mode="binary", seed=7)
PLAN = sweep.SweepPlan(message_lengths=(16, 32, 64), ngram_lengths=(2, 3, 4),
                       subsamples=((500, 1500), (1000, 500), (2000, 0)))


@pytest.fixture(scope="module")
def corpus():
    return synth.generate(FIXTURE)


@pytest.fixture(scope="module")
def sweep_run(corpus):
    t0 = time.perf_counter()
    records = sweep.run_sweep(corpus, PLAN, workers=1)
    return records, time.perf_counter() - t0


def test_criterion_6_synthetic_recovery(sweep_run):
    with criterion(6, "synthetic sweep: best ARI >= 0.95; Ball-Hall pick under Braun-Blanquet within 0.10"):
        records, elapsed = sweep_run
        assert len(records) == 135
        best = max(r.adjusted_rand for r in records if r.adjusted_rand is not None)
        pick = sweep.select_optimal(records, "ball_hall", "braun_blanquet")
        c = pick.config
        note(6, f"best {best:.4f}; pick {c.sample_size}@{c.sample_offset} n={c.ngram} m={c.message_length} "
                f"ARI {pick.adjusted_rand:.4f}; {elapsed:.0f} s")
        assert best >= 0.95
        assert best - pick.adjusted_rand <= 0.10
        assert elapsed < 600


def test_criterion_7_effect_direction(sweep_run):
    with criterion(7, "aggregate |g| for distance measure exceeds aggregate |g| for sample size"):
        records, _ = sweep_run
        rep = effects.effects_report(records, ["distance", "sample_size"], strict=True)
        agg = {a.variable: a.mean_abs_g for a in rep["aggregates"]}
        note(7, f"distance {agg['distance']:.3f} vs sample_size {agg['sample_size']:.3f}")
        assert agg["distance"] > agg["sample_size"]


def test_criterion_8_determinism(corpus, sweep_run):
    with criterion(8, "1 worker and max workers give byte-identical results CSVs"):
        records, _ = sweep_run
        workers = sweep.max_workers()
        parallel = sweep.run_sweep(corpus, PLAN, workers=workers)
        note(8, f"1 vs {workers} workers")
        assert sweep.format_results(records) == sweep.format_results(parallel)


# -- 9 ---------------------------------------------------------------------------

def test_criterion_9_format_roundtrips(tmp_path):
    with criterion(9, "pcap both endiannesses give identical corpora; messages file write -> read byte-identical"):
        frames = [udp_frame(40001, 69, b"\x00\x01boot.img\x00octet\x00"), udp_frame(69, 40001, b"\x00\x04\x00\x00")]
        corpora = []
        for order in ("<", ">"):
            pkts = ingest.parse_pcap(ingest.write_pcap(frames, byteorder=order))
            corpora.append(ingest.classify_by_port(pkts, 69, "udp", source="fixture"))
        assert len(corpora[0]) == 2
        assert corpora[0] == corpora[1]

        path = tmp_path / "m.pmsg"
        ingest.write_messages(corpora[0], path)
        first = path.read_bytes()
        again = tmp_path / "again.pmsg"
        ingest.write_messages(ingest.read_messages(path), again)
        assert again.read_bytes() == first


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
