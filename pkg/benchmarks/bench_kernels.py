"""Time the numba kernels against the pure-numpy fallback.

    python3 benchmarks/bench_kernels.py [--sizes 500 1000 2000] [--repeat 3]

Both backends run in one process: the backend flag is read on every call.
The first numba call per kernel is timed separately as compile/cache-load
time and excluded from the steady-state numbers.  Outputs are compared so a
speedup never hides a divergence.
"""
import argparse
import os
import time

import numpy as np

from protoclust import synth
from protoclust._accel import BACKEND_ENV, HAVE_NUMBA
from protoclust.distance import build_matrix
from protoclust.hcluster import agglomerate, cut
from protoclust.preprocess import PreprocessConfig, featurize
from protoclust.validation import s_dbw


def timed(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(n):
    corpus = synth.generate(synth.SynthSpec(5, n, seed=7))
    fm = featurize(corpus, PreprocessConfig(32, 2, n))
    dm = build_matrix(fm, "braun_blanquet")
    part = cut(agglomerate(dm), 0.5)
    x = fm.dense()
    return {
        "distance/braun_blanquet": lambda: build_matrix(fm, "braun_blanquet").d,
        "distance/cosine": lambda: build_matrix(fm, "cosine").d,
        "distance/euclidean": lambda: build_matrix(fm, "euclidean").d,
        "linkage/complete": lambda: agglomerate(dm).merges,
        "s_dbw": lambda: np.array(s_dbw(x, part)),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[500, 1000, 2000])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    print(f"{'kernel':26s} {'n':>6s} {'numpy s':>9s} {'numba s':>9s} {'speedup':>8s} {'first call':>10s}")
    for n in args.sizes:
        os.environ[BACKEND_ENV] = "numba"
        for name, fn in cases(n).items():
            os.environ[BACKEND_ENV] = "numba"
            t0 = time.perf_counter()
            fn()
            first = time.perf_counter() - t0
            t_nb, out_nb = timed(fn, args.repeat)
            os.environ[BACKEND_ENV] = "numpy"
            t_np, out_np = timed(fn, args.repeat)
            if not np.allclose(out_nb, out_np, atol=1e-10, rtol=1e-10):
                raise SystemExit(f"{name} at n={n}: backends disagree")
            print(f"{name:26s} {n:6d} {t_np:9.4f} {t_nb:9.4f} {t_np / t_nb:7.1f}x {first:9.3f}s")
    os.environ.pop(BACKEND_ENV, None)


if __name__ == "__main__":
    main()
