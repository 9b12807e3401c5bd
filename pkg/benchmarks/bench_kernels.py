"""Compare the compiled and pure-Python kernel backends.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
Prints one line per kernel and size with both timings and the speedup,
after checking that the two backends return identical results.
"""

import argparse
import time

import numpy as np

from catnet import kernels


def _time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _dist(n, rng):
    d = rng.integers(0, 8, (n, n))
    d = np.triu(d, 1)
    return (d + d.T).astype(np.int64), rng.integers(0, 4, n).astype(np.int64), rng.integers(0, 4, n).astype(np.int64)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if kernels.compiled_backend is None:
        raise SystemExit("compiled extension not built; run pip install -e . --no-build-isolation")
    fast, slow = kernels.compiled_backend, kernels.python_backend
    rng = np.random.default_rng(0)
    cases = [("brute_order", n, _dist(n, rng)) for n in (8, 9, 10)]
    cases += [("held_karp_order", n, _dist(n, rng)) for n in (12, 16, 18)]
    for name, n, inputs in cases:
        tc, rc = _time(lambda: getattr(fast, name)(*inputs), args.repeat)
        tp, rp = _time(lambda: getattr(slow, name)(*inputs), args.repeat)
        assert rc[0] == rp[0] and list(rc[1]) == list(rp[1]), name
        print(f"{name:18s} n={n:<6d} compiled {tc:9.5f}s  python {tp:9.5f}s  speedup {tp / tc:6.1f}x")
    M = 2 ** np.arange(10, dtype=np.int64)
    for trials in (10_000, 100_000):
        phi = rng.uniform(0, 2 * np.pi, (trials, 10))
        tc, rc = _time(lambda: fast.combine_stages_batch(phi, M), args.repeat)
        tp, rp = _time(lambda: slow.combine_stages_batch(phi, M), args.repeat)
        assert np.array_equal(np.asarray(rc), np.asarray(rp))
        print(f"{'combine_stages':18s} n={trials:<6d} compiled {tc:9.5f}s  python {tp:9.5f}s  speedup {tp / tc:6.1f}x")


if __name__ == "__main__":
    main()
