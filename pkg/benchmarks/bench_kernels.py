"""Time the numba-compiled kernels against their numpy counterparts.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--json out.json]

The first numba call (compilation or cache load) is excluded from the timings.
Each row also reports the largest difference between the two paths (relative
for values above one, absolute below); hit-and-run chains are compared over
their first 100 states only.
"""
from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from subgauss import kernels
from subgauss._accel import HAVE_NUMBA


def _best(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def _diff(a, b, prefix):
    a = np.asarray(a, dtype=float)[:prefix]
    b = np.asarray(b, dtype=float)[:prefix]
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1.0)))


def cases(g):
    n = 20
    A = np.vstack([np.eye(n), -np.eye(n)])
    b = np.ones(2 * n)
    dirs = g.standard_normal((20_000, n))
    us = g.random(20_000)
    x0 = np.zeros(n)
    # chains are chaotic: the two paths agree to rounding for ~100 steps, then
    # drift apart while staying equal in distribution, so only a prefix is compared
    yield ("har_polytope cube n=20, 2e4 steps",
           lambda: kernels._har_polytope_jit(A, b, x0, dirs, us, 1)[0],
           lambda: kernels.har_polytope_numpy(A, b, x0, dirs, us, 1)[0], 100)

    dirs2 = dirs[:5000]
    us2 = us[:5000]
    yield ("har_lpball p=1.5 n=20, 5e3 steps",
           lambda: kernels._har_lpball_jit(1.5, 1.0, x0, dirs2, us2, 1, 5.0, 1e-12)[0],
           lambda: kernels.har_lpball_numpy(1.5, 1.0, x0, dirs2, us2, 1, 5.0, 1e-12)[0], 100)

    X = g.uniform(-0.5, 0.5, (50_000, 10))
    Y = g.standard_normal((1000, 10))
    for p in (1.0, 8.0, 3.5):
        yield (f"projected_lp_norms p={p:g} 5e4 x 1e3",
               lambda p=p: kernels._projected_lp_norms_jit(X, Y, p),
               lambda p=p: kernels.projected_lp_norms_numpy(X, Y, p), None)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", help="write the table as JSON")
    args = ap.parse_args(argv)
    if not HAVE_NUMBA:
        print("numba is not active (unset SUBGAUSS_NO_NUMBA / install numba)", file=sys.stderr)
        return 1
    g = np.random.default_rng(12345)
    rows = []
    print(f"{'kernel':40s} {'numba s':>10s} {'numpy s':>10s} {'speedup':>8s} {'max rel diff':>13s}")
    for name, fast, slow, prefix in cases(g):
        fast()  # compile or load from cache
        tf, a = _best(fast, args.repeat)
        ts, b = _best(slow, args.repeat)
        row = {"kernel": name, "numba_s": tf, "numpy_s": ts, "speedup": ts / tf,
               "max_rel_diff": _diff(a, b, prefix)}
        rows.append(row)
        print(f"{name:40s} {tf:10.4f} {ts:10.4f} {ts / tf:8.1f} {row['max_rel_diff']:13.2e}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
