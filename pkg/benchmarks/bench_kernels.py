"""Compiled vs. numpy-fallback kernels on representative workloads.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--json out.json]

Every workload is run on both backends; outputs are compared for equality
before timings are reported.
"""
from __future__ import annotations

import argparse
import json
import time

import numpy as np

from approxgroup import _fallback
from approxgroup.groups import UTModCtx

try:
    from approxgroup import _ext
except ImportError:  # extension not built
    _ext = None


def _workloads():
    rng = np.random.default_rng(0)
    big = UTModCtx(3, 61)  # 226981 elements
    a = rng.integers(0, big.order, 200_000, dtype=np.int64)
    b = rng.integers(0, big.order, 200_000, dtype=np.int64)
    small = UTModCtx(3, 7)
    table = small.table()
    gens = np.array(sorted({small.key_of("x"), small.key_of("y"), small.key_of("X"), small.key_of("Y")}), dtype=np.int64)
    sa = rng.integers(0, small.order, 300, dtype=np.int64)
    sb = rng.integers(0, small.order, 300, dtype=np.int64)
    mid = UTModCtx(3, 17)
    ma = np.unique(rng.integers(0, mid.order, 400, dtype=np.int64))
    mb = np.unique(rng.integers(0, mid.order, 400, dtype=np.int64))
    return {
        "utmod_mul 3x3 mod 61, 2e5 pairs": lambda k: k.utmod_mul(a, b, 3, 61),
        "utmod_inv 3x3 mod 61, 2e5": lambda k: k.utmod_inv(a, 3, 61),
        "utmod_product 400x400 mod 17": lambda k: k.utmod_product(ma, mb, 3, 17, mid.order),
        "table_product 300x300 (|G|=343)": lambda k: k.table_product(table, sa, sb),
        "table_ball_sizes r<=20 (|G|=343)": lambda k: k.table_ball_sizes(table, gens, 0, 20),
        "table_closure (|G|=343)": lambda k: k.table_closure(table, gens, 0),
    }


def _time(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--json", help="also write the rows as JSON")
    args = p.parse_args(argv)
    rows = []
    for name, work in _workloads().items():
        t_py, out_py = _time(lambda: work(_fallback), args.repeat)
        row = {"workload": name, "python_s": t_py}
        if _ext is not None:
            t_c, out_c = _time(lambda: work(_ext), args.repeat)
            row.update(cython_s=t_c, speedup=t_py / t_c if t_c else None, equal=bool(np.array_equal(np.asarray(out_py), np.asarray(out_c))))
        rows.append(row)
    print(f"{'workload':40s} {'python':>10s} {'cython':>10s} {'speedup':>8s}  equal")
    for r in rows:
        c = f"{r['cython_s']:10.4f}" if "cython_s" in r else f"{'n/a':>10s}"
        s = f"{r['speedup']:8.1f}" if r.get("speedup") else f"{'n/a':>8s}"
        print(f"{r['workload']:40s} {r['python_s']:10.4f} {c} {s}  {r.get('equal', '-')}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0 if all(r.get("equal", True) for r in rows) else 1


if __name__ == "__main__":
    raise SystemExit(main())
