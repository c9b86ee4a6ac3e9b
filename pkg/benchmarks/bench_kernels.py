"""Compiled vs pure-Python kernel timings.

Usage: ``python3 benchmarks/bench_kernels.py [--repeat N]``

Both backends are imported directly, so the comparison runs regardless of
which one ``ora.kernels`` selected. Outputs are checked for exact equality
before timing.
"""

from __future__ import annotations

import argparse
import math
import timeit

import numpy as np

from ora import _kernels_py as py

try:
    from ora import _kernels as cy
except ImportError:  # extension not built
    cy = None


def linear_case(T: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    a = rng.uniform(0, 1, T)
    d = np.full(T, 0.01)
    x = np.ones(T)
    B, rho = 0.1 * T, 0.1
    return (a, d, x, B, rho, 0.1, 1 / math.sqrt(T), 1 / rho)


def menu_case(T: int, M: int, cap: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    R = rng.uniform(0, 2, (T, M))
    U = rng.integers(0, 8, (T, M)).astype(np.int64)
    return R, U, cap


def _same(a, b) -> bool:
    if isinstance(a, dict):
        return all(_same(a[k], b[k]) for k in a)
    if isinstance(a, np.ndarray):
        return np.array_equal(a, b, equal_nan=True)
    if isinstance(a, float) and math.isnan(a):
        return math.isnan(b)
    return a == b


def bench(fn, args, repeat):
    t = timeit.Timer(lambda: fn(*args))
    n, _ = t.autorange()
    return min(t.repeat(repeat, n)) / n


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    ns = ap.parse_args(argv)
    if cy is None:
        print("compiled extension not available; only the fallback can be timed")
    rows = []
    for T in (2000, 20000):
        for mode, name in ((0, "robust"), (1, "omd"), (2, "roa")):
            args = linear_case(T) + (mode,)
            tp = bench(py.linear_episode, args, ns.repeat)
            tc = math.nan
            if cy is not None:
                assert _same(py.linear_episode(*args), cy.linear_episode(*args)), "backends disagree"
                tc = bench(cy.linear_episode, args, ns.repeat)
            rows.append((f"linear_episode[{name}] T={T}", tp, tc))
    for T, M, cap in ((200, 4, 2000), (2000, 3, 10000)):
        args = menu_case(T, M, cap)
        tp = bench(py.menu_dp, args, ns.repeat)
        tc = math.nan
        if cy is not None:
            vp, cp = py.menu_dp(*args)
            vc, cc = cy.menu_dp(*args)
            assert vp == vc and np.array_equal(cp, cc), "backends disagree"
            tc = bench(cy.menu_dp, args, ns.repeat)
        rows.append((f"menu_dp T={T} M={M} cap={cap}", tp, tc))
    w = max(len(r[0]) for r in rows)
    print(f"{'kernel':<{w}}  {'python [ms]':>12}  {'compiled [ms]':>14}  {'speedup':>8}")
    for name, tp, tc in rows:
        print(f"{name:<{w}}  {tp * 1e3:12.3f}  {tc * 1e3:14.3f}  {tp / tc:8.1f}x")


if __name__ == "__main__":
    main()
