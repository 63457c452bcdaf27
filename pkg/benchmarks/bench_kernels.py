"""Time the compiled kernels against the pure-Python fallback.

Usage: python3 benchmarks/bench_kernels.py [--markets N] [--repeat R]

Both backends run on identical inputs; results are checked for equality
before timings are reported.
"""
from __future__ import annotations

import argparse
import sys
import timeit

import numpy as np

from specauction import _pykernels
from specauction.core import FEAS_RTOL
from specauction.sim import GeneratorConfig, generate_market

try:
    from specauction import _ckernels
except ImportError:
    _ckernels = None


def greedy_inputs(n_markets: int, num_buyers: int):
    out = []
    for rep in range(n_markets):
        arr = generate_market(GeneratorConfig(num_buyers=num_buyers, delta=4, seed=17), rep)
        out.append((np.ascontiguousarray(arr.order, dtype=np.int64),
                    np.ascontiguousarray(arr.demand - arr.adjust), arr.eq_demand, arr.eq_price,
                    arr.supply, arr.eq_supply, arr.reserve, False,
                    FEAS_RTOL * max(1.0, arr.eq_supply)))
    return out


def search_inputs(n_markets: int, num_buyers: int):
    out = []
    for rep in range(n_markets):
        arr = generate_market(GeneratorConfig(num_buyers=num_buyers, delta=4, seed=23), rep)
        contrib = arr.price - arr.reserve * arr.eq_demand
        cand = np.flatnonzero(contrib > 0)
        cand = cand[np.lexsort((cand, -contrib[cand] / arr.eq_demand[cand]))]
        out.append((np.ascontiguousarray(contrib[cand]),
                    np.ascontiguousarray((arr.demand - arr.adjust)[cand]),
                    np.ascontiguousarray(arr.eq_demand[cand]),
                    np.ascontiguousarray(cand, dtype=np.int64),
                    arr.supply, arr.eq_supply, FEAS_RTOL * max(1.0, arr.eq_supply)))
    return out


def _same(a, b) -> bool:
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    if isinstance(a, np.ndarray):
        return np.array_equal(a, b)
    return a == b


def bench(name: str, func: str, inputs, repeat: int) -> None:
    backends = [("python", _pykernels)] + ([("cython", _ckernels)] if _ckernels else [])
    ref = [getattr(_pykernels, func)(*args) for args in inputs]
    times = {}
    for label, mod in backends:
        fn = getattr(mod, func)
        got = [fn(*args) for args in inputs]
        if not all(_same(a, b) for a, b in zip(ref, got)):
            sys.exit(f"{label} {func} disagrees with the Python reference")
        times[label] = min(timeit.repeat(lambda: [fn(*a) for a in inputs], number=1, repeat=repeat))
    per = {k: v / len(inputs) * 1e6 for k, v in times.items()}
    line = f"{name:<32}" + "".join(f"{k:>8}: {v:10.1f} us" for k, v in per.items())
    if "cython" in per:
        line += f"   speedup x{per['python'] / per['cython']:.1f}"
    print(line)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--markets", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _ckernels is None:
        print("compiled extension not built; timing the Python fallback only")
    for m in (10, 30):
        bench(f"greedy_select  M={m}", "greedy_select", greedy_inputs(args.markets, m), args.repeat)
    for m in (12, 20):
        bench(f"subset_search  M={m}", "subset_search",
              search_inputs(max(1, args.markets // 10), m), args.repeat)


if __name__ == "__main__":
    main()
