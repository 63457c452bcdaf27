"""Exact welfare maximisation for small markets.

The social-welfare program has binary winner flags and continuous
substitution amounts ``y``. ``y`` only appears in the per-band constraints,
where larger is looser, so ``y = adjust_range`` is optimal for any winner
set. That leaves pure subset selection: pick buyers maximising
``sum(price - reserve * eq_demand)`` such that the non-adjustable channels
fit every band and the total equivalent demand fits the total equivalent
supply.

The search is depth-first branch and bound over buyers sorted by welfare
density, bounded by the fractional relaxation of the aggregate constraint.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _pykernels, kernels
from .core import FEAS_RTOL, AuctionError, Instance, MarketArrays

__all__ = ["OracleResult", "SizeLimitError", "solve_exact", "solve_exact_arrays", "is_feasible"]

DEFAULT_MAX_BUYERS = 20


class SizeLimitError(AuctionError):
    """Instance too large for exhaustive search."""


@dataclass(frozen=True)
class OracleResult:
    optimal_welfare: float
    optimal_winner_set: frozenset
    feasible: bool = True


def is_feasible(arr: MarketArrays, rows) -> bool:
    """Whether buyers ``rows`` can win together with full substitution."""
    rows = list(rows)
    if not rows:
        return True
    net = (arr.demand[rows] - arr.adjust[rows]).sum(axis=0)
    if np.any(net > arr.supply):
        return False
    tol = FEAS_RTOL * max(1.0, abs(arr.eq_supply))
    return arr.eq_supply - math.fsum(arr.eq_demand[rows].tolist()) >= -tol


def welfare_of(arr: MarketArrays, rows) -> float:
    rows = list(rows)
    return math.fsum((arr.price[rows] - arr.reserve * arr.eq_demand[rows]).tolist())


def solve_exact_arrays(arr: MarketArrays, max_buyers: int = DEFAULT_MAX_BUYERS) -> tuple[float, list[int]]:
    """Optimal welfare and winning rows (ascending).

    Among optimal subsets the lexicographically smallest row tuple is
    returned. Buyers whose welfare contribution is not strictly positive
    never improve the optimum and are left out of the search.
    """
    m = arr.num_buyers
    if m > max_buyers:
        raise SizeLimitError(f"{m} buyers exceeds the exact-search limit of {max_buyers}")
    contrib = arr.price - arr.reserve * arr.eq_demand
    cand = np.flatnonzero(contrib > 0)
    if len(cand) == 0:
        return 0.0, []
    density = contrib[cand] / arr.eq_demand[cand]
    cand = cand[np.lexsort((cand, -density))]
    values = np.ascontiguousarray(contrib[cand], dtype=np.float64)
    net = np.ascontiguousarray(arr.demand[cand] - arr.adjust[cand], dtype=np.int64)
    eqd = np.ascontiguousarray(arr.eq_demand[cand], dtype=np.float64)
    ids = np.ascontiguousarray(cand, dtype=np.int64)
    supply = np.ascontiguousarray(arr.supply, dtype=np.int64)
    tol = FEAS_RTOL * max(1.0, abs(arr.eq_supply))
    impl = kernels if m <= 63 else _pykernels
    _, mask = impl.subset_search(values, net, eqd, ids, supply, arr.eq_supply, tol)
    rows = [i for i in range(m) if (mask >> i) & 1]
    return welfare_of(arr, rows), rows


def solve_exact(instance: Instance, max_buyers: int = DEFAULT_MAX_BUYERS) -> OracleResult:
    """Welfare-maximising feasible winner set of ``instance``."""
    welfare, rows = solve_exact_arrays(instance.arrays, max_buyers)
    ids = instance.buyer_ids
    return OracleResult(welfare, frozenset(ids[i] for i in rows), True)
