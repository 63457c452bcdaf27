"""Greedy matching winner determination (GMWD) with critical-value payments.

Buyers are scanned in descending equivalent unit price. A buyer is admitted
when, after deducting its non-adjustable channels from each band and its
full equivalent demand from the aggregate equivalent supply, nothing goes
negative. Under the default ``"break"`` policy the scan ends at the first
buyer that does not fit; ``"skip"`` moves on to the next buyer instead.

Winners pay their equivalent demand times a common unit price: the
equivalent price of the buyer ranked directly after the last winner, or the
reserve price if that is higher or if no such buyer exists.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Literal

import numpy as np

from . import kernels
from .core import FEAS_RTOL, AuctionError, Instance, MarketArrays, ValidationError

__all__ = [
    "StopPolicy",
    "GmwdState",
    "AuctionOutcome",
    "AllocationInfeasibleError",
    "GreedyResult",
    "greedy_clear_arrays",
    "run_gmwd",
    "determine_payments",
    "realize_allocation",
    "clear",
]

StopPolicy = Literal["break", "skip"]

ALLOCATION_TOL = 1e-6


class AllocationInfeasibleError(AuctionError):
    """Substituted spectrum could not be placed; indicates an internal bug."""


def _check_policy(policy: str) -> bool:
    if policy not in ("break", "skip"):
        raise ValidationError(f"unknown stop policy {policy!r}; expected 'break' or 'skip'")
    return policy == "skip"


@dataclass(frozen=True)
class GreedyResult:
    """Array-level result of one greedy clearing; rows in buyer-id order."""

    selected: np.ndarray  # (M,) bool
    winners: np.ndarray  # row indices in rank order
    band_left: np.ndarray
    eq_left: float
    last_pos: int
    unit_price: float  # nan when nobody wins
    payments: np.ndarray  # (M,) zero for losers
    social_welfare: float
    seller_revenue: float

    @property
    def num_winners(self) -> int:
        return len(self.winners)


def _tolerance(eq_supply: float) -> float:
    return FEAS_RTOL * max(1.0, abs(eq_supply))


def clearing_unit_price(arr: MarketArrays, last_pos: int) -> float:
    """Unit price owed by every winner given the lowest winner's rank position."""
    if last_pos < 0:
        return math.nan
    order = arr.order
    if last_pos + 1 < len(order):
        nxt = float(arr.eq_price[order[last_pos + 1]])
        if nxt >= arr.reserve:
            return nxt
    return arr.reserve


def greedy_clear_arrays(arr: MarketArrays, policy: StopPolicy = "break") -> GreedyResult:
    """Run the full GMWD pipeline (selection, payments, totals) on arrays."""
    skip = _check_policy(policy)
    m = arr.num_buyers
    if m == 0:
        empty = np.zeros(0, dtype=np.float64)
        return GreedyResult(np.zeros(0, dtype=bool), np.zeros(0, dtype=np.int64),
                            arr.supply.copy(), arr.eq_supply, -1, math.nan, empty, 0.0, 0.0)
    net = np.ascontiguousarray(arr.demand - arr.adjust, dtype=np.int64)
    eqd = np.ascontiguousarray(arr.eq_demand, dtype=np.float64)
    eqp = np.ascontiguousarray(arr.eq_price, dtype=np.float64)
    order = np.ascontiguousarray(arr.order, dtype=np.int64)
    eq_supply = arr.eq_supply
    selected, band_left, eq_left, last_pos = kernels.greedy_select(
        order, net, eqd, eqp, np.ascontiguousarray(arr.supply, dtype=np.int64),
        eq_supply, arr.reserve, skip, _tolerance(eq_supply),
    )
    selected = np.asarray(selected, dtype=bool)
    winners = order[selected[order]]
    price = clearing_unit_price(arr, last_pos)
    payments = np.zeros(m, dtype=np.float64)
    if len(winners):
        payments[winners] = price * eqd[winners]
    w_eqd = eqd[winners]
    welfare = math.fsum((arr.price[winners] - arr.reserve * w_eqd).tolist())
    revenue = arr.reserve * math.fsum(w_eqd.tolist())
    return GreedyResult(selected, winners, np.asarray(band_left), float(eq_left), int(last_pos),
                        price, payments, welfare, revenue)


@dataclass(frozen=True)
class GmwdState:
    """Scan state after winner determination.

    ``adjustments`` holds, per winner, the substitutable channels actually
    used; they are fixed at each winner's full adjustable range.
    """

    buyer_ids: tuple
    equivalent_remaining: float
    band_remaining: tuple[int, ...]
    winners: tuple  # buyer ids in rank order
    selected: tuple[bool, ...]  # aligned with buyer_ids
    adjustments: dict
    last_position: int
    policy: str = "break"


@dataclass(frozen=True)
class AuctionOutcome:
    """Result of clearing one market with any mechanism.

    ``values`` records the bid value credited to each winner; it equals the
    package price except for mechanisms that grant partial packages.
    """

    mechanism: str
    winners: tuple
    payments: dict
    seller_revenue: float
    allocation: dict
    social_welfare: float
    clearing_price: float | None = None
    values: dict = field(default_factory=dict)

    @property
    def num_winners(self) -> int:
        return len(self.winners)

    def utility(self, buyer_id: Hashable) -> float:
        if buyer_id not in self.payments:
            return 0.0
        return self.values[buyer_id] - self.payments[buyer_id]


def run_gmwd(instance: Instance, policy: StopPolicy = "break") -> GmwdState:
    """Winner determination only; see the module docstring for the rule."""
    return _state(instance, greedy_clear_arrays(instance.arrays, policy), policy)


def _state(instance: Instance, res: GreedyResult, policy: str) -> GmwdState:
    ids = instance.buyer_ids
    winners = tuple(ids[i] for i in res.winners.tolist())
    return GmwdState(
        buyer_ids=ids,
        equivalent_remaining=res.eq_left,
        band_remaining=tuple(int(v) for v in res.band_left.tolist()),
        winners=winners,
        selected=tuple(bool(s) for s in res.selected.tolist()),
        adjustments={ids[i]: instance.bids[i].adjust_range for i in res.winners.tolist()},
        last_position=res.last_pos,
        policy=policy,
    )


def _check_state(instance: Instance, state: GmwdState) -> None:
    if state.buyer_ids != instance.buyer_ids:
        raise ValidationError("GMWD state was produced from a different instance")


def determine_payments(instance: Instance, state: GmwdState) -> dict:
    """Critical-value payment for each winner; losers are absent."""
    _check_state(instance, state)
    arr = instance.arrays
    price = clearing_unit_price(arr, state.last_position)
    idx = {b: i for i, b in enumerate(instance.buyer_ids)}
    return {w: float(price * arr.eq_demand[idx[w]]) for w in state.winners}


def realize_allocation(instance: Instance, state: GmwdState) -> dict:
    """Concrete channels per band for each winner.

    Every winner first gets its non-adjustable channels. The substitutable
    remainder, measured in equivalent units, is then filled winner by winner
    in rank order from whatever is left, taking high-coefficient bands
    first. Amounts may be fractional.
    """
    _check_state(instance, state)
    arr = instance.arrays
    idx = {b: i for i, b in enumerate(instance.buyer_ids)}
    rows = [idx[w] for w in state.winners]
    rho = arr.rho
    residual = arr.supply.astype(np.float64)
    floors = {}
    for i in rows:
        floors[i] = (arr.demand[i] - arr.adjust[i]).astype(np.float64)
        residual -= floors[i]
    if np.any(residual < 0):
        raise AllocationInfeasibleError("non-adjustable demand exceeds band supply")
    fill_order = np.lexsort((np.arange(len(rho)), -rho))
    allocation = {}
    for w, i in zip(state.winners, rows):
        grant = floors[i].copy()
        need = float(arr.adjust[i] @ rho)
        for k in fill_order.tolist():
            if need <= 0:
                break
            take = min(residual[k], need / rho[k])
            if take <= 0:
                continue
            grant[k] += take
            residual[k] -= take
            need -= take * rho[k]
        if need > ALLOCATION_TOL:
            raise AllocationInfeasibleError(
                f"could not place {need:.6g} equivalent units for buyer {w!r}"
            )
        allocation[w] = tuple(float(g) for g in grant)
    return allocation


def clear(instance: Instance, policy: StopPolicy = "break") -> AuctionOutcome:
    """Clear ``instance`` with GMWD: winners, payments, allocation, totals."""
    res = greedy_clear_arrays(instance.arrays, policy)
    ids = instance.buyer_ids
    state = _state(instance, res, policy)
    winners = state.winners
    payments = {ids[i]: float(res.payments[i]) for i in res.winners.tolist()}
    return AuctionOutcome(
        mechanism="GMWD",
        winners=winners,
        payments=payments,
        seller_revenue=res.seller_revenue,
        allocation=realize_allocation(instance, state),
        social_welfare=res.social_welfare,
        clearing_price=None if math.isnan(res.unit_price) else res.unit_price,
        values={w: instance.bid(w).price for w in winners},
    )
