"""Comparison mechanisms sharing the ``Instance -> AuctionOutcome`` interface.

TCDA is the all-or-nothing baseline: GMWD with every adjustable range set to
zero, so each package must fit band by band exactly as requested.

THIMBLE-approx models a virtual-bid mechanism over a single homogeneous
equivalent band. Each buyer is split into ``num_virtual`` virtual bids; bid
``j`` asks for ``ceil(eq_demand * j / n)`` equivalent units at price
``price * j / n`` (the full bid asks for exactly ``eq_demand``). Virtual bids
are scanned by unit price against the aggregate equivalent supply only, and
at most one per buyer wins. A buyer counts as rejected once every one of its
eligible virtual bids has failed to fit; under ``"break"`` the scan stops at
that point.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import FEAS_RTOL, Instance, MarketArrays, ValidationError
from .gmwd import AuctionOutcome, GreedyResult, StopPolicy, _check_policy, clear, greedy_clear_arrays

__all__ = [
    "MechanismId",
    "clear_tcda",
    "clear_thimble",
    "tcda_clear_arrays",
    "thimble_clear_arrays",
    "virtual_bids",
    "ThimbleResult",
    "get_mechanism",
]

DEFAULT_NUM_VIRTUAL = 3


class MechanismId(str, enum.Enum):
    GMWD = "GMWD"
    TCDA = "TCDA"
    THIMBLE = "THIMBLE-approx"

    @classmethod
    def parse(cls, name: str) -> "MechanismId":
        key = name.strip().upper()
        for mid in cls:
            if key in (mid.name, mid.value.upper()):
                return mid
        raise ValidationError(f"unknown mechanism {name!r}; expected one of gmwd, tcda, thimble")


def tcda_clear_arrays(arr: MarketArrays, policy: StopPolicy = "break") -> GreedyResult:
    return greedy_clear_arrays(arr.with_adjust(np.zeros_like(arr.adjust)), policy)


def clear_tcda(instance: Instance, policy: StopPolicy = "break") -> AuctionOutcome:
    """All-or-nothing clearing: GMWD with no substitution allowed."""
    rigid = Instance(instance.sem, instance.ask,
                     tuple(b.with_adjust((0,) * b.num_bands) for b in instance.bids))
    out = clear(rigid, policy)
    return AuctionOutcome("TCDA", out.winners, out.payments, out.seller_revenue,
                          out.allocation, out.social_welfare, out.clearing_price, out.values)


def virtual_bids(eq_demand: float, price: float, num_virtual: int) -> list[tuple[float, float]]:
    """``(units, price)`` for the ``num_virtual`` proportional splits of a package."""
    if num_virtual < 1:
        raise ValidationError(f"num_virtual must be at least 1, got {num_virtual}")
    out = []
    for j in range(1, num_virtual + 1):
        if j == num_virtual:
            units = float(eq_demand)
        else:
            share = eq_demand * j / num_virtual
            units = float(math.ceil(share - 1e-9 * max(1.0, share)))
        out.append((units, price * j / num_virtual))
    return out


@dataclass(frozen=True)
class ThimbleResult:
    winners: np.ndarray  # buyer rows in win order
    units: np.ndarray  # equivalent units granted, aligned with winners
    values: np.ndarray  # virtual bid prices, aligned with winners
    unit_price: float
    payments: np.ndarray  # aligned with winners
    social_welfare: float
    seller_revenue: float

    @property
    def num_winners(self) -> int:
        return len(self.winners)


def thimble_clear_arrays(arr: MarketArrays, num_virtual: int = DEFAULT_NUM_VIRTUAL,
                         policy: StopPolicy = "break") -> ThimbleResult:
    skip = _check_policy(policy)
    m = arr.num_buyers
    r = arr.reserve
    eqd = arr.eq_demand.tolist()
    price = arr.price.tolist()
    vbs = []  # (unit_price, buyer, j, units, vprice)
    for i in range(m):
        for j, (units, vprice) in enumerate(virtual_bids(eqd[i], price[i], num_virtual), 1):
            vbs.append((vprice / units if units > 0 else math.inf, i, j, units, vprice))
    vbs.sort(key=lambda v: (-v[0], v[1], -v[2]))
    pending = [0] * m
    for v in vbs:
        if v[0] >= r:
            pending[v[1]] += 1

    eq_left = arr.eq_supply
    tol = FEAS_RTOL * max(1.0, abs(eq_left))
    won = [False] * m
    winners, units_won, values_won = [], [], []
    last_pos = -1
    for pos, (unit, i, _, units, vprice) in enumerate(vbs):
        if unit < r:
            break
        if won[i] or pending[i] == 0:
            continue
        if eq_left - units >= -tol:
            eq_left -= units
            won[i] = True
            winners.append(i)
            units_won.append(units)
            values_won.append(vprice)
            last_pos = pos
            continue
        pending[i] -= 1
        if pending[i] == 0 and not skip:
            break

    unit_price = math.nan
    if winners:
        unit_price = r
        for unit, i, *_ in vbs[last_pos + 1:]:
            if not won[i]:
                if unit >= r:
                    unit_price = unit
                break
    units_arr = np.asarray(units_won, dtype=np.float64)
    values_arr = np.asarray(values_won, dtype=np.float64)
    payments = unit_price * units_arr if winners else units_arr
    return ThimbleResult(
        winners=np.asarray(winners, dtype=np.int64),
        units=units_arr,
        values=values_arr,
        unit_price=unit_price,
        payments=payments,
        social_welfare=math.fsum((values_arr - r * units_arr).tolist()),
        seller_revenue=r * math.fsum(units_won),
    )


def _spread_units(arr: MarketArrays, res: ThimbleResult) -> list[tuple[float, ...]]:
    # Homogeneous band: place equivalent units on the highest-coefficient
    # bands first, winner by winner.
    rho = arr.rho
    residual = arr.supply.astype(np.float64)
    fill = np.lexsort((np.arange(len(rho)), -rho)).tolist()
    out = []
    for need in res.units.tolist():
        grant = np.zeros(len(rho))
        for k in fill:
            if need <= 0:
                break
            take = min(residual[k], need / rho[k])
            grant[k] += take
            residual[k] -= take
            need -= take * rho[k]
        out.append(tuple(float(g) for g in grant))
    return out


def clear_thimble(instance: Instance, num_virtual: int = DEFAULT_NUM_VIRTUAL,
                  policy: StopPolicy = "break") -> AuctionOutcome:
    """Virtual-bid clearing over the aggregate equivalent supply."""
    arr = instance.arrays
    res = thimble_clear_arrays(arr, num_virtual, policy)
    ids = instance.buyer_ids
    winners = tuple(ids[i] for i in res.winners.tolist())
    return AuctionOutcome(
        mechanism=MechanismId.THIMBLE.value,
        winners=winners,
        payments={w: float(p) for w, p in zip(winners, res.payments.tolist())},
        seller_revenue=res.seller_revenue,
        allocation=dict(zip(winners, _spread_units(arr, res))),
        social_welfare=res.social_welfare,
        clearing_price=None if math.isnan(res.unit_price) else res.unit_price,
        values={w: float(v) for w, v in zip(winners, res.values.tolist())},
    )


def get_mechanism(mid: MechanismId | str, *, policy: StopPolicy = "break",
                  num_virtual: int = DEFAULT_NUM_VIRTUAL) -> Callable[[Instance], AuctionOutcome]:
    """The clear function for ``mid`` with options bound."""
    mid = MechanismId.parse(mid) if isinstance(mid, str) and not isinstance(mid, MechanismId) else mid
    if mid is MechanismId.GMWD:
        return lambda inst: clear(inst, policy)
    if mid is MechanismId.TCDA:
        return lambda inst: clear_tcda(inst, policy)
    return lambda inst: clear_thimble(inst, num_virtual, policy)
