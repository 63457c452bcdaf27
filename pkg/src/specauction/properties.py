"""Audits of individual rationality, budget balance and manipulability."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Sequence

import numpy as np

from .core import Instance, ValidationError
from .gmwd import AuctionOutcome, clear

__all__ = [
    "PropertyReport",
    "check_individual_rationality",
    "check_budget_balance",
    "check_consumer_sovereignty",
    "manipulation_gain_search",
    "audit",
    "DEFAULT_PRICE_GRID",
]

log = logging.getLogger(__name__)

DEFAULT_PRICE_GRID = (0.5, 0.8, 0.9, 1.1, 1.25, 2.0)
REL_TOL = 1e-9


@dataclass
class PropertyReport:
    instances_checked: int = 0
    ir_violations: int = 0
    bb_violations: int = 0
    max_manipulation_gain: float = 0.0
    manipulation_samples: int = 0
    scs_exceptions: int = 0
    manipulation_gains: list = field(default_factory=list, repr=False)

    @property
    def ok(self) -> bool:
        return self.ir_violations == 0 and self.bb_violations == 0

    def merge(self, other: "PropertyReport") -> None:
        if other.manipulation_samples:
            mine = self.max_manipulation_gain if self.manipulation_samples else -math.inf
            self.max_manipulation_gain = max(mine, other.max_manipulation_gain)
        self.instances_checked += other.instances_checked
        self.ir_violations += other.ir_violations
        self.bb_violations += other.bb_violations
        self.scs_exceptions += other.scs_exceptions
        self.manipulation_samples += other.manipulation_samples
        self.manipulation_gains.extend(other.manipulation_gains)

    def gain_histogram(self, bins: int = 10) -> dict:
        if not self.manipulation_gains:
            return {"edges": [], "counts": []}
        counts, edges = np.histogram(self.manipulation_gains, bins=bins)
        return {"edges": edges.tolist(), "counts": counts.tolist()}

    def to_dict(self) -> dict:
        out = {
            "instances_checked": self.instances_checked,
            "ir_violations": self.ir_violations,
            "bb_violations": self.bb_violations,
            "max_manipulation_gain": self.max_manipulation_gain,
            "manipulation_samples": self.manipulation_samples,
            "scs_exceptions": self.scs_exceptions,
        }
        if self.manipulation_samples:
            gains = np.asarray(self.manipulation_gains)
            out["manipulation_gain_summary"] = {
                "mean": float(gains.mean()),
                "median": float(np.median(gains)),
                "fraction_positive": float(np.mean(gains > 0)),
            }
            out["manipulation_gain_histogram"] = self.gain_histogram()
        return out


def _check_pair(instance: Instance, outcome: AuctionOutcome) -> None:
    ids = set(instance.buyer_ids)
    unknown = [w for w in outcome.winners if w not in ids]
    unknown += [p for p in outcome.payments if p not in ids]
    if unknown:
        raise ValidationError(f"outcome names buyers absent from the instance: {unknown!r}")


def check_individual_rationality(instance: Instance, outcome: AuctionOutcome) -> bool:
    """Every winner's value covers its payment; nobody else pays."""
    _check_pair(instance, outcome)
    winners = set(outcome.winners)
    for buyer_id, pay in outcome.payments.items():
        if buyer_id not in winners:
            if pay != 0:
                return False
            continue
        value = outcome.values.get(buyer_id, instance.bid(buyer_id).price)
        if value - pay < -REL_TOL * max(1.0, value):
            return False
    return all(w in outcome.payments for w in winners)


def check_budget_balance(instance: Instance, outcome: AuctionOutcome) -> bool:
    """Collected payments cover what is owed to the seller."""
    _check_pair(instance, outcome)
    collected = math.fsum(outcome.payments.values())
    return collected - outcome.seller_revenue >= -REL_TOL * max(1.0, outcome.seller_revenue)


def check_consumer_sovereignty(instance: Instance, outcome: AuctionOutcome) -> bool:
    """No single bid exceeds the realised welfare.

    Diagnostic only: a market consisting of one dominant buyer violates it
    without anything being wrong with the mechanism.
    """
    _check_pair(instance, outcome)
    top = max((b.price for b in instance.bids), default=0.0)
    return top <= outcome.social_welfare + REL_TOL * max(1.0, top)


def _utility(outcome: AuctionOutcome, buyer_id: Hashable, value_scale: float) -> float:
    # Credited value is in reported-price terms; rescale to the true price.
    if buyer_id not in outcome.payments:
        return 0.0
    return outcome.values[buyer_id] * value_scale - outcome.payments[buyer_id]


def manipulation_gain_search(
    instance: Instance,
    buyer_id: Hashable,
    price_grid: Sequence[float] = DEFAULT_PRICE_GRID,
    mechanism: Callable[[Instance], AuctionOutcome] = clear,
) -> float:
    """Best utility improvement from a misreport on a finite grid.

    Misreports combine a price multiplier from ``price_grid`` (plus the
    truthful price) with adjustable ranges of zero, half (rounded down) and
    the full truthful range. Utility is always evaluated at the true price.
    The result can be negative when every misreport hurts; differences
    within floating tolerance are reported as zero.
    """
    if any(c <= 0 for c in price_grid):
        raise ValidationError("price multipliers must be positive")
    bid = instance.bid(buyer_id)
    truthful = _utility(mechanism(instance), buyer_id, 1.0)
    adjusts = []
    for a in ((0,) * bid.num_bands, tuple(d // 2 for d in bid.adjust_range), bid.adjust_range):
        if a not in adjusts:
            adjusts.append(a)
    best = -math.inf
    for mult in (1.0, *price_grid):
        for adj in adjusts:
            if mult == 1.0 and adj == bid.adjust_range:
                continue
            lie = bid.with_adjust(adj).with_price(bid.price * mult)
            out = mechanism(instance.replace_bid(lie))
            scale = bid.price / lie.price if lie.price > 0 else 0.0
            best = max(best, _utility(out, buyer_id, scale) - truthful)
    # Rounding noise from recomputed payments is not a gain.
    return 0.0 if abs(best) <= REL_TOL * max(1.0, bid.price) else best


def audit(
    pairs: Iterable[tuple[Instance, AuctionOutcome]],
    report: PropertyReport | None = None,
) -> PropertyReport:
    """Count IR/BB violations over ``(instance, outcome)`` pairs."""
    report = report if report is not None else PropertyReport()
    for instance, outcome in pairs:
        report.instances_checked += 1
        if not check_individual_rationality(instance, outcome):
            report.ir_violations += 1
        if not check_budget_balance(instance, outcome):
            report.bb_violations += 1
        if not check_consumer_sovereignty(instance, outcome):
            report.scs_exceptions += 1
            log.debug("consumer-sovereignty exception in %s outcome", outcome.mechanism)
    return report
