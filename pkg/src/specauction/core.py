"""Domain types and equivalent-spectrum arithmetic shared by every mechanism.

Quantities of spectrum are channel counts per band (integers). The SEM
coefficients map a channel of band ``k`` onto ``rho[k]`` units of a common
"equivalent" band, which is what prices and aggregate supply are measured in.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Sequence

import numpy as np

__all__ = [
    "AuctionError",
    "DimensionError",
    "UndefinedPriceError",
    "ValidationError",
    "SemCoefficients",
    "Bid",
    "Ask",
    "Instance",
    "RankedBuyer",
    "MarketArrays",
    "equivalent_demand",
    "equivalent_price",
    "rank_buyers",
    "rank_order",
    "FEAS_RTOL",
]

# Relative slack on the aggregate equivalent-supply check, shared by the
# greedy scan and the exact search so both agree on feasibility.
FEAS_RTOL = 1e-9


class AuctionError(Exception):
    """Base class for errors raised by this package."""


class ValidationError(AuctionError, ValueError):
    """An input violates a documented invariant."""


class DimensionError(ValidationError):
    """Per-band vectors disagree in length."""

    def __init__(self, message: str):
        super().__init__(f"dimension mismatch: {message}")


class UndefinedPriceError(ValidationError):
    """A bid requests no spectrum, so its equivalent unit price is undefined."""


def _as_int_tuple(values: Sequence, name: str) -> tuple[int, ...]:
    out = []
    for v in values:
        try:
            integral = not isinstance(v, bool) and float(v).is_integer()
        except (TypeError, ValueError):
            integral = False
        if not integral:
            raise ValidationError(f"{name}: expected integer channel counts, got {v!r}")
        iv = int(v)
        if iv < 0:
            raise ValidationError(f"{name}: channel counts must be non-negative, got {iv}")
        out.append(iv)
    return tuple(out)


@dataclass(frozen=True)
class SemCoefficients:
    """Per-band conversion ratios into the equivalent public band."""

    rho: tuple[float, ...]

    def __post_init__(self) -> None:
        rho = tuple(float(r) for r in self.rho)
        if not rho:
            raise ValidationError("rho: at least one band is required")
        if any(not np.isfinite(r) or r <= 0 for r in rho):
            raise ValidationError(f"rho: coefficients must be positive and finite, got {rho}")
        object.__setattr__(self, "rho", rho)

    @property
    def num_bands(self) -> int:
        return len(self.rho)

    def scaled(self, c: float) -> "SemCoefficients":
        return SemCoefficients(tuple(r * c for r in self.rho))


@dataclass(frozen=True)
class Bid:
    """One buyer's package: base demand, substitutable portion and price."""

    buyer_id: Hashable
    base_demand: tuple[int, ...]
    adjust_range: tuple[int, ...]
    price: float

    def __post_init__(self) -> None:
        demand = _as_int_tuple(self.base_demand, f"bid {self.buyer_id!r} base_demand")
        adjust = _as_int_tuple(self.adjust_range, f"bid {self.buyer_id!r} adjust_range")
        if len(demand) != len(adjust):
            raise DimensionError(
                f"bid {self.buyer_id!r}: base_demand has {len(demand)} bands, "
                f"adjust_range has {len(adjust)}"
            )
        for k, (d, a) in enumerate(zip(demand, adjust)):
            if a > d:
                raise ValidationError(
                    f"bid {self.buyer_id!r}: adjust_range[{k}]={a} exceeds base_demand[{k}]={d}"
                )
        if not any(demand):
            raise UndefinedPriceError(f"bid {self.buyer_id!r}: all-zero base demand")
        try:
            price = float(self.price)
        except (TypeError, ValueError):
            raise ValidationError(f"bid {self.buyer_id!r}: price must be a number, got {self.price!r}")
        if not np.isfinite(price) or price < 0:
            raise ValidationError(f"bid {self.buyer_id!r}: price must be non-negative, got {price}")
        object.__setattr__(self, "base_demand", demand)
        object.__setattr__(self, "adjust_range", adjust)
        object.__setattr__(self, "price", price)

    @property
    def num_bands(self) -> int:
        return len(self.base_demand)

    def with_adjust(self, adjust_range: Sequence[int]) -> "Bid":
        return Bid(self.buyer_id, self.base_demand, tuple(adjust_range), self.price)

    def with_price(self, price: float) -> "Bid":
        return Bid(self.buyer_id, self.base_demand, self.adjust_range, price)


@dataclass(frozen=True)
class Ask:
    """Seller offer: channels per band and reserve price per equivalent unit."""

    supply: tuple[int, ...]
    reserve: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "supply", _as_int_tuple(self.supply, "ask supply"))
        reserve = float(self.reserve)
        if not np.isfinite(reserve) or reserve < 0:
            raise ValidationError(f"ask reserve must be non-negative, got {reserve}")
        object.__setattr__(self, "reserve", reserve)


@dataclass(frozen=True)
class MarketArrays:
    """Dense view of an instance, rows in buyer-id order.

    This is what the mechanisms and kernels actually operate on; the
    object types above only validate and carry identifiers.
    """

    rho: np.ndarray  # (K,) float64
    supply: np.ndarray  # (K,) int64
    reserve: float
    demand: np.ndarray  # (M, K) int64
    adjust: np.ndarray  # (M, K) int64
    price: np.ndarray  # (M,) float64

    @property
    def num_buyers(self) -> int:
        return self.demand.shape[0]

    @cached_property
    def eq_demand(self) -> np.ndarray:
        return _eq_demand(self.demand, self.rho)

    @cached_property
    def eq_price(self) -> np.ndarray:
        return self.price / self.eq_demand

    @cached_property
    def eq_supply(self) -> float:
        return float(_eq_demand(self.supply[None, :], self.rho)[0])

    @cached_property
    def order(self) -> np.ndarray:
        """Row indices sorted by equivalent price, descending; ties by row."""
        return rank_order(self.eq_price)

    def with_adjust(self, adjust: np.ndarray) -> "MarketArrays":
        out = MarketArrays(self.rho, self.supply, self.reserve, self.demand, adjust, self.price)
        # Equivalent quantities and the ranking do not depend on adjust.
        for name in ("eq_demand", "eq_price", "eq_supply", "order"):
            if name in self.__dict__:
                out.__dict__[name] = self.__dict__[name]
        return out

    def with_delta(self, delta: int) -> "MarketArrays":
        """Uniform adjustable range ``delta``, clipped at each base demand."""
        return self.with_adjust(np.minimum(self.demand, int(delta)))


def _eq_demand(demand: np.ndarray, rho: np.ndarray) -> np.ndarray:
    # Single summation path for every equivalent quantity, so the object
    # layer and the array layer agree to the last bit.
    return (demand * rho).sum(axis=1)


def rank_order(eq_price: np.ndarray) -> np.ndarray:
    """Indices sorting ``eq_price`` descending, stable on index for ties."""
    return np.lexsort((np.arange(len(eq_price)), -np.asarray(eq_price, dtype=float)))


@dataclass(frozen=True)
class Instance:
    """A complete market: SEM coefficients, the seller's ask and all bids."""

    sem: SemCoefficients
    ask: Ask
    bids: tuple[Bid, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        bids = tuple(self.bids)
        k = self.sem.num_bands
        if len(self.ask.supply) != k:
            raise DimensionError(f"ask supply has {len(self.ask.supply)} bands, rho has {k}")
        seen = set()
        for bid in bids:
            if bid.num_bands != k:
                raise DimensionError(
                    f"bid {bid.buyer_id!r} has {bid.num_bands} bands, rho has {k}"
                )
            if bid.buyer_id in seen:
                raise ValidationError(f"duplicate buyer_id {bid.buyer_id!r}")
            seen.add(bid.buyer_id)
        try:
            bids = tuple(sorted(bids, key=lambda b: b.buyer_id))
        except TypeError as exc:
            raise ValidationError("buyer ids must be mutually comparable") from exc
        object.__setattr__(self, "bids", bids)

    @property
    def num_buyers(self) -> int:
        return len(self.bids)

    @property
    def num_bands(self) -> int:
        return self.sem.num_bands

    @property
    def buyer_ids(self) -> tuple:
        return tuple(b.buyer_id for b in self.bids)

    def bid(self, buyer_id: Hashable) -> Bid:
        for b in self.bids:
            if b.buyer_id == buyer_id:
                return b
        raise KeyError(buyer_id)

    def index_of(self, buyer_id: Hashable) -> int:
        return self.buyer_ids.index(buyer_id)

    def replace_bid(self, bid: Bid) -> "Instance":
        return Instance(
            self.sem, self.ask, tuple(bid if b.buyer_id == bid.buyer_id else b for b in self.bids)
        )

    def with_delta(self, delta: int) -> "Instance":
        bids = tuple(
            b.with_adjust(tuple(min(delta, d) for d in b.base_demand)) for b in self.bids
        )
        return Instance(self.sem, self.ask, bids)

    @cached_property
    def arrays(self) -> MarketArrays:
        k = self.num_bands
        m = self.num_buyers
        return MarketArrays(
            rho=np.asarray(self.sem.rho, dtype=np.float64),
            supply=np.asarray(self.ask.supply, dtype=np.int64),
            reserve=self.ask.reserve,
            demand=np.asarray([b.base_demand for b in self.bids], dtype=np.int64).reshape(m, k),
            adjust=np.asarray([b.adjust_range for b in self.bids], dtype=np.int64).reshape(m, k),
            price=np.asarray([b.price for b in self.bids], dtype=np.float64),
        )

    @classmethod
    def from_arrays(cls, arrays: MarketArrays, buyer_ids: Sequence | None = None) -> "Instance":
        m = arrays.num_buyers
        ids = list(range(m)) if buyer_ids is None else list(buyer_ids)
        bids = tuple(
            Bid(ids[i], tuple(arrays.demand[i].tolist()), tuple(arrays.adjust[i].tolist()),
                float(arrays.price[i]))
            for i in range(m)
        )
        return cls(
            SemCoefficients(tuple(arrays.rho.tolist())),
            Ask(tuple(arrays.supply.tolist()), arrays.reserve),
            bids,
        )


@dataclass(frozen=True)
class RankedBuyer:
    buyer_id: Hashable
    equivalent_price: float
    equivalent_demand: float
    rank: int


def _check_dims(bid: Bid, sem: SemCoefficients) -> None:
    if bid.num_bands != sem.num_bands:
        raise DimensionError(f"bid {bid.buyer_id!r} has {bid.num_bands} bands, rho has {sem.num_bands}")


def equivalent_demand(bid: Bid, sem: SemCoefficients) -> float:
    """Total requested spectrum in equivalent units, ``sum_k D[k] * rho[k]``."""
    _check_dims(bid, sem)
    demand = np.asarray(bid.base_demand, dtype=np.int64)[None, :]
    return float(_eq_demand(demand, np.asarray(sem.rho))[0])


def equivalent_price(bid: Bid, sem: SemCoefficients) -> float:
    """Package price per equivalent unit of requested spectrum."""
    return bid.price / equivalent_demand(bid, sem)


def rank_buyers(instance: Instance) -> list[RankedBuyer]:
    """Buyers by equivalent price, highest first, ties by ascending buyer id."""
    arr = instance.arrays
    ids = instance.buyer_ids
    return [
        RankedBuyer(ids[i], float(arr.eq_price[i]), float(arr.eq_demand[i]), pos + 1)
        for pos, i in enumerate(arr.order.tolist())
    ]
