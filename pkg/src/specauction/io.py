"""JSON files for market instances and clearing outcomes.

Instance file::

    {
      "sem": {"rho": [10, 8, 6, 4, 2]},
      "ask": {"supply": [60, 70, 80, 90, 100], "reserve": 1.0},
      "bids": [
        {"buyer_id": "A", "base_demand": [2, 1, 0, 0, 0],
         "adjust_range": [1, 0, 0, 0, 0], "price": 100.0}
      ]
    }

``adjust_range`` may be omitted (no substitution). Floats are written with
``repr`` precision, so files round-trip exactly.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from .core import Ask, Bid, Instance, SemCoefficients, ValidationError
from .gmwd import AuctionOutcome

__all__ = [
    "FormatError",
    "load_json",
    "instance_from_dict",
    "instance_to_dict",
    "load_instance",
    "outcome_to_dict",
]


class FormatError(ValidationError):
    """A file could not be parsed or has a malformed field."""


def load_json(path: str | Path) -> Any:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FormatError(f"{path}: cannot read file ({exc.strerror})") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def _field(obj: Any, key: str, where: str, default: Any = ...) -> Any:
    if not isinstance(obj, dict):
        raise FormatError(f"{where}: expected an object, got {type(obj).__name__}")
    if key not in obj:
        if default is ...:
            raise FormatError(f"{where}.{key}: missing required field")
        return default
    return obj[key]


def _vector(value: Any, where: str) -> list:
    if not isinstance(value, list):
        raise FormatError(f"{where}: expected a list, got {type(value).__name__}")
    for j, v in enumerate(value):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise FormatError(f"{where}[{j}]: expected a number, got {v!r}")
    return value


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise FormatError(f"{where}: expected a number, got {value!r}")
    return value


def instance_from_dict(data: Any, where: str = "instance") -> Instance:
    """Build and validate an ``Instance``; errors name the offending field."""
    sem = _field(data, "sem", where)
    rho = _vector(_field(sem, "rho", f"{where}.sem"), f"{where}.sem.rho")
    ask = _field(data, "ask", where)
    supply = _vector(_field(ask, "supply", f"{where}.ask"), f"{where}.ask.supply")
    reserve = _number(_field(ask, "reserve", f"{where}.ask", 0.0), f"{where}.ask.reserve")
    raw_bids = _field(data, "bids", where)
    if not isinstance(raw_bids, list):
        raise FormatError(f"{where}.bids: expected a list")
    try:
        sem_obj = SemCoefficients(tuple(rho))
        ask_obj = Ask(tuple(supply), reserve)
    except ValidationError as exc:
        raise FormatError(f"{where}: {exc}") from exc
    bids = []
    for i, raw in enumerate(raw_bids):
        at = f"{where}.bids[{i}]"
        buyer_id = _field(raw, "buyer_id", at)
        if not isinstance(buyer_id, (str, int)) or isinstance(buyer_id, bool):
            raise FormatError(f"{at}.buyer_id: expected a string or integer")
        demand = _vector(_field(raw, "base_demand", at), f"{at}.base_demand")
        adjust = _vector(_field(raw, "adjust_range", at, [0] * len(demand)), f"{at}.adjust_range")
        price = _number(_field(raw, "price", at), f"{at}.price")
        for name, vec in (("base_demand", demand), ("adjust_range", adjust)):
            if len(vec) != len(rho):
                raise FormatError(f"{at}.{name}: dimension mismatch: {len(vec)} entries, "
                                  f"rho has {len(rho)}")
        try:
            bids.append(Bid(buyer_id, tuple(demand), tuple(adjust), price))
        except ValidationError as exc:
            raise FormatError(f"{at}: {exc}") from exc
    try:
        return Instance(sem_obj, ask_obj, tuple(bids))
    except ValidationError as exc:
        raise FormatError(f"{where}: {exc}") from exc


def load_instance(path: str | Path) -> Instance:
    return instance_from_dict(load_json(path), where=str(path))


def instance_to_dict(instance: Instance) -> dict:
    return {
        "sem": {"rho": list(instance.sem.rho)},
        "ask": {"supply": list(instance.ask.supply), "reserve": instance.ask.reserve},
        "bids": [
            {
                "buyer_id": b.buyer_id,
                "base_demand": list(b.base_demand),
                "adjust_range": list(b.adjust_range),
                "price": b.price,
            }
            for b in instance.bids
        ],
    }


def outcome_to_dict(outcome: AuctionOutcome, audit: dict | None = None, **extra: Any) -> dict:
    out = {
        "mechanism": outcome.mechanism,
        **extra,
        "winners": [
            {
                "buyer_id": w,
                "payment": outcome.payments[w],
                "value": outcome.values.get(w),
                "allocation": list(outcome.allocation.get(w, ())),
            }
            for w in outcome.winners
        ],
        "clearing_price": outcome.clearing_price,
        "social_welfare": outcome.social_welfare,
        "seller_revenue": outcome.seller_revenue,
    }
    if audit is not None:
        out["audit"] = audit
    return out
