"""Seeded market generation and Monte Carlo sweeps.

Every replication draws from its own stream, derived from
``SeedSequence(seed, spawn_key=(replication,))``, so results do not depend on
execution order or on how replications are spread over workers. Adjustable
ranges are applied after all random draws, which keeps instances paired
across mechanisms and ``delta`` values.
"""
from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .benchmarks import DEFAULT_NUM_VIRTUAL, MechanismId, tcda_clear_arrays, thimble_clear_arrays
from .core import AuctionError, Instance, MarketArrays, ValidationError, _eq_demand
from .gmwd import greedy_clear_arrays

__all__ = [
    "ConfigError",
    "SweepError",
    "GeneratorConfig",
    "MechanismSpec",
    "MetricsSummary",
    "generate_market",
    "generate_instance",
    "clear_market",
    "run_sweep",
]


class ConfigError(ValidationError):
    pass


class SweepError(AuctionError):
    def __init__(self, seed: int, replication: int, cause: BaseException):
        super().__init__(f"replication {replication} (seed {seed}) failed: {cause!r}")
        self.seed = seed
        self.replication = replication


def _range(value, name: str) -> tuple[float, float]:
    lo, hi = (float(v) for v in value)
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi or lo < 0:
        raise ConfigError(f"{name}: expected 0 <= low <= high, got {value!r}")
    return lo, hi


@dataclass(frozen=True)
class GeneratorConfig:
    """Parameters of the random market generator.

    ``unit_value_range`` defaults to ``[reserve, 3 * reserve]``; each buyer's
    package price is its unit value times its equivalent demand.
    """

    num_bands: int = 5
    supply_mean_range: tuple[float, float] = (50.0, 100.0)
    demand_mean_range: tuple[float, float] = (8.0, 16.0)
    rho: tuple[float, ...] = (10.0, 8.0, 6.0, 4.0, 2.0)
    delta: int = 0
    num_buyers: int = 10
    reserve: float = 1.0
    valuation_model: str = "uniform-unit-price"
    unit_value_range: tuple[float, float] | None = None
    seed: int = 0
    freeze_supply_means: bool = False

    def __post_init__(self) -> None:
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("supply_mean_range", _range(self.supply_mean_range, "supply_mean_range"))
        set_("demand_mean_range", _range(self.demand_mean_range, "demand_mean_range"))
        set_("rho", tuple(float(r) for r in self.rho))
        if self.num_bands < 1 or len(self.rho) != self.num_bands:
            raise ConfigError(f"rho has {len(self.rho)} entries for {self.num_bands} bands")
        if any(r <= 0 for r in self.rho):
            raise ConfigError("rho entries must be positive")
        if int(self.delta) != self.delta or self.delta < 0:
            raise ConfigError(f"delta must be a non-negative integer, got {self.delta!r}")
        set_("delta", int(self.delta))
        if int(self.num_buyers) != self.num_buyers or self.num_buyers < 0:
            raise ConfigError(f"num_buyers must be a non-negative integer, got {self.num_buyers!r}")
        set_("num_buyers", int(self.num_buyers))
        if not self.reserve >= 0:
            raise ConfigError(f"reserve must be non-negative, got {self.reserve!r}")
        if self.valuation_model != "uniform-unit-price":
            raise ConfigError(f"unknown valuation model {self.valuation_model!r}")
        if self.unit_value_range is None:
            set_("unit_value_range", (float(self.reserve), 3.0 * float(self.reserve)))
        else:
            set_("unit_value_range", _range(self.unit_value_range, "unit_value_range"))
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must fit in 64 unsigned bits")
        if self.demand_mean_range[1] <= 0:
            raise ConfigError("demand_mean_range must allow positive demand")

    def replace(self, **changes) -> "GeneratorConfig":
        return dataclasses.replace(self, **changes)


def _supply_means(config: GeneratorConfig, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(*config.supply_mean_range, size=config.num_bands)


def generate_market(config: GeneratorConfig, replication: int) -> MarketArrays:
    """Random market for one replication, as arrays with ``config.delta`` applied."""
    rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(replication,)))
    if config.freeze_supply_means:
        lam = _supply_means(config, np.random.default_rng(np.random.SeedSequence(config.seed)))
    else:
        lam = _supply_means(config, rng)
    supply = rng.poisson(lam).astype(np.int64)
    m, k = config.num_buyers, config.num_bands
    mu = rng.uniform(*config.demand_mean_range, size=m)
    demand = rng.poisson(np.repeat(mu[:, None], k, axis=1)).astype(np.int64)
    empty = np.flatnonzero(demand.sum(axis=1) == 0)
    while len(empty):
        demand[empty] = rng.poisson(np.repeat(mu[empty, None], k, axis=1))
        empty = empty[demand[empty].sum(axis=1) == 0]
    unit_value = rng.uniform(*config.unit_value_range, size=m)
    rho = np.asarray(config.rho, dtype=np.float64)
    eq_demand = _eq_demand(demand, rho)
    arr = MarketArrays(rho, supply, float(config.reserve), demand,
                       np.minimum(demand, config.delta), unit_value * eq_demand)
    arr.__dict__["eq_demand"] = eq_demand
    return arr


def generate_instance(config: GeneratorConfig, replication: int) -> Instance:
    """Random instance for one replication; buyer ids are ``0..M-1``."""
    return Instance.from_arrays(generate_market(config, replication))


@dataclass(frozen=True)
class MechanismSpec:
    """A mechanism plus the options it runs with inside a sweep.

    ``delta`` overrides the generator's adjustable range when set.
    """

    mechanism: MechanismId = MechanismId.GMWD
    delta: int | None = None
    num_virtual: int = DEFAULT_NUM_VIRTUAL
    policy: str = "break"

    def __post_init__(self) -> None:
        if not isinstance(self.mechanism, MechanismId):
            object.__setattr__(self, "mechanism", MechanismId.parse(self.mechanism))
        if self.delta is not None and (int(self.delta) != self.delta or self.delta < 0):
            raise ConfigError(f"delta must be a non-negative integer, got {self.delta!r}")
        if self.policy not in ("break", "skip"):
            raise ConfigError(f"unknown stop policy {self.policy!r}")

    def effective_delta(self, config: GeneratorConfig) -> int:
        if self.mechanism is MechanismId.TCDA:
            return 0
        return config.delta if self.delta is None else int(self.delta)


@dataclass(frozen=True)
class ClearStats:
    welfare: float
    winners: int
    revenue: float
    ir_ok: bool
    bb_ok: bool


def _ok_ir(values: np.ndarray, payments: np.ndarray) -> bool:
    return bool(np.all(values - payments >= -1e-9 * np.maximum(1.0, values)))


def _ok_bb(payments: np.ndarray, revenue: float) -> bool:
    return math.fsum(payments.tolist()) - revenue >= -1e-9 * max(1.0, revenue)


def clear_market(arr: MarketArrays, spec: MechanismSpec) -> ClearStats:
    """Clear an array market with ``spec`` and audit IR/BB on the way."""
    if spec.mechanism is MechanismId.THIMBLE:
        t = thimble_clear_arrays(arr, spec.num_virtual, spec.policy)
        return ClearStats(t.social_welfare, t.num_winners, t.seller_revenue,
                          _ok_ir(t.values, t.payments), _ok_bb(t.payments, t.seller_revenue))
    if spec.mechanism is MechanismId.TCDA:
        g = tcda_clear_arrays(arr, spec.policy)
    else:
        g = greedy_clear_arrays(arr, spec.policy)
    pay = g.payments[g.winners]
    return ClearStats(g.social_welfare, g.num_winners, g.seller_revenue,
                      _ok_ir(arr.price[g.winners], pay), _ok_bb(pay, g.seller_revenue))


@dataclass(frozen=True)
class MetricsSummary:
    mechanism: MechanismId
    delta: int
    config: GeneratorConfig = field(repr=False)
    mean_welfare: float
    welfare_std: float
    mean_winner_count: float
    mean_revenue: float
    replications: int
    ir_violations: int = 0
    bb_violations: int = 0
    welfare: np.ndarray = field(default=None, repr=False, compare=False)


def _run_point(config: GeneratorConfig, mechanisms: Sequence[MechanismSpec],
               replications: int) -> list[MetricsSummary]:
    n = len(mechanisms)
    welfare = np.zeros((n, replications))
    winners = np.zeros((n, replications))
    revenue = np.zeros((n, replications))
    ir_bad = [0] * n
    bb_bad = [0] * n
    deltas = [spec.effective_delta(config) for spec in mechanisms]
    for rep in range(replications):
        try:
            base = generate_market(config, rep)
            views = {d: base.with_delta(d) for d in set(deltas)}
            for j, spec in enumerate(mechanisms):
                st = clear_market(views[deltas[j]], spec)
                welfare[j, rep] = st.welfare
                winners[j, rep] = st.winners
                revenue[j, rep] = st.revenue
                ir_bad[j] += not st.ir_ok
                bb_bad[j] += not st.bb_ok
        except Exception as exc:  # noqa: BLE001
            raise SweepError(config.seed, rep, exc) from exc
    out = []
    for j, spec in enumerate(mechanisms):
        out.append(MetricsSummary(
            mechanism=spec.mechanism,
            delta=deltas[j],
            config=config,
            mean_welfare=float(welfare[j].mean()) if replications else 0.0,
            welfare_std=float(welfare[j].std()) if replications else 0.0,
            mean_winner_count=float(winners[j].mean()) if replications else 0.0,
            mean_revenue=float(revenue[j].mean()) if replications else 0.0,
            replications=replications,
            ir_violations=ir_bad[j],
            bb_violations=bb_bad[j],
            welfare=welfare[j],
        ))
    return out


def run_sweep(
    configs: Sequence[GeneratorConfig],
    mechanisms: Sequence[MechanismSpec],
    replications: int,
    workers: int = 1,
) -> list[MetricsSummary]:
    """Monte Carlo summaries for every (config, mechanism) pair.

    Results come back config-major, mechanism-minor. All mechanisms at one
    config see the same instance stream.
    """
    if not configs or not mechanisms:
        raise ConfigError("sweep grid is empty")
    if replications < 1:
        raise ConfigError("replications must be positive")
    mechanisms = list(mechanisms)
    if workers > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_point, configs, [mechanisms] * len(configs),
                                  [replications] * len(configs)))
    else:
        parts = [_run_point(c, mechanisms, replications) for c in configs]
    return [s for part in parts for s in part]
