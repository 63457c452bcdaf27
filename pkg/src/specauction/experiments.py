"""Experiment specs, the figure presets, CSV output and batch audits.

An experiment spec is a JSON object::

    {
      "name": "fig1",
      "generator": {"num_bands": 5, "rho": [10, 8, 6, 4, 2], "seed": 2025, ...},
      "mechanisms": [{"mechanism": "gmwd", "delta": 6}, {"mechanism": "tcda"}],
      "sweep_variable": "buyers",
      "sweep_values": [5, 10, 15, 20, 25, 30],
      "replications": 10000,
      "output_path": "fig1.csv"
    }

``generator`` accepts any ``GeneratorConfig`` field. ``sweep_variable`` is
one of ``buyers``, ``delta`` or ``demand_range``; for ``demand_range`` each
sweep value is the width of the demand-mean interval, centred on
``demand_center`` (default 12).
"""
from __future__ import annotations

import csv
import dataclasses
import io
from dataclasses import dataclass
from typing import Any

from .benchmarks import MechanismId, get_mechanism
from .core import ValidationError
from .io import FormatError
from .properties import PropertyReport, audit, manipulation_gain_search
from .sim import ConfigError, GeneratorConfig, MechanismSpec, generate_instance, run_sweep

__all__ = [
    "CSV_COLUMNS",
    "SWEEP_VARIABLES",
    "ExperimentSpec",
    "PRESETS",
    "spec_from_dict",
    "spec_to_dict",
    "run_experiment",
    "rows_to_csv",
    "run_audit",
]

SWEEP_VARIABLES = ("buyers", "delta", "demand_range")
CSV_COLUMNS = (
    "sweep_var", "sweep_value", "mechanism", "delta", "replications",
    "mean_welfare", "welfare_std", "mean_winners", "mean_revenue", "seed",
)
DEFAULT_DEMAND_CENTER = 12.0


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    generator: GeneratorConfig
    mechanisms: tuple[MechanismSpec, ...]
    sweep_variable: str
    sweep_values: tuple
    replications: int
    output_path: str | None = None
    demand_center: float = DEFAULT_DEMAND_CENTER

    def __post_init__(self) -> None:
        if self.sweep_variable not in SWEEP_VARIABLES:
            raise ConfigError(
                f"sweep_variable must be one of {', '.join(SWEEP_VARIABLES)}, got {self.sweep_variable!r}"
            )
        if not self.sweep_values:
            raise ConfigError("sweep_values must be nonempty")
        if not self.mechanisms:
            raise ConfigError("mechanisms must be nonempty")
        if int(self.replications) != self.replications or self.replications < 1:
            raise ConfigError(f"replications must be a positive integer, got {self.replications!r}")
        self.grid()  # validates every sweep value

    def config_for(self, value) -> GeneratorConfig:
        if self.sweep_variable == "buyers":
            return self.generator.replace(num_buyers=value)
        if self.sweep_variable == "delta":
            return self.generator.replace(delta=value)
        half = float(value) / 2
        return self.generator.replace(
            demand_mean_range=(self.demand_center - half, self.demand_center + half)
        )

    def grid(self) -> list[GeneratorConfig]:
        return [self.config_for(v) for v in self.sweep_values]

    def with_overrides(self, *, seed=None, replications=None, delta=None, policy=None,
                       mechanism=None) -> "ExperimentSpec":
        gen = self.generator
        if seed is not None:
            gen = gen.replace(seed=seed)
        mechs = self.mechanisms
        if delta is not None:
            gen = gen.replace(delta=delta)
            mechs = tuple(
                dataclasses.replace(m, delta=delta) if m.mechanism is MechanismId.GMWD else m
                for m in mechs
            )
            mechs = tuple(dict.fromkeys(mechs))
        if mechanism is not None:
            mid = MechanismId.parse(mechanism)
            mechs = tuple(m for m in mechs if m.mechanism is mid) or (MechanismSpec(mid),)
        if policy is not None:
            mechs = tuple(dataclasses.replace(m, policy=policy) for m in mechs)
        return dataclasses.replace(
            self, generator=gen, mechanisms=mechs,
            replications=self.replications if replications is None else replications,
        )


def _mechanism_from_dict(raw: Any, where: str) -> MechanismSpec:
    if isinstance(raw, str):
        raw = {"mechanism": raw}
    if not isinstance(raw, dict) or "mechanism" not in raw:
        raise FormatError(f"{where}: expected an object with a 'mechanism' field")
    unknown = set(raw) - {"mechanism", "delta", "num_virtual", "policy"}
    if unknown:
        raise FormatError(f"{where}: unknown fields {sorted(unknown)}")
    try:
        return MechanismSpec(**raw)
    except (ValidationError, TypeError) as exc:
        raise FormatError(f"{where}: {exc}") from exc


def spec_from_dict(data: Any, where: str = "spec") -> ExperimentSpec:
    if not isinstance(data, dict):
        raise FormatError(f"{where}: expected an object")
    known = {f.name for f in dataclasses.fields(ExperimentSpec)}
    unknown = set(data) - known
    if unknown:
        raise FormatError(f"{where}: unknown fields {sorted(unknown)}")
    for key in ("name", "mechanisms", "sweep_variable", "sweep_values", "replications"):
        if key not in data:
            raise FormatError(f"{where}.{key}: missing required field")
    gen_raw = data.get("generator", {})
    if not isinstance(gen_raw, dict):
        raise FormatError(f"{where}.generator: expected an object")
    gen_fields = {f.name for f in dataclasses.fields(GeneratorConfig)}
    bad = set(gen_raw) - gen_fields
    if bad:
        raise FormatError(f"{where}.generator: unknown fields {sorted(bad)}")
    try:
        gen = GeneratorConfig(**{k: tuple(v) if isinstance(v, list) else v for k, v in gen_raw.items()})
    except (ValidationError, TypeError, ValueError) as exc:
        raise FormatError(f"{where}.generator: {exc}") from exc
    if not isinstance(data["mechanisms"], list):
        raise FormatError(f"{where}.mechanisms: expected a list")
    mechs = tuple(_mechanism_from_dict(m, f"{where}.mechanisms[{i}]")
                  for i, m in enumerate(data["mechanisms"]))
    if not isinstance(data["sweep_values"], list):
        raise FormatError(f"{where}.sweep_values: expected a list")
    try:
        return ExperimentSpec(
            name=str(data["name"]),
            generator=gen,
            mechanisms=mechs,
            sweep_variable=data["sweep_variable"],
            sweep_values=tuple(data["sweep_values"]),
            replications=data["replications"],
            output_path=data.get("output_path"),
            demand_center=float(data.get("demand_center", DEFAULT_DEMAND_CENTER)),
        )
    except (ValidationError, TypeError, ValueError) as exc:
        raise FormatError(f"{where}: {exc}") from exc


def spec_to_dict(spec: ExperimentSpec) -> dict:
    gen = dataclasses.asdict(spec.generator)
    gen = {k: list(v) if isinstance(v, tuple) else v for k, v in gen.items()}
    return {
        "name": spec.name,
        "generator": gen,
        "mechanisms": [
            {"mechanism": m.mechanism.name.lower(), "delta": m.delta,
             "num_virtual": m.num_virtual, "policy": m.policy}
            for m in spec.mechanisms
        ],
        "sweep_variable": spec.sweep_variable,
        "sweep_values": list(spec.sweep_values),
        "replications": spec.replications,
        "output_path": spec.output_path,
        "demand_center": spec.demand_center,
    }


_PRESET_GENERATOR = GeneratorConfig(
    num_bands=5,
    supply_mean_range=(50.0, 100.0),
    demand_mean_range=(8.0, 16.0),
    rho=(10.0, 8.0, 6.0, 4.0, 2.0),
    num_buyers=15,
    reserve=1.0,
    seed=2025,
)
_DELTAS = (0, 2, 4, 6, 8, 10)


def _gmwd(delta: int) -> MechanismSpec:
    return MechanismSpec(MechanismId.GMWD, delta=delta)


PRESETS: dict[str, ExperimentSpec] = {
    "fig1": ExperimentSpec(
        name="fig1",
        generator=_PRESET_GENERATOR,
        mechanisms=(_gmwd(6), _gmwd(2), MechanismSpec(MechanismId.TCDA),
                    MechanismSpec(MechanismId.THIMBLE)),
        sweep_variable="buyers",
        sweep_values=(5, 10, 15, 20, 25, 30),
        replications=10_000,
        output_path="fig1.csv",
    ),
    "fig2": ExperimentSpec(
        name="fig2",
        generator=_PRESET_GENERATOR,
        mechanisms=(_gmwd(2), _gmwd(4), _gmwd(6), MechanismSpec(MechanismId.TCDA),
                    MechanismSpec(MechanismId.THIMBLE)),
        sweep_variable="demand_range",
        sweep_values=(0, 4, 8, 12, 16, 20, 24),
        replications=10_000,
        output_path="fig2.csv",
    ),
    "fig3": ExperimentSpec(
        name="fig3",
        generator=_PRESET_GENERATOR,
        mechanisms=tuple(_gmwd(d) for d in _DELTAS),
        sweep_variable="buyers",
        sweep_values=(5, 10, 15, 20),
        replications=10_000,
        output_path="fig3.csv",
    ),
    "fig4": ExperimentSpec(
        name="fig4",
        generator=_PRESET_GENERATOR,
        mechanisms=tuple(_gmwd(d) for d in _DELTAS),
        sweep_variable="demand_range",
        sweep_values=(0, 8, 16, 24),
        replications=10_000,
        output_path="fig4.csv",
    ),
}


def _fmt(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> list[dict]:
    """One row per (sweep value, mechanism), in spec order."""
    summaries = run_sweep(spec.grid(), spec.mechanisms, spec.replications, workers=workers)
    rows = []
    it = iter(summaries)
    for value in spec.sweep_values:
        for _ in spec.mechanisms:
            s = next(it)
            rows.append({
                "sweep_var": spec.sweep_variable,
                "sweep_value": value,
                "mechanism": s.mechanism.value,
                "delta": s.delta,
                "replications": s.replications,
                "mean_welfare": s.mean_welfare,
                "welfare_std": s.welfare_std,
                "mean_winners": s.mean_winner_count,
                "mean_revenue": s.mean_revenue,
                "seed": s.config.seed,
                "_ir_violations": s.ir_violations,
                "_bb_violations": s.bb_violations,
            })
    return rows


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def run_audit(
    spec: ExperimentSpec,
    manipulation_instances: int = 0,
    manipulation_buyers: int = 8,
) -> tuple[PropertyReport, dict[str, PropertyReport]]:
    """IR/BB audit of every outcome in the experiment's instance stream.

    Optionally also runs the misreport grid search for every buyer of
    ``manipulation_instances`` random GMWD markets with
    ``manipulation_buyers`` buyers each.
    """
    per_mech: dict[str, PropertyReport] = {}
    for config in spec.grid():
        for rep in range(spec.replications):
            base = generate_instance(config, rep)
            for m in spec.mechanisms:
                inst = base.with_delta(m.effective_delta(config))
                clear_fn = get_mechanism(m.mechanism, policy=m.policy, num_virtual=m.num_virtual)
                key = f"{m.mechanism.value}(delta={m.effective_delta(config)})"
                audit([(inst, clear_fn(inst))], per_mech.setdefault(key, PropertyReport()))
    total = PropertyReport()
    for rep in per_mech.values():
        total.merge(rep)
    if manipulation_instances:
        gen = spec.generator.replace(num_buyers=manipulation_buyers)
        gains = []
        for rep in range(manipulation_instances):
            inst = generate_instance(gen, rep)
            gains.extend(manipulation_gain_search(inst, b) for b in inst.buyer_ids)
        total.manipulation_gains = gains
        total.manipulation_samples = len(gains)
        total.max_manipulation_gain = max(gains) if gains else 0.0
    return total, per_mech

