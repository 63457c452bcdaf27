"""Command-line front end.

Exit codes: 0 success, 1 invalid input, 2 property violation, 3 internal error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .benchmarks import DEFAULT_NUM_VIRTUAL, MechanismId, get_mechanism
from .core import ValidationError
from .experiments import PRESETS, rows_to_csv, run_audit, run_experiment, spec_from_dict, spec_to_dict
from .io import FormatError, load_instance, load_json, outcome_to_dict
from .kernels import BACKEND
from .properties import check_budget_balance, check_individual_rationality

EXIT_OK, EXIT_INVALID, EXIT_VIOLATION, EXIT_INTERNAL = 0, 1, 2, 3

log = logging.getLogger("specauction")


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _load_spec(args):
    if args.preset and args.spec:
        raise FormatError("give either a spec file or --preset, not both")
    if args.preset:
        spec = PRESETS[args.preset]
    elif args.spec:
        spec = spec_from_dict(load_json(args.spec), where=args.spec)
    else:
        raise FormatError("an experiment spec file or --preset is required")
    return spec.with_overrides(seed=args.seed, replications=args.replications, delta=args.delta,
                               policy=args.policy, mechanism=args.mechanism)


def cmd_clear(args) -> int:
    instance = load_instance(args.instance)
    if args.delta is not None:
        instance = instance.with_delta(args.delta)
    mid = MechanismId.parse(args.mechanism or "gmwd")
    policy = args.policy or "break"
    outcome = get_mechanism(mid, policy=policy, num_virtual=args.num_virtual)(instance)
    verdicts = {
        "individual_rationality": check_individual_rationality(instance, outcome),
        "budget_balance": check_budget_balance(instance, outcome),
    }
    _emit(_dump(outcome_to_dict(outcome, verdicts, policy=policy)), args.out)
    return EXIT_OK if all(verdicts.values()) else EXIT_VIOLATION


def cmd_experiment(args) -> int:
    spec = _load_spec(args)
    rows = run_experiment(spec, workers=args.workers)
    _emit(rows_to_csv(rows), args.out or spec.output_path)
    bad = sum(r["_ir_violations"] + r["_bb_violations"] for r in rows)
    if bad:
        log.error("%d IR/BB violations during the sweep", bad)
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_audit(args) -> int:
    spec = _load_spec(args)
    total, per_mech = run_audit(spec, args.manipulation, args.manipulation_buyers)
    report = {
        "name": spec.name,
        "replications": spec.replications,
        "seed": spec.generator.seed,
        **total.to_dict(),
        "by_mechanism": {k: v.to_dict() for k, v in per_mech.items()},
    }
    _emit(_dump(report), args.out)
    return EXIT_OK if total.ok else EXIT_VIOLATION


def cmd_preset(args) -> int:
    _emit(_dump(spec_to_dict(PRESETS[args.name])), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specauction",
        description="Flexible-bidding combinatorial spectrum auctions.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s 0.1.0 ({BACKEND} kernels)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, mechanism_help):
        p.add_argument("--policy", choices=("break", "skip"), default=None,
                       help="stop rule when a buyer does not fit (default: break)")
        p.add_argument("--mechanism", default=None, help=mechanism_help)
        p.add_argument("--delta", type=int, default=None,
                       help="uniform adjustable range, clipped at each base demand")
        p.add_argument("--out", default=None, help="output file (default: stdout)")

    p = sub.add_parser("clear", help="clear one instance file")
    p.add_argument("instance")
    common(p, "gmwd (default), tcda or thimble")
    p.add_argument("--num-virtual", type=int, default=DEFAULT_NUM_VIRTUAL)
    p.set_defaults(func=cmd_clear)

    for name, func, helptext in (
        ("experiment", cmd_experiment, "run a Monte Carlo sweep and write CSV"),
        ("audit", cmd_audit, "audit IR/BB over an experiment's instance stream"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("spec", nargs="?", help="experiment spec JSON file")
        p.add_argument("--preset", choices=sorted(PRESETS))
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--replications", type=int, default=None)
        common(p, "keep only this mechanism's configurations")
        if name == "experiment":
            p.add_argument("--workers", type=int, default=1)
        else:
            p.add_argument("--manipulation", type=int, default=0, metavar="N",
                           help="also probe misreports on N random markets")
            p.add_argument("--manipulation-buyers", type=int, default=8)
        p.set_defaults(func=func)

    p = sub.add_parser("preset", help="print a preset experiment spec")
    p.add_argument("name", choices=sorted(PRESETS))
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_preset)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
