"""Command line front end.

Three subcommands:

    uwalink run SCENARIO --out DIR    simulate and write a results directory
    uwalink oracle SCENARIO           print the genie policy per SNR class
    uwalink validate SCENARIO         check a scenario file and print its hash

Exit status: 0 on success, 2 for configuration problems (bad scenario
file, occupied output directory), 3 for runtime failures.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import ScenarioError, parse_scenario
from .experiment import run_experiment
from .oracle import genie_map

_EXIT_CONFIG = 2
_EXIT_RUNTIME = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uwalink",
        description="Underwater acoustic network simulator with "
                    "bandit-driven link control.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="simulate a scenario and write results")
    run_p.add_argument("scenario", help="scenario YAML file")
    run_p.add_argument("--out", required=True, help="output directory (must be empty)")
    run_p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    run_p.add_argument("--replications", type=int, default=None,
                       help="override the replication count")

    oracle_p = sub.add_parser("oracle", help="print the genie policy for a scenario")
    oracle_p.add_argument("scenario", help="scenario YAML file")

    val_p = sub.add_parser("validate", help="check a scenario file")
    val_p.add_argument("scenario", help="scenario YAML file")
    return parser


def _cmd_run(args) -> int:
    scenario = parse_scenario(args.scenario)
    result = run_experiment(
        scenario, out_dir=args.out, seed=args.seed,
        replications=args.replications,
    )
    sc = result.scenario
    print(f"scenario {sc.name}: {sc.replications} replication(s), "
          f"{sc.n_slots} slots each")
    print(f"config hash {sc.config_hash()}, seed {sc.seed}")
    print(f"results written to {result.out_dir}")
    return 0


def _cmd_oracle(args) -> int:
    scenario = parse_scenario(args.scenario)
    oracle = genie_map(scenario)
    print(json.dumps(oracle.to_json_dict(), indent=2))
    return 0


def _cmd_validate(args) -> int:
    scenario = parse_scenario(args.scenario)
    print(f"{scenario.name}: ok")
    print(f"nodes: {len(scenario.topology.positions)} "
          f"(sink {scenario.topology.sink!r}, "
          f"{len(scenario.topology.links())} links)")
    print(f"policy: {scenario.policy.describe()}")
    print(f"duration: {scenario.duration_s:.0f} s "
          f"({scenario.n_slots} slots of {scenario.slot_s:.0f} s)")
    print(f"config hash: {scenario.config_hash()}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "oracle": _cmd_oracle, "validate": _cmd_validate}
    try:
        return handler[args.command](args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_CONFIG
    except Exception as exc:  # pragma: no cover - defensive
        print(f"runtime error: {exc}", file=sys.stderr)
        return _EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
