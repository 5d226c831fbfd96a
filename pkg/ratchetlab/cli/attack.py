import argparse

from ratchetlab.cli.error_handler import (
    handle_cli_errors,
    write_stdout
)
from ratchetlab.utils.serialization import dumps_pretty
from ratchetlab.utils.sim.attacks import mark_attack_suite
from ratchetlab.utils.sim.harness import load_scenario


@handle_cli_errors
def attack_command(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    pair = scenario.attack_pair or scenario.parties[:2]
    seed = scenario.seed if args.seed is None else args.seed
    report = mark_attack_suite(pair, seed)
    write_stdout(dumps_pretty({
        "pair": report.pair,
        "verdicts": {
            verdict.name: {"result": "PASS" if verdict.passed else "FAIL", **verdict.detail}
            for verdict in report.verdicts
        },
    }))
    return 0 if report.all_passed else 1


def register(subparsers) -> None:
    parser = subparsers.add_parser("attack", help="Run Mark's confidentiality/integrity/authenticity attacks")
    parser.add_argument("scenario", help="Scenario JSON file naming the pair (attack_pair or the first two parties)")
    parser.add_argument("--seed", type=int, default=None, help="Override the scenario's seed")
    parser.set_defaults(func=attack_command)
