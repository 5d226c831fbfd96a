import logging
import argparse

from ratchetlab.cli.error_handler import (
    handle_cli_errors,
    write_stdout
)
from ratchetlab.utils.serialization import dumps_pretty
from ratchetlab.utils.sim.harness import (
    Simulation,
    load_scenario,
    write_transcript
)

logger = logging.getLogger(__name__)


@handle_cli_errors
def run_command(args: argparse.Namespace) -> int:
    """
    Replay a scenario and report its outcome.

    Exit status 0 when every scripted expectation and every ratchet-step rule
    held, 1 otherwise.
    """
    scenario = load_scenario(args.scenario)
    transcript = Simulation(scenario, seed=args.seed).run()
    if args.transcript:
        write_transcript(transcript, args.transcript)
        logger.info(f"Transcript written to {args.transcript}")

    write_stdout(dumps_pretty({
        "events": len(transcript.events),
        "rejected": [
            {"seq": event.seq, "actor": event.actor, "action": event.action, "reason": event.reason}
            for event in transcript.rejected()
        ],
        "failures": transcript.failures,
    }))
    return 1 if transcript.failures else 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("run", help="Replay a scenario file through the simulator")
    parser.add_argument("scenario", help="Scenario JSON file")
    parser.add_argument("--seed", type=int, default=None, help="Override the scenario's seed")
    parser.add_argument("--transcript", default=None, help="Write the JSON-lines transcript here")
    parser.set_defaults(func=run_command)
