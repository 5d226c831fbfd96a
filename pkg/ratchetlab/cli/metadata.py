import argparse

from ratchetlab.cli.error_handler import (
    handle_cli_errors,
    write_stdout
)
from ratchetlab.utils.serialization import dumps_pretty
from ratchetlab.utils.sim.harness import read_transcript
from ratchetlab.utils.sim.metadata import fold_metadata


@handle_cli_errors
def metadata_command(args: argparse.Namespace) -> int:
    """Print the server's per-user view rebuilt from a transcript"""
    reports = fold_metadata(read_transcript(args.transcript))
    write_stdout(dumps_pretty({user_id: report.peers for user_id, report in reports.items()}))
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("metadata", help="Fold a transcript into the server's metadata report")
    parser.add_argument("transcript", help="JSON-lines transcript written by 'run --transcript'")
    parser.set_defaults(func=metadata_command)
