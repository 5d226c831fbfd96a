import argparse

from ratchetlab.cli.error_handler import (
    handle_cli_errors,
    write_stdout
)
from ratchetlab.utils.crypto.vectors import primitive_vectors


@handle_cli_errors
def vectors_command(args: argparse.Namespace) -> int:
    results = primitive_vectors()
    lines = [
        f"{'PASS' if result.passed else 'FAIL'}  {result.name}" + (f"  ({result.detail})" if result.detail else "")
        for result in results
    ]
    write_stdout("\n".join(lines).encode("utf-8"))
    return 0 if all(result.passed for result in results) else 1


def register(subparsers) -> None:
    parser = subparsers.add_parser("vectors", help="Check the primitives against published test vectors")
    parser.set_defaults(func=vectors_command)
