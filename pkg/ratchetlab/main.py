import sys
import argparse

from typing import (
    List,
    Optional
)

# Import settings
from ratchetlab.core.settings import (
    LOG_LEVEL,
    configure_logging,
    logger
)

# Import commands
from ratchetlab.cli import attack as attack_cli
from ratchetlab.cli import metadata as metadata_cli
from ratchetlab.cli import run as run_cli
from ratchetlab.cli import vectors as vectors_cli

VERSION = "1.0.0"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ratchetlab",
        description="X3DH + Double Ratchet library, simulator and adversary harness",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    parser.add_argument(
        "--log-level",
        default=LOG_LEVEL,
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        type=str.upper,
        help="Overrides LOG_LEVEL",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    # Register all commands
    run_cli.register(subparsers)
    attack_cli.register(subparsers)
    metadata_cli.register(subparsers)
    vectors_cli.register(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    logger.debug(f"ratchetlab {VERSION}: {args.command}")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
