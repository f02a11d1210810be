"""
Command-line entry point.

Builds the argparse application, configures logging and maps library
exceptions to exit codes.
"""

import argparse
import sys
from collections.abc import Sequence
from typing import Optional

from . import __version__
from .api import register_commands
from .exceptions import DssaError
from .logging import LogLevels, configure_logging, get_logger

logger = get_logger(__name__)


def create_application() -> argparse.ArgumentParser:
    application = argparse.ArgumentParser(
        prog="dssa",
        description="Dynamic sampled stochastic approximation solvers for stochastic variational inequalities.",
    )
    application.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    application.add_argument(
        "--log-level",
        default=None,
        choices=[level.name for level in LogLevels] + [level.value for level in LogLevels],
        help="Log level (default: DSSA_LOG_LEVEL or INFO)",
    )
    subparsers = application.add_subparsers(dest="command", required=True)
    register_commands(subparsers)
    return application


def main(argv: Optional[Sequence[str]] = None) -> int:
    application = create_application()
    args = application.parse_args(argv)
    configure_logging(args.log_level)
    try:
        return args.handler(args)
    except DssaError as e:
        logger.error("%s failed: %s", args.command, e.message)
        print(f"error: {e.message}", file=sys.stderr)
        return getattr(e, "exit_code", 1)


if __name__ == "__main__":
    sys.exit(main())
