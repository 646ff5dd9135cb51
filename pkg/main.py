import argparse
import logging
import sys

from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

from sortbench import config
from sortbench.bench import CellVerificationError, PlanError
from sortbench.commands.bench_commands import BenchCommands
from sortbench.commands.options import UsageError
from sortbench.commands.report_commands import ReportCommands
from sortbench.commands.run_commands import RunCommands
from sortbench.commands.verify_commands import VerifyCommands
from sortbench.shared_pool import TaskFailedError
from sortbench.transport import TransportError

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_TRANSPORT = 3


def build_parser(out=None) -> argparse.ArgumentParser:
    """Builds the top-level parser and lets each command group add its subcommand."""
    out = out or sys.stdout
    parser = argparse.ArgumentParser(
        prog="sortbench",
        description="Parallel merge sort workbench: run, benchmark, verify and report.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="Log at DEBUG level.")
    subparsers = parser.add_subparsers(dest="command", required=True)

    command_groups = [
        RunCommands(out),
        BenchCommands(out),
        VerifyCommands(out),
        ReportCommands(out),
    ]
    for group in command_groups:
        group.register(subparsers)
    return parser


def on_command_error(command: str, error: BaseException) -> int:
    """
    Global error handler. Turns exceptions raised by a command into a one-line
    diagnostic on stderr and an exit code; unexpected errors also get a logged traceback.
    """
    if isinstance(error, KeyboardInterrupt):
        log.info(f"'{command}' interrupted.")
        return 130

    elif isinstance(error, (UsageError, PlanError)):
        print(f"usage error: {error}", file=sys.stderr)
        log.warning(f"Invalid arguments for '{command}': {error}")
        return EXIT_USAGE

    elif isinstance(error, CellVerificationError):
        print(f"verification failed: {error}", file=sys.stderr)
        log.error(f"'{command}' aborted on cell {error.cell}: {error}")
        return EXIT_FAILED

    elif isinstance(error, TransportError):
        # Covers world timeouts and failed ranks.
        print(f"transport error: {error}", file=sys.stderr)
        log.error(f"'{command}' failed in the transport layer: {error}", exc_info=True)
        return EXIT_TRANSPORT

    elif isinstance(error, TaskFailedError):
        print(f"worker task failed: {error}", file=sys.stderr)
        log.error(f"'{command}' failed in pool task {error.index}: {error.cause!r}", exc_info=True)
        return EXIT_FAILED

    elif isinstance(error, ValueError):
        print(f"invalid input: {error}", file=sys.stderr)
        log.warning(f"Invalid input for '{command}': {error}")
        return EXIT_USAGE

    else:
        print(f"unexpected error: {error!r}", file=sys.stderr)
        log.error(f"An unhandled error occurred in '{command}': {error}", exc_info=True)
        return EXIT_FAILED


def run_cli(argv=None, out=None) -> int:
    """Parses `argv`, runs the chosen command and returns its exit code."""
    parser = build_parser(out)
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else config.LOG_LEVEL,
        format=config.LOG_FORMAT,
        datefmt=config.LOG_DATE_FORMAT,
    )
    log.debug(f"Running '{args.command}' with {vars(args)}")
    try:
        return args.handler(args)
    except (Exception, KeyboardInterrupt) as error:
        return on_command_error(args.command, error)


if __name__ == "__main__":
    sys.exit(run_cli())
