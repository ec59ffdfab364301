"""Shared flag handling and exit-code policy for the console commands."""

import argparse
import sys
import traceback
from typing import Callable

from ..diffcore import set_debug
from ..utils.console import is_debug, log_error, set_verbosity
from ..utils.environment import load_project_dotenv, resolve_flag
from ..utils.errors import MattaError, NumericalError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2


def add_output_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--verbose", action="store_true", help="Print per-step progress")
    group.add_argument("--quiet", action="store_true", help="Only print errors")
    parser.add_argument(
        "--debug",
        action="store_true",
        help="Check every tensor for NaN/Inf and show full tracebacks (or set MATTA_DEBUG=1)",
    )


def apply_output_flags(args: argparse.Namespace) -> None:
    load_project_dotenv()
    debug = args.debug or resolve_flag("MATTA_DEBUG")
    set_verbosity(verbose=args.verbose, quiet=args.quiet, debug=debug)
    set_debug(debug)


def run_command(action: Callable[[argparse.Namespace], None], args: argparse.Namespace) -> None:
    """Run ``action`` and map failures to exit codes: 1 config/checkpoint, 2 numerical."""
    apply_output_flags(args)
    try:
        action(args)
    except KeyboardInterrupt:
        log_error("Interrupted")
        sys.exit(130)
    except NumericalError as e:
        if is_debug():
            traceback.print_exc()
        e.display()
        if e.step is not None:
            print(f"Failed at step {e.step}; last finite metrics: {e.last_metrics}", file=sys.stderr)
        sys.exit(EXIT_NUMERICAL)
    except MattaError as e:
        if is_debug():
            traceback.print_exc()
        e.display()
        sys.exit(EXIT_CONFIG)
    except OSError as e:
        if is_debug():
            traceback.print_exc()
        log_error(str(e))
        sys.exit(EXIT_CONFIG)
    sys.exit(EXIT_OK)
