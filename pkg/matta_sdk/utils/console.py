"""Console reporting helpers gated by global verbosity flags."""

import sys

DEBUG_MODE = False
VERBOSE_MODE = False
QUIET_MODE = False


def set_verbosity(verbose: bool = False, quiet: bool = False, debug: bool = False) -> None:
    global DEBUG_MODE, VERBOSE_MODE, QUIET_MODE
    VERBOSE_MODE = verbose
    QUIET_MODE = quiet
    DEBUG_MODE = debug


def is_debug() -> bool:
    return DEBUG_MODE


def _is_verbose() -> bool:
    return VERBOSE_MODE and not QUIET_MODE


def log_info(message: str) -> None:
    if not QUIET_MODE:
        print(message)


def log_verbose(message: str) -> None:
    if _is_verbose():
        print(message)


def log_success(message: str) -> None:
    if not QUIET_MODE:
        print(f"✓ {message}")


def log_warning(message: str) -> None:
    print(f"⚠️  {message}", file=sys.stderr)


def log_error(message: str) -> None:
    print(f"✗ Error: {message}", file=sys.stderr)
