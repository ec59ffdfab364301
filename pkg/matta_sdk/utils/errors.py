"""Exception types shared across the SDK."""

import sys
from typing import Any, Dict, List, Optional


class MattaError(Exception):
    """Base error with a user-facing message and optional fix instructions."""

    def __init__(self, message: str, fix_instructions: Optional[List[str]] = None):
        self.message = message
        self.fix_instructions = fix_instructions or []
        super().__init__(self.message)

    def display(self) -> None:
        """Display the error with formatting."""
        print(f"\n✗ Error: {self.message}\n", file=sys.stderr)
        if self.fix_instructions:
            print("How to fix:", file=sys.stderr)
            for i, instruction in enumerate(self.fix_instructions, 1):
                print(f"  {i}. {instruction}", file=sys.stderr)
            print(file=sys.stderr)


class DimensionError(MattaError, ValueError):
    """Operand shapes do not fit the operation."""


class BoundsError(MattaError, IndexError):
    """An index or count lies outside the legal range."""


class ContractError(MattaError, ValueError):
    """A documented precondition was violated."""


class NumericalError(MattaError, ArithmeticError):
    """Non-finite values or a numerical routine that failed to converge."""

    def __init__(
        self,
        message: str,
        step: Optional[int] = None,
        last_metrics: Optional[Dict[str, Any]] = None,
        fix_instructions: Optional[List[str]] = None,
    ):
        self.step = step
        self.last_metrics = dict(last_metrics or {})
        super().__init__(message, fix_instructions)


class ConfigError(MattaError):
    """Run configuration could not be parsed or validated."""


class CheckpointError(MattaError):
    """A checkpoint file is corrupt, truncated or of an unsupported version."""


class UndefinedMetricError(MattaError, ValueError):
    """A metric is undefined for the given input (e.g. AUROC with one class)."""
