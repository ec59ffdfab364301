"""
MatTA Elastic SDK

Co-train a Student nested inside a Teaching Assistant with online
distillation, precondition with Shampoo, and extract a family of servable
sub-models with Mix'n'Match.
"""

__version__ = "0.1.0"

from .utils import errors, file_utils

__all__ = [
    "errors",
    "file_utils",
]
