"""Utility modules shared by the SDK."""

from . import console, environment, errors, file_utils, yaml_parser

__all__ = ["console", "environment", "errors", "file_utils", "yaml_parser"]
