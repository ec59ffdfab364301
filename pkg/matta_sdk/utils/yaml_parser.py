"""Config document parsing (JSON, or YAML for .yml/.yaml files)."""

import json
from pathlib import Path
from typing import Any, Dict

import yaml


def load_document(file_path: Path) -> Dict[str, Any]:
    """
    Load a mapping from a JSON or YAML file.

    JSON files are read with the json module so numbers like ``1e-6`` keep
    their float type; ``.yml``/``.yaml`` go through ``yaml.safe_load``.

    Args:
        file_path: Path to the document

    Returns:
        The top-level mapping

    Raises:
        ValueError: if the document is not valid or its top level is not a mapping
    """
    text = file_path.read_text(encoding="utf-8")
    if file_path.suffix.lower() in (".yml", ".yaml"):
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as e:
            raise ValueError(f"Invalid YAML in {file_path}: {e}") from e
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ValueError(f"Invalid JSON in {file_path}: {e}") from e

    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ValueError(f"Top level of {file_path} must be a mapping")
    return data
