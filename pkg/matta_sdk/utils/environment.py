"""Environment-setting resolution with consistent precedence across commands."""

import os
from pathlib import Path
from typing import Optional

try:
    from dotenv import load_dotenv
except ImportError:
    load_dotenv = None


def _normalize(value: Optional[str]) -> Optional[str]:
    if value is None:
        return None
    normalized = value.strip()
    return normalized or None


def load_project_dotenv(project_dir: Optional[Path] = None, override: bool = False) -> bool:
    """
    Load .env without overriding already-exported environment variables.

    Returns True when python-dotenv is available and load was attempted.
    """
    if load_dotenv is None:
        return False

    base_dir = project_dir or Path.cwd()
    dotenv_path = base_dir / ".env"
    if dotenv_path.exists():
        load_dotenv(dotenv_path=dotenv_path, override=override)
    else:
        load_dotenv(override=override)
    return True


def resolve_setting(
    env_var: str,
    explicit_value: Optional[str] = None,
    project_dir: Optional[Path] = None,
) -> Optional[str]:
    """
    Resolve a setting with precedence:
    1) explicit CLI value
    2) exported environment variable
    3) .env fallback
    """
    value = _normalize(explicit_value)
    if value:
        return value

    env_value = os.environ.get(env_var)
    value = _normalize(env_value)
    if value:
        return value

    load_project_dotenv(project_dir, override=env_value is not None)
    return _normalize(os.environ.get(env_var))


def resolve_flag(env_var: str, project_dir: Optional[Path] = None) -> bool:
    """Interpret an environment setting as a boolean switch ("1", "true", "yes", "on")."""
    value = resolve_setting(env_var, None, project_dir)
    return bool(value) and value.lower() in {"1", "true", "yes", "on"}
