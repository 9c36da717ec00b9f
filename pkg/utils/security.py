"""
Path confinement for pipeline artifacts.
"""
from pathlib import Path
from typing import Optional


def sanitize_path(base_directory: str, candidate_path: str) -> Optional[str]:
    """Resolve ``candidate_path`` under ``base_directory``.

    Returns the absolute path string when it stays inside the base directory,
    otherwise None. Absolute candidates are accepted only if they already lie
    inside the base.
    """
    base = Path(base_directory).resolve()
    candidate = Path(candidate_path)
    resolved = candidate.resolve() if candidate.is_absolute() else (base / candidate).resolve()
    try:
        resolved.relative_to(base)
    except ValueError:
        return None
    return str(resolved)


def artifact_path(output_dir: str, name: str) -> Path:
    """Path of an artifact inside ``output_dir``; raises ValueError on an escape."""
    safe = sanitize_path(output_dir, name)
    if safe is None:
        raise ValueError(f"artifact '{name}' would be written outside {output_dir}")
    return Path(safe)
