"""Bundled example specs."""
from __future__ import annotations

from importlib import resources
from pathlib import Path


def spec_paths(kind: str | None = None) -> list[Path]:
    """Paths of the bundled spec files, sorted by name."""
    root = resources.files(__name__)
    paths = sorted(Path(str(p)) for p in root.iterdir() if p.name.endswith((".spec", ".json")))
    if kind is None:
        return paths
    from ..specfile import read_spec

    return [p for p in paths if read_spec(p).kind == kind]


def path(name: str) -> Path:
    return Path(str(resources.files(__name__).joinpath(name)))
