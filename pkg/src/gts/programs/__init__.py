"""Bundled example and benchmark programs."""

from __future__ import annotations

from importlib.resources import files
from pathlib import Path

BENCHMARKS = ("twice_pipeline", "ref_accumulate", "stage_chain")


def path(name: str) -> Path:
    """Filesystem path of a bundled program, e.g. ``make_eq_fail`` or ``benchmarks/stage_chain``."""
    return Path(str(files(__name__) / f"{name}.gts"))
