"""Run configuration and the frozen-constants fixture file."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .gowers import DEFAULT_WORK_BUDGET

THREADS_ENV = "UNIFORMITY_LAB_THREADS"
DEFAULT_FIXTURES = Path(__file__).with_name("data") / "fixtures.json"


def resolve_threads(flag: Optional[int] = None) -> int:
    """``--threads`` beats the environment variable, which beats the hardware count."""
    if flag is not None:
        value = int(flag)
    elif os.environ.get(THREADS_ENV):
        value = int(os.environ[THREADS_ENV])
    else:
        value = os.cpu_count() or 1
    if value < 1:
        raise ValueError(f"thread count must be positive, got {value}")
    return value


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    threads: int = field(default_factory=resolve_threads)
    work_budget: int = DEFAULT_WORK_BUDGET
    output_format: str = "json"
    fixtures_path: Path = DEFAULT_FIXTURES

    def __post_init__(self):
        if self.output_format not in ("json", "csv"):
            raise ValueError(f"output format must be json or csv, got {self.output_format!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 bits")


def load_fixtures(path: Optional[Path] = None) -> dict:
    """Frozen constants keyed by name; each entry is ``{"value": ..., "how": ...}``."""
    path = Path(path) if path is not None else DEFAULT_FIXTURES
    with open(path) as fh:
        return json.load(fh)


def fixture(name: str, path: Optional[Path] = None):
    return load_fixtures(path)[name]["value"]
