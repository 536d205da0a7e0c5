"""Result container shared by every decision rule."""
from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

STATUSES = ("exact", "heuristic", "completed-by-greedy")


@dataclass
class RuleResult:
    rule: str
    outcome: object
    utilities: np.ndarray
    objective: float
    status: str = "exact"
    runtime: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")


@contextmanager
def stopwatch():
    box = {"t": 0.0}
    t0 = time.perf_counter()
    try:
        yield box
    finally:
        box["t"] = time.perf_counter() - t0
