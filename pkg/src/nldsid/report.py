from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .loss import frob_sq_error

# Frobenius norm past which an iterate is declared divergent even if finite.
DIVERGENCE_NORM = 1e100


class Status(str, Enum):
    OK = "ok"
    GRAM_SINGULAR = "gram_singular_returned_zero"
    TRUNCATED = "truncated_returned_zero"
    DIVERGED = "diverged"


@dataclass
class FitReport:
    """Estimate plus traces.

    ``error_trace`` holds ``(update_count, ||A - A*||_F^2)`` and is only
    filled when the true matrix was handed to the solver.  ``wall_trace``
    holds ``(update_count, elapsed_ns)`` measured around the update loop.
    """

    a_hat: np.ndarray
    status: Status = Status.OK
    updates: int = 0
    error_trace: list[tuple[int, float]] = field(default_factory=list)
    wall_trace: list[tuple[int, int]] = field(default_factory=list)
    iterates: list[np.ndarray] | None = None
    pairs: list[tuple[int, int]] | None = None

    @property
    def ok(self) -> bool:
        return self.status is Status.OK

    @property
    def final_error(self) -> float | None:
        return self.error_trace[-1][1] if self.error_trace else None


class Recorder:
    """Accumulates traces for one fit; timing starts at construction."""

    def __init__(self, a_star=None):
        self.a_star = None if a_star is None else np.asarray(a_star, dtype=float)
        self.errors: list[tuple[int, float]] = []
        self.walls: list[tuple[int, int]] = []
        self._t0 = time.perf_counter_ns()

    def record(self, updates: int, estimate: np.ndarray) -> None:
        self.walls.append((updates, time.perf_counter_ns() - self._t0))
        if self.a_star is not None:
            err = frob_sq_error(estimate, self.a_star)
            self.errors.append((updates, err if math.isfinite(err) else math.inf))

    def report(self, a_hat, status=Status.OK, updates=0, **extra) -> FitReport:
        return FitReport(np.asarray(a_hat, dtype=float), status, updates, self.errors, self.walls, **extra)


def diverged(a: np.ndarray) -> bool:
    n = float(np.linalg.norm(a))
    return not math.isfinite(n) or n > DIVERGENCE_NORM
