"""Uniform result bundle produced by every design scheme."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .metrics import MetricReport

__all__ = ["DesignResult"]


@dataclass(eq=False)
class DesignResult:
    """Output of one design scheme at one configuration point.

    ``analytic`` holds closed-form metrics; ``empirical`` is filled by the
    Monte Carlo harness when trials are run.  ``objective_trace`` records the
    scheme's own solver trajectory.
    """

    scheme: str
    x: np.ndarray
    w: np.ndarray | None
    objective: float
    analytic: MetricReport
    empirical: MetricReport | None = None
    objective_trace: list[float] = field(default_factory=list)
    trace_seconds: list[float] = field(default_factory=list)
    converged: bool = True
    wallclock_ms: float = 0.0
