"""Coordinate pattern search used to polish cell bests."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Bounds, InvalidInput


@dataclass
class PatternState:
    point: np.ndarray
    fitness: float
    step: np.ndarray
    direction: np.ndarray
    evals_used: int = 0
    converged: bool = False


def pattern_search(x0, fitness0, evaluate, step0, min_step, budget, bounds: Bounds | None = None,
                   maximize=False, direction=None) -> PatternState:
    """Per-dimension probing with direction reversal and step halving.

    For each dimension in turn the point is moved by ``direction * step``;
    a strict improvement is kept, otherwise the direction flips and the
    opposite probe is tried, and if that fails too the step of that
    dimension is halved, never below ``min_step``.  Stops after a sweep with
    no acceptance once every step is at ``min_step``, or when ``budget``
    evaluations have been used.  ``fitness0`` must be the value at ``x0``; it is not
    re-evaluated.

    ``evaluate`` maps a point to its fitness.  ``step0`` may be a scalar or
    a per-dimension vector; the returned state carries the final steps and
    directions so a caller can resume.
    """
    x = np.array(x0, dtype=float)
    dim = x.size
    step = np.broadcast_to(np.asarray(step0, dtype=float), (dim,)).copy()
    if min_step <= 0 or np.any(step <= 0) or budget < 1:
        raise InvalidInput("pattern search needs positive steps, min_step > 0 and budget >= 1")
    d = np.ones(dim) if direction is None else np.array(direction, dtype=float)
    fx = float(fitness0)
    lo = bounds.lower if bounds is not None else None
    hi = bounds.upper if bounds is not None else None

    def better(a, b):
        return a > b if maximize else a < b

    used = 0
    converged = False
    while used < budget:
        accepted = False
        for i in range(dim):
            for attempt in range(2):
                if used >= budget:
                    break
                if attempt:
                    d[i] = -d[i]
                trial = x[i] + d[i] * step[i]
                if lo is not None:
                    trial = min(max(trial, lo[i]), hi[i])
                if trial == x[i]:
                    continue
                y = x.copy()
                y[i] = trial
                fy = float(evaluate(y))
                used += 1
                if better(fy, fx):
                    x, fx = y, fy
                    accepted = True
                    break
            else:
                step[i] = max(0.5 * step[i], min_step)
            if used >= budget:
                break
        if not accepted and np.all(step <= min_step):
            converged = True
            break
    return PatternState(x, fx, step, d, used, converged)
