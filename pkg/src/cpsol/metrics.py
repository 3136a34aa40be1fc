"""Offline error, best-so-far traces and cross-run aggregation."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

TRACE_HEADER = ("eval", "best_fitness", "current_error")
MODES = ("per_evaluation", "per_iteration")


class SequencingError(ValueError):
    pass


class MissingOptimum(ValueError):
    pass


class InsufficientData(ValueError):
    pass


class MetricsTracker:
    """Append-only log of ``(eval_index, best_fitness, optimum)`` samples.

    Samples are held in growable numpy buffers; ``optimum`` is NaN where the
    landscape optimum is unknown.
    """

    def __init__(self, mode: str = "per_evaluation", maximize: bool = False):
        if mode not in MODES:
            raise ValueError(f"unknown sampling mode {mode!r}")
        self.mode = mode
        self.maximize = maximize
        self._n = 0
        self._idx = np.empty(1024, dtype=np.int64)
        self._best = np.empty(1024)
        self._opt = np.empty(1024)

    def __len__(self):
        return self._n

    @property
    def last_index(self):
        return int(self._idx[self._n - 1]) if self._n else None

    def _grow(self, need):
        cap = self._idx.size
        if need <= cap:
            return
        while cap < need:
            cap *= 2
        for name in ("_idx", "_best", "_opt"):
            old = getattr(self, name)
            new = np.empty(cap, dtype=old.dtype)
            new[: self._n] = old[: self._n]
            setattr(self, name, new)

    def record(self, eval_index: int, best_fitness: float, optimum=None):
        self.append(int(eval_index), float(best_fitness), optimum)

    def append(self, eval_index: int, best_fitness: float, optimum=None):
        """Scalar fast path of :meth:`record`."""
        n = self._n
        if n and eval_index <= self._idx[n - 1]:
            raise SequencingError("evaluation indices must be strictly increasing")
        if n == self._idx.size:
            self._grow(n + 1)
        self._idx[n] = eval_index
        self._best[n] = best_fitness
        self._opt[n] = math.nan if optimum is None else optimum
        self._n = n + 1

    def extend(self, eval_indices, best_fitness, optimum=None):
        idx = np.asarray(eval_indices, dtype=np.int64)
        if idx.size == 0:
            return
        if (self._n and idx[0] <= self._idx[self._n - 1]) or np.any(np.diff(idx) <= 0):
            raise SequencingError("evaluation indices must be strictly increasing")
        k = idx.size
        self._grow(self._n + k)
        self._idx[self._n:self._n + k] = idx
        self._best[self._n:self._n + k] = best_fitness
        self._opt[self._n:self._n + k] = np.nan if optimum is None else optimum
        self._n += k

    @property
    def eval_indices(self) -> np.ndarray:
        return self._idx[: self._n]

    @property
    def best(self) -> np.ndarray:
        return self._best[: self._n]

    @property
    def optima(self) -> np.ndarray:
        return self._opt[: self._n]

    def errors(self):
        """Per-sample gap to the optimum, or None if any optimum is unknown."""
        opt = self.optima
        if self._n == 0 or np.any(np.isnan(opt)):
            return None
        return opt - self.best if self.maximize else self.best - opt

    def offline_error(self, mode: str = "raw") -> float:
        return offline_error(self, mode)

    def to_csv(self) -> str:
        return trace_csv(self.eval_indices, self.best, self.optima, self.maximize)


def record(t: MetricsTracker, eval_index: int, best_fitness: float, optimum=None) -> MetricsTracker:
    t.record(eval_index, best_fitness, optimum)
    return t


def as_written(values) -> list:
    """Values exactly as they appear in a trace file (6 decimals)."""
    return [float(f"{v:.6f}") for v in np.asarray(values, dtype=float).tolist()]


def offline_error(t: MetricsTracker, mode: str = "raw") -> float:
    """Mean best fitness over the samples (``raw``) or mean gap to the
    optimum (``gap``).

    Samples are averaged as written to the trace, so re-reading the CSV
    reproduces the value exactly.
    """
    if len(t) == 0:
        raise InsufficientData("offline error of an empty trace")
    if mode == "raw":
        vals = as_written(t.best)
    elif mode == "gap":
        err = t.errors()
        if err is None:
            raise MissingOptimum("gap offline error needs the optimum at every sample")
        vals = as_written(err)
    else:
        raise ValueError(f"unknown offline error mode {mode!r}")
    return math.fsum(vals) / len(vals)


def aggregate(values: Sequence[float]):
    """``(mean, standard_error)`` with the n-1 sample deviation."""
    mean, _, se = describe(values)
    return mean, se


def describe(values: Sequence[float]):
    """``(mean, sample_std, standard_error)``."""
    v = np.sort(np.asarray(values, dtype=float))
    if v.size < 2:
        raise InsufficientData("aggregation needs at least two values")
    mean = float(math.fsum(v) / v.size)
    std = math.sqrt(math.fsum((v - mean) ** 2) / (v.size - 1))
    return mean, std, std / math.sqrt(v.size)


def trace_csv(eval_indices, best, optima, maximize: bool) -> str:
    buf = io.StringIO()
    buf.write(",".join(TRACE_HEADER) + "\n")
    for i, b, o in zip(eval_indices.tolist(), best.tolist(), optima.tolist()):
        if math.isnan(o):
            buf.write(f"{i},{b:.6f},\n")
        else:
            err = o - b if maximize else b - o
            buf.write(f"{i},{b:.6f},{err:.6f}\n")
    return buf.getvalue()


@dataclass
class RunReport:
    seed: int
    offline_error_raw: float
    offline_error_gap: float | None
    best_final: float
    evals_total: int
    changes_detected: int
    changes_total: int = 0
    iterations: int = 0

    def __post_init__(self):
        if self.evals_total <= 0:
            raise ValueError("a run report needs at least one evaluation")


def read_trace(path_or_text):
    """Parse a trace CSV into ``(eval, best, current_error-or-None)`` rows."""
    if "\n" in str(path_or_text):
        text = str(path_or_text)
    else:
        with open(path_or_text, newline="") as fh:
            text = fh.read()
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != TRACE_HEADER:
        raise ValueError(f"unexpected trace header {header}")
    return [(int(r[0]), float(r[1]), float(r[2]) if r[2] else None) for r in reader]
