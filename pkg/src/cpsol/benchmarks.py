"""Fitness landscapes and the evaluation wrapper that drives them.

Landscapes are immutable snapshots: ``advance`` returns a new snapshot.
:class:`Environment` owns the current snapshot, counts evaluations, applies
the change schedule and feeds the metrics tracker.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .core import Bounds, InvalidInput, RandomSource

STATIC_FUNCTIONS = ("sphere", "rastrigin", "griewank", "rosenbrock")

STATIC_RANGES = {
    "sphere": (-100.0, 100.0),
    "rastrigin": (-5.12, 5.12),
    "griewank": (-600.0, 600.0),
    "rosenbrock": (-5.0, 10.0),
}


class DomainViolation(ValueError):
    pass


class InvalidLandscape(ValueError):
    pass


class BudgetExhausted(Exception):
    """Raised when an evaluation is requested past ``max_evals``."""


# ---------------------------------------------------------------------------
# static functions (vectorised over the last axis)


def sphere(x):
    x = np.asarray(x, dtype=float)
    return np.sum(x * x, axis=-1)


def rastrigin(x):
    x = np.asarray(x, dtype=float)
    return 10.0 * x.shape[-1] + np.sum(x * x - 10.0 * np.cos(2.0 * np.pi * x), axis=-1)


def griewank(x):
    x = np.asarray(x, dtype=float)
    i = np.arange(1, x.shape[-1] + 1)
    return np.sum(x * x, axis=-1) / 4000.0 - np.prod(np.cos(x / np.sqrt(i)), axis=-1) + 1.0


def rosenbrock(x):
    x = np.asarray(x, dtype=float)
    a = x[..., :-1]
    b = x[..., 1:]
    return np.sum(100.0 * (b - a * a) ** 2 + (a - 1.0) ** 2, axis=-1)


_STATIC = {"sphere": sphere, "rastrigin": rastrigin, "griewank": griewank, "rosenbrock": rosenbrock}


def _check_static_id(name):
    if name not in _STATIC:
        raise InvalidInput(f"unknown static function {name!r}; expected one of {STATIC_FUNCTIONS}")


def eval_static(name: str, x, clamp: bool = False) -> float:
    """Value of a canonical static test function (minimisation).

    Points outside the function's range raise :class:`DomainViolation`
    unless ``clamp`` is set.
    """
    _check_static_id(name)
    x = np.asarray(x, dtype=float)
    lo, hi = STATIC_RANGES[name]
    if np.any(x < lo) or np.any(x > hi):
        if not clamp:
            raise DomainViolation(f"{name}: point outside [{lo}, {hi}]^D")
        x = np.clip(x, lo, hi)
    return float(_STATIC[name](x))


class StaticFunction:
    maximize = False

    def __init__(self, name: str, dim: int, clamp: bool = False):
        _check_static_id(name)
        if name == "rosenbrock" and dim < 2:
            raise InvalidInput("rosenbrock needs dim >= 2")
        self.name = name
        self.dim = int(dim)
        self.bounds = Bounds.uniform(*STATIC_RANGES[name], self.dim)
        self.clamp = clamp
        self._f = _STATIC[name]
        self._lo, self._hi = STATIC_RANGES[name]

    def __call__(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if np.any(X < self.bounds.lower) or np.any(X > self.bounds.upper):
            if not self.clamp:
                raise DomainViolation(f"{self.name}: point outside the search range")
            X = np.clip(X, self.bounds.lower, self.bounds.upper)
        return self._f(X)

    def value(self, x) -> float:
        if x.min() < self._lo or x.max() > self._hi:
            if not self.clamp:
                raise DomainViolation(f"{self.name}: point outside the search range")
            x = np.clip(x, self._lo, self._hi)
        return float(self._f(x))

    def optimum(self):
        return None

    def advance(self, src):
        return self

    def describe(self) -> str:
        return f"{self.name}-D{self.dim}"


# ---------------------------------------------------------------------------
# moving parabola

PARABOLA_KINDS = ("linear", "circular", "gaussian")


@dataclass(frozen=True)
class ParabolaDynamics:
    kind: str
    tau: float
    change_count: int = 0

    def __post_init__(self):
        if self.kind not in PARABOLA_KINDS:
            raise InvalidInput(f"unknown parabola dynamics {self.kind!r}")
        if self.tau < 0:
            raise InvalidInput("tau must be non-negative")
        if self.change_count < 0:
            raise InvalidInput("change_count must be non-negative")


def parabola_eval(x, delta) -> float:
    x = np.asarray(x, dtype=float)
    delta = np.asarray(delta, dtype=float)
    if x.shape[-1] != delta.shape[-1]:
        raise InvalidInput(f"point has {x.shape[-1]} coordinates, offset has {delta.shape[-1]}")
    d = x - delta
    return float(np.dot(d, d))


def parabola_advance(dyn: ParabolaDynamics, delta, src: RandomSource):
    """Shift the parabola offset by one environment change.

    Returns ``(new_dynamics, new_delta)``; ``new_dynamics.change_count`` is
    one larger and is the ``t`` used by the circular rule.
    """
    delta = np.array(delta, dtype=float)
    t = dyn.change_count + 1
    if dyn.kind == "linear":
        delta += dyn.tau
    elif dyn.kind == "circular":
        angle = 2.0 * math.pi * t / 25.0
        delta[0::2] += dyn.tau * math.sin(angle)
        delta[1::2] += dyn.tau * math.cos(angle)
    else:
        delta += dyn.tau * src.standard_normal(delta.shape)
    return replace(dyn, change_count=t), delta


class MovingParabola:
    """Shifted sphere whose offset drifts on every change.

    The offset is kept inside the search box; ``clamp_events`` counts the
    changes where that clipping was needed.
    """

    maximize = False

    def __init__(self, dim: int, kind: str, tau: float, bounds=(-50.0, 50.0),
                 delta=None, dynamics=None, clamp_events: int = 0):
        self.dim = int(dim)
        self.bounds = bounds if isinstance(bounds, Bounds) else Bounds.uniform(*bounds, self.dim)
        self.dynamics = dynamics or ParabolaDynamics(kind, float(tau))
        self.delta = np.zeros(self.dim) if delta is None else np.array(delta, dtype=float)
        self.delta.flags.writeable = False
        self.clamp_events = clamp_events

    def __call__(self, X) -> np.ndarray:
        d = np.asarray(X, dtype=float) - self.delta
        return np.sum(d * d, axis=-1)

    def value(self, x) -> float:
        d = x - self.delta
        return float(np.dot(d, d))

    def optimum(self) -> float:
        return 0.0

    def advance(self, src: RandomSource) -> "MovingParabola":
        dyn, delta = parabola_advance(self.dynamics, self.delta, src)
        clipped = np.clip(delta, self.bounds.lower, self.bounds.upper)
        events = self.clamp_events + int(np.any(clipped != delta))
        return MovingParabola(self.dim, dyn.kind, dyn.tau, self.bounds, clipped, dyn, events)

    def describe(self) -> str:
        return f"parabola-{self.dynamics.kind}-tau{self.dynamics.tau:g}-D{self.dim}"


# ---------------------------------------------------------------------------
# moving peaks


@dataclass(frozen=True)
class Peak:
    position: np.ndarray
    height: float
    width: float


@dataclass(frozen=True)
class MpbConfig:
    peak_count: int = 10
    change_every: int = 5000
    height_severity: float = 7.0
    width_severity: float = 1.0
    shift_length: float = 1.0
    dimension: int = 5
    height_range: tuple = (30.0, 70.0)
    width_range: tuple = (1.0, 12.0)
    initial_height: float = 50.0
    bounds: tuple = (0.0, 100.0)


def _reflect(v, lo, hi):
    """Fold values back into ``[lo, hi]`` by mirror reflection at the edges."""
    span = hi - lo
    r = np.mod(np.asarray(v, dtype=float) - lo, 2.0 * span)
    return lo + np.where(r > span, 2.0 * span - r, r)


def mpb_eval(x, peaks: Sequence[Peak]) -> float:
    if not peaks:
        raise InvalidLandscape("moving peaks landscape has no peaks")
    x = np.asarray(x, dtype=float)
    best = -math.inf
    for p in peaks:
        if p.position.shape != x.shape:
            raise InvalidInput("peak and point dimensions differ")
        best = max(best, p.height - p.width * float(np.linalg.norm(x - p.position)))
    return best


def mpb_optimum(peaks: Sequence[Peak]) -> float:
    if not peaks:
        raise InvalidLandscape("moving peaks landscape has no peaks")
    return max(mpb_eval(p.position, peaks) for p in peaks)


def mpb_advance(peaks: Sequence[Peak], cfg: MpbConfig, src: RandomSource) -> list:
    lo, hi = cfg.bounds
    out = []
    for p in peaks:
        height = float(_reflect(p.height + cfg.height_severity * src.standard_normal(), *cfg.height_range))
        width = float(_reflect(p.width + cfg.width_severity * src.standard_normal(), *cfg.width_range))
        direction = src.standard_normal(p.position.shape)
        norm = np.linalg.norm(direction)
        shift = cfg.shift_length * direction / norm if norm > 0 else np.zeros_like(direction)
        out.append(Peak(np.clip(p.position + shift, lo, hi), height, width))
    return out


def mpb_initial_peaks(cfg: MpbConfig, src: RandomSource) -> list:
    """Peaks at uniform positions, standard height, uniform widths."""
    lo, hi = cfg.bounds
    peaks = []
    for _ in range(cfg.peak_count):
        pos = src.uniform(lo, hi, cfg.dimension)
        width = src.uniform(*cfg.width_range)
        peaks.append(Peak(pos, float(cfg.initial_height), float(width)))
    return peaks


def dump_peaks(peaks: Sequence[Peak]) -> str:
    lines = []
    for p in peaks:
        fields = [p.height, p.width, *p.position]
        lines.append(" ".join(f"{v:.9g}" for v in fields))
    return "\n".join(lines) + "\n"


def load_peaks(text: str) -> list:
    peaks = []
    for line in text.splitlines():
        if not line.strip():
            continue
        vals = [float(v) for v in line.split(" ")]
        peaks.append(Peak(np.array(vals[2:]), vals[0], vals[1]))
    return peaks


class MovingPeaks:
    maximize = True

    def __init__(self, cfg: MpbConfig, peaks: Sequence[Peak]):
        if not peaks:
            raise InvalidLandscape("moving peaks landscape has no peaks")
        self.cfg = cfg
        self.dim = cfg.dimension
        self.bounds = Bounds.uniform(*cfg.bounds, self.dim)
        self.peaks = list(peaks)
        self._pos = np.array([p.position for p in self.peaks])
        self._h = np.array([p.height for p in self.peaks])
        self._w = np.array([p.width for p in self.peaks])
        self._optimum = mpb_optimum(self.peaks)

    @classmethod
    def initial(cls, cfg: MpbConfig, src: RandomSource) -> "MovingPeaks":
        return cls(cfg, mpb_initial_peaks(cfg, src))

    def __call__(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        diff = X[..., None, :] - self._pos
        dist = np.sqrt(np.sum(diff * diff, axis=-1))
        return np.max(self._h - self._w * dist, axis=-1)

    def value(self, x) -> float:
        diff = self._pos - x
        return float(np.max(self._h - self._w * np.sqrt(np.einsum("ij,ij->i", diff, diff))))

    def optimum(self) -> float:
        return self._optimum

    def advance(self, src: RandomSource) -> "MovingPeaks":
        return MovingPeaks(self.cfg, mpb_advance(self.peaks, self.cfg, src))

    def describe(self) -> str:
        return f"mpb-m{self.cfg.peak_count}-f{self.cfg.change_every}-D{self.dim}"


# ---------------------------------------------------------------------------
# evaluation wrapper


class Environment:
    """Counted access to a landscape with a change schedule.

    ``change_unit`` is ``"evaluations"`` (the landscape changes after every
    ``change_every``-th evaluation) or ``"iterations"`` (the optimiser
    calls :meth:`end_iteration` and the landscape changes every
    ``change_every`` iterations).  A due change is applied just before the
    next evaluation, so a run that stops on a boundary never sees it.  The
    wrapper also tracks the best fitness evaluated since the last change,
    which is what the metrics record.
    """

    def __init__(self, landscape, src: RandomSource | None = None, change_every: int | None = None,
                 change_unit: str = "evaluations", max_evals: int | None = None,
                 tracker=None):
        if change_unit not in ("evaluations", "iterations"):
            raise InvalidInput(f"unknown change unit {change_unit!r}")
        if change_every is not None and change_every < 1:
            raise InvalidInput("change_every must be positive")
        if change_every is not None and src is None:
            raise InvalidInput("a dynamic environment needs its own random source")
        self.landscape = landscape
        self.src = src
        self.change_every = change_every
        self.change_unit = change_unit
        self.max_evals = max_evals
        self.tracker = tracker
        self.maximize = landscape.maximize
        self.dim = landscape.dim
        self.bounds = landscape.bounds
        self.evals = 0
        self.iterations = 0
        self.changes = 0
        self.best_since_change = -math.inf if self.maximize else math.inf
        self._next_change = change_every if change_unit == "evaluations" else None
        self._pending = False

    def better(self, a: float, b: float) -> bool:
        """True when fitness ``a`` is strictly better than ``b``."""
        return a > b if self.maximize else a < b

    @property
    def worst(self) -> float:
        return -math.inf if self.maximize else math.inf

    def optimum(self):
        return self.landscape.optimum()

    def _change(self):
        self.landscape = self.landscape.advance(self.src)
        self.changes += 1
        self.best_since_change = self.worst

    def _apply_due_change(self):
        if self._pending:
            self._pending = False
            self._change()
        elif self._next_change is not None and self.evals == self._next_change:
            self._next_change += self.change_every
            self._change()

    def evaluate(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        n = X.shape[0]
        out = np.empty(n)
        done = 0
        while done < n:
            if self.max_evals is not None and self.evals >= self.max_evals:
                raise BudgetExhausted(self.max_evals)
            self._apply_due_change()
            take = n - done
            if self._next_change is not None:
                take = min(take, self._next_change - self.evals)
            if self.max_evals is not None:
                take = min(take, self.max_evals - self.evals)
            chunk = np.asarray(self.landscape(X[done:done + take]), dtype=float)
            out[done:done + take] = chunk
            self._account(chunk)
            done += take
        return out

    def evaluate_one(self, x) -> float:
        """Single-point :meth:`evaluate` without the batch machinery."""
        if self.max_evals is not None and self.evals >= self.max_evals:
            raise BudgetExhausted(self.max_evals)
        self._apply_due_change()
        x = np.asarray(x, dtype=float)
        value = self.landscape.value(x)
        self.evals += 1
        best = self.best_since_change
        if (value > best) if self.maximize else (value < best):
            best = self.best_since_change = value
        if self.tracker is not None and self.tracker.mode == "per_evaluation":
            self.tracker.append(self.evals, best, self.landscape.optimum())
        return value

    def _account(self, values: np.ndarray):
        acc = np.maximum.accumulate if self.maximize else np.minimum.accumulate
        running = acc(np.concatenate(([self.best_since_change], values)))[1:]
        first = self.evals + 1
        self.evals += values.size
        self.best_since_change = float(running[-1])
        if self.tracker is not None and self.tracker.mode == "per_evaluation":
            self.tracker.extend(np.arange(first, self.evals + 1), running, self.landscape.optimum())

    def end_iteration(self):
        """Advance the iteration clock; records a per-iteration sample."""
        self.iterations += 1
        if self.tracker is not None and self.tracker.mode == "per_iteration" and self.evals > 0:
            last = self.tracker.last_index
            if last is None or self.evals > last:
                self.tracker.record(self.evals, self.best_since_change, self.landscape.optimum())
        if (self.change_unit == "iterations" and self.change_every is not None
                and self.iterations % self.change_every == 0):
            self._pending = True
