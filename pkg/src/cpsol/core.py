"""Numeric primitives shared by every module: bounds, the seeded random
source and bound handling."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class InvalidRange(ValueError):
    pass


class InvalidInput(ValueError):
    pass


@dataclass(frozen=True)
class Bounds:
    """Axis-aligned box ``[lower, upper]``."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float).reshape(-1)
        upper = np.asarray(self.upper, dtype=float).reshape(-1)
        if lower.shape != upper.shape:
            raise InvalidInput(f"bounds length mismatch: {lower.size} vs {upper.size}")
        if not np.all(lower < upper):
            raise InvalidRange("every lower bound must be strictly below its upper bound")
        lower.flags.writeable = False
        upper.flags.writeable = False
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def uniform(cls, lo: float, hi: float, dim: int) -> "Bounds":
        return cls(np.full(dim, float(lo)), np.full(dim, float(hi)))

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))


class RandomSource:
    """Seeded random stream backed by numpy's PCG64 bit generator.

    Uniform deviates are ``random()`` doubles (53-bit, ``[0, 1)``); normal
    deviates come from the Box-Muller transform of two uniforms, so the whole
    stream is a function of the PCG64 output and nothing else.  One source
    must not be shared between concurrent runs.
    """

    def __init__(self, seed: int):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise InvalidRange(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self._gen = np.random.Generator(np.random.PCG64(seed))

    def random(self, size=None):
        return self._gen.random(size)

    def uniform(self, lo, hi, size=None):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if np.any(lo >= hi):
            raise InvalidRange(f"uniform needs lo < hi, got lo={lo}, hi={hi}")
        u = self._gen.random(size if size is not None else np.broadcast(lo, hi).shape or None)
        out = lo + (hi - lo) * u
        # lo + (hi-lo)*u can round up to hi
        out = np.minimum(out, np.nextafter(hi, lo))
        if np.ndim(out) == 0:
            return float(out)
        return out

    def standard_normal(self, size=None):
        n = 1 if size is None else int(np.prod(size))
        u1 = self._gen.random(n)
        u2 = self._gen.random(n)
        z = np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * math.pi * u2)
        if size is None:
            return float(z[0])
        return z.reshape(size)

    def integers(self, n: int) -> int:
        """Uniform integer in ``[0, n)``."""
        return int(self._gen.integers(n))


def make_random_source(seed: int) -> RandomSource:
    return RandomSource(seed)


def uniform(src: RandomSource, lo: float, hi: float) -> float:
    return src.uniform(lo, hi)


def standard_normal(src: RandomSource) -> float:
    return src.standard_normal()


def clamp_point(x, b: Bounds) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != b.dim:
        raise InvalidInput(f"point has dimension {x.shape[-1]}, bounds have {b.dim}")
    return np.clip(x, b.lower, b.upper)
