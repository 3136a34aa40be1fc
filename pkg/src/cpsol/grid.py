"""Cellular partition of the search box.

Cells are ``k`` equal slices per dimension.  Only occupied cells are ever
materialised, so the lattice size ``k**D`` never matters; neighbourhood
queries filter the occupied set by Chebyshev (Moore) or Manhattan
(Von Neumann) distance.
"""

from __future__ import annotations

import numpy as np

from .core import Bounds, InvalidInput

TOPOLOGIES = ("moore", "von_neumann")


class InvalidPartitioning(ValueError):
    pass


def cell_of(x, b: Bounds, k: int) -> tuple:
    """Integer cell index of ``x``; points on the upper face map to ``k - 1``."""
    if k < 1:
        raise InvalidPartitioning(f"partitions per dimension must be >= 1, got {k}")
    x = np.clip(np.asarray(x, dtype=float), b.lower, b.upper)
    idx = np.floor((x - b.lower) / (b.width / k)).astype(np.int64)
    return tuple(np.clip(idx, 0, k - 1).tolist())


def cells_of(X, b: Bounds, k: int) -> np.ndarray:
    """Row-wise :func:`cell_of` for an ``(n, D)`` array."""
    if k < 1:
        raise InvalidPartitioning(f"partitions per dimension must be >= 1, got {k}")
    X = np.clip(np.asarray(X, dtype=float), b.lower, b.upper)
    idx = np.floor((X - b.lower) / (b.width / k)).astype(np.int64)
    return np.clip(idx, 0, k - 1)


def region_of(c, b: Bounds, k: int) -> Bounds:
    c = np.asarray(c, dtype=float)
    if np.any(c < 0) or np.any(c >= k):
        raise InvalidInput(f"cell {tuple(c)} outside a {k}-partition")
    w = b.width / k
    lower = b.lower + c * w
    upper = np.where(c == k - 1, b.upper, b.lower + (c + 1) * w)
    return Bounds(lower, upper)


def neighbor_cells(c, topology: str, occupied) -> list:
    """Occupied cells adjacent to ``c`` (no wrap-around), sorted.

    ``occupied`` is an :class:`OccupancyIndex` or any iterable of cell
    tuples.  The cell itself is never included.
    """
    if topology not in TOPOLOGIES:
        raise InvalidInput(f"unknown topology {topology!r}")
    if isinstance(occupied, OccupancyIndex):
        keys, arr = occupied.cells(), occupied.cell_array()
    else:
        keys = list(occupied)
        arr = np.asarray(keys, dtype=np.int64)
    if not keys:
        return []
    diff = np.abs(arr - np.asarray(c, dtype=np.int64))
    if topology == "moore":
        mask = diff.max(axis=1) == 1
    else:
        mask = diff.sum(axis=1) == 1
    return sorted(keys[i] for i in np.flatnonzero(mask))


class OccupancyIndex:
    """Sparse map from cell to the ids of the particles inside it."""

    def __init__(self, bounds: Bounds, k: int):
        if k < 1:
            raise InvalidPartitioning(f"partitions per dimension must be >= 1, got {k}")
        self.bounds = bounds
        self.k = k
        self._cells: dict[tuple, set] = {}
        self._where: dict[int, tuple] = {}
        self._sorted = None
        self._array = None

    def __len__(self):
        return len(self._cells)

    def __contains__(self, cell):
        return cell in self._cells

    def cells(self) -> list:
        if self._sorted is None:
            self._sorted = sorted(self._cells)
        return self._sorted

    def cell_array(self) -> np.ndarray:
        """Occupied cells as an ``(n, D)`` integer array, in :meth:`cells` order."""
        if self._array is None:
            self._array = np.asarray(self.cells(), dtype=np.int64)
        return self._array

    def members(self, cell) -> list:
        return sorted(self._cells.get(cell, ()))

    def cell_of_particle(self, pid: int) -> tuple:
        try:
            return self._where[pid]
        except KeyError:
            raise InvalidInput(f"particle {pid} is not indexed") from None

    def particles(self) -> list:
        return sorted(self._where)

    def insert(self, pid: int, position) -> tuple:
        if pid in self._where:
            raise InvalidInput(f"particle {pid} is already indexed")
        cell = cell_of(position, self.bounds, self.k)
        if cell not in self._cells:
            self._sorted = self._array = None
        self._cells.setdefault(cell, set()).add(pid)
        self._where[pid] = cell
        return cell

    def reassign(self, pid: int, position) -> tuple:
        old = self.cell_of_particle(pid)
        new = cell_of(position, self.bounds, self.k)
        if new != old:
            self._move(pid, old, new)
        return new

    def reassign_all(self, positions):
        """Re-index particle ``i`` at ``positions[i]`` for every indexed id."""
        cells = cells_of(positions, self.bounds, self.k)
        for pid, old in list(self._where.items()):
            new = tuple(cells[pid].tolist())
            if new != old:
                self._move(pid, old, new)

    def _move(self, pid, old, new):
        bucket = self._cells[old]
        bucket.discard(pid)
        if not bucket:
            del self._cells[old]
            self._sorted = self._array = None
        if new not in self._cells:
            self._sorted = self._array = None
        self._cells.setdefault(new, set()).add(pid)
        self._where[pid] = new


def reassign(occ: OccupancyIndex, particle_id: int, new_position, b=None, k=None) -> OccupancyIndex:
    same_bounds = b is None or (np.array_equal(b.lower, occ.bounds.lower)
                                and np.array_equal(b.upper, occ.bounds.upper))
    if not same_bounds or (k is not None and k != occ.k):
        raise InvalidInput("bounds/partitioning differ from the index's own")
    occ.reassign(particle_id, new_position)
    return occ
