"""Multi-swarm cellular PSO with per-cell clustering and local search.

Particles live in numpy arrays indexed by particle id.  Each iteration the
occupied cells are clustered into groups, every active group takes a PSO
step towards the best memory of its cell neighbourhood, the cell bests are
polished by coordinate pattern search, and converged groups hand their
surplus particles back as free particles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Bounds, InvalidInput, RandomSource
from .grid import TOPOLOGIES, OccupancyIndex, neighbor_cells, region_of
from .localsearch import PatternState, pattern_search


@dataclass
class SwarmParams:
    a1: float = 1.496180
    a2: float = 1.496180
    w_range: tuple = (0.4, 0.9)
    topology: str = "moore"
    partitions: int = 5
    population: int = 40
    cluster_radius_fraction: float = 0.25
    group_size_max: int = 5
    # None means 1e-3 of the smallest cell width
    convergence_radius: float | None = None
    vmax_fraction: float = 1.0
    local_search: bool = True
    local_search_target: str = "cell"
    ls_step_fraction: float = 1.0
    ls_min_step_fraction: float = 1e-3
    # None means 20 * D evaluations per invocation
    ls_budget: int | None = None

    def __post_init__(self):
        self.w_range = tuple(float(v) for v in self.w_range)
        if self.a1 <= 0 or self.a2 <= 0:
            raise InvalidInput("acceleration coefficients must be positive")
        lo, hi = self.w_range
        if not 0 < lo < hi < 1:
            raise InvalidInput(f"inertia range must lie inside (0, 1), got {self.w_range}")
        if self.topology not in TOPOLOGIES:
            raise InvalidInput(f"unknown topology {self.topology!r}")
        if self.partitions < 1 or self.population < 1 or self.group_size_max < 1:
            raise InvalidInput("partitions, population and group_size_max must be positive")
        if self.local_search_target not in ("cell", "group"):
            raise InvalidInput(f"unknown local search target {self.local_search_target!r}")

    @classmethod
    def static_defaults(cls, **kw) -> "SwarmParams":
        return cls(**{"topology": "von_neumann", "partitions": 3, **kw})

    @classmethod
    def mpb_defaults(cls, **kw) -> "SwarmParams":
        # a quarter-cell clamp keeps groups on their peak between the frequent changes
        return cls(**{"topology": "moore", "partitions": 5, "vmax_fraction": 0.25, **kw})

    def cell_width(self, bounds: Bounds) -> np.ndarray:
        return bounds.width / self.partitions

    def vmax(self, bounds: Bounds) -> np.ndarray:
        return self.vmax_fraction * self.cell_width(bounds)

    def epsilon(self, bounds: Bounds) -> float:
        if self.convergence_radius is not None:
            return float(self.convergence_radius)
        return 1e-3 * float(np.min(self.cell_width(bounds)))

    def ls_settings(self, bounds: Bounds):
        width = self.cell_width(bounds)
        budget = self.ls_budget if self.ls_budget is not None else 20 * bounds.dim
        return self.ls_step_fraction * width, self.ls_min_step_fraction * float(np.min(width)), budget


@dataclass
class Particle:
    id: int
    position: np.ndarray
    velocity: np.ndarray
    pbest_position: np.ndarray
    pbest_fitness: float


@dataclass
class Group:
    cell: tuple
    member_ids: list
    cbest_position: np.ndarray
    cbest_fitness: float
    active: bool = True


@dataclass
class CellState:
    coord: tuple
    best_position: np.ndarray
    best_fitness: float
    ls: PatternState | None = None
    # True when the best moved since the last local search
    dirty: bool = True


@dataclass
class Sentinel:
    position: np.ndarray
    stored_fitness: float


EVAL_KINDS = ("init", "step", "sentinel", "local_search", "change", "recycle")


def _better(a, b, maximize):
    return a > b if maximize else a < b


def _rank_key(fitness, maximize):
    return -fitness if maximize else fitness


def cluster_cell(member_ids, positions, pbest_fitness, region, params: SwarmParams,
                 maximize: bool = False, pbest_positions=None, cell=None) -> list:
    """Greedy leader clustering of one cell's particles.

    The unassigned particle with the best personal best leads a new group;
    unassigned particles within ``cluster_radius_fraction`` of the region
    diagonal (``region`` is a :class:`Bounds` or its width vector) join it, nearest first, up to ``group_size_max`` members.
    Ties go to the lower particle id.
    """
    ids = list(member_ids)
    if not ids:
        raise InvalidInput("cannot cluster an empty cell")
    positions = np.asarray(positions, dtype=float)
    pbest_fitness = np.asarray(pbest_fitness, dtype=float)
    if pbest_positions is None:
        pbest_positions = positions
    if len(ids) == 1:
        i = ids[0]
        return [Group(cell, [i], np.array(pbest_positions[i], dtype=float), float(pbest_fitness[i]))]
    width = region.width if isinstance(region, Bounds) else np.asarray(region, dtype=float)
    radius = params.cluster_radius_fraction * float(np.linalg.norm(width))
    order = sorted(ids, key=lambda i: (_rank_key(pbest_fitness[i], maximize), i))
    unassigned = set(ids)
    groups = []
    for leader in order:
        if leader not in unassigned:
            continue
        unassigned.discard(leader)
        others = sorted(unassigned)
        members = [leader]
        if others and params.group_size_max > 1:
            dist = np.linalg.norm(positions[others] - positions[leader], axis=1)
            near = sorted((d, i) for d, i in zip(dist.tolist(), others) if d <= radius)
            for _, i in near[: params.group_size_max - 1]:
                members.append(i)
                unassigned.discard(i)
        groups.append(Group(cell, members, np.array(pbest_positions[leader], dtype=float),
                            float(pbest_fitness[leader])))
    return groups


def velocity_update(p, v, pbest, social, w, r1, r2, a1, a2, vmax):
    """New velocity ``a1 r1 (pbest-p) + a2 r2 (social-p) + w v`` clipped to ``±vmax``."""
    new_v = a1 * r1 * (pbest - p) + a2 * r2 * (social - p) + w * v
    return np.clip(new_v, -vmax, vmax)


def update_group_status(group: Group, eps: float, positions, velocities=None) -> Group:
    """Mark a group inactive once its members have collapsed within ``eps``."""
    ids = group.member_ids
    if len(ids) == 1:
        speed = 0.0 if velocities is None else float(np.linalg.norm(velocities[ids[0]]))
        group.active = not speed <= eps
        return group
    pts = np.asarray(positions)[ids]
    diff = pts[:, None, :] - pts[None, :, :]
    spread = float(np.sqrt(np.max(np.sum(diff * diff, axis=-1))))
    group.active = not spread <= eps
    return group


def detect_change(sentinel: Sentinel, env) -> bool:
    """Re-evaluate the sentinel; a fitness move above 1e-12 means a change."""
    return abs(env.evaluate_one(sentinel.position) - sentinel.stored_fitness) > 1e-12


class CellularSwarm:
    """State and update rules of one optimisation run.

    ``env`` is a :class:`cpsol.benchmarks.Environment`; every evaluation goes
    through it.  ``evals`` keeps this swarm's own breakdown of evaluations by
    purpose, which must always sum to the environment's counter.
    """

    def __init__(self, params: SwarmParams, env, src: RandomSource):
        self.params = params
        self.env = env
        self.src = src
        self.bounds = env.bounds
        self.maximize = env.maximize
        self.dim = env.dim
        self.vmax = params.vmax(self.bounds)
        self.eps = params.epsilon(self.bounds)
        self.ls_step0, self.ls_min_step, self.ls_budget = params.ls_settings(self.bounds)
        self.evals = dict.fromkeys(EVAL_KINDS, 0)
        self.iteration = 0
        self.changes_detected = 0
        self.groups: list[Group] = []
        self.cells: dict[tuple, CellState] = {}
        self.initialize()

    # -- bookkeeping ------------------------------------------------------

    @property
    def evals_total(self) -> int:
        return sum(self.evals.values())

    def _eval(self, X, kind):
        f = self.env.evaluate(X)
        self.evals[kind] += f.size
        return f

    def _eval_one(self, x, kind):
        f = self.env.evaluate_one(x)
        self.evals[kind] += 1
        return f

    def better(self, a, b) -> bool:
        return _better(a, b, self.maximize)

    def particle(self, i: int) -> Particle:
        return Particle(i, self.pos[i].copy(), self.vel[i].copy(), self.pbest_pos[i].copy(),
                        float(self.pbest_fit[i]))

    @property
    def best(self):
        """Best memory in the swarm as ``(position, fitness)``."""
        i = int(np.argmax(self.pbest_fit) if self.maximize else np.argmin(self.pbest_fit))
        pos, fit = self.pbest_pos[i], float(self.pbest_fit[i])
        for cell in self.cells.values():
            if self.better(cell.best_fitness, fit):
                pos, fit = cell.best_position, cell.best_fitness
        return pos.copy(), fit

    def region(self, cell) -> Bounds:
        return region_of(cell, self.bounds, self.params.partitions)

    # -- steps 1-2 ----------------------------------------------------------

    def initialize(self):
        n, b = self.params.population, self.bounds
        self.pos = self.src.uniform(b.lower, b.upper, (n, self.dim))
        self.vel = np.zeros((n, self.dim))
        self.pbest_pos = self.pos.copy()
        self.pbest_fit = self._eval(self.pos, "init")
        self.pbest_ls = [None] * n
        self.occ = OccupancyIndex(b, self.params.partitions)
        for i in range(n):
            self.occ.insert(i, self.pos[i])
        self._refresh_cells()
        i = int(np.argmax(self.pbest_fit) if self.maximize else np.argmin(self.pbest_fit))
        self.sentinel = Sentinel(self.pos[i].copy(), float(self.pbest_fit[i]))

    def _refresh_cells(self):
        """Fold current member pbests into their cell memories.

        A pbest that came out of a local search carries that search's state
        into the cell, so an already polished point is not searched again.
        """
        for cell in self.occ.cells():
            ids = self.occ.members(cell)
            fits = self.pbest_fit[ids]
            j = ids[int(np.argmax(fits) if self.maximize else np.argmin(fits))]
            state = self.cells.get(cell)
            if state is None:
                ls = self.pbest_ls[j]
                self.cells[cell] = CellState(cell, self.pbest_pos[j].copy(), float(self.pbest_fit[j]),
                                             ls, dirty=ls is None)
            elif self.better(self.pbest_fit[j], state.best_fitness):
                state.best_position = self.pbest_pos[j].copy()
                state.best_fitness = float(self.pbest_fit[j])
                if self.pbest_ls[j] is not None:
                    state.ls, state.dirty = self.pbest_ls[j], False
                else:
                    state.dirty = True

    # -- step 3.2 -----------------------------------------------------------

    def on_change(self):
        """Response to a detected change: forget memories, shake, re-evaluate."""
        self.changes_detected += 1
        lo, hi = self.bounds.lower, self.bounds.upper
        # converged groups are judged on the pre-change velocities
        converged = set()
        for g in self.groups:
            if not update_group_status(Group(g.cell, g.member_ids, g.cbest_position, g.cbest_fitness),
                                       self.eps, self.pos, self.vel).active:
                converged.update(g.member_ids)
        for cell in self.occ.cells():
            ids = self.occ.members(cell)
            fits = self.pbest_fit[ids]
            keep = ids[int(np.argmax(fits) if self.maximize else np.argmin(fits))]
            region = self.region(cell)
            for i in ids:
                if i != keep and i in converged:
                    self.pos[i] = self.src.uniform(region.lower, region.upper)
        self.vel = self.src.uniform(-self.vmax, self.vmax, (self.params.population, self.dim))
        self.pos = np.clip(self.pos, lo, hi)
        self.occ.reassign_all(self.pos)
        self.cells = {}
        self.groups = []
        self.pbest_pos = self.pos.copy()
        self.pbest_fit = self._eval(self.pos, "change")
        self.pbest_ls = [None] * self.params.population
        self._refresh_cells()
        self.sentinel.stored_fitness = self._eval_one(self.sentinel.position, "change")

    # -- steps 3.3-3.5 ------------------------------------------------------

    def cluster(self):
        self._refresh_cells()
        self.groups = []
        # every cell has the same extent, so the clustering radius is shared
        width = self.params.cell_width(self.bounds)
        for cell in self.occ.cells():
            self.groups.extend(cluster_cell(self.occ.members(cell), self.pos, self.pbest_fit,
                                            width, self.params, self.maximize,
                                            self.pbest_pos, cell))

    def social_attractor(self, cell):
        """Best memory among the cell and its occupied neighbours."""
        best = self.cells[cell]
        for nb in neighbor_cells(cell, self.params.topology, self.occ):
            other = self.cells.get(nb)
            if other is not None and self.better(other.best_fitness, best.best_fitness):
                best = other
        return best.best_position

    def move(self, groups, attractor=None):
        """One velocity/position update plus evaluation for every member of
        ``groups``; memories of groups and cells are refreshed on improvement.
        ``attractor`` fixes the social term instead of the cell neighbourhood."""
        groups = [g for g in groups if g.active]
        if not groups:
            return
        ids = [i for g in groups for i in g.member_ids]
        social_of = {}
        social = np.empty((len(ids), self.dim))
        row = 0
        for g in groups:
            if g.cell not in social_of:
                social_of[g.cell] = (self.social_attractor(g.cell) if attractor is None
                                     else np.asarray(attractor, dtype=float))
            social[row:row + len(g.member_ids)] = social_of[g.cell]
            row += len(g.member_ids)
        n = len(ids)
        lo, hi = self.params.w_range
        w = self.src.uniform(lo, hi, (n, 1))
        r1 = self.src.random((n, self.dim))
        r2 = self.src.random((n, self.dim))
        p = self.pos[ids]
        v = velocity_update(p, self.vel[ids], self.pbest_pos[ids], social, w, r1, r2,
                            self.params.a1, self.params.a2, self.vmax)
        p = np.clip(p + v, self.bounds.lower, self.bounds.upper)
        self.vel[ids] = v
        self.pos[ids] = p
        fit = self._eval(p, "step")
        improved = fit > self.pbest_fit[ids] if self.maximize else fit < self.pbest_fit[ids]
        for row, i in enumerate(ids):
            if improved[row]:
                self.pbest_pos[i] = p[row]
                self.pbest_fit[i] = fit[row]
                self.pbest_ls[i] = None
        for g in groups:
            cell = self.cells[g.cell]
            for i in g.member_ids:
                if self.better(self.pbest_fit[i], g.cbest_fitness):
                    g.cbest_position = self.pbest_pos[i].copy()
                    g.cbest_fitness = float(self.pbest_fit[i])
            if self.better(g.cbest_fitness, cell.best_fitness):
                cell.best_position = g.cbest_position.copy()
                cell.best_fitness = g.cbest_fitness
                cell.dirty = True

    # -- step 3.6 -----------------------------------------------------------

    def _search(self, x, fx, step, direction):
        return pattern_search(x, fx, lambda y: self._eval_one(y, "local_search"), step,
                              self.ls_min_step, self.ls_budget, self.bounds, self.maximize,
                              direction)

    def local_search(self):
        if not self.params.local_search:
            return
        if self.params.local_search_target == "group":
            for g in self.groups:
                res = self._search(g.cbest_position, g.cbest_fitness, self.ls_step0, None)
                if self.better(res.fitness, g.cbest_fitness):
                    g.cbest_position, g.cbest_fitness = res.point, res.fitness
                    cell = self.cells[g.cell]
                    if self.better(res.fitness, cell.best_fitness):
                        cell.best_position, cell.best_fitness = res.point.copy(), res.fitness
            return
        for coord in self.occ.cells():
            cell = self.cells[coord]
            if cell.ls is not None and cell.ls.converged and not cell.dirty:
                continue
            if cell.ls is None:
                step, direction = self.ls_step0, None
            elif cell.dirty:
                # widen the stored steps to the distance the best has moved
                moved = np.abs(cell.best_position - cell.ls.point)
                step = np.clip(moved, cell.ls.step, np.maximum(self.ls_step0, cell.ls.step))
                direction = cell.ls.direction
            else:
                step, direction = cell.ls.step, cell.ls.direction
            res = self._search(cell.best_position, cell.best_fitness, step, direction)
            cell.ls = res
            cell.dirty = False
            if self.better(res.fitness, cell.best_fitness):
                cell.best_position, cell.best_fitness = res.point.copy(), res.fitness
            # the cell's best particle adopts the polished point as its memory
            ids = self.occ.members(coord)
            fits = self.pbest_fit[ids]
            j = ids[int(np.argmax(fits) if self.maximize else np.argmin(fits))]
            if not self.better(self.pbest_fit[j], res.fitness):
                self.pbest_pos[j] = res.point
                self.pbest_fit[j] = res.fitness
                self.pbest_ls[j] = res

    # -- step 3.7 -----------------------------------------------------------

    def recycle_inactive(self):
        """Keep the best member of each converged group at its memory and
        scatter the rest into a random occupied neighbour cell (or anywhere
        when the cell has no occupied neighbour)."""
        for g in self.groups:
            update_group_status(g, self.eps, self.pos, self.vel)
        inactive = [g for g in self.groups if not g.active]
        if not inactive:
            return
        b = self.bounds
        moved = []
        for g in inactive:
            fits = self.pbest_fit[g.member_ids]
            keep = g.member_ids[int(np.argmax(fits) if self.maximize else np.argmin(fits))]
            self.pos[keep] = self.pbest_pos[keep]
            self.vel[keep] = 0.0
            self.occ.reassign(keep, self.pos[keep])
            for i in g.member_ids:
                if i == keep:
                    continue
                nbs = neighbor_cells(g.cell, self.params.topology, self.occ)
                if nbs:
                    region = self.region(nbs[self.src.integers(len(nbs))])
                    self.pos[i] = self.src.uniform(region.lower, region.upper)
                else:
                    self.pos[i] = self.src.uniform(b.lower, b.upper)
                self.vel[i] = 0.0
                moved.append(i)
        if moved:
            fit = self._eval(self.pos[moved], "recycle")
            for row, i in enumerate(moved):
                self.pbest_pos[i] = self.pos[i]
                self.pbest_fit[i] = fit[row]
                self.pbest_ls[i] = None
                self.occ.reassign(i, self.pos[i])
            self._refresh_cells()
        self.groups = [g for g in self.groups if g.active]

    # -- step 3 -------------------------------------------------------------

    def iterate(self):
        changed = detect_change(self.sentinel, self.env)
        self.evals["sentinel"] += 1
        if changed:
            self.on_change()
        self.cluster()
        self.move(self.groups)
        self.occ.reassign_all(self.pos)
        self._refresh_cells()
        self.local_search()
        self.recycle_inactive()
        self.iteration += 1
        self.env.end_iteration()


def initialize(params: SwarmParams, env, src: RandomSource) -> CellularSwarm:
    return CellularSwarm(params, env, src)


def iterate(state: CellularSwarm) -> CellularSwarm:
    state.iterate()
    return state


def step_group(state: CellularSwarm, group: Group, cell_best=None) -> Group:
    """Advance one group; ``cell_best`` replaces the neighbourhood attractor."""
    state.move([group], attractor=cell_best)
    return group


def on_change(state: CellularSwarm) -> CellularSwarm:
    state.on_change()
    return state


def recycle_inactive(state: CellularSwarm) -> CellularSwarm:
    state.recycle_inactive()
    return state
