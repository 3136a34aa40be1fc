"""Global-best PSO used as the comparison baseline."""

from __future__ import annotations

import numpy as np

from .core import RandomSource
from .swarm import EVAL_KINDS, Sentinel, SwarmParams, detect_change, velocity_update


def spso_velocity(p, v, pbest, gbest, w, r1, r2, c1, c2, vmax):
    return velocity_update(p, v, pbest, gbest, w, r1, r2, c1, c2, vmax)


class GlobalBestPSO:
    """Plain gbest PSO with the same coefficients, inertia draw and velocity
    clamp as :class:`cpsol.swarm.CellularSwarm`.

    On dynamic problems it gets the same sentinel check; after a detected
    change every particle's memory is reset to its re-evaluated position.
    """

    def __init__(self, params: SwarmParams, env, src: RandomSource):
        self.params = params
        self.env = env
        self.src = src
        self.maximize = env.maximize
        self.bounds = env.bounds
        self.vmax = params.vmax(self.bounds)
        self.evals = dict.fromkeys(EVAL_KINDS, 0)
        self.iteration = 0
        self.changes_detected = 0
        n, b = params.population, self.bounds
        self.pos = src.uniform(b.lower, b.upper, (n, env.dim))
        self.vel = np.zeros((n, env.dim))
        self.pbest_pos = self.pos.copy()
        self.pbest_fit = self._eval(self.pos, "init")
        self._update_gbest()
        self.sentinel = Sentinel(self.gbest_pos.copy(), self.gbest_fit)

    @property
    def evals_total(self) -> int:
        return sum(self.evals.values())

    @property
    def best(self):
        return self.gbest_pos.copy(), self.gbest_fit

    def _eval(self, X, kind):
        f = self.env.evaluate(X)
        self.evals[kind] += f.size
        return f

    def _update_gbest(self):
        i = int(np.argmax(self.pbest_fit) if self.maximize else np.argmin(self.pbest_fit))
        self.gbest_pos = self.pbest_pos[i].copy()
        self.gbest_fit = float(self.pbest_fit[i])

    def on_change(self):
        self.changes_detected += 1
        self.pbest_pos = self.pos.copy()
        self.pbest_fit = self._eval(self.pos, "change")
        self._update_gbest()
        self.sentinel.stored_fitness = float(self._eval(self.sentinel.position[None, :], "change")[0])

    def iterate(self):
        changed = detect_change(self.sentinel, self.env)
        self.evals["sentinel"] += 1
        if changed:
            self.on_change()
        n, d = self.pos.shape
        lo, hi = self.params.w_range
        w = self.src.uniform(lo, hi, (n, 1))
        r1 = self.src.random((n, d))
        r2 = self.src.random((n, d))
        self.vel = spso_velocity(self.pos, self.vel, self.pbest_pos, self.gbest_pos, w, r1, r2,
                                 self.params.a1, self.params.a2, self.vmax)
        self.pos = np.clip(self.pos + self.vel, self.bounds.lower, self.bounds.upper)
        fit = self._eval(self.pos, "step")
        improved = fit > self.pbest_fit if self.maximize else fit < self.pbest_fit
        self.pbest_pos[improved] = self.pos[improved]
        self.pbest_fit[improved] = fit[improved]
        self._update_gbest()
        self.iteration += 1
        self.env.end_iteration()


def spso_iterate(swarm: GlobalBestPSO) -> GlobalBestPSO:
    swarm.iterate()
    return swarm
