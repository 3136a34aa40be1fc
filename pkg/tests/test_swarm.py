import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cpsol.benchmarks import Environment, MovingParabola, StaticFunction
from cpsol.core import Bounds, InvalidInput, make_random_source
from cpsol.grid import cell_of
from cpsol.swarm import (CellularSwarm, Group, Sentinel, SwarmParams, cluster_cell, detect_change,
                         initialize, iterate, on_change, recycle_inactive, step_group,
                         update_group_status, velocity_update)

from conftest import FixedSource


def test_paper_coefficients():
    p = SwarmParams()
    assert p.a1 == p.a2 == 1.496180
    assert p.w_range == (0.4, 0.9)
    assert p.population == 40
    s = SwarmParams.static_defaults()
    assert (s.topology, s.partitions) == ("von_neumann", 3)
    m = SwarmParams.mpb_defaults()
    assert (m.topology, m.partitions) == ("moore", 5)


@pytest.mark.parametrize("kw", [{"w_range": (0.9, 0.4)}, {"a1": 0.0}, {"topology": "ring"},
                                {"partitions": 0}, {"local_search_target": "swarm"}])
def test_params_validation(kw):
    with pytest.raises(InvalidInput):
        SwarmParams(**kw)


def test_initialize_example(mpb_env):
    env = mpb_env()
    s = initialize(SwarmParams.mpb_defaults(), env, make_random_source(3))
    assert s.pos.shape == (40, 5)
    assert np.all(s.pos >= 0) and np.all(s.pos <= 100)
    assert np.all(s.vel == 0)
    assert len(s.occ) <= 40
    again = initialize(SwarmParams.mpb_defaults(), mpb_env(), make_random_source(3))
    assert np.array_equal(s.pos, again.pos)
    assert env.evals == 40 == s.evals_total


# -- clustering -------------------------------------------------------------

def test_cluster_single_group():
    pos = np.array([[1.0, 1.0], [1.5, 1.0], [1.0, 1.4]])
    groups = cluster_cell([0, 1, 2], pos, [3.0, 1.0, 2.0], np.array([20.0, 20.0]), SwarmParams())
    assert len(groups) == 1
    assert groups[0].member_ids[0] == 1
    assert groups[0].cbest_fitness == 1.0


def test_cluster_separated_pair():
    pos = np.array([[0.0, 0.0], [19.0, 19.0]])
    groups = cluster_cell([0, 1], pos, [1.0, 2.0], np.array([20.0, 20.0]), SwarmParams())
    assert [g.member_ids for g in groups] == [[0], [1]]


def test_cluster_cap_splits_colocated():
    pos = np.zeros((7, 2))
    groups = cluster_cell(list(range(7)), pos, np.zeros(7), np.array([20.0, 20.0]),
                          SwarmParams(group_size_max=5))
    assert sorted(len(g.member_ids) for g in groups) == [2, 5]


def test_cluster_maximization_leader():
    pos = np.zeros((2, 1))
    groups = cluster_cell([0, 1], pos, [1.0, 9.0], np.array([1.0]), SwarmParams(), maximize=True)
    assert groups[0].member_ids[0] == 1


@given(st.integers(1, 20), st.integers(0, 2**32), st.integers(1, 6))
def test_cluster_partitions_members(n, seed, cap):
    src = make_random_source(seed)
    pos = src.uniform(0, 20, (n, 3))
    groups = cluster_cell(list(range(n)), pos, src.random(n), np.full(3, 20.0),
                          SwarmParams(group_size_max=cap))
    ids = sorted(i for g in groups for i in g.member_ids)
    assert ids == list(range(n))
    assert all(1 <= len(g.member_ids) <= cap for g in groups)


# -- velocity / step ----------------------------------------------------------

def test_velocity_hand_case():
    v = velocity_update(0.0, 1.0, 2.0, 4.0, 0.5, 0.5, 0.5, 1.5, 1.5, 100.0)
    assert v == pytest.approx(5.0)


def test_velocity_inertia_only_when_r_zero():
    v = velocity_update(np.array([1.0]), np.array([0.3]), np.array([7.0]), np.array([9.0]),
                        0.7, 0.0, 0.0, 1.5, 1.5, np.array([10.0]))
    assert v[0] == pytest.approx(0.21)


def test_velocity_clipped():
    v = velocity_update(np.zeros(2), np.zeros(2), np.full(2, 100.0), np.full(2, -100.0),
                        0.5, 1.0, 0.0, 1.5, 1.5, np.array([2.0, 3.0]))
    assert np.array_equal(v, [2.0, 3.0])


def _one_particle_swarm(src):
    env = Environment(StaticFunction("sphere", 1))
    s = CellularSwarm(SwarmParams(partitions=1, population=1, a1=1.5, a2=1.5), env, src)
    return s


def test_step_group_hand_case():
    s = _one_particle_swarm(FixedSource(frac_w=0.2, r=0.5))  # w = 0.4 + 0.2*0.5 = 0.5
    s.pos[0] = [0.0]
    s.vel[0] = [1.0]
    s.pbest_pos[0] = [2.0]
    s.pbest_fit[0] = 4.0
    s.cluster()
    g = s.groups[0]
    step_group(s, g, cell_best=np.array([4.0]))
    assert s.vel[0, 0] == pytest.approx(5.0)
    assert s.pos[0, 0] == pytest.approx(5.0)


def test_step_group_fixed_point():
    s = _one_particle_swarm(make_random_source(0))
    s.pos[0] = s.pbest_pos[0] = [3.0]
    s.pbest_fit[0] = 9.0
    s.vel[0] = [0.0]
    s.cluster()
    step_group(s, s.groups[0], cell_best=np.array([3.0]))
    assert s.pos[0, 0] == 3.0 and s.vel[0, 0] == 0.0


# -- change detection -------------------------------------------------------

def test_static_never_detects_change(static_env):
    env = static_env("rastrigin", 4)
    x = np.full(4, 1.3)
    s = Sentinel(x, env.evaluate_one(x))
    assert not any(detect_change(s, env) for _ in range(20))


def test_parabola_change_detected(parabola_env):
    env = parabola_env(dim=3)
    x = np.full(3, 5.0)
    s = Sentinel(x, env.evaluate_one(x))
    env.end_iteration()
    assert detect_change(s, env)


def test_identical_value_change_is_missed():
    # the offset moves from -0.1 to +0.1 so a sentinel at 0 keeps its value
    env = Environment(MovingParabola(1, "linear", 0.2, delta=np.array([-0.1])),
                      make_random_source(0), 1, "iterations")
    s = Sentinel(np.zeros(1), env.evaluate_one(np.zeros(1)))
    env.end_iteration()
    assert not detect_change(s, env)


def test_on_change_contract(parabola_env):
    env = parabola_env(dim=4, every=5)
    s = initialize(SwarmParams.static_defaults(), env, make_random_source(1))
    for _ in range(7):
        iterate(s)
    assert s.changes_detected == 1
    truth = env.landscape(s.pos)
    assert np.array_equal(s.pbest_fit, truth) or s.iteration > 5
    on_change(s)
    assert np.array_equal(s.pbest_fit, env.landscape(s.pos))
    assert np.all(np.abs(s.vel) <= s.vmax)
    for i in range(40):
        assert s.occ.cell_of_particle(i) == cell_of(s.pos[i], s.bounds, s.params.partitions)


def test_zero_severity_change_keeps_fitness(parabola_env):
    env = parabola_env(dim=3, tau=0.0)
    s = initialize(SwarmParams.static_defaults(), env, make_random_source(1))
    before = s.pbest_fit.copy()
    on_change(s)
    assert np.array_equal(s.pbest_fit, env.landscape(s.pos))
    assert np.array_equal(np.sort(before) <= np.inf, np.ones(40, bool))


# -- convergence and recycling ----------------------------------------------

def test_group_status_examples():
    eps = 1e-3
    pts = np.array([[1.0, 1.0], [1.0, 1.0], [1.0, 1.0]])
    assert not update_group_status(Group((0,), [0, 1, 2], pts[0], 0.0), eps, pts).active
    pts = np.array([[0.0, 0.0], [10 * eps, 0.0]])
    assert update_group_status(Group((0,), [0, 1], pts[0], 0.0), eps, pts).active
    assert update_group_status(Group((0,), [0, 1], pts[0], 0.0), 0.0, pts).active


def test_recycle_no_inactive_is_identity(static_env):
    s = initialize(SwarmParams.static_defaults(), static_env(), make_random_source(0))
    s.cluster()
    for g in s.groups:
        g.active = True
    s.vel[:] = 1.0
    pos = s.pos.copy()
    evals = s.evals_total
    recycle_inactive(s)
    assert np.array_equal(s.pos, pos) and s.evals_total == evals


def test_recycle_group_of_three(static_env):
    env = static_env("sphere", 2)
    s = initialize(SwarmParams.static_defaults(population=3), env, make_random_source(0))
    point = np.array([50.0, 50.0])
    s.pos[:] = point
    s.pbest_pos[:] = point
    s.pbest_fit[:] = [5000.0, 5000.0, 5000.0]
    s.pbest_fit[1] = 4999.0
    s.occ.reassign_all(s.pos)
    s.cells = {}
    s.cluster()
    cell = s.groups[0].cell
    best_before = s.cells[cell].best_fitness
    recycle_inactive(s)
    assert np.array_equal(s.pos[1], point)
    assert s.evals["recycle"] == 2
    moved = [i for i in (0, 2) if not np.array_equal(s.pos[i], point)]
    assert len(moved) == 2
    assert s.cells[cell].best_fitness <= best_before


@settings(max_examples=10, deadline=None)
@given(st.sampled_from(["sphere", "rastrigin", "griewank", "rosenbrock"]), st.integers(0, 1000))
def test_static_best_never_worsens(name, seed):
    env = Environment(StaticFunction(name, 4))
    s = initialize(SwarmParams.static_defaults(population=12, ls_budget=20), env, make_random_source(seed))
    prev = s.best[1]
    for _ in range(15):
        iterate(s)
        cur = s.best[1]
        assert cur <= prev
        prev = cur


def test_eval_breakdown_matches_environment(mpb_env):
    env = mpb_env(change_every=500)
    s = initialize(SwarmParams.mpb_defaults(), env, make_random_source(2))
    for _ in range(30):
        iterate(s)
    assert s.evals_total == env.evals
    # several changes can fall inside one iteration; at most one is seen
    assert 0 < s.changes_detected <= env.changes


def test_sparse_changes_all_detected(mpb_env):
    env = mpb_env(change_every=20_000)
    s = initialize(SwarmParams.mpb_defaults(), env, make_random_source(2))
    while env.evals < 100_000:
        iterate(s)
    seen = env.changes
    iterate(s)  # detection happens on the iterate after the change
    assert s.changes_detected == seen >= 4


def test_group_local_search_mode(static_env):
    env = static_env("sphere", 3)
    s = initialize(SwarmParams.static_defaults(local_search_target="group", population=10),
                   env, make_random_source(0))
    for _ in range(5):
        iterate(s)
    assert s.evals["local_search"] > 0
    assert s.evals_total == env.evals
