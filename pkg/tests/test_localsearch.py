import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cpsol.benchmarks import eval_static
from cpsol.core import Bounds, InvalidInput
from cpsol.localsearch import pattern_search


def sphere(x):
    return float(np.sum(np.asarray(x) ** 2))


def test_first_pass_hand_trace():
    probes = []

    def f(x):
        probes.append(float(x[0]))
        return float(x[0] ** 2)

    st_ = pattern_search([1.0], 1.0, f, 0.5, 1e-3, budget=2)
    assert probes == [1.5, 0.5]
    assert st_.fitness == 0.25 and st_.point[0] == 0.5
    assert st_.direction[0] == -1


def test_at_optimum_returns_start_with_min_steps():
    st_ = pattern_search([0.0, 0.0], 0.0, sphere, 0.5, 1e-3, budget=10_000)
    assert st_.fitness == 0.0
    assert np.array_equal(st_.point, [0.0, 0.0])
    assert np.all(st_.step == 1e-3)
    assert st_.converged


def test_sphere_golden_value():
    st_ = pattern_search(np.ones(5), 5.0, sphere, 0.5, 1e-6, budget=100_000)
    assert st_.fitness < 1e-6
    assert st_.converged
    assert st_.fitness == sphere(st_.point)


def test_budget_respected():
    calls = []

    def f(x):
        calls.append(1)
        return sphere(x)

    st_ = pattern_search(np.full(4, 3.3), sphere(np.full(4, 3.3)), f, 0.01, 1e-9, budget=17)
    assert len(calls) == st_.evals_used == 17
    assert not st_.converged


def test_probes_clamped_to_bounds():
    b = Bounds([0.0], [1.0])
    seen = []

    def f(x):
        seen.append(float(x[0]))
        return -float(x[0])

    st_ = pattern_search([0.9], -0.9, f, 0.5, 1e-3, budget=50, bounds=b)
    assert all(0.0 <= v <= 1.0 for v in seen)
    assert st_.point[0] == 1.0


def test_maximization():
    st_ = pattern_search([0.0], -4.0, lambda x: -float((x[0] - 2) ** 2), 1.0, 1e-4, 500, maximize=True)
    assert st_.point[0] == pytest.approx(2.0, abs=1e-3)


def test_ties_rejected():
    st_ = pattern_search([0.0], 1.0, lambda x: 1.0, 1.0, 0.25, budget=100)
    assert st_.point[0] == 0.0 and st_.converged


@pytest.mark.parametrize("step0,min_step,budget", [(0.0, 1e-3, 10), (-1.0, 1e-3, 10), (0.5, 0.0, 10), (0.5, 1e-3, 0)])
def test_invalid_configuration(step0, min_step, budget):
    with pytest.raises(InvalidInput):
        pattern_search([1.0], 1.0, sphere, step0, min_step, budget)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(["sphere", "rastrigin", "griewank", "rosenbrock"]),
       st.lists(st.floats(-1.0, 1.0), min_size=2, max_size=6),
       st.floats(1e-3, 1.0), st.integers(1, 200))
def test_never_worse_and_consistent(name, unit, frac, budget):
    lo, hi = {"sphere": (-100, 100), "rastrigin": (-5.12, 5.12),
              "griewank": (-600, 600), "rosenbrock": (-5, 10)}[name]
    x0 = lo + (np.asarray(unit) + 1) / 2 * (hi - lo)
    f0 = eval_static(name, x0)
    b = Bounds.uniform(lo, hi, x0.size)
    st_ = pattern_search(x0, f0, lambda x: eval_static(name, x), frac * (hi - lo), 1e-6, budget, bounds=b)
    assert st_.fitness <= f0
    assert st_.fitness == eval_static(name, st_.point)
    assert st_.evals_used <= budget
    assert b.contains(st_.point)
