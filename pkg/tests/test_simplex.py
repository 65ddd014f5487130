import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dragphase.config import SolverOptions
from dragphase.lp_builder import LinearProgram
from dragphase.simplex import INFEASIBLE, ITERATION_LIMIT, OPTIMAL, UNBOUNDED, feasibility, solve

from oracles import brute_force_lp


def lp(cost, a, b, lower, upper):
    return LinearProgram(
        np.asarray(cost, float), np.atleast_2d(np.asarray(a, float)), np.asarray(b, float),
        np.asarray(lower, float), np.asarray(upper, float),
    )


def random_lp(rng):
    n = int(rng.integers(1, 7))
    m = int(rng.integers(1, 9))
    a = rng.normal(size=(m, n))
    lower = rng.uniform(-3, 0, n)
    upper = lower + rng.uniform(0.5, 4, n)
    x0 = rng.uniform(lower, upper)
    # about one instance in four is pushed infeasible
    slack = rng.uniform(-1.5, 1.0, m) if rng.random() < 0.25 else rng.uniform(0, 1.0, m)
    b = a @ x0 + slack
    cost = rng.normal(size=n)
    return cost, a, b, lower, upper


def test_epigraph_toy():
    sol = solve(lp([0, 1], [[-1, -1]], [0], [1, -np.inf], [2, np.inf]))
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(-2.0, abs=1e-12)
    assert sol.x == pytest.approx([2.0, -2.0], abs=1e-12)


def test_contradictory_rows():
    sol = solve(lp([1], [[1], [-1]], [0, -1], [-10], [10]))
    assert sol.status == INFEASIBLE
    assert sol.infeasibility > 1e-9
    assert not feasibility(lp([1], [[1], [-1]], [0, -1], [-10], [10]))[0]


def test_unbounded():
    sol = solve(lp([-1, 0], [[0, 1]], [1], [0, 0], [np.inf, 1]))
    assert sol.status == UNBOUNDED


def test_iteration_limit():
    rng = np.random.default_rng(0)
    prob = lp(rng.normal(size=6), rng.normal(size=(8, 6)), np.full(8, -5.0), -np.ones(6), np.ones(6))
    assert solve(prob, SolverOptions(max_iters=1)).status in (ITERATION_LIMIT, INFEASIBLE)


def test_dimension_mismatch():
    bad = LinearProgram.__new__(LinearProgram)
    object.__setattr__(bad, "cost", np.zeros(2))
    object.__setattr__(bad, "a_matrix", np.zeros((1, 3)))
    object.__setattr__(bad, "b", np.zeros(1))
    object.__setattr__(bad, "lower", np.zeros(3))
    object.__setattr__(bad, "upper", np.ones(3))
    with pytest.raises(ValueError):
        solve(bad)


@pytest.mark.parametrize("seed", range(40))
def test_matches_vertex_enumeration(seed):
    rng = np.random.default_rng(seed)
    cost, a, b, lower, upper = random_lp(rng)
    best, _ = brute_force_lp(cost, a, b, lower, upper)
    sol = solve(lp(cost, a, b, lower, upper))
    if best is None:
        assert sol.status == INFEASIBLE
    else:
        assert sol.status == OPTIMAL
        assert sol.objective == pytest.approx(best, abs=1e-9)
        assert sol.max_primal_residual <= 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_optimal_solutions_are_feasible_and_beat_random_points(seed):
    rng = np.random.default_rng(seed)
    cost, a, b, lower, upper = random_lp(rng)
    sol = solve(lp(cost, a, b, lower, upper))
    if sol.status != OPTIMAL:
        return
    assert np.all(a @ sol.x <= b + 1e-9)
    assert np.all(sol.x >= lower - 1e-9) and np.all(sol.x <= upper + 1e-9)
    # any feasible point is no better than the reported optimum
    pts = rng.uniform(lower, upper, (500, len(lower)))
    feas = np.all(pts @ a.T <= b, axis=1)
    if feas.any():
        assert sol.objective <= (pts[feas] @ cost).min() + 1e-9


def test_deterministic():
    rng = np.random.default_rng(5)
    prob = lp(*random_lp(rng))
    a, b = solve(prob), solve(prob)
    assert a.iterations == b.iterations
    assert np.array_equal(a.x, b.x)


def test_bland_path_terminates_on_degenerate_lp():
    # many rows through the same vertex: heavy degeneracy
    n = 4
    rng = np.random.default_rng(2)
    a = rng.normal(size=(12, n))
    b = np.zeros(12)
    cost = rng.normal(size=n)
    prob = lp(cost, a, b, -np.ones(n), np.ones(n))
    ref = solve(prob)
    forced = solve(prob, SolverOptions(bland_after=1))
    best, _ = brute_force_lp(cost, a, b, -np.ones(n), np.ones(n))
    assert ref.status == forced.status == OPTIMAL
    assert forced.objective == pytest.approx(best, abs=1e-9)
    assert ref.objective == pytest.approx(best, abs=1e-9)
    assert forced.bland_pivots > 0


def test_refactor_frequency_does_not_change_answer():
    rng = np.random.default_rng(8)
    cost, a, b, lower, upper = random_lp(rng)
    prob = lp(cost, a, b, lower, upper)
    x1 = solve(prob, SolverOptions(refactor_every=1))
    x2 = solve(prob, SolverOptions(refactor_every=1000))
    assert x1.status == x2.status
    if x1.status == OPTIMAL:
        assert x1.objective == pytest.approx(x2.objective, abs=1e-10)
