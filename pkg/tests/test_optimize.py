import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from opasim.optimize import OptimizationProblem, grid_refine, maximize
from opasim.protocols import cat_breed, cat_parity, cubic_opa, optimize_cat, optimize_cubic


def _parabola(p):
    return -((p[0] - 2.0) ** 2)


def test_parabola_maximum():
    res = maximize(OptimizationProblem(_parabola, [(0.0, 5.0)], starts=[np.array([0.5])]))
    assert abs(res.best_params[0] - 2.0) < 1e-4
    assert not res.exhausted


def test_reported_value_is_reevaluated_objective():
    f = lambda p: np.sin(3 * p[0]) * np.cos(2 * p[1]) - 0.1 * p[0] ** 2
    res = maximize(OptimizationProblem(f, [(-2, 2), (-2, 2)], starts=[np.array([0.3, 0.1])]))
    assert res.best_value == f(res.best_params)


def test_trace_monotone_and_deterministic():
    f = lambda p: -np.sum((p - np.array([0.3, -0.7, 1.1])) ** 2) + 0.05 * np.cos(9 * p[0])
    prob = lambda: OptimizationProblem(f, [(-2, 2)] * 3, starts=[np.zeros(3), np.ones(3)])
    a, b = maximize(prob()), maximize(prob())
    assert np.all(np.diff(a.trace) >= 0)
    np.testing.assert_array_equal(a.best_params, b.best_params)
    assert a.evals == b.evals


def test_more_starts_never_worse():
    f = lambda p: np.cos(4 * p[0]) + 0.3 * p[0]
    one = maximize(OptimizationProblem(f, [(-3, 3)], starts=[np.array([-2.5])]))
    two = maximize(OptimizationProblem(f, [(-3, 3)], starts=[np.array([-2.5]), np.array([2.3])]))
    assert two.best_value >= one.best_value


def test_exhaustion_flag():
    f = lambda p: -np.sum(p**2)
    res = maximize(OptimizationProblem(f, [(-1, 1)] * 4, starts=[np.full(4, 0.9)], max_evals=10))
    assert res.exhausted
    assert res.evals <= 10
    assert np.isfinite(res.best_value)


def test_fixed_parameter_and_validation():
    res = maximize(OptimizationProblem(lambda p: -(p[0] - 1) ** 2 - p[1], [(0, 3), (0.5, 0.5)], starts=[np.array([0.2, 0.5])]))
    assert res.best_params[1] == 0.5
    with pytest.raises(ValueError):
        maximize(OptimizationProblem(_parabola, [(0, 5)]))
    with pytest.raises(ValueError):
        OptimizationProblem(_parabola, [(1, 0)])
    with pytest.raises(ValueError):
        OptimizationProblem(_parabola, [(0, np.inf)])


def test_grid_refine_single_peak():
    prob = OptimizationProblem(_parabola, [(0.0, 5.0)])
    grid = [np.linspace(0, 5, 11)]
    best = grid_refine(prob, grid, top=1)[0]
    assert abs(best[0] - 2.0) <= 0.5
    pts = grid_refine(prob, np.array([[0.0], [1.9], [4.0]]), top=2)
    assert pts[0][0] == 1.9
    with pytest.raises(ValueError):
        grid_refine(prob, [])
    with pytest.raises(ValueError):
        grid_refine(prob, [np.array([])])


@given(st.floats(-4, 4), st.floats(0.1, 3))
def test_bounded_result_stays_in_box(c, w):
    lo, hi = -1.0, 1.0 + w
    res = maximize(OptimizationProblem(lambda p: -(p[0] - c) ** 2, [(lo, hi)], starts=[np.array([0.0])]))
    assert lo <= res.best_params[0] <= hi
    assert abs(res.best_params[0] - np.clip(c, lo, hi)) < 1e-3


def test_cubic_table_row_optimum():
    rep = cubic_opa(-1.35j, 0.3023, 3, 100)
    out = optimize_cubic(rep.state, 0.1)
    assert out["fidelity"] >= 0.993
    assert out["beta"].real == 0.0
    assert out["beta"].imag == pytest.approx(2.65, abs=0.1)
    assert out["r"] == pytest.approx(0.46, abs=0.05)


def test_cat_optimum():
    rep = cat_breed(-1.0, 0.5322, 2, 6, 140)
    out = optimize_cat(rep.state, cat_parity(2, 6), 4.9, 0.0)
    assert out["fidelity"] >= 0.991
    assert out["alpha"] == pytest.approx(4.9, abs=0.1)
