"""Derivative-free maximisation of fidelity objectives on boxes.

Each start runs scipy's Nelder-Mead simplex in an unconstrained space that
is mapped onto the box by  p = lo + (hi - lo) (1 + tanh u) / 2, so the
simplex never stalls on a bound.  Starts are processed in order and the
reduction is deterministic.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize


@dataclass
class OptimizationProblem:
    objective: Callable[[np.ndarray], float]
    bounds: Sequence[tuple]
    starts: list = field(default_factory=list)
    f_tol: float = 1e-6
    x_tol: float = 1e-5
    max_evals: int = 2000

    def __post_init__(self):
        self.bounds = [tuple(map(float, b)) for b in self.bounds]
        for lo, hi in self.bounds:
            if not (math.isfinite(lo) and math.isfinite(hi)) or hi < lo:
                raise ValueError(f"invalid bound ({lo}, {hi})")


@dataclass
class OptimizationResult:
    best_params: np.ndarray
    best_value: float
    evals: int
    trace: list
    exhausted: bool = False


def _to_box(u, lo, hi):
    return lo + (hi - lo) * 0.5 * (1.0 + np.tanh(u))


def _from_box(p, lo, hi):
    span = np.where(hi > lo, hi - lo, 1.0)
    z = np.clip(2.0 * (np.asarray(p, float) - lo) / span - 1.0, -1 + 1e-9, 1 - 1e-9)
    return np.arctanh(z)


def maximize(problem: OptimizationProblem) -> OptimizationResult:
    """Multistart bounded Nelder-Mead; best over starts."""
    if not problem.starts:
        raise ValueError("at least one start is required")
    lo = np.array([b[0] for b in problem.bounds])
    hi = np.array([b[1] for b in problem.bounds])
    fixed = hi == lo
    state = {"evals": 0, "best": -math.inf, "best_p": None}
    trace = []

    def f(u):
        p = _to_box(u, lo, hi)
        p[fixed] = lo[fixed]
        v = float(problem.objective(p))
        state["evals"] += 1
        if v > state["best"]:
            state["best"] = v
            state["best_p"] = p.copy()
        trace.append(state["best"])
        return -v

    exhausted = False
    for start in problem.starts:
        budget = problem.max_evals - state["evals"]
        if budget <= 0:
            exhausted = True
            break
        u0 = _from_box(start, lo, hi)
        res = minimize(
            f,
            u0,
            method="Nelder-Mead",
            options={"xatol": problem.x_tol, "fatol": problem.f_tol, "maxfev": budget, "adaptive": len(u0) > 2},
        )
        if res.nfev >= budget and not res.success:
            exhausted = True
    best_p = state["best_p"]
    # re-evaluate so the reported value is exactly objective(best_params)
    best_v = float(problem.objective(best_p))
    return OptimizationResult(best_p, best_v, state["evals"], trace, exhausted)


def grid_refine(problem: OptimizationProblem, coarse_grid, top: int = 3) -> list:
    """Evaluate ``coarse_grid`` and return the ``top`` best points as simplex starts.

    ``coarse_grid`` is either a list of per-parameter value arrays (taken as a
    Cartesian product) or an (N, dim) array of points.
    """
    if coarse_grid is None or len(coarse_grid) == 0:
        raise ValueError("empty grid")
    first = coarse_grid[0]
    if np.ndim(first) == 1 and len(coarse_grid) == len(problem.bounds) and not isinstance(coarse_grid, np.ndarray):
        axes = [np.asarray(a, float) for a in coarse_grid]
        if any(a.size == 0 for a in axes):
            raise ValueError("empty grid")
        pts = np.array(list(itertools.product(*axes)), dtype=float)
    else:
        pts = np.atleast_2d(np.asarray(coarse_grid, dtype=float))
    if pts.size == 0:
        raise ValueError("empty grid")
    vals = np.array([problem.objective(p) for p in pts])
    order = np.argsort(-vals, kind="stable")[:top]
    return [pts[i] for i in order]
