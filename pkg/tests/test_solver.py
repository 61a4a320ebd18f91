import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ccasim.cost import CostWeights
from ccasim.errors import SolverError
from ccasim.frames import WaypointSegment
from ccasim.kinematics import HorizonModel, NeighborParams, OwnShipParams, neutral_plan
from ccasim.nadmm.solver import (CcasLocalProblem, local_solve, plan_bounds, projected_gradient,
                                 projected_gradient_norm)
from ccasim.risk import RiskParams


def _active_set_oracle(H, q, lo, hi):
    """Exact box-QP minimiser by enumerating which bound (if any) each variable sits on."""
    n = len(q)
    best, best_val = None, np.inf
    for pattern in itertools.product((0, 1, 2), repeat=n):
        x = np.zeros(n)
        fixed = [i for i, p in enumerate(pattern) if p]
        free = [i for i, p in enumerate(pattern) if not p]
        for i in fixed:
            x[i] = lo[i] if pattern[i] == 1 else hi[i]
        if free:
            rhs = -q[free] - H[np.ix_(free, fixed)] @ x[fixed]
            x[free] = np.linalg.solve(H[np.ix_(free, free)], rhs)
        if np.any(x < lo - 1e-12) or np.any(x > hi + 1e-12):
            continue
        val = 0.5 * x @ H @ x + q @ x
        if val < best_val:
            best, best_val = x, val
    return best


def _random_qp(seed, n=4):
    rng = np.random.default_rng(seed)
    R = rng.normal(size=(n, n))
    H = R @ R.T + 0.5 * np.eye(n)
    q = rng.normal(size=n) * 3
    lo = -rng.uniform(0.1, 1, n)
    hi = rng.uniform(0.1, 1, n)
    return H, q, lo, hi


@pytest.mark.parametrize("method", ["lbfgsb", "pg"])
@pytest.mark.parametrize("seed", range(6))
def test_box_qp_matches_active_set_oracle(method, seed):
    H, q, lo, hi = _random_qp(seed)
    res = local_solve(lambda x: (0.5 * x @ H @ x + q @ x, H @ x + q), np.zeros(4), lo, hi,
                      tol=1e-10, max_iter=5000, method=method)
    assert res.converged
    assert res.x == pytest.approx(_active_set_oracle(H, q, lo, hi), abs=1e-7)


def test_scaling_does_not_change_the_answer():
    H, q, lo, hi = _random_qp(3)
    f = lambda x: (0.5 * x @ H @ x + q @ x, H @ x + q)  # noqa: E731
    a = local_solve(f, np.zeros(4), lo, hi, tol=1e-10, max_iter=2000)
    b = local_solve(f, np.zeros(4), lo, hi, tol=1e-10, max_iter=2000, scale=[1.0, 10.0, 0.1, 3.0])
    assert a.x == pytest.approx(b.x, abs=1e-7)
    with pytest.raises(ValueError):
        local_solve(f, np.zeros(4), lo, hi, scale=[1.0, 0.0, 1.0, 1.0])


def test_unknown_method_and_nonfinite():
    with pytest.raises(ValueError):
        local_solve(lambda x: (0.0, x), np.zeros(2), -np.ones(2), np.ones(2), method="newton")
    with pytest.raises(SolverError):
        local_solve(lambda x: (np.nan, x), np.zeros(2), -np.ones(2), np.ones(2))


def test_cap_reached_is_flagged():
    H, q, lo, hi = _random_qp(1)
    res = projected_gradient(lambda x: (0.5 * x @ H @ x + q @ x, H @ x + q), np.zeros(4), lo, hi,
                             tol=1e-14, max_iter=1)
    assert res.iterations == 1
    assert not res.converged


@given(st.integers(0, 10_000))
def test_solution_inside_box(seed):
    rng = np.random.default_rng(seed)
    n = 5
    c = rng.normal(size=n) * 10
    lo, hi = -rng.uniform(0, 2, n), rng.uniform(0, 2, n)
    res = local_solve(lambda x: (float(np.sum((x - c) ** 4)), 4 * (x - c) ** 3), rng.normal(size=n) * 5,
                      lo, hi, max_iter=200)
    assert np.all(res.x >= lo) and np.all(res.x <= hi)


def test_projected_gradient_norm():
    assert projected_gradient_norm(np.array([1.0]), np.array([-5.0]), np.array([0.0]), np.array([1.0])) == 0.0
    assert projected_gradient_norm(np.array([0.5]), np.array([0.2]), np.array([0.0]), np.array([1.0])) == \
        pytest.approx(0.2)


def test_plan_bounds_layout():
    lo, hi = plan_bounds(3, 4, 1, 60.0, 0.5)
    assert lo.shape == (3, 4, 2)
    assert (lo[1, :, 0] == -60).all() and (hi[1, :, 0] == 60).all()
    assert (lo[1, :, 1] == 0.4).all() and (lo[0, :, 1] == 0.6).all()
    assert (lo[2, :, 0] == 0).all() and (hi[2, :, 0] == 0.5).all()
    assert (hi[..., 1] == 1).all()


def test_ccas_problem_solve_improves_and_respects_bounds():
    own = OwnShipParams(U_d=3.0, T_1=30.0, dT=20.0)
    model = HorizonModel.build(0, own, [None, NeighborParams(3.0, 30.0, np.pi)])
    init = np.array([[0.0, 0.0, 0.0], [900.0, 5.0, np.pi]])
    lo, hi = plan_bounds(2, 8, 0, 60.0, 0.5)
    pb = CcasLocalProblem(init, model, CostWeights(alpha=np.ones(2)), RiskParams.for_hull(51.5, 8.6),
                          WaypointSegment(0.0, 0.0, 0.0), lo, hi, max_iter=200)
    plan0 = neutral_plan(2, 8, 0, 0.0)
    xi = pb.transformed(plan0)
    z = np.zeros_like(xi)
    plan, info = pb.solve(plan0, z, xi, 3e-4)
    assert np.all(plan >= lo) and np.all(plan <= hi)
    assert info["value"] < pb.lagrangian(plan0, z, xi, 3e-4)[0]
    # head-on: the ego ship moves to starboard
    assert plan[0, :, 0].max() > 1.0
