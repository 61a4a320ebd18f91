"""Box-constrained local solver and the per-ship collision-avoidance problem.

States are eliminated by single shooting, so the local subproblem is a
smooth objective over the control plan subject only to box bounds. Bounds are
enforced by projection and therefore hold exactly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from ..cost import CostWeights, LagrangianContext, evaluate
from ..errors import SolverError
from ..frames import WaypointSegment, stack_to_global
from ..kinematics import U_S_MIN, U_S_MIN_PROP, HorizonModel

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolveResult:
    x: np.ndarray
    value: float
    iterations: int
    stationarity: float
    converged: bool


def plan_bounds(n_ships: int, horizon: int, ego: int, y_max: float, chi_prop_max: float,
                u_s_min: float = U_S_MIN, u_s_min_prop: float = U_S_MIN_PROP):
    lo = np.empty((n_ships, horizon, 2))
    hi = np.empty((n_ships, horizon, 2))
    lo[:, :, 0], hi[:, :, 0] = 0.0, chi_prop_max
    lo[:, :, 1], hi[:, :, 1] = u_s_min_prop, 1.0
    lo[ego, :, 0], hi[ego, :, 0] = -y_max, y_max
    lo[ego, :, 1] = u_s_min
    return lo, hi


def projected_gradient_norm(x, g, lo, hi) -> float:
    return float(np.linalg.norm(x - np.clip(x - g, lo, hi)))


def projected_gradient(fun, x0, lo, hi, tol=1e-6, max_iter=500, f0=None):
    """Projected gradient with Barzilai-Borwein steps and Armijo backtracking.

    ``fun(x) -> (value, grad)``. Stops when the projected-gradient norm drops
    below ``tol`` or after ``max_iter`` iterations.
    """
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    x = np.clip(np.asarray(x0, dtype=float), lo, hi)

    def stat(y, g):
        return projected_gradient_norm(y, g, lo, hi)

    x, f, g, it = _pg_until(fun, x, lo, hi, stat, tol, max_iter, f0)
    s = stat(x, g)
    return SolveResult(x, float(f), it, s, s <= tol)


def local_solve(fun, x0, lo, hi, tol=1e-6, max_iter=400, method="lbfgsb", scale=None):
    """Minimise a smooth function over a box.

    ``method="lbfgsb"`` uses limited-memory curvature (scipy's L-BFGS-B) and
    finishes with projected-gradient iterations when its result misses the
    stationarity tolerance; ``method="pg"`` uses projected gradient only.
    ``scale`` (per-variable, positive) rescales the search space, which
    helps when variables carry different units. Stationarity is always
    reported as the projected-gradient norm in the original variables, and
    the returned point is always inside the box.
    """
    shape = np.shape(x0)
    lo_f, hi_f = np.ravel(lo).astype(float), np.ravel(hi).astype(float)
    sc = np.ones_like(lo_f) if scale is None else np.ravel(scale).astype(float)
    if np.any(sc <= 0):
        raise ValueError("scale entries must be positive")
    x0_f = np.clip(np.ravel(x0).astype(float), lo_f, hi_f)

    def flat(y):
        f, g = fun((y * sc).reshape(shape))
        if not math.isfinite(f):
            raise SolverError("non-finite objective")
        return f, np.ravel(g) * sc

    def stationarity(y, gy):
        return projected_gradient_norm(y * sc, gy / sc, lo_f, hi_f)

    lo_s, hi_s = lo_f / sc, hi_f / sc
    y0 = x0_f / sc
    if method == "pg":
        y, f, g, iters = _pg_until(flat, y0, lo_s, hi_s, stationarity, tol, max_iter)
    elif method == "lbfgsb":
        out = minimize(flat, y0, jac=True, method="L-BFGS-B", bounds=list(zip(lo_s, hi_s)),
                       options={"maxiter": max_iter, "ftol": 1e-15, "gtol": 1e-12, "maxcor": 20})
        y = np.clip(out.x, lo_s, hi_s)
        f, g = flat(y)
        iters = int(out.nit)
        if stationarity(y, g) > tol and iters < max_iter:
            y, f, g, more = _pg_until(flat, y, lo_s, hi_s, stationarity, tol, max_iter - iters, (f, g))
            iters += more
    else:
        raise ValueError(f"unknown solver method {method!r}")
    x = np.clip(y * sc, lo_f, hi_f)
    stat = stationarity(x / sc, g)
    return SolveResult(x.reshape(shape), float(f), iters, stat, stat <= tol)


def _pg_until(flat, y, lo, hi, stationarity, tol, max_iter, f0=None):
    """Projected-gradient steps until ``stationarity(y, g) <= tol``."""
    f, g = flat(y) if f0 is None else f0
    it = 0
    step = 1.0 / max(np.linalg.norm(g), 1.0)
    while it < max_iter and stationarity(y, g) > tol:
        it += 1
        while True:
            y_new = np.clip(y - step * g, lo, hi)
            d = y_new - y
            f_new, g_new = flat(y_new)
            # the rounding allowance lets the search finish below the noise floor of f
            slack = 4.0 * np.finfo(float).eps * max(1.0, abs(f))
            if f_new <= f + 1e-4 * np.dot(g, d) + slack or np.dot(d, d) < 1e-30:
                break
            step *= 0.5
        if np.dot(d, d) < 1e-30:
            break
        sy = np.dot(d, g_new - g)
        step = np.dot(d, d) / sy if sy > 1e-16 else 2.0 * step
        step = min(max(step, 1e-12), 1e12)
        y, f, g = y_new, f_new, g_new
    return y, f, g, it


@dataclass
class CcasLocalProblem:
    """One ship's collision-avoidance MPC as an ADMM local problem.

    ``initial`` holds every ship's pose in this ship's path frame at the
    start of the horizon; ``segment`` is this ship's active segment. The
    decision ``w`` is the control plan of shape ``(M, N, 2)``.
    """

    initial: np.ndarray
    model: HorizonModel
    weights: CostWeights
    risk: object
    segment: WaypointSegment
    lower: np.ndarray
    upper: np.ndarray
    tol: float = 1e-6
    max_iter: int = 400
    method: str = "lbfgsb"

    def transformed(self, plan) -> np.ndarray:
        from ..kinematics import rollout

        return stack_to_global(rollout(self.initial, plan, self.model), self.segment)

    def objective(self, plan) -> float:
        return evaluate(plan, self.initial, self.model, self.weights, self.risk, need_grad=False).cost

    def lagrangian(self, plan, z, xi, beta):
        ctx = LagrangianContext(z, xi, beta, self.segment)
        e = evaluate(plan, self.initial, self.model, self.weights, self.risk, ctx)
        return e.value, e.grad

    def solve(self, plan, z_half, xi, beta):
        ctx = LagrangianContext(z_half, xi, beta, self.segment)

        def fun(p):
            e = evaluate(p, self.initial, self.model, self.weights, self.risk, ctx)
            return e.value, e.grad

        res = local_solve(fun, plan, self.lower, self.upper, self.tol, self.max_iter, self.method,
                          scale=self.upper - self.lower)
        if not res.converged:
            log.debug("ship %d local solve hit the iteration cap (stationarity %.2e)",
                      self.model.ego, res.stationarity)
        return res.x, {"iterations": res.iterations, "stationarity": res.stationarity,
                       "converged": res.converged, "value": res.value}
