"""MPC objective, augmented Lagrangian and its exact gradient.

All gradients are analytic: state sensitivities are pulled back through the
rollout by reverse accumulation (see :func:`kinematics.rollout_vjp`).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .frames import WaypointSegment, stack_to_global, stack_vjp
from .kinematics import HorizonModel, rollout, rollout_vjp
from .risk import cumulative_risk_and_grad


@dataclass(frozen=True)
class CostWeights:
    """Weights of the own-ship objective.

    ``alpha[j]`` is the priority weight on proposals made to ship ``j``; the
    ego entry is ignored. ``u_y_prev`` seeds the first offset-rate term.
    """

    K_y: float = 1e-2
    K_s: float = 2e-2
    K_b: float = 1e-2
    alpha: np.ndarray = field(default_factory=lambda: np.ones(1))
    u_y_prev: float = 0.0

    def __post_init__(self):
        if not (self.K_y > 0 and self.K_s > 0):
            raise ValueError("K_y and K_s must be positive")
        if self.K_b < 0:
            raise ValueError("K_b must be nonnegative")
        object.__setattr__(self, "alpha", np.asarray(self.alpha, dtype=float))


@dataclass(frozen=True)
class LagrangianContext:
    z: np.ndarray
    xi: np.ndarray
    beta: float
    segment: WaypointSegment

    def __post_init__(self):
        if not self.beta >= 0:
            raise ValueError("beta must be nonnegative")
        if np.shape(self.z) != np.shape(self.xi):
            raise ValueError("multiplier and consensus vectors differ in length")


def _alpha_for(w: CostWeights, n_ships: int) -> np.ndarray:
    a = w.alpha
    if a.size == 1:
        return np.full(n_ships, float(a[0]))
    if a.size != n_ships:
        raise ValueError(f"alpha has {a.size} entries for {n_ships} ships")
    return a


def effort_cost_and_grad(plan, w: CostWeights, ego: int):
    plan = np.asarray(plan, dtype=float)
    m = plan.shape[0]
    grad = np.zeros_like(plan)
    uy = plan[ego, :, 0]
    us = plan[ego, :, 1]
    duy = np.diff(uy, prepend=w.u_y_prev)
    value = w.K_y * np.dot(duy, duy) + w.K_s * np.sum((1.0 - us) ** 2)
    g = 2.0 * w.K_y * duy
    grad[ego, :, 0] = g
    grad[ego, :-1, 0] -= g[1:]
    grad[ego, :, 1] = -2.0 * w.K_s * (1.0 - us)
    alpha = _alpha_for(w, m)
    for j in range(m):
        if j == ego:
            continue
        chi_d = plan[j, :, 0]
        gap = 1.0 - plan[j, :, 1]
        value += alpha[j] * (np.dot(chi_d, chi_d) + np.dot(gap, gap))
        grad[j, :, 0] = 2.0 * alpha[j] * chi_d
        grad[j, :, 1] = -2.0 * alpha[j] * gap
    return float(value), grad


def effort_cost(plan, w: CostWeights, ego: int = 0) -> float:
    return effort_cost_and_grad(plan, w, ego)[0]


def behavior_cost_and_grad(plan, w: CostWeights, ego: int):
    """Starboard-preference surrogate: penalise port-side offset commands."""
    plan = np.asarray(plan, dtype=float)
    grad = np.zeros_like(plan)
    port = np.maximum(0.0, -plan[ego, :, 0])
    grad[ego, :, 0] = -2.0 * w.K_b * port
    return float(w.K_b * np.dot(port, port)), grad


def behavior_cost(plan, w: CostWeights, ego: int = 0) -> float:
    return behavior_cost_and_grad(plan, w, ego)[0]


def total_cost(stack, plan, w: CostWeights, rp, ego: int = 0) -> float:
    risk, _ = cumulative_risk_and_grad(stack, ego, rp, need_grad=False)
    return risk + effort_cost(plan, w, ego) + behavior_cost(plan, w, ego)


@dataclass
class Evaluation:
    value: float
    grad: np.ndarray
    stack: np.ndarray
    cost: float
    residual: np.ndarray


def evaluate(plan, initial, model: HorizonModel, w: CostWeights, rp,
             ctx: LagrangianContext | None = None, need_grad: bool = True) -> Evaluation:
    """Augmented Lagrangian of one agent at ``plan`` (the bare cost if ctx is None)."""
    plan = np.asarray(plan, dtype=float)
    ego = model.ego
    stack = rollout(initial, plan, model)
    risk, g_states = cumulative_risk_and_grad(stack, ego, rp, need_grad)
    eff, g_eff = effort_cost_and_grad(plan, w, ego)
    beh, g_beh = behavior_cost_and_grad(plan, w, ego)
    cost = risk + eff + beh
    value = cost
    residual = None
    if ctx is not None:
        xi = np.asarray(ctx.xi, dtype=float)
        if xi.size != stack.size:
            raise ValueError(f"consensus vector has {xi.size} entries, stack has {stack.size}")
        residual = stack_to_global(stack, ctx.segment) - xi
        value += float(np.dot(ctx.z, residual) + 0.5 * ctx.beta * np.dot(residual, residual))
        if need_grad:
            g_states = g_states + stack_vjp(ctx.z + ctx.beta * residual, ctx.segment).reshape(stack.shape)
    grad = None
    if need_grad:
        grad = rollout_vjp(stack, plan, g_states, model) + g_eff + g_beh
    return Evaluation(value, grad, stack, cost, residual)


def augmented_lagrangian(plan, ctx: LagrangianContext, initial, model: HorizonModel,
                         w: CostWeights, rp) -> float:
    return evaluate(plan, initial, model, w, rp, ctx, need_grad=False).value


def lagrangian_gradient(plan, ctx: LagrangianContext, initial, model: HorizonModel,
                        w: CostWeights, rp) -> np.ndarray:
    return evaluate(plan, initial, model, w, rp, ctx).grad
