"""Euler prediction models for the own ship and its neighbours.

A control plan is an array of shape ``(M, N, 2)``. Row ``ego`` holds the own
ship's ``(u_y, u_s)``: cross-track offset command and speed scale. Every other
row holds the proposal ``(chi_d, u_s)`` for that neighbour: course adjustment
and speed scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numba
import numpy as np

from .frames import PathPose

U_S_MIN = 0.4
U_S_MIN_PROP = 0.6


@dataclass(frozen=True)
class OwnShipParams:
    U_d: float = 3.0
    chi_max: float = math.pi / 6
    K_e: float = 0.05
    T_1: float = 30.0
    dT: float = 20.0

    def __post_init__(self):
        if not self.U_d > 0:
            raise ValueError("U_d must be positive")
        if not 0 < self.chi_max <= math.pi / 2:
            raise ValueError("chi_max must lie in (0, pi/2]")
        if not self.K_e > 0:
            raise ValueError("K_e must be positive")
        if not self.T_1 >= self.dT > 0:
            raise ValueError("need T_1 >= dT > 0")


@dataclass(frozen=True)
class NeighborParams:
    U_j: float
    T_j: float
    chi_nom: float = 0.0

    def __post_init__(self):
        if not self.U_j > 0:
            raise ValueError("U_j must be positive")
        if not self.T_j > 0:
            raise ValueError("T_j must be positive")


class OwnControl(NamedTuple):
    u_y: float
    u_s: float


class NeighborControl(NamedTuple):
    u_s: float
    chi_d: float


def step_own(p: PathPose, u: OwnControl, params: OwnShipParams) -> PathPose:
    x, y, chi = p
    dT = params.dT
    v = u[1] * params.U_d * dT
    guide = params.chi_max * math.tanh(params.K_e * (u[0] - y))
    return PathPose(
        x + v * math.cos(chi),
        y + v * math.sin(chi),
        chi + dT / params.T_1 * (guide - chi),
    )


def step_neighbor(p: PathPose, u: NeighborControl, params: NeighborParams, dT: float) -> PathPose:
    x, y, chi = p
    v = u[0] * params.U_j * dT
    return PathPose(
        x + v * math.cos(chi),
        y + v * math.sin(chi),
        chi + dT / params.T_j * (u[1] + params.chi_nom - chi),
    )


@dataclass(frozen=True)
class HorizonModel:
    """Per-ship model data for one agent's horizon prediction.

    ``speed``, ``tconst`` and ``chi_nom`` have one entry per ship; the ego
    entries of ``tconst`` and ``speed`` are T_1 and U_d, and its ``chi_nom``
    is ignored.
    """

    ego: int
    speed: np.ndarray
    tconst: np.ndarray
    chi_nom: np.ndarray
    chi_max: float
    K_e: float
    dT: float

    @property
    def n_ships(self) -> int:
        return len(self.speed)

    @classmethod
    def build(cls, ego: int, own: OwnShipParams, neighbors: Sequence[NeighborParams | None]):
        m = len(neighbors)
        speed = np.empty(m)
        tconst = np.empty(m)
        chi_nom = np.zeros(m)
        for j, nb in enumerate(neighbors):
            if j == ego:
                speed[j], tconst[j] = own.U_d, own.T_1
            else:
                speed[j], tconst[j], chi_nom[j] = nb.U_j, nb.T_j, nb.chi_nom
        return cls(ego, speed, tconst, chi_nom, own.chi_max, own.K_e, own.dT)


@numba.njit(cache=True)
def _forward(init, plan, ego, speed, tconst, chi_nom, chi_max, K_e, dT):
    m, n = plan.shape[0], plan.shape[1]
    out = np.empty((m, n + 1, 3))
    for j in range(m):
        out[j, 0, 0] = init[j, 0]
        out[j, 0, 1] = init[j, 1]
        out[j, 0, 2] = init[j, 2]
        c = dT / tconst[j]
        v = speed[j] * dT
        for k in range(n):
            x = out[j, k, 0]
            y = out[j, k, 1]
            chi = out[j, k, 2]
            a = plan[j, k, 0]
            us = plan[j, k, 1]
            out[j, k + 1, 0] = x + us * v * math.cos(chi)
            out[j, k + 1, 1] = y + us * v * math.sin(chi)
            if j == ego:
                target = chi_max * math.tanh(K_e * (a - y))
            else:
                target = a + chi_nom[j]
            out[j, k + 1, 2] = chi + c * (target - chi)
    return out


@numba.njit(cache=True)
def _adjoint(traj, plan, gstate, ego, speed, tconst, chi_max, K_e, dT):
    # Reverse accumulation of d(objective)/d(plan) given d(objective)/d(states).
    m, n = plan.shape[0], plan.shape[1]
    gplan = np.zeros((m, n, 2))
    for j in range(m):
        c = dT / tconst[j]
        v = speed[j] * dT
        lx = gstate[j, n, 0]
        ly = gstate[j, n, 1]
        lc = gstate[j, n, 2]
        for k in range(n - 1, -1, -1):
            y = traj[j, k, 1]
            chi = traj[j, k, 2]
            a = plan[j, k, 0]
            us = plan[j, k, 1]
            cs = math.cos(chi)
            sn = math.sin(chi)
            gplan[j, k, 1] = (lx * cs + ly * sn) * v
            if j == ego:
                th = math.tanh(K_e * (a - y))
                dtarget = chi_max * (1.0 - th * th) * K_e
                gplan[j, k, 0] = lc * c * dtarget
                ly_new = gstate[j, k, 1] + ly - lc * c * dtarget
            else:
                gplan[j, k, 0] = lc * c
                ly_new = gstate[j, k, 1] + ly
            lc_new = gstate[j, k, 2] + lc * (1.0 - c) + us * v * (ly * cs - lx * sn)
            lx = gstate[j, k, 0] + lx
            ly = ly_new
            lc = lc_new
    return gplan


def rollout(initial, plan, model: HorizonModel) -> np.ndarray:
    """Iterate the ship models over the horizon; returns shape (M, N+1, 3)."""
    init = np.ascontiguousarray(initial, dtype=float).reshape(-1, 3)
    plan = np.ascontiguousarray(plan, dtype=float)
    if plan.ndim != 3 or plan.shape[2] != 2:
        raise ValueError(f"plan must have shape (M, N, 2), got {plan.shape}")
    if plan.shape[0] != init.shape[0] or plan.shape[0] != model.n_ships:
        raise ValueError("plan, initial poses and model disagree on the number of ships")
    return _forward(init, plan, model.ego, model.speed, model.tconst, model.chi_nom,
                    model.chi_max, model.K_e, model.dT)


def rollout_vjp(traj, plan, grad_states, model: HorizonModel) -> np.ndarray:
    """Gradient w.r.t. the plan of a function whose state gradient is given."""
    return _adjoint(np.ascontiguousarray(traj), np.ascontiguousarray(plan, dtype=float),
                    np.ascontiguousarray(grad_states, dtype=float).reshape(traj.shape),
                    model.ego, model.speed, model.tconst, model.chi_max, model.K_e, model.dT)


def neutral_plan(n_ships: int, horizon: int, ego: int, u_y: float = 0.0) -> np.ndarray:
    """Plan with full speed, no proposals and a constant own offset."""
    plan = np.zeros((n_ships, horizon, 2))
    plan[:, :, 1] = 1.0
    plan[ego, :, 0] = u_y
    return plan
