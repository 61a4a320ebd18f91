"""Pairwise collision risk over the horizon and the rectangular safety index."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .frames import InertialPose, WaypointSegment, to_path_frame


@dataclass(frozen=True)
class RiskParams:
    K_ca: float = 10.0
    K_d: float = 0.05
    alpha_x: float = (4 * 51.5) ** 2
    alpha_y: float = (4 * 8.6) ** 2

    def __post_init__(self):
        if not self.K_ca > 0:
            raise ValueError("K_ca must be positive")
        if not self.K_d >= 0:
            raise ValueError("K_d must be nonnegative")
        if not (self.alpha_x > 0 and self.alpha_y > 0):
            raise ValueError("alpha_x and alpha_y must be positive")

    @classmethod
    def for_hull(cls, length: float, beam: float, K_ca: float = 10.0, K_d: float = 0.05):
        return cls(K_ca, K_d, (4 * length) ** 2, (4 * beam) ** 2)


@dataclass(frozen=True)
class SafetyDomain:
    d_x: float = 51.5
    d_y: float = 8.6

    def __post_init__(self):
        if not (self.d_x > 0 and self.d_y > 0):
            raise ValueError("safety domain half-sizes must be positive")


def pair_risk(p_i, p_j, k: int, rp: RiskParams) -> float:
    if k < 0:
        raise ValueError("step index must be nonnegative")
    dx = p_i[0] - p_j[0]
    dy = p_i[1] - p_j[1]
    return (rp.K_ca / math.sqrt(1.0 + rp.K_d * k)
            * math.exp(-dx * dx / rp.alpha_x) * math.exp(-dy * dy / rp.alpha_y))


def _param_arrays(rp, n_ships: int):
    if isinstance(rp, RiskParams):
        rp = [rp] * n_ships
    if len(rp) != n_ships:
        raise ValueError("need one RiskParams per ship")
    kca = np.array([r.K_ca for r in rp])
    kd = np.array([r.K_d for r in rp])
    ax = np.array([r.alpha_x for r in rp])
    ay = np.array([r.alpha_y for r in rp])
    return kca, kd, ax, ay


def cumulative_risk(stack, ego: int, rp) -> float:
    value, _ = cumulative_risk_and_grad(stack, ego, rp, need_grad=False)
    return value


def cumulative_risk_and_grad(stack, ego: int, rp, need_grad: bool = True):
    """Sum of pair risks over all N + 1 stack slots against every other ship.

    Slot ``k`` is discounted with step index ``k``. ``rp`` is either one
    RiskParams or a sequence indexed by target ship (the shape parameters
    belong to the target). Returns ``(value, grad)`` with ``grad`` shaped like
    the stack.
    """
    traj = np.asarray(stack, dtype=float)
    m, n1 = traj.shape[0], traj.shape[1]
    grad = np.zeros_like(traj) if need_grad else None
    if m < 2:
        return 0.0, grad
    kca, kd, ax, ay = _param_arrays(rp, m)
    others = np.array([j for j in range(m) if j != ego])
    k = np.arange(n1)
    dx = traj[ego, :, 0][None, :] - traj[others, :, 0]
    dy = traj[ego, :, 1][None, :] - traj[others, :, 1]
    ax_o = ax[others][:, None]
    ay_o = ay[others][:, None]
    amp = kca[others][:, None] / np.sqrt(1.0 + kd[others][:, None] * k[None, :])
    r = amp * np.exp(-dx * dx / ax_o - dy * dy / ay_o)
    value = float(r.sum())
    if need_grad:
        gx = -2.0 * dx / ax_o * r
        gy = -2.0 * dy / ay_o * r
        grad[ego, :, 0] = gx.sum(axis=0)
        grad[ego, :, 1] = gy.sum(axis=0)
        grad[others, :, 0] = -gx
        grad[others, :, 1] = -gy
    return value, grad


def safety_index(poses, ego: int, dom: SafetyDomain, seg: WaypointSegment | None = None) -> float:
    """Signed clearance of the nearest neighbour from the ego safety rectangle.

    Offsets are measured in the ego path frame of ``seg``; without a segment
    the rectangle is aligned with the ego course.
    """
    if len(poses) < 2:
        return math.inf
    me = InertialPose(*poses[ego])
    if seg is None:
        seg = WaypointSegment(me.x_n, me.y_n, me.chi_n)
    pe = to_path_frame(me, seg)
    best = math.inf
    for j, q in enumerate(poses):
        if j == ego:
            continue
        pj = to_path_frame(InertialPose(*q), seg)
        eps = max(abs(pe.x - pj.x) - dom.d_x, abs(pe.y - pj.y) - dom.d_y)
        best = min(best, eps)
    return best
