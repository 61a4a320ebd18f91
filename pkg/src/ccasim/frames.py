"""Inertial and path-frame coordinate transforms.

The inertial frame is north-east (x north, y east, course clockwise from
north). A path frame has its origin at the previous waypoint and its x axis
along the active guideline, so y is positive to starboard of the guideline
direction.

Trajectory stacks are arrays of shape ``(M, N + 1, 3)``: ship-major, then
time, with the pose components ``(x, y, chi)`` innermost. Flattening in C
order gives the consensus-vector layout.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np


class InertialPose(NamedTuple):
    x_n: float
    y_n: float
    chi_n: float


class WaypointSegment(NamedTuple):
    """Previous active waypoint and the guideline direction leaving it."""

    x_wp: float
    y_wp: float
    chi_wp: float


class PathPose(NamedTuple):
    x: float
    y: float
    chi: float


def wrap_angle(a):
    """Map angles to (-pi, pi]. Works on scalars and arrays."""
    w = np.mod(np.asarray(a, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    w = np.where(w == -np.pi, np.pi, w)
    if np.ndim(w) == 0:
        return float(w)
    return w


def rotation(chi_wp: float) -> np.ndarray:
    """The 3x3 matrix taking inertial offsets into the path frame."""
    c, s = math.cos(chi_wp), math.sin(chi_wp)
    return np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])


def to_path_frame(eta: InertialPose, seg: WaypointSegment) -> PathPose:
    c, s = math.cos(seg.chi_wp), math.sin(seg.chi_wp)
    dx = eta[0] - seg.x_wp
    dy = eta[1] - seg.y_wp
    return PathPose(c * dx + s * dy, -s * dx + c * dy, wrap_angle(eta[2] - seg.chi_wp))


def to_inertial(p: PathPose, seg: WaypointSegment) -> InertialPose:
    c, s = math.cos(seg.chi_wp), math.sin(seg.chi_wp)
    return InertialPose(
        seg.x_wp + c * p[0] - s * p[1],
        seg.y_wp + s * p[0] + c * p[1],
        wrap_angle(p[2] + seg.chi_wp),
    )


def _as_poses(stack) -> np.ndarray:
    arr = np.asarray(stack, dtype=float)
    if arr.size % 3 != 0:
        raise ValueError(f"stack length {arr.size} is not a multiple of 3")
    return arr.reshape(-1, 3)


def stack_to_global(pstack, seg: WaypointSegment) -> np.ndarray:
    """Inverse-rotate every pose of a path-frame stack and add the waypoint.

    This is the linear map used by the consensus constraint, so courses are
    shifted but deliberately not re-wrapped. Returns a flat vector.
    """
    poses = _as_poses(pstack)
    c, s = math.cos(seg.chi_wp), math.sin(seg.chi_wp)
    out = np.empty_like(poses)
    out[:, 0] = seg.x_wp + c * poses[:, 0] - s * poses[:, 1]
    out[:, 1] = seg.y_wp + s * poses[:, 0] + c * poses[:, 1]
    out[:, 2] = seg.chi_wp + poses[:, 2]
    return out.ravel()


def global_to_stack(xi, seg: WaypointSegment) -> np.ndarray:
    """Inverse of :func:`stack_to_global`; returns a flat path-frame vector."""
    poses = _as_poses(xi)
    c, s = math.cos(seg.chi_wp), math.sin(seg.chi_wp)
    dx = poses[:, 0] - seg.x_wp
    dy = poses[:, 1] - seg.y_wp
    out = np.empty_like(poses)
    out[:, 0] = c * dx + s * dy
    out[:, 1] = -s * dx + c * dy
    out[:, 2] = poses[:, 2] - seg.chi_wp
    return out.ravel()


def stack_vjp(grad_global, seg: WaypointSegment) -> np.ndarray:
    """Pull a gradient w.r.t. the global vector back onto the path stack.

    ``stack_to_global`` is affine with an orthogonal linear part, so the
    transpose equals the forward rotation.
    """
    g = _as_poses(grad_global)
    c, s = math.cos(seg.chi_wp), math.sin(seg.chi_wp)
    out = np.empty_like(g)
    out[:, 0] = c * g[:, 0] + s * g[:, 1]
    out[:, 1] = -s * g[:, 0] + c * g[:, 1]
    out[:, 2] = g[:, 2]
    return out.ravel()
