import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ccasim.frames import (InertialPose, PathPose, WaypointSegment, global_to_stack, stack_to_global,
                           stack_vjp, to_inertial, to_path_frame, wrap_angle)

coord = st.floats(-1e4, 1e4, allow_nan=False)
angle = st.floats(-10.0, 10.0, allow_nan=False)


def test_identity_segment_keeps_pose():
    p = to_path_frame(InertialPose(12.0, -3.0, 0.4), WaypointSegment(0.0, 0.0, 0.0))
    assert p == pytest.approx((12.0, -3.0, 0.4))


def test_heading_east_segment():
    # guideline pointing east: a point further east is ahead, a point south is to starboard
    seg = WaypointSegment(0.0, 0.0, math.pi / 2)
    assert to_path_frame(InertialPose(0.0, 10.0, math.pi / 2), seg) == pytest.approx((10.0, 0.0, 0.0))
    assert to_path_frame(InertialPose(-5.0, 0.0, 0.0), seg) == pytest.approx((0.0, 5.0, -math.pi / 2))


def test_wrap_angle_range():
    assert wrap_angle(math.pi) == pytest.approx(math.pi)
    assert wrap_angle(-math.pi) == pytest.approx(math.pi)
    assert wrap_angle(3 * math.pi / 2) == pytest.approx(-math.pi / 2)
    arr = wrap_angle(np.linspace(-20, 20, 101))
    assert np.all(arr > -math.pi) and np.all(arr <= math.pi)


@given(coord, coord, angle, coord, coord, angle)
def test_round_trip(x, y, chi, xw, yw, cw):
    seg = WaypointSegment(xw, yw, cw)
    back = to_inertial(to_path_frame(InertialPose(x, y, chi), seg), seg)
    assert back.x_n == pytest.approx(x, abs=1e-8)
    assert back.y_n == pytest.approx(y, abs=1e-8)
    assert abs(wrap_angle(back.chi_n - chi)) < 1e-9


def test_single_pose_stack_matches_to_inertial():
    seg = WaypointSegment(100.0, -40.0, 1.1)
    p = PathPose(30.0, 4.0, 0.2)
    g = stack_to_global(np.array([p]), seg)
    e = to_inertial(p, seg)
    assert g[:2] == pytest.approx(e[:2])
    assert wrap_angle(g[2] - e.chi_n) == pytest.approx(0.0, abs=1e-12)


def test_stack_layout_is_ship_major():
    stack = np.arange(2 * 3 * 3, dtype=float).reshape(2, 3, 3)
    g = stack_to_global(stack, WaypointSegment(0.0, 0.0, 0.0))
    assert g == pytest.approx(stack.ravel())


def test_stack_courses_not_rewrapped():
    g = stack_to_global(np.array([[0.0, 0.0, 3.0]]), WaypointSegment(0.0, 0.0, 3.0))
    assert g[2] == pytest.approx(6.0)


def test_global_to_stack_inverse(rng):
    seg = WaypointSegment(*rng.normal(size=3) * [500, 500, 2])
    stack = rng.normal(size=(3, 5, 3)) * 100
    assert global_to_stack(stack_to_global(stack, seg), seg) == pytest.approx(stack.ravel())


def test_stack_vjp_is_transpose(rng):
    seg = WaypointSegment(10.0, 20.0, 0.7)
    a = rng.normal(size=12)
    b = rng.normal(size=12)
    # linear part of stack_to_global
    lin = stack_to_global(a, seg) - stack_to_global(np.zeros(12), seg)
    assert np.dot(lin, b) == pytest.approx(np.dot(a, stack_vjp(b, seg)))


def test_bad_stack_length():
    with pytest.raises(ValueError):
        stack_to_global(np.zeros(4), WaypointSegment(0, 0, 0))
