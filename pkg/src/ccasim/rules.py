"""Encounter classification under inland-waterway give-way rules.

Three situations are recognised. Head-on and crossing priority goes to the
ship keeping to the starboard side of its fairway; failing that, head-on
ships negotiate (they pass port to port) and in a crossing the ship
approaching from port gives way. An overtaking ship always gives way.
"""

from __future__ import annotations

import enum
import math
from typing import NamedTuple

from .errors import ConfigError
from .frames import InertialPose, WaypointSegment, to_path_frame, wrap_angle

HEAD_ON_COURSE = math.radians(165.0)
HEAD_ON_BEARING = math.radians(22.5)
ABAFT_SECTOR = math.radians(112.5)

K_SO_DEFAULT = 0.1
K_GW_DEFAULT = 50.0


class Kind(enum.Enum):
    HEAD_ON = "HeadOn"
    CROSSING = "Crossing"
    OVERTAKING = "Overtaking"
    NONE = "None"


class Role(enum.Enum):
    GIVE_WAY = "GiveWay"
    STAND_ON = "StandOn"
    NEGOTIATE = "Negotiate"


class Encounter(NamedTuple):
    kind: Kind
    ego_role: Role


NO_ENCOUNTER = Encounter(Kind.NONE, Role.NEGOTIATE)


def follows_starboard_side(pose, seg: WaypointSegment, y_lane: float = 0.0) -> bool:
    return to_path_frame(InertialPose(*pose), seg).y > y_lane


def relative_bearing(frm, to) -> float:
    """Bearing of ``to`` seen from ``frm``, relative to the course of ``frm``."""
    return wrap_angle(math.atan2(to[1] - frm[1], to[0] - frm[0]) - frm[2])


def _velocity(pose, speed):
    return speed * math.cos(pose[2]), speed * math.sin(pose[2])


def is_closing(own, tgt, own_speed, tgt_speed) -> bool:
    vo = _velocity(own, own_speed)
    vt = _velocity(tgt, tgt_speed)
    rx, ry = tgt[0] - own[0], tgt[1] - own[1]
    return rx * (vt[0] - vo[0]) + ry * (vt[1] - vo[1]) < 0.0


def paths_cross(own, tgt, own_speed, tgt_speed, horizon: float) -> bool:
    """Whether both course lines meet ahead of both ships within ``horizon`` s."""
    ox, oy = math.cos(own[2]), math.sin(own[2])
    tx, ty = math.cos(tgt[2]), math.sin(tgt[2])
    det = ox * (-ty) - oy * (-tx)
    if abs(det) < 1e-9:
        return False
    rx, ry = tgt[0] - own[0], tgt[1] - own[1]
    s_own = (rx * (-ty) - ry * (-tx)) / det
    s_tgt = (ox * ry - oy * rx) / det
    if s_own < 0 or s_tgt < 0:
        return False
    return s_own <= own_speed * horizon and s_tgt <= tgt_speed * horizon


def classify(own, own_seg: WaypointSegment, tgt, tgt_seg: WaypointSegment,
             own_speed: float, tgt_speed: float, horizon: float = 400.0,
             y_lane: float = 0.0) -> Encounter:
    """Classify the encounter from ``own``'s point of view.

    Poses are inertial ``(x_n, y_n, chi_n)``; speeds are the nominal surge
    speeds; ``horizon`` bounds the look-ahead for crossing paths.
    """
    if not is_closing(own, tgt, own_speed, tgt_speed):
        return NO_ENCOUNTER
    b_own = relative_bearing(own, tgt)
    b_tgt = relative_bearing(tgt, own)
    dcourse = abs(wrap_angle(tgt[2] - own[2]))
    fo = follows_starboard_side(own, own_seg, y_lane)
    ft = follows_starboard_side(tgt, tgt_seg, y_lane)

    if dcourse >= HEAD_ON_COURSE and abs(b_own) <= HEAD_ON_BEARING and abs(b_tgt) <= HEAD_ON_BEARING:
        if fo and not ft:
            return Encounter(Kind.HEAD_ON, Role.STAND_ON)
        if ft and not fo:
            return Encounter(Kind.HEAD_ON, Role.GIVE_WAY)
        return Encounter(Kind.HEAD_ON, Role.NEGOTIATE)

    if abs(b_tgt) > ABAFT_SECTOR:
        return Encounter(Kind.OVERTAKING, Role.GIVE_WAY)
    if abs(b_own) > ABAFT_SECTOR:
        return Encounter(Kind.OVERTAKING, Role.STAND_ON)

    if paths_cross(own, tgt, own_speed, tgt_speed, horizon):
        if fo and not ft:
            return Encounter(Kind.CROSSING, Role.STAND_ON)
        if ft and not fo:
            return Encounter(Kind.CROSSING, Role.GIVE_WAY)
        if b_own > 0 and b_tgt < 0:
            return Encounter(Kind.CROSSING, Role.GIVE_WAY)
        if b_own < 0 and b_tgt > 0:
            return Encounter(Kind.CROSSING, Role.STAND_ON)
        return Encounter(Kind.CROSSING, Role.NEGOTIATE)

    return NO_ENCOUNTER


def check_weights(K_SO: float, K_GW: float) -> None:
    if not 0.0 < K_SO < 1.0:
        raise ConfigError(f"K_SO must lie in (0, 1), got {K_SO}")
    if not K_GW > 1.0:
        raise ConfigError(f"K_GW must exceed 1, got {K_GW}")


def priority_weight(e: Encounter, K_SO: float = K_SO_DEFAULT, K_GW: float = K_GW_DEFAULT) -> float:
    check_weights(K_SO, K_GW)
    if e.ego_role is Role.STAND_ON:
        return K_SO
    if e.ego_role is Role.GIVE_WAY:
        return K_GW
    return 1.0
