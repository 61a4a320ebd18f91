"""Distributed collision avoidance for ships negotiating through nonconvex ADMM."""

from .errors import ConfigError, DeadlockFault, ProtocolError, SolverError
from .frames import InertialPose, PathPose, WaypointSegment

__version__ = "0.1.0"

__all__ = ["ConfigError", "DeadlockFault", "InertialPose", "PathPose", "ProtocolError", "SolverError",
           "WaypointSegment", "__version__"]
