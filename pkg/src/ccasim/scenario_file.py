"""YAML scenario files: schema validation with line-anchored diagnostics.

Units: positions and distances in metres, times in seconds, angles in
radians, speeds in metres per second. Unknown keys are rejected.
"""

from __future__ import annotations

import math
import re
from dataclasses import asdict

import yaml

from .cost import CostWeights
from .errors import ConfigError
from .frames import InertialPose
from .kinematics import OwnShipParams
from .nadmm.core import SplittingConfig
from .network import NetConfig
from .risk import SafetyDomain
from .sim import Scenario, ShipConfig

NUM = (int, float)

# key -> (allowed python types, required)
SHIP_SCHEMA = {
    "name": ((str,), True),
    "start": ({"x_n": (NUM, True), "y_n": (NUM, True), "chi_n": (NUM, True)}, True),
    "waypoints": ("points", True),
    "params": ({"U_d": (NUM, False), "chi_max": (NUM, False), "K_e": (NUM, False),
                "T_1": (NUM, False), "dT": (NUM, False)}, False),
    "domain": ({"d_x": (NUM, False), "d_y": (NUM, False)}, False),
    "hull": ({"length": (NUM, False), "beam": (NUM, False)}, False),
}

SCHEMA = {
    "name": ((str,), True),
    "profile": ((str,), False),
    "duration": (NUM, True),
    "ccas_period": (NUM, False),
    "detection_range": (NUM, False),
    "horizon": ((int,), False),
    "y_max": (NUM, False),
    "chi_prop_max": (NUM, False),
    "async_jitter": (NUM, False),
    "solver": ((str,), False),
    "carry_multiplier": ((bool,), False),
    "latch_roles": ((bool,), False),
    "risk": ({"K_ca": (NUM, False), "K_d": (NUM, False), "alpha_x": (NUM, False),
              "alpha_y": (NUM, False)}, False),
    "rules": ({"K_SO": (NUM, False), "K_GW": (NUM, False)}, False),
    "weights": ({"K_y": (NUM, False), "K_s": (NUM, False), "K_b": (NUM, False)}, False),
    "splitting": ({"beta": (NUM, False), "lam": (NUM, False), "s_max": ((int,), False),
                   "tol_stat": (NUM, False), "max_solver_iter": ((int,), False),
                   "announce_multiplier": ((bool,), False)}, False),
    "net": ({"mode": ((str,), False), "T_delay": (NUM, False), "loss_p": (NUM, False),
             "seed": ((int,), False), "per_recipient": ((bool,), False),
             "deadlock_timeout": (NUM, False)}, False),
    "ships": ("ships", True),
}


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads exponent floats without a dot (``1e-06``), as JSON writes them."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"^[-+]?(?:[0-9]+(?:\.[0-9]*)?|\.[0-9]+)[eE][-+]?[0-9]+$"),
    list("-+0123456789."))


class _Marks:
    """Line numbers (1-based) of every node, keyed by its path in the document."""

    def __init__(self, root):
        self.lines = {}
        self._walk(root, ())

    def _walk(self, node, path):
        self.lines[path] = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                key = k.value
                self.lines[path + (key,)] = k.start_mark.line + 1
                self._walk(v, path + (key,))
                self.lines[path + (key,)] = k.start_mark.line + 1
        elif isinstance(node, yaml.SequenceNode):
            for i, v in enumerate(node.value):
                self._walk(v, path + (i,))

    def line(self, path) -> int:
        path = tuple(path)
        while path and path not in self.lines:
            path = path[:-1]
        return self.lines.get(path, 1)


def _fail(marks, path, msg, source):
    where = ".".join(str(p) for p in path) or "<document>"
    raise ConfigError(f"{source}:{marks.line(path)}: {where}: {msg}")


def _check_type(value, types, marks, path, source):
    if types is NUM:
        ok = isinstance(value, NUM) and not isinstance(value, bool)
    elif types == (int,):
        ok = isinstance(value, int) and not isinstance(value, bool)
    else:
        ok = isinstance(value, types)
    if not ok:
        names = "number" if types is NUM else "/".join(t.__name__ for t in types)
        _fail(marks, path, f"expected {names}, got {type(value).__name__}", source)
    if isinstance(value, float) and not math.isfinite(value):
        _fail(marks, path, "value must be finite", source)


def _check_mapping(data, schema, marks, path, source):
    if not isinstance(data, dict):
        _fail(marks, path, f"expected a mapping, got {type(data).__name__}", source)
    for key in data:
        if key not in schema:
            _fail(marks, path + (key,), f"unknown key {key!r}", source)
    for key, (rule, required) in schema.items():
        if key not in data:
            if required:
                _fail(marks, path, f"missing required key {key!r}", source)
            continue
        value = data[key]
        sub = path + (key,)
        if isinstance(rule, dict):
            _check_mapping(value, rule, marks, sub, source)
        elif rule == "points":
            if not isinstance(value, list) or len(value) < 2:
                _fail(marks, sub, "expected a list of at least two [x_n, y_n] points", source)
            for i, pt in enumerate(value):
                if not isinstance(pt, list) or len(pt) != 2:
                    _fail(marks, sub + (i,), "expected a [x_n, y_n] pair", source)
                for c, v in enumerate(pt):
                    _check_type(v, NUM, marks, sub + (i, c), source)
        elif rule == "ships":
            if not isinstance(value, list) or not value:
                _fail(marks, sub, "expected a non-empty list of ships", source)
            for i, ship in enumerate(value):
                _check_mapping(ship, SHIP_SCHEMA, marks, sub + (i,), source)
        else:
            _check_type(value, rule, marks, sub, source)


def _build(data, marks, source) -> Scenario:
    def guard(path, fn):
        try:
            return fn()
        except (ConfigError, ValueError, TypeError) as exc:
            _fail(marks, path, str(exc), source)

    ships = []
    for i, s in enumerate(data["ships"]):
        base = ("ships", i)
        params = guard(base + ("params",), lambda: OwnShipParams(**s.get("params", {})))
        domain = guard(base + ("domain",), lambda: SafetyDomain(**s.get("domain", {})))
        hull = s.get("hull", {})
        for key, val in hull.items():
            if not val > 0:
                _fail(marks, base + ("hull", key), f"hull {key} must be positive", source)
        start = s["start"]
        ships.append(guard(base, lambda: ShipConfig(
            s["name"], InertialPose(start["x_n"], start["y_n"], start["chi_n"]),
            tuple(tuple(p) for p in s["waypoints"]), params, domain,
            hull.get("length", 51.5), hull.get("beam", 8.6))))
    weights = guard(("weights",), lambda: CostWeights(**data.get("weights", {})))
    split = guard(("splitting",), lambda: SplittingConfig(**data.get("splitting", {})))
    net = guard(("net",), lambda: NetConfig(**data.get("net", {})))
    kw = {k: data[k] for k in ("duration", "ccas_period", "detection_range", "horizon", "y_max",
                               "chi_prop_max", "async_jitter", "solver", "profile", "carry_multiplier",
                               "latch_roles") if k in data}
    kw.update(data.get("risk", {}))
    kw.update(data.get("rules", {}))
    return guard((), lambda: Scenario(data["name"], tuple(ships), weights, split, net, **kw))


def parse_scenario(text: str, source: str = "<scenario>") -> Scenario:
    try:
        root = yaml.compose(text, Loader=_Loader)
        data = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else 1
        raise ConfigError(f"{source}:{line}: malformed YAML: {getattr(exc, 'problem', exc)}") from None
    if root is None:
        raise ConfigError(f"{source}:1: empty scenario file")
    marks = _Marks(root)
    _check_mapping(data, SCHEMA, marks, (), source)
    return _build(data, marks, source)


def load_scenario(path) -> Scenario:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read scenario file: {exc.strerror}") from None
    return parse_scenario(text, str(path))


def scenario_to_dict(sc: Scenario) -> dict:
    """Plain-data form of a scenario; the inverse of the file parser."""
    ships = []
    for s in sc.ships:
        ships.append({
            "name": s.name,
            "start": {"x_n": s.start.x_n, "y_n": s.start.y_n, "chi_n": s.start.chi_n},
            "waypoints": [list(p) for p in s.waypoints],
            "params": asdict(s.params),
            "domain": asdict(s.domain),
            "hull": {"length": s.length, "beam": s.beam},
        })
    risk = {"K_ca": sc.K_ca, "K_d": sc.K_d}
    # unset risk shapes are derived from each hull and stay absent
    for key in ("alpha_x", "alpha_y"):
        if getattr(sc, key) is not None:
            risk[key] = getattr(sc, key)
    return {
        "name": sc.name,
        "profile": sc.profile,
        "duration": sc.duration,
        "ccas_period": sc.ccas_period,
        "detection_range": sc.detection_range,
        "horizon": sc.horizon,
        "y_max": sc.y_max,
        "chi_prop_max": sc.chi_prop_max,
        "async_jitter": sc.async_jitter,
        "solver": sc.solver,
        "carry_multiplier": sc.carry_multiplier,
        "latch_roles": sc.latch_roles,
        "risk": risk,
        "rules": {"K_SO": sc.K_SO, "K_GW": sc.K_GW},
        "weights": {"K_y": sc.weights.K_y, "K_s": sc.weights.K_s, "K_b": sc.weights.K_b},
        "splitting": asdict(sc.splitting),
        "net": asdict(sc.net),
        "ships": ships,
    }


def dump_scenario(sc: Scenario) -> str:
    return yaml.safe_dump(scenario_to_dict(sc), sort_keys=False)
