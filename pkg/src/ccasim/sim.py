"""Discrete-event scenario runner.

Logical time advances in model steps of ``dT``. Every ``ccas_period`` the
ships negotiate a consensus plan (lock-step rounds or scheduler-driven
asynchronous activations) while the plant is held at the epoch start; each
ship then applies successive elements of its own plan until the next
negotiation.
"""

from __future__ import annotations

import itertools
import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .cost import CostWeights
from .errors import ConfigError, DeadlockFault, SolverError
from .frames import InertialPose, PathPose, WaypointSegment, rotation, to_inertial, to_path_frame, wrap_angle
from .kinematics import HorizonModel, NeighborParams, OwnControl, OwnShipParams, neutral_plan, step_own
from .nadmm.core import AgentState, SplittingConfig, agent_update, announce, async_step, receive, sync_round
from .nadmm.solver import CcasLocalProblem, plan_bounds
from .network import NetConfig, Network
from .risk import RiskParams, SafetyDomain, safety_index
from .rules import K_GW_DEFAULT, K_SO_DEFAULT, Kind, check_weights, classify, priority_weight

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ShipConfig:
    """One ship: start pose, route and hull.

    ``waypoints`` is a sequence of inertial ``(x_n, y_n)`` points; the first
    one is the previous waypoint of the initial segment.
    """

    name: str
    start: InertialPose
    waypoints: tuple
    params: OwnShipParams = field(default_factory=OwnShipParams)
    domain: SafetyDomain = field(default_factory=SafetyDomain)
    length: float = 51.5
    beam: float = 8.6

    def __post_init__(self):
        object.__setattr__(self, "start", InertialPose(*map(float, self.start)))
        wps = tuple((float(x), float(y)) for x, y in self.waypoints)
        if len(wps) < 2:
            raise ConfigError(f"ship {self.name!r} needs at least two waypoints")
        for a, b in zip(wps, wps[1:]):
            if a == b:
                raise ConfigError(f"ship {self.name!r} has repeated waypoint {a}")
        object.__setattr__(self, "waypoints", wps)
        if not (self.length > 0 and self.beam > 0):
            raise ConfigError(f"ship {self.name!r} hull dimensions must be positive")


@dataclass(frozen=True)
class Scenario:
    name: str
    ships: tuple
    weights: CostWeights = field(default_factory=CostWeights)
    splitting: SplittingConfig = field(default_factory=SplittingConfig)
    net: NetConfig = field(default_factory=NetConfig)
    duration: float = 800.0
    ccas_period: float = 20.0
    detection_range: float = 1500.0
    horizon: int = 20
    y_max: float = 60.0
    chi_prop_max: float = math.pi / 6
    K_ca: float = 10.0
    K_d: float = 0.05
    # risk shape overrides in m^2; None derives them from each target's hull
    alpha_x: float | None = None
    alpha_y: float | None = None
    K_SO: float = K_SO_DEFAULT
    K_GW: float = K_GW_DEFAULT
    async_jitter: float = 0.1
    carry_multiplier: bool = True
    latch_roles: bool = True
    solver: str = "lbfgsb"
    profile: str = "sim"

    def __post_init__(self):
        object.__setattr__(self, "ships", tuple(self.ships))
        if not self.ships:
            raise ConfigError("a scenario needs at least one ship")
        names = [s.name for s in self.ships]
        if len(set(names)) != len(names):
            raise ConfigError("ship names must be unique")
        dts = {s.params.dT for s in self.ships}
        if len(dts) != 1:
            raise ConfigError("all ships must share the model step dT")
        if not self.duration >= 0:
            raise ConfigError("duration must be nonnegative")
        if not self.ccas_period > 0:
            raise ConfigError("ccas_period must be positive")
        if not self.detection_range > 0:
            raise ConfigError("detection_range must be positive")
        if self.horizon < 1:
            raise ConfigError("horizon must be at least one step")
        if not self.y_max > 0:
            raise ConfigError("y_max must be positive")
        if not 0 < self.chi_prop_max <= math.pi / 2:
            raise ConfigError("chi_prop_max must lie in (0, pi/2]")
        if not 0 <= self.async_jitter < 1:
            raise ConfigError("async_jitter must lie in [0, 1)")
        if self.solver not in ("lbfgsb", "pg"):
            raise ConfigError(f"unknown solver {self.solver!r}")
        check_weights(self.K_SO, self.K_GW)
        RiskParams(self.K_ca, self.K_d, self.alpha_x or 1.0, self.alpha_y or 1.0)

    @property
    def dT(self) -> float:
        return self.ships[0].params.dT

    @property
    def n_ticks(self) -> int:
        return int(math.floor(self.duration / self.dT + 1e-9))


@dataclass(frozen=True)
class TickRecord:
    t: float
    ship: int
    x_n: float
    y_n: float
    chi_n: float
    u_y: float
    u_s: float
    epsilon: float


@dataclass(frozen=True)
class NegotiationRecord:
    epoch: int
    s: int
    ship: int
    residual: float
    solver_iters: int
    stationarity: float
    staleness: float
    t: float


@dataclass
class RunLog:
    scenario: Scenario
    ticks: list = field(default_factory=list)
    negotiations: list = field(default_factory=list)
    faults: list = field(default_factory=list)
    alphas: list = field(default_factory=list)
    epoch_wall: list = field(default_factory=list)
    events: list = field(default_factory=list)
    aborted: bool = False

    def track(self, ship: int) -> np.ndarray:
        """Rows ``(t, x_n, y_n, chi_n, u_y, u_s, epsilon)`` of one ship."""
        return np.array([(r.t, r.x_n, r.y_n, r.chi_n, r.u_y, r.u_s, r.epsilon)
                         for r in self.ticks if r.ship == ship]).reshape(-1, 7)

    def times(self) -> np.ndarray:
        return np.unique([r.t for r in self.ticks])

    def pair_distances(self) -> dict:
        m = len(self.scenario.ships)
        tracks = [self.track(i) for i in range(m)]
        out = {}
        for i, j in itertools.combinations(range(m), 2):
            n = min(len(tracks[i]), len(tracks[j]))
            d = np.hypot(tracks[i][:n, 1] - tracks[j][:n, 1], tracks[i][:n, 2] - tracks[j][:n, 2])
            out[(i, j)] = (tracks[i][:n, 0], d)
        return out

    def min_epsilon(self) -> list:
        return [float(np.min(self.track(i)[:, 6])) if len(self.track(i)) else math.inf
                for i in range(len(self.scenario.ships))]

    def summary(self) -> dict:
        dist = {f"{i}-{j}": float(np.min(d)) if len(d) else math.inf
                for (i, j), (_, d) in self.pair_distances().items()}
        return {
            "min_distance": dist,
            "min_epsilon": self.min_epsilon(),
            "faults": list(self.faults),
            "aborted": self.aborted,
            "epochs": len(self.alphas),
        }


# --- geometry -----------------------------------------------------------------


def route_segments(waypoints) -> list:
    """``(segment, length)`` for each leg of a waypoint route."""
    out = []
    for (xa, ya), (xb, yb) in zip(waypoints, waypoints[1:]):
        out.append((WaypointSegment(xa, ya, math.atan2(yb - ya, xb - xa)), math.hypot(xb - xa, yb - ya)))
    return out


def canonical_course(chi_n: float, seg: WaypointSegment) -> float:
    """Inertial course unwrapped to within pi of the guideline direction."""
    return seg.chi_wp + wrap_angle(chi_n - seg.chi_wp)


def agent_view(ego: int, poses, segments):
    """Poses of all ships in the ego path frame and their nominal courses.

    Courses are expressed without re-wrapping, relative to the ego guideline,
    so that every agent maps a given ship to the same consensus course.
    """
    seg = segments[ego]
    rot = rotation(seg.chi_wp)[:2, :2]
    m = len(poses)
    initial = np.empty((m, 3))
    chi_nom = np.empty(m)
    for j, (pose, sj) in enumerate(zip(poses, segments)):
        initial[j, :2] = rot @ np.array([pose[0] - seg.x_wp, pose[1] - seg.y_wp])
        initial[j, 2] = canonical_course(pose[2], sj) - seg.chi_wp
        chi_nom[j] = sj.chi_wp - seg.chi_wp
    return initial, chi_nom


def classify_all(poses, segments, speeds, detection_range: float, horizon_s: float,
                 K_SO: float = K_SO_DEFAULT, K_GW: float = K_GW_DEFAULT, memory: dict | None = None):
    """Priority weights for every ordered pair.

    ``alpha[i, j]`` is the weight ship ``i`` puts on proposals for ship
    ``j``; NaN marks the diagonal and pairs beyond detection range. Returns
    ``(alpha, encounters)`` with ``encounters[(i, j)]`` from ``i``'s view.

    With ``memory`` (a dict kept across calls) an encounter keeps the roles
    it was first given until the pair stops closing or leaves detection
    range; otherwise a give-way ship that moves to the starboard side of its
    own fairway would be reclassified mid-manoeuvre.
    """
    m = len(poses)
    alpha = np.full((m, m), np.nan)
    enc = {}
    for i, j in itertools.combinations(range(m), 2):
        in_range = math.hypot(poses[i][0] - poses[j][0], poses[i][1] - poses[j][1]) <= detection_range
        if not in_range:
            if memory is not None:
                memory.pop((i, j), None)
                memory.pop((j, i), None)
            continue
        e_ij = classify(poses[i], segments[i], poses[j], segments[j], speeds[i], speeds[j], horizon_s)
        e_ji = classify(poses[j], segments[j], poses[i], segments[i], speeds[j], speeds[i], horizon_s)
        if memory is not None:
            if e_ij.kind is Kind.NONE and e_ji.kind is Kind.NONE:
                memory.pop((i, j), None)
                memory.pop((j, i), None)
            elif (i, j) in memory:
                e_ij, e_ji = memory[(i, j)], memory[(j, i)]
            else:
                memory[(i, j)], memory[(j, i)] = e_ij, e_ji
        enc[(i, j)], enc[(j, i)] = e_ij, e_ji
        alpha[i, j] = priority_weight(e_ij, K_SO, K_GW)
        alpha[j, i] = priority_weight(e_ji, K_SO, K_GW)
    return alpha, enc


# --- ship state -------------------------------------------------------------


@dataclass
class _Ship:
    cfg: ShipConfig
    legs: list
    pose: InertialPose
    leg: int = 0
    plan: np.ndarray | None = None
    full_plan: np.ndarray | None = None
    multiplier: np.ndarray | None = None
    plan_tick: int = 0
    plan_legs: tuple | None = None
    u_prev: tuple = (0.0, 1.0)

    @property
    def segment(self) -> WaypointSegment:
        return self.legs[self.leg][0]

    def advance_leg(self) -> None:
        while self.leg + 1 < len(self.legs):
            seg, length = self.legs[self.leg]
            if to_path_frame(self.pose, seg).x <= length:
                break
            self.leg += 1

    def control(self, tick: int) -> tuple:
        if self.plan is None:
            return 0.0, 1.0
        k = tick - self.plan_tick
        if k >= self.plan.shape[1]:
            return float(self.plan[-1, 0]), float(self.plan[-1, 1])
        return float(self.plan[k, 0]), float(self.plan[k, 1])


def _shift_multiplier(z, shift: int, n_ships: int, horizon: int):
    """Multiplier of the previous epoch moved ``shift`` slots ahead, zero-padded."""
    if z is None:
        return None
    z = np.asarray(z).reshape(n_ships, -1, 3)
    if z.shape[1] != horizon + 1:
        return None
    out = np.zeros_like(z)
    if shift <= horizon:
        out[:, : horizon + 1 - shift] = z[:, shift:]
    return out.ravel()


def _warm_start(prev, shift: int, legs_then, legs_now, ego: int, horizon: int, u_y_last: float):
    m = len(legs_now)
    plan = neutral_plan(m, horizon, ego, u_y_last)
    if prev is None or legs_then is None or prev.shape != plan.shape:
        return plan
    if shift < horizon:
        plan[:, : horizon - shift] = prev[:, shift:]
    fresh = neutral_plan(m, horizon, ego)
    for j in range(m):
        if legs_then[j] != legs_now[j]:
            plan[j] = fresh[j]
    return plan


# --- negotiation --------------------------------------------------------------


def risk_params(sc: Scenario, target: ShipConfig) -> RiskParams:
    base = RiskParams.for_hull(target.length, target.beam, sc.K_ca, sc.K_d)
    return replace(base, alpha_x=sc.alpha_x or base.alpha_x, alpha_y=sc.alpha_y or base.alpha_y)


def build_problems(sc: Scenario, ships, alpha):
    poses = [s.pose for s in ships]
    segs = [s.segment for s in ships]
    m = len(ships)
    risk = [risk_params(sc, s.cfg) for s in ships]
    problems = []
    for i, ship in enumerate(ships):
        initial, chi_nom = agent_view(i, poses, segs)
        nbs = [None if j == i else NeighborParams(ships[j].cfg.params.U_d, ships[j].cfg.params.T_1,
                                                  float(chi_nom[j])) for j in range(m)]
        model = HorizonModel.build(i, ship.cfg.params, nbs)
        row = np.where(np.isnan(alpha[i]), 1.0, alpha[i])
        u_y_prev = ship.u_prev[0] if ship.plan_legs is not None and ship.plan_legs[i] == ship.leg else 0.0
        w = replace(sc.weights, alpha=row, u_y_prev=u_y_prev)
        lo, hi = plan_bounds(m, sc.horizon, i, sc.y_max, sc.chi_prop_max)
        problems.append(CcasLocalProblem(initial, model, w, risk, ship.segment, lo, hi,
                                         sc.splitting.tol_stat, sc.splitting.max_solver_iter,
                                         sc.solver))
    return problems


def _guarded_update(step: Callable, state: AgentState, epoch: int, faults: list):
    try:
        return step()
    except SolverError as exc:
        log.warning("epoch %d ship %d local solve failed (%s); keeping previous plan",
                    epoch, state.ident, exc)
        faults.append({"kind": "solver", "epoch": epoch, "ship": state.ident, "detail": str(exc)})
        return None


def negotiate_sync(sc: Scenario, problems, states, net: Network, epoch: int, t0: float,
                   log_: RunLog):
    cfg = sc.splitting
    m = len(states)
    anns = [announce(s, cfg) for s in states]
    t = t0
    for s in range(cfg.s_max):
        for i, a in enumerate(anns):
            net.send(i, s, a, t, epoch)
        rel = net.barrier(s, epoch, range(m), t)
        net.deliver_up_to(rel.time)
        t = rel.time
        xi = np.mean(anns, axis=0)
        new_states, new_anns = [], []
        for i, (st, pb) in enumerate(zip(states, problems)):
            st = replace(st, xi_cache={j: (s, a) for j, a in enumerate(anns)})
            out = _guarded_update(lambda: agent_update(st, pb, xi, cfg), st, epoch, log_.faults)
            if out is None:
                new_states.append(st)
                new_anns.append(anns[i])
                continue
            ns, a, rec = out
            new_states.append(ns)
            new_anns.append(a)
            log_.negotiations.append(NegotiationRecord(epoch, s + 1, i, rec.residual, rec.solver_iters,
                                                       rec.stationarity, 0.0, t))
        states, anns = new_states, new_anns
    return states


def async_schedule(sc: Scenario, m: int, epoch: int, t0: float) -> list:
    """Activation times ``(t, ship, s)``: round-robin phases plus seeded jitter."""
    period = sc.ccas_period / sc.splitting.s_max
    rng = np.random.default_rng([sc.net.seed, 0xA5, epoch])
    jitter = rng.uniform(0.0, sc.async_jitter * period, size=(sc.splitting.s_max, m))
    acts = []
    for s in range(sc.splitting.s_max):
        for i in range(m):
            acts.append((t0 + (i + 0.5) * period / m + s * period + jitter[s, i], i, s))
    acts.sort()
    return acts


def negotiate_async(sc: Scenario, problems, states, net: Network, epoch: int, t0: float,
                    log_: RunLog):
    cfg = sc.splitting
    m = len(states)
    sent_at = {}
    for i, st in enumerate(states):
        # until a neighbour is heard from, its slot holds the agent's own prediction
        st.xi_cache = {j: (-1, st.u.copy()) for j in range(m)}
        a = announce(st, cfg)
        st.xi_cache[i] = (0, a)
        net.send(i, 0, a, t0, epoch)
        sent_at[(i, i)] = t0
    for t, i, s in async_schedule(sc, m, epoch, t0):
        for ev in net.deliver_up_to(t):
            if ev.epoch != epoch:
                continue
            targets = range(m) if ev.recipient is None else [ev.recipient]
            for r in targets:
                if r == ev.sender:
                    continue
                old = states[r].xi_cache.get(ev.sender)
                receive(states[r], ev.sender, ev.iteration, ev.payload)
                if old is None or ev.iteration >= old[0]:
                    sent_at[(r, ev.sender)] = ev.send_time
        st = states[i]
        ages = [t - sent_at[(i, j)] for j in range(m) if j != i and (i, j) in sent_at]
        stale = max(ages) if len(ages) == m - 1 and ages else math.inf
        out = _guarded_update(lambda: async_step(st, problems[i], m, cfg), st, epoch, log_.faults)
        if out is None:
            continue
        ns, a, rec = out
        states[i] = ns
        net.send(i, ns.iteration, a, t, epoch)
        sent_at[(i, i)] = t
        log_.negotiations.append(NegotiationRecord(epoch, s + 1, i, rec.residual, rec.solver_iters,
                                                   rec.stationarity, stale, t))
    return states


# --- main loop ----------------------------------------------------------------


def run(sc: Scenario) -> RunLog:
    log_ = RunLog(sc)
    m = len(sc.ships)
    ships = [_Ship(c, route_segments(c.waypoints), c.start) for c in sc.ships]
    for s in ships:
        s.advance_leg()
    net = Network(sc.net, m)
    dT = sc.dT
    n_ticks = sc.n_ticks
    next_ccas = 0.0
    epoch = 0
    roles: dict = {}
    horizon_s = sc.horizon * dT
    speeds = [s.cfg.params.U_d for s in ships]
    for k in range(n_ticks + 1):
        t = k * dT
        if k < n_ticks and t >= next_ccas - 1e-9 and m > 1:
            poses = [s.pose for s in ships]
            segs = [s.segment for s in ships]
            alpha, _ = classify_all(poses, segs, speeds, sc.detection_range, horizon_s, sc.K_SO, sc.K_GW,
                                    roles if sc.latch_roles else None)
            log_.alphas.append(alpha)
            problems = build_problems(sc, ships, alpha)
            legs_now = tuple(s.leg for s in ships)
            states = []
            for i, (s, pb) in enumerate(zip(ships, problems)):
                w0 = _warm_start(s.full_plan, k - s.plan_tick, s.plan_legs, legs_now, i, sc.horizon,
                                 s.u_prev[0] if s.plan_legs and s.plan_legs[i] == s.leg else 0.0)
                z0 = _shift_multiplier(s.multiplier, k - s.plan_tick, m, sc.horizon) \
                    if sc.carry_multiplier else None
                states.append(AgentState.start(i, w0, pb, z0))
            wall = time.perf_counter()
            t_neg = max(t, net._clock)
            try:
                if sc.net.mode == "sync":
                    states = negotiate_sync(sc, problems, states, net, epoch, t_neg, log_)
                else:
                    states = negotiate_async(sc, problems, states, net, epoch, t_neg, log_)
            except DeadlockFault as exc:
                log_.faults.append({"kind": "deadlock", "epoch": epoch, "iteration": exc.iteration,
                                    "missing": sorted(exc.missing), "waited": exc.waited})
                log_.aborted = True
                log.error("epoch %d: %s", epoch, exc)
            log_.epoch_wall.append(time.perf_counter() - wall)
            if log_.aborted:
                _record(log_, ships, t, k, None)
                break
            for i, s in enumerate(ships):
                s.full_plan = states[i].w
                s.multiplier = states[i].z
                s.plan = np.clip(states[i].w[i], problems[i].lower[i], problems[i].upper[i])
                s.plan_tick = k
                s.plan_legs = legs_now
            epoch += 1
            while next_ccas <= t + 1e-9:
                next_ccas += sc.ccas_period
        controls = [s.control(k) for s in ships]
        _record(log_, ships, t, k, controls)
        if k == n_ticks:
            break
        for s, (u_y, u_s) in zip(ships, controls):
            p = to_path_frame(s.pose, s.segment)
            s.pose = to_inertial(step_own(p, OwnControl(u_y, u_s), s.cfg.params), s.segment)
            leg_before = s.leg
            s.advance_leg()
            s.u_prev = (u_y, u_s) if s.leg == leg_before else (0.0, u_s)
    log_.events = list(net.trace)
    return log_


def _record(log_: RunLog, ships, t: float, k: int, controls) -> None:
    poses = [s.pose for s in ships]
    for i, s in enumerate(ships):
        eps = safety_index(poses, i, s.cfg.domain, s.segment)
        u_y, u_s = controls[i] if controls is not None else (math.nan, math.nan)
        log_.ticks.append(TickRecord(t, i, s.pose.x_n, s.pose.y_n, s.pose.chi_n, u_y, u_s, eps))


# --- scenario library ---------------------------------------------------------

PROFILES = {
    "sim": dict(y_max=60.0, chi_max=math.pi / 6, K_y=1e-2, K_s=2e-2, beta=3e-4, dT=20.0, ccas=20.0,
                U_d=3.0, T_1=30.0, K_e=0.05, length=51.5, beam=8.6, d_x=51.5, d_y=8.6,
                range=1500.0, T_delay=2.0, scale=1.0, K_ca=10.0),
    "field": dict(y_max=10.0, chi_max=math.pi / 6, K_y=2e-2, K_s=4e-2, beta=5e-4, dT=5.0, ccas=5.0,
                  U_d=0.5, T_1=7.5, K_e=0.3, length=2.0, beam=1.08, d_x=2.5, d_y=2.5,
                  range=75.0, T_delay=0.5, scale=0.05, K_ca=10.0),
}


def _ship(name, start_xy, heading_deg, end_xy, prof, speed_factor=1.0):
    """Ship starting at ``start_xy`` and steering for ``end_xy``.

    Coordinates are given at simulation scale and shrunk for the field
    profile.
    """
    c = prof["scale"]
    sx, sy = start_xy[0] * c, start_xy[1] * c
    ex, ey = end_xy[0] * c, end_xy[1] * c
    params = OwnShipParams(U_d=speed_factor * prof["U_d"], chi_max=prof["chi_max"], K_e=prof["K_e"],
                           T_1=prof["T_1"], dT=prof["dT"])
    return ShipConfig(name, InertialPose(sx, sy, math.radians(heading_deg)), ((sx, sy), (ex, ey)),
                      params, SafetyDomain(prof["d_x"], prof["d_y"]), prof["length"], prof["beam"])


def _scenario(name, ships, prof_name, duration, mode="sync", loss=0.0, seed=0, **kw):
    """``duration`` is given at simulation scale and converted with the profile."""
    prof = PROFILES[prof_name]
    sim = PROFILES["sim"]
    duration = duration * prof["scale"] * sim["U_d"] / prof["U_d"]
    duration = prof["dT"] * round(duration / prof["dT"])
    weights = CostWeights(K_y=prof["K_y"], K_s=prof["K_s"], K_b=prof["K_y"])
    split = SplittingConfig(beta=prof["beta"])
    net = NetConfig(mode=mode, T_delay=prof["T_delay"], loss_p=loss, seed=seed)
    extra = dict(y_max=prof["y_max"], chi_prop_max=prof["chi_max"], K_ca=prof["K_ca"],
                 alpha_y=(2.0 * prof["length"]) ** 2, profile=prof_name)
    extra.update(kw)
    return Scenario(name, tuple(ships), weights, split, net, duration, prof["ccas"], prof["range"], **extra)


def headon_2(profile="sim", mode="sync", seed=0, loss=0.0):
    # right-hand lanes 4 m apart: each ship is on its own guideline (so they negotiate)
    # and the other ship starts slightly to port; a single shared line is a
    # symmetric saddle with no lateral risk gradient at all
    p = PROFILES[profile]
    ships = [
        _ship("ship1", (-900, 2), 0.0, (900, 2), p),
        _ship("ship2", (900, -2), 180.0, (-900, -2), p),
    ]
    return _scenario("headon-2", ships, profile, 600.0, mode, loss, seed)


def crossing_2(profile="sim", mode="sync", seed=0, loss=0.0):
    p = PROFILES[profile]
    ships = [
        _ship("ship1", (-900, 0), 0.0, (900, 0), p),
        _ship("ship2", (60, -900), 90.0, (60, 900), p),
    ]
    return _scenario("crossing-2", ships, profile, 600.0, mode, loss, seed)


def overtaking_2(profile="sim", mode="sync", seed=0, loss=0.0):
    p = PROFILES[profile]
    # the overtaker's guideline lies 4 m to starboard of the overtaken ship's
    ships = [
        _ship("ship1", (-600, 4), 0.0, (1800, 4), p, 1.6),
        _ship("ship2", (-200, 0), 0.0, (1800, 0), p, 0.8),
    ]
    return _scenario("overtaking-2", ships, profile, 900.0, mode, loss, seed)


def combined_3(profile="sim", mode="sync", seed=0, loss=0.0):
    p = PROFILES[profile]
    ships = [
        _ship("ship1", (-900, 2), 0.0, (900, 2), p),
        _ship("ship2", (900, -2), 180.0, (-900, -2), p),
        _ship("ship3", (100, 900), -90.0, (100, -900), p),
    ]
    return _scenario("combined-3", ships, profile, 600.0, mode, loss, seed)


def cross_n(n, profile="sim", mode="sync", seed=0, loss=0.0, name=None, lane=2.0, risk_gain=1.0):
    """``n`` ships on radial guidelines around the origin, slightly staggered.

    Each guideline sits ``lane`` m to starboard of the radius, so ships on
    opposite bearings use separate right-hand lanes as in ``headon_2``.
    ``risk_gain`` scales the profile's collision-risk amplitude.
    """
    p = PROFILES[profile]
    ships = []
    for i in range(n):
        theta = 2 * math.pi * i / n
        r = 900.0 + (37.0 * i) % 110
        ox, oy = -lane * math.sin(theta), lane * math.cos(theta)
        start = (-r * math.cos(theta) + ox, -r * math.sin(theta) + oy)
        end = (900.0 * math.cos(theta) + ox, 900.0 * math.sin(theta) + oy)
        ships.append(_ship(f"ship{i + 1}", start, math.degrees(theta), end, p))
    return _scenario(name or f"cross-{n}", ships, profile, 500.0, mode, loss, seed, K_ca=risk_gain * p["K_ca"])


def scenario_library() -> dict:
    """Named scenario builders; each accepts ``profile``, ``mode``, ``seed`` and ``loss``."""
    return {
        "headon-2": headon_2,
        "crossing-2": crossing_2,
        "overtaking-2": overtaking_2,
        "combined-3": combined_3,
        # every ship gives way to its starboard neighbour; the cyclic priorities
        # need a stronger risk term than the two-ship encounters
        "cross-4": lambda profile="sim", mode="sync", seed=0, loss=0.0: cross_n(
            4, profile, mode, seed, loss, risk_gain=2.0),
        "cross-6": lambda profile="sim", mode="sync", seed=0, loss=0.0: cross_n(6, profile, mode, seed, loss),
        "cross-6-loss5": lambda profile="sim", mode="async", seed=0, loss=0.05: cross_n(
            6, profile, mode, seed, loss, name="cross-6-loss5"),
    }
