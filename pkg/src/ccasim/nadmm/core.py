"""Relaxed nonconvex ADMM on a consensus problem.

Every agent ``i`` owns a local decision ``w_i`` and exposes its image
``u_i = A_i w_i - c_i`` in the shared consensus space. A local problem object
supplies the two operations the splitting needs::

    problem.transformed(w)            -> A_i w - c_i
    problem.solve(w, z_half, xi, beta) -> (w_new, info)

where ``solve`` minimises ``f_i(w) + <z_half, A_i w - c_i - xi>
+ beta/2 |A_i w - c_i - xi|^2``. ``info`` is a mapping that may carry solver
diagnostics (``iterations``, ``stationarity``, ``converged``, ``value``).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Sequence

import numpy as np

from ..errors import ConfigError, ProtocolError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SplittingConfig:
    beta: float = 3e-4
    lam: float = 1.0
    s_max: int = 2
    tol_stat: float = 1e-6
    max_solver_iter: int = 400
    # False reproduces the announcement listed in the algorithm pseudo-code,
    # which omits the scaled multiplier.
    announce_multiplier: bool = True

    def __post_init__(self):
        if not self.beta > 0:
            raise ConfigError("beta must be positive")
        if not 0.0 < self.lam < 2.0:
            raise ConfigError("relaxation lambda must lie in (0, 2)")
        if self.s_max < 1:
            raise ConfigError("s_max must be at least 1")
        if not self.tol_stat > 0:
            raise ConfigError("tol_stat must be positive")


@dataclass
class AgentState:
    """ADMM state of one agent.

    ``u`` caches the transformed local trajectory ``A_i w - c_i``;
    ``xi_cache`` maps ship id to ``(iteration, announcement)``.
    """

    ident: int
    w: Any
    u: np.ndarray
    z: np.ndarray
    xi_local: np.ndarray | None = None
    xi_cache: dict = field(default_factory=dict)
    iteration: int = 0

    @classmethod
    def start(cls, ident: int, w, problem, z=None):
        u = np.asarray(problem.transformed(w), dtype=float)
        z = np.zeros_like(u) if z is None else np.asarray(z, dtype=float)
        return cls(ident, w, u, z)


@dataclass(frozen=True)
class IterationRecord:
    agent: int
    s: int
    residual: float
    lagrangian: float
    solver_iters: int
    stationarity: float
    converged: bool = True


def global_average(announcements) -> np.ndarray:
    """Componentwise mean of one announcement per ship.

    Accepts a sequence or a mapping ship id -> vector; ``None`` entries mean
    the announcement was never received.
    """
    items = list(announcements.values()) if isinstance(announcements, Mapping) else list(announcements)
    if not items:
        raise ProtocolError("no announcements to average")
    missing = [k for k, a in enumerate(items) if a is None]
    if missing:
        raise ProtocolError(f"missing announcements at positions {missing} with no cached predecessor")
    acc = np.zeros_like(np.asarray(items[0], dtype=float))
    for a in items:
        acc = acc + np.asarray(a, dtype=float)
    return acc / len(items)


def half_multiplier_update(state: AgentState, xi, cfg: SplittingConfig) -> np.ndarray:
    return state.z - cfg.beta * (1.0 - cfg.lam) * (state.u - xi)


def full_multiplier_update(z_half, u_new, xi, cfg: SplittingConfig) -> np.ndarray:
    return z_half + cfg.beta * (u_new - xi)


def announce(state: AgentState, cfg: SplittingConfig) -> np.ndarray:
    if cfg.announce_multiplier:
        return state.u + state.z / cfg.beta
    return state.u.copy()


def residual(state: AgentState, xi) -> float:
    return float(np.linalg.norm(state.u - np.asarray(xi, dtype=float)))


def local_lagrangian(problem, state: AgentState, xi, cfg: SplittingConfig) -> float:
    r = state.u - xi
    f = problem.objective(state.w) if hasattr(problem, "objective") else 0.0
    return float(f + np.dot(state.z, r) + 0.5 * cfg.beta * np.dot(r, r))


def agent_update(state: AgentState, problem, xi, cfg: SplittingConfig):
    """Half multiplier step, local solve, full multiplier step, announcement.

    Returns ``(new_state, announcement, record)``; the input state is not
    modified.
    """
    xi = np.asarray(xi, dtype=float)
    z_half = half_multiplier_update(state, xi, cfg)
    w_new, info = problem.solve(state.w, z_half, xi, cfg.beta)
    u_new = np.asarray(problem.transformed(w_new), dtype=float)
    z_new = full_multiplier_update(z_half, u_new, xi, cfg)
    new = replace(state, w=w_new, u=u_new, z=z_new, xi_local=xi, iteration=state.iteration + 1,
                  xi_cache=dict(state.xi_cache))
    ann = announce(new, cfg)
    new.xi_cache[new.ident] = (new.iteration, ann)
    rec = IterationRecord(
        agent=state.ident, s=new.iteration, residual=residual(new, xi),
        lagrangian=float(info.get("value", np.nan)),
        solver_iters=int(info.get("iterations", 0)),
        stationarity=float(info.get("stationarity", 0.0)),
        converged=bool(info.get("converged", True)),
    )
    log.debug("agent %d s=%d residual=%.3e iters=%d stat=%.2e", rec.agent, rec.s,
              rec.residual, rec.solver_iters, rec.stationarity)
    return new, ann, rec


def sync_round(states: Sequence[AgentState], problems, announcements, cfg: SplittingConfig):
    """One barrier-synchronised round for all agents.

    ``announcements`` holds the iteration-s announcement of every agent. All
    agents use the same consensus vector. Returns ``(states, announcements,
    xi, records)``.
    """
    xi = global_average(announcements)
    out_states, out_ann, records = [], [], []
    for st, pb in zip(states, problems):
        st = replace(st, xi_cache={j: (st.iteration, a) for j, a in enumerate(announcements)})
        new, ann, rec = agent_update(st, pb, xi, cfg)
        out_states.append(new)
        out_ann.append(ann)
        records.append(rec)
    return out_states, out_ann, xi, records


def cached_consensus(state: AgentState, n_agents: int) -> np.ndarray:
    anns = [state.xi_cache.get(j, (None, None))[1] for j in range(n_agents)]
    return global_average(anns)


def receive(state: AgentState, sender: int, iteration: int, payload) -> None:
    """Replace the cached announcement of ``sender`` unless it is older."""
    old = state.xi_cache.get(sender)
    if old is None or old[0] is None or iteration >= old[0]:
        state.xi_cache[sender] = (iteration, np.asarray(payload, dtype=float))


def async_step(state: AgentState, problem, n_agents: int, cfg: SplittingConfig):
    """One activation of a single agent against its possibly stale cache."""
    xi = cached_consensus(state, n_agents)
    return agent_update(state, problem, xi, cfg)


@dataclass
class CoordinatorRun:
    states: list
    v: np.ndarray
    residuals: np.ndarray
    activations: np.ndarray
    delays: np.ndarray
    v_used: list


def coordinator_value(states, cfg: SplittingConfig) -> np.ndarray:
    return np.mean([s.u + s.z / cfg.beta for s in states], axis=0)


def consensus_residual(states, v) -> float:
    return float(np.sqrt(sum(np.dot(s.u - v, s.u - v) for s in states)))


def run_coordinator(states, problems, cfg: SplittingConfig, n_steps: int, rng=None,
                    max_delay: int = 0, schedule=None, delays=None) -> CoordinatorRun:
    """Asynchronous NADMM with a coordinator holding the global variable.

    Each step activates one client (uniformly at random unless ``schedule``
    is given), which reads the coordinator value from ``d`` steps ago with
    ``d`` uniform in ``[0, max_delay]`` (or taken from ``delays``). After
    the client update the coordinator recomputes the global variable from
    every client's latest state.
    """
    rng = np.random.default_rng(rng)
    states = list(states)
    m = len(states)
    if schedule is None:
        schedule = rng.integers(0, m, size=n_steps)
    if delays is None:
        delays = rng.integers(0, max_delay + 1, size=n_steps) if max_delay > 0 else np.zeros(n_steps, int)
    history = [coordinator_value(states, cfg)]
    res = np.empty(n_steps + 1)
    res[0] = consensus_residual(states, history[0])
    used = []
    for s in range(n_steps):
        i = int(schedule[s])
        v_hat = history[max(0, len(history) - 1 - int(delays[s]))]
        used.append(v_hat)
        states[i], _, _ = agent_update(states[i], problems[i], v_hat, cfg)
        history.append(coordinator_value(states, cfg))
        res[s + 1] = consensus_residual(states, history[-1])
    return CoordinatorRun(states, history[-1], res, np.asarray(schedule), np.asarray(delays), used)


@dataclass
class GenericNadmm:
    """Two-block relaxed NADMM for ``min f(w) + g(v)`` s.t. ``Aw - Bv - c = 0``.

    ``argmin_w(v, z)`` and ``argmin_v(w, z)`` minimise the augmented
    Lagrangian over one block with the other block and the multiplier fixed.
    """

    A: np.ndarray
    B: np.ndarray
    c: np.ndarray
    argmin_w: Any
    argmin_v: Any
    beta: float
    lam: float

    def constraint(self, w, v):
        return self.A @ w - self.B @ v - self.c

    def step(self, w, v, z):
        z_half = z - self.beta * (1.0 - self.lam) * self.constraint(w, v)
        w_new = self.argmin_w(v, z_half)
        z_new = z_half + self.beta * self.constraint(w_new, v)
        v_new = self.argmin_v(w_new, z_new)
        return w_new, v_new, z_new


def estimate_curvature(grad_fn, points) -> float:
    """Finite-difference Lipschitz estimate of a gradient along iterates."""
    best = 0.0
    pts = [np.asarray(p, dtype=float).ravel() for p in points]
    grads = [np.asarray(grad_fn(p), dtype=float).ravel() for p in pts]
    for a in range(1, len(pts)):
        d = np.linalg.norm(pts[a] - pts[a - 1])
        if d > 0:
            best = max(best, np.linalg.norm(grads[a] - grads[a - 1]) / d)
    return float(best)


def check_penalty(beta: float, lipschitz: float, factor: float = 2.0) -> bool:
    ok = beta > factor * lipschitz
    if not ok:
        log.warning("penalty beta=%.3g does not exceed %.3g x estimated smoothness %.3g",
                    beta, factor, lipschitz)
    return ok
