"""Douglas-Rachford splitting mirror of the asynchronous NADMM.

Under the change of variables ``sigma_i = u_i - z_i / beta``, ``u_i = A_i w_i
- c_i``, ``tau = v`` and ``gamma = 1 / beta`` the relaxed NADMM iterates are
federated Douglas-Rachford iterates on the image functions
``phi_i(mu) = inf { f_i(w) : A_i w = mu + c_i }``. The quadratic fixture below
provides ``phi_i`` in closed form, independent of the ADMM local solve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import AgentState


@dataclass
class QuadraticLocalProblem:
    """``f(w) = 1/2 (w - a)' Q (w - a)`` with consensus map ``A w - c``."""

    Q: np.ndarray
    a: np.ndarray
    A: np.ndarray
    c: np.ndarray

    def objective(self, w) -> float:
        d = np.asarray(w) - self.a
        return float(0.5 * d @ self.Q @ d)

    def transformed(self, w) -> np.ndarray:
        return self.A @ w - self.c

    def solve(self, w, z_half, xi, beta):
        lhs = self.Q + beta * self.A.T @ self.A
        rhs = self.Q @ self.a - self.A.T @ z_half + beta * self.A.T @ (xi + self.c)
        w_new = np.linalg.solve(lhs, rhs)
        r = self.A @ w_new - self.c - xi
        value = self.objective(w_new) + z_half @ r + 0.5 * beta * r @ r
        return w_new, {"iterations": 1, "stationarity": 0.0, "value": value}

    # closed-form image function
    def image_hessian(self) -> np.ndarray:
        return np.linalg.inv(self.A @ np.linalg.solve(self.Q, self.A.T))

    def image_center(self) -> np.ndarray:
        return self.A @ self.a - self.c

    def phi(self, mu) -> float:
        d = np.asarray(mu) - self.image_center()
        return float(0.5 * d @ self.image_hessian() @ d)

    def grad_phi(self, mu) -> np.ndarray:
        return self.image_hessian() @ (np.asarray(mu) - self.image_center())

    def prox_phi(self, point, gamma) -> np.ndarray:
        H = self.image_hessian()
        eye = np.eye(H.shape[0])
        return np.linalg.solve(H + eye / gamma, H @ self.image_center() + np.asarray(point) / gamma)

    def smoothness(self) -> float:
        return float(np.max(np.linalg.eigvalsh(self.image_hessian())))


def random_quadratic_fixture(n_agents: int, dim: int, local_dim: int | None = None, rng=None,
                             conditioning: float = 4.0):
    """Strongly convex local problems with surjective consensus maps.

    Each map has orthonormal rows, the same structure as the trajectory
    consensus map (a selection followed by a rotation).
    """
    rng = np.random.default_rng(rng)
    local_dim = local_dim or dim + 2
    problems = []
    for _ in range(n_agents):
        U, _ = np.linalg.qr(rng.normal(size=(local_dim, local_dim)))
        eig = np.linspace(1.0, conditioning, local_dim)
        Q = U @ np.diag(eig) @ U.T
        A = np.linalg.qr(rng.normal(size=(local_dim, local_dim)))[0][:dim]
        problems.append(QuadraticLocalProblem(Q, rng.normal(size=local_dim), A, rng.normal(size=dim)))
    return problems


@dataclass
class DrsState:
    sigma: np.ndarray  # (M, d)
    u: np.ndarray  # (M, d)
    tau: np.ndarray  # (d,)

    def copy(self):
        return DrsState(self.sigma.copy(), self.u.copy(), self.tau.copy())


def drs_step(d: DrsState, prox, gamma: float, lam: float, active=None, tau_hat=None,
             prox_g=None) -> DrsState:
    """One (federated, possibly asynchronous) Douglas-Rachford iteration.

    ``prox[i](point, gamma)`` evaluates the proximal map of ``phi_i``. Only
    agents in ``active`` (default: all) update, using ``tau_hat`` (default:
    the current ``tau``) as their possibly delayed copy of the global
    variable; the global variable is then recomputed from every agent.
    """
    out = d.copy()
    m = d.sigma.shape[0]
    active = range(m) if active is None else active
    t = d.tau if tau_hat is None else np.asarray(tau_hat)
    for i in active:
        out.sigma[i] = d.sigma[i] + lam * (t - d.u[i])
        out.u[i] = prox[i](out.sigma[i], gamma)
    anchor = np.mean(2.0 * out.u - out.sigma, axis=0)
    out.tau = anchor if prox_g is None else prox_g(anchor, gamma)
    return out


def drs_from_admm(states, v, beta: float) -> DrsState:
    u = np.array([s.u for s in states])
    z = np.array([s.z for s in states])
    return DrsState(u - z / beta, u, np.asarray(v, dtype=float).copy())


def envelope(d: DrsState, phis, grad_phis, gamma: float, phi_g=None) -> float:
    """Douglas-Rachford envelope at the current iterate."""
    total = 0.0
    for i in range(d.u.shape[0]):
        diff = d.tau - d.u[i]
        total += phis[i](d.u[i]) + grad_phis[i](d.u[i]) @ diff + diff @ diff / (2.0 * gamma)
    g = 0.0 if phi_g is None else phi_g(d.tau)
    return float(g + total / d.u.shape[0])


def augmented_lagrangian_value(states, problems, v, beta: float) -> float:
    total = 0.0
    for s, pb in zip(states, problems):
        r = s.u - v
        total += pb.objective(s.w) + s.z @ r + 0.5 * beta * r @ r
    return float(total / len(states))


def dre_check(states, problems, v, drs: DrsState, beta: float):
    """Return ``(V_gamma, L_beta)`` from their separate definitions."""
    gamma = 1.0 / beta
    V = envelope(drs, [p.phi for p in problems], [p.grad_phi for p in problems], gamma)
    L = augmented_lagrangian_value(states, problems, v, beta)
    return V, L


def start_consistent(problems, beta: float, rng=None, scale: float = 1.0):
    """Agent states that already satisfy the local prox optimality condition.

    Draws a random ``sigma`` per agent and takes one exact local step from it,
    so ``z_i = -grad phi_i(u_i)`` holds from the first iterate on.
    """
    rng = np.random.default_rng(rng)
    states = []
    for i, pb in enumerate(problems):
        dim = pb.A.shape[0]
        sigma = scale * rng.normal(size=dim)
        # solving with xi = sigma and zero multiplier is the prox at sigma
        w, _ = pb.solve(np.zeros(pb.A.shape[1]), np.zeros(dim), sigma, beta)
        u = pb.transformed(w)
        states.append(AgentState(i, w, u, beta * (u - sigma)))
    return states
