"""Fractional optimal treatment control by a forward-backward PECE sweep.

Minimise ``J = int_0^tf I + B rho u^2 dt`` over treatment rates
``0 <= u <= u_max`` subject to the controlled model.  The maximum principle
gives the costate system (right Riemann-Liouville derivatives)::

    D_R p1 = mu p1 - beta I (p1 - p2)
    D_R p2 = (epsilon + mu) p2 - epsilon p3
    D_R p3 = -1 + (alpha1 + u + mu) p3 - u p4 + beta S (p1 - p2)
    D_R p4 = (alpha2 + mu + delta) p4 + delta (k - 1) p2 - delta k p3

with ``p_i(tf) = 0`` and the projected control law
``u = clip((p3 - p4) I / (2 B rho), 0, u_max)``.

The p1 equation is kept exactly as above.  It is what reproduces the
published classical-order results; differentiating the Hamiltonian
would flip the sign of its ``beta I`` term.

Costates are obtained by reversing time, ``tau = tf - t``: the terminal
problem becomes a left-sided one with zero initial data, for which the
Riemann-Liouville and Caputo forms coincide.  In reversed time
``D^alpha q = -g(x(tf - tau), q)`` where ``g`` is the right-hand side
above; at ``alpha = 1`` this is the classical ``p' = g``.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatch, InvariantViolation, NotConverged
from .fracode import GridFunction, TimeGrid, check_order, solve_caputo_ivp
from .model import Trajectory, simulate

__all__ = [
    "FocpConfig",
    "ControlPath",
    "CostatePath",
    "FocpSolution",
    "cost_functional",
    "adjoint_rhs",
    "optimal_control_law",
    "solve_costates",
    "solve_focp",
]

log = logging.getLogger(__name__)

# Reference maximum of I(t) for the uncontrolled (u = 0) classical run from
# the tabulated equilibrium over five years.
RHO_BASELINE = 452.758


@dataclass(frozen=True)
class FocpConfig:
    B: float = 0.15
    rho: float = RHO_BASELINE
    u_max: float = 1.0
    C: float = 1.0
    grid: TimeGrid = field(default_factory=lambda: TimeGrid(5.0, 2000))
    alpha: float = 1.0
    theta: float = 0.5
    tol: float = 1e-4
    max_iter: int = 200

    def __post_init__(self):
        checks = [
            (0 < self.B < math.inf, "0 < B < inf"),
            (self.rho > 0, "rho > 0"),
            (0 < self.u_max < math.inf, "0 < u_max"),
            (self.C >= 0, "C >= 0"),
            (0 < self.theta <= 1, "0 < theta <= 1"),
            (self.tol > 0, "tol > 0"),
            (int(self.max_iter) == self.max_iter and self.max_iter >= 1, "max_iter >= 1"),
            (0 < self.alpha <= 1, "0 < alpha <= 1"),
        ]
        for ok, rule in checks:
            if not ok:
                raise InvariantViolation(rule)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


class ControlPath(GridFunction):
    """Treatment rate ``u(t_j)`` at every node."""


class CostatePath(GridFunction):
    """Multipliers ``(p1, p2, p3, p4)`` at every node, shape ``(N+1, 4)``."""

    @property
    def p1(self):
        return self.values[:, 0]

    @property
    def p2(self):
        return self.values[:, 1]

    @property
    def p3(self):
        return self.values[:, 2]

    @property
    def p4(self):
        return self.values[:, 3]


@dataclass
class FocpSolution:
    states: Trajectory
    control: ControlPath
    costates: CostatePath
    J: float
    iterations: int
    converged: bool
    J_history: list = field(default_factory=list)
    change_history: list = field(default_factory=list)


def _trapz(y, grid):
    return float(np.trapezoid(y, dx=grid.h))


def cost_functional(states, control, B, rho):
    """Composite trapezoid of ``I + B rho u^2`` over the shared grid."""
    if states.grid != control.grid:
        raise GridMismatch("states and control live on different grids")
    u = control.values
    return _trapz(states.I + B * rho * u * u, states.grid)


def adjoint_rhs(state, costate, u, params):
    """Right-hand side ``g`` of the costate system at one node."""
    S, L, I, T = state
    p1, p2, p3, p4 = costate
    p = params
    return np.array(
        [
            p.mu * p1 - p.beta * I * (p1 - p2),
            (p.epsilon + p.mu) * p2 - p.epsilon * p3,
            -1.0 + (p.alpha1 + u + p.mu) * p3 - u * p4 + p.beta * S * (p1 - p2),
            (p.alpha2 + p.mu + p.delta) * p4 + p.delta * (p.k - 1.0) * p2 - p.delta * p.k * p3,
        ]
    )


def optimal_control_law(I, p3, p4, B, rho, u_max):
    """Projected stationarity condition; works elementwise on arrays."""
    raw = (np.asarray(p3) - np.asarray(p4)) * np.asarray(I) / (2.0 * B * rho)
    return np.minimum(np.maximum(0.0, raw), u_max)


def solve_costates(states, control, params, alpha):
    """Costates for given states and control, with ``p(tf) = 0``."""
    alpha = check_order(alpha)
    if states.grid != control.grid:
        raise GridMismatch("states and control live on different grids")
    grid = states.grid
    x_rev = states.reversed()
    u_rev = control.reversed()

    def f(tau, q):
        return -adjoint_rhs(x_rev(tau), q, u_rev(tau), params)

    q = solve_caputo_ivp(f, np.zeros(4), alpha, grid)
    values = q.values[::-1].copy()
    values[-1] = 0.0
    return CostatePath(grid, values)


def solve_focp(params, x0, cfg, initial_control=None, raise_on_failure=True):
    """Forward-backward sweep for the optimal treatment rate.

    Each iteration solves the state system under the current control
    ``u_old``, the costate system backwards, evaluates the control law to
    get ``u_new`` and relaxes ``u <- theta u_new + (1 - theta) u_old``.
    The sweep stops once ``max |u_new - u_old| <= tol * max(1, max |u_new|)``;
    the returned states and costates are those computed under the returned
    control, so the control law evaluated on them reproduces it within
    ``tol``.

    Raises
    ------
    NotConverged
        If ``max_iter`` is reached (unless ``raise_on_failure`` is False);
        the last iterate is attached to the exception.
    """
    grid = cfg.grid
    x0 = np.asarray(x0, dtype=float)
    if np.any(x0 < 0):
        raise ValueError("initial state must be nonnegative")
    if initial_control is None:
        u = np.zeros(len(grid))
    else:
        u = np.clip(np.asarray(initial_control, dtype=float), 0.0, cfg.u_max)

    J_hist, change_hist = [], []
    for it in range(1, cfg.max_iter + 1):
        control = ControlPath(grid, u)
        states = simulate(params, x0, cfg.alpha, grid, control)
        costates = solve_costates(states, control, params, cfg.alpha)
        J_hist.append(cost_functional(states, control, cfg.B, cfg.rho))
        u_new = optimal_control_law(states.I, costates.p3, costates.p4, cfg.B, cfg.rho, cfg.u_max)
        change = float(np.max(np.abs(u_new - u)))
        change_hist.append(change)
        log.debug("sweep %d: J=%.6f change=%.3e", it, J_hist[-1], change)
        if change <= cfg.tol * max(1.0, float(np.max(np.abs(u_new)))):
            return FocpSolution(states, control, costates, J_hist[-1], it, True, J_hist, change_hist)
        u = np.clip(cfg.theta * u_new + (1.0 - cfg.theta) * u, 0.0, cfg.u_max)

    control = ControlPath(grid, u)
    states = simulate(params, x0, cfg.alpha, grid, control)
    costates = solve_costates(states, control, params, cfg.alpha)
    J = cost_functional(states, control, cfg.B, cfg.rho)
    sol = FocpSolution(states, control, costates, J, cfg.max_iter, False, J_hist, change_hist)
    if raise_on_failure:
        raise NotConverged(sol, change_hist[-1])
    return sol
