"""Four-compartment tuberculosis model with Caputo dynamics.

Compartments are susceptible ``S``, latent ``L``, infectious ``I`` and
under treatment ``T``.  With treatment rate ``u`` (the constant ``gamma``
in the uncontrolled model)::

    D^a S = Lambda - beta I S - mu S
    D^a L = beta I S + (1-k) delta T - (mu+epsilon) L
    D^a I = epsilon L + k delta T - (mu+u+alpha1) I
    D^a T = u I - (mu+delta+alpha2) T

``gamma`` has no published baseline value.  ``gamma = 0.7`` is the one
that reproduces both the reported reproduction number 7.1343 and the
reported equilibrium (``T* = gamma I*/b3 = 78.43``).  ``mu = 1/70``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DegenerateDenominator, InvariantViolation, NoEndemicEquilibrium
from .fracode import GridFunction, TimeGrid, check_order, solve_caputo_ivp

__all__ = [
    "ModelParams",
    "StateVec",
    "Trajectory",
    "BASELINE",
    "PUBLISHED_EQUILIBRIUM",
    "PARAM_NAMES",
    "tb_rhs",
    "r0",
    "r0_formula",
    "endemic_equilibrium",
    "simulate",
]

PARAM_NAMES = ("Lambda", "beta", "mu", "k", "delta", "epsilon", "gamma", "alpha1", "alpha2")


@dataclass(frozen=True)
class ModelParams:
    """Epidemiological rates (per year, except ``k`` and ``beta``)."""

    Lambda: float = 792.8571
    beta: float = 0.0005
    mu: float = 1 / 70
    k: float = 0.15
    delta: float = 1.5
    epsilon: float = 0.00368
    gamma: float = 0.7
    alpha1: float = 0.3
    alpha2: float = 0.05

    def __post_init__(self):
        for name in PARAM_NAMES:
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise InvariantViolation(f"{name} must be finite, got {value!r}")
            if value < 0:
                raise InvariantViolation(f"all rates >= 0 ({name}={value!r})")
            object.__setattr__(self, name, value)
        if not self.k <= 1.0:
            raise InvariantViolation(f"0 <= k <= 1 (k={self.k!r})")
        if not self.mu > 0:
            raise InvariantViolation(f"mu > 0 (mu={self.mu!r})")
        if not self.Lambda > 0:
            raise InvariantViolation(f"Lambda > 0 (Lambda={self.Lambda!r})")

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def scaled(self, name, factor):
        """Copy with parameter ``name`` multiplied by ``factor``."""
        return self.replace(**{name: getattr(self, name) * factor})

    def as_dict(self):
        return dataclasses.asdict(self)

    @property
    def b1(self):
        return self.mu + self.epsilon

    @property
    def b2(self):
        return self.mu + self.gamma + self.alpha1

    @property
    def b3(self):
        return self.mu + self.delta + self.alpha2


BASELINE = ModelParams()


class StateVec(NamedTuple):
    S: float
    L: float
    I: float
    T: float

    def as_array(self):
        return np.array(self, dtype=float)


# Endemic equilibrium as printed (rounded); used as the default start.
PUBLISHED_EQUILIBRIUM = StateVec(7779.28, 43511.9, 175.267, 78.4299)


class Trajectory(GridFunction):
    """States ``(S, L, I, T)`` at every grid node, shape ``(N+1, 4)``."""

    @property
    def S(self):
        return self.values[:, 0]

    @property
    def L(self):
        return self.values[:, 1]

    @property
    def I(self):
        return self.values[:, 2]

    @property
    def T(self):
        return self.values[:, 3]

    @property
    def total(self):
        return self.values.sum(axis=1)


def tb_rhs(state, params, u):
    """Right-hand side of the controlled model at one state."""
    S, L, I, T = state
    p = params
    infection = p.beta * I * S
    return np.array(
        [
            p.Lambda - infection - p.mu * S,
            infection + (1.0 - p.k) * p.delta * T - (p.mu + p.epsilon) * L,
            p.epsilon * L + p.k * p.delta * T - (p.mu + u + p.alpha1) * I,
            u * I - (p.mu + p.delta + p.alpha2) * T,
        ]
    )


def r0_formula(Lambda, beta, mu, k, delta, epsilon, gamma, alpha1, alpha2):
    """Reproduction number and its denominator from raw numbers.

    Written with plain arithmetic only, so it also evaluates exactly on
    :class:`fractions.Fraction` inputs.
    """
    b1 = mu + epsilon
    b2 = mu + gamma + alpha1
    b3 = mu + delta + alpha2
    den = mu * b1 * b2 * b3 - mu * delta * gamma * ((1 - k) * epsilon + k * b1)
    if not den > 0:
        raise DegenerateDenominator(f"R0 denominator is {float(den)!r}")
    return beta * epsilon * b3 * Lambda / den


def r0(params):
    """Basic reproduction number.

    Raises
    ------
    DegenerateDenominator
        When ``mu b1 b2 b3 - mu delta gamma ((1-k) epsilon + k b1) <= 0``.
    """
    return r0_formula(**params.as_dict())


def endemic_equilibrium(params):
    """Positive steady state of the uncontrolled model (``u = gamma``).

    Eliminating ``S``, ``T`` and ``L`` from the steady-state equations
    leaves ``I* = (mu/beta)(R0 - 1)``; the rest follows by back-substitution.
    """
    R = r0(params)
    if R <= 1.0:
        raise NoEndemicEquilibrium(f"R0 = {R:.6g} <= 1")
    p = params
    I = p.mu / p.beta * (R - 1.0)
    S = p.Lambda / (p.beta * I + p.mu)
    T = p.gamma * I / p.b3
    L = (p.b2 * I - p.k * p.delta * T) / p.epsilon
    return StateVec(S, L, I, T)


def simulate(params, x0, alpha, grid, control=None):
    """Integrate the model from ``x0`` on ``grid``.

    ``control`` is a per-node array, a :class:`GridFunction` (e.g. a
    ``ControlPath``), a constant, or ``None`` for the constant
    ``params.gamma``.  Each right-hand-side evaluation at ``t_j``, the
    predictor stage included, uses the control value at node ``j``.
    """
    alpha = check_order(alpha)
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (4,):
        raise ValueError("x0 must have four components (S, L, I, T)")
    if np.any(x0 < 0):
        raise ValueError("initial state must be nonnegative")
    u = _control_sampler(control, params, grid)

    def f(t, x):
        return tb_rhs(x, params, u(t))

    sol = solve_caputo_ivp(f, x0, alpha, grid)
    return Trajectory(grid, sol.values)


def _control_sampler(control, params, grid):
    if control is None:
        gamma = params.gamma
        return lambda t: gamma
    if isinstance(control, GridFunction):
        if control.grid != grid:
            raise ValueError("control and simulation grids differ")
        return control
    arr = np.asarray(control, dtype=float)
    if arr.ndim == 0:
        value = float(arr)
        return lambda t: value
    return GridFunction(grid, arr)


def default_grid(tf=5.0, n_steps=2000):
    return TimeGrid(tf, n_steps)
