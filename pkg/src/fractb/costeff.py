"""Efficacy and cost-effectiveness summaries of a treatment intervention.

All integrals use the composite trapezoid rule on the trajectory grid,
the same rule as the cost functional.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .control import cost_functional, solve_focp
from .errors import GridMismatch, NotConverged, ZeroInitialInfectious
from .fracode import GridFunction

__all__ = [
    "CostEffReport",
    "SweepRow",
    "DEFAULT_B_VALUES",
    "efficacy",
    "averted_cases",
    "total_cost",
    "summarize",
    "weight_sweep",
]

log = logging.getLogger(__name__)

DEFAULT_B_VALUES = tuple(round(0.05 * i, 2) for i in range(1, 21))


@dataclass(frozen=True)
class CostEffReport:
    A: float
    TC: float
    ACER: Optional[float]  # None when no cases are averted
    Fbar: float
    J: float
    alpha: float
    B: float

    def as_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class SweepRow:
    alpha: float
    B: float
    J: float
    A: float
    TC: float
    ACER: Optional[float]
    Fbar: float
    iterations: int
    converged: bool


def _initial_infectious(states):
    I0 = float(states.I[0])
    if not I0 > 0:
        raise ZeroInitialInfectious(f"I(0) = {I0!r}")
    return I0


def efficacy(states):
    """``F(t_j) = 1 - I(t_j)/I(0)`` on the trajectory grid."""
    I0 = _initial_infectious(states)
    return GridFunction(states.grid, 1.0 - states.I / I0)


def averted_cases(states):
    """``A = tf I(0) - int I dt``."""
    I0 = _initial_infectious(states)
    return states.grid.tf * I0 - float(np.trapezoid(states.I, dx=states.grid.h))


def total_cost(states, control, C=1.0):
    if states.grid != control.grid:
        raise GridMismatch("states and control live on different grids")
    return float(C * np.trapezoid(control.values * states.I, dx=states.grid.h))


def summarize(states, control, cfg):
    """Cost-effectiveness report for one controlled trajectory.

    ``ACER = TC/A`` is left as ``None`` when ``A == 0``.
    """
    A = averted_cases(states)
    TC = total_cost(states, control, cfg.C)
    Fbar = A / (states.grid.tf * states.I[0])
    ACER = TC / A if A != 0 else None
    J = cost_functional(states, control, cfg.B, cfg.rho)
    return CostEffReport(A, TC, ACER, float(Fbar), J, float(cfg.alpha), float(cfg.B))


def _sweep_one(args):
    params, x0, cfg = args
    try:
        sol = solve_focp(params, x0, cfg)
    except NotConverged as exc:
        sol = exc.solution
    rep = summarize(sol.states, sol.control, cfg)
    return SweepRow(
        cfg.alpha, cfg.B, rep.J, rep.A, rep.TC, rep.ACER, rep.Fbar, sol.iterations, sol.converged
    )


def weight_sweep(params, x0, alphas, B_values, cfg, max_workers=1):
    """Solve the control problem for every ``(alpha, B)`` pair.

    Rows come back sorted by ``(alpha, B)``.  Pairs whose sweep hits the
    iteration cap are reported with ``converged=False`` instead of
    aborting.  ``max_workers > 1`` runs the solves in worker processes;
    the result does not depend on it.
    """
    if any(not b > 0 for b in B_values):
        raise ValueError("all B values must be positive")
    jobs = [
        (params, x0, cfg.replace(alpha=float(a), B=float(b)))
        for a in sorted(set(alphas))
        for b in sorted(set(B_values))
    ]
    if max_workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            rows = list(pool.map(_sweep_one, jobs))
    else:
        rows = [_sweep_one(job) for job in jobs]
    for row in rows:
        if not row.converged:
            log.warning("alpha=%g B=%g did not converge", row.alpha, row.B)
    return sorted(rows, key=lambda r: (r.alpha, r.B))
