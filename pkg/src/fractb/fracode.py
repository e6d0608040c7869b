"""Caputo fractional initial-value problems on uniform grids.

The solver is the fractional Adams-Bashforth-Moulton scheme in PECE form
(Diethelm, Ford & Freed): an explicit fractional rectangle-rule predictor
followed by exactly one fractional trapezoidal corrector per step.  For
``D^alpha x = f(t, x)``, ``x(0) = x0`` and ``0 < alpha <= 1``::

    x^P_{n+1} = x0 + 1/Gamma(alpha) * sum_{j=0..n}   b_j f(t_j, x_j)
    x_{n+1}   = x0 + 1/Gamma(alpha) * (sum_{j=0..n} a_j f(t_j, x_j)
                                       + a_{n+1} f(t_{n+1}, x^P_{n+1}))

with

    b_j     = h^a/a * ((n+1-j)^a - (n-j)^a)
    a_0     = h^a/(a(a+1)) * (n^(a+1) - (n-a)(n+1)^a)
    a_j     = h^a/(a(a+1)) * ((n-j+2)^(a+1) + (n-j)^(a+1) - 2(n-j+1)^(a+1))
    a_{n+1} = h^a/(a(a+1))

The full history is kept (no short-memory truncation), so a solve with
``N`` steps costs ``O(N^2)``.  At ``alpha = 1`` the scheme is Heun's method.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .errors import NoConvergence, NonFiniteState

__all__ = [
    "TimeGrid",
    "GridFunction",
    "check_order",
    "abm_predictor_weights",
    "abm_corrector_weights",
    "solve_caputo_ivp",
    "mittag_leffler",
]


def check_order(alpha):
    """Return ``alpha`` as a float, raising ``ValueError`` outside (0, 1]."""
    alpha = float(alpha)
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"fractional order must lie in (0, 1], got {alpha!r}")
    return alpha


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t_j = j*h`` on ``[0, tf]`` with ``h = tf/n_steps``."""

    tf: float
    n_steps: int

    def __post_init__(self):
        if not self.tf > 0 or not math.isfinite(self.tf):
            raise ValueError(f"tf must be positive and finite, got {self.tf!r}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 2:
            raise ValueError(f"n_steps must be an integer >= 2, got {self.n_steps!r}")
        object.__setattr__(self, "tf", float(self.tf))
        object.__setattr__(self, "n_steps", int(self.n_steps))

    @property
    def t0(self):
        return 0.0

    @property
    def h(self):
        return self.tf / self.n_steps

    @property
    def nodes(self):
        return np.arange(self.n_steps + 1) * self.h

    def __len__(self):
        return self.n_steps + 1


class GridFunction:
    """Per-node values on a :class:`TimeGrid`.

    ``values`` has shape ``(n_steps + 1,)`` for scalar functions or
    ``(n_steps + 1, d)`` for vector-valued ones.  Calling the object
    returns the node value when ``t`` sits on a node and linearly
    interpolates otherwise.
    """

    def __init__(self, grid, values):
        values = np.asarray(values, dtype=float)
        if values.shape[0] != len(grid):
            raise ValueError(
                f"expected {len(grid)} node values, got {values.shape[0]}"
            )
        self.grid = grid
        self.values = values

    @property
    def t(self):
        return self.grid.nodes

    def __len__(self):
        return self.values.shape[0]

    def __call__(self, t):
        h = self.grid.h
        pos = t / h
        j = int(round(pos))
        if 0 <= j <= self.grid.n_steps and abs(pos - j) < 1e-9:
            return self.values[j]
        if t <= 0.0:
            return self.values[0]
        if t >= self.grid.tf:
            return self.values[-1]
        j = min(int(math.floor(pos)), self.grid.n_steps - 1)
        w = pos - j
        return (1.0 - w) * self.values[j] + w * self.values[j + 1]

    def reversed(self):
        """Same grid, values in reverse node order (``t -> tf - t``)."""
        return type(self)(self.grid, self.values[::-1].copy())

    def same_grid(self, other):
        return self.grid == other.grid


# Differences of k -> k^p computed without catastrophic cancellation, so the
# weights stay strictly positive even for tiny alpha or large k.
def _first_diff(p, m):
    """(m+1)^p - m^p for integer array m >= 0."""
    m = np.asarray(m, dtype=float)
    out = np.ones_like(m)
    pos = m > 0
    mp = m[pos]
    out[pos] = mp**p * np.expm1(p * np.log1p(1.0 / mp))
    return out


def _second_diff(p, m):
    """(m+2)^p - 2(m+1)^p + m^p for integer array m >= 0."""
    m = np.asarray(m, dtype=float)
    return _first_diff(p, m + 1) - _first_diff(p, m)


def _weight_tables(alpha, n_max, h):
    """Convolution tables shared by all steps up to ``n_max``.

    Returns ``(pred, corr, corr_scale)`` where ``pred[m]`` is the predictor
    weight for lag ``m = n - j`` and ``corr[m]`` the interior corrector
    weight for the same lag; ``corr_scale`` is ``h^a/(a(a+1))``.
    """
    lags = np.arange(n_max + 1)
    pred = h**alpha / alpha * _first_diff(alpha, lags)
    corr_scale = h**alpha / (alpha * (alpha + 1.0))
    corr = corr_scale * _second_diff(alpha + 1.0, lags)
    return pred, corr, corr_scale


def _corrector_first(alpha, n, corr_scale):
    return corr_scale * (n ** (alpha + 1.0) - (n - alpha) * (n + 1.0) ** alpha)


def abm_predictor_weights(alpha, n, h=1.0):
    """Predictor weights ``b[0..n]`` for the step ``t_n -> t_{n+1}``."""
    alpha = check_order(alpha)
    if n < 0:
        raise ValueError("node index must be >= 0")
    pred, _, _ = _weight_tables(alpha, n, h)
    return pred[::-1].copy()


def abm_corrector_weights(alpha, n, h=1.0):
    """Corrector weights ``a[0..n+1]`` for the step ``t_n -> t_{n+1}``."""
    alpha = check_order(alpha)
    if n < 0:
        raise ValueError("node index must be >= 0")
    _, corr, scale = _weight_tables(alpha, n, h)
    a = np.empty(n + 2)
    a[0] = _corrector_first(alpha, n, scale)
    a[1 : n + 1] = corr[n - 1 :: -1] if n >= 1 else ()
    a[n + 1] = scale
    return a


def solve_caputo_ivp(f, x0, alpha, grid):
    """Solve ``D^alpha x = f(t, x)``, ``x(0) = x0`` on ``grid`` by PECE.

    Parameters
    ----------
    f : callable
        Right-hand side ``f(t, x) -> array`` of the same length as ``x0``.
    x0 : array_like
        Initial state.
    alpha : float
        Caputo order in (0, 1].
    grid : TimeGrid

    Returns
    -------
    GridFunction
        Node values of shape ``(n_steps + 1, len(x0))``.

    Raises
    ------
    NonFiniteState
        As soon as a corrected state contains inf or nan.
    """
    alpha = check_order(alpha)
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if x0.ndim != 1:
        raise ValueError("x0 must be a flat state vector")
    n_steps, h = grid.n_steps, grid.h
    t = grid.nodes
    inv_gamma = 1.0 / math.gamma(alpha)
    pred, corr, corr_scale = _weight_tables(alpha, n_steps, h)
    pred = pred * inv_gamma
    corr = corr * inv_gamma
    last = corr_scale * inv_gamma

    x = np.empty((n_steps + 1, x0.size))
    rhs = np.empty_like(x)
    x[0] = x0
    rhs[0] = _eval(f, t[0], x0, x0.size)
    if not np.all(np.isfinite(rhs[0])):
        raise NonFiniteState(0, t[0])

    for n in range(n_steps):
        history = rhs[: n + 1]
        xp = x0 + pred[n::-1] @ history
        first = _corrector_first(alpha, n, corr_scale) * inv_gamma
        acc = first * rhs[0]
        if n >= 1:
            acc = acc + corr[n - 1 :: -1] @ rhs[1 : n + 1]
        xn = x0 + acc + last * _eval(f, t[n + 1], xp, x0.size)
        if not np.all(np.isfinite(xn)):
            raise NonFiniteState(n + 1, t[n + 1])
        x[n + 1] = xn
        rhs[n + 1] = _eval(f, t[n + 1], xn, x0.size)
    return GridFunction(grid, x)


def _eval(f, t, x, dim):
    out = np.asarray(f(t, x), dtype=float)
    if out.shape != (dim,):
        out = np.reshape(out, (dim,))
    return out


def mittag_leffler(alpha, z, max_terms=10_000):
    """One-parameter Mittag-Leffler function ``E_alpha(z)`` by power series.

    Terms are summed until one falls below ``1e-16`` times the running sum.
    Alternating series for negative ``z`` lose digits to cancellation in
    double precision, so the sum is carried with enough extra binary digits
    to cover the largest term; the result is returned as a float.
    """
    alpha = check_order(alpha)
    z = float(z)
    if z == 0.0:
        return 1.0
    # Largest term magnitude guides the working precision.
    logz = math.log(abs(z))
    peak = 0.0
    for k in range(max_terms):
        lt = k * logz - math.lgamma(alpha * k + 1.0)
        peak = max(peak, lt)
        if lt < peak - 60.0:
            break
    extra = int(peak / math.log(2.0)) + 32 if peak > 0 else 32
    with mpmath.workprec(53 + extra):
        za = mpmath.mpf(z)
        total = mpmath.mpf(0)
        for k in range(max_terms + 1):
            term = za**k / mpmath.gamma(alpha * k + 1)
            total += term
            if k > 0 and abs(term) < 1e-16 * abs(total):
                return float(total)
    raise NoConvergence(
        f"Mittag-Leffler series for alpha={alpha}, z={z} exceeded {max_terms} terms"
    )
