"""Scenario files: flat ``key = value`` text with ``#`` comments.

An empty file gives the published baseline: tabulated rates with
``gamma = 0.7``, the tabulated equilibrium as initial state, ``B = 0.15``,
``rho = 452.758``, ``u_max = 1``, ``C = 1`` and ``tf = 5``.  Setting
``x0 = equilibrium`` replaces the initial state by the endemic equilibrium
computed from the parameters.

A run manifest (JSON written next to the outputs) can be loaded in place
of a scenario file; it reproduces the resolved scenario exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .control import FocpConfig
from .errors import ConfigError, InvariantViolation, ParseError, UnknownKey
from .fracode import TimeGrid
from .model import PARAM_NAMES, PUBLISHED_EQUILIBRIUM, ModelParams, StateVec, endemic_equilibrium

__all__ = ["Scenario", "load_scenario", "parse_assignments", "DEFAULTS"]

STATE_KEYS = ("S0", "L0", "I0", "T0")

DEFAULTS = {
    **ModelParams().as_dict(),
    **dict(zip(STATE_KEYS, PUBLISHED_EQUILIBRIUM)),
    "alpha": 1.0,
    "tf": 5.0,
    "steps": 2000,
    "B": 0.15,
    "rho": 452.758,
    "u_max": 1.0,
    "C": 1.0,
    "theta": 0.5,
    "tol": 1e-4,
    "max_iter": 200,
}
INT_KEYS = {"steps", "max_iter"}
# Keys accepted in files and overrides on top of DEFAULTS.
EXTRA_KEYS = {"x0"}


@dataclass(frozen=True)
class Scenario:
    params: ModelParams
    x0: StateVec
    alpha: float
    focp: FocpConfig

    @property
    def grid(self):
        return self.focp.grid

    def as_dict(self):
        """Flat, fully resolved key/value mapping (inverse of loading)."""
        out = self.params.as_dict()
        out.update(zip(STATE_KEYS, (float(v) for v in self.x0)))
        cfg = self.focp
        out.update(
            alpha=self.alpha,
            tf=cfg.grid.tf,
            steps=cfg.grid.n_steps,
            B=cfg.B,
            rho=cfg.rho,
            u_max=cfg.u_max,
            C=cfg.C,
            theta=cfg.theta,
            tol=cfg.tol,
            max_iter=cfg.max_iter,
        )
        return out

    def to_text(self):
        lines = ["# resolved scenario"]
        lines += [f"{k} = {v!r}" for k, v in self.as_dict().items()]
        return "\n".join(lines) + "\n"


def _coerce(key, raw, where):
    if key == "x0":
        value = str(raw).strip().lower()
        if value not in ("equilibrium", "table"):
            raise ParseError(*where, f"x0 must be 'equilibrium' or 'table', got {raw!r}")
        return value
    try:
        if key in INT_KEYS:
            fval = float(raw)
            if not fval.is_integer():
                raise ValueError
            return int(fval)
        return float(raw)
    except (TypeError, ValueError):
        raise ParseError(*where, f"{key} expects a number, got {raw!r}") from None


def _check_key(key, where):
    if key not in DEFAULTS and key not in EXTRA_KEYS:
        raise UnknownKey(f"{where[0]}:{where[1]}: unknown key {key!r}")


def _read_text(path):
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            if "=" not in body:
                raise ParseError(path, lineno, f"expected 'key = value', got {body!r}")
            key, raw = (part.strip() for part in body.split("=", 1))
            if not key:
                raise ParseError(path, lineno, "missing key")
            _check_key(key, (path, lineno))
            values[key] = _coerce(key, raw, (path, lineno))
    return values


def _read_manifest(path):
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(path, exc.lineno, exc.msg) from None
    if not isinstance(data, dict) or "scenario" not in data:
        raise ParseError(path, 1, "manifest has no 'scenario' entry")
    values = {}
    for key, raw in data["scenario"].items():
        _check_key(key, (path, 1))
        values[key] = _coerce(key, raw, (path, 1))
    return values


def parse_assignments(items):
    """Turn ``["key=value", ...]`` command-line overrides into a dict."""
    values = {}
    for n, item in enumerate(items or (), 1):
        if "=" not in item:
            raise ParseError("--set", n, f"expected key=value, got {item!r}")
        key, raw = (part.strip() for part in item.split("=", 1))
        _check_key(key, ("--set", n))
        values[key] = _coerce(key, raw, ("--set", n))
    return values


def load_scenario(path=None, overrides=None):
    """Build a fully resolved :class:`Scenario`.

    ``path`` may be a ``key = value`` text file, a run manifest (``.json``)
    or ``None`` for the baseline.  ``overrides`` (a mapping of the same keys,
    already typed or as strings) take precedence over the file.
    """
    values = dict(DEFAULTS)
    given = {}
    if path is not None:
        path = str(path)
        if not Path(path).is_file():
            raise ConfigError(f"scenario file not found: {path}")
        given.update(_read_manifest(path) if path.endswith(".json") else _read_text(path))
    for key, raw in (overrides or {}).items():
        _check_key(key, ("override", 0))
        given[key] = _coerce(key, raw, ("override", 0))
    values.update(given)

    x0_mode = values.pop("x0", "table")
    try:
        params = ModelParams(**{k: values[k] for k in PARAM_NAMES})
        if x0_mode == "equilibrium":
            if any(k in given for k in STATE_KEYS):
                raise InvariantViolation("x0 = equilibrium conflicts with explicit S0/L0/I0/T0")
            x0 = endemic_equilibrium(params)
        else:
            x0 = StateVec(*(values[k] for k in STATE_KEYS))
        if any(v < 0 or not math.isfinite(v) for v in x0):
            raise InvariantViolation("initial state must be finite and nonnegative")
        alpha = values["alpha"]
        if not 0 < alpha <= 1:
            raise InvariantViolation(f"0 < alpha <= 1 (alpha={alpha!r})")
        try:
            grid = TimeGrid(values["tf"], values["steps"])
        except ValueError as exc:
            raise InvariantViolation(str(exc)) from None
        focp = FocpConfig(
            B=values["B"],
            rho=values["rho"],
            u_max=values["u_max"],
            C=values["C"],
            grid=grid,
            alpha=alpha,
            theta=values["theta"],
            tol=values["tol"],
            max_iter=values["max_iter"],
        )
    except ConfigError:
        raise
    except Exception as exc:  # equilibrium failures etc. are config problems here
        raise InvariantViolation(str(exc)) from exc
    return Scenario(params, x0, alpha, focp)
