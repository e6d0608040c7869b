"""Command-line front end.

Every command writes its data files (CSV/JSON, 10 significant digits) and
a ``manifest_<command>.json`` into ``--out``; commands that correspond to a figure
also render it as PNG unless ``--no-figures`` is given.  Files are written
to a temporary name and renamed, so a failed run never leaves a partial
file behind.

Exit codes: 0 success, 2 configuration error, 3 sweep did not converge,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .control import ControlPath, solve_focp
from .costeff import DEFAULT_B_VALUES, efficacy, summarize, weight_sweep
from .errors import ConfigError, FracTBError, NotConverged, NumericalError
from .model import Trajectory, endemic_equilibrium, r0, simulate
from .scenario import load_scenario, parse_assignments
from .sensitivity import perturbation_experiment, sensitivity_table

log = logging.getLogger("fractb")

COMMANDS = ("simulate", "equilibrium", "r0", "sensitivity", "perturb", "optimize", "cost-eff", "sweep-b")
TRAJECTORY_HEADER = ("t", "S", "L", "I", "T", "u", "F")
SWEEP_HEADER = ("alpha", "B", "J", "A", "TC", "ACER", "Fbar")
SUMMARY_KEYS = ("r0", "alpha", "B", "J", "A", "TC", "ACER", "Fbar", "iterations", "converged")

EXIT_OK, EXIT_CONFIG, EXIT_NOT_CONVERGED, EXIT_NUMERICAL = 0, 2, 3, 4


def fmt(x):
    if x is None:
        return ""
    return f"{float(x):.10g}"


def _jsonable(x):
    if isinstance(x, (bool, type(None), str, int)):
        return x
    return float(fmt(x))


class Outputs:
    """Collects files for one run and writes each atomically."""

    def __init__(self, out_dir, figures=True):
        self.dir = Path(out_dir)
        self.figures = figures
        self.written = []

    def path(self, name):
        p = self.dir / name
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def text(self, name, content):
        p = self.path(name)
        tmp = p.with_name(p.name + ".tmp")
        tmp.write_text(content, encoding="utf-8")
        os.replace(tmp, p)
        self.written.append(name)
        return p

    def csv(self, name, header, rows):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, str) else fmt(v) for v in row])
        return self.text(name, buf.getvalue())

    def json(self, name, data):
        return self.text(name, json.dumps(data, indent=2) + "\n")

    def figure(self, name, render, *args):
        if not self.figures:
            return None
        p = self.path(name)
        render(*args, p)
        self.written.append(name)
        return p


def trajectory_rows(states, control_values):
    F = efficacy(states).values
    u = np.broadcast_to(np.asarray(control_values, dtype=float), states.I.shape)
    for j, t in enumerate(states.t):
        yield (t, *states.values[j], u[j], F[j])


def read_trajectory(path, grid):
    """Load a trajectory CSV back as ``(Trajectory, ControlPath)``."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape != (len(grid), len(TRAJECTORY_HEADER)):
        raise ConfigError(f"{path}: trajectory does not match the scenario grid")
    return Trajectory(grid, data[:, 1:5]), ControlPath(grid, data[:, 5])


def summary_dict(scenario, report, iterations, converged):
    values = {
        "r0": r0(scenario.params),
        "alpha": report.alpha,
        "B": report.B,
        "J": report.J,
        "A": report.A,
        "TC": report.TC,
        "ACER": report.ACER,
        "Fbar": report.Fbar,
        "iterations": iterations,
        "converged": converged,
    }
    return {k: _jsonable(values[k]) for k in SUMMARY_KEYS}


def _parse_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _alpha_dir(alpha):
    return f"alpha_{alpha:g}"


# --- commands -------------------------------------------------------------


def cmd_simulate(sc, opts, out):
    from .plotting import plot_trajectory

    traj = simulate(sc.params, sc.x0, sc.alpha, sc.grid)
    out.csv("trajectory.csv", TRAJECTORY_HEADER, trajectory_rows(traj, sc.params.gamma))
    out.figure("trajectory.png", plot_trajectory, traj)
    print(f"I(tf) = {traj.I[-1]:.6g}")
    return {}


def cmd_equilibrium(sc, opts, out):
    eq = endemic_equilibrium(sc.params)
    out.json("equilibrium.json", {k: _jsonable(v) for k, v in eq._asdict().items()})
    print(" ".join(f"{k}={v:.6g}" for k, v in eq._asdict().items()))
    return {}


def cmd_r0(sc, opts, out):
    value = r0(sc.params)
    out.json("r0.json", {"r0": _jsonable(value)})
    print(f"{value:.4f}")
    return {}


def cmd_sensitivity(sc, opts, out):
    from .plotting import plot_sensitivity

    table = sensitivity_table(sc.params)
    out.csv("sensitivity.csv", ("param", "index"), ((s.param_name, s.index) for s in table))
    out.figure("sensitivity.png", plot_sensitivity, table)
    for s in table:
        print(f"{s.param_name:>8s} {s.index:+.6g}")
    return {}


def cmd_perturb(sc, opts, out):
    from .plotting import plot_perturbation

    res = perturbation_experiment(sc.params, opts.param, opts.pct, sc.alpha, sc.grid)
    stem = f"perturb_{opts.param}"
    rows = zip(res.baseline_I.t, res.baseline_I.values, res.perturbed_I.values)
    out.csv(f"{stem}.csv", ("t", "I_base", "I_pert"), rows)
    out.json(f"{stem}.json", {
        "param": opts.param,
        "pct": _jsonable(opts.pct),
        "alpha": _jsonable(sc.alpha),
        "rel_L2_diff": _jsonable(res.rel_L2_diff),
    })
    out.figure(f"{stem}.png", plot_perturbation, res)
    print(f"rel_L2_diff = {res.rel_L2_diff:.6g}")
    return {"rel_L2_diff": res.rel_L2_diff}


def _alphas(sc, opts):
    return _parse_list(opts.alphas) if getattr(opts, "alphas", None) else [sc.alpha]


def _optimize_one(sc, alpha, out, prefix):
    cfg = sc.focp.replace(alpha=alpha)
    try:
        sol = solve_focp(sc.params, sc.x0, cfg)
    except NotConverged as exc:
        sol = exc.solution
    report = summarize(sol.states, sol.control, cfg)
    out.csv(prefix + "trajectory.csv", TRAJECTORY_HEADER, trajectory_rows(sol.states, sol.control.values))
    out.csv(prefix + "costates.csv", ("t", "p1", "p2", "p3", "p4"),
            ((t, *p) for t, p in zip(sol.costates.t, sol.costates.values)))
    out.csv(prefix + "iterations.csv", ("iteration", "J", "change"),
            ((n + 1, J, c) for n, (J, c) in enumerate(zip(sol.J_history, sol.change_history))))
    summary = summary_dict(sc, report, sol.iterations, sol.converged)
    out.json(prefix + "summary.json", summary)
    return sol, summary


def cmd_optimize(sc, opts, out):
    from .plotting import plot_control_efficacy, plot_states_by_alpha

    alphas = _alphas(sc, opts)
    multi = getattr(opts, "alphas", None) is not None
    sols, diag = {}, {}
    for alpha in alphas:
        prefix = f"{_alpha_dir(alpha)}/" if multi else ""
        sol, summary = _optimize_one(sc, alpha, out, prefix)
        sols[alpha] = sol
        diag[f"{alpha:g}"] = {"iterations": sol.iterations, "converged": sol.converged}
        print(f"alpha={alpha:g}: J={summary['J']} A={summary['A']} TC={summary['TC']} "
              f"ACER={summary['ACER']} Fbar={summary['Fbar']} "
              f"({sol.iterations} iterations{'' if sol.converged else ', NOT converged'})")
    out.figure("states.png", plot_states_by_alpha, {a: s.states for a, s in sols.items()})
    out.figure("control_efficacy.png", plot_control_efficacy,
               {a: s.control for a, s in sols.items()},
               {a: efficacy(s.states) for a, s in sols.items()})
    return {"sweep": diag, "converged": all(s.converged for s in sols.values())}


def cmd_cost_eff(sc, opts, out):
    multi = getattr(opts, "alphas", None) is not None
    rows, summaries, ok = [], {}, True
    for alpha in _alphas(sc, opts):
        prefix = f"{_alpha_dir(alpha)}/" if multi else ""
        traj_path = out.dir / (prefix + "trajectory.csv")
        cfg = sc.focp.replace(alpha=alpha)
        if traj_path.is_file():
            states, control = read_trajectory(traj_path, sc.grid)
            prev = out.dir / (prefix + "summary.json")
            meta = json.loads(prev.read_text()) if prev.is_file() else {}
            iterations, converged = meta.get("iterations"), meta.get("converged")
        else:
            sol, _ = _optimize_one(sc, alpha, out, prefix)
            states, control = sol.states, sol.control
            iterations, converged = sol.iterations, sol.converged
        report = summarize(states, control, cfg)
        summary = summary_dict(sc, report, iterations, converged)
        out.json(prefix + "cost_eff.json", summary)
        summaries[f"{alpha:g}"] = summary
        ok = ok and converged is not False
        rows.append((alpha, report.B, report.J, report.A, report.TC, report.ACER, report.Fbar))
        print(f"alpha={alpha:g}: A={fmt(report.A)} TC={fmt(report.TC)} "
              f"ACER={fmt(report.ACER) or 'undefined'} Fbar={fmt(report.Fbar)}")
    if multi:
        out.csv("cost_eff.csv", SWEEP_HEADER, rows)
    return {"converged": ok}


def cmd_sweep_b(sc, opts, out):
    from .plotting import plot_weight_sweep

    B_values = _parse_list(opts.b_values) if opts.b_values else list(DEFAULT_B_VALUES)
    alphas = _parse_list(opts.alphas) if opts.alphas else [1.0, 0.9, 0.8]
    rows = weight_sweep(sc.params, sc.x0, alphas, B_values, sc.focp, max_workers=opts.workers)
    out.csv("sweep_b.csv", SWEEP_HEADER,
            ((r.alpha, r.B, r.J, r.A, r.TC, r.ACER, r.Fbar) for r in rows))
    out.figure("sweep_b.png", plot_weight_sweep, rows)
    failed = [(r.alpha, r.B) for r in rows if not r.converged]
    for r in rows:
        print(f"alpha={r.alpha:g} B={r.B:g} J={fmt(r.J)} Fbar={fmt(r.Fbar)}"
              + ("" if r.converged else " NOT converged"))
    return {"not_converged": failed, "converged": not failed}


HANDLERS = {
    "simulate": cmd_simulate,
    "equilibrium": cmd_equilibrium,
    "r0": cmd_r0,
    "sensitivity": cmd_sensitivity,
    "perturb": cmd_perturb,
    "optimize": cmd_optimize,
    "cost-eff": cmd_cost_eff,
    "sweep-b": cmd_sweep_b,
}


def write_manifest(out, command, scenario, argv, started, diagnostics):
    manifest = {
        "artifact": "fractb",
        "version": __version__,
        "command": command,
        "argv": list(argv),
        "started": started,
        "finished": datetime.now(timezone.utc).isoformat(),
        "scenario": scenario.as_dict(),
        "diagnostics": diagnostics,
        "files": sorted(out.written),
    }
    return out.json(f"manifest_{command}.json", manifest)


def dispatch(command, scenario, opts, argv=()):
    """Run one command; returns the process exit status."""
    if command not in HANDLERS:
        print(f"error: unknown command {command!r}", file=sys.stderr)
        return EXIT_CONFIG
    out = Outputs(opts.out, figures=not opts.no_figures)
    started = datetime.now(timezone.utc).isoformat()
    try:
        diagnostics = HANDLERS[command](scenario, opts, out) or {}
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, FloatingPointError, OverflowError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (FracTBError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    write_manifest(out, command, scenario, argv, started, diagnostics)
    if diagnostics.get("converged") is False:
        print("error: forward-backward sweep did not converge", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario file (key = value) or run manifest")
    common.add_argument("--alpha", type=float, help="fractional order in (0, 1]")
    common.add_argument("--tf", type=float, help="final time in years")
    common.add_argument("--steps", type=int, help="number of grid steps")
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a scenario key (repeatable)")
    common.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="fractb", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "equilibrium", "r0", "sensitivity"):
        sub.add_parser(name, parents=[common])
    p = sub.add_parser("perturb", parents=[common])
    p.add_argument("--param", default="mu", help="parameter to perturb (default: mu)")
    p.add_argument("--pct", type=float, default=15.0, help="percent change (default: 15)")
    for name in ("optimize", "cost-eff"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--alphas", help="comma list of orders; one subdirectory each")
    p = sub.add_parser("sweep-b", parents=[common])
    p.add_argument("--b-values", help="comma list of control weights B")
    p.add_argument("--alphas", help="comma list of orders (default: 1,0.9,0.8)")
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    return parser


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    opts = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if opts.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        overrides = parse_assignments(opts.set)
        for key in ("alpha", "tf", "steps"):
            if getattr(opts, key) is not None:
                overrides[key] = getattr(opts, key)
        scenario = load_scenario(opts.config, overrides)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return dispatch(opts.command, scenario, opts, argv)


if __name__ == "__main__":
    sys.exit(main())
