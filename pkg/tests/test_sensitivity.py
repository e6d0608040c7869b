import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from fractb.fracode import TimeGrid
from fractb.model import BASELINE, PARAM_NAMES, endemic_equilibrium, tb_rhs
from fractb.sensitivity import (
    SENSITIVITY_ORDER,
    perturbation_experiment,
    sensitivity_index,
    sensitivity_table,
)

PUBLISHED = {
    "mu": -1.93223,
    "epsilon": 0.911803,
    "gamma": -0.605532,
    "alpha1": -0.376538,
    "delta": 0.0112215,
    "alpha2": -0.0872783,
    "Lambda": 1.0,
    "k": 0.100487,
    "beta": 1.0,
}


def analytic_indices(params):
    """Closed-form (dR0/dp) p / R0 by symbolic differentiation."""
    syms = sp.symbols(PARAM_NAMES, positive=True)
    Lam, beta, mu, k, delta, eps, gam, a1, a2 = syms
    b1, b2, b3 = mu + eps, mu + gam + a1, mu + delta + a2
    R0 = beta * eps * b3 * Lam / (mu * b1 * b2 * b3 - mu * delta * gam * ((1 - k) * eps + k * b1))
    subs = {s: getattr(params, s.name) for s in syms}
    return {s.name: float((sp.diff(R0, s) * s / R0).subs(subs)) for s in syms}


@pytest.fixture(scope="module")
def analytic():
    return analytic_indices(BASELINE)


@pytest.mark.parametrize("name", PARAM_NAMES)
def test_matches_symbolic_derivative(name, analytic):
    assert sensitivity_index(BASELINE, name).index == pytest.approx(analytic[name], abs=1e-8)


@pytest.mark.parametrize("name", [n for n in SENSITIVITY_ORDER if n != "alpha2"])
def test_published_values(name):
    assert sensitivity_index(BASELINE, name).index == pytest.approx(PUBLISHED[name], abs=1e-4)


def test_alpha2_is_published_value_over_ten(analytic):
    # The printed alpha2 entry carries the right digits one decade too high.
    assert analytic["alpha2"] == pytest.approx(PUBLISHED["alpha2"] / 10, abs=1e-6)


@pytest.mark.parametrize("name", ["Lambda", "beta"])
def test_linear_parameters_exact(name):
    assert sensitivity_index(BASELINE, name).index == pytest.approx(1.0, abs=1e-10)


def test_table_order_and_extremes():
    table = sensitivity_table(BASELINE)
    assert [s.param_name for s in table] == list(SENSITIVITY_ORDER)
    by_size = sorted(table, key=lambda s: abs(s.index))
    assert by_size[-1].param_name == "mu"
    assert by_size[0].param_name == "alpha2"
    assert by_size[1].param_name == "delta"


def test_step_halving_is_stable():
    for name in PARAM_NAMES:
        a = sensitivity_index(BASELINE, name).index
        b = sensitivity_index(BASELINE, name, rel_step=5e-7).index
        assert abs(a - b) <= 1e-6


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(0.8, 1.2), min_size=9, max_size=9))
def test_signs_stable_under_twenty_percent_changes(factors):
    params = BASELINE
    for name, f in zip(PARAM_NAMES, factors):
        params = params.scaled(name, f)
    params = params.replace(k=min(params.k, 1.0))
    for s in sensitivity_table(params):
        assert np.sign(s.index) == np.sign(PUBLISHED[s.param_name])


@settings(max_examples=25, deadline=None)
@given(st.floats(0.5, 2.0), st.floats(0.5, 2.0))
def test_linear_parameters_exact_anywhere(f1, f2):
    params = BASELINE.scaled("beta", f1).scaled("mu", f2)
    for name in ("Lambda", "beta"):
        assert sensitivity_index(params, name).index == pytest.approx(1.0, abs=1e-10)


def test_unknown_parameter():
    with pytest.raises(KeyError):
        sensitivity_index(BASELINE, "B")


def _classical_rel_l2(name, pct, tf, n):
    """Independent rel. L2 change in I(t) using scipy's adaptive integrator."""
    x0 = np.array(endemic_equilibrium(BASELINE))
    t = np.linspace(0, tf, n + 1)
    runs = []
    for p in (BASELINE, BASELINE.scaled(name, 1 + pct / 100)):
        sol = solve_ivp(lambda _, x, p=p: tb_rhs(x, p, p.gamma), (0, tf), x0,
                        t_eval=t, rtol=1e-11, atol=1e-9, method="DOP853")
        runs.append(sol.y[2])
    return np.linalg.norm(runs[1] - runs[0]) / np.linalg.norm(runs[0])


class TestPerturbation:
    def test_zero_change(self):
        res = perturbation_experiment(BASELINE, "mu", 0.0, 1.0, TimeGrid(5.0, 200))
        assert res.rel_L2_diff == 0.0

    @pytest.mark.parametrize("name", ["mu", "delta"])
    def test_against_classical_integrator(self, name):
        ours = perturbation_experiment(BASELINE, name, 15.0, 1.0, TimeGrid(5.0, 2000)).rel_L2_diff
        assert ours == pytest.approx(_classical_rel_l2(name, 15.0, 5.0, 2000), rel=1e-3)

    def test_five_year_horizon(self):
        # Oracle values (scipy DOP853): mu -> 0.006244, delta -> 0.002640.
        grid = TimeGrid(5.0, 2000)
        mu = perturbation_experiment(BASELINE, "mu", 15.0, 1.0, grid).rel_L2_diff
        delta = perturbation_experiment(BASELINE, "delta", 15.0, 1.0, grid).rel_L2_diff
        assert mu == pytest.approx(0.006244, rel=1e-3)
        assert delta == pytest.approx(0.002640, rel=1e-3)
        assert delta < 0.02
        assert mu > delta

    def test_long_horizon_separates_mu_and_delta(self):
        grid = TimeGrid(50.0, 2000)
        mu = perturbation_experiment(BASELINE, "mu", 15.0, 1.0, grid).rel_L2_diff
        delta = perturbation_experiment(BASELINE, "delta", 15.0, 1.0, grid).rel_L2_diff
        assert mu >= 10 * delta
        assert delta < 0.02

    def test_rejects_total_removal(self):
        with pytest.raises(ValueError):
            perturbation_experiment(BASELINE, "mu", -100.0, 1.0, TimeGrid(1.0, 10))
