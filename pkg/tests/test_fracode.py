import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fractb.errors import NoConvergence, NonFiniteState
from fractb.fracode import (
    GridFunction,
    TimeGrid,
    abm_corrector_weights,
    abm_predictor_weights,
    mittag_leffler,
    solve_caputo_ivp,
)

from oracles import corrector_weights_mp, ml_half_negative, predictor_weights_mp, rk4


class TestTimeGrid:
    def test_nodes(self):
        g = TimeGrid(5.0, 4)
        assert g.h == 1.25
        np.testing.assert_array_equal(g.nodes, [0, 1.25, 2.5, 3.75, 5.0])
        assert len(g) == 5

    @pytest.mark.parametrize("tf, n", [(0.0, 10), (-1.0, 10), (1.0, 1), (1.0, 2.5)])
    def test_invalid(self, tf, n):
        with pytest.raises(ValueError):
            TimeGrid(tf, n)


def test_grid_function_interpolates_between_nodes():
    g = TimeGrid(1.0, 4)
    f = GridFunction(g, [0.0, 1.0, 2.0, 3.0, 4.0])
    assert f(0.5) == 2.0
    assert f(0.375) == pytest.approx(1.5)
    assert f(-1.0) == 0.0 and f(2.0) == 4.0
    assert f.reversed().values.tolist() == [4.0, 3.0, 2.0, 1.0, 0.0]


class TestWeights:
    def test_predictor_alpha_one_is_rectangle_rule(self):
        np.testing.assert_allclose(abm_predictor_weights(1.0, 7, h=0.1), 0.1, rtol=1e-14)

    def test_predictor_direct(self):
        assert abm_predictor_weights(0.5, 0, h=1.0)[0] == pytest.approx(2.0, rel=1e-15)

    def test_predictor_extended_precision(self):
        ref = np.array(predictor_weights_mp(0.8, 3, 0.1), dtype=float)
        np.testing.assert_allclose(abm_predictor_weights(0.8, 3, h=0.1), ref, rtol=1e-15)

    def test_corrector_alpha_one_is_trapezoid(self):
        a = abm_corrector_weights(1.0, 5, h=0.2)
        np.testing.assert_allclose(a, [0.1, 0.2, 0.2, 0.2, 0.2, 0.2, 0.1], rtol=1e-13)

    def test_corrector_direct(self):
        a = abm_corrector_weights(0.9, 0, h=1.0)
        assert a[1] == pytest.approx(1 / (0.9 * 1.9), rel=1e-15)
        assert len(a) == 2

    def test_corrector_extended_precision(self):
        ref = np.array(corrector_weights_mp(0.8, 5, 0.05), dtype=float)
        np.testing.assert_allclose(abm_corrector_weights(0.8, 5, h=0.05), ref, rtol=1e-14)

    @settings(max_examples=40, deadline=None)
    @given(alpha=st.floats(1e-6, 1.0), n=st.integers(0, 10_000))
    def test_predictor_weights_positive(self, alpha, n):
        assert np.all(abm_predictor_weights(alpha, n, h=1e-3) > 0)

    @pytest.mark.parametrize("alpha", [0.3, 0.7, 1.0])
    def test_corrector_weights_sum(self, alpha):
        # Exact for f == 1: the weights integrate the kernel over [0, t_{n+1}].
        n, h = 40, 0.05
        a = abm_corrector_weights(alpha, n, h)
        assert a.sum() == pytest.approx(((n + 1) * h) ** alpha / alpha, rel=1e-12)


class TestSolver:
    def test_constant_state_when_rhs_vanishes(self):
        sol = solve_caputo_ivp(lambda t, x: np.zeros(2), [3.0, -1.5], 0.7, TimeGrid(2.0, 50))
        np.testing.assert_array_equal(sol.values, np.tile([3.0, -1.5], (51, 1)))

    def test_classical_decay(self):
        sol = solve_caputo_ivp(lambda t, x: -x, [1.0], 1.0, TimeGrid(1.0, 1000))
        assert sol.values[-1, 0] == pytest.approx(math.exp(-1), abs=1e-4)

    def test_fractional_decay_matches_mittag_leffler(self):
        sol = solve_caputo_ivp(lambda t, x: -x, [1.0], 0.8, TimeGrid(1.0, 2000))
        assert abs(sol.values[-1, 0] - mittag_leffler(0.8, -1.0)) < 1e-3

    def test_first_step_uses_published_weights(self):
        alpha, h, lam = 0.6, 0.1, -2.0
        sol = solve_caputo_ivp(lambda t, x: lam * x, [1.0], alpha, TimeGrid(2 * h, 2))
        g = math.gamma(alpha)
        b = abm_predictor_weights(alpha, 0, h)
        a = abm_corrector_weights(alpha, 0, h)
        xp = 1.0 + b[0] * lam / g
        x1 = 1.0 + (a[0] * lam + a[1] * lam * xp) / g
        assert sol.values[1, 0] == pytest.approx(x1, rel=1e-14)

    def test_alpha_one_agrees_with_rk4(self):
        def f(t, x):
            return np.array([x[1], -x[0] - 0.1 * x[1] + math.sin(t)])

        grid = TimeGrid(5.0, 2000)
        ours = solve_caputo_ivp(f, [1.0, 0.0], 1.0, grid).values
        ref = rk4(f, np.array([1.0, 0.0]), grid.nodes)
        assert np.max(np.abs(ours - ref)) < 1e-3

    def test_deterministic(self):
        grid = TimeGrid(1.0, 300)
        f = lambda t, x: -x * x + np.cos(t)  # noqa: E731
        a = solve_caputo_ivp(f, [0.5], 0.75, grid).values
        b = solve_caputo_ivp(f, [0.5], 0.75, grid).values
        assert a.tobytes() == b.tobytes()

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_blow_up_raises(self):
        with pytest.raises(NonFiniteState) as err:
            solve_caputo_ivp(lambda t, x: x**3, [10.0], 0.9, TimeGrid(10.0, 200))
        assert err.value.step >= 1

    @pytest.mark.parametrize("alpha", [0.0, 1.5, -0.2])
    def test_rejects_bad_order(self, alpha):
        with pytest.raises(ValueError):
            solve_caputo_ivp(lambda t, x: -x, [1.0], alpha, TimeGrid(1.0, 10))


class TestMittagLeffler:
    def test_alpha_one_is_exponential(self):
        assert mittag_leffler(1.0, -1.0) == pytest.approx(math.exp(-1), rel=1e-15)

    @pytest.mark.parametrize("alpha", [0.1, 0.5, 1.0])
    def test_zero(self, alpha):
        assert mittag_leffler(alpha, 0.0) == 1.0

    @pytest.mark.parametrize("x", [0.5, 1.0, 3.0, 10.0])
    def test_half_order_erfc_identity(self, x):
        assert mittag_leffler(0.5, -x) == pytest.approx(ml_half_negative(x), rel=1e-12)

    def test_term_budget(self):
        with pytest.raises(NoConvergence):
            mittag_leffler(0.5, -5.0, max_terms=10)
