import math
from statistics import NormalDist

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gpricing.core import ARITHMETIC, LatticeModel, Payoff, TimeGrid
from gpricing.drivers import make_black_scholes, make_gmu, make_zero
from gpricing.errors import ValidationError
from gpricing.pde import (
    PdeGrid,
    black_scholes_closed_form,
    cross_check,
    solve_feynman_kac,
    stable_time_steps,
    terminal_function,
)

R, SIG = 0.05, 0.2


def oracle(s, k, r, sigma, T):
    n = NormalDist()
    d1 = (math.log(s / k) + (r + sigma**2 / 2) * T) / (sigma * math.sqrt(T))
    return s * n.cdf(d1) - k * math.exp(-r * T) * n.cdf(d1 - sigma * math.sqrt(T))


def bs_pde(m, n_t=None, K=100.0):
    grid = PdeGrid(20.0, 500.0, m, 1.0, lambda s: np.maximum(s - K, 0.0), n_t)
    return solve_feynman_kac(
        lambda t, s, u, v: -R * u + R * s * 0, lambda s: SIG * s, lambda s: R * s, grid, lip_f=R
    )


class TestClosedForm:
    def test_reference(self):
        assert black_scholes_closed_form(100, 100, R, SIG, 1) == pytest.approx(10.450584, abs=1e-6)

    def test_independent_oracle(self):
        for s, k in [(90, 100), (100, 80), (120, 130)]:
            assert black_scholes_closed_form(s, k, R, SIG, 0.7) == pytest.approx(oracle(s, k, R, SIG, 0.7), abs=1e-10)

    def test_parity(self):
        c = black_scholes_closed_form(100, 105, R, SIG, 1)
        p = black_scholes_closed_form(100, 105, R, SIG, 1, "put")
        assert c - p == pytest.approx(100 - 105 * math.exp(-R), abs=1e-12)

    def test_limits(self):
        assert black_scholes_closed_form(100, 1e-9, R, SIG, 1) == pytest.approx(100, abs=1e-6)
        assert black_scholes_closed_form(110, 100, R, SIG, 1e-10) == pytest.approx(10, abs=1e-6)
        assert black_scholes_closed_form(90, 100, R, SIG, 1e-10) == pytest.approx(0, abs=1e-6)

    @pytest.mark.parametrize("kw", [{"sigma": 0}, {"sigma": -0.1}, {"T": 0}, {"call_or_put": "x"}])
    def test_rejects(self, kw):
        args = {"s0": 100, "K": 100, "r": R, "sigma": SIG, "T": 1, **kw}
        with pytest.raises(ValidationError):
            black_scholes_closed_form(**args)


class TestSolver:
    def test_martingale_identity(self):
        grid = PdeGrid(1.0, 3.0, 40, 1.0, lambda s: s)
        sol = solve_feynman_kac(lambda t, s, u, v: 0 * u, lambda s: 0.5 + 0 * s, lambda s: 0 * s, grid)
        np.testing.assert_allclose(sol.u, np.broadcast_to(sol.s, sol.u.shape), atol=1e-12)

    def test_stationary_constant(self):
        grid = PdeGrid(50, 150, 50, 1.0, lambda s: np.full_like(s, 4.0))
        sol = solve_feynman_kac(lambda t, s, u, v: 0.3 * np.abs(v), lambda s: 0.2 * s, lambda s: 0 * s, grid, 0.3)
        np.testing.assert_allclose(sol.u, 4.0)

    def test_black_scholes_m800(self):
        assert abs(bs_pde(800).at(100.0) - 10.450584) <= 0.02

    def test_convergence_order(self):
        errs = [abs(bs_pde(m).at(100.0) - oracle(100, 100, R, SIG, 1)) for m in (100, 200, 400)]
        assert errs[0] / errs[1] >= 3 and errs[1] / errs[2] >= 3

    def test_unstable_rejected_with_minimum(self):
        grid = PdeGrid(20, 500, 200, 1.0, lambda s: s, n_t=10)
        need = stable_time_steps(grid, SIG * 500, R * 500, R)
        with pytest.raises(ValidationError, match=f"n_t={need}"):
            solve_feynman_kac(lambda t, s, u, v: -R * u, lambda s: SIG * s, lambda s: R * s, grid, R)

    @pytest.mark.parametrize("kw", [{"s_min": 5, "s_max": 5}, {"m": 1}, {"n_t": 1}, {"T": 0}])
    def test_grid_validation(self, kw):
        args = {"s_min": 1, "s_max": 2, "m": 10, "T": 1.0, "terminal": lambda s: s, **kw}
        with pytest.raises(ValidationError):
            PdeGrid(**args)

    def test_export(self):
        sol = bs_pde(50)
        lines = sol.to_text().splitlines()
        assert lines[0].startswith("t,20,")
        assert len(lines) == len(sol.t) + 1
        assert float(lines[-1].split(",")[0]) == 1.0


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_discrete_comparison(seed):
    rng = np.random.default_rng(seed)
    knots = np.linspace(60, 140, 6)
    hi_v = rng.normal(0, 10, 6)
    lo_v = hi_v - np.abs(rng.normal(0, 3, 6))
    grid_hi = PdeGrid(60, 140, 40, 0.5, lambda s: np.interp(s, knots, hi_v))
    grid_lo = PdeGrid(60, 140, 40, 0.5, lambda s: np.interp(s, knots, lo_v))

    def f(t, s, u, v):
        return 0.5 * np.abs(u) + 0.5 * np.abs(v)

    args = (f, lambda s: 0.2 * s, lambda s: 0.03 * s)
    hi = solve_feynman_kac(*args, grid_hi, lip_f=0.5).u
    lo = solve_feynman_kac(*args, grid_lo, lip_f=0.5).u
    assert np.all(hi >= lo - 1e-12)


class TestCrossCheck:
    def test_linear(self):
        m = LatticeModel.create(TimeGrid(0, 1, 2000), 100, SIG, R)
        chk = cross_check(m, make_black_scholes(R, R, SIG), Payoff.call(100, 1), 800)
        assert chk.passed and chk.gap <= 0.05
        assert abs(chk.pde_price - 10.450584) <= 0.02

    def test_gmu_put(self):
        m = LatticeModel.create(TimeGrid(0, 1, 2000), 100, SIG, 0.0)
        chk = cross_check(m, make_gmu(0.5), Payoff.put(100, 1), 800, tolerance=0.1)
        assert chk.gap <= 0.1

    def test_constant_payoff(self):
        m = LatticeModel.create(TimeGrid(0, 1, 50), 100, SIG, 0.0)
        chk = cross_check(m, make_zero(), Payoff.constant(3.0, 1), 100)
        assert chk.gap <= 1e-12

    def test_arithmetic_linear_in_b(self):
        m = LatticeModel.create(TimeGrid(0, 1, 64), 0.0, 1.0, 0.0, mapping=ARITHMETIC)
        chk = cross_check(m, make_zero(), Payoff.linear_in_b(2.0, 1), 200)
        assert chk.gap <= 1e-9

    def test_terminal_function_matches_lattice(self):
        m = LatticeModel.create(TimeGrid(0, 1, 16), 100, SIG, R)
        x = Payoff.linear_in_b(1.5, 1)
        st_ = m.terminal_state()
        phi = terminal_function(x, m)
        np.testing.assert_allclose(phi(st_.s[..., 0]), x.evaluate(st_), atol=1e-12)

    def test_report_text(self):
        m = LatticeModel.create(TimeGrid(0, 1, 50), 100, SIG, 0.0)
        txt = cross_check(m, make_zero(), Payoff.constant(1.0, 1), 50).to_text()
        assert txt.splitlines()[0] == "lattice_price,pde_price,gap,tolerance,status"
        assert txt.strip().endswith("pass")

    def test_multi_dim_rejected(self):
        m = LatticeModel.create(TimeGrid(0, 1, 4), d=2)
        with pytest.raises(ValidationError):
            cross_check(m, make_gmu(1.0, 2), Payoff.call(100, 1))
