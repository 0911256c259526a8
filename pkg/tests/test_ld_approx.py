import math
import warnings

import numpy as np
import pytest

from factorld.cond_mc import estimate_tail_cmc
from factorld.errors import RegimeError
from factorld.factor_model import Deterministic, FactorModelSpec
from factorld.ld_approx import (
    AxisIID,
    FactorDominated,
    IdioDominated,
    Mixed,
    UserScalar,
    classify_regime,
    critical_exponents,
    ld_tail_approx,
    ld_terms,
    log_balance,
    mu_value,
)
from factorld.rv_dist import LogSV, RegVarDist, pareto

# published LD column, rows x = 0.1, 1, 10 and columns n = 1e3, 1e4, 1e5
TABLE1_LD = {
    (0.1, 1000): 1.0010e-09, (0.1, 10000): 1.0010e-14, (0.1, 100000): 1.0010e-19,
    (1.0, 1000): 1.1000e-14, (1.0, 10000): 1.1000e-19, (1.0, 100000): 1.1000e-24,
    (10.0, 1000): 1.1000e-18, (10.0, 10000): 1.1000e-23, (10.0, 100000): 1.1000e-28,
}


class TestCriticalExponents:
    @pytest.mark.parametrize("aF,aE,tF,tE", [(5, 3, 2, 1), (4, 3, 3, 2), (5, 2.5, 1.6, 0.6)])
    def test_values(self, aF, aE, tF, tE):
        th = critical_exponents(aF, aE)
        assert th.theta_F == pytest.approx(tF, rel=1e-15)
        assert th.theta_eps == pytest.approx(tE, rel=1e-14)

    def test_factor_not_heavier(self):
        with pytest.raises(RegimeError):
            critical_exponents(3, 5)

    def test_identity_theta_eps(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            aE = rng.uniform(2.01, 6)
            aF = aE + rng.uniform(0.01, 5)
            th = critical_exponents(aF, aE)
            assert th.theta_eps == th.theta_F - 1
            assert th.theta_F > 1 and th.theta_eps > 0


class TestClassify:
    def test_example_setup(self):
        assert classify_regime(5, 3, 2, C=1) == Mixed(1)

    def test_above_critical(self):
        assert classify_regime(5, 3, 3, C=0.3) == IdioDominated()

    def test_factor_lighter(self):
        assert classify_regime(3, 5, 1.5) == FactorDominated()

    def test_below_critical(self):
        assert classify_regime(5, 3, 1.5) == FactorDominated()

    def test_infinite_C_at_critical(self):
        assert classify_regime(5, 3, 2, C=math.inf) == IdioDominated()

    @pytest.mark.parametrize("g", [1.0, 0.5, -2])
    def test_outside_region(self, g):
        with pytest.raises(RegimeError, match="large-deviation"):
            classify_regime(5, 3, g)


class TestMu:
    def test_unit_loadings(self):
        assert mu_value(AxisIID([1.0] * 10, 5)) == 10.0

    def test_user_scalar(self):
        assert mu_value(UserScalar(7.5)) == 7.5

    def test_scaled_axis_matches_exact_tail(self):
        # independent oracle: P(2F > y) / y**-5 for Pareto(5) F is 2**5
        F = pareto(5)
        y = 1e3
        assert mu_value(AxisIID([2.0], 5)) == pytest.approx(float(F.tail(y / 2)) / y ** -5, rel=1e-12)
        assert mu_value(AxisIID([2.0], 5)) == 32.0

    def test_two_sided_negative_loading(self):
        assert mu_value(AxisIID([1.0, -2.0], 3, p=0.25)) == pytest.approx(0.25 + 0.75 * 8)

    def test_degenerate_direction_warns(self):
        with warnings.catch_warnings(record=True) as w:
            warnings.simplefilter("always")
            assert mu_value(AxisIID([-1.0, 0.0], 5, p=1.0)) == 0.0
        assert any("no factor tail mass" in str(x.message) for x in w)


class TestApprox:
    @pytest.mark.parametrize("cell", sorted(TABLE1_LD))
    def test_table1_golden(self, table1_spec, cell):
        x, n = cell
        mu = AxisIID([1.0] * 10, 5)
        val = ld_tail_approx(table1_spec, mu, n, float(n) ** 2, x)
        assert float(f"{val:.4e}") == TABLE1_LD[cell]

    def test_x_must_be_positive(self, table1_spec):
        with pytest.raises(ValueError):
            ld_tail_approx(table1_spec, UserScalar(10), 1000, 1e6, 0.0)

    @pytest.mark.parametrize("x", [0.3, 2.0, 17.0])
    def test_homogeneity_per_term(self, table1_spec, x):
        mu = AxisIID([1.0] * 10, 5)
        a1, e1 = ld_terms(table1_spec, mu, 1000, 1e6, 1.0)
        ax, ex = ld_terms(table1_spec, mu, 1000, 1e6, x)
        assert ax / a1 == pytest.approx(x ** -5, rel=1e-13)
        assert ex / e1 == pytest.approx(x ** -3, rel=1e-13)

    def test_dominant_term_switches_at_critical_exponent(self, table1_spec):
        mu = AxisIID([1.0] * 10, 5)
        n = 1e8
        for g, eps_wins in ((1.5, False), (2.5, True)):
            a_F, a_eps = ld_terms(table1_spec, mu, n, n ** g, 1.0)
            assert (a_eps > a_F) == eps_wins
            assert math.log(a_eps / a_F) == pytest.approx(math.log(1 / 10) + log_balance(5, 3, g, n), rel=1e-9)

    def test_critical_balance_is_zero(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            aE = rng.uniform(2.01, 8)
            aF = aE + rng.uniform(0.05, 8)
            th = critical_exponents(aF, aE).theta_F
            n = 10 ** rng.uniform(2, 8)
            scale = abs(math.log(n) * (1 - th * aE))
            assert abs(log_balance(aF, aE, th, n)) <= 1e-12 * scale

    def test_log_sv_keeps_dominant_term(self):
        spec = FactorModelSpec(1, RegVarDist(5, 1, LogSV(1, 1)), pareto(3), Deterministic([1.0]))
        mu = AxisIID([1.0], 5)
        a_F, a_eps = ld_terms(spec, mu, 1000, 1000.0 ** 1.5, 1.0)
        assert ld_tail_approx(spec, mu, 1000, 1000.0 ** 1.5, 1.0) == a_F
        a_F, a_eps = ld_terms(spec, mu, 1000, 1000.0 ** 3, 1.0)
        assert ld_tail_approx(spec, mu, 1000, 1000.0 ** 3, 1.0) == a_eps


class TestScaledLoadingAgainstSimulation:
    def test_loading_two_matches_positive_power(self):
        # EL = 2 at the critical scaling: the approximation with 2**5 agrees with
        # simulation, the one with 2**-5 is off by three orders of magnitude
        spec = FactorModelSpec(1, pareto(5), pareto(3), Deterministic([2.0]))
        n, x = 1000, 1.0
        lam = float(n) ** 2
        est = estimate_tail_cmc(spec, n, lam * x, iters=10_000, seed=0)
        approx = ld_tail_approx(spec, AxisIID([2.0], 5), n, lam, x)
        assert est.value / approx == pytest.approx(1.0, abs=0.1)
        alt = 2.0 ** -5 * (lam * x / n) ** -5 + n * (lam * x) ** -3
        assert est.value / alt > 10
