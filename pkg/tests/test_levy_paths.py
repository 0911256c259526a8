import math

import numpy as np
import pytest
from scipy import stats

from factorld import pareto
from factorld.errors import RegimeError, ValidationError
from factorld.levy_paths import (
    Factor,
    Idio,
    LevyFactorSpec,
    critical_lambda,
    estimate_marginal_tail,
    estimate_marginal_tail_many,
    gamma_n,
    limit_measure_mt,
    limit_measure_terms,
    one_jump_diagnostic,
    sample_factor_level,
    sample_marginal,
    sample_path,
    sample_paths,
)
from factorld.rv_dist import LogSV, RegVarDist


def _unit(d=1, **kw):
    args = dict(lambda_F=1.0, lambda_eps=1.0, jump_F=pareto(5), jump_eps=pareto(3), loading_mean=(1.0,) * d)
    args.update(kw)
    return LevyFactorSpec(d, **args)


class TestSpec:
    def test_rejects_heavy_idio(self):
        with pytest.raises(ValidationError):
            _unit(jump_eps=pareto(1.8), jump_F=pareto(3))

    def test_rejects_factor_heavier(self):
        with pytest.raises(ValidationError):
            _unit(jump_F=pareto(3), jump_eps=pareto(4))

    def test_rejects_zero_loading(self):
        with pytest.raises(ValidationError):
            _unit(d=2, loading_mean=(0.0, 0.0))

    def test_rejects_bad_rate(self):
        with pytest.raises(ValidationError):
            _unit(lambda_F=0.0)

    def test_theta(self, unit_levy):
        assert unit_levy.theta_F == pytest.approx(2.0)

    def test_gamma_n_formula(self, unit_levy):
        n = 10_000
        lam = critical_lambda(unit_levy, n)
        assert lam == pytest.approx(1e8)
        assert gamma_n(unit_levy, n) == pytest.approx((lam / n) ** 5)


class TestLimitMeasure:
    def test_unit_example(self, unit_levy):
        assert limit_measure_mt(unit_levy, 1.0, 1.0) == pytest.approx(2.0, rel=1e-12)

    def test_zero_time(self, unit_levy):
        assert limit_measure_mt(unit_levy, 0.0, 3.0) == 0.0

    def test_ten_factors(self):
        # factor part mu/d = 1, idio part 1/d, times x^-alpha at x = 2
        spec = _unit(d=10)
        expected = 2.0 ** -5 + 0.1 * 2.0 ** -3
        assert limit_measure_mt(spec, 1.0, 2.0) == pytest.approx(expected, rel=1e-12)
        assert expected == pytest.approx(0.04375)

    @pytest.mark.parametrize("x", [0.3, 1.0, 7.5])
    def test_linear_in_t(self, unit_levy, x):
        m1 = limit_measure_mt(unit_levy, 1.0, x)
        for t in (0.0, 0.125, 0.5, 0.75):
            assert limit_measure_mt(unit_levy, t, x) == t * m1

    def test_terms_sum(self, unit_levy):
        a, b = limit_measure_terms(unit_levy, 0.5, 1.5)
        assert a + b == pytest.approx(limit_measure_mt(unit_levy, 0.5, 1.5), rel=1e-15)

    @pytest.mark.parametrize("x", [0.0, -1.0])
    def test_nonpositive_x(self, unit_levy, x):
        with pytest.raises(ValueError):
            limit_measure_mt(unit_levy, 1.0, x)

    def test_t_out_of_range(self, unit_levy):
        with pytest.raises(ValueError):
            limit_measure_mt(unit_levy, 1.5, 1.0)

    def test_growing_idio_sv_raises(self):
        spec = _unit(jump_eps=RegVarDist(3.0, 1.0, LogSV(1.0, 1.0)))
        with pytest.raises(RegimeError):
            limit_measure_mt(spec, 1.0, 1.0)


class TestSamplePath:
    @pytest.mark.parametrize("seed", range(8))
    def test_invariants(self, seed):
        spec = _unit(d=2, jump_F=pareto(5, p=0.5), jump_eps=pareto(3, p=0.4), lambda_F=3.0)
        path = sample_path(spec, 20, seed)
        times = [e.time for e in path.events]
        sizes = np.array([e.size for e in path.events])
        assert all(0 < t < 1 for t in times)
        assert all(a < b for a, b in zip(times, times[1:]))
        assert path.terminal == pytest.approx(math.fsum(sizes), rel=1e-12, abs=1e-12)
        prefix = np.concatenate(([0.0], np.cumsum(sizes)))
        assert path.supremum == pytest.approx(prefix.max(), rel=1e-12, abs=1e-12)
        for e in path.events:
            assert isinstance(e.origin, (Factor, Idio))
            if isinstance(e.origin, Factor):
                assert 0 <= e.origin.j < 2
            else:
                assert 0 <= e.origin.i < 20

    def test_one_sided_supremum_is_terminal(self, unit_levy):
        for seed in range(5):
            path = sample_path(unit_levy, 50, seed)
            assert path.supremum == pytest.approx(path.terminal, rel=1e-12)

    def test_matches_batch(self, unit_levy):
        batch = sample_paths(unit_levy, 30, 1, seed=9)[0]
        path = sample_path(unit_levy, 30, seed=9)
        assert path.terminal == batch.terminal[0]
        assert path.supremum == batch.supremum[0]

    def test_factor_count_is_poisson(self, unit_levy):
        batches = sample_paths(unit_levy, 5, 100_000, seed=11)
        counts = []
        for b in batches:
            owner = np.repeat(np.arange(b.terminal.size), np.diff(b.offsets))
            counts.append(np.bincount(owner[b.kind == 0], minlength=b.terminal.size))
        counts = np.concatenate(counts)
        kmax = 5
        observed = np.bincount(np.minimum(counts, kmax), minlength=kmax + 1)
        probs = stats.poisson.pmf(np.arange(kmax), 1.0)
        probs = np.append(probs, 1.0 - probs.sum())
        _, pval = stats.chisquare(observed, probs * counts.size)
        assert pval > 1e-3

    def test_terminal_matches_marginal_law(self, unit_levy):
        n = 20
        term = np.concatenate([b.terminal for b in sample_paths(unit_levy, n, 20_000, seed=1)])
        marg = sample_marginal(unit_levy, n, 1.0, 20_000, seed=2)
        assert stats.ks_2samp(term, marg).pvalue > 1e-3

    def test_same_seed_terminal_equals_marginal(self, unit_levy):
        term = np.concatenate([b.terminal for b in sample_paths(unit_levy, 15, 3000, seed=4)])
        marg = sample_marginal(unit_levy, 15, 1.0, 3000, seed=4)
        np.testing.assert_allclose(term, marg, rtol=1e-10)

    def test_workers_identical(self, unit_levy):
        a = np.concatenate([b.supremum for b in sample_paths(unit_levy, 10, 4500, seed=2, workers=1)])
        b = np.concatenate([b.supremum for b in sample_paths(unit_levy, 10, 4500, seed=2, workers=3)])
        assert np.array_equal(a, b)


class TestFactorLevel:
    def test_compound_tail(self):
        # P(|F(1)| > x) ~ lambda_F P(|Z| > x) for a single subexponential factor
        jf = pareto(2.5, p=0.5)
        spec = _unit(jump_F=jf, jump_eps=pareto(2.2, p=0.5))
        f = np.abs(sample_factor_level(spec, 10_000_000, seed=0)[:, 0])
        x = np.quantile(f, 1 - 1e-4)
        ratio = 1e-4 / (spec.lambda_F * float(jf.abs_tail(x)))
        assert 0.85 <= ratio <= 1.15

    def test_zero_time_is_zero(self, unit_levy):
        assert np.all(sample_factor_level(unit_levy, 100, seed=0, t=0.0) == 0.0)


class TestMarginal:
    def test_zero_time(self, unit_levy):
        e = estimate_marginal_tail(unit_levy, 1000, 0.0, 1.0, 500, seed=0)
        assert e.value == 0.0
        assert e.std_error == 0.0

    def test_far_tail_vanishes(self, unit_levy):
        e = estimate_marginal_tail(unit_levy, 1000, 1.0, 1e6, 2000, seed=0)
        assert e.value < 1e-12

    def test_two_factors(self):
        spec = _unit(d=2)
        # uncorrected normalization would give 2.5 here
        assert limit_measure_mt(spec, 1.0, 1.0) == pytest.approx(1.5)
        e = estimate_marginal_tail(spec, 1000, 1.0, 1.0, 20_000, seed=1)
        assert e.value == pytest.approx(1.5, rel=0.1)

    def test_half_time(self, unit_levy):
        e = estimate_marginal_tail(unit_levy, 1000, 0.5, 1.0, 20_000, seed=3)
        assert e.value == pytest.approx(limit_measure_mt(unit_levy, 0.5, 1.0), rel=0.1)

    def test_many_matches_single(self, unit_levy):
        many = estimate_marginal_tail_many(unit_levy, 500, 1.0, [1.0, 2.0], 3000, seed=5)
        one = estimate_marginal_tail(unit_levy, 500, 1.0, 2.0, 3000, seed=5)
        assert many[1].value == one.value

    def test_workers_identical(self, unit_levy):
        a = estimate_marginal_tail(unit_levy, 500, 1.0, 1.0, 4500, seed=8, workers=1)
        b = estimate_marginal_tail(unit_levy, 500, 1.0, 1.0, 4500, seed=8, workers=4)
        assert a.value == b.value and a.std_error == b.std_error

    def test_raw_unnormalized(self, unit_levy):
        e = estimate_marginal_tail(unit_levy, 1000, 1.0, 2.0, 2000, seed=0)
        assert e.value == pytest.approx(e.gamma_n * e.raw.value, rel=1e-12)


class TestOneJump:
    def test_nonpositive_threshold_counts_all(self, unit_levy):
        r = one_jump_diagnostic(unit_levy, 10, -1.0, paths=2000, seed=0)
        assert not r.stratified
        nonempty = sum(int(np.sum(np.diff(b.offsets) > 0)) for b in sample_paths(unit_levy, 10, 2000, seed=0))
        assert r.exceedances == nonempty

    def test_stratified_agrees_with_plain(self, unit_levy):
        n = 30
        thr = 0.25 * critical_lambda(unit_levy, n)
        strat = one_jump_diagnostic(unit_levy, n, thr, paths=100_000, seed=1)
        plain_hits = 0
        total = 0
        for b in sample_paths(unit_levy, n, 100_000, seed=2):
            plain_hits += int(np.sum(b.supremum > thr))
            total += b.terminal.size
        p_plain = plain_hits / total
        se = math.sqrt(p_plain * (1 - p_plain) / total)
        assert plain_hits > 200
        assert abs(strat.exceedance_probability - p_plain) < 4 * se + 0.05 * p_plain

    def test_ratios_in_unit_interval(self, unit_levy):
        r = one_jump_diagnostic(unit_levy, 50, critical_lambda(unit_levy, 50), paths=20_000, seed=0)
        assert r.exceedances > 0
        assert np.all(r.ratios > 0) and np.all(r.ratios <= 1.0 + 1e-12)
        assert math.fsum(r.weights) == pytest.approx(r.exceedance_probability)

    def test_medians_increase_with_threshold(self, unit_levy):
        n = 100
        lam = critical_lambda(unit_levy, n)
        meds = [one_jump_diagnostic(unit_levy, n, c * lam, paths=50_000, seed=6).median for c in (0.5, 1, 2, 4)]
        assert all(a <= b + 1e-9 for a, b in zip(meds, meds[1:])), meds

    def test_idio_majority(self):
        spec = _unit(lambda_eps=4.0, jump_F=pareto(6, p=0.5), jump_eps=pareto(3, p=0.5))
        a_F, a_eps = limit_measure_terms(spec, 1.0, 1.0)
        assert a_eps / (a_F + a_eps) == pytest.approx(0.8)
        r = one_jump_diagnostic(spec, 100, critical_lambda(spec, 100), paths=50_000, seed=3)
        assert r.idio_share == pytest.approx(0.8, abs=0.1)
        assert r.concentration(0.9) >= 0.9

    def test_workers_identical(self, unit_levy):
        kw = dict(paths=9000, seed=4)
        a = one_jump_diagnostic(unit_levy, 40, 600.0, workers=1, **kw)
        b = one_jump_diagnostic(unit_levy, 40, 600.0, workers=4, **kw)
        assert np.array_equal(a.ratios, b.ratios)
        assert np.array_equal(a.weights, b.weights)

    def test_bad_arguments(self, unit_levy):
        with pytest.raises(ValueError):
            one_jump_diagnostic(unit_levy, 10, 1.0, paths=0)
        with pytest.raises(ValueError):
            one_jump_diagnostic(unit_levy, 10, 1.0, paths=100, small_share=1.0)
