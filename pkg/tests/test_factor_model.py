import math

import numpy as np
import pytest

from factorld import _rng
from factorld.errors import ValidationError
from factorld.factor_model import BoundedIID, Deterministic, FactorModelSpec, column_sums, sample_sum
from factorld.rv_dist import pareto


def factors_for(spec, seed):
    return spec.factor_dist.quantile(_rng.open_uniform(_rng.stream(seed, 0, _rng.FACTORS), spec.d))


class TestSampleSum:
    def test_single_term(self, table1_spec):
        s = sample_sum(table1_spec, 1, seed=4)
        np.testing.assert_array_equal(s.column_sums, np.ones(10))
        assert s.s_n == pytest.approx(math.fsum(factors_for(table1_spec, 4)) + s.idio_terms[0], rel=1e-15)

    def test_deterministic_column_sums_exact(self, table1_spec):
        s = sample_sum(table1_spec, 100, seed=0)
        np.testing.assert_array_equal(s.column_sums, np.full(10, 100.0))

    def test_scaling_by_loading(self):
        spec = FactorModelSpec(1, pareto(5), pareto(3), Deterministic([2.0]))
        for n in (1, 7, 1000):
            s = sample_sum(spec, n, seed=9)
            assert s.factor_terms[0] == 2 * n * factors_for(spec, 9)[0]

    @pytest.mark.parametrize("n", [1, 10, 5000])
    def test_decomposition_identity(self, table1_spec, n):
        s = sample_sum(table1_spec, n, seed=n)
        parts = np.concatenate([s.factor_terms, s.idio_terms])
        assert s.s_n == pytest.approx(np.sum(parts), rel=1e-10)
        assert s.s_n == math.fsum(parts)

    def test_stream_separation(self, table1_spec):
        a = sample_sum(table1_spec, 10, seed=3)
        b = sample_sum(table1_spec, 1000, seed=3)
        np.testing.assert_array_equal(a.factor_terms / a.column_sums, b.factor_terms / b.column_sums)
        np.testing.assert_array_equal(a.idio_terms, b.idio_terms[:10])

    def test_reproducible(self, small_spec):
        assert sample_sum(small_spec, 50, seed=1).s_n == sample_sum(small_spec, 50, seed=1).s_n
        assert sample_sum(small_spec, 50, seed=1).s_n != sample_sum(small_spec, 50, seed=2).s_n

    def test_random_loadings_bounded(self):
        spec = FactorModelSpec(3, pareto(5), pareto(3), BoundedIID((0, 1, -1), (2, 3, 1)))
        s = sample_sum(spec, 200, seed=0)
        assert np.all(s.column_sums >= 200 * np.array([0, 1, -1]))
        assert np.all(s.column_sums <= 200 * np.array([2, 3, 1]))


class TestColumnSums:
    def test_table_loadings(self):
        np.testing.assert_array_equal(column_sums(Deterministic([1.0] * 10), 1000, None), np.full(10, 1000.0))

    def test_law_of_large_numbers(self):
        # Hoeffding: P(|S/n - 1| > 0.01) <= 2 exp(-2 n 0.01^2 / 2^2) = 2 e^-50
        n = 1_000_000
        sums = column_sums(BoundedIID((0.0,) * 3, (2.0,) * 3), n, _rng.stream(0, 0, _rng.LOADINGS))
        np.testing.assert_allclose(sums / n, 1.0, atol=0.01)

    def test_additive_over_consecutive_rows(self):
        spec = BoundedIID((0.0, -1.0), (1.0, 4.0))
        whole = column_sums(spec, 3000, _rng.stream(5, 0, 0))
        gen = _rng.stream(5, 0, 0)
        split = column_sums(spec, 1000, gen) + column_sums(spec, 2000, gen)
        np.testing.assert_allclose(whole, split, rtol=1e-12)

    def test_rejects_bad_n(self):
        with pytest.raises(ValueError):
            column_sums(Deterministic([1.0]), 0, None)


class TestValidation:
    def test_alpha_bounds(self):
        with pytest.raises(ValidationError, match="alpha_eps > 2"):
            FactorModelSpec(1, pareto(5), pareto(1.5), Deterministic([1.0]))
        with pytest.raises(ValidationError, match="alpha_F > 2"):
            FactorModelSpec(1, pareto(2.0), pareto(3), Deterministic([1.0]))

    def test_length_mismatch(self):
        with pytest.raises(ValidationError, match="length"):
            FactorModelSpec(2, pareto(5), pareto(3), Deterministic([1.0]))

    def test_zero_mean(self):
        with pytest.raises(ValidationError, match="nonzero"):
            FactorModelSpec(2, pareto(5), pareto(3), BoundedIID((-1, -2), (1, 2)))

    def test_bad_d(self):
        with pytest.raises(ValidationError):
            FactorModelSpec(0, pareto(5), pareto(3), Deterministic([1.0]))

    def test_bad_bounds(self):
        with pytest.raises(ValidationError):
            BoundedIID((1.0,), (1.0,))
        with pytest.raises(ValidationError):
            Deterministic([math.inf])
