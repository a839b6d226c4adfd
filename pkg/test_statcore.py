"""
Tests for statcore.py - least squares, nested F-tests and distribution functions.
"""

import math
from fractions import Fraction

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special
from scipy import stats as scipy_stats

from statcore import (
    f_cdf,
    f_sf,
    least_squares,
    nested_f_test,
    ols_fit,
    regularized_incomplete_beta,
    significance_code,
    t_sf_two_sided,
)
from timeseries import DesignMatrix
from utils import InsufficientDataError, ModelSpecificationError, RankDeficiencyError

DEGREES_OF_FREEDOM = (1, 2, 5, 10, 50, 200)
F_GRID = (0.0, 0.05, 0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.9646, 7.5, 12.0, 20.0)


def make_design(matrix, response, names=None) -> DesignMatrix:
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim == 1:
        matrix = matrix[:, None]
    names = tuple(names) if names is not None else tuple(f'x{i}' for i in range(matrix.shape[1]))
    response = np.asarray(response, dtype=float)
    return DesignMatrix(
        response=response,
        matrix=matrix,
        names=names,
        response_name='y',
        dates=pd.RangeIndex(len(response)),
    )


def random_design(seed: int, n: int, p: int):
    """Intercept plus p - 1 standard normal columns and a noisy linear response."""
    rng = np.random.default_rng(seed)
    matrix = np.column_stack([np.ones(n)] + [rng.normal(size=n) for _ in range(p - 1)])
    response = matrix @ rng.normal(size=p) + rng.normal(size=n)
    names = ['intercept'] + [f'x{i}' for i in range(1, p)]
    return matrix, response, names


def exact_normal_equations(matrix, response):
    """Solve X'X b = X'y in exact rational arithmetic."""
    rows = [[Fraction(float(v)) for v in row] for row in matrix]
    y = [Fraction(float(v)) for v in response]
    p = len(rows[0])
    a = [[sum(r[i] * r[j] for r in rows) for j in range(p)] for i in range(p)]
    b = [sum(r[i] * yt for r, yt in zip(rows, y)) for i in range(p)]

    for col in range(p):
        pivot = next(r for r in range(col, p) if a[r][col] != 0)
        a[col], a[pivot] = a[pivot], a[col]
        b[col], b[pivot] = b[pivot], b[col]
        for r in range(p):
            if r != col and a[r][col] != 0:
                factor = a[r][col] / a[col][col]
                a[r] = [x - factor * y for x, y in zip(a[r], a[col])]
                b[r] -= factor * b[col]
    return [float(b[i] / a[i][i]) for i in range(p)]


def f_cdf_by_quadrature(x: float, d1: int, d2: int) -> float:
    """Integrate the F density over [0, x] with t = u^2 to remove the d1 = 1 singularity."""
    if x == 0:
        return 0.0
    log_norm = special.betaln(d1 / 2, d2 / 2)

    def integrand(u):
        if u <= 0:
            return 0.0 if d1 > 1 else 2 * math.exp(0.5 * d1 * math.log(d1 / d2) - log_norm)
        t = u * u
        log_density = (
            0.5 * (d1 * math.log(d1 * t) + d2 * math.log(d2) - (d1 + d2) * math.log(d1 * t + d2))
            - math.log(t) - log_norm
        )
        return 2 * u * math.exp(log_density)

    upper = math.sqrt(x)
    mode = (d1 - 2) / d1 * d2 / (d2 + 2) if d1 > 2 else 0.0
    breaks = [b for b in (math.sqrt(mode), 1.0) if 0 < b < upper]
    value, _ = integrate.quad(integrand, 0, upper, points=breaks or None, epsabs=1e-13, epsrel=1e-13, limit=500)
    return value


class TestOlsFit:
    """Tests for ols_fit function."""

    def test_intercept_only(self):
        fit = ols_fit(make_design(np.ones(3), [1, 2, 3], ['intercept']))
        assert fit.coefficients['intercept'] == pytest.approx(2.0)
        assert fit.rss == pytest.approx(2.0)
        assert fit.dof == 2
        assert fit.rse == pytest.approx(1.0)

    def test_exact_line(self):
        x = np.array([0.0, 1.0, 2.0])
        fit = ols_fit(make_design(np.column_stack([np.ones(3), x]), 3 + 2 * x, ['intercept', 'x']))
        assert fit.coefficients.tolist() == pytest.approx([3.0, 2.0])
        assert fit.rss == pytest.approx(0.0, abs=1e-20)

    def test_duplicated_column(self):
        x = np.array([0.0, 1.0, 2.0, 4.0, 3.0])
        with pytest.raises(RankDeficiencyError, match='x2'):
            ols_fit(make_design(np.column_stack([np.ones(5), x, x]), [1, 2, 3, 5, 4], ['intercept', 'x1', 'x2']))

    def test_scaled_copy_is_dependent(self):
        x = np.array([0.0, 1.0, 2.0, 4.0, 3.0])
        with pytest.raises(RankDeficiencyError):
            ols_fit(make_design(np.column_stack([np.ones(5), x, 3 * x + 1]), [1, 2, 3, 5, 4]))

    def test_too_few_rows(self):
        with pytest.raises(InsufficientDataError):
            ols_fit(make_design(np.column_stack([np.ones(2), [1.0, 2.0]]), [1, 2]))

    def test_named_inference(self):
        matrix, response, names = random_design(7, 40, 3)
        fit = ols_fit(make_design(matrix, response, names))
        assert list(fit.coefficients.index) == names
        assert list(fit.p_values.index) == names
        assert fit.n_obs == 40

    def test_least_squares_matches_fit(self):
        matrix, response, names = random_design(11, 30, 4)
        fit = ols_fit(make_design(matrix, response, names))
        assert least_squares(matrix, response, tuple(names)) == pytest.approx(fit.coefficients.to_numpy())

    def test_p_values_match_student_t(self):
        matrix, response, names = random_design(3, 25, 3)
        fit = ols_fit(make_design(matrix, response, names))
        expected = 2 * scipy_stats.t.sf(np.abs(fit.t_stats.to_numpy()), fit.dof)
        assert fit.p_values.to_numpy() == pytest.approx(expected, abs=1e-10)

    def test_standard_errors_match_covariance(self):
        matrix, response, names = random_design(5, 35, 4)
        fit = ols_fit(make_design(matrix, response, names))
        covariance = fit.rss / fit.dof * np.linalg.inv(matrix.T @ matrix)
        assert fit.coefficient_se.to_numpy() == pytest.approx(np.sqrt(np.diag(covariance)), rel=1e-8)

    def test_agrees_with_exact_normal_equations(self):
        rng = np.random.default_rng(2024)
        for seed in range(100):
            n = int(rng.integers(8, 51))
            p = int(rng.integers(1, 6))
            matrix, response, names = random_design(seed, n, p)
            assert np.linalg.cond(matrix) < 1e6
            fit = ols_fit(make_design(matrix, response, names))
            exact = np.array(exact_normal_equations(matrix, response))
            scale = np.abs(exact).max()
            np.testing.assert_allclose(fit.coefficients.to_numpy(), exact, rtol=1e-8, atol=1e-10 * scale)

    @settings(max_examples=200, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(6, 50), p=st.integers(1, 5))
    def test_fit_invariants(self, seed, n, p):
        matrix, response, names = random_design(seed, n, p)
        fit = ols_fit(make_design(matrix, response, names))

        residual_norm = np.linalg.norm(fit.residuals)
        for j in range(p):
            column = matrix[:, j]
            assert abs(fit.residuals @ column) < 1e-8 * max(residual_norm * np.linalg.norm(column), 1e-300)

        assert fit.rss == pytest.approx(float(fit.residuals @ fit.residuals), rel=1e-9)
        assert fit.rse == pytest.approx(math.sqrt(fit.rss / fit.dof))
        assert fit.t_stats.to_numpy() == pytest.approx((fit.coefficients / fit.coefficient_se).to_numpy())
        assert ((fit.p_values >= 0) & (fit.p_values <= 1)).all()

    @settings(max_examples=200, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(8, 50), p=st.integers(1, 4))
    def test_adding_regressor_never_increases_rss(self, seed, n, p):
        matrix, response, names = random_design(seed, n, p + 1)
        small = ols_fit(make_design(matrix[:, :p], response, names[:p]))
        large = ols_fit(make_design(matrix, response, names))
        assert large.rss <= small.rss * (1 + 1e-12)
        assert large.r_squared >= small.r_squared - 1e-12


class TestNestedFTest:
    """Tests for nested_f_test function."""

    def fits(self, seed=0, n=40):
        matrix, response, names = random_design(seed, n, 4)
        restricted = ols_fit(make_design(matrix[:, :2], response, names[:2]))
        full = ols_fit(make_design(matrix, response, names))
        return restricted, full

    def test_statistic(self):
        restricted, full = self.fits()
        result = nested_f_test(restricted, full)
        expected = ((restricted.rss - full.rss) / 2) / (full.rss / full.dof)
        assert result.f_stat == pytest.approx(expected)
        assert (result.df_num, result.df_den) == (2, full.dof)
        assert result.p_value == pytest.approx(1 - f_cdf(result.f_stat, 2, full.dof), abs=1e-12)

    def test_same_regressors(self):
        _, full = self.fits()
        with pytest.raises(ModelSpecificationError):
            nested_f_test(full, full)

    def test_not_nested(self):
        matrix, response, names = random_design(1, 30, 3)
        a = ols_fit(make_design(matrix[:, [0, 1]], response, ['intercept', 'x1']))
        b = ols_fit(make_design(matrix[:, [0, 2]], response, ['intercept', 'x2']))
        with pytest.raises(ModelSpecificationError):
            nested_f_test(a, b)

    def test_mismatched_sample(self):
        matrix, response, names = random_design(2, 30, 3)
        restricted = ols_fit(make_design(matrix[1:, :2], response[1:], names[:2]))
        full = ols_fit(make_design(matrix, response, names))
        with pytest.raises(ModelSpecificationError):
            nested_f_test(restricted, full)

    def test_planted_effect_detected(self):
        rng = np.random.default_rng(42)
        n = 200
        x = rng.normal(size=n + 1)
        y = 0.8 * x[:-1] + rng.normal(size=n)
        matrix = np.column_stack([np.ones(n), x[:-1]])
        restricted = ols_fit(make_design(matrix[:, :1], y, ['intercept']))
        full = ols_fit(make_design(matrix, y, ['intercept', 'x(t-1)']))
        assert nested_f_test(restricted, full).p_value < 0.01

    @settings(max_examples=200, deadline=None)
    @given(
        seed=st.integers(0, 2 ** 32 - 1),
        a=st.floats(0.1, 10).flatmap(lambda v: st.sampled_from([v, -v])),
        b=st.floats(-100, 100),
        c=st.floats(0.1, 10),
    )
    def test_affine_invariance(self, seed, a, b, c):
        matrix, response, names = random_design(seed, 40, 4)
        restricted = ols_fit(make_design(matrix[:, :2], response, names[:2]))
        full = ols_fit(make_design(matrix, response, names))
        p = nested_f_test(restricted, full).p_value

        transformed = matrix.copy()
        transformed[:, 3] = a * transformed[:, 3] + b
        restricted2 = ols_fit(make_design(transformed[:, :2], c * response, names[:2]))
        full2 = ols_fit(make_design(transformed, c * response, names))
        assert nested_f_test(restricted2, full2).p_value == pytest.approx(p, abs=1e-9)


class TestDistributions:
    """Tests for the incomplete beta, F and t functions."""

    def test_f_cdf_at_zero(self):
        assert f_cdf(0, 3, 7) == 0.0

    def test_f_cdf_limit(self):
        assert f_cdf(math.inf, 3, 7) == 1.0
        assert f_cdf(1e12, 3, 7) == pytest.approx(1.0)

    def test_f_cdf_negative(self):
        with pytest.raises(ValueError):
            f_cdf(-0.1, 1, 10)

    def test_f_cdf_critical_value(self):
        assert f_cdf(4.9646, 1, 10) == pytest.approx(0.95, abs=1e-3)

    @pytest.mark.parametrize('d', [1, 2, 5, 10, 50, 200])
    def test_f_cdf_median_of_equal_dof(self, d):
        assert f_cdf(1.0, d, d) == pytest.approx(0.5, abs=1e-12)

    def test_f_sf_complements_cdf(self):
        for x in F_GRID:
            assert f_sf(x, 5, 50) + f_cdf(x, 5, 50) == pytest.approx(1.0, abs=1e-14)

    def test_f_sf_far_tail_keeps_precision(self):
        # 1 - cdf would round to 0 here
        tail = f_sf(200.0, 5, 200)
        assert 0 < tail < 1e-50
        assert tail == pytest.approx(scipy_stats.f.sf(200.0, 5, 200), rel=1e-8)

    def test_f_cdf_monotone(self):
        values = [f_cdf(x, 5, 10) for x in np.linspace(0, 20, 200)]
        assert all(a <= b for a, b in zip(values, values[1:]))

    def test_f_cdf_matches_quadrature(self):
        checked = 0
        for d1 in DEGREES_OF_FREEDOM:
            for d2 in DEGREES_OF_FREEDOM:
                for x in F_GRID:
                    assert f_cdf(x, d1, d2) == pytest.approx(f_cdf_by_quadrature(x, d1, d2), abs=1e-8), (x, d1, d2)
                    checked += 1
        assert checked >= 500

    def test_incomplete_beta_matches_scipy(self):
        for a in (0.5, 1.0, 2.5, 10.0, 100.0):
            for b in (0.5, 1.0, 2.5, 10.0, 100.0):
                for x in (0.0, 0.01, 0.2, 0.5, 0.8, 0.99, 1.0):
                    assert regularized_incomplete_beta(x, a, b) == pytest.approx(special.betainc(a, b, x), abs=1e-12)

    def test_t_at_zero(self):
        assert t_sf_two_sided(0.0, 10) == pytest.approx(1.0)

    def test_t_limit(self):
        assert t_sf_two_sided(math.inf, 10) == 0.0
        assert t_sf_two_sided(1e8, 10) < 1e-60

    def test_t_critical_value(self):
        assert t_sf_two_sided(2.228, 10) == pytest.approx(0.05, abs=1e-3)

    @settings(max_examples=200, deadline=None)
    @given(t=st.floats(-50, 50), dof=st.integers(1, 200))
    def test_t_symmetric_and_matches_scipy(self, t, dof):
        p = t_sf_two_sided(t, dof)
        assert p == t_sf_two_sided(-t, dof)
        assert p == pytest.approx(2 * scipy_stats.t.sf(abs(t), dof), abs=1e-10)


class TestSignificanceCode:
    """Tests for significance_code function."""

    def test_highly_significant(self):
        assert significance_code(0.003) == '***'

    def test_significant(self):
        assert significance_code(0.046) == '**'

    def test_boundaries_are_strict(self):
        assert significance_code(0.01) == '**'
        assert significance_code(0.05) == '*'
        assert significance_code(0.1) == ''

    def test_weak(self):
        assert significance_code(0.0999) == '*'

    def test_not_significant(self):
        assert significance_code(0.5) == ''
