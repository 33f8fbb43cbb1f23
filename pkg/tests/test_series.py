import math

import numpy as np
import pytest
import scipy.special as sc

from mvtransfer.expr import parse_expression
from mvtransfer.series import (TruncatedSeries, ZeroConstantTermError, oracle_coefficients, series_mul,
                               series_pow_real, set_compensated)


def rand_series(rng, bounds, const=1.0):
    c = rng.normal(size=tuple(b + 1 for b in bounds)) + 1j * rng.normal(size=tuple(b + 1 for b in bounds))
    c[(0,) * len(bounds)] = const
    return TruncatedSeries(bounds, c)


def gbinom(beta, nmax):
    # generalized binomial coefficients by the product formula
    out = [1.0]
    for k in range(1, nmax + 1):
        out.append(out[-1] * (beta - k + 1) / k)
    return np.array(out)


def naive_mul(a, b):
    out = np.zeros_like(a.coeffs)
    for i in np.ndindex(a.coeffs.shape):
        for j in np.ndindex(b.coeffs.shape):
            k = tuple(x + y for x, y in zip(i, j))
            if all(x < s for x, s in zip(k, out.shape)):
                out[k] += a.coeffs[i] * b.coeffs[j]
    return out


class TestRing:
    @pytest.mark.parametrize("bounds", [(7,), (4, 5), (3, 2, 4)])
    def test_mul_matches_naive(self, bounds):
        rng = np.random.default_rng(0)
        a, b = rand_series(rng, bounds), rand_series(rng, bounds)
        assert np.allclose((a * b).coeffs, naive_mul(a, b), atol=1e-12)

    def test_ring_laws(self):
        rng = np.random.default_rng(1)
        a, b, c = (rand_series(rng, (5, 6)) for _ in range(3))
        assert np.allclose((a * b).coeffs, (b * a).coeffs, atol=1e-12)
        assert np.allclose(((a * b) * c).coeffs, (a * (b * c)).coeffs, atol=1e-11)
        assert np.allclose((a * (b + c)).coeffs, (a * b + a * c).coeffs, atol=1e-12)
        assert np.allclose((a - a).coeffs, 0)
        assert np.allclose((a * 1).coeffs, a.coeffs)

    def test_mixed_bounds_take_minimum(self):
        a = TruncatedSeries.constant(1.0, (3, 5))
        b = TruncatedSeries.constant(2.0, (4, 2))
        assert (a * b).bounds == (3, 2)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            TruncatedSeries.constant(1.0, (3,)) + TruncatedSeries.constant(1.0, (3, 3))

    def test_coefficient_bounds(self):
        s = TruncatedSeries.variable(1, (2, 2))
        assert s.coefficient((0, 1)) == 1
        with pytest.raises(IndexError):
            s.coefficient((3, 0))

    def test_sparse_path_exact(self):
        # few nonzeros take the shift path; result must still be exact
        x, y = TruncatedSeries.variable(0, (40, 40)), TruncatedSeries.variable(1, (40, 40))
        p = (1 - x - y) * (1 + x + y)
        assert p.coefficient((1, 1)) == -2 and p.coefficient((2, 0)) == -1 and p.coefficient((3, 1)) == 0


class TestPow:
    @pytest.mark.parametrize("a", [2.0, 0.5, -1.0, -0.5, 1.5])
    def test_roundtrip(self, a):
        rng = np.random.default_rng(2)
        s = rand_series(rng, (6, 5), const=2.0 + 0.5j)
        back = series_pow_real(series_pow_real(s, a), 1.0 / a)
        assert np.allclose(back.coeffs, s.coeffs, rtol=1e-10, atol=1e-10)

    def test_pow_additive(self):
        rng = np.random.default_rng(3)
        s = rand_series(rng, (8, 4), const=1.5)
        lhs = series_pow_real(s, 0.3) * series_pow_real(s, 0.7)
        assert np.allclose(lhs.coeffs, s.coeffs, atol=1e-10)

    @pytest.mark.parametrize("beta", [0.5, -0.5, -1.0, 2.5, 3.0])
    def test_binomial_closed_form(self, beta):
        s = 1 - TruncatedSeries.variable(0, (30,))
        c = series_pow_real(s, beta).coeffs.real
        n = np.arange(31)
        assert np.allclose(c, (-1.0) ** n * gbinom(beta, 30), rtol=1e-12, atol=1e-15)

    def test_integer_power_of_zero_constant(self):
        x = TruncatedSeries.variable(0, (6,))
        assert (x**3).coefficient((3,)) == 1 and (x**3).coefficient((2,)) == 0

    def test_zero_constant_rejected(self):
        x = TruncatedSeries.variable(0, (6,))
        with pytest.raises(ZeroConstantTermError):
            series_pow_real(x, 0.5)
        with pytest.raises(ZeroConstantTermError):
            series_pow_real(x, -1.0)

    def test_multivariate_monomial(self):
        # (1 - z1 - z2)^-1: coefficients are binomial(n1 + n2, n1)
        b = (12, 9)
        s = 1 - TruncatedSeries.variable(0, b) - TruncatedSeries.variable(1, b)
        c = series_pow_real(s, -1.0).coeffs.real
        for i, j in [(0, 0), (3, 4), (12, 9), (7, 2)]:
            assert c[i, j] == pytest.approx(math.comb(i + j, i), rel=1e-13)


class TestOracle:
    def test_product_closed_form(self):
        s = oracle_coefficients(parse_expression("u1^-0.5*u2^-0.5", 2), (60, 60))
        for n in (1, 10, 60):
            ex = (math.comb(2 * n, n) / 4**n) ** 2
            assert s.coefficient((n, n)).real == pytest.approx(ex, rel=1e-12)

    def test_sqrt_sum_mixed_coefficient(self):
        s = oracle_coefficients(parse_expression("(sqrt(u1)+sqrt(u2))^2", 2), (4, 4))
        assert s.coefficient((1, 1)) == 0.5

    def test_demi_entire_exact_zeros(self):
        s = oracle_coefficients(parse_expression("u1+u2", 2), (20, 20))
        assert np.all(s.coeffs[1:, 1:] == 0)
        assert s.coefficient((0, 0)) == 2

    def test_cube_exact_zeros(self):
        s = oracle_coefficients(parse_expression("(sqrt(u1)+u2)^3", 2), (64, 8))
        assert np.all(s.coeffs[1:, 3:] == 0)
        assert s.coefficient((1, 2)) != 0

    def test_division(self):
        s = oracle_coefficients(parse_expression("1/(u1+u2)", 2), (10, 10))
        t = oracle_coefficients(parse_expression("(u1+u2)^-1", 2), (10, 10))
        assert np.allclose(s.coeffs, t.coeffs, rtol=1e-14)

    def test_singular_at_origin(self):
        with pytest.raises(ZeroConstantTermError):
            oracle_coefficients(parse_expression("(u1-1)^0.5", 1), (5,))

    def test_compensated_agrees(self):
        ast = parse_expression("(sqrt(u1)+u2)^-1", 2)
        plain = oracle_coefficients(ast, (100, 10)).coeffs
        old = set_compensated(True)
        try:
            comp = oracle_coefficients(ast, (100, 10)).coeffs
        finally:
            set_compensated(old)
        assert np.allclose(plain, comp, rtol=1e-12, atol=1e-15)

    def test_against_mpmath_free_univariate(self):
        s = oracle_coefficients(parse_expression("u1^1.5", 1), (200,))
        n = np.arange(201)
        assert np.allclose(s.coeffs.real, (-1.0) ** n * sc.binom(1.5, n), rtol=1e-11, atol=1e-300)
