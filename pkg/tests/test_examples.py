"""Small worked examples across modules, each with a closed-form answer."""
import math

import numpy as np
import pytest

from mvtransfer.borel_laplace import borel, laplace_truncated, roundtrip_borel_of_laplace
from mvtransfer.contour import ContourSpec, hankel_contour, integrate_product
from mvtransfer.core import (ExponentData, HomogeneousTerm, SingularExpansion, check_homogeneity,
                             zero_avoidance_scan)
from mvtransfer.expr import Mul, Pow, Var, eval_expression, parse_expression
from mvtransfer.series import TruncatedSeries, oracle_coefficients
from mvtransfer.special import exact_power_coefficient
from mvtransfer.transfer import dk_correction, gauge_from_index, predict, predict_univariate
from mvtransfer.verify import compare_diagonal, fit_error_exponent

SPEC = ContourSpec(tol=1e-11)


def hterm(text, theta0, theta):
    return HomogeneousTerm(parse_expression(text, len(theta)), ExponentData(theta0, theta), text=text)


def test_parse_shapes():
    assert parse_expression("u1^-0.5 * u2^-0.5", 2) == Mul(Pow(Var(1), -0.5), Pow(Var(2), -0.5))
    n = parse_expression("(sqrt(u1) + sqrt(u2))^3", 2)
    assert isinstance(n, Pow) and n.exponent == 3


def test_eval_values():
    assert eval_expression(parse_expression("u1^2", 1), [3]) == 9
    assert eval_expression(parse_expression("(sqrt(u1)+sqrt(u2))^2", 2), [1, 1]) == 4


@pytest.mark.parametrize("text,theta0,theta,ok", [
    ("u1^-0.5*u2^-0.5", -1.0, (1, 1), True),
    ("u1+u2", 2.0, (1, 1), False),
    ("(sqrt(u1)+u2)^3", 3.0, (2, 1), True),
    ("(sqrt(u1)+u2)^3", 1.5, (2, 1), False),
])
def test_homogeneity_examples(text, theta0, theta, ok):
    assert check_homogeneity(hterm(text, theta0, theta)).passed is ok


@pytest.mark.parametrize("text,ok", [("sqrt(u1)+sqrt(u2)", True), ("u1+u2", True), ("(u1+u2)^0.5", False)])
def test_zero_avoidance_examples(text, ok):
    assert zero_avoidance_scan(parse_expression(text, 2), 0.3).passed is ok


class TestSeriesExamples:
    def test_polynomial_product(self):
        b = (3, 3)
        x, y = TruncatedSeries.variable(0, b), TruncatedSeries.variable(1, b)
        p = (1 - x) * (1 - y)
        nz = {idx: p.coeffs[idx] for idx in zip(*np.nonzero(p.coeffs))}
        assert nz == {(0, 0): 1, (1, 0): -1, (0, 1): -1, (1, 1): 1}

    def test_identities(self):
        s = TruncatedSeries.from_dict({(0,): 2.0, (3,): 1.5}, (6,))
        assert np.array_equal((s + 0).coeffs, s.coeffs)
        assert np.array_equal((s ** 1).coeffs, s.coeffs)

    def test_telescoping(self):
        x = TruncatedSeries.variable(0, (10,))
        geo = TruncatedSeries((10,), np.ones(11))
        assert np.array_equal((geo * (1 - x)).coeffs, np.eye(11)[0])

    def test_oracle_values(self):
        assert oracle_coefficients(parse_expression("u1^0.5", 1), (4,)).coefficient((2,)) == -0.125
        prod = oracle_coefficients(parse_expression("u1^-0.5*u2^-0.5", 2), (3, 3))
        assert prod.coefficient((2, 0)) == pytest.approx(3 / 8, rel=1e-15)
        assert oracle_coefficients(parse_expression("u1+u2", 2), (2, 2)).coefficient((1, 1)) == 0


class TestIntegralExamples:
    def test_product_hankel(self):
        c = hankel_contour(SPEC, 60.0)
        f = lambda a, b: a**-0.5 * b**-0.5 * np.exp(a + b) / (2j * math.pi) ** 2
        assert integrate_product(f, [c, c], 1e-11).value == pytest.approx(1 / math.pi, rel=1e-9)

    def test_zero_integrand(self):
        c = hankel_contour(SPEC, 20.0)
        assert integrate_product(lambda a, b: 0 * a * b, [c, c], 1e-11).value == 0

    def test_borel_values(self):
        assert borel(parse_expression("u1^0.5", 1), [2.0], SPEC).value == pytest.approx(-0.0997355701, rel=1e-9)
        assert borel(parse_expression("u1^-0.5*u2^-0.5", 2), [1, 1], SPEC).value == pytest.approx(1 / math.pi, rel=1e-9)
        assert abs(borel(parse_expression("u1", 2), [0.7, 1.9], SPEC).value) < 1e-10

    def test_laplace_values(self):
        assert laplace_truncated(lambda l: np.ones_like(l), [1.0], 1.0).value == pytest.approx(math.exp(-1), rel=1e-10)
        assert laplace_truncated(lambda l: l, [1.0], 1.0).value == pytest.approx(2 * math.exp(-1), rel=1e-10)

    def test_roundtrip_examples(self):
        wide = ContourSpec(delta=1.4, deltaPrime=1.0)
        assert roundtrip_borel_of_laplace(lambda l: l**-1.5, [4.0], 1.0, wide).relative_residual < 1e-6
        assert roundtrip_borel_of_laplace(lambda l: np.ones_like(l), [4.0], 1.0, wide).relative_residual < 1e-6
        r = roundtrip_borel_of_laplace(lambda a, b: a**-0.5 * b**-2.0, [4.0, 4.0], 1.0, wide)
        assert r.relative_residual < 1e-5


class TestTransferExamples:
    def test_gauges(self):
        g = gauge_from_index((100, 100), (1, 1))
        assert (g.n0, g.lam) == (100.0, (1.0, 1.0))
        g = gauge_from_index((100, 10), (2, 1))
        assert g.n0 == pytest.approx(10.0) and g.lam == pytest.approx((1.0, 1.0))
        g = gauge_from_index((64, 32), (1, 1), "geometric")
        assert g.n0 == pytest.approx(math.sqrt(64 * 32)) and g.lam == pytest.approx((math.sqrt(2), 1 / math.sqrt(2)))

    def test_corrections(self):
        assert dk_correction(hterm("u1^-0.5*u2^-0.5", -1.0, (1, 1)), (1, 1), (0, 0), spec=SPEC) == \
            pytest.approx(1 / math.pi, rel=1e-9)
        v = dk_correction(hterm("u1^0.5", 0.5, (1,)), (1,), (1,), spec=SPEC)
        assert v == pytest.approx(3 / 8 * (-1 / (2 * math.sqrt(math.pi))), rel=1e-9)

    def test_predictions(self):
        rep = predict(hterm("u1^-0.5*u2^-0.5", -1.0, (1, 1)), (100, 100), spec=SPEC)
        assert rep.value == pytest.approx(1 / (100 * math.pi), rel=1e-9)
        rep = predict(hterm("(sqrt(u1)+sqrt(u2))^2", 1.0, (1, 1)), (50, 50), spec=SPEC)
        assert rep.value == pytest.approx(50.0**-3 / (2 * math.pi), rel=1e-8)

    def test_only_regular_part(self):
        rep = predict(SingularExpansion((), (1, 1), regular_part=parse_expression("u1*u2", 2)), (30, 30))
        assert rep.value == 0 and any("exponentially small" in d for d in rep.diagnostics)

    def test_univariate_paths(self):
        a = predict_univariate(0.5, 100, 2, method="series")
        b = predict_univariate(0.5, 100, 2, method="contour")
        assert abs(b / a - 1) < 1e-8
        for order in range(9):
            assert predict_univariate(2, 100, order) == 0
        assert predict_univariate(2, 100, 3, method="contour") == 0
        ex = exact_power_coefficient(-0.5, 10)
        assert abs(predict_univariate(-0.5, 10, 4) / ex - 1) < 1e-5


def test_product_absolute_slope():
    t = hterm("u1^-0.5*u2^-0.5", -1.0, (1, 1))
    rows = compare_diagonal("u1^-0.5*u2^-0.5", SingularExpansion((t,), (1, 1)),
                            n0_list=(16, 24, 32, 48, 64, 96, 128, 192, 256), spec=SPEC)
    assert fit_error_exponent(rows).slope == pytest.approx(-2.0, abs=0.3)
