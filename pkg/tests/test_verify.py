import math

import pytest

from mvtransfer.contour import ContourSpec
from mvtransfer.core import ExponentData, HomogeneousTerm, SingularExpansion
from mvtransfer.expr import parse_expression
from mvtransfer.verify import (CaseSpec, ComparisonRow, compare_diagonal, default_cases, fit_error_exponent,
                               run_case, stretched_diagonal_suite)

SPEC = ContourSpec(tol=1e-11)


def expansion(text, theta0, theta):
    t = HomogeneousTerm(parse_expression(text, len(theta)), ExponentData(theta0, theta), text=text)
    return SingularExpansion((t,), theta)


def synthetic(slope, n0s=(10, 20, 40, 80, 160, 320, 640, 1280)):
    return [ComparisonRow((int(n),), float(n), 1.0, 1.0 + 3 * n**slope, 3 * n**slope, 3 * n**slope) for n in n0s]


class TestFit:
    def test_recovers_slope(self):
        f = fit_error_exponent(synthetic(-1.7))
        assert f.slope == pytest.approx(-1.7, abs=1e-9) and f.r2 == pytest.approx(1.0)
        assert f.points == 6  # smallest quarter dropped

    def test_window(self):
        assert fit_error_exponent(synthetic(-2.0), 0, 4).points == 4

    def test_exact_match(self):
        rows = [ComparisonRow((n,), n, 0j, 0j, 0.0, 0.0) for n in (1, 2, 3, 4, 5)]
        f = fit_error_exponent(rows)
        assert f.exact_match and f.slope == -math.inf

    def test_too_few(self):
        with pytest.raises(ValueError):
            fit_error_exponent(synthetic(-1.0, (10, 20, 30)))


class TestCompare:
    def test_product_diagonal(self):
        rows = compare_diagonal("u1^-0.5*u2^-0.5", expansion("u1^-0.5*u2^-0.5", -1.0, (1, 1)),
                                n0_list=(64, 16, 32), spec=SPEC)
        assert [r.n0 for r in rows] == [16, 32, 64]
        for r in rows:
            assert r.predicted == pytest.approx(1 / (r.n0 * math.pi), rel=1e-9)
            assert r.relErr <= 2 / r.n0

    def test_sqrt_sum_leading_ratio(self):
        rows = compare_diagonal("(sqrt(u1)+sqrt(u2))^2", expansion("(sqrt(u1)+sqrt(u2))^2", 1.0, (1, 1)),
                                n0_list=(32, 128), spec=SPEC)
        for r in rows:
            assert (r.exact / (r.n0**-3 / (2 * math.pi))).real == pytest.approx(1.0, abs=5 / r.n0)

    def test_demi_entire_exact_zero(self):
        # A = 2 - z1 - z2 in the u = 1 - z variables
        rows = compare_diagonal("u1+u2", expansion("u1+u2", 1.0, (1, 1)), n0_list=(2, 5, 9))
        assert all(r.exact == 0 and r.predicted == 0 and r.relErr == 0 for r in rows)

    def test_lambda_profile(self):
        rows = compare_diagonal("u1^-0.5*u2^-0.5", expansion("u1^-0.5*u2^-0.5", -1.0, (1, 1)),
                                lam=(1.0, 2.0), n0_list=(20,), spec=SPEC)
        assert rows[0].n == (20, 40)

    def test_bounds_checked(self):
        with pytest.raises(ValueError, match="exceeds oracle truncation"):
            compare_diagonal("u1^-0.5", expansion("u1^-0.5", -0.5, (1,)), n0_list=(50,), bounds=(20,))


class TestSuite:
    def test_wrong_theta_stops_before_comparison(self):
        case = CaseSpec("cube-wrong-theta", "(sqrt(u1)+u2)^3", (("(sqrt(u1)+u2)^3", 1.5),), (1.0, 1.0),
                        (8, 16, 32, 64))
        (res,) = run_case(case)
        assert not res.passed and res.rows == [] and "homogeneity" in res.detail

    def test_order_step_enforced(self):
        # two identical orders cannot steepen the slope
        case = CaseSpec("flat", "u1^0.5", (("u1^0.5", 0.5),), (1.0,), (64, 128, 256, 512, 1024, 2048),
                        orders=(1.0, 1.0), expected_slope=(-2.5, -2.5), slope_tol=0.2)
        res = run_case(case)
        assert res[0].passed and not res[1].passed
        assert "gained only" in res[1].detail

    def test_default_suite_passes(self):
        report = stretched_diagonal_suite()
        names = {c.name for c in report.cases}
        assert {c.name for c in default_cases()} == names
        assert report.passed, [c.detail for c in report.cases if not c.passed]
        rows = list(report.summary_rows())
        assert len(rows) == len(report.cases) and all(r[5] == "pass" for r in rows)

    def test_univariate_orders(self):
        (case,) = [c for c in default_cases() if c.name == "univariate-half"]
        res = run_case(case)
        for r, want in zip(res, (-2.5, -3.5, -4.5)):
            assert r.slope == pytest.approx(want, abs=0.2)

    def test_lambda_sweep_uniform(self):
        (case,) = [c for c in default_cases() if c.name == "reciprocal-lambda-sweep"]
        (res,) = run_case(case)
        assert res.passed and max(r.relErr for r in res.rows) <= 0.1
