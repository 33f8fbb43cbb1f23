"""Coefficient asymptotics of multivariate generating functions along
stretched diagonals, checked against exact power-series coefficients."""
from .borel_laplace import TruncationPoint, borel, laplace_truncated, roundtrip_borel_of_laplace
from .contour import ContourSpec, QuadratureError, hankel_contour, integrate_path, integrate_product
from .core import (DiagonalGauge, ExponentData, HomogeneousTerm, MultiIndex, SingularExpansion,
                   check_homogeneity, is_demi_entire, zero_avoidance_scan)
from .expr import eval_expression, parse_expression, to_text
from .series import TruncatedSeries, oracle_coefficients, series_pow_real
from .special import build_g_table, e_poly, exact_power_coefficient, recip_gamma, univariate_asymptotic
from .transfer import dk_correction, gauge_from_index, predict, predict_univariate
from .verify import compare_diagonal, fit_error_exponent, stretched_diagonal_suite

__version__ = "0.1.0"
