"""Exact-versus-predicted comparisons along stretched diagonals."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .contour import ContourSpec
from .core import ExponentData, HomogeneousTerm, SingularExpansion, check_homogeneity
from .expr import parse_expression
from .series import oracle_coefficients
from .transfer import gauge_from_index, predict

__all__ = [
    "ComparisonRow", "FitResult", "CaseSpec", "CaseResult", "SuiteReport",
    "compare_diagonal", "fit_error_exponent", "default_cases", "run_case",
    "stretched_diagonal_suite", "REL_FLOOR",
]

REL_FLOOR = 1e-30


@dataclass(frozen=True)
class ComparisonRow:
    n: tuple
    n0: float
    exact: complex
    predicted: complex
    absErr: float
    relErr: float


def _row(n, n0, exact, predicted) -> ComparisonRow:
    a = abs(predicted - exact)
    return ComparisonRow(tuple(n), float(n0), complex(exact), complex(predicted), a, a / max(abs(exact), REL_FLOOR))


def compare_diagonal(A, expansion: SingularExpansion, theta=None, lam=None, n0_list=(),
                     N: float | None = None, policy: str = "first-coordinate",
                     spec: ContourSpec | None = None, tol: float | None = None,
                     bounds=None, indices=None) -> list:
    """Rows (n, n0, exact, predicted, errors) sorted by n0.

    Indices are n_j = round(lam_j n0^theta_j) unless ``indices`` lists them
    directly; the gauge is recomputed from the integer index.  Exact values
    come from the series oracle of A(z) = H(1 - z) expanded once at the
    largest bounds needed.
    """
    theta = tuple(expansion.theta if theta is None else theta)
    d = len(theta)
    if indices is None:
        lam = tuple(lam) if lam is not None else (1.0,) * d
        indices = [tuple(int(round(l * n0**t)) for l, t in zip(lam, theta)) for n0 in n0_list]
    indices = [tuple(int(x) for x in n) for n in indices]
    if any(min(n) < 1 for n in indices):
        raise ValueError("every index entry must be >= 1")
    need = tuple(max(n[j] for n in indices) for j in range(d))
    if bounds is None:
        bounds = need
    elif any(a > b for a, b in zip(need, bounds)):
        raise ValueError(f"index {need} exceeds oracle truncation {tuple(bounds)}")
    ast = parse_expression(A, d) if isinstance(A, str) else A
    oracle = oracle_coefficients(ast, bounds)
    rows = []
    for n in indices:
        rep = predict(expansion, n, theta, N, policy, spec, tol)
        rows.append(_row(n, gauge_from_index(n, theta, policy).n0, oracle.coefficient(n), rep.value))
    rows.sort(key=lambda r: r.n0)
    return rows


@dataclass(frozen=True)
class FitResult:
    slope: float
    r2: float
    points: int
    exact_match: bool = False


def fit_error_exponent(rows, klow: int | None = None, khigh: int | None = None, which: str = "abs") -> FitResult:
    """Least-squares slope of log(error) against log(n0) over rows[klow:khigh].

    The default window drops the smallest quarter of the n0 values.
    """
    rows = sorted(rows, key=lambda r: r.n0)
    if which not in ("abs", "rel"):
        raise ValueError("which must be 'abs' or 'rel'")
    errs = np.array([r.absErr if which == "abs" else r.relErr for r in rows])
    if np.all(errs == 0):
        return FitResult(float("-inf"), 1.0, len(rows), exact_match=True)
    klow = len(rows) // 4 if klow is None else klow
    sel = slice(klow, khigh)
    x = np.log([r.n0 for r in rows])[sel]
    y = errs[sel]
    if len(y) < 4 or np.any(y <= 0):
        raise ValueError("need at least 4 rows with nonzero errors in the fit window")
    y = np.log(y)
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss if ss > 0 else 1.0
    return FitResult(float(coef[0]), r2, len(y))


# --- bundled cases ----------------------------------------------------------

@dataclass(frozen=True)
class CaseSpec:
    name: str
    A: str
    terms: tuple  # (expr, theta0) pairs sharing theta
    theta: tuple
    n0_list: tuple = ()
    lam: tuple | None = None
    indices: tuple | None = None
    orders: tuple = (None,)  # truncation thresholds N; None keeps k = 0 only
    expected_slope: tuple | None = None  # per order
    slope_tol: float = 0.3
    which: str = "abs"
    max_final_rel: float | None = None
    rel_bound: str | None = None  # "C/n0" style bound: relErr <= C / n0 for n0 >= start
    rel_bound_c: float = 0.0
    rel_bound_start: float = 0.0
    monotone: bool = False
    spec: ContourSpec | None = None
    note: str = ""


@dataclass
class CaseResult:
    name: str
    big_theta: float
    order: float | None
    slope: float | None
    expected: float | None
    passed: bool
    rows: list
    detail: str = ""
    saturated: bool = False


@dataclass
class SuiteReport:
    cases: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.cases)

    def summary_rows(self):
        for c in self.cases:
            yield (c.name, c.big_theta, "" if c.order is None else c.order,
                   "" if c.slope is None else c.slope, "" if c.expected is None else c.expected,
                   "pass" if c.passed else "fail", c.detail)


def _expansion(case: CaseSpec) -> SingularExpansion:
    d = len(case.theta)
    terms = tuple(HomogeneousTerm(parse_expression(e, d), ExponentData(t0, case.theta), text=e)
                  for e, t0 in case.terms)
    return SingularExpansion(terms, case.theta)


def default_cases() -> list:
    ns = (16, 24, 32, 48, 64, 96, 128, 192, 256)
    uni = (64, 128, 256, 512, 1024, 2048, 4096)
    ms = (8, 12, 16, 24, 32, 40, 48, 56, 64)
    stretched = ContourSpec(delta=0.5, deltaPrime=0.4, tol=1e-11)
    return [
        CaseSpec("univariate-half", "u1^0.5", (("u1^0.5", 0.5),), (1.0,), uni,
                 orders=(1.0, 2.0, 3.0), expected_slope=(-2.5, -3.5, -4.5), slope_tol=0.2),
        CaseSpec("product-diagonal", "u1^-0.5*u2^-0.5", (("u1^-0.5*u2^-0.5", -1.0),), (1.0, 1.0), ns,
                 orders=(1.0,), expected_slope=(-1.0,), which="rel",
                 rel_bound="C/n0", rel_bound_c=2.0, rel_bound_start=32),
        CaseSpec("sqrt-sum-diagonal", "(sqrt(u1)+sqrt(u2))^2", (("(sqrt(u1)+sqrt(u2))^2", 1.0),), (1.0, 1.0), ns,
                 orders=(1.0,), expected_slope=(-1.0,), which="rel",
                 rel_bound="C/n0", rel_bound_c=5.0, rel_bound_start=16),
        CaseSpec("demi-entire-diagonal", "u1+u2", (("u1+u2", 1.0),), (1.0, 1.0), ns, orders=(1.0,),
                 note="singular part is entire in each variable; exact coefficients vanish"),
        # sqrt(sigma^2 u1) = sigma sqrt(u1), so the cube scales like sigma^3 under theta = (2, 1)
        CaseSpec("cube-stretched", "(sqrt(u1)+u2)^3", (("(sqrt(u1)+u2)^3", 3.0),), (2.0, 1.0), ms,
                 orders=(1.0,), max_final_rel=0.1, monotone=True, spec=stretched,
                 note="polynomial in u2, so demi-entire: oracle and prediction are exact zeros"),
        CaseSpec("reciprocal-stretched", "(sqrt(u1)+u2)^-1", (("(sqrt(u1)+u2)^-1", -1.0),), (2.0, 1.0), ms,
                 orders=(1.0,), expected_slope=(-1.0,), which="rel", max_final_rel=0.1,
                 monotone=True, spec=stretched),
        CaseSpec("reciprocal-lambda-sweep", "(sqrt(u1)+u2)^-1", (("(sqrt(u1)+u2)^-1", -1.0),), (2.0, 1.0),
                 indices=((48 * 48, 24), (48 * 48, 48), (48 * 48, 96)), orders=(1.0,),
                 max_final_rel=0.1, spec=stretched,
                 note="lambda_2 in {0.5, 1, 2} at m = 48; max relErr over the sweep"),
    ]


def run_case(case: CaseSpec, spec: ContourSpec | None = None, tol: float | None = None,
             policy: str = "first-coordinate", seed: int = 0) -> list:
    """One CaseResult per truncation order of the case."""
    spec = case.spec or spec or ContourSpec(tol=1e-11)
    try:
        expansion = _expansion(case)
        for t in expansion.terms:
            hc = check_homogeneity(t, samples=64, tol=1e-10, seed=seed, delta=spec.delta)
            if not hc.passed:
                raise ValueError(f"homogeneity check failed: {'; '.join(hc.diagnostics)}")
    except ValueError as exc:
        return [CaseResult(case.name, math.nan, None, None, None, False, [], str(exc))]
    big = expansion.terms[0].exponents.big_theta
    d = len(case.theta)
    bounds = None
    out = []
    for i, N in enumerate(case.orders):
        rows = compare_diagonal(case.A, expansion, case.theta, case.lam, case.n0_list, N, policy,
                                spec, tol, bounds, case.indices)
        checks, ok = [], True
        slope = expected = None
        exact_zero = all(r.exact == 0 and r.predicted == 0 for r in rows)
        if exact_zero:
            checks.append("exact match (all coefficients and predictions are 0)")
        saturated = any(r.absErr < 1e3 * spec.tol * abs(r.n0) ** (-big) and r.absErr > 0 for r in rows)
        if case.expected_slope is not None and not exact_zero:
            fit = fit_error_exponent(rows, which=case.which)
            slope, expected = fit.slope, case.expected_slope[i]
            good = abs(slope - expected) <= case.slope_tol
            ok &= good
            checks.append(f"slope {slope:.3f} vs {expected:.3f} (R2 {fit.r2:.4f})")
        if case.rel_bound == "C/n0":
            bad = [r for r in rows if r.n0 >= case.rel_bound_start and r.relErr > case.rel_bound_c / r.n0]
            ok &= not bad
            checks.append(f"relErr <= {case.rel_bound_c}/n0 for n0 >= {case.rel_bound_start}: {'ok' if not bad else 'violated'}")
        if case.monotone:
            tail = rows[len(rows) // 4:]
            mono = all(b.relErr <= a.relErr for a, b in zip(tail, tail[1:]))
            ok &= mono
            checks.append(f"relErr non-increasing after burn-in: {'ok' if mono else 'violated'}")
        if case.max_final_rel is not None:
            final = max(r.relErr for r in rows) if case.indices else rows[-1].relErr
            ok &= final <= case.max_final_rel
            checks.append(f"final relErr {final:.3e} (limit {case.max_final_rel})")
        if case.note:
            checks.append(case.note)
        out.append(CaseResult(case.name, big, N, slope, expected, bool(ok), rows, "; ".join(checks), saturated))
    # each added order should steepen the error slope by at least 0.5
    for prev, cur in zip(out, out[1:]):
        if prev.slope is None or cur.slope is None:
            continue
        gain = prev.slope - cur.slope
        if gain >= 0.5:
            cur.detail += f"; order step gain {gain:.3f}"
        elif prev.saturated or cur.saturated:
            cur.detail += "; order step not enforced (quadrature saturation)"
        else:
            cur.passed = False
            cur.detail += f"; slope gained only {gain:.3f} over the previous order"
    return out


def stretched_diagonal_suite(cases=None, spec: ContourSpec | None = None, tol: float | None = None,
                             policy: str = "first-coordinate", seed: int = 0) -> SuiteReport:
    """Run every case (the bundled corpus by default) and aggregate pass/fail."""
    report = SuiteReport()
    for case in (default_cases() if cases is None else cases):
        report.cases.extend(run_case(case, spec, tol, policy, seed))
    return report
