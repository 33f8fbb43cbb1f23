"""Coefficient asymptotics along stretched diagonals.

For a (theta0, theta)-homogeneous H and n_j = lam_j n0^theta_j,

    [z^n] H(1 - z) ~ n0^-Theta  sum_{k.theta < N}  D_k I(lam) / n0^(k.theta)

with Theta = theta0 + sum theta_j and

    D_k I(lam) = (2 pi i)^-d int_V prod_j P_{k_j}(lam_j, u_j) e^{lam.u} H(u) du,
    P_k(lam, u) = sum_{l <= k} g[k][l] lam^l u^(k+l).

Derivatives of I never appear explicitly: they sit in the integrand as
powers of u.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .borel_laplace import borel_vector
from .contour import ContourSpec
from .core import (DiagonalGauge, ExponentData, HomogeneousTerm, MultiIndex,
                   SingularExpansion, check_homogeneity, is_demi_entire)
from .expr import Pow, Var
from .special import DEFAULT_KMAX, GFactorTable, build_g_table, univariate_asymptotic

__all__ = [
    "PredictionTerm", "PredictionReport", "gauge_from_index", "correction_indices",
    "dk_correction", "dk_corrections", "predict", "predict_univariate",
]

POLICIES = ("first-coordinate", "geometric")


def gauge_from_index(n, theta, policy: str = "first-coordinate", box=None) -> DiagonalGauge:
    """Split n into a scale n0 and a direction lambda with n_j = lambda_j n0^theta_j."""
    n = tuple(n)
    theta = tuple(float(t) for t in theta)
    if len(n) != len(theta):
        raise ValueError("index and theta lengths differ")
    if any(x <= 0 for x in n):
        raise ValueError(f"all index entries must be >= 1, got {n}")
    if policy == "first-coordinate":
        n0 = n[0] ** (1.0 / theta[0])
    elif policy == "geometric":
        n0 = math.exp(sum(math.log(x) for x in n) / sum(theta))
    else:
        raise ValueError(f"unknown gauge policy {policy!r}; expected one of {POLICIES}")
    lam = tuple(x / n0**t for x, t in zip(n, theta))
    if policy == "first-coordinate":
        lam = (1.0,) + lam[1:]
    return DiagonalGauge(n0, lam, theta, box)


def correction_indices(theta, N: float, kmax: int):
    """All k with k.theta < N, ordered by (k.theta, k)."""
    theta = tuple(theta)
    bounds = [int(math.ceil(N / t)) for t in theta]
    out = []
    for k in itertools.product(*(range(max(b, 0) + 1) for b in bounds)):
        e = sum(a * t for a, t in zip(k, theta))
        if e < N:
            if max(k) > kmax:
                raise ValueError(f"correction order {k} exceeds g-table kmax={kmax}")
            out.append((e, k))
    out.sort()
    return [k for _, k in out]


def _factor(ks, lam, g: GFactorTable):
    """Vector of prod_j P_{k_j}(lam_j, u_j) over the index list ks."""
    d = len(lam)
    polys = []  # polys[j][kj] -> coefficients by power of u
    for j in range(d):
        per = {}
        for kj in sorted({k[j] for k in ks}):
            coeffs = np.zeros(2 * kj + 1, dtype=complex)
            for l in range(kj + 1):
                coeffs[kj + l] = float(g[kj][l]) * lam[j] ** l
            per[kj] = coeffs
        polys.append(per)

    def factor(*u):
        shape = np.broadcast_shapes(*(np.shape(x) for x in u))
        cols = []
        cache = [{} for _ in range(d)]
        for k in ks:
            prod = np.ones(shape, dtype=complex)
            for j, kj in enumerate(k):
                if kj == 0:
                    continue
                if kj not in cache[j]:
                    cache[j][kj] = np.polynomial.polynomial.polyval(u[j], polys[j][kj])
                prod = prod * cache[j][kj]
            cols.append(prod)
        return np.stack(cols, axis=-1)

    return factor


_CACHE: dict = {}


def dk_corrections(term: HomogeneousTerm, lam, ks, g: GFactorTable | None = None,
                   spec: ContourSpec | None = None, tol: float | None = None):
    """D_k I(lam) for every k in ``ks`` on one shared quadrature mesh.

    Returns (values, error).  Demi-entire terms give exact zeros.
    """
    ks = [tuple(MultiIndex(k)) for k in ks]
    kmax_needed = max((max(k) for k in ks), default=0)
    g = g or build_g_table(max(DEFAULT_KMAX, kmax_needed))
    if kmax_needed > g.kmax:
        raise ValueError(f"correction order {kmax_needed} exceeds g-table kmax={g.kmax}")
    spec = spec or ContourSpec()
    tol = spec.tol if tol is None else tol
    lam = tuple(complex(x) for x in lam)
    if any(len(k) != term.d for k in ks) or len(lam) != term.d:
        raise ValueError("dimension mismatch between term, lambda and k")
    if is_demi_entire(term.expr, term.d):
        return np.zeros(len(ks), dtype=complex), 0.0
    key = (term, lam, tuple(ks), g.kmax, spec, tol)
    if key not in _CACHE:
        res = borel_vector(term, lam, spec, tol, factor=_factor(ks, lam, g))
        _CACHE[key] = (np.atleast_1d(np.asarray(res.value, dtype=complex)), float(np.max(res.error)))
        if len(_CACHE) > 4096:
            _CACHE.pop(next(iter(_CACHE)))
    vals, err = _CACHE[key]
    return vals.copy(), err


def dk_correction(term: HomogeneousTerm, lam, k, g: GFactorTable | None = None,
                  spec: ContourSpec | None = None, tol: float | None = None) -> complex:
    """Single correction D_k I(lam); k = 0 is the Borel transform itself."""
    g = g or build_g_table()
    if max(MultiIndex(k)) > g.kmax:
        raise ValueError(f"correction order {tuple(k)} exceeds g-table kmax={g.kmax}")
    vals, _ = dk_corrections(term, lam, [k], g, spec, tol)
    return complex(vals[0])


@dataclass(frozen=True)
class PredictionTerm:
    k: tuple
    exponent: float
    value: complex
    term_index: int = 0
    big_theta: float = 0.0
    error: float = 0.0


@dataclass
class PredictionReport:
    gauge: DiagonalGauge
    bigTheta: float
    terms: list
    truncationOrder: float
    value: complex
    diagnostics: list = field(default_factory=list)

    def recompute(self) -> complex:
        n0 = self.gauge.n0
        return complex(sum(t.value * n0 ** (-t.big_theta - t.exponent) for t in self.terms))


def _as_expansion(x) -> SingularExpansion:
    if isinstance(x, SingularExpansion):
        return x
    if isinstance(x, HomogeneousTerm):
        return SingularExpansion((x,), x.exponents.theta)
    raise TypeError("expected a SingularExpansion or HomogeneousTerm")


def predict(expansion, n, theta=None, N: float | None = None, policy: str = "first-coordinate",
            spec: ContourSpec | None = None, tol: float | None = None, g: GFactorTable | None = None,
            check: bool = True, seed: int = 0) -> PredictionReport:
    """Truncated asymptotic value of [z^n]A(z) from a singular expansion.

    ``N`` is a threshold on k.theta; by default only k = 0 is kept.
    """
    exp_ = _as_expansion(expansion)
    theta = tuple(float(t) for t in (theta if theta is not None else exp_.theta))
    if theta != exp_.theta:
        raise ValueError(f"theta {theta} is inconsistent with the expansion's {exp_.theta}")
    spec = spec or ContourSpec()
    tol = spec.tol if tol is None else tol
    N = min(theta) if N is None else float(N)
    gauge = gauge_from_index(tuple(MultiIndex(n)), theta, policy)
    g = g or build_g_table(DEFAULT_KMAX)
    ks = correction_indices(theta, N, g.kmax)
    diags = []
    rows = []
    for ti, term in enumerate(exp_.terms):
        if check:
            hc = check_homogeneity(term, samples=32, tol=1e-8, seed=seed, delta=spec.delta)
            if not hc.passed:
                raise ValueError(f"term {ti} fails the homogeneity check: {'; '.join(hc.diagnostics)}")
        bt = term.exponents.big_theta
        if not ks:
            continue
        if is_demi_entire(term.expr, term.d):
            diags.append(f"term {ti} is demi-entire: every correction is exactly 0")
        vals, err = dk_corrections(term, gauge.lam, ks, g, spec, tol)
        for k, v in zip(ks, vals):
            e = sum(a * t for a, t in zip(k, theta))
            rows.append(PredictionTerm(k, e, complex(v), ti, bt, err))
    if exp_.regular_part is not None:
        diags.append("regular part contributes 0 (exponentially small)")
    rows.sort(key=lambda t: (t.big_theta + t.exponent, t.term_index, t.k))
    big = exp_.terms[0].exponents.big_theta if exp_.terms else 0.0
    report = PredictionReport(gauge, big, rows, N, 0j, diags)
    report.value = report.recompute()
    return report


def predict_univariate(alpha: float, n: float, order: int, g: GFactorTable | None = None,
                       method: str = "series", spec: ContourSpec | None = None,
                       tol: float | None = None) -> complex:
    """[z^n](1-z)^alpha through the n^-order correction, by either path."""
    g = g or build_g_table(max(order, DEFAULT_KMAX))
    if method == "series":
        return complex(univariate_asymptotic(alpha, n, order, g))
    if method != "contour":
        raise ValueError("method must be 'series' or 'contour'")
    term = HomogeneousTerm(Pow(Var(1), float(alpha)), ExponentData(float(alpha), (1.0,)))
    spec = spec or ContourSpec(tol=1e-13)
    ks = [(k,) for k in range(order + 1)]
    vals, _ = dk_corrections(term, (1.0,), ks, g, spec, tol)
    return complex(sum(v * n ** (-alpha - 1.0 - k) for k, v in enumerate(vals)))
