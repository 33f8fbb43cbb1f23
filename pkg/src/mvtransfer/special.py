"""Reciprocal gamma, the g-factor table and univariate transfer coefficients.

The g-factors are the bivariate Taylor coefficients of

    G(x, y) = exp(-y - (y/x + 1) log(1 - x)) = sum_k (sum_{l<=k} g[k][l] y^l) x^k

and feed both the univariate polynomials e_k(alpha) and the multivariate
correction operators used by :mod:`mvtransfer.transfer`.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

__all__ = [
    "GFactorTable",
    "recip_gamma",
    "build_g_table",
    "e_poly",
    "univariate_asymptotic",
    "exact_power_coefficient",
    "DEFAULT_KMAX",
]

DEFAULT_KMAX = 8

# Lanczos approximation, g = 7, n = 9
_LANCZOS_G = 7.0
_LANCZOS_P = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_SQRT_2PI = math.sqrt(2.0 * math.pi)


def _sinpi(s: complex) -> complex:
    # sin(pi*s) with the real part reduced first, so integers give exact zeros
    n = round(s.real)
    r = complex(s.real - n, s.imag)
    v = cmath.sin(math.pi * r)
    return -v if n % 2 else v


def _recip_gamma_right(s: complex) -> complex:
    # 1/Gamma(s) for Re(s) >= 0.5
    z = s - 1.0
    x = _LANCZOS_P[0]
    for i in range(1, len(_LANCZOS_P)):
        x += _LANCZOS_P[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    return cmath.exp(t - (z + 0.5) * cmath.log(t)) / (_SQRT_2PI * x)


def _recip_gamma_scalar(s: complex) -> complex:
    s = complex(s)
    if s.imag == 0.0 and s.real <= 0.0 and s.real == math.floor(s.real):
        return 0j
    if s.imag == 0.0 and s.real == math.floor(s.real) and s.real <= 171:
        return complex(1.0 / math.factorial(int(s.real) - 1))
    if s.real < 0.5:
        # 1/Gamma(s) = sin(pi s) Gamma(1-s) / pi
        return _sinpi(s) / (math.pi * _recip_gamma_right(1.0 - s))
    return _recip_gamma_right(s)


def recip_gamma(s):
    """Entire reciprocal gamma function 1/Gamma(s).

    Exactly zero at s = 0, -1, -2, ...  Accepts a scalar or an array; real
    input on the real axis returns real values.
    """
    if np.ndim(s) == 0:
        v = _recip_gamma_scalar(complex(s))
        if isinstance(s, (int, float, np.floating, np.integer)):
            return v.real
        return v
    arr = np.asarray(s)
    out = np.array([_recip_gamma_scalar(complex(x)) for x in arr.ravel()]).reshape(arr.shape)
    if not np.iscomplexobj(arr):
        return out.real
    return out


@dataclass(frozen=True)
class GFactorTable:
    """Triangular table g[k][l], 0 <= l <= k <= kmax, held as exact rationals."""

    kmax: int
    exact: tuple  # tuple of tuples of Fraction

    def __getitem__(self, k):
        return self.exact[k]

    def value(self, k: int, l: int) -> float:
        return float(self.exact[k][l])

    def as_float(self) -> np.ndarray:
        out = np.zeros((self.kmax + 1, self.kmax + 1))
        for k, row in enumerate(self.exact):
            for l, g in enumerate(row):
                out[k, l] = float(g)
        return out

    def rows(self):
        for k, row in enumerate(self.exact):
            for l, g in enumerate(row):
                yield k, l, g


@lru_cache(maxsize=None)
def build_g_table(kmax: int = DEFAULT_KMAX) -> GFactorTable:
    """Exact g-factor table up to ``kmax``.

    Writes G = exp(E) with E(x, y) = sum_{k>=1} (1/k + y/(k+1)) x^k and
    solves k G_k = sum_{j=1..k} j E_j G_{k-j} in the ring Q[y].
    """
    if kmax < 0:
        raise ValueError("kmax must be >= 0")
    # E_j as a polynomial in y: [1/j, 1/(j+1)]
    E = [None] + [(Fraction(1, j), Fraction(1, j + 1)) for j in range(1, kmax + 1)]
    G = [[Fraction(1)]]
    for k in range(1, kmax + 1):
        acc = [Fraction(0)] * (k + 1)
        for j in range(1, k + 1):
            e0, e1 = E[j]
            for l, c in enumerate(G[k - j]):
                acc[l] += j * e0 * c
                acc[l + 1] += j * e1 * c
        G.append([c / k for c in acc])
    return GFactorTable(kmax=kmax, exact=tuple(tuple(row) for row in G))


def _falling(alpha: float, m: int) -> float:
    # Gamma(-alpha) / Gamma(-alpha - m) = prod_{i=1..m} (-alpha - i)
    out = 1.0
    for i in range(1, m + 1):
        out *= -alpha - i
    return out


def e_poly(k: int, alpha: float, g: GFactorTable | None = None) -> float:
    """e_k(alpha) = sum_l g[k][l] Gamma(-alpha)/Gamma(-alpha-k-l), pole-free."""
    g = g or build_g_table(max(k, DEFAULT_KMAX))
    if k > g.kmax:
        raise ValueError(f"k={k} exceeds table kmax={g.kmax}")
    return math.fsum(float(gkl) * _falling(alpha, k + l) for l, gkl in enumerate(g[k]))


def univariate_asymptotic(alpha: float, n: float, order: int, g: GFactorTable | None = None) -> float:
    """Truncated expansion of [z^n](1-z)^alpha through the n^{-order} correction."""
    g = g or build_g_table(max(order, DEFAULT_KMAX))
    if order > g.kmax:
        raise ValueError(f"order={order} exceeds table kmax={g.kmax}")
    pref = recip_gamma(-alpha)
    if pref == 0.0:
        return 0.0
    s = math.fsum(e_poly(k, alpha, g) / n**k for k in range(order + 1))
    return pref * n ** (-alpha - 1.0) * s


def exact_power_coefficient(alpha: float, n: int) -> float:
    """[z^n](1-z)^alpha = prod_{i=1..n} (i-1-alpha)/i."""
    if n < 0:
        raise ValueError("n must be >= 0")
    out = 1.0
    for i in range(1, n + 1):
        out *= (i - 1 - alpha) / i
        if out == 0.0:
            break
    return out
