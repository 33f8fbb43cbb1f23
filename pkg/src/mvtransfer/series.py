"""Truncated multivariate power series with dense complex coefficients.

This is the exact-coefficient oracle: A(z) = H(1 - z) is expanded by
substituting u_j = 1 - z_j at the leaves of the expression and running ring
operations and real powers upward.  Products are direct (never FFT) so
coefficients that vanish identically come out as exact zeros.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .expr import Add, Const, Div, Expr, Mul, Neg, Pow, Sqrt, Sub, Var

__all__ = [
    "TruncatedSeries", "ZeroConstantTermError",
    "series_add", "series_sub", "series_mul", "series_neg", "series_pow_real",
    "oracle_coefficients", "set_compensated",
]

_SPARSE_NNZ = 64
_COMPENSATED = False


def set_compensated(flag: bool) -> bool:
    """Toggle compensated summation in products; returns the previous setting."""
    global _COMPENSATED
    old, _COMPENSATED = _COMPENSATED, bool(flag)
    return old


class ZeroConstantTermError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TruncatedSeries:
    bounds: tuple
    coeffs: np.ndarray

    def __post_init__(self):
        bounds = tuple(int(b) for b in self.bounds)
        if not bounds or any(b < 0 for b in bounds):
            raise ValueError(f"invalid bounds {bounds}")
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != tuple(b + 1 for b in bounds):
            raise ValueError(f"coefficient shape {c.shape} does not match bounds {bounds}")
        c.setflags(write=False)
        object.__setattr__(self, "bounds", bounds)
        object.__setattr__(self, "coeffs", c)

    @property
    def d(self) -> int:
        return len(self.bounds)

    @classmethod
    def constant(cls, value, bounds) -> "TruncatedSeries":
        c = np.zeros(tuple(b + 1 for b in bounds), dtype=complex)
        c[(0,) * len(bounds)] = value
        return cls(bounds, c)

    @classmethod
    def variable(cls, j: int, bounds) -> "TruncatedSeries":
        """The series z_j (0-based j)."""
        c = np.zeros(tuple(b + 1 for b in bounds), dtype=complex)
        if bounds[j] >= 1:
            idx = [0] * len(bounds)
            idx[j] = 1
            c[tuple(idx)] = 1.0
        return cls(bounds, c)

    @classmethod
    def from_dict(cls, terms: dict, bounds) -> "TruncatedSeries":
        c = np.zeros(tuple(b + 1 for b in bounds), dtype=complex)
        for idx, v in terms.items():
            if all(i <= b for i, b in zip(idx, bounds)):
                c[tuple(idx)] += v
        return cls(bounds, c)

    def coefficient(self, n) -> complex:
        n = tuple(n)
        if len(n) != self.d:
            raise ValueError("index dimension mismatch")
        if any(i > b for i, b in zip(n, self.bounds)):
            raise IndexError(f"index {n} exceeds truncation bounds {self.bounds}")
        return complex(self.coeffs[n])

    def truncate(self, bounds) -> "TruncatedSeries":
        bounds = tuple(bounds)
        return TruncatedSeries(bounds, self.coeffs[tuple(slice(0, b + 1) for b in bounds)])

    def __add__(self, other):
        return series_add(self, _coerce(other, self))

    __radd__ = __add__

    def __sub__(self, other):
        return series_sub(self, _coerce(other, self))

    def __rsub__(self, other):
        return series_sub(_coerce(other, self), self)

    def __mul__(self, other):
        return series_mul(self, _coerce(other, self))

    __rmul__ = __mul__

    def __neg__(self):
        return series_neg(self)

    def __pow__(self, beta):
        return series_pow_real(self, beta)


def _coerce(x, like: TruncatedSeries) -> TruncatedSeries:
    if isinstance(x, TruncatedSeries):
        return x
    return TruncatedSeries.constant(x, like.bounds)


def _common(a: TruncatedSeries, b: TruncatedSeries):
    if a.d != b.d:
        raise ValueError(f"dimension mismatch: {a.d} vs {b.d}")
    bounds = tuple(min(x, y) for x, y in zip(a.bounds, b.bounds))
    sl = tuple(slice(0, n + 1) for n in bounds)
    return bounds, a.coeffs[sl], b.coeffs[sl]


def series_add(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    bounds, x, y = _common(a, b)
    return TruncatedSeries(bounds, x + y)


def series_sub(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    bounds, x, y = _common(a, b)
    return TruncatedSeries(bounds, x - y)


def series_neg(a: TruncatedSeries) -> TruncatedSeries:
    return TruncatedSeries(a.bounds, -a.coeffs)


def series_mul(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    bounds, x, y = _common(a, b)
    return TruncatedSeries(bounds, _mul(x, y))


# --- products -------------------------------------------------------------

def _conv1(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    n = len(x)
    if _COMPENSATED:
        return _conv1_compensated(x, y)
    if not x.imag.any() and not y.imag.any():
        return np.convolve(x.real, y.real)[:n].astype(complex)
    return np.convolve(x, y)[:n]


def _conv1_compensated(x, y):
    # Neumaier summation over shifts, vectorised across output cells
    n = len(x)
    s = np.zeros(n, dtype=complex)
    comp = np.zeros(n, dtype=complex)
    for k in np.flatnonzero(x):
        term = np.zeros(n, dtype=complex)
        term[k:] = x[k] * y[: n - k]
        for part in ("real", "imag"):
            sv, tv, cv = getattr(s, part), getattr(term, part), getattr(comp, part)
            t = sv + tv
            big = np.abs(sv) >= np.abs(tv)
            cv += np.where(big, (sv - t) + tv, (tv - t) + sv)
            sv[...] = t
    return s + comp


def _shift_axpy(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # out = sum over nonzeros x[i] of x[i] * (y shifted by i), C order
    out = np.zeros_like(y)
    shape = y.shape
    for idx in zip(*np.nonzero(x)):
        dst = tuple(slice(i, None) for i in idx)
        src = tuple(slice(0, n - i) for i, n in zip(idx, shape))
        out[dst] += x[idx] * y[src]
    return out


def _mul(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    if x.ndim == 1:
        return _conv1(x, y)
    nx, ny = np.count_nonzero(x), np.count_nonzero(y)
    if min(nx, ny) <= _SPARSE_NNZ and not _COMPENSATED:
        return _shift_axpy(x, y) if nx <= ny else _shift_axpy(y, x)
    # pair nonzero slices along the shortest axis, recursing on the rest
    axis = int(np.argmin(x.shape))
    xs, ys = np.moveaxis(x, axis, 0), np.moveaxis(y, axis, 0)
    n = xs.shape[0]
    nzx = [i for i in range(n) if xs[i].any()]
    nzy = [j for j in range(n) if ys[j].any()]
    out = np.zeros_like(xs)
    for i in nzx:
        for j in nzy:
            if i + j >= n:
                break
            out[i + j] += _mul(xs[i], ys[j])
    return np.moveaxis(out, 0, axis)


# --- real powers ------------------------------------------------------------

def _const_of(x: np.ndarray) -> complex:
    return complex(x[(0,) * x.ndim])


def _pow(x: np.ndarray, beta: float) -> np.ndarray:
    if float(beta).is_integer() and beta >= 0:
        return _pow_int(x, int(beta))
    s0 = _const_of(x)
    if s0 == 0:
        raise ZeroConstantTermError("series power needs a nonzero constant term")
    if beta == 1:
        return x.copy()
    if x.ndim == 1:
        return _pow1(x, beta)
    # pick the axis along which x has the fewest nonzero slices
    counts = []
    for ax in range(x.ndim):
        m = np.moveaxis(x, ax, 0)
        counts.append((sum(1 for i in range(1, m.shape[0]) if m[i].any()) * m.shape[0], ax))
    axis = min(counts)[1]
    xs = np.moveaxis(x, axis, 0)
    n = xs.shape[0]
    nz = [k for k in range(1, n) if xs[k].any()]
    f = np.zeros_like(xs)
    f[0] = _pow(xs[0], beta)
    if nz:
        inv0 = _pow(xs[0], -1.0)
        for m in range(1, n):
            acc = np.zeros_like(xs[0])
            for k in nz:
                if k > m:
                    break
                w = beta * k - (m - k)
                if w != 0:
                    acc += w * _mul(xs[k], f[m - k])
            f[m] = _mul(inv0, acc) / m
    return np.moveaxis(f, 0, axis)


def _pow1(x: np.ndarray, beta: float) -> np.ndarray:
    # Miller recurrence: n s0 f_n = sum_k (beta k - (n - k)) s_k f_{n-k}
    n = len(x)
    s0 = complex(x[0])
    f = np.zeros(n, dtype=complex)
    f[0] = s0**beta
    nz = np.flatnonzero(x[1:]) + 1
    if len(nz) == 0:
        return f
    sk = x[nz]
    for m in range(1, n):
        sel = nz <= m
        k = nz[sel]
        f[m] = np.dot((beta * k - (m - k)) * sk[sel], f[m - k]) / (m * s0)
    return f


def _pow_int(x: np.ndarray, e: int) -> np.ndarray:
    out = np.zeros_like(x)
    out[(0,) * x.ndim] = 1.0
    base = x
    first = True
    while e:
        if e & 1:
            out = base.copy() if first else _mul(out, base)
            first = False
        e >>= 1
        if e:
            base = _mul(base, base)
    return out


def series_pow_real(s: TruncatedSeries, beta: float) -> TruncatedSeries:
    """s^beta via the binomial series around the constant term (principal branch).

    Nonnegative integer exponents use repeated squaring and accept a zero
    constant term; every other exponent requires s_0 != 0.
    """
    beta = float(beta)
    if not math.isfinite(beta):
        raise ValueError("exponent must be finite")
    return TruncatedSeries(s.bounds, _pow(np.array(s.coeffs), beta))


# --- oracle -----------------------------------------------------------------

def oracle_coefficients(ast: Expr, bounds) -> TruncatedSeries:
    """Taylor coefficients at z = 0 of H(1 - z_1, ..., 1 - z_d)."""
    bounds = tuple(int(b) for b in bounds)
    one = TruncatedSeries.constant(1.0, bounds)
    memo: dict = {}

    def walk(node):
        key = id(node)
        if key in memo:
            return memo[key][1]
        if isinstance(node, Var):
            if not 1 <= node.index <= len(bounds):
                raise ValueError(f"variable u{node.index} out of range")
            out = one - TruncatedSeries.variable(node.index - 1, bounds)
        elif isinstance(node, Const):
            out = TruncatedSeries.constant(node.value, bounds)
        elif isinstance(node, Add):
            out = walk(node.left) + walk(node.right)
        elif isinstance(node, Sub):
            out = walk(node.left) - walk(node.right)
        elif isinstance(node, Mul):
            out = walk(node.left) * walk(node.right)
        elif isinstance(node, Div):
            out = walk(node.left) * _checked_pow(walk(node.right), -1.0, node)
        elif isinstance(node, Neg):
            out = -walk(node.operand)
        elif isinstance(node, Sqrt):
            out = _checked_pow(walk(node.operand), 0.5, node)
        elif isinstance(node, Pow):
            out = _checked_pow(walk(node.base), node.exponent, node)
        else:
            raise TypeError(f"unknown node {node!r}")
        memo[key] = (node, out)
        return out

    return walk(ast)


def _checked_pow(s: TruncatedSeries, beta: float, node) -> TruncatedSeries:
    try:
        return series_pow_real(s, beta)
    except ZeroConstantTermError:
        raise ZeroConstantTermError(
            f"base of {type(node).__name__.lower()} node vanishes at z=0; "
            "the expression is singular at the origin") from None
