"""Domain types shared by every module, plus the sampled homogeneity and
zero-avoidance checks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .expr import (Add, Const, Div, EvalError, Expr, Mul, Neg, Pow, Sqrt, Sub, Var,
                   compile_expression, power_bases, variables)

__all__ = [
    "MultiIndex", "ExponentData", "DiagonalGauge", "HomogeneousTerm",
    "SingularExpansion", "CheckResult", "check_homogeneity", "zero_avoidance_scan",
    "is_demi_entire", "cone_samples",
]


@dataclass(frozen=True)
class MultiIndex:
    entries: tuple

    def __post_init__(self):
        entries = tuple(int(n) for n in self.entries)
        if not entries:
            raise ValueError("multi-index needs d >= 1")
        if any(n < 0 for n in entries):
            raise ValueError(f"negative entry in multi-index {entries}")
        object.__setattr__(self, "entries", entries)

    @property
    def d(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, j):
        return self.entries[j]

    def __len__(self):
        return len(self.entries)


@dataclass(frozen=True)
class ExponentData:
    theta0: float
    theta: tuple

    def __post_init__(self):
        if isinstance(self.theta0, complex):
            raise ValueError("complex theta0 is not supported")
        theta = tuple(float(t) for t in self.theta)
        if not theta or any(not t > 0 for t in theta):
            raise ValueError(f"theta must be strictly positive, got {theta}")
        if not math.isfinite(self.theta0):
            raise ValueError("theta0 must be finite")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "theta0", float(self.theta0))

    @property
    def big_theta(self) -> float:
        return self.theta0 + sum(self.theta)

    def scaled(self, tau: float) -> "ExponentData":
        return ExponentData(tau * self.theta0, tuple(tau * t for t in self.theta))


@dataclass(frozen=True)
class DiagonalGauge:
    """Index decomposition n_j = lambda_j * n0**theta_j."""

    n0: float
    lam: tuple
    theta: tuple
    box: tuple | None = None  # (lambda_min, lambda_max)

    def __post_init__(self):
        if not self.n0 > 0:
            raise ValueError("n0 must be positive")
        lam = tuple(float(x) for x in self.lam)
        if any(not x > 0 for x in lam):
            raise ValueError("lambda entries must be positive")
        if len(lam) != len(self.theta):
            raise ValueError("lambda and theta lengths differ")
        if self.box is not None:
            lo, hi = self.box
            bad = [x for x in lam if not lo <= x <= hi]
            if bad:
                raise ValueError(f"lambda {lam} leaves the box [{lo}, {hi}]")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "theta", tuple(float(t) for t in self.theta))

    def index(self) -> tuple:
        return tuple(l * self.n0**t for l, t in zip(self.lam, self.theta))


@dataclass(frozen=True)
class HomogeneousTerm:
    expr: Expr
    exponents: ExponentData
    coefficient: complex = 1.0
    text: str = ""

    @property
    def d(self) -> int:
        return len(self.exponents.theta)


@dataclass(frozen=True)
class SingularExpansion:
    """Ordered homogeneous terms sharing one theta, plus an inert regular part."""

    terms: tuple
    theta: tuple
    regular_part: Expr | None = None
    remainder_theta0: float | None = None

    def __post_init__(self):
        terms = tuple(self.terms)
        theta = tuple(float(t) for t in self.theta)
        for t in terms:
            if t.exponents.theta != theta:
                raise ValueError(f"term theta {t.exponents.theta} differs from expansion theta {theta}")
        t0 = [t.exponents.theta0 for t in terms]
        if any(a <= b for a, b in zip(t0, t0[1:])):
            raise ValueError(f"theta0 values must strictly decrease, got {t0}")
        if self.remainder_theta0 is not None and t0 and self.remainder_theta0 > t0[-1]:
            raise ValueError("remainder theta0 exceeds the last listed theta0")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "theta", theta)


@dataclass
class CheckResult:
    passed: bool
    max_deviation: float
    samples: int
    diagnostics: list = field(default_factory=list)

    def __bool__(self):
        return self.passed


def cone_samples(d: int, delta: float, count: int, rng, rho=(0.1, 10.0), margin=0.98):
    """Random points of the open product cone |arg u_j| < pi/2 + delta."""
    half = (math.pi / 2 + delta) * margin
    phase = rng.uniform(-half, half, size=(count, d))
    mod = np.exp(rng.uniform(math.log(rho[0]), math.log(rho[1]), size=(count, d)))
    return mod * np.exp(1j * phase)


def check_homogeneity(term: HomogeneousTerm, samples: int = 64, tol: float = 1e-10,
                      seed: int = 0, delta: float = 0.3, sigmas=None) -> CheckResult:
    """Sampled test of H(sigma^theta u) = sigma^theta0 H(u) on the cone.

    Draws ``samples`` pairs (sigma, u) with sigma in (0, 2], or uses the fixed
    ``sigmas`` against every drawn u.  Deterministic for a given seed.
    """
    if samples < 1 or not tol > 0:
        raise ValueError("samples must be >= 1 and tol > 0")
    rng = np.random.default_rng(seed)
    d = term.d
    theta0, theta = term.exponents.theta0, np.array(term.exponents.theta)
    u = cone_samples(d, delta, samples, rng)
    if sigmas is None:
        sig = rng.uniform(0.0, 2.0, size=samples)
        sig = np.where(sig == 0.0, 1.0, sig)
    else:
        sig = np.repeat(np.asarray(sigmas, dtype=float), samples)
        u = np.tile(u, (len(sigmas), 1))
    f = compile_expression(term.expr)
    try:
        h = f(*u.T)
        hs = f(*(u * sig[:, None] ** theta[None, :]).T)
    except EvalError as exc:
        return CheckResult(False, math.inf, len(sig), [f"evaluation failed: {exc}"])
    dev = np.abs(hs - sig**theta0 * h) / (1.0 + np.abs(h))
    worst = int(np.argmax(dev))
    diags = []
    if dev[worst] > tol:
        diags.append(f"sigma={sig[worst]:.6g} u={u[worst].tolist()} deviation={dev[worst]:.3e}")
    return CheckResult(bool(dev[worst] <= tol), float(dev[worst]), len(sig), diags)


def zero_avoidance_scan(node: Expr, delta: float, samples: int = 512, seed: int = 0,
                        d: int | None = None) -> CheckResult:
    """Flag non-integer power bases that vanish or reach the cut on the cone.

    Random points are combined with a deterministic grid of extreme phases
    (opposite-phase pairs are where sums of cone points can vanish).
    """
    if not 0 < delta < math.pi / 2:
        raise ValueError("delta must lie in (0, pi/2)")
    d = d or max(variables(node), default=1)
    rng = np.random.default_rng(seed)
    half = math.pi / 2 + delta
    phases = np.array([-half, -math.pi / 2, -half / 2, 0.0, half / 2, math.pi / 2, half]) * (1 - 1e-9)
    mods = np.array([0.5, 1.0, 2.0])
    per = (phases[:, None] * 0 + mods[None, :]) * np.exp(1j * phases[:, None])
    per = per.ravel()
    grid = np.stack(np.meshgrid(*([per] * d), indexing="ij"), axis=-1).reshape(-1, d)
    if len(grid) > 20000:
        grid = grid[rng.choice(len(grid), 20000, replace=False)]
    pts = np.concatenate([grid, cone_samples(d, delta, samples, rng, margin=1 - 1e-9)])
    diags = []
    worst = math.inf
    for base, expo in power_bases(node):
        vals = compile_expression(base)(*pts.T)
        mag = np.abs(vals)
        scale = np.max(np.abs(pts), axis=1)
        near_zero = mag <= 1e-12 * np.maximum(scale, 1.0)
        near_cut = (np.pi - np.abs(np.angle(vals))) <= 1e-9
        bad = near_zero | near_cut
        gap = np.pi - np.abs(np.angle(vals))
        worst = min(worst, float(gap.min()))
        if np.any(bad):
            i = int(np.argmax(bad))
            diags.append(f"power ^{expo} base hits {'zero' if near_zero[i] else 'the cut'} at u={pts[i].tolist()}")
    return CheckResult(not diags, worst, len(pts), diags)


def _entire_in(node: Expr, j: int) -> bool:
    # polynomial in u_j with coefficients that do not involve u_j
    if isinstance(node, (Var, Const)):
        return True
    if j not in variables(node):
        return True
    if isinstance(node, (Add, Sub, Mul)):
        return _entire_in(node.left, j) and _entire_in(node.right, j)
    if isinstance(node, Neg):
        return _entire_in(node.operand, j)
    if isinstance(node, Div):
        return _entire_in(node.left, j) and j not in variables(node.right)
    if isinstance(node, Pow):
        return node.integer and node.exponent >= 0 and _entire_in(node.base, j)
    return False  # Sqrt containing u_j


def _summands(node: Expr):
    if isinstance(node, (Add, Sub)):
        yield from _summands(node.left)
        yield from _summands(node.right)
    elif isinstance(node, Neg):
        yield from _summands(node.operand)
    elif isinstance(node, Mul) and isinstance(node.left, Const):
        yield from _summands(node.right)
    else:
        yield node


def is_demi_entire(node: Expr, d: int) -> bool:
    """Structural sufficient test: every top-level summand is a polynomial in
    some single variable (with coefficients free of that variable)."""
    return all(any(_entire_in(s, j) for j in range(1, d + 1)) for s in _summands(node))
