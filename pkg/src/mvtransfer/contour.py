"""Hankel-type contours and adaptive Gauss-Kronrod quadrature along them.

The contour V winds around the negative real axis: a ray at angle
-(pi/2 + delta') comes in from modulus T to the arc radius r, an arc of
radius r passes through the positive real axis, and a ray at angle
+(pi/2 + delta') leaves to modulus T.  Integrands are assumed to decay
exponentially along the rays.

Quadrature is globally adaptive over G7/K15 panels, vectorised over panels
and over any batch of integrands (the error used for refinement is the max
over the batch).  Products of contours are integrated by nesting, with the
inner levels evaluated for every outer node at once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "ContourSpec", "Segment", "Contour", "QuadratureError", "PathRule", "QuadResult",
    "hankel_contour", "integrate_path", "integrate_product", "auto_truncation",
    "path_rule",
]

# Kronrod abscissae (descending) and weights; G7 lives on the odd entries
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327])

X15 = np.concatenate([-_XGK[:7], [0.0], _XGK[6::-1]])
WK15 = np.concatenate([_WGK[:7], [_WGK[7]], _WGK[6::-1]])
WG15 = np.zeros(15)
for _i, _w in zip((1, 3, 5), _WG[:3]):
    WG15[_i] = WG15[14 - _i] = _w
WG15[7] = _WG[3]

_EPS = np.finfo(float).eps
MAX_PANELS = 2000


class QuadResult(NamedTuple):
    value: complex
    error: float


class QuadratureError(RuntimeError):
    def __init__(self, msg: str, level: int = 0):
        super().__init__(f"{msg} (level {level})")
        self.level = level


@dataclass(frozen=True)
class ContourSpec:
    delta: float = 0.5
    deltaPrime: float = 0.4
    arcRadius: float = 1.0
    truncationRadius: float | None = None  # None: chosen from the integrand
    tol: float = 1e-10

    def __post_init__(self):
        if not 0 < self.deltaPrime < self.delta < math.pi / 2:
            raise ValueError(f"need 0 < deltaPrime < delta < pi/2, got {self.deltaPrime}, {self.delta}")
        if not self.arcRadius > 0:
            raise ValueError("arcRadius must be positive")
        if self.truncationRadius is not None and not self.truncationRadius > self.arcRadius:
            raise ValueError("truncationRadius must exceed arcRadius")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


@dataclass(frozen=True)
class Segment:
    """u(t) for t running from a to b (b < a is allowed and fixes orientation)."""

    kind: str  # "ray", "arc" or "mapped" (origin + t/(1-t) along a direction, t in [0, 1))
    angle: float  # ray direction, or arc radius for arcs
    a: float
    b: float
    origin: float = 0.0

    def point(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "ray":
            return t * np.exp(1j * self.angle)
        if self.kind == "mapped":
            return (self.origin + t / (1.0 - t)) * np.exp(1j * self.angle)
        return self.angle * np.exp(1j * t)

    def deriv(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "ray":
            return np.full(t.shape, np.exp(1j * self.angle))
        if self.kind == "mapped":
            return np.exp(1j * self.angle) / (1.0 - t) ** 2
        return 1j * self.angle * np.exp(1j * t)

    def breakpoints(self) -> np.ndarray:
        if self.kind == "arc":
            return np.linspace(self.a, self.b, 9)
        if self.kind == "mapped":
            return np.array([0.0, 0.25, 0.5, 0.75, 0.875, 0.9375, 0.97, 0.99, 1.0])
        lo, hi = sorted((self.a, self.b))
        pts = [lo]
        while pts[-1] * 2 < hi:
            pts.append(pts[-1] * 2)
        pts.append(hi)
        pts = np.array(pts)
        return pts if self.a < self.b else pts[::-1]

    def length(self) -> float:
        if self.kind == "mapped":
            return math.inf
        if self.kind == "ray":
            return abs(self.b - self.a)
        return abs(self.b - self.a) * self.angle


@dataclass(frozen=True)
class Contour:
    segments: tuple
    spec: ContourSpec | None = None
    tail_bound: float = 0.0

    def length(self) -> float:
        return sum(s.length() for s in self.segments)

    @property
    def truncation(self) -> float:
        return max(abs(self.segments[0].a), abs(self.segments[-1].b))


def hankel_contour(spec: ContourSpec, truncation: float | None = None, tail_bound: float = 0.0) -> Contour:
    T = truncation if truncation is not None else spec.truncationRadius
    if T is None:
        T = 50.0 * max(1.0, spec.arcRadius)
    r = spec.arcRadius
    if not T > r:
        raise ValueError("truncation radius must exceed the arc radius")
    phi = math.pi / 2 + spec.deltaPrime
    segs = (
        Segment("ray", -phi, float(T), r),
        Segment("arc", r, -phi, phi),
        Segment("ray", phi, r, float(T)),
    )
    return Contour(segs, spec, tail_bound)


# --- adaptive engine ---------------------------------------------------------

def _eval_panels(evalf, segments, seg_idx, a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    t = mid[:, None] + half[:, None] * X15[None, :]
    u = np.empty(t.shape, dtype=complex)
    du = np.empty(t.shape, dtype=complex)
    for s in set(seg_idx):
        rows = np.array([i for i, k in enumerate(seg_idx) if k == s])
        u[rows] = segments[s].point(t[rows])
        du[rows] = segments[s].deriv(t[rows])
    P = len(a)
    vals, inner = evalf(u.ravel())
    vals = np.asarray(vals)
    rest = vals.shape[1:]
    vals = vals.reshape((P, 15) + rest)
    if not np.all(np.isfinite(vals)):
        raise QuadratureError("non-finite integrand value")
    jac = (du * half[:, None]).reshape((P, 15) + (1,) * len(rest))
    wk = WK15.reshape((1, 15) + (1,) * len(rest))
    wg = WG15.reshape((1, 15) + (1,) * len(rest))
    fj = vals * jac
    resk = np.sum(wk * fj, axis=1)
    resg = np.sum(wg * fj, axis=1)
    absh = np.abs(jac)
    # QUADPACK heuristics on |f|; reference value is the Kronrod mean over the panel
    fabs = np.abs(vals)
    resabs = np.sum(wk * fabs * absh, axis=1)
    reskh = np.sum(wk * vals * absh, axis=1) / np.sum(wk * absh, axis=1)
    resasc = np.sum(wk * np.abs(vals - reskh[:, None]) * absh, axis=1)
    err = np.abs(resk - resg)
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5)
    err = np.where((resasc != 0) & (err != 0), scaled, err)
    floor = 50.0 * _EPS * resabs
    err = np.maximum(err, floor)
    inner_err = None
    if inner is not None:
        inner = np.asarray(inner).reshape((P, 15) + rest)
        inner_err = np.sum(wk * inner * absh, axis=1)
    return resk, err, floor, inner_err


def _adaptive(evalf, segments, tol: float, level: int = 0, max_panels: int = MAX_PANELS):
    """Integrate over the concatenated segments; returns (value, error) arrays.

    ``evalf(u)`` receives a flat array of m points and returns
    ``(values, inner_errors_or_None)`` with values shaped (m, *rest).
    """
    seg_idx, a, b = [], [], []
    for s, seg in enumerate(segments):
        bp = seg.breakpoints()
        for lo, hi in zip(bp[:-1], bp[1:]):
            seg_idx.append(s)
            a.append(lo)
            b.append(hi)
    done_val = done_err = done_inner = None
    while True:
        val, err, floor, inner = _eval_panels(evalf, segments, seg_idx, a, b)
        P_new = len(a)
        # stitch with panels kept from earlier passes
        if done_val is not None:
            allval = np.concatenate([done_val, val])
            allerr = np.concatenate([done_err, err])
            allinner = None if inner is None else np.concatenate([done_inner, inner])
        else:
            allval, allerr, allinner = val, err, inner
        total_err = np.max(np.sum(allerr, axis=0)) if allerr.size else 0.0
        P = len(allval)
        if total_err <= tol:
            break
        # refine only new panels whose error stands out; old panels were accepted
        e2, f2 = err.reshape(P_new, -1), floor.reshape(P_new, -1)
        need = np.any((e2 > tol / (2.0 * P)) & (e2 > f2 * 1.0000001), axis=1)
        widths = np.abs(np.array(b) - np.array(a))
        need &= widths > 1e-13 * np.maximum(1.0, np.abs(np.array(a)))
        if not np.any(need):
            break
        if P + int(need.sum()) > max_panels:
            raise QuadratureError(f"no convergence within {max_panels} panels, error {total_err:.3e}", level)
        keep = ~need
        kv, ke = val[keep], err[keep]
        ki = None if inner is None else inner[keep]
        if done_val is None:
            done_val, done_err, done_inner = kv, ke, ki
        else:
            done_val = np.concatenate([done_val, kv])
            done_err = np.concatenate([done_err, ke])
            done_inner = None if ki is None else np.concatenate([done_inner, ki])
        ns, na, nb = [], [], []
        for i in np.flatnonzero(need):
            m = 0.5 * (a[i] + b[i])
            ns += [seg_idx[i], seg_idx[i]]
            na += [a[i], m]
            nb += [m, b[i]]
        seg_idx, a, b = ns, na, nb
    value = np.sum(allval, axis=0)
    error = np.sum(allerr, axis=0)
    if allinner is not None:
        error = error + np.sum(allinner, axis=0)
    return value, error


def integrate_path(f, c: Contour, tol: float | None = None):
    """Integrate ``f(u)`` along the contour; returns (value, error estimate).

    ``f`` maps an array of points (m,) to values (m,) or (m, *vector).
    """
    tol = tol if tol is not None else (c.spec.tol if c.spec else 1e-10)
    val, err = _adaptive(lambda u: (f(u), None), c.segments, tol)
    return QuadResult(_squeeze(val), _squeeze(err + c.tail_bound))


def _squeeze(x):
    x = np.asarray(x)
    return complex(x) if x.ndim == 0 and np.iscomplexobj(x) else (float(x) if x.ndim == 0 else x)


def integrate_product(f, contours, tol: float | None = None):
    """Iterated integral of ``f(u_1, ..., u_d)`` over a product of contours.

    ``f`` must broadcast over its arguments; extra trailing output axes are
    treated as a vector of integrands.  Each level gets tolerance tol/d and the
    inner levels are scaled by the outer path length.  The reported error sums
    the per-level estimates and the truncation tails.
    """
    contours = list(contours)
    d = len(contours)
    if tol is None:
        tol = contours[0].spec.tol if contours[0].spec else 1e-10
    taus = [tol / d]
    for c in contours[:-1]:
        # inner errors are weighted by the outer integrand, which peaks on the arc
        arc = sum(s.length() for s in c.segments if s.kind == "arc")
        taus.append(taus[-1] / (2.0 * arc + 4.0))

    def level(j, outer):
        # outer: mutually broadcastable arrays for coordinates < j (kept sparse,
        # so separable factors of f are evaluated on small arrays)
        S = np.broadcast_shapes(*(x.shape for x in outer)) if outer else ()

        def evalf(u):
            k = len(u)
            ub = u.reshape((k,) + (1,) * len(S))
            o = [x[None] for x in outer]
            if j == d - 1:
                vals = np.asarray(f(*o, ub))
                return np.broadcast_to(vals, (k,) + S + vals.shape[1 + len(S):]), None
            return level(j + 1, o + [ub])

        return _adaptive(evalf, contours[j].segments, taus[j], level=j)

    val, err = level(0, [])
    tail = sum(c.tail_bound for c in contours)
    return QuadResult(_squeeze(val), _squeeze(err + tail))


def auto_truncation(f, spec: ContourSpec, sigma, tol: float, cap: float = 1e4):
    """Choose T so the neglected ray tails of ``f`` fall below tol/10.

    ``sigma[j]`` is the exponential decay rate of the integrand along the rays
    of coordinate j.  The algebraic growth C t^M of the remaining factor is
    fitted from samples along each ray with the other coordinates parked at
    the arc apex.  Returns (T, tail_bound).
    """
    d = len(sigma)
    r = spec.arcRadius
    phi = math.pi / 2 + spec.deltaPrime
    if any(not s > 0 for s in sigma):
        raise QuadratureError("non-decaying integrand: lambda outside the admissible cone")
    rho = max(r, 1.0) * 2.0 ** np.arange(0, 7)
    target = tol / (10.0 * d)
    best_T, tails = 2.0 * r, []
    fits = []
    for j in range(d):
        g = np.zeros_like(rho)
        for sgn in (1, -1):
            args = [np.full(rho.shape, r, dtype=complex) for _ in range(d)]
            args[j] = rho * np.exp(1j * sgn * phi)
            vals = np.abs(np.asarray(f(*args)))
            vals = vals.reshape(len(rho), -1).max(axis=1)
            g = np.maximum(g, vals * np.exp(sigma[j] * rho))
        if not np.all(np.isfinite(g)):
            raise QuadratureError("non-finite integrand while sizing the contour")
        with np.errstate(divide="ignore"):
            lg = np.log(np.maximum(g, 1e-300))
        slopes = np.diff(lg) / np.diff(np.log(rho))
        M = max(0.0, float(np.max(slopes[-3:])) + 0.5)
        C = float(np.max(g / rho**M))
        others = 1.0
        for i in range(d):
            if i != j:
                others *= 2 * phi * r + 2.0 / sigma[i]
        fits.append((C * others, M, sigma[j]))

    def tail(T, CMs):
        C, M, s = CMs
        rate = s - M / T
        if rate <= 0:
            return math.inf
        return 2.0 * C * T**M * math.exp(-s * T) / rate

    for fit in fits:
        C, M, s = fit
        T = max(2.0 * r, 2.0 * M / s + r)
        while tail(T, fit) > target:
            T *= 1.05
            if T > cap:
                raise QuadratureError("non-decaying integrand: truncation radius exceeds cap")
        best_T = max(best_T, T)
    total = sum(tail(best_T, fit) for fit in fits)
    return best_T, total


@dataclass(frozen=True)
class PathRule:
    nodes: np.ndarray  # u points
    wk: np.ndarray  # Kronrod weights times du
    wg: np.ndarray  # Gauss weights times du (zero at Kronrod-only nodes)


def path_rule(c: Contour, refine: int = 0, breakpoints=None) -> PathRule:
    """Fixed (non-adaptive) G7/K15 rule on the contour's panels, each split 2^refine times."""
    us, wks, wgs = [], [], []
    for i, seg in enumerate(c.segments):
        bp = seg.breakpoints() if breakpoints is None else np.asarray(breakpoints[i], dtype=float)
        fine = [bp[0]]
        for lo, hi in zip(bp[:-1], bp[1:]):
            fine.extend(np.linspace(lo, hi, 2**refine + 1)[1:])
        fine = np.array(fine)
        a, b = fine[:-1], fine[1:]
        half = 0.5 * (b - a)
        t = 0.5 * (a + b)[:, None] + half[:, None] * X15[None, :]
        jac = seg.deriv(t) * half[:, None]
        us.append(seg.point(t).ravel())
        wks.append((WK15[None, :] * jac).ravel())
        wgs.append((WG15[None, :] * jac).ravel())
    return PathRule(np.concatenate(us), np.concatenate(wks), np.concatenate(wgs))
