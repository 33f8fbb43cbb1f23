"""Borel transform over Hankel contours and the truncated Laplace transform.

borel(H)(lam)      = (2 pi i)^-d  int_{V^d} exp(lam . u) H(u) du
laplace_c(I)(u)    = int_{[c, oo)^d} exp(-lam . u) I(lam) dlam

For u with Re u <= 0 the Laplace integral is taken along a rotated path:
the arc |tau| = c from c to c e^{i eta}, then the ray at angle eta.  This is
the analytic continuation used when composing borel(laplace_c(I)).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .contour import (Contour, ContourSpec, QuadratureError, QuadResult, Segment,
                      auto_truncation, hankel_contour, integrate_product, path_rule)
from .core import HomogeneousTerm
from .expr import compile_expression

__all__ = [
    "TruncationPoint", "RoundtripResult", "as_callable", "borel", "borel_vector",
    "laplace_truncated", "roundtrip_borel_of_laplace", "laplace_growth_rate",
    "admissibility_floor", "laplace_borel_defect",
]

TWO_PI_I = 2j * math.pi


@dataclass(frozen=True)
class TruncationPoint:
    c: tuple

    def __post_init__(self):
        c = tuple(float(x) for x in self.c)
        if not c or any(not x > 0 for x in c):
            raise ValueError(f"truncation point entries must be positive, got {c}")
        object.__setattr__(self, "c", c)


def as_callable(H):
    """Accept an AST, a HomogeneousTerm or a broadcasting callable."""
    if isinstance(H, HomogeneousTerm):
        f = compile_expression(H.expr)
        coef = complex(H.coefficient)
        return lambda *u: coef * f(*u)
    if callable(H):
        return H
    return compile_expression(H)


def _check_lambda(lam, spec: ContourSpec):
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    for j, x in enumerate(lam):
        if x == 0 or abs(np.angle(x)) >= spec.deltaPrime:
            raise ValueError(f"lambda_{j + 1}={x} outside the admissible cone |arg| < {spec.deltaPrime}")
    return lam


def borel_vector(H, lam, spec: ContourSpec, tol: float | None = None, factor=None) -> QuadResult:
    """Borel integral of H times an optional vector-valued ``factor(*u)``.

    ``factor`` returns arrays with one trailing axis; the result is then a
    vector of integrals computed on one shared adaptive mesh.
    """
    tol = spec.tol if tol is None else tol
    lam = _check_lambda(lam, spec)
    d = len(lam)
    Hf = as_callable(H)
    norm = TWO_PI_I ** (-d)

    def integrand(*u):
        ex = np.exp(sum(l * x for l, x in zip(lam, u)))
        val = norm * Hf(*u) * ex
        if factor is None:
            return val
        return val[..., None] * factor(*u)

    sigma = [abs(l) * math.sin(spec.deltaPrime - abs(np.angle(l))) for l in lam]
    if spec.truncationRadius is None:
        T, tail = auto_truncation(integrand, spec, sigma, tol)
    else:
        T, tail = spec.truncationRadius, 0.0
    c = hankel_contour(spec, T)
    res = integrate_product(integrand, [c] * d, tol)
    return QuadResult(res.value, res.error + tail)


def borel(H, lam, spec: ContourSpec, tol: float | None = None) -> QuadResult:
    """Scaling function I(lam) = B[H](lam) by contour quadrature."""
    return borel_vector(H, lam, spec, tol)


def _laplace_contour(c: float, eta: float) -> Contour:
    segs = []
    if eta != 0.0:
        segs.append(Segment("arc", c, 0.0, eta))
    segs.append(Segment("mapped", eta, 0.0, 1.0, origin=c))
    return Contour(tuple(segs))


def _rotation(psi: float, delta: float) -> float:
    return -math.copysign(min(abs(psi), 0.9 * delta), psi) if psi != 0 else 0.0


def laplace_truncated(I, u, c, tol: float = 1e-10, delta: float | None = None) -> QuadResult:
    """Truncated Laplace transform L_c[I](u).

    With ``delta`` given (I analytic on |arg lam| < delta) the path of each
    coordinate is rotated towards -arg u_j by at most 0.9 delta, which extends
    the transform to points with Re u_j <= 0.
    """
    u = np.atleast_1d(np.asarray(u, dtype=complex))
    cp = c if isinstance(c, TruncationPoint) else TruncationPoint(np.broadcast_to(np.asarray(c, float), u.shape))
    If = as_callable(I)
    contours = []
    for j, (uj, cj) in enumerate(zip(u, cp.c)):
        psi = float(np.angle(uj))
        eta = _rotation(psi, delta) if delta is not None else 0.0
        if uj == 0 or math.cos(psi + eta) <= 0.05:
            raise QuadratureError(f"non-decaying Laplace integrand in coordinate {j + 1} (u={uj})")
        contours.append(_laplace_contour(cj, eta))

    def integrand(*lam):
        return If(*lam) * np.exp(-sum(l * x for l, x in zip(lam, u)))

    return integrate_product(integrand, contours, tol)


# --- discrete composition for the right-inverse identity ---------------------

@dataclass(frozen=True)
class RoundtripResult:
    value: complex
    expected: complex
    residual: float
    error: float
    floor: float

    @property
    def relative_residual(self) -> float:
        return self.residual / max(abs(self.expected), 1e-300)


def _tau_rule(c: float, eta: float, rho_max: float, decay: float, tol: float, refine: int):
    """Graded G7/K15 rule on the (rotated) Laplace path from c."""
    lam_max = c + (math.log(1.0 / tol) + 10.0) / decay
    h = 2.0 / rho_max
    bp = [0.0]
    while bp[-1] < lam_max - c:
        bp.append(bp[-1] + h)
        h *= 1.5
    segs, bps = [], []
    if eta != 0.0:
        n_arc = int(math.ceil(rho_max * c * abs(eta) / 1.5)) + 2
        segs.append(Segment("arc", c, 0.0, eta))
        bps.append(np.linspace(0.0, eta, n_arc + 1))
    # the ray parameter is the modulus, so the ray starts at c e^{i eta}
    segs.append(Segment("ray", eta, c, c + bp[-1]))
    bps.append(c + np.array(bp))
    return path_rule(Contour(tuple(segs)), refine=refine, breakpoints=bps)


def _coordinate_kernel(lam: complex, c: float, spec: ContourSpec, T: float, refine: int, tol: float):
    """Weights K[b] with sum_b K[b] g(tau_b) = B_u[ L_c[g](u) ](lam) for one coordinate."""
    V = hankel_contour(spec, T)
    urule = path_rule(V, refine=refine)
    ua = urule.nodes
    psi = np.angle(ua)
    etas = (0.0, 0.9 * spec.delta, -0.9 * spec.delta)
    choice = np.argmin(np.abs(psi[:, None] + np.array(etas)[None, :]), axis=1)
    taus, ks = [], []
    for r, eta in enumerate(etas):
        sel = choice == r
        if not np.any(sel):
            continue
        decay = float(np.min(np.abs(ua[sel]) * np.cos(psi[sel] + eta)))
        if decay <= 0:
            raise QuadratureError("non-decaying Laplace kernel on the Hankel contour")
        rule = _tau_rule(c, eta, T, decay, tol, refine)
        tau = rule.nodes
        E = np.exp((lam - tau[:, None]) * ua[sel][None, :])
        K = rule.wk * (E @ urule.wk[sel]) / TWO_PI_I
        taus.append(tau)
        ks.append(K)
    return np.concatenate(taus), np.concatenate(ks)


def laplace_growth_rate(I, c, spec: ContourSpec, tol: float = 1e-12) -> float:
    """Exponential growth rate m of |L_c[I](u)| in |u| along the Hankel rays."""
    If = as_callable(I)
    cs = TruncationPoint(c).c
    d = len(cs)
    phi = math.pi / 2 + spec.deltaPrime
    rho = np.array([4.0, 8.0, 16.0])
    m = 0.0
    for j in range(d):
        for sgn in (1, -1):
            vals = []
            for r in rho:
                u = np.full(d, spec.arcRadius, dtype=complex)
                u[j] = r * np.exp(1j * sgn * phi)
                vals.append(abs(laplace_truncated(If, u, cs, tol, spec.delta).value))
            lv = np.log(np.maximum(vals, 1e-300))
            m = max(m, float(np.max(np.diff(lv) / np.diff(rho))))
    return max(m, 0.0)


def admissibility_floor(m: float, spec: ContourSpec, lam) -> float:
    """|lambda_j| must be at least (m + 1)/sin(delta' - |arg lambda_j|)."""
    worst = max(abs(float(np.angle(l))) for l in np.atleast_1d(lam))
    s = math.sin(spec.deltaPrime - worst)
    if s <= 0:
        return math.inf
    return (m + 1.0) / s


def roundtrip_borel_of_laplace(I, lam, c, spec: ContourSpec, tol: float = 1e-10,
                               check_floor: bool = True) -> RoundtripResult:
    """Evaluate B[L_c[I]](lam) as a discrete tensor operator and compare with I(lam).

    The Hankel and Laplace rules are fixed composite G7/K15 rules; the error
    estimate is the change under halving every panel.
    """
    lam = _check_lambda(lam, spec)
    cs = TruncationPoint(np.broadcast_to(np.asarray(c, float), lam.shape)).c
    If = as_callable(I)
    d = len(lam)
    if 0.9 * spec.delta <= spec.deltaPrime:
        raise ValueError("rotated Laplace paths need deltaPrime < 0.9 delta")
    m = laplace_growth_rate(If, cs, spec) if check_floor else 0.0
    floor = admissibility_floor(m, spec, lam)
    if check_floor and any(abs(l) < floor for l in lam):
        raise ValueError(f"lambda {lam.tolist()} below the admissibility floor {floor:.4g}")
    vals = []
    for refine in (0, 1):
        grids, kernels = [], []
        for lj, cj in zip(lam, cs):
            rate = (abs(lj) * math.sin(spec.deltaPrime - abs(np.angle(lj)))
                    - cj * math.sin(spec.deltaPrime))
            if rate <= 0:
                raise QuadratureError("Borel integrand of L_c[I] does not decay; increase |lambda|")
            T = max(4.0 * spec.arcRadius, (math.log(1.0 / tol) + 10.0) / rate)
            tau, K = _coordinate_kernel(lj, cj, spec, T, refine, tol)
            grids.append(tau)
            kernels.append(K)
        mesh = np.meshgrid(*grids, indexing="ij", sparse=True)
        F = np.broadcast_to(np.asarray(If(*mesh), dtype=complex), tuple(len(g) for g in grids))
        out = F
        for K in kernels:
            out = np.tensordot(K, out, axes=([0], [0]))
        vals.append(complex(out))
    expected = complex(np.asarray(If(*[np.asarray(l) for l in lam])).item())
    value = vals[1]
    return RoundtripResult(value, expected, abs(value - expected), abs(vals[1] - vals[0]), floor)


def laplace_borel_defect(H, u, c, spec: ContourSpec, tol: float = 1e-9, refine: int = 1) -> complex:
    """Pointwise E_c(u) = L_c[B[H]](u) - H(u), for Re u_j > 0.

    B[H] is evaluated with a fixed Hankel rule so it can be sampled on the
    whole Laplace mesh at once.  The result is reported, not certified.
    """
    u = np.atleast_1d(np.asarray(u, dtype=complex))
    d = len(u)
    if np.any(u.real <= 0):
        raise ValueError("the defect is only evaluated for Re u_j > 0")
    Hf = as_callable(H)
    cs = TruncationPoint(np.broadcast_to(np.asarray(c, float), u.shape)).c
    # the fixed rule carries roundoff of size eps e^{lam r}; an arc inside Re u
    # keeps it damped by the Laplace weight, and lam beyond lam_max is dropped
    r = min(spec.arcRadius, 0.5 * float(u.real.min()))
    T = spec.truncationRadius or max(4.0 * r, (math.log(1.0 / tol) + 10.0) / (min(cs) * math.sin(spec.deltaPrime)))
    V = hankel_contour(replace(spec, arcRadius=r, truncationRadius=None), T)
    lam_max = max(cs) + (math.log(1.0 / tol) + 30.0) / float(u.real.min())
    rule = path_rule(V, refine=refine)
    grid = np.meshgrid(*([rule.nodes] * d), indexing="ij", sparse=True)
    Hgrid = np.asarray(Hf(*grid), dtype=complex) * TWO_PI_I ** (-d)
    letters = "abcdefgh"[:d]
    spec_str = ",".join(f"m{x}" for x in letters) + "," + letters + "->m"

    def I(*lam):
        shape = np.broadcast_shapes(*(np.shape(x) for x in lam))
        flat = [np.broadcast_to(x, shape).ravel() for x in lam]
        keep = np.all([x.real <= lam_max for x in flat], axis=0)
        flat = [np.where(keep, x, 0.0) for x in flat]
        Es = [np.exp(x[:, None] * rule.nodes[None, :]) * rule.wk[None, :] for x in flat]
        return np.where(keep, np.einsum(spec_str, *Es, Hgrid), 0.0).reshape(shape)

    L = laplace_truncated(I, u, TruncationPoint(cs), tol)
    return L.value - complex(np.asarray(Hf(*u)).item())
