"""Adaptive quadrature, bracketed root finding and least-squares line fits.

``integrate`` is a globally adaptive Gauss-Kronrod (7/15) scheme. Integrands
are called with a 1-D numpy array of abscissae and must return an array of
the same shape; every panel refined in a round is evaluated in a single call,
which keeps nested integrals fast.

Infinite limits are removed with the rational map ``x = c + s*t/(1-|t|)``,
where the scale ``s`` follows the magnitude of the finite endpoint. Because
the integrands here decay polynomially, the transformed integrand stays
bounded. Kronrod nodes are interior, so endpoints are never evaluated.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

from .errors import BracketError, DegenerateFitError, DomainError, NumericalError, ToleranceNotReached

__all__ = [
    "QuadConfig",
    "QuadResult",
    "LineFit",
    "integrate",
    "find_root_monotone",
    "fit_line",
]

# Kronrod abscissae (non-negative half) and weights; Gauss weights belong to
# the odd-indexed abscissae plus the centre.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# full 15-point layout on [-1, 1]
NODES = np.concatenate([-_XGK[:-1], [0.0], _XGK[:-1][::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], [_WGK[-1]], _WGK[:-1][::-1]])
GAUSS_WEIGHTS = np.zeros(15)
GAUSS_WEIGHTS[[1, 3, 5]] = _WG[:3]
GAUSS_WEIGHTS[7] = _WG[3]
GAUSS_WEIGHTS[[13, 11, 9]] = _WG[:3]

_EPS = np.finfo(float).eps
_MAX_PANELS = 200_000


@dataclass(frozen=True)
class QuadConfig:
    """Tolerances for ``integrate``.

    Convergence is declared when the summed error estimate is at most
    ``max(abs_tol, rel_tol * |value|)``.
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_depth: int = 60

    def __post_init__(self):
        if not (self.abs_tol > 0 and math.isfinite(self.abs_tol)):
            raise DomainError(f"abs_tol must be positive, got {self.abs_tol}")
        if not (self.rel_tol > 0 and math.isfinite(self.rel_tol)):
            raise DomainError(f"rel_tol must be positive, got {self.rel_tol}")
        if int(self.max_depth) != self.max_depth or self.max_depth < 1:
            raise DomainError(f"max_depth must be an integer >= 1, got {self.max_depth}")

    def target(self, value: float) -> float:
        return max(self.abs_tol, self.rel_tol * abs(value))


DEFAULT_CONFIG = QuadConfig()


@dataclass(frozen=True)
class QuadResult:
    value: float
    error_estimate: float
    evaluations: int


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    r_squared: float
    residual_max: float


def _transform(lo: float, hi: float, m: float):
    """Return (t_lo, t_hi, phi) with phi(t) -> (x, dx/dt).

    With ``m == 1`` the map is ``x = c + s*t/(1-|t|)``; general ``m`` uses
    ``x = c + sign(t)*s*((1-|t|)**-m - 1)``, which has the same leading
    behaviour but flattens ``|x|**-(1+a)`` tails with small ``a``.
    """
    lo_inf = math.isinf(lo)
    hi_inf = math.isinf(hi)
    if not lo_inf and not hi_inf:
        return lo, hi, None

    def radial(r):
        # r = |t| in [0, 1); returns (offset, d offset / dr) for unit scale
        d = 1.0 - r
        if m == 1.0:
            return r / d, 1.0 / (d * d)
        return d**-m - 1.0, m * d ** (-m - 1.0)

    if lo_inf and hi_inf:
        def phi(t):
            off, jac = radial(np.abs(t))
            return np.sign(t) * off, jac
        return -1.0, 1.0, phi
    if lo_inf:
        c, s = hi, max(1.0, abs(hi))

        def phi(t):
            # t in (-1, 0]
            off, jac = radial(-t)
            return c - s * off, s * jac
        return -1.0, 0.0, phi
    c, s = lo, max(1.0, abs(lo))

    def phi(t):
        # t in [0, 1)
        off, jac = radial(t)
        return c + s * off, s * jac
    return 0.0, 1.0, phi


def _gk_panels(fun, phi, a: np.ndarray, b: np.ndarray):
    """Apply the 15-point rule to every panel [a_i, b_i] in one vectorized call."""
    centre = 0.5 * (a + b)
    half = 0.5 * (b - a)
    t = centre[:, None] + half[:, None] * NODES[None, :]
    if phi is None:
        x, jac = t, None
    else:
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            x, jac = phi(t)
    fx = np.asarray(fun(x.ravel()), dtype=float).reshape(t.shape)
    if jac is not None:
        with np.errstate(invalid="ignore", over="ignore"):
            fx = fx * jac
        # nodes that collapse onto an infinite endpoint in floating point
        fx = np.where(np.isfinite(x), fx, 0.0)
    if not np.all(np.isfinite(fx)):
        bad = x[~np.isfinite(fx)]
        raise DomainError(f"integrand returned non-finite values, e.g. at x={bad.flat[0]!r}")

    resk = fx @ KRONROD_WEIGHTS
    resg = fx @ GAUSS_WEIGHTS
    resabs = np.abs(fx) @ KRONROD_WEIGHTS
    mean = 0.5 * resk
    resasc = np.abs(fx - mean[:, None]) @ KRONROD_WEIGHTS

    ahalf = np.abs(half)
    value = resk * half
    err = np.abs((resk - resg) * half)
    resasc = resasc * ahalf
    resabs = resabs * ahalf
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5)
    err = np.where((resasc != 0.0) & (err != 0.0), scaled, err)
    floor = 50.0 * _EPS * resabs
    at_floor = err <= floor
    err = np.maximum(err, floor)
    return value, err, at_floor


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    cfg: QuadConfig | None = None,
    *,
    initial_panels: int = 2,
    tail_power: float = 1.0,
) -> QuadResult:
    """Integrate ``f`` over ``[lo, hi]``; either endpoint may be infinite.

    ``tail_power`` only matters for infinite limits. An integrand decaying
    like ``|x|**-(1+a)`` becomes ``(1-|t|)**(a*m - 1)`` after the map, so
    ``m >= 1/a`` keeps it bounded; the default suits ``a >= 1``.

    Raises
    ------
    ToleranceNotReached
        If the error target cannot be met before every offending panel hits
        ``cfg.max_depth``. The best estimate is attached as ``.result``.
    DomainError
        If ``lo >= hi`` or ``f`` produces non-finite values at a node.
    """
    cfg = cfg or DEFAULT_CONFIG
    lo = float(lo)
    hi = float(hi)
    if math.isnan(lo) or math.isnan(hi) or not lo < hi:
        raise DomainError(f"integrate requires lo < hi, got [{lo}, {hi}]")
    if not tail_power >= 1.0:
        raise DomainError(f"tail_power must be >= 1, got {tail_power}")
    # a half-line reaching well past the origin would get a map scale that
    # squeezes the region around 0 into a sliver no node lands in; take the
    # whole line minus the far tail instead
    if (math.isinf(lo) and 1.0 < hi < math.inf) or (-math.inf < lo < -1.0 and math.isinf(hi)):
        whole = integrate(f, -math.inf, math.inf, cfg, initial_panels=initial_panels, tail_power=tail_power)
        if math.isinf(lo):
            rest = integrate(f, hi, math.inf, cfg, initial_panels=initial_panels, tail_power=tail_power)
        else:
            rest = integrate(f, -math.inf, lo, cfg, initial_panels=initial_panels, tail_power=tail_power)
        return QuadResult(
            whole.value - rest.value,
            whole.error_estimate + rest.error_estimate,
            whole.evaluations + rest.evaluations,
        )
    t_lo, t_hi, phi = _transform(lo, hi, float(tail_power))

    edges = np.linspace(t_lo, t_hi, initial_panels + 1)
    a, b = edges[:-1], edges[1:]
    depth = np.zeros(len(a), dtype=int)
    vals, errs, flat = _gk_panels(f, phi, a, b)
    # panels whose error is pure round-off gain nothing from bisection
    depth = np.where(flat, cfg.max_depth, depth)
    evaluations = 15 * len(a)

    # heap of (-err, id); panel data kept in parallel lists
    pa, pb, pd, pv, pe = list(a), list(b), list(depth), list(vals), list(errs)
    heap = [(-e, i) for i, e in enumerate(pe)]
    heapq.heapify(heap)
    total = math.fsum(pv)
    total_err = math.fsum(pe)
    frozen_err = 0.0  # error locked in panels that can no longer be split

    while True:
        target = cfg.target(total)
        if total_err <= target:
            return QuadResult(total, total_err, evaluations)

        # split the worst panels until the untouched remainder fits in half the budget
        picked = []
        remaining = total_err
        while heap and (remaining > 0.5 * target or not picked):
            neg_e, i = heapq.heappop(heap)
            if pd[i] >= cfg.max_depth:
                frozen_err += -neg_e
                continue
            picked.append(i)
            remaining -= -neg_e
        # past the frozen error, refining the rest still sharpens the estimate
        # attached to the exception; stop once it is no longer the larger part
        live_err = total_err - frozen_err
        if not picked or (frozen_err > target and live_err <= frozen_err):
            res = QuadResult(total, total_err, evaluations)
            raise ToleranceNotReached(
                f"quadrature on [{lo}, {hi}] did not reach tolerance "
                f"(estimate {total:.17g}, error {total_err:.3g}, target {target:.3g})",
                res,
            )
        if len(pa) + len(picked) > _MAX_PANELS:
            res = QuadResult(total, total_err, evaluations)
            raise ToleranceNotReached(f"quadrature on [{lo}, {hi}] exceeded the panel budget", res)

        idx = np.array(picked)
        aa = np.array([pa[i] for i in idx])
        bb = np.array([pb[i] for i in idx])
        mid = 0.5 * (aa + bb)
        na = np.concatenate([aa, mid])
        nb = np.concatenate([mid, bb])
        nv, ne, nflat = _gk_panels(f, phi, na, nb)
        evaluations += 15 * len(na)

        for i in picked:
            pv[i] = 0.0
            pe[i] = 0.0
        newdepth = [pd[i] + 1 for i in picked] * 2
        newdepth = [cfg.max_depth if nflat[j] else newdepth[j] for j in range(len(na))]
        for j in range(len(na)):
            k = len(pa)
            pa.append(na[j])
            pb.append(nb[j])
            pd.append(newdepth[j])
            pv.append(nv[j])
            pe.append(ne[j])
            heapq.heappush(heap, (-ne[j], k))
        total = math.fsum(pv)
        total_err = math.fsum(pe)


def find_root_monotone(g: Callable[[float], float], lo: float, hi: float, xtol: float = 1e-12) -> float:
    """Root of a continuous monotone ``g`` inside ``[lo, hi]``.

    The returned point is within ``xtol * max(1, |x|)`` of the root.
    """
    lo = float(lo)
    hi = float(hi)
    if lo > hi:
        lo, hi = hi, lo
    glo = g(lo)
    ghi = g(hi)
    if glo == 0.0:
        return lo
    if ghi == 0.0:
        return hi
    if not (math.isfinite(glo) and math.isfinite(ghi)):
        raise NumericalError(f"non-finite function value at bracket [{lo}, {hi}]")
    if glo * ghi > 0.0:
        raise BracketError(f"no sign change on [{lo}, {hi}]: g(lo)={glo:.6g}, g(hi)={ghi:.6g}")
    rtol = max(0.5 * xtol, 4.0 * _EPS)
    return optimize.brentq(g, lo, hi, xtol=0.5 * xtol, rtol=rtol, maxiter=500)


def fit_line(xs: Sequence[float], ys: Sequence[float]) -> LineFit:
    """Ordinary least-squares fit ``y = slope * x + intercept``."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DegenerateFitError("xs and ys must be 1-D sequences of equal length")
    if len(x) < 3:
        raise DegenerateFitError(f"need at least 3 points, got {len(x)}")
    xm = x.mean()
    sxx = np.sum((x - xm) ** 2)
    if sxx <= 0.0 or np.ptp(x) == 0.0:
        raise DegenerateFitError("xs are constant; slope is undefined")
    ym = y.mean()
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    resid = y - (slope * x + intercept)
    syy = float(np.sum((y - ym) ** 2))
    r2 = 1.0 if syy == 0.0 else 1.0 - float(np.sum(resid**2)) / syy
    r2 = min(1.0, max(0.0, r2))
    return LineFit(slope, intercept, r2, float(np.max(np.abs(resid))))
