"""Lower tail dependence of the bivariate skew-t.

Conditional probabilities use the exact one-dimensional representation

    P(X2 <= c | X1 = y) = int_{-inf}^{L(y, c)} f_{eta+1}(z) tau(z, y) dz,

with ``L(y, c) = (c - rho y) / sqrt((eta + y^2)(1 - rho^2)/(eta + 1))``.
Joint tail probabilities integrate that conditional against the margin-1
density, so the copula diagonal ``C(u, u)`` only ever needs nested 1-D
quadrature. The ``1|2`` direction is the ``2|1`` computation applied to
the swapped vector (X2, X1).
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np

from .asymptotics import cross_quantile_expansion, integration_limits, tail_constants
from .errors import DegenerateFitError, DomainError, NumericalError, UnreliableEstimateWarning
from .model import (
    SamplePairs,
    SkewTParams,
    joint_pdf,
    marginal_cdf_result,
    marginal_pdf,
    marginal_quantile,
    marginal_skewness,
    tail_power,
)
from .numerics import DEFAULT_CONFIG, LineFit, QuadConfig, QuadResult, fit_line, integrate
from .special import student_t_cdf, student_t_pdf

__all__ = [
    "RATE_CONFIG",
    "ConditionalKernel",
    "RateConstants",
    "RateFitResult",
    "EmpiricalLambda",
    "conditional_tail_cdf",
    "joint_tail_probability",
    "joint_cdf_nested",
    "lambda_limit",
    "lambda_of_u",
    "lambda_point",
    "LambdaPoint",
    "copula_diag_derivative",
    "diag_derivative_terms",
    "rate_constants",
    "fit_rate",
    "fit_grid",
    "rate_grid",
    "rate_u_grid",
    "empirical_lambda",
    "empirical_lambda_stats",
]

RATE_CONFIG = QuadConfig(abs_tol=1e-12, rel_tol=1e-10)
MIN_TAIL_COUNT = 20


def _orient(p: SkewTParams, direction: str) -> SkewTParams:
    if direction == "2|1":
        return p
    if direction == "1|2":
        return p.swapped()
    raise DomainError(f"direction must be '2|1' or '1|2', got {direction!r}")


@dataclass(frozen=True)
class ConditionalKernel:
    """Pieces of the conditional law of X2 given X1 = y.

    Build it with :meth:`for_direction`; for ``"1|2"`` every quantity refers
    to the swapped pair, so ``theta``, ``lambda`` and ``L1`` are mirrored.
    """

    params: SkewTParams
    lam: float = field(init=False)
    mass: float = field(init=False)
    L1: float = field(init=False)

    def __post_init__(self):
        p = self.params
        lam = marginal_skewness(p).lambda1
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "mass", student_t_cdf(-lam * math.sqrt(p.eta + 1.0), p.eta + 1.0))
        object.__setattr__(self, "L1", integration_limits(p).L1)

    @classmethod
    def for_direction(cls, p: SkewTParams, direction: str = "2|1") -> "ConditionalKernel":
        return cls(_orient(p, direction))

    def _scale(self, z):
        eta = self.params.eta
        return np.sqrt((eta + 2.0) / (1.0 + z * z / (eta + 1.0)))

    def a(self, z):
        p = self.params
        return p.theta2 * math.sqrt((1.0 - p.rho**2) / (p.eta + 1.0)) * self._scale(z) * z

    def b(self, z):
        p = self.params
        return -(p.theta1 + p.rho * p.theta2) * self._scale(z)

    def tau(self, z, y: float):
        """Conditional density of the standardized X2 relative to f_{eta+1}.

        ``y / sqrt(eta + y^2)`` is used directly, so any real ``y`` works; for
        ``y < 0`` it equals ``a(z) + b(z) (1 + eta/y^2)^(-1/2)`` on top.
        """
        p = self.params
        eta = p.eta
        z = np.asarray(z, dtype=float)
        s = y / math.sqrt(eta + y * y)
        top = student_t_cdf(self.a(z) - self.b(z) * s, eta + 2.0)
        bottom = student_t_cdf(self.lam * math.sqrt(eta + 1.0) * s, eta + 1.0)
        return top / bottom

    def tau_limit(self, z):
        eta = self.params.eta
        return student_t_cdf(self.a(z) + self.b(z), eta + 2.0) / self.mass

    def upper_limit(self, y: float, c: float) -> float:
        p = self.params
        return (c - p.rho * y) / math.sqrt((p.eta + y * y) * (1.0 - p.rho**2) / (p.eta + 1.0))

    def conditional(self, y: float, c: float, cfg: QuadConfig | None = None) -> QuadResult:
        """``P(X2 <= c | X1 = y)`` as a quadrature result (any real ``y``)."""
        eta = self.params.eta
        if c == math.inf:
            return QuadResult(1.0, 0.0, 0)
        if c == -math.inf:
            return QuadResult(0.0, 0.0, 0)
        upper = self.upper_limit(y, c)

        def f(z):
            return student_t_pdf(z, eta + 1.0) * self.tau(z, y)

        r = integrate(f, -math.inf, upper, cfg)
        return QuadResult(min(max(r.value, 0.0), 1.0), r.error_estimate, r.evaluations)


def conditional_tail_cdf(
    p: SkewTParams, direction: str, y: float, c: float, cfg: QuadConfig | None = None
) -> float:
    """``P(X2 <= c | X1 = y)`` for ``"2|1"``, ``P(X1 <= c | X2 = y)`` for ``"1|2"``; needs ``y < 0``."""
    y = float(y)
    if not y < 0.0:
        raise DomainError(f"conditional_tail_cdf requires y < 0, got {y}")
    return ConditionalKernel.for_direction(p, direction).conditional(y, float(c), cfg).value


def joint_cdf_nested(p: SkewTParams, y1: float, y2: float, cfg: QuadConfig | None = None) -> QuadResult:
    """``P(X1 <= y1, X2 <= y2)`` by nested quadrature of the joint density."""
    cfg = cfg or DEFAULT_CONFIG
    if y1 == -math.inf or y2 == -math.inf:
        return QuadResult(0.0, 0.0, 0)
    # inner abs_tol follows the margin density so the inner errors add up to
    # at most abs_tol * P(X1 <= y1) instead of growing with the outer range
    worst = [0.0]

    def inner(x1: float) -> float:
        f1 = marginal_pdf(p, 1, x1)
        if y2 == math.inf:
            return f1
        if f1 <= 0.0:
            return 0.0
        local = replace(cfg, abs_tol=max(cfg.abs_tol * f1, 1e-300))
        r = integrate(lambda x2: joint_pdf(p, x1, x2), -math.inf, y2, local)
        worst[0] = max(worst[0], r.error_estimate / f1)
        return r.value

    def outer(xs):
        return np.array([inner(x) for x in xs])

    r = integrate(outer, -math.inf, y1, cfg, tail_power=tail_power(p.eta))
    mass = 1.0 if y1 == math.inf else marginal_cdf_result(p, 1, y1, cfg).value
    return QuadResult(r.value, r.error_estimate + worst[0] * mass, r.evaluations)


def _joint_tail(p: SkewTParams, y1: float, y2: float, cfg: QuadConfig) -> QuadResult:
    if y1 >= 0.0:
        return joint_cdf_nested(p, y1, y2, cfg)
    kern = ConditionalKernel(p)
    inner_err = [0.0]

    def outer(xs):
        vals = np.empty(len(xs))
        for i, x in enumerate(xs):
            r = kern.conditional(float(x), y2, cfg)
            inner_err[0] = max(inner_err[0], r.error_estimate)
            vals[i] = r.value
        return marginal_pdf(p, 1, xs) * vals

    r = integrate(outer, -math.inf, y1, cfg, tail_power=tail_power(p.eta))
    # each inner error is weighted by f1, so in total by at most P(X1 <= y1)
    mass = marginal_cdf_result(p, 1, y1, cfg).value
    return QuadResult(r.value, r.error_estimate + inner_err[0] * mass, r.evaluations)


def joint_tail_probability(p: SkewTParams, y1: float, y2: float, cfg: QuadConfig | None = None) -> float:
    """``P(X1 <= y1, X2 <= y2)``.

    For ``y1 < 0`` the margin-1 density is integrated against the exact
    conditional cdf; otherwise the joint density is integrated directly.
    """
    cfg = cfg or DEFAULT_CONFIG
    y1, y2 = float(y1), float(y2)
    if math.isnan(y1) or math.isnan(y2):
        raise DomainError("joint_tail_probability got NaN")
    return _joint_tail(p, y1, y2, cfg).value


def lambda_limit(p: SkewTParams, cfg: QuadConfig | None = None) -> float:
    """Limit of ``C(u, u)/u`` as u -> 0, the sum of the two directional limits."""
    total = 0.0
    for direction in ("2|1", "1|2"):
        kern = ConditionalKernel.for_direction(p, direction)
        eta = kern.params.eta

        def f(z, kern=kern, eta=eta):
            return student_t_pdf(z, eta + 1.0) * kern.tau_limit(z)

        total += integrate(f, -math.inf, kern.L1, cfg).value
    return total


class LambdaPoint(NamedTuple):
    value: float
    error: float
    y1: float
    y2: float


def lambda_point(p: SkewTParams, u: float, cfg: QuadConfig) -> LambdaPoint:
    u = float(u)
    if not (0.0 < u < 1.0):
        raise DomainError(f"u must lie in (0, 1), got {u}")
    y1 = marginal_quantile(p, 1, u, cfg)
    y2 = marginal_quantile(p, 2, u, cfg)
    joint = _joint_tail(p, y1, y2, cfg)
    # quantile error shows up as the residual of the marginal cdf
    e1 = marginal_cdf_result(p, 1, y1, cfg)
    e2 = marginal_cdf_result(p, 2, y2, cfg)
    cdf_err = abs(e1.value - u) + abs(e2.value - u) + e1.error_estimate + e2.error_estimate
    value = joint.value / u
    err = (joint.error_estimate + cdf_err) / u

    lower = max(0.0, 2.0 * u - 1.0) / u
    slack = max(1e-9, 10.0 * err)
    if value < lower - slack or value > 1.0 + slack:
        raise NumericalError(
            f"lambda_L(u={u}) = {value!r} violates the Frechet-Hoeffding bounds [{lower}, 1]"
        )
    return LambdaPoint(min(max(value, lower), 1.0), err, y1, y2)


def lambda_of_u(p: SkewTParams, u: float, cfg: QuadConfig | None = None) -> float:
    """Finite-level coefficient ``C(u, u)/u``."""
    return lambda_point(p, u, cfg or DEFAULT_CONFIG).value


def diag_derivative_terms(p: SkewTParams, u: float, cfg: QuadConfig | None = None) -> tuple[float, float]:
    """The two conditional probabilities whose sum is ``dC(u, u)/du``."""
    cfg = cfg or DEFAULT_CONFIG
    u = float(u)
    if not (0.0 < u < 1.0):
        raise DomainError(f"u must lie in (0, 1), got {u}")
    y1 = marginal_quantile(p, 1, u, cfg)
    y2 = marginal_quantile(p, 2, u, cfg)
    if y1 >= 0.0 or y2 >= 0.0:
        raise DomainError(f"u={u} maps to a non-negative quantile ({y1}, {y2}); need both < 0")
    t21 = conditional_tail_cdf(p, "2|1", y1, y2, cfg)
    t12 = conditional_tail_cdf(p, "1|2", y2, y1, cfg)
    return t21, t12


def copula_diag_derivative(p: SkewTParams, u: float, cfg: QuadConfig | None = None) -> float:
    return sum(diag_derivative_terms(p, u, cfg))


# Integrating dC(x, x)/dx - lambda_L ~ K x^(2/eta) from 0 to u and dividing
# by u gives K u^(2/eta) / (1 + 2/eta).
def karamata_factor(eta: float) -> float:
    return 1.0 + 2.0 / eta


class RateConstants(NamedTuple):
    k21: float
    k12: float
    k: float
    prefactor: float


def _directional_rate(p: SkewTParams, cfg: QuadConfig) -> float:
    """Limit of u^(-2/eta) (P(X2 <= F2^-1(u) | X1 = F1^-1(u)) - its limit)."""
    kern = ConditionalKernel(p)
    eta, rho = p.eta, p.rho
    lam, mass = kern.lam, kern.mass
    root = math.sqrt(eta + 1.0)
    dens_at_skew = student_t_pdf(-lam * root, eta + 1.0)

    def f(z):
        ab = kern.a(z) + kern.b(z)
        return student_t_pdf(z, eta + 1.0) * (
            student_t_pdf(ab, eta + 2.0) * kern.b(z) / mass
            + student_t_cdf(ab, eta + 2.0) * dens_at_skew * lam * root / mass**2
        )

    # integral term comes from tau(z, y) - tau(z, *) ~ -(eta / 2) y^-2 d tau / d eps
    body = -0.5 * eta * integrate(f, -math.inf, kern.L1, cfg).value

    # boundary term from L1(y) - L1 ~ y^-2 sqrt((eta+1)/(1-rho^2)) (r fo + eta/2 (r - rho))
    cq = cross_quantile_expansion(p)
    r = cq.ratio
    shift = math.sqrt((eta + 1.0) / (1.0 - rho * rho)) * (r * cq.first_order + 0.5 * eta * (r - rho))
    L1 = kern.L1
    edge = shift * student_t_pdf(L1, eta + 1.0) * float(kern.tau_limit(L1))

    c1 = tail_constants(p, 1).c
    return (body + edge) * c1 ** (-2.0 / eta)


def rate_constants(p: SkewTParams, cfg: QuadConfig | None = None) -> RateConstants:
    cfg = cfg or RATE_CONFIG
    k21 = _directional_rate(p, cfg)
    k12 = _directional_rate(p.swapped(), cfg)
    total = k21 + k12
    return RateConstants(k21, k12, abs(total), total / karamata_factor(p.eta))


@dataclass
class RateFitResult:
    u_grid: list
    lambda_u: list
    lambda_limit: float
    slope: float
    prefactor_hat: float
    fit: LineFit
    differences: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    excluded: list = field(default_factory=list)


def _grid_worker(args):
    p, u, cfg = args
    pt = lambda_point(p, u, cfg)
    return pt.value, pt.error


def rate_grid(p: SkewTParams, u_grid: Sequence[float], cfg: QuadConfig, workers: int | None = None):
    """Evaluate ``(lambda_u, error)`` on a grid; failures come back as exceptions."""
    jobs = [(p, float(u), cfg) for u in u_grid]

    def safe(job):
        try:
            return _grid_worker(job)
        except NumericalError as exc:
            return exc

    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_grid_worker, job) for job in jobs]
            out = []
            for fut in futures:
                try:
                    out.append(fut.result())
                except NumericalError as exc:
                    out.append(exc)
            return out
    return [safe(job) for job in jobs]


def rate_u_grid(u_lo: float, u_hi: float, points: int) -> np.ndarray:
    """Geometric grid on ``[u_lo, u_hi]``, restricted to the asymptotic regime."""
    if not (0.0 < u_lo < u_hi <= 0.1):
        raise DomainError(f"need 0 < u_lo < u_hi <= 0.1, got [{u_lo}, {u_hi}]")
    if int(points) != points or points < 4:
        raise DomainError(f"need at least 4 grid points, got {points}")
    return np.geomspace(u_lo, u_hi, int(points))


def fit_rate(
    p: SkewTParams,
    u_lo: float,
    u_hi: float,
    points: int,
    cfg: QuadConfig | None = None,
    workers: int | None = None,
) -> RateFitResult:
    """Regress ``log|lambda_L(u) - lambda_L|`` on ``log u`` over a geometric grid.

    Points whose difference is under 100x its error estimate are dropped and
    listed in ``excluded``.
    """
    cfg = cfg or RATE_CONFIG
    grid = rate_u_grid(u_lo, u_hi, points)
    limit = lambda_limit(p, cfg)
    results = rate_grid(p, grid, cfg, workers)
    for res in results:
        if isinstance(res, Exception):
            raise res
    return fit_grid(grid, [r[0] for r in results], [r[1] for r in results], limit)


def fit_grid(grid, lam_u, errs, limit: float) -> RateFitResult:
    """Log-log fit of already evaluated ``lambda_L(u)`` values; see :func:`fit_rate`."""
    diffs = [v - limit for v in lam_u]
    xs, ys, excluded = [], [], []
    for u, d, e in zip(grid, diffs, errs):
        if abs(d) <= e:
            raise DegenerateFitError(
                f"|lambda_L(u) - lambda_L| = {abs(d):.3g} is below the quadrature error {e:.3g} at u={u:.6g}"
            )
        if abs(d) < 100.0 * e:
            excluded.append(float(u))
            continue
        xs.append(math.log(u))
        ys.append(math.log(abs(d)))
    if len(xs) < 3:
        raise DegenerateFitError(f"only {len(xs)} usable grid points after exclusions {excluded}")
    line = fit_line(xs, ys)
    return RateFitResult(
        u_grid=[float(u) for u in grid],
        lambda_u=list(lam_u),
        lambda_limit=limit,
        slope=line.slope,
        prefactor_hat=math.exp(line.intercept),
        fit=line,
        differences=diffs,
        errors=list(errs),
        excluded=excluded,
    )


class EmpiricalLambda(NamedTuple):
    value: float
    count: int
    k: int
    std_err: float


def empirical_lambda_stats(samples, u: float) -> EmpiricalLambda:
    """Order-statistic estimate of ``lambda_L(u)`` with its binomial standard error."""
    rows = samples.rows if isinstance(samples, SamplePairs) else np.asarray(samples, dtype=float)
    if rows.ndim != 2 or rows.shape[1] != 2:
        raise DomainError(f"samples must have shape (n, 2), got {rows.shape}")
    u = float(u)
    if not (0.0 < u < 1.0):
        raise DomainError(f"u must lie in (0, 1), got {u}")
    n = len(rows)
    # round first so n*u = 10000.000000000002 does not bump k
    k = max(1, math.ceil(round(n * u, 9)))
    if n * u < MIN_TAIL_COUNT:
        warnings.warn(
            f"n*u = {n * u:.3g} < {MIN_TAIL_COUNT}; empirical tail estimate is unreliable",
            UnreliableEstimateWarning,
            stacklevel=2,
        )
    x1, x2 = rows[:, 0], rows[:, 1]
    q1 = np.partition(x1, k - 1)[k - 1]
    q2 = np.partition(x2, k - 1)[k - 1]
    count = int(np.count_nonzero((x1 <= q1) & (x2 <= q2)))
    lam = count / k
    return EmpiricalLambda(lam, count, k, math.sqrt(max(lam * (1.0 - lam), 0.0) / k))


def empirical_lambda(samples, u: float) -> float:
    return empirical_lambda_stats(samples, u).value
