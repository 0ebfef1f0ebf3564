"""Second-order lower-tail constants for the skew-t margins.

As y -> -inf each marginal cdf behaves like ``c |y|**-eta (1 + d/y**2)``;
the quantile function and the cross-quantile map ``F2^-1(F1(y))`` inherit
matching two-term expansions. Nothing here is numerically integrated.
"""

from __future__ import annotations

import math
from typing import NamedTuple

from .errors import DomainError
from .model import SkewTParams, _check_margin, marginal_skewness
from .special import log_gamma, student_t_cdf, student_t_pdf

__all__ = [
    "TailExpansion",
    "CrossQuantileExpansion",
    "IntegrationLimits",
    "tail_constants",
    "quantile_asymptotic",
    "cross_quantile_expansion",
    "integration_limits",
]

ASYMPTOTIC_REGIME = 0.1


class TailExpansion(NamedTuple):
    margin: int
    c: float
    d: float


class CrossQuantileExpansion(NamedTuple):
    ratio: float
    first_order: float


class IntegrationLimits(NamedTuple):
    a21: float
    a12: float
    L1: float
    L2: float


def _skew_tail_mass(eta: float, lam: float) -> float:
    """F_{eta+1}(-lam sqrt(eta+1))."""
    return student_t_cdf(-lam * math.sqrt(eta + 1.0), eta + 1.0)


def _t_scale(eta: float) -> float:
    # 2 Gamma((eta+1)/2) eta^((eta+1)/2) / ((pi eta)^1/2 Gamma(eta/2))
    return 2.0 * math.exp(
        log_gamma((eta + 1.0) / 2.0)
        + 0.5 * (eta + 1.0) * math.log(eta)
        - 0.5 * math.log(math.pi * eta)
        - log_gamma(eta / 2.0)
    )


def tail_constants(p: SkewTParams, margin: int) -> TailExpansion:
    _check_margin(margin)
    eta = p.eta
    lam = marginal_skewness(p)[margin - 1]
    arg = -lam * math.sqrt(eta + 1.0)
    big_f = student_t_cdf(arg, eta + 1.0)
    small_f = student_t_pdf(arg, eta + 1.0)
    c = _t_scale(eta) * big_f / eta
    base = eta * eta / (2.0 * (eta + 2.0))
    d = -base * (eta + 1.0) + base * small_f * lam * math.sqrt(eta + 1.0) / big_f
    return TailExpansion(margin, c, d)


def quantile_asymptotic(p: SkewTParams, margin: int, u: float) -> float:
    """Two-term lower quantile ``-c^(1/eta) u^(-1/eta) (1 + d u^(2/eta) / (eta c^(2/eta)))``.

    Meant for u <= 0.1; larger u still evaluates but the expansion is then
    not a meaningful approximation.
    """
    u = float(u)
    if not (0.0 < u < 1.0):
        raise DomainError(f"quantile requires 0 < u < 1, got {u}")
    eta = p.eta
    te = tail_constants(p, margin)
    lead = (te.c / u) ** (1.0 / eta)
    return -lead * (1.0 + te.d / te.c ** (2.0 / eta) * u ** (2.0 / eta) / eta)


def cross_quantile_expansion(p: SkewTParams) -> CrossQuantileExpansion:
    """Coefficients of ``c(y) ~ ratio * y * (1 - first_order / y**2)``."""
    eta = p.eta
    t1 = tail_constants(p, 1)
    t2 = tail_constants(p, 2)
    lam1, lam2 = marginal_skewness(p)
    ratio = (_skew_tail_mass(eta, lam2) / _skew_tail_mass(eta, lam1)) ** (1.0 / eta)
    first = (t1.d - t2.d * (t1.c / t2.c) ** (2.0 / eta)) / eta
    return CrossQuantileExpansion(ratio, first)


def integration_limits(p: SkewTParams) -> IntegrationLimits:
    eta, rho = p.eta, p.rho
    lam1, lam2 = marginal_skewness(p)
    m1 = _skew_tail_mass(eta, lam1)
    m2 = _skew_tail_mass(eta, lam2)
    scale = math.sqrt((eta + 1.0) / (1.0 - rho * rho))
    a21 = ((m2 / m1) ** (1.0 / eta) - rho) * scale
    a12 = ((m1 / m2) ** (1.0 / eta) - rho) * scale
    return IntegrationLimits(a21, a12, -a21, -a12)
