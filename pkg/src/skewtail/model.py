"""Bivariate skew-t model: parameters, densities, marginal cdf/quantile, sampler.

X = V**-1/2 * Z with Z ~ SN2(theta, R), R = [[1, rho], [rho, 1]] and
V ~ Gamma(shape=eta/2, rate=eta/2), independent of Z. Margins are the
univariate skew-t with shape lambda_i.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DomainError, NumericalError, SamplerError
from .numerics import DEFAULT_CONFIG, QuadConfig, QuadResult, find_root_monotone, integrate
from .special import log_gamma, student_t_cdf, student_t_pdf, student_t_quantile

__all__ = [
    "SkewTParams",
    "MarginalSkew",
    "SamplePairs",
    "GENERATOR",
    "marginal_skewness",
    "joint_pdf",
    "marginal_pdf",
    "marginal_cdf",
    "marginal_quantile",
    "sample",
    "read_samples_csv",
]

GENERATOR = f"numpy.random.Philox-4x64 (SeedSequence spawn per block, numpy {np.__version__})"
BLOCK_SIZE = 1 << 16
_MAX_REJECTION_ROUNDS = 1_000_000


@dataclass(frozen=True)
class SkewTParams:
    """Degrees of freedom ``eta``, correlation ``rho`` and skewness ``(theta1, theta2)``."""

    eta: float
    rho: float
    theta1: float = 0.0
    theta2: float = 0.0

    def __post_init__(self):
        for name in ("eta", "rho", "theta1", "theta2"):
            v = getattr(self, name)
            try:
                v = float(v)
            except (TypeError, ValueError) as exc:
                raise DomainError(f"{name} must be a real number, got {v!r}") from exc
            if not math.isfinite(v):
                raise DomainError(f"{name} must be finite, got {v}")
            object.__setattr__(self, name, v)
        if self.eta <= 0.0:
            raise DomainError(f"eta must be > 0, got {self.eta}")
        if not abs(self.rho) < 1.0:
            raise DomainError(f"|rho| must be < 1, got {self.rho}")

    @property
    def corr(self) -> np.ndarray:
        return np.array([[1.0, self.rho], [self.rho, 1.0]])

    def swapped(self) -> "SkewTParams":
        """Parameters of (X2, X1)."""
        return SkewTParams(self.eta, self.rho, self.theta2, self.theta1)

    def negated(self) -> "SkewTParams":
        """Parameters of -X."""
        return SkewTParams(self.eta, self.rho, -self.theta1, -self.theta2)

    def as_dict(self) -> dict:
        return {"eta": self.eta, "rho": self.rho, "theta1": self.theta1, "theta2": self.theta2}


class MarginalSkew(NamedTuple):
    lambda1: float
    lambda2: float


def marginal_skewness(p: SkewTParams) -> MarginalSkew:
    one_m_r2 = 1.0 - p.rho * p.rho
    lam1 = (p.theta1 + p.rho * p.theta2) / math.sqrt(1.0 + p.theta2**2 * one_m_r2)
    lam2 = (p.theta2 + p.rho * p.theta1) / math.sqrt(1.0 + p.theta1**2 * one_m_r2)
    return MarginalSkew(lam1, lam2)


def _check_margin(margin) -> int:
    if margin not in (1, 2):
        raise DomainError(f"margin must be 1 or 2, got {margin!r}")
    return margin


def _margin_lambda(p: SkewTParams, margin: int) -> float:
    return marginal_skewness(p)[_check_margin(margin) - 1]


def tail_power(eta: float) -> float:
    """Rational-map exponent that keeps a |x|**-(eta+1) tail bounded after mapping."""
    return max(1.0, 2.0 / eta)


def joint_pdf(p: SkewTParams, x1, x2):
    """Joint density; ``x1`` and ``x2`` broadcast against each other."""
    eta, rho = p.eta, p.rho
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    one_m_r2 = 1.0 - rho * rho
    q = (x1 * x1 - 2.0 * rho * x1 * x2 + x2 * x2) / one_m_r2
    log_c = (
        math.log(2.0)
        + log_gamma((eta + 2.0) / 2.0)
        - log_gamma(eta / 2.0)
        - math.log(math.pi * eta)
        - 0.5 * math.log(one_m_r2)
    )
    kernel = np.exp(log_c - 0.5 * (eta + 2.0) * np.log1p(q / eta))
    arg = (p.theta1 * x1 + p.theta2 * x2) * np.sqrt((eta + 2.0) / (eta + q))
    out = kernel * student_t_cdf(arg, eta + 2.0)
    return float(out) if out.ndim == 0 else out


def marginal_pdf(p: SkewTParams, margin: int, x):
    """Density 2 f_eta(x) F_{eta+1}(lambda x sqrt((eta+1)/(eta+x^2))) of margin 1 or 2."""
    lam = _margin_lambda(p, margin)
    eta = p.eta
    xa = np.asarray(x, dtype=float)
    if lam == 0.0:
        out = student_t_pdf(xa, eta)
    else:
        # x/sqrt(eta+x^2) rewritten to stay finite for huge |x|
        s = np.sign(xa) / np.sqrt(1.0 + eta / np.maximum(xa * xa, 1e-300))
        s = np.where(xa == 0.0, 0.0, s)
        out = 2.0 * student_t_pdf(xa, eta) * student_t_cdf(lam * math.sqrt(eta + 1.0) * s, eta + 1.0)
    return float(out) if np.ndim(out) == 0 else out


def marginal_cdf_result(p: SkewTParams, margin: int, y: float, cfg: QuadConfig | None = None) -> QuadResult:
    """``P(X_margin <= y)`` with its quadrature error estimate.

    For ``y > 0`` the upper tail is integrated and subtracted from one.
    """
    cfg = cfg or DEFAULT_CONFIG
    _check_margin(margin)
    y = float(y)
    if math.isnan(y):
        raise DomainError("y is NaN")
    if y == -math.inf:
        return QuadResult(0.0, 0.0, 0)
    if y == math.inf:
        return QuadResult(1.0, 0.0, 0)

    def f(x):
        return marginal_pdf(p, margin, x)

    m = tail_power(p.eta)
    if y <= 0.0:
        r = integrate(f, -math.inf, y, cfg, tail_power=m)
        return QuadResult(min(max(r.value, 0.0), 1.0), r.error_estimate, r.evaluations)
    r = integrate(f, y, math.inf, cfg, tail_power=m)
    return QuadResult(min(max(1.0 - r.value, 0.0), 1.0), r.error_estimate, r.evaluations)


def marginal_cdf(p: SkewTParams, margin: int, y: float, cfg: QuadConfig | None = None) -> float:
    return marginal_cdf_result(p, margin, y, cfg).value


def marginal_quantile(
    p: SkewTParams,
    margin: int,
    u: float,
    cfg: QuadConfig | None = None,
    xtol: float = 1e-14,
) -> float:
    """Invert :func:`marginal_cdf` by bracketed root finding.

    Below u = 0.1 the bracket is seeded from the second-order tail expansion,
    otherwise from the symmetric t quantile, and widened geometrically until
    it straddles the root.
    """
    from .asymptotics import quantile_asymptotic

    _check_margin(margin)
    u = float(u)
    if not (0.0 < u < 1.0):
        raise DomainError(f"quantile requires 0 < u < 1, got {u}")
    cfg = cfg or DEFAULT_CONFIG

    def g(y):
        return marginal_cdf(p, margin, y, cfg) - u

    if u < 0.1:
        x0 = quantile_asymptotic(p, margin, u)
        if not (math.isfinite(x0) and x0 < 0.0):
            x0 = student_t_quantile(u, p.eta)
        lo, hi = 1.25 * x0, 0.8 * x0
    else:
        x0 = student_t_quantile(u, p.eta)
        w = max(1.0, abs(x0))
        lo, hi = x0 - 0.5 * w, x0 + 0.5 * w

    glo, ghi = g(lo), g(hi)
    for _ in range(200):
        if glo <= 0.0 <= ghi:
            break
        if glo > 0.0:
            width = hi - lo
            hi, ghi = lo, glo
            lo = lo - max(width, 1.0, abs(lo))
            glo = g(lo)
        else:
            width = hi - lo
            lo, glo = hi, ghi
            hi = hi + max(width, 1.0, abs(hi))
            ghi = g(hi)
    else:
        raise NumericalError(f"could not bracket the margin-{margin} quantile at u={u}")
    return find_root_monotone(g, lo, hi, xtol=xtol)


@dataclass
class SamplePairs:
    """Seeded draws of X; ``rows`` has shape (n, 2)."""

    rows: np.ndarray
    seed: int
    n: int = field(init=False)
    generator: str = GENERATOR

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=float).reshape(-1, 2)
        self.n = len(self.rows)

    @property
    def x1(self) -> np.ndarray:
        return self.rows[:, 0]

    @property
    def x2(self) -> np.ndarray:
        return self.rows[:, 1]

    def to_csv(self, path) -> None:
        """Write ``x1,x2`` rows with 17 significant digits."""
        with open(path, "w", newline="") as fh:
            fh.write("x1,x2\n")
            np.savetxt(fh, self.rows, fmt="%.17g", delimiter=",")


def read_samples_csv(path, seed: int = -1) -> SamplePairs:
    """Parse a ``x1,x2`` CSV; raises ``DomainError`` naming the first bad line."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["x1", "x2"]:
            raise DomainError(f"{path}: line 1: expected header 'x1,x2', got {header!r}")
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != 2:
                raise DomainError(f"{path}: line {lineno}: expected 2 fields, got {len(rec)}")
            try:
                a, b = float(rec[0]), float(rec[1])
            except ValueError as exc:
                raise DomainError(f"{path}: line {lineno}: {exc}") from None
            if not (math.isfinite(a) and math.isfinite(b)):
                raise DomainError(f"{path}: line {lineno}: non-finite value")
            rows.append((a, b))
    if not rows:
        raise DomainError(f"{path}: no data rows")
    return SamplePairs(np.array(rows), seed)


def _block_rng(seed: int, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(block,))
    return np.random.Generator(np.random.Philox(ss))


def _sample_block(p: SkewTParams, m: int, rng: np.random.Generator) -> np.ndarray:
    chol = np.linalg.cholesky(p.corr)
    theta = np.array([p.theta1, p.theta2])
    accepted = []
    have = 0
    rounds = 0
    while have < m:
        rounds += 1
        if rounds > _MAX_REJECTION_ROUNDS:
            raise SamplerError("skew-normal rejection loop exceeded its iteration cap")
        k = 2 * (m - have) + 16
        w = rng.standard_normal((k, 2)) @ chol.T
        u = rng.standard_normal(k)
        keep = w[u < w @ theta]
        accepted.append(keep)
        have += len(keep)
    z = np.concatenate(accepted)[:m]
    v = rng.gamma(shape=p.eta / 2.0, scale=2.0 / p.eta, size=m)
    return z / np.sqrt(v)[:, None]


def sample(p: SkewTParams, n: int, seed: int) -> SamplePairs:
    """Draw ``n`` independent rows of X.

    Z is drawn by selection: W ~ N2(0, R) is kept when an independent
    standard normal falls below theta'W. Rows are produced in fixed-size
    blocks, each with its own stream keyed by (seed, block index), so the
    output depends only on ``(seed, n)``.
    """
    n = int(n)
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    seed = int(seed)
    if not (0 <= seed < 2**64):
        raise DomainError(f"seed must be an unsigned 64-bit integer, got {seed}")
    blocks = []
    for b, start in enumerate(range(0, n, BLOCK_SIZE)):
        m = min(BLOCK_SIZE, n - start)
        blocks.append(_sample_block(p, m, _block_rng(seed, b)))
    return SamplePairs(np.concatenate(blocks), seed)
