import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skewtail import (
    DomainError,
    QuadConfig,
    SamplePairs,
    SkewTParams,
    joint_pdf,
    marginal_cdf,
    marginal_pdf,
    marginal_quantile,
    marginal_skewness,
    read_samples_csv,
    sample,
)
from skewtail.model import BLOCK_SIZE, GENERATOR
from skewtail.numerics import integrate
from skewtail.special import log_gamma, student_t_cdf, student_t_pdf

from conftest import SKEW

TIGHT = QuadConfig(abs_tol=1e-13, rel_tol=1e-12)


def ks_distance(sorted_x, cdf_values):
    n = len(sorted_x)
    i = np.arange(1, n + 1)
    return max(np.max(i / n - cdf_values), np.max(cdf_values - (i - 1) / n))


def cdf_at_sorted(p, margin, xs, order=4):
    """Margin cdf at sorted points: exact anchor at xs[0], then Gauss-Legendre
    on every gap, accumulated. Independent of the adaptive integrator."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    a, b = xs[:-1], xs[1:]
    half = 0.5 * (b - a)
    pts = (0.5 * (a + b))[:, None] + half[:, None] * nodes[None, :]
    pieces = (marginal_pdf(p, margin, pts.ravel()).reshape(pts.shape) * weights).sum(axis=1) * half
    out = np.empty_like(xs)
    out[0] = marginal_cdf(p, margin, float(xs[0]), TIGHT)
    out[1:] = out[0] + np.cumsum(pieces)
    return out


class TestParams:
    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(eta=0, rho=0),
            dict(eta=-1, rho=0),
            dict(eta=2, rho=1),
            dict(eta=2, rho=-1.5),
            dict(eta=math.inf, rho=0),
            dict(eta=2, rho=0, theta1=math.nan),
            dict(eta="a", rho=0),
        ],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(DomainError):
            SkewTParams(**kwargs)

    def test_corr(self):
        r = SkewTParams(2, 0.3).corr
        assert np.array_equal(r, [[1, 0.3], [0.3, 1]])
        assert np.all(np.linalg.eigvalsh(r) > 0)


class TestMarginalSkewness:
    def test_symmetric(self):
        assert marginal_skewness(SkewTParams(4, 0.5)) == (0.0, 0.0)

    def test_substitution(self):
        assert marginal_skewness(SkewTParams(4, 0.0, 1, 0)) == (1.0, 0.0)

    def test_equiskew(self):
        l1, l2 = marginal_skewness(SkewTParams(4, 0.5, 1, 1))
        assert l1 == l2 == pytest.approx(1.5 / math.sqrt(1.75), rel=1e-15)

    @settings(max_examples=100, deadline=None)
    @given(
        rho=st.floats(-0.99, 0.99),
        t1=st.floats(-5, 5),
        t2=st.floats(-5, 5),
    )
    def test_formula_and_swap(self, rho, t1, t2):
        p = SkewTParams(3, rho, t1, t2)
        l1, l2 = marginal_skewness(p)
        assert l1 == pytest.approx((t1 + rho * t2) / math.sqrt(1 + t2 * t2 * (1 - rho * rho)), abs=1e-14)
        assert l2 == pytest.approx((t2 + rho * t1) / math.sqrt(1 + t1 * t1 * (1 - rho * rho)), abs=1e-14)
        assert marginal_skewness(p.swapped()) == (l2, l1)
        if t1 == t2:
            assert l1 == l2


class TestJointPdf:
    def test_symmetric_origin(self):
        for eta, rho in [(1, 0), (3, 0.4), (7.5, -0.8)]:
            p = SkewTParams(eta, rho)
            expected = math.exp(log_gamma((eta + 2) / 2) - log_gamma(eta / 2)) / (math.pi * eta * math.sqrt(1 - rho**2))
            assert joint_pdf(p, 0.0, 0.0) == pytest.approx(expected, rel=1e-14)

    def test_reflection(self):
        p = SkewTParams(3, 0.4, 1, -0.5)
        x1, x2 = np.meshgrid(np.linspace(-4, 4, 9), np.linspace(-3, 5, 9))
        assert np.allclose(joint_pdf(p.negated(), -x1, -x2), joint_pdf(p, x1, x2), rtol=1e-14, atol=0)

    def test_normalization(self):
        def inner(x1):
            return integrate(lambda x2: joint_pdf(SKEW, x1, x2), -math.inf, math.inf).value

        total = integrate(lambda xs: np.array([inner(x) for x in xs]), -math.inf, math.inf, tail_power=1.0)
        assert total.value == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize(
        "p",
        [SkewTParams(3, 0.4, 1, -0.5), SkewTParams(1.5, -0.6, -2, 0.7), SkewTParams(6, 0.9, 0.3, 3)],
    )
    def test_marginal_consistency(self, p):
        for x1 in (-3.0, -1.0, 0.0, 1.0, 3.0):
            r = integrate(lambda x2: joint_pdf(p, x1, x2), -math.inf, math.inf, TIGHT)
            assert r.value == pytest.approx(marginal_pdf(p, 1, x1), abs=1e-7)


class TestMarginal:
    def test_pdf_at_zero(self):
        for p in (SKEW, SkewTParams(2, -0.3, 4, 1)):
            for m in (1, 2):
                assert marginal_pdf(p, m, 0.0) == pytest.approx(student_t_pdf(0.0, p.eta), rel=1e-15)

    def test_symmetric_is_student(self):
        p = SkewTParams(2.5, 0.7)
        xs = np.linspace(-30, 30, 61)
        assert np.allclose(marginal_pdf(p, 1, xs), student_t_pdf(xs, 2.5), rtol=1e-14, atol=0)

    def test_sign_flip(self):
        xs = np.linspace(-10, 10, 21)
        for m in (1, 2):
            assert np.allclose(marginal_pdf(SKEW.negated(), m, xs), marginal_pdf(SKEW, m, -xs), rtol=1e-14, atol=0)

    def test_pdf_matches_cdf_difference(self, oracles):
        p = SkewTParams(2, 0.3, 2, 1)
        h = 1e-3
        fd = (marginal_cdf(p, 1, -5 + h, TIGHT) - marginal_cdf(p, 1, -5 - h, TIGHT)) / (2 * h)
        assert fd == pytest.approx(marginal_pdf(p, 1, -5.0), rel=1e-6)
        assert marginal_pdf(p, 1, -5.0) == pytest.approx(float(oracles["margin_pdf_2_rho03_th21_at_m5"]), rel=1e-13)

    def test_cdf_centre_and_limit(self):
        assert marginal_cdf(SkewTParams(3, 0.2), 1, 0.0) == pytest.approx(0.5, abs=1e-10)
        assert marginal_cdf(SKEW, 1, 1e12) == pytest.approx(1.0, abs=1e-10)

    def test_cauchy_closed_form(self):
        p = SkewTParams(1, 0.0)
        assert marginal_cdf(p, 1, -10.0) == pytest.approx(0.5 + math.atan(-10) / math.pi, abs=1e-10)

    def test_cdf_against_mpmath(self, oracles):
        for y, val in oracles["margin_cdf_skew"].items():
            assert marginal_cdf(SKEW, 1, float(y), TIGHT) == pytest.approx(float(val), rel=1e-10), y

    def test_heavy_tail_eta_below_one(self):
        p = SkewTParams(0.4, 0.0)
        assert marginal_cdf(p, 1, -7.0, TIGHT) == pytest.approx(student_t_cdf(-7.0, 0.4), rel=1e-10)

    def test_quantile_centre_and_cauchy(self):
        assert marginal_quantile(SkewTParams(2.0, 0.1), 2, 0.5) == pytest.approx(0.0, abs=1e-12)
        assert marginal_quantile(SkewTParams(1, 0.0), 1, 0.01) == pytest.approx(-1 / math.tan(0.01 * math.pi), rel=1e-10)

    @pytest.mark.parametrize("m", [1, 2])
    def test_quantile_round_trip(self, m):
        for u in (1e-4, 1e-2, 0.3, 0.9):
            q = marginal_quantile(SKEW, m, u)
            assert marginal_cdf(SKEW, m, q, TIGHT) == pytest.approx(u, abs=1e-9)

    @pytest.mark.parametrize("bad", [0.0, 1.0, 1.5, math.nan])
    def test_quantile_rejects(self, bad):
        with pytest.raises(DomainError):
            marginal_quantile(SKEW, 1, bad)

    def test_margin_validation(self):
        with pytest.raises(DomainError):
            marginal_pdf(SKEW, 3, 0.0)


class TestSampler:
    def test_deterministic(self):
        a = sample(SKEW, 1000, 42)
        b = sample(SKEW, 1000, 42)
        assert np.array_equal(a.rows, b.rows)
        assert a.n == 1000 and a.generator == GENERATOR
        assert not np.array_equal(a.rows, sample(SKEW, 1000, 43).rows)

    def test_prefix_stable_across_blocks(self):
        # block b depends only on (seed, b), so a longer draw extends a shorter one
        short = sample(SKEW, BLOCK_SIZE + 10, 9)
        long = sample(SKEW, 2 * BLOCK_SIZE + 5, 9)
        assert np.array_equal(short.rows[:BLOCK_SIZE], long.rows[:BLOCK_SIZE])

    @pytest.mark.parametrize("n, seed", [(0, 1), (-3, 1), (10, -1), (10, 2**64)])
    def test_rejects(self, n, seed):
        with pytest.raises(DomainError):
            sample(SKEW, n, seed)

    def test_symmetric_median(self):
        n = 10**6
        s = sample(SkewTParams(3, 0.4), n, 5)
        assert abs(np.mean(s.x1 <= 0) - 0.5) <= 4 * math.sqrt(0.25 / n)

    def test_gamma_mixing_ks(self):
        n = 10**6
        s = sample(SkewTParams(4, -0.3), n, 6)
        x = np.sort(s.x1)
        assert ks_distance(x, student_t_cdf(x, 4.0)) < 1.95 / math.sqrt(n)

    def test_skew_margin_ks(self, skew_sample):
        n = skew_sample.n
        for m, col in ((1, skew_sample.x1), (2, skew_sample.x2)):
            x = np.sort(col)
            cdf = cdf_at_sorted(SKEW, m, x)
            # the cumulative oracle must land on the direct value at the far end
            assert cdf[-1] == pytest.approx(marginal_cdf(SKEW, m, float(x[-1]), TIGHT), abs=1e-8)
            assert ks_distance(x, cdf) < 1.95 / math.sqrt(n)


class TestCsv:
    def test_round_trip(self, tmp_path):
        s = sample(SKEW, 500, 3)
        path = tmp_path / "s.csv"
        s.to_csv(path)
        text = path.read_text()
        assert text.startswith("x1,x2\n")
        back = read_samples_csv(path)
        assert np.array_equal(back.rows, s.rows)
        back.to_csv(tmp_path / "t.csv")
        assert (tmp_path / "t.csv").read_text() == text

    @pytest.mark.parametrize(
        "body, line",
        [
            ("x,y\n1,2\n", 1),
            ("x1,x2\n1,2\n3\n", 3),
            ("x1,x2\n1,2\n3,zz\n", 3),
            ("x1,x2\n1,nan\n", 2),
        ],
    )
    def test_bad_files(self, tmp_path, body, line):
        path = tmp_path / "bad.csv"
        path.write_text(body)
        with pytest.raises(DomainError, match=f"line {line}"):
            read_samples_csv(path)

    def test_empty(self, tmp_path):
        path = tmp_path / "e.csv"
        path.write_text("x1,x2\n")
        with pytest.raises(DomainError):
            read_samples_csv(path)
