import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skewtail import (
    BracketError,
    DegenerateFitError,
    DomainError,
    QuadConfig,
    ToleranceNotReached,
    find_root_monotone,
    fit_line,
    integrate,
)
from skewtail.special import student_t_cdf, student_t_pdf

TIGHT = QuadConfig(abs_tol=1e-13, rel_tol=1e-12)


class TestQuadConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [{"abs_tol": 0}, {"rel_tol": -1}, {"max_depth": 0}, {"abs_tol": math.nan}, {"max_depth": 2.5}],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(DomainError):
            QuadConfig(**kwargs)


class TestIntegrate:
    def test_exp_half_line(self):
        r = integrate(np.exp, -math.inf, 0.0)
        assert r.value == pytest.approx(1.0, abs=1e-10)
        assert r.error_estimate <= 1e-10

    def test_cauchy_half(self):
        r = integrate(lambda x: student_t_pdf(x, 1.0), -math.inf, 0.0)
        assert r.value == pytest.approx(0.5, abs=1e-10)

    def test_nu3_tail(self):
        r = integrate(lambda x: student_t_pdf(x, 3.0), -math.inf, -math.sqrt(3), TIGHT)
        assert r.value == pytest.approx(0.25 - 1 / (2 * math.pi), rel=1e-12)

    def test_gaussian_whole_line(self):
        r = integrate(lambda x: np.exp(-x * x), -math.inf, math.inf)
        assert r.value == pytest.approx(math.sqrt(math.pi), abs=1e-10)

    def test_upper_half_line_shifted(self):
        r = integrate(lambda x: student_t_pdf(x, 2.0), 50.0, math.inf, TIGHT)
        assert r.value == pytest.approx(student_t_cdf(-50.0, 2.0), rel=1e-11)

    def test_heavy_tail_needs_power(self):
        # nu = 0.3: the plain rational map leaves an endpoint singularity
        r = integrate(lambda x: student_t_pdf(x, 0.3), -math.inf, -2.0, TIGHT, tail_power=2 / 0.3)
        assert r.value == pytest.approx(student_t_cdf(-2.0, 0.3), rel=1e-11)
        assert r.evaluations < 5000

    def test_error_bound_on_success(self):
        cfg = QuadConfig(abs_tol=1e-9, rel_tol=1e-7)
        r = integrate(lambda x: np.sin(x) ** 2, 0.0, 30.0, cfg)
        assert r.error_estimate <= cfg.target(r.value)
        assert r.value == pytest.approx(15.0 - math.sin(60.0) / 4, abs=1e-9)

    def test_endpoints_not_evaluated(self):
        seen = []

        def f(x):
            seen.append(np.asarray(x).copy())
            return 1.0 / np.sqrt(x)

        r = integrate(f, 0.0, 1.0, QuadConfig(abs_tol=1e-8, rel_tol=1e-8))
        assert r.value == pytest.approx(2.0, abs=1e-6)
        assert all(np.all(s > 0) for s in seen)

    def test_unreachable_tolerance(self):
        with pytest.raises(ToleranceNotReached) as info:
            integrate(lambda x: np.exp(-x * x), -math.inf, math.inf, QuadConfig(abs_tol=1e-300, rel_tol=1e-17))
        assert info.value.result is not None
        assert info.value.result.value == pytest.approx(math.sqrt(math.pi), rel=1e-13)

    def test_bad_interval(self):
        with pytest.raises(DomainError):
            integrate(np.exp, 1.0, 1.0)
        with pytest.raises(DomainError):
            integrate(np.exp, 0.0, 1.0, tail_power=0.5)

    def test_non_finite_integrand(self):
        with pytest.raises(DomainError):
            integrate(lambda x: np.full_like(x, np.nan), 0.0, 1.0)

    @settings(max_examples=40, deadline=None)
    @given(
        a=st.floats(-20, 20),
        w1=st.floats(0.01, 10),
        w2=st.floats(0.01, 10),
    )
    def test_additivity(self, a, w1, w2):
        b, c = a + w1, a + w1 + w2

        def f(x):
            return np.cos(x) * np.exp(-0.05 * x * x) + 1.0 / (1.0 + x * x)

        whole = integrate(f, a, c).value
        parts = integrate(f, a, b).value + integrate(f, b, c).value
        assert whole == pytest.approx(parts, abs=3e-10, rel=3e-8)

    @settings(max_examples=30, deadline=None)
    @given(alpha=st.floats(-5, 5), beta=st.floats(-5, 5))
    def test_linearity(self, alpha, beta):
        def f(x):
            return student_t_pdf(x, 2.0)

        def g(x):
            e = np.exp(-np.abs(x))
            return e / (1 + e) ** 2

        lhs = integrate(lambda x: alpha * f(x) + beta * g(x), -math.inf, 1.5).value
        rhs = alpha * integrate(f, -math.inf, 1.5).value + beta * integrate(g, -math.inf, 1.5).value
        assert lhs == pytest.approx(rhs, abs=1e-9)


class TestRoot:
    def test_linear(self):
        assert find_root_monotone(lambda x: x - 2, 0.0, 5.0) == pytest.approx(2.0, abs=1e-12)

    def test_cauchy(self):
        assert find_root_monotone(lambda x: student_t_cdf(x, 1.0) - 0.75, 0.0, 10.0) == pytest.approx(1.0, abs=1e-12)

    def test_cube_root(self):
        assert find_root_monotone(lambda x: x**3 - 2, 1.0, 2.0) == pytest.approx(2 ** (1 / 3), abs=1e-12)

    def test_decreasing(self):
        assert find_root_monotone(lambda x: 1 - x, -3.0, 4.0) == pytest.approx(1.0, abs=1e-12)

    def test_exact_endpoint(self):
        assert find_root_monotone(lambda x: x, 0.0, 1.0) == 0.0

    def test_no_sign_change(self):
        with pytest.raises(BracketError):
            find_root_monotone(lambda x: x * x + 1, -1.0, 1.0)


class TestFitLine:
    def test_exact(self):
        fit = fit_line([0, 1, 2], [1, 3, 5])
        assert fit.slope == pytest.approx(2.0)
        assert fit.intercept == pytest.approx(1.0)
        assert fit.r_squared == pytest.approx(1.0)

    def test_flat(self):
        fit = fit_line([0, 1, 2], [0, 0, 0])
        assert fit.slope == 0.0 and fit.intercept == 0.0
        assert 0.0 <= fit.r_squared <= 1.0

    def test_noisy_recovery(self):
        rng = np.random.default_rng(11)
        xs = np.linspace(-10, 0, 30)
        ys = -0.5 * xs + 2.0 + rng.uniform(-1e-3, 1e-3, xs.size)
        fit = fit_line(xs, ys)
        assert abs(fit.slope + 0.5) < 1e-2
        assert fit.residual_max <= 2e-3

    def test_degenerate(self):
        with pytest.raises(DegenerateFitError):
            fit_line([0, 1], [0, 0])
        with pytest.raises(DegenerateFitError):
            fit_line([1, 1, 1], [0, 1, 2])


class TestFarEndpoints:
    @pytest.mark.parametrize("hi", [2.0, 1e3, 3e5, 1e12])
    def test_half_line_past_origin(self, hi):
        r = integrate(lambda x: student_t_pdf(x, 3.0), -math.inf, hi, TIGHT)
        assert r.value == pytest.approx(student_t_cdf(hi, 3.0), abs=1e-12)

    @pytest.mark.parametrize("lo", [-2.0, -1e3, -3e5])
    def test_mirror(self, lo):
        r = integrate(lambda x: np.exp(-x * x), lo, math.inf, TIGHT)
        assert r.value == pytest.approx(0.5 * math.sqrt(math.pi) * math.erfc(lo), rel=1e-12)
