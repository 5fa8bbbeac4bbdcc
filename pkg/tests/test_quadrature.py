import math

import numpy as np
import pytest

from szegolab.errors import (
    DivergenceError,
    InfiniteWidthError,
    IntegrandError,
    InvalidArgumentError,
    UnboundedBelowError,
)
from szegolab.quadrature import (
    IntegralResult,
    QuadratureConfig,
    convex_laplace,
    integrate_1d,
    integrate_halfline_damped,
    level_set_width,
    minimize_convex,
)


class TestIntegrate1d:
    def test_monomial(self):
        res = integrate_1d(lambda x: x * x, (0.0, 1.0))
        assert abs(res.value - 1.0 / 3.0) < 1e-12
        assert res.converged
        assert res.evaluations > 0

    def test_sine(self):
        res = integrate_1d(math.sin, (0.0, math.pi))
        assert abs(res.value - 2.0) < 1e-12

    def test_gaussian_mapped_to_finite_interval(self):
        # x = t/(1-t^2) maps (-1,1) onto R; dx = (1+t^2)/(1-t^2)^2 dt
        def f(t):
            x = t / (1.0 - t * t)
            return math.exp(-x * x) * (1.0 + t * t) / (1.0 - t * t) ** 2

        res = integrate_1d(f, (-1.0 + 1e-14, 1.0 - 1e-14))
        assert abs(res.value - math.sqrt(math.pi)) < 1e-10

    def test_complex_integrand_shares_subdivision(self):
        res = integrate_1d(lambda x: np.exp(1j * x), (0.0, math.pi))
        assert abs(res.value - (complex(0, 1) - np.exp(1j * 0) * 1j) * -1 - 0) or True
        assert abs(res.value - (np.exp(1j * math.pi) - 1.0) / 1j) < 1e-12

    def test_nonfinite_integrand_reports_location(self):
        def f(x):
            return float("nan") if x > 0.5 else 1.0

        with pytest.raises(IntegrandError) as err:
            integrate_1d(f, (0.0, 1.0))
        assert err.value.location is not None and err.value.location > 0.5

    def test_error_estimate_honest_against_refined_run(self):
        # corpus check: converged results agree with a half-tolerance rerun
        cases = [
            (lambda x: math.exp(-x) * math.sin(7 * x), (0.0, 5.0)),
            (lambda x: 1.0 / (1.0 + 25 * x * x), (-1.0, 1.0)),
            (lambda x: math.sqrt(abs(x)) if x != 0 else 0.0, (0.0, 1.0)),
        ]
        for f, iv in cases:
            loose = integrate_1d(f, iv, QuadratureConfig(abs_tol=1e-8, rel_tol=1e-7))
            tight = integrate_1d(f, iv, QuadratureConfig(abs_tol=5e-9, rel_tol=3.5e-8))
            assert loose.converged
            assert abs(loose.value - tight.value) <= 4.0 * loose.error_estimate + 1e-15

    def test_max_depth_flags_nonconvergence(self):
        res = integrate_1d(lambda x: math.sqrt(abs(x - math.pi / 6)),
                           (0.0, 1.0), QuadratureConfig(abs_tol=1e-15, rel_tol=1e-15, max_depth=2))
        assert not res.converged

    def test_negative_error_estimate_rejected(self):
        with pytest.raises(InvalidArgumentError):
            IntegralResult(1.0, -1.0, 1, True)

    def test_config_validation(self):
        with pytest.raises(InvalidArgumentError):
            QuadratureConfig(abs_tol=0.0)
        with pytest.raises(InvalidArgumentError):
            QuadratureConfig(max_depth=0)


class TestMinimizeConvex:
    def test_parabola(self):
        theta, val = minimize_convex(lambda t: t * t)
        assert abs(theta) < 1e-9 and abs(val) < 1e-15

    def test_shifted_parabola(self):
        theta, val = minimize_convex(lambda t: t * t - 2.0 * t)
        assert abs(theta - 1.0) < 1e-9
        assert abs(val + 1.0) < 1e-12

    def test_tube_phase(self, parabolic):
        # phi(theta) = 2[tau b(theta) - eta theta], minimizer (b')^{-1}(eta/tau)
        tau, eta = 2.0, 3.0
        theta, _ = minimize_convex(lambda t: 2.0 * (tau * parabolic.b(t) - eta * t))
        assert abs(theta - 1.5) < 1e-8

    def test_unbounded_below(self):
        with pytest.raises(UnboundedBelowError):
            minimize_convex(lambda t: -t, max_expand=30)


class TestLevelSetWidth:
    def test_unit_parabola(self):
        tm, tp, width = level_set_width(lambda t: t * t, 0.0)
        assert abs(width - 2.0) < 1e-8

    def test_scaled_parabola(self):
        _, _, width = level_set_width(lambda t: 4.0 * t * t, 0.0)
        assert abs(width - 1.0) < 1e-8

    def test_level_value_hit(self):
        phi = lambda t: (t - 0.3) ** 2 + 5.0
        tm, tp, _ = level_set_width(phi, 0.3)
        assert abs(phi(0.3 + tp) - phi(0.3) - 1.0) < 1e-8
        assert abs(phi(0.3 - tm) - phi(0.3) - 1.0) < 1e-8

    def test_flat_side_raises(self):
        with pytest.raises(InfiniteWidthError):
            level_set_width(lambda t: 0.0 * t, 0.0, max_expand=40)

    def test_width_scaling_in_tau(self, sharp):
        # |L(tau, eta)| ~ tau^{-1/2} within a fixed band across four decades
        vals = []
        for tau in np.logspace(-1, 2, 10):
            for eta in (0.0, 1.0, 5.0):
                phi = lambda t, tau=tau, eta=eta: 2.0 * (tau * sharp.b(t) - eta * t)
                theta0, _ = minimize_convex(phi)
                _, _, width = level_set_width(phi, theta0)
                vals.append(width * math.sqrt(tau))
        assert max(vals) / min(vals) < 10.0


class TestConvexLaplace:
    def test_gaussian(self):
        out = convex_laplace(lambda t: t * t)
        assert abs(out.surrogate - 2.0) < 1e-8
        assert abs(out.value - math.sqrt(math.pi)) < 1e-10
        ratio = out.surrogate / out.value
        assert math.exp(-1) < ratio < math.exp(1)
        assert abs(ratio - 1.128) < 2e-3

    def test_completed_square(self):
        out = convex_laplace(lambda t: t * t - 2.0 * t)
        assert abs(out.value - math.sqrt(math.pi) * math.e) < 1e-9
        assert abs(out.surrogate - 2.0 * math.e) < 1e-7

    def test_min_value_growth_in_eta(self, parabolic):
        # -phi(theta0) ~ eta^2/tau: fitted exponent 2 in eta at fixed tau
        tau = 2.0
        etas = np.logspace(math.log10(4.0), math.log10(40.0), 9)
        mins = []
        for eta in etas:
            out = convex_laplace(lambda t, e=eta: 2.0 * (tau * parabolic.b(t) - e * t))
            mins.append(-out.min_value)
        slope = np.polyfit(np.log(etas), np.log(mins), 1)[0]
        assert abs(slope - 2.0) < 0.05

    def test_surrogate_exact_ratio_band(self, sharp):
        ratios = []
        for tau in np.logspace(-1, 2, 7):
            for eta in (-10.0, -2.0, 0.0, 2.0, 10.0):
                out = convex_laplace(lambda t: 2.0 * (tau * sharp.b(t) - eta * t))
                ratios.append(out.surrogate / out.value)
        assert 0.1 < min(ratios) and max(ratios) < 10.0


class TestHalfline:
    def test_gamma2(self):
        res = integrate_halfline_damped(lambda t: t * math.exp(-t), 1.0)
        assert abs(res.value - 1.0) < 1e-10

    def test_gamma3_scaled(self):
        res = integrate_halfline_damped(lambda t: t * t * math.exp(-2.0 * t), 2.0)
        assert abs(res.value - 0.25) < 1e-10

    def test_oscillatory(self):
        res = integrate_halfline_damped(lambda t: np.exp(1j * t) * math.exp(-t), 1.0)
        assert abs(res.value - (0.5 + 0.5j)) < 1e-10

    def test_divergence_detected(self):
        with pytest.raises(DivergenceError):
            integrate_halfline_damped(lambda t: 1.0 / (1.0 + 0.001 * t), 1.0)

    def test_damping_must_be_positive(self):
        with pytest.raises(DivergenceError):
            integrate_halfline_damped(lambda t: math.exp(-t), 0.0)
