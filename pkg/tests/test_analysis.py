import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from dispersive_burgers import analysis as an
from dispersive_burgers import solitons as so
from dispersive_burgers import spectral as sp


class TestFourierFit:
    def test_synthetic_recovery(self):
        g = sp.make_grid(1024, 1.0)
        fit = an.fit_fourier_asymptotics(an.synthetic_field(g, 0.1, 1.5))
        assert fit.delta == pytest.approx(0.1, abs=1e-8)
        assert fit.mu_plus_1 == pytest.approx(1.5, abs=1e-6)
        assert fit.offset == pytest.approx(0.0, abs=1e-5)
        assert fit.rms_residual < 1e-8

    def test_poisson_kernel(self):
        # (1 - r^2)/(1 - 2 r cos x + r^2) has coefficients r^|k|: delta = -ln r, mu + 1 = 0
        g = sp.make_grid(1024, 1.0)
        r = 0.9
        u = (1 - r**2) / (1 - 2 * r * np.cos(g.x) + r**2)
        fit = an.fit_fourier_asymptotics(sp.analyze(u, g))
        assert fit.delta == pytest.approx(-math.log(r), rel=1e-3)
        assert fit.mu_plus_1 == pytest.approx(0.0, abs=1e-2)

    def test_sech2(self):
        # transform of sech^2 is pi xi / sinh(pi xi / 2): delta = pi/2, mu + 1 = -1
        g = sp.make_grid(2048, 10.0)
        fit = an.fit_fourier_asymptotics(sp.analyze(sp.sech2(g.x), g))
        assert fit.delta == pytest.approx(math.pi / 2, rel=1e-3)
        assert fit.mu_plus_1 == pytest.approx(-1.0, abs=1e-2)

    def test_exponential_and_power_models(self):
        g = sp.make_grid(4096, 1.0)
        xi = np.abs(g.xi)
        for mp1, delta in ((0.0, 0.05), (2.0, 0.1)):
            c = np.zeros(g.n, dtype=complex)
            nz = xi > 0
            c[nz] = xi[nz] ** -mp1 * np.exp(-delta * xi[nz])
            c[g.n // 2] = 0
            fit = an.fit_fourier_asymptotics(sp.SpectralField.from_spectral(g, c))
            assert fit.delta == pytest.approx(delta, abs=1e-8)
            assert fit.mu_plus_1 == pytest.approx(mp1, abs=1e-6)

    def test_too_few_modes(self):
        g = sp.make_grid(64, 1.0)
        with pytest.raises(an.AnalysisError):
            an.fit_fourier_asymptotics(sp.analyze(np.cos(g.x), g))
        with pytest.raises(an.AnalysisError):
            an.fit_fourier_asymptotics(sp.analyze(np.zeros(64), g))

    def test_report_caveat(self):
        g = sp.make_grid(1024, 1.0)
        rep = an.fit_fourier_asymptotics(an.synthetic_field(g, 0.2, 1.0)).report()
        assert rep["caveat"] == an.MU_CAVEAT and set(rep) >= {"delta", "mu_plus_1", "window"}

    @settings(max_examples=25, deadline=None)
    @given(st.floats(0.03, 0.3), st.floats(-1.0, 3.0))
    def test_synthetic_property(self, delta, mp1):
        g = sp.make_grid(2048, 1.0)
        fit = an.fit_fourier_asymptotics(an.synthetic_field(g, delta, mp1))
        assert fit.delta == pytest.approx(delta, rel=1e-6, abs=1e-9)
        assert fit.mu_plus_1 == pytest.approx(mp1, abs=1e-5)

    def test_delta_crossing(self):
        t = np.linspace(0, 2, 201)
        assert an.singularity_time_from_delta(t, 1 - t) == pytest.approx(1 - 1e-6, abs=1e-12)
        with pytest.raises(an.AnalysisError):
            an.singularity_time_from_delta(t, 1 + t)


class TestNormFit:
    def test_exact_law(self):
        t = np.linspace(0, 1.9, 400)
        v = 3 * (2 - t) ** -0.5
        fit = an.fit_blowup_norms(t, v, (0, 1.9))
        assert fit.t_star == pytest.approx(2.0, rel=1e-6)
        assert fit.kappa1 == pytest.approx(-0.5, abs=1e-6)
        assert fit.kappa2 == pytest.approx(math.log(3), abs=1e-5)
        assert not fit.at_boundary

    @settings(max_examples=30, deadline=None)
    @given(st.floats(1.2, 5.0), st.floats(-4.0, -0.1), st.floats(-2.0, 2.0))
    def test_recovery_property(self, t_star, k1, k2):
        t = np.linspace(0, 1.0, 300)
        v = np.exp(k2) * (t_star - t) ** k1
        fit = an.fit_blowup_norms(t, v, (0, 1))
        assert fit.t_star == pytest.approx(t_star, rel=1e-4)
        assert fit.kappa1 == pytest.approx(k1, rel=1e-3)

    def test_window_and_checks(self):
        t = np.linspace(0, 1.9, 400)
        with pytest.raises(an.AnalysisError):
            an.fit_blowup_norms(t, 3 * (2 - t) ** -0.5, (0, 0.02))
        with pytest.raises(an.AnalysisError):
            an.fit_blowup_norms(t, (2 - t) ** 0.5, (0, 1.9))
        with pytest.raises(an.AnalysisError):
            an.fit_blowup_norms(t, -np.ones_like(t), (0, 1.9))

    def test_small_dip_tolerated(self):
        t = np.linspace(0, 1.9, 400)
        v = (2 - t) ** -0.5
        v[200] *= 0.99
        assert an.fit_blowup_norms(t, v, (0, 1.9)).kappa1 == pytest.approx(-0.5, abs=0.01)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(1.0, 5.0), st.floats(-4.0, -0.3), st.floats(-2.0, 2.0), st.integers(0, 2**32 - 1))
    def test_noisy_recovery_property(self, t_star, k1, k2, seed):
        rng = np.random.default_rng(seed)
        t = np.linspace(0, 0.99 * t_star, 400)
        v = np.exp(k2) * (t_star - t) ** k1 * (1 + 0.01 * rng.standard_normal(t.size))
        fit = an.fit_blowup_norms(t, v, (0, t[-1]))
        assert fit.t_star == pytest.approx(t_star, rel=5e-3)
        assert fit.kappa1 == pytest.approx(k1, rel=5e-2)

    def test_exact_inverse_law(self):
        t = np.linspace(1, 1.9, 200)
        fit = an.fit_blowup_norms(t, 1 / (2 - t), (1, 1.9))
        assert (fit.t_star, fit.kappa1, fit.kappa2) == pytest.approx((2.0, -1.0, 0.0), abs=1e-6)

    def test_linear_growth_hits_boundary(self):
        t = np.linspace(0, 1, 100)
        fit = an.fit_blowup_norms(t, 1 + t, (0, 1))
        assert fit.at_boundary


class TestScaling:
    def test_supercritical(self):
        p = an.predicted_exponents(0.5)
        assert p.exponent_grad_l2_sq == pytest.approx(2 / 1.5)
        assert p.exponent_sup == pytest.approx(0.5 / 1.5)

    def test_critical(self):
        p = an.predicted_exponents(0.5, "critical", gamma=1.0)
        assert p.exponent_grad_l2_sq == pytest.approx(4.0)
        assert p.exponent_sup == pytest.approx(1.0)
        with pytest.raises(an.AnalysisError):
            an.predicted_exponents(0.5, "critical", gamma=0.5)
        with pytest.raises(an.AnalysisError):
            an.predicted_exponents(1.0)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0.05, 0.95))
    def test_supercritical_relation(self, alpha):
        # self-similarity ties the rates: e_grad = (2 alpha + 1) / alpha * e_sup
        p = an.predicted_exponents(alpha)
        assert p.exponent_grad_l2_sq == pytest.approx((2 * alpha + 1) / alpha * p.exponent_sup)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0.05, 0.95), st.floats(1.0001, 10.0))
    def test_critical_relation(self, alpha, gamma_scale):
        gamma = gamma_scale / (1 + alpha)
        p = an.predicted_exponents(alpha, "critical", gamma=gamma)
        assert p.exponent_grad_l2_sq == pytest.approx((2 * alpha + 1) / alpha * p.exponent_sup)

    def test_quoted_exponents(self):
        p = an.predicted_exponents(0.45)
        assert (p.exponent_grad_l2_sq, p.exponent_sup) == pytest.approx((1.9 / 1.45, 0.45 / 1.45))
        assert round(p.exponent_grad_l2_sq, 2) == 1.31 and round(p.exponent_sup, 2) == 0.31
        p = an.predicted_exponents(0.2)
        assert (p.exponent_grad_l2_sq, p.exponent_sup) == pytest.approx((7 / 6, 1 / 6))

    def test_scaling_factor_synthetic(self):
        t = np.linspace(0, 0.9, 10)
        assert an.scaling_factor_L((1 - t) ** -2.0, 0.5) == pytest.approx((1 - t) ** 2, rel=1e-13)

    @settings(max_examples=20, deadline=None)
    @given(st.floats(0.2, 1.0), st.floats(0.1, 0.9), st.floats(-1.0, 1.0))
    def test_L_consistency(self, alpha, L, xm):
        # both routes to L agree on an exactly rescaled profile; sech^2 keeps the tails at roundoff
        g = sp.make_grid(2**12, 4.0)
        base = so.SolitonProfile(alpha, 1.0, g, sp.analyze(sp.sech2(g.x), g))
        u = L ** -alpha * sp.sech2((g.x - xm) / L)
        L_run = an.scaling_factor_L([sp.grad_l2_norm(base.values), sp.grad_l2_norm(sp.analyze(u, g))], alpha)[1]
        L_fit = an.blowup_profile_fit(sp.analyze(u, g), base, alpha)
        assert L_fit.L == pytest.approx(L_run, rel=1e-6)
        assert L_fit.misfit < 1e-8 * L ** -alpha

    def test_scaling_factor(self):
        L = an.scaling_factor_L([1.0, 2.0, 4.0], 0.5)
        assert L == pytest.approx([1.0, 0.5, 0.25])
        with pytest.raises(an.AnalysisError):
            an.scaling_factor_L([1.0, 0.0], 0.5)

    def test_rate_a(self):
        g = sp.make_grid(256, 1.0)
        y = g.x
        u = np.cos(y) + 0.4 * np.sin(2 * y)
        u3 = np.sin(y) - 3.2 * np.cos(2 * y)
        uy = -np.sin(y) + 0.8 * np.cos(2 * y)
        alpha = 0.5
        expect = np.sum(u**2 * u3) / ((2 * alpha + 1) * np.sum(uy**2))
        assert an.rescaling_rate_a(sp.analyze(u, g), alpha) == pytest.approx(expect, rel=1e-10)
        assert an.rescaling_rate_a(sp.analyze(np.sin(y), g), alpha) == pytest.approx(0.0, abs=1e-14)

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(-1, 1), min_size=6, max_size=6), st.floats(0.1, 0.9))
    def test_rate_a_even_and_reflection(self, c, alpha):
        g = sp.make_grid(128, 1.0)
        even = sum(ck * np.cos((k + 1) * g.x) for k, ck in enumerate(c[:3]))
        odd = sum(ck * np.sin((k + 1) * g.x) for k, ck in enumerate(c[3:]))
        u = 0.1 + even + odd
        if np.ptp(even) < 1e-3 or np.ptp(odd) < 1e-3:
            return
        assert abs(an.rescaling_rate_a(sp.analyze(even + 0.3, g), alpha)) < 1e-8
        a = an.rescaling_rate_a(sp.analyze(u, g), alpha)
        ar = an.rescaling_rate_a(sp.analyze(np.roll(u[::-1], 1), g), alpha)
        assert ar == pytest.approx(-a, rel=1e-9, abs=1e-12)

    def test_rate_a_sine_quadrature(self):
        # brute-force quadrature oracle: U^2 U_yyy for U = sin y
        g = sp.make_grid(64, 1.0)
        y = g.x
        expect = np.sum(np.sin(y) ** 2 * -np.cos(y)) * g.dx / (2 * np.sum(np.cos(y) ** 2) * g.dx)
        assert an.rescaling_rate_a(sp.analyze(np.sin(y), g), 0.5) == pytest.approx(expect, abs=1e-14)

    def test_refine_peak(self):
        g = sp.make_grid(64, 1.0)
        x, v = an.refine_peak(sp.analyze(2 * np.cos(g.x - 0.3), g))
        assert x == pytest.approx(0.3, abs=1e-12)
        assert v == pytest.approx(2.0, abs=1e-12)

    def test_peak_speed(self):
        g = sp.make_grid(128, 1.0)
        alpha, U0 = 0.4, 0.7
        U = sp.analyze(np.cos(g.x) + 0.3 * np.sin(2 * g.x), g)
        y = brentq(lambda s: -np.sin(s) + 0.6 * np.cos(2 * s), 0.0, 1.0)
        num = -np.sin(y) + 0.6 * 2**alpha * np.cos(2 * y)
        den = -np.cos(y) - 1.2 * np.sin(2 * y)
        assert an.peak_speed_v(U, alpha, U0) == pytest.approx(U0 + num / den, rel=1e-10)

    def test_peak_speed_degenerate(self):
        g = sp.make_grid(64, 1.0)
        with pytest.raises(an.AnalysisError):
            an.peak_speed_v(sp.analyze(np.ones(64), g), 0.5, 1.0)


class TestProfileFit:
    def test_rescaled_bo(self):
        base = so.analytic_profile(1.0, sp.make_grid(2**14, 100.0))
        g = sp.make_grid(2**12, 10.0)
        L, xm = 0.25, 1.5
        u = L**-1 * so.bo_soliton(1.0)((g.x - xm) / L)
        fit = an.blowup_profile_fit(sp.analyze(u, g), base, 1.0)
        assert fit.L == pytest.approx(L, rel=1e-4)
        assert fit.x_m == pytest.approx(xm, abs=1e-8)
        assert fit.misfit < 1e-2

    def test_no_dominant_peak(self):
        base = so.analytic_profile(1.0, sp.make_grid(2**10, 20.0))
        g = sp.make_grid(2**10, 10.0)
        u = so.bo_soliton(1.0)(g.x - 10) + so.bo_soliton(1.0)(g.x + 10)
        with pytest.raises(an.AnalysisError):
            an.blowup_profile_fit(sp.analyze(u, g), base, 1.0)


class TestRegression:
    def test_power_law(self):
        eps = np.array([0.01, 0.02, 0.05, 0.1])
        reg = an.loglog_regression(eps, 2 * eps**-1.5)
        assert reg.a == pytest.approx(-1.5)
        assert reg.b == pytest.approx(math.log10(2))
        assert reg.r == pytest.approx(-1.0)
        assert reg.sigma_a < 1e-10

    def test_inputs(self):
        with pytest.raises(an.AnalysisError):
            an.loglog_regression([0.1, 0.2], [1, 2])
        with pytest.raises(an.AnalysisError):
            an.loglog_regression([0.1, 0.2, -0.3], [1, 2, 3])

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(1e-3, 1.0), min_size=3, max_size=8, unique=True),
           st.floats(-3, 3), st.floats(-2, 2))
    def test_exact_recovery(self, eps, a, b):
        e = np.array(sorted(eps))
        if np.ptp(np.log10(e)) < 1e-3:
            return
        reg = an.loglog_regression(e, 10**b * e**a)
        assert reg.a == pytest.approx(a, abs=1e-6)
        assert reg.b == pytest.approx(b, abs=1e-6)
