import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dispersive_burgers import solitons as so
from dispersive_burgers import spectral as sp


@pytest.fixture(scope="module")
def bo_grid():
    return sp.make_grid(2**14, 100.0)


@pytest.fixture(scope="module")
def q09():
    """c = 1 profile at alpha = 0.9 on a modest grid."""
    return so.continue_in_alpha(0.9, grid=sp.make_grid(2**13, 100.0))


class TestClosedForms:
    def test_bo_values(self):
        q = so.bo_soliton(2.0)
        assert q(0.0) == 8.0
        assert q(0.5) == pytest.approx(4.0)

    def test_bo_residual_small(self, bo_grid):
        # only the periodisation of the 1/x^2 tail spoils the exact residual
        Q = sp.analyze(so.bo_soliton(1.0)(bo_grid.x), bo_grid)
        r = so.soliton_residual(Q, sp.symbol_fractional(1.0), 1.0)
        assert np.max(np.abs(r.physical)) < 1e-4

    def test_fbbm_soliton_travels(self):
        f = so.fbbm_bo_soliton(3.0)
        x = np.linspace(-5, 5, 11)
        assert np.allclose(f(x + 3.0 * 0.7, 0.7), f(x, 0.0))
        assert f(0.0) == pytest.approx(8.0)

    def test_domains(self):
        for fn, c in ((so.bo_soliton, 0.0), (so.fbbm_bo_soliton, 1.0), (so.kdv_soliton, -0.5)):
            with pytest.raises(ValueError):
                fn(c)

    def test_kdv_long_wave_equation(self):
        # (1 + c) Q + Q''/6 - Q^2/2 = 0 is the long-wave limit of the Whitham profile equation
        g = sp.make_grid(1024, 10)
        c = -1.3
        Q = sp.analyze(so.kdv_soliton(c)(g.x), g)
        q2 = sp.SpectralField.from_spectral(g, -(g.xi**2) * Q.spectral).physical
        res = (1 + c) * Q.physical + q2 / 6 - Q.physical**2 / 2
        assert np.max(np.abs(res)) < 1e-10
        assert Q.physical.max() < 0


class TestNewton:
    def test_recovers_bo(self, bo_grid):
        init = sp.analyze(so.bo_soliton(1.0)(bo_grid.x), bo_grid)
        prof = so.newton_gmres_soliton(init, sp.symbol_fractional(1.0), 1.0)
        assert prof.residual_norm < 1e-8
        assert len(prof.history) <= 7
        assert np.max(np.abs(prof.values.physical - init.physical)) < 1e-3
        assert prof.alpha == 1.0

    def test_from_perturbed_guess(self):
        g = sp.make_grid(2**12, 50.0)
        init = sp.analyze(1.2 * so.bo_soliton(1.0)(1.1 * g.x), g)
        prof = so.newton_gmres_soliton(init, sp.symbol_fractional(1.0), 1.0)
        assert prof.residual_norm < 1e-8
        assert prof.peak == pytest.approx(4.0, abs=1e-2)

    def test_zero_initial(self):
        g = sp.make_grid(64, 1.0)
        with pytest.raises(so.ConvergenceToZero):
            so.newton_gmres_soliton(sp.analyze(np.zeros(64), g), sp.symbol_fractional(1.0), 1.0)

    def test_collapse_to_zero(self):
        g = sp.make_grid(256, 10.0)
        init = sp.analyze(1e-3 * np.exp(-g.x**2), g)
        with pytest.raises(so.SolitonError):
            so.newton_gmres_soliton(init, sp.symbol_fractional(1.0), 1.0)

    def test_iteration_budget(self):
        g = sp.make_grid(2**12, 50.0)
        init = sp.analyze(so.bo_soliton(1.0)(0.5 * g.x), g)
        with pytest.raises(so.NewtonStall):
            so.newton_gmres_soliton(init, sp.symbol_fractional(1.0), 1.0, max_iter=1)


class TestContinuation:
    def test_path(self):
        assert so.alpha_path(1.0) == [1.0]
        p = so.alpha_path(0.55)
        assert p[:5] == [1.0, 0.9, 0.8, 0.7, 0.6]
        assert p[-1] == 0.55 and len(p) == 10
        with pytest.raises(ValueError):
            so.alpha_path(0.3)

    def test_profile_properties(self, q09):
        q = q09.values.physical
        assert q09.alpha == pytest.approx(0.9)
        assert q09.residual_norm < 1e-8
        assert np.all(q > -1e-8)
        assert np.argmax(q) == q09.grid.n // 2
        assert np.allclose(q, np.roll(q[::-1], 1), atol=1e-10)

    def test_grids(self):
        assert so.default_soliton_grid(0.7).n == 2**14
        assert so.default_soliton_grid(0.45).n == 2**18
        assert so.default_soliton_grid(0.45, "desk").n == 2**16

    def test_callback_sees_every_station(self):
        seen = []
        so.continue_in_alpha(0.8, grid=sp.make_grid(2**12, 100.0), callback=lambda p: seen.append(p.alpha))
        assert seen == pytest.approx([1.0 - 0.1, 0.8])

    def test_family_monotone(self):
        rows = so.soliton_family_scan([1.0, 0.9, 0.8], grid=sp.make_grid(2**12, 100.0))
        assert [r[0] for r in rows] == pytest.approx([0.8, 0.9, 1.0])
        mono = so.family_is_monotone(rows)
        assert mono["mass_increasing"] and mono["energy_decreasing"]
        # BO: int Q^2 = 8 pi on the line
        assert rows[-1][2] == pytest.approx(8 * math.pi, rel=1e-3)

    def test_bo_energy(self):
        # int Q^3 = 24 pi and, from the profile equation, int Q |D| Q = int Q^3/2 - Q^2 = 4 pi
        g = sp.make_grid(2**14, 100.0)
        prof = so.analytic_profile(1.0, g)
        assert prof.energy() == pytest.approx(2 * math.pi - 4 * math.pi, rel=2e-3)


class TestRescaling:
    @settings(max_examples=15, deadline=None)
    @given(st.floats(0.5, 3.0))
    def test_bo_rescaling(self, c):
        g = sp.make_grid(2**12, 50.0)
        base = so.analytic_profile(1.0, g)
        got = so.rescale_soliton(base, c)
        assert np.max(np.abs(got.physical - so.bo_soliton(c)(g.x))) < 2e-3 * c

    def test_rescaled_residual(self, q09):
        c = 1.7
        Qc = so.rescale_soliton(q09, c)
        r = so.soliton_residual(Qc, sp.symbol_fractional(0.9), c)
        assert np.max(np.abs(r.physical)) < 1e-3 * c**2
        assert Qc.physical.max() == pytest.approx(c * q09.peak, rel=1e-6)

    def test_shift(self):
        g = sp.make_grid(2**12, 50.0)
        base = so.analytic_profile(1.0, g)
        got = so.rescale_soliton(base, 1.0, x0=10.0)
        assert np.max(np.abs(got.physical - so.bo_soliton(1.0)(g.x - 10.0))) < 2e-3

    def test_profile_tail(self):
        g = sp.make_grid(2**10, 10.0)
        base = so.analytic_profile(1.0, g)
        far = so.profile_at(base, np.array([100.0, -1000.0]))
        assert np.allclose(far, 4 / np.array([100.0, 1000.0]) ** 2, rtol=0.05)


class TestHumps:
    def test_two_bo_solitons(self):
        g = sp.make_grid(2**13, 40.0)
        base = so.analytic_profile(1.0, sp.make_grid(2**13, 100.0))
        fam = so.SolitonFamily(base)
        u = fam.profile(1.0, g.x, -40.0) + fam.profile(2.5, g.x, 40.0)
        fits = so.fit_solitons_to_humps(sp.analyze(u, g), fam)
        assert len(fits) == 2
        assert fits[0].location == pytest.approx(-40.0, abs=1e-2)
        assert fits[1].c_fit == pytest.approx(2.5, rel=2e-2)
        assert all(f.misfit < 0.1 for f in fits)

    def test_fbbm_speed_map(self):
        g = sp.make_grid(2**13, 100.0)
        fam = so.SolitonFamily(so.analytic_profile(1.0, g), kind="fbbm")
        c = 2.5
        exact = so.fbbm_bo_soliton(c)(g.x)
        assert np.max(np.abs(fam.profile(c, g.x) - exact)) < 1e-2
        assert fam.speed_for_peak(exact.max()) == pytest.approx(c, rel=1e-3)

    def test_no_humps(self):
        g = sp.make_grid(64, 1.0)
        fam = so.SolitonFamily(so.analytic_profile(1.0, g))
        with pytest.raises(so.NoHumpsFound):
            so.fit_solitons_to_humps(sp.analyze(-np.ones(64), g), fam)


def test_profile_io(tmp_path, q09):
    so.write_profile(tmp_path / "p.csv", tmp_path / "p.meta", q09)
    back = so.read_profile(tmp_path / "p.csv", tmp_path / "p.meta")
    assert back.alpha == q09.alpha and back.c == q09.c
    assert np.array_equal(back.values.physical, q09.values.physical)
    assert (tmp_path / "p.csv").read_text().splitlines()[0] == "x,Q"
