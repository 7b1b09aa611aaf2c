import math
import warnings
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smeared_space.errors import AccuracyWarning, DomainError, ValidityWarning
from smeared_space.grid import Grid, gaussian_amplitude
from smeared_space.scales import PhysicalConstants, SmearingParameters, derive_scales
from smeared_space.smearing import make_kernel, smear
from smeared_space.uncertainty import (
    commutator_expectation,
    egup_product_bound,
    eup_bound,
    eup_coefficient,
    gup_bound,
    gup_coefficient,
    optimal_widths,
    slack_argmin,
    sweep_products,
    symmetry_transform,
    unified_product,
    unified_relation,
)

from conftest import random_smooth_state

PARAMS = SmearingParameters(hbar=1.0, beta=0.1, sigma_g=0.5)


def widths(sigma_g, sigma_g_tilde, hbar=1.0):
    return SimpleNamespace(hbar=hbar, sigma_g=sigma_g, sigma_g_tilde=sigma_g_tilde)


@pytest.fixture(scope="module")
def physical():
    c = PhysicalConstants.cgs()
    return c, derive_scales(c)


class TestUnifiedRelation:
    def test_optimal_gaussian_saturates(self, grid512):
        k = make_kernel("gaussian", 0.5, 0.1, grid512)
        rep = unified_relation(smear(gaussian_amplitude(grid512, 0.0, math.sqrt(2.5)), k))
        assert rep.product == pytest.approx(0.55, rel=1e-6)
        assert rep.bound == pytest.approx(0.55)
        assert abs(rep.slack) < 1e-6

    def test_matches_closed_form_product(self, grid512):
        k = make_kernel("gaussian", 0.5, 0.1, grid512)
        for dx in (0.7, 1.0, 2.0):
            rep = unified_relation(smear(gaussian_amplitude(grid512, 0.0, dx), k))
            assert rep.product == pytest.approx(unified_product(dx, 0.5 / dx, PARAMS), rel=1e-6)

    def test_squeezed_state_has_slack(self, grid512):
        k = make_kernel("gaussian", 0.5, 0.1, grid512)
        rep = unified_relation(smear(gaussian_amplitude(grid512, 0.0, 0.1 * math.sqrt(2.5)), k))
        assert rep.slack > 0.01

    def test_canonical_limit(self):
        u = Grid(2048, 32.0)
        d = u.spacing
        k = make_kernel("gaussian", 4 * d, 1e-4, Grid(64, 64 * d))
        rep = unified_relation(smear(gaussian_amplitude(u, 0.0, 146 * d), k))
        assert rep.product == pytest.approx(0.5, abs=1e-3)

    def test_random_states_respect_bound(self, small_grids, rng):
        u, v = small_grids
        for kind in ("gaussian", "exponential"):
            k = make_kernel(kind, 0.5, 0.1, v)
            for _ in range(20):
                rep = unified_relation(smear(random_smooth_state(u, rng), k))
                assert rep.slack >= -1e-6 * rep.bound


class TestCommutator:
    def test_gaussian_product(self, grid512):
        k = make_kernel("gaussian", 0.5, 0.1, grid512)
        val = commutator_expectation(smear(gaussian_amplitude(grid512, 0.3, 1.2, k0=0.4), k))
        assert val.real == pytest.approx(0.0, abs=1e-6)
        assert val.imag == pytest.approx(1.1, rel=1e-6)

    def test_vanishing_beta(self, grid512):
        k = make_kernel("gaussian", 0.5, 1e-14, grid512)
        val = commutator_expectation(smear(gaussian_amplitude(grid512, 0.0, 1.0), k))
        assert val.imag == pytest.approx(1.0, rel=1e-6)

    def test_state_independent(self, small_grids, rng):
        u, v = small_grids
        k = make_kernel("gaussian", 0.5, 0.1, v)
        vals = [commutator_expectation(smear(random_smooth_state(u, rng), k)) for _ in range(20)]
        spread = max(abs(a - b) for a in vals for b in vals)
        assert spread < 1e-6
        assert np.mean(vals).imag == pytest.approx(1.1, rel=1e-6)

    def test_rough_state_warns(self):
        g = Grid(64, 8.0)
        psi = gaussian_amplitude(g, 0.0, 0.05)
        k = make_kernel("gaussian", 0.5, 0.1, g)
        with pytest.warns(AccuracyWarning):
            commutator_expectation(smear(psi, k))


class TestOptimalWidths:
    def test_dimensionless_example(self):
        dx, dp = optimal_widths(1.0, 0.5, 0.1)
        assert dx == pytest.approx(math.sqrt(2.5), rel=1e-15)
        assert dp == pytest.approx(math.sqrt(0.1), rel=1e-15)

    def test_symmetric_widths(self):
        dx, dp = optimal_widths(2.0, 0.3, 0.3)
        assert dx == pytest.approx(1.0) and dp == pytest.approx(1.0)

    def test_physical_values(self, physical):
        c, s = physical
        dx, dp = optimal_widths(s.hbar, s.sigma_g, s.sigma_g_tilde)
        assert dx == pytest.approx(s.l_Lambda, rel=1e-12)
        assert dp == pytest.approx(0.5 * s.m_Lambda * c.c, rel=1e-12)

    @given(
        st.floats(1e-3, 1e3),
        st.floats(1e-3, 1e3),
        st.floats(1e-3, 1e3),
    )
    def test_product_is_half_hbar(self, hbar, s, t):
        dx, dp = optimal_widths(hbar, s, t)
        assert dx * dp == pytest.approx(0.5 * hbar, rel=1e-12)

    def test_rejects_nonpositive(self):
        with pytest.raises(DomainError):
            optimal_widths(1.0, 0.0, 0.1)


class TestGupEup:
    def test_physical_coefficients(self, physical):
        c, s = physical
        assert gup_coefficient(s) == pytest.approx(2 * c.G / c.c**3, rel=1e-12)
        assert eup_coefficient(s) == pytest.approx(c.hbar * c.Lambda / 12, rel=1e-12)

    def test_physical_gup_form(self, physical):
        c, s = physical
        dp = 1e-10
        b = gup_bound(dp, s)
        assert b.valid
        assert b.value == pytest.approx(c.hbar / (2 * dp) + 2 * c.G / c.c**3 * dp, rel=1e-12)

    def test_physical_eup_form(self, physical):
        c, s = physical
        dx = 1.0
        b = eup_bound(dx, s)
        assert b.valid
        assert b.value == pytest.approx(c.hbar / (2 * dx) + c.hbar * c.Lambda / 12 * dx, rel=1e-12)

    def test_eup_dimensionless_example(self):
        # 2 dx sigma~ / hbar = 0.2 lies outside the first-order window
        with pytest.warns(ValidityWarning):
            b = eup_bound(1.0, PARAMS)
        assert b.value == pytest.approx(0.51, rel=1e-15)
        assert b.exact == pytest.approx(0.5 * math.sqrt(1.04), rel=1e-15)

    def test_gup_expansion_error_at_edge(self):
        with pytest.warns(ValidityWarning):
            b = gup_bound(1.0, PARAMS)
        assert b.value == pytest.approx(0.75, rel=1e-15)
        assert b.exact == pytest.approx(0.5 * math.sqrt(2), rel=1e-15)
        assert not b.valid

    def test_below_window_warns(self):
        with pytest.warns(ValidityWarning):
            gup_bound(0.01, PARAMS)

    @pytest.mark.parametrize("fn,s", [(gup_bound, 0.5), (eup_bound, 0.1)])
    def test_canonical_limit(self, fn, s):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ValidityWarning)
            b = fn(1e-6, PARAMS)
        assert b.value == pytest.approx(0.5e6, rel=1e-9)

    @pytest.mark.parametrize("fn,width", [(gup_bound, 0.5), (eup_bound, 0.1)])
    def test_fourth_order_agreement(self, fn, width):
        eps = np.logspace(-3, -1, 9)
        args = eps / (2 * width)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ValidityWarning)
            err = np.array([abs((b := fn(a, PARAMS)).value - b.exact) / b.exact for a in args])
        slope = np.polyfit(np.log(eps), np.log(err), 1)[0]
        assert slope >= 3.5
        # leading term of 1 + e^2/2 - sqrt(1 + e^2)
        small = eps <= 1e-2
        np.testing.assert_allclose(err[small], eps[small] ** 4 / 8, rtol=1e-3)

    def test_rejects_nonpositive(self):
        with pytest.raises(DomainError):
            gup_bound(0.0, PARAMS)
        with pytest.raises(DomainError):
            eup_bound(-1.0, PARAMS)


class TestEgup:
    def test_gup_limit(self):
        sc = widths(0.5, 0.0)
        for dp in (0.01, 0.05):
            dx = 0.5 / dp
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ValidityWarning)
                g = gup_bound(dp, sc).value
            assert egup_product_bound(dx, dp, sc) == pytest.approx(dp * g, rel=1e-9)

    def test_eup_limit(self):
        sc = widths(0.0, 0.1)
        for dx in (0.5, 0.2):
            dp = 0.5 / dx
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ValidityWarning)
                e = eup_bound(dx, sc).value
            assert egup_product_bound(dx, dp, sc) == pytest.approx(dx * e, rel=1e-9)

    def test_generic_point_within_one_percent(self):
        dx, dp = 3.0, 2.0
        exact = unified_product(dx, dp, PARAMS)
        assert abs(egup_product_bound(dx, dp, PARAMS) - exact) / exact < 0.01

    @given(st.floats(2.0, 50.0), st.floats(0.5, 50.0))
    @settings(max_examples=50)
    def test_first_order_error_is_second_order_small(self, dx, dp):
        a = (0.5 / dx) ** 2
        b = (0.1 / dp) ** 2
        exact = unified_product(dx, dp, PARAMS)
        rel = abs(egup_product_bound(dx, dp, PARAMS) - exact) / exact
        assert rel <= (a + b) ** 2


class TestSymmetry:
    def test_example(self):
        new = symmetry_transform(1.0, 0.3, PARAMS)
        assert new == pytest.approx((1.5, 0.2), rel=1e-15)
        assert unified_product(*new, PARAMS) == pytest.approx(unified_product(1.0, 0.3, PARAMS), rel=1e-12)

    def test_fixed_point(self):
        opt = optimal_widths(1.0, 0.5, 0.1)
        assert symmetry_transform(*opt, PARAMS) == pytest.approx(opt, rel=1e-15)

    @given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
    def test_involution_and_invariance(self, dx, dp):
        once = symmetry_transform(dx, dp, PARAMS)
        assert symmetry_transform(*once, PARAMS) == pytest.approx((dx, dp), rel=1e-12)
        assert unified_product(*once, PARAMS) == pytest.approx(unified_product(dx, dp, PARAMS), rel=1e-12)


class TestSweep:
    def test_single_optimal_point(self, grid512):
        (row,) = sweep_products([0.1], [math.sqrt(2.5)], grid512)
        assert abs(row.slack) < 1e-6
        assert row.bound == pytest.approx(0.55)

    def test_canonical_entry(self, grid512):
        rows = sweep_products([1e-12], [1.0, 2.0], grid512)
        assert all(r.bound == pytest.approx(0.5, rel=1e-9) for r in rows)

    def test_argmin_at_optimal_width(self, grid512):
        ws = np.linspace(1.0, 2.2, 25)
        rows = sweep_products([0.1], ws, grid512)
        assert all(r.slack >= -1e-6 * r.bound for r in rows)
        best = slack_argmin(rows)
        assert abs(best - math.sqrt(2.5)) <= ws[1] - ws[0]
        assert len(rows[0].as_tuple()) == len(rows[0].FIELDS)
