import numpy as np
import pytest
from scipy import stats

from smeared_space.errors import DomainError, ImpossibleOutcomeError, UnsupportedError
from smeared_space.grid import Field, Grid, gaussian_amplitude
from smeared_space.measurement import (
    OutcomeHistory,
    canonical_variance,
    collapse_momentum,
    collapse_position,
    generalized_moment,
    generalized_variance,
    momentum_density,
    momentum_grid,
    position_density,
    sample_from_density,
    sample_outcome,
    sequential_collapse,
    sequential_measure,
    smeared_operator_moment,
)
from smeared_space.smearing import make_kernel, smear

from conftest import random_smooth_state


def mean_var(points, rho, step):
    m0 = np.sum(rho) * step
    m1 = np.sum(points * rho) * step / m0
    return m1, np.sum((points - m1) ** 2 * rho) * step / m0


@pytest.fixture(scope="module")
def gauss_state():
    g = Grid(512, 32.0)
    return smear(gaussian_amplitude(g, 0.0, 1.0), make_kernel("gaussian", 0.5, 0.1, g), 1.0)


class TestHistory:
    def test_positions_and_append(self):
        h = OutcomeHistory.positions(1.0, 2.0).append("momentum", 0.5)
        assert list(h) == [("position", 1.0), ("position", 2.0), ("momentum", 0.5)]
        assert len(h) == 3

    def test_rejects_unknown_axis(self):
        with pytest.raises(DomainError):
            OutcomeHistory((("energy", 1.0),))


class TestPositionDensity:
    def test_matches_convolution_oracle(self, small_grids, rng):
        u, v = small_grids
        psi = random_smooth_state(u, rng)
        k = make_kernel("exponential", 0.5, 0.1, v)
        rho = position_density(smear(psi, k))
        oracle = np.convolve(np.abs(psi.values) ** 2, k.density()) * u.spacing
        np.testing.assert_allclose(rho.values, oracle, atol=1e-12)
        assert rho.grid.points[0] == pytest.approx(u.start + v.start)
        assert rho.grid.spacing == pytest.approx(u.spacing)

    def test_gaussian_variance(self, gauss_state):
        rho = position_density(gauss_state)
        _, var = mean_var(rho.grid.points, rho.values, rho.grid.spacing)
        assert var == pytest.approx(1.25, rel=1e-9)
        assert rho.integral().real == pytest.approx(1.0, abs=1e-12)

    def test_unsmeared_limit(self):
        u = Grid(2048, 32.0)
        d = u.spacing
        v = Grid(64, 64 * d)
        psi = gaussian_amplitude(u, 0.0, 146 * d)
        rho = position_density(smear(psi, make_kernel("gaussian", 4 * d, 1e-4, v)))
        ref = np.interp(rho.grid.points, u.points, np.abs(psi.values) ** 2, left=0, right=0)
        assert np.sum(np.abs(rho.values - ref)) * d < 1e-3


class TestMomentumDensity:
    def test_gaussian_against_closed_form(self, gauss_state):
        rho = momentum_density(gauss_state)
        var = 0.25 + 0.01
        q = rho.grid.points
        oracle = np.exp(-(q**2) / (2 * var)) / np.sqrt(2 * np.pi * var)
        np.testing.assert_allclose(rho.values, oracle, atol=1e-6)
        assert rho.integral().real == pytest.approx(1.0, abs=1e-9)

    def test_matches_convolution_of_marginals(self, small_grids, rng):
        from smeared_space.grid import transform

        u, v = small_grids
        psi = random_smooth_state(u, rng)
        k = make_kernel("gaussian", 0.5, 0.2, v)
        rho = momentum_density(smear(psi, k, 1.0))
        # |g~|^2 is an exact Gaussian of std 0.2; integrate the p-marginal against it
        spec = transform(psi, 1.0)
        p, rp = spec.grid.points, np.abs(spec.values) ** 2
        s = 0.2
        q = rho.grid.points
        kern = np.exp(-((q[:, None] - p[None, :]) ** 2) / (2 * s * s)) / np.sqrt(2 * np.pi * s * s)
        oracle = kern @ rp * spec.grid.spacing
        np.testing.assert_allclose(rho.values, oracle, atol=1e-6)

    def test_kernel_width_enters_variance(self, gauss_state):
        rho = momentum_density(gauss_state)
        _, var = mean_var(rho.grid.points, rho.values, rho.grid.spacing)
        assert var - 0.25 == pytest.approx((0.1 / (2 * 0.5)) ** 2, rel=1e-6)


class TestGeneralizedVariance:
    def test_acceptance_values(self, gauss_state):
        assert generalized_variance(gauss_state, "position") == pytest.approx(1.25, rel=1e-6)
        assert generalized_variance(gauss_state, "momentum") == pytest.approx(0.26, rel=1e-6)

    def test_optimal_width(self):
        g = Grid(512, 32.0)
        state = smear(gaussian_amplitude(g, 0.0, np.sqrt(2.5)), make_kernel("gaussian", 0.5, 0.1, g))
        vx = generalized_variance(state, "position")
        vp = generalized_variance(state, "momentum")
        assert vx == pytest.approx(2.75, rel=1e-6)
        assert vp == pytest.approx(0.11, rel=1e-6)
        assert np.sqrt(vx * vp) == pytest.approx(0.55, rel=1e-6)

    def test_canonical_limit(self):
        u = Grid(2048, 32.0)
        d = u.spacing
        state = smear(gaussian_amplitude(u, 0.0, 1.0), make_kernel("gaussian", 4 * d, 1e-3, Grid(64, 64 * d)))
        dx_gen = np.sqrt(generalized_variance(state, "position"))
        assert dx_gen == pytest.approx(np.sqrt(1.0 + (4 * d) ** 2), rel=1e-9)
        assert dx_gen == pytest.approx(1.0, abs=3e-3)

    def test_additive_law_random(self, small_grids, rng):
        u, v = small_grids
        for kind in ("gaussian", "exponential"):
            k = make_kernel(kind, 0.5, 0.1, v)
            for _ in range(5):
                psi = random_smooth_state(u, rng)
                state = smear(psi, k, 1.0)
                gv = generalized_variance(state, "position") - canonical_variance(psi)
                kv = np.sum(v.points**2 * k.density()) * v.spacing
                assert gv == pytest.approx(kv, abs=1e-6)
                conj = k.conjugate()
                kp = np.sum(conj.grid.points**2 * np.abs(conj.values) ** 2) * conj.grid.spacing
                gp = generalized_variance(state, "momentum") - canonical_variance(psi, 1.0, "momentum")
                assert gp == pytest.approx(kp, abs=1e-6)

    def test_lower_bounds_random_sweep(self, small_grids, rng):
        u, v = small_grids
        k = make_kernel("gaussian", 0.5, 0.1, v)
        for _ in range(100):
            state = smear(random_smooth_state(u, rng), k, 1.0)
            assert generalized_variance(state, "position") >= 0.25 - 1e-9
            assert generalized_variance(state, "momentum") >= 0.01 - 1e-9

    def test_moment_matches_density(self, gauss_state):
        rho = position_density(gauss_state)
        for n in range(4):
            assert generalized_moment(gauss_state, "position", n) == pytest.approx(
                np.sum(rho.grid.points**n * rho.values) * rho.grid.spacing, abs=1e-12
            )

    def test_bad_axis(self, gauss_state):
        with pytest.raises(DomainError):
            generalized_moment(gauss_state, "energy", 1)


def unprimed_stats(state):
    """Mean and variance of the re-smeared unprimed factor."""
    rho = np.sum(np.abs(state.amplitudes) ** 2, axis=1) * state.v_grid.spacing
    return mean_var(state.u_grid.points, rho, state.u_grid.spacing)


class TestCollapsePosition:
    def test_gaussian_product_closed_form(self, gauss_state):
        post = collapse_position(gauss_state, 1.0)
        mean, var = unprimed_stats(post)
        # posterior of N(0, 1) times N(r, 0.25)
        assert mean == pytest.approx(1.0 * 1.0 / (1.0 + 0.25), abs=1e-6)
        assert var == pytest.approx(1 / (1 / 1.0 + 1 / 0.25), abs=1e-6)
        assert post.norm() == pytest.approx(1.0, abs=1e-9)

    def test_symmetric_outcome_keeps_mean(self, gauss_state):
        mean, _ = unprimed_stats(collapse_position(gauss_state, 0.0))
        assert abs(mean) < 1e-9

    def test_two_collapses_multiply_kernels(self, gauss_state):
        post = sequential_collapse(gauss_state, OutcomeHistory.positions(1.0, -0.5))
        mean, var = unprimed_stats(post)
        precision = 1.0 + 2 / 0.25
        assert var == pytest.approx(1 / precision, abs=1e-6)
        assert mean == pytest.approx((1.0 - 0.5) / 0.25 / precision, abs=1e-6)

    def test_integrand_shape(self, gauss_state):
        r = 0.75
        post = collapse_position(gauss_state, r)
        u = gauss_state.u_grid.points
        phi = np.exp(-((r - u) ** 2) / (4 * 0.25)) * np.exp(-(u**2) / 4)
        phi /= np.sqrt(np.sum(phi**2) * gauss_state.u_grid.spacing)
        np.testing.assert_allclose(post.amplitudes, np.outer(phi, gauss_state.kernel.values), atol=1e-9)

    def test_impossible_outcome(self, gauss_state):
        with pytest.raises(ImpossibleOutcomeError):
            collapse_position(gauss_state, 15.0)


class TestCollapseMomentum:
    @pytest.fixture(scope="class")
    @staticmethod
    def wide_state():
        g = Grid(1024, 80.0)
        return smear(gaussian_amplitude(g, 0.0, 1.0), make_kernel("gaussian", 0.5, 0.1, g), 1.0)

    def test_posterior_variance(self, wide_state):
        post = collapse_momentum(wide_state, 0.0)
        assert post.norm() == pytest.approx(1.0, abs=1e-9)
        psi = Field(post.u_grid, post.amplitudes[:, post.v_grid.index_of(0.0)])
        psi = Field(psi.grid, psi.values / psi.norm())
        # prior p-variance 1/4 times kernel variance 0.01: 1 / (4 + 100)
        assert canonical_variance(psi, 1.0, "momentum") == pytest.approx(1 / 104, rel=1e-4)

    def test_mean_moves_towards_outcome(self, wide_state):
        s = 0.3
        post = collapse_momentum(wide_state, s)
        rho = momentum_density(post)
        before = momentum_density(wide_state)
        m_after, _ = mean_var(rho.grid.points, rho.values, rho.grid.spacing)
        m_before, _ = mean_var(before.grid.points, before.values, before.grid.spacing)
        assert abs(m_after - s) < abs(m_before - s)
        grid = momentum_grid(wide_state)
        s_snap = grid.points[grid.index_of(s)]
        assert m_after == pytest.approx(s_snap * 100 / 104, abs=1e-6)

    def test_impossible(self, wide_state):
        with pytest.raises(ImpossibleOutcomeError):
            collapse_momentum(wide_state, 4.0)


class TestSampling:
    def test_deterministic(self, gauss_state):
        a = sample_outcome(gauss_state, "position", seed=3, size=5)
        b = sample_outcome(gauss_state, "position", seed=3, size=5)
        np.testing.assert_array_equal(a, b)

    def test_delta_density(self):
        g = Grid(32, 4.0)
        rho = np.zeros(32)
        rho[7] = 1 / g.spacing
        assert set(sample_from_density(Field(g, rho), seed=1, size=100)) == {g.points[7]}

    def test_uniform_ks(self):
        g = Grid(4096, 1.0, center=0.5)
        x = sample_from_density(Field(g, np.ones(4096)), seed=11, size=100_000)
        assert stats.kstest(x, "uniform").statistic < 0.01

    def test_chi_square(self, gauss_state):
        rho = position_density(gauss_state)
        x = sample_outcome(gauss_state, "position", seed=5, size=100_000)
        edges = np.linspace(-4, 4, 17)
        observed, _ = np.histogram(x, bins=edges)
        expected_p, _ = np.histogram(rho.grid.points, bins=edges, weights=rho.values)
        expected = expected_p / expected_p.sum() * observed.sum()
        assert stats.chisquare(observed, expected).pvalue > 0.01

    def test_empty_density(self):
        with pytest.raises(DomainError):
            sample_from_density(Field(Grid(8, 1.0), np.zeros(8)))


class TestOperatorPicture:
    def test_zeroth_moment(self, gauss_state):
        psi = gaussian_amplitude(gauss_state.u_grid, 0.0, 1.0)
        assert smeared_operator_moment(psi, gauss_state.kernel, "position", 0) == pytest.approx(1.0)

    def test_second_moment_closed_form(self):
        g = Grid(512, 32.0)
        psi = gaussian_amplitude(g, 0.7, 1.0)
        k = make_kernel("gaussian", 0.5, 0.1, g)
        assert smeared_operator_moment(psi, k, "position", 2) == pytest.approx(1 + 0.49 + 0.25, rel=1e-9)

    @pytest.mark.parametrize("axis", ["position", "momentum"])
    def test_picture_equivalence(self, small_grids, rng, axis):
        u, v = small_grids
        k = make_kernel("exponential", 0.5, 0.1, v)
        for _ in range(5):
            psi = random_smooth_state(u, rng)
            state = smear(psi, k, 1.0)
            for n in range(5):
                a = smeared_operator_moment(psi, k, axis, n, 1.0)
                b = generalized_moment(state, axis, n)
                assert a == pytest.approx(b, rel=1e-9, abs=1e-12)

    def test_negative_order(self, gauss_state):
        psi = gaussian_amplitude(gauss_state.u_grid)
        with pytest.raises(DomainError):
            smeared_operator_moment(psi, gauss_state.kernel, "position", -1)


class TestSequentialMeasure:
    @pytest.fixture(scope="class")
    @staticmethod
    def setup():
        g = Grid(512, 32.0)
        x = g.points
        psi = Field(g, np.exp(-((x - 0.5) ** 2) / 4) * (1 + 0.5 * np.tanh(x)))
        psi = Field(g, psi.values / psi.norm())
        return psi, make_kernel("gaussian", 0.5, 0.1, g)

    def test_empty_history(self, setup):
        psi, k = setup
        out = sequential_measure(psi, k, OutcomeHistory())
        np.testing.assert_allclose(out.amplitudes, smear(psi, k).amplitudes)

    def test_single_outcome(self, setup):
        psi, k = setup
        a = sequential_measure(psi, k, OutcomeHistory.positions(0.8))
        b = collapse_position(smear(psi, k), 0.8)
        assert np.max(np.abs(a.amplitudes - b.amplitudes)) < 1e-9

    def test_three_outcomes_dual_pipeline(self, setup):
        psi, k = setup
        h = OutcomeHistory.positions(0.8, -0.25, 1.5)
        a = sequential_measure(psi, k, h)
        b = sequential_collapse(smear(psi, k), h)
        assert np.max(np.abs(a.amplitudes - b.amplitudes)) < 1e-9

    def test_position_outcomes_commute(self, setup):
        psi, k = setup
        a = sequential_measure(psi, k, OutcomeHistory.positions(0.8, -0.25))
        b = sequential_measure(psi, k, OutcomeHistory.positions(-0.25, 0.8))
        assert np.max(np.abs(a.amplitudes - b.amplitudes)) < 1e-9

    def test_mixed_axes_do_not_commute(self, setup):
        psi, k = setup
        g = Grid(1024, 80.0)
        x = g.points
        phi = Field(g, np.exp(-((x - 0.5) ** 2) / 4) * (1 + 0.5 * np.tanh(x)))
        phi = Field(g, phi.values / phi.norm())
        state = smear(phi, make_kernel("gaussian", 0.5, 0.1, g))
        h1 = OutcomeHistory((("position", 0.8), ("momentum", 0.2)))
        h2 = OutcomeHistory((("momentum", 0.2), ("position", 0.8)))
        a = sequential_collapse(state, h1)
        b = sequential_collapse(state, h2)
        assert np.max(np.abs(a.amplitudes - b.amplitudes)) > 1e-6

    def test_momentum_chain_unsupported(self, setup):
        psi, k = setup
        with pytest.raises(UnsupportedError):
            sequential_measure(psi, k, OutcomeHistory((("momentum", 0.1),)))
