"""Contour dynamics: pointwise kernels, propagators, reduced evolution.

Oracles used here: closed forms at zero coupling, the Bessel form of the
single-atom propagator at unit coupling, direct energy quadrature of the
two-point kernel, and the level-resolved density route to the averaged
propagator. Quadrature results are additionally checked against runs
with doubled contour offsets.
"""

import math

import numpy as np
import pytest
from scipy import integrate, special

from rmrelax.dynamics import (ContourSpec, default_contour, default_eta,
                              evolve, f_E, rho_limit, two_point, u_E, u_mean)
from rmrelax.errors import (ConfigValidationError, DenominatorNearZeroError,
                            QuadratureBudgetError)
from rmrelax.measures import Atoms, Uniform
from rmrelax.selfconsistent import (ModelParams, density_grid, solve_pair,
                                    spectral_density)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

UNIFORM = ModelParams(Uniform(-1.0, 1.0), splitting=0.25, coupling=0.4)
ATOM_UNIT = ModelParams(Atoms([0.0], [1.0]), splitting=0.0, coupling=1.0)
FREE = ModelParams(Uniform(-1.0, 1.0), splitting=0.7, coupling=0.0)


def complex_quad(func, a, b):
    re = integrate.quad(lambda x: func(x).real, a, b, limit=200)[0]
    im = integrate.quad(lambda x: func(x).imag, a, b, limit=200)[0]
    return re + 1j * im


def shifted_argument(p, alpha, z, pair):
    return z - alpha * p.splitting + p.coupling ** 2 * pair.f(-alpha)


class TestResolventKernel:
    def test_free_case_is_bare_resolvent(self):
        z = 0.4 + 0.9j
        pair = solve_pair(FREE, z)
        mat = f_E(FREE, 0.2, z, pair)
        s = FREE.splitting
        assert mat[0, 0] == pytest.approx(1.0 / (0.2 + s - z))
        assert mat[1, 1] == pytest.approx(1.0 / (0.2 - s - z))
        assert mat[0, 1] == 0.0

    def test_single_atom_golden_value(self):
        # unit coupling to a point reservoir at the origin: the kernel at
        # z=i reproduces the golden ratio through 1/(1+g) = g
        pair = solve_pair(ATOM_UNIT, 1j, tol=1e-13)
        mat = f_E(ATOM_UNIT, 0.0, 1j, pair)
        assert mat[0, 0] == pytest.approx(1j * GOLDEN, abs=1e-10)
        assert mat[1, 1] == pytest.approx(1j * GOLDEN, abs=1e-10)

    def test_conjugate_symmetry(self):
        z = 0.5 + 0.8j
        up = f_E(UNIFORM, 0.3, z, solve_pair(UNIFORM, z))
        dn = f_E(UNIFORM, 0.3, np.conj(z), solve_pair(UNIFORM, np.conj(z)))
        np.testing.assert_allclose(dn, np.conj(up), atol=1e-13)

    def test_norm_bound(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            z = rng.uniform(-2, 2) + 1j * rng.choice([-1, 1]) \
                * rng.uniform(0.05, 3.0)
            energy = rng.uniform(-2, 2)
            mat = f_E(UNIFORM, energy, z, solve_pair(UNIFORM, z))
            bound = 1.0 / abs(z.imag)
            assert np.max(np.abs(np.diag(mat))) <= bound + 1e-12


class TestTwoPoint:
    def test_free_single_atom_product(self):
        p = ModelParams(Atoms([0.0], [1.0]), splitting=0.0, coupling=0.0)
        for z1, z2 in [(0.5 + 1j, 0.3 - 0.7j), (2j, -1.5j), (1 + 1j, 1 - 1j)]:
            pairs = (solve_pair(p, z1), solve_pair(p, z2))
            val = two_point(p, 1, 1, z1, z2, pairs)
            assert val == pytest.approx(1.0 / (z1 * z2), abs=1e-13)

    def test_matches_direct_energy_quadrature(self):
        z1, z2 = 0.3 + 0.4j, -0.2 - 0.35j
        pairs = (solve_pair(UNIFORM, z1, tol=1e-13),
                 solve_pair(UNIFORM, z2, tol=1e-13))
        for beta in (1, -1):
            for gamma in (1, -1):
                w1 = shifted_argument(UNIFORM, beta, z1, pairs[0])
                w2 = shifted_argument(UNIFORM, gamma, z2, pairs[1])
                oracle = complex_quad(
                    lambda lam: 0.5 / ((lam - w1) * (lam - w2)), -1.0, 1.0)
                val = two_point(UNIFORM, beta, gamma, z1, z2, pairs)
                assert val == pytest.approx(oracle, abs=1e-9)

    def test_difference_quotient_identity(self):
        # same-level kernel times its denominator recovers the transform
        # difference; exercised across the axis as in production use
        rng = np.random.default_rng(23)
        v2 = UNIFORM.coupling ** 2
        for _ in range(20):
            z1 = rng.uniform(-2, 2) + 1j * rng.uniform(0.1, 2.0)
            z2 = rng.uniform(-2, 2) - 1j * rng.uniform(0.1, 2.0)
            p1 = solve_pair(UNIFORM, z1, tol=1e-12)
            p2 = solve_pair(UNIFORM, z2, tol=1e-12)
            for alpha in (1, -1):
                df = p1.f(alpha) - p2.f(alpha)
                dfo = p1.f(-alpha) - p2.f(-alpha)
                val = two_point(UNIFORM, alpha, alpha, z1, z2, (p1, p2))
                assert abs(val * (z1 - z2 + v2 * dfo) - df) < 1e-9

    def test_conjugate_pair_is_positive(self):
        z = 0.4 + 0.3j
        pairs = (solve_pair(UNIFORM, z), solve_pair(UNIFORM, np.conj(z)))
        for alpha in (1, -1):
            val = two_point(UNIFORM, alpha, alpha, z, np.conj(z), pairs)
            assert abs(val.imag) < 1e-12
            assert val.real > 0

    def test_degenerate_limit_matches_derivative(self):
        z = 0.6 + 0.5j
        pair = solve_pair(UNIFORM, z, tol=1e-13)
        val = two_point(UNIFORM, 1, 1, z, z, (pair, pair))
        w = shifted_argument(UNIFORM, 1, z, pair)
        oracle = complex_quad(lambda lam: 0.5 / (lam - w) ** 2, -1.0, 1.0)
        assert val == pytest.approx(oracle, abs=1e-9)


class TestEnergyPropagator:
    def test_free_phases(self):
        mat = u_E(FREE, 0.3, 1.7)
        s = FREE.splitting
        assert mat[0, 0] == pytest.approx(np.exp(1j * (0.3 + s) * 1.7))
        assert mat[1, 1] == pytest.approx(np.exp(1j * (0.3 - s) * 1.7))

    def test_initial_time_is_identity(self):
        mat = u_E(UNIFORM, 0.2, 0.0)
        np.testing.assert_allclose(mat, np.eye(2), atol=2e-6)

    @pytest.mark.parametrize("t", [0.5, 2.0, 6.0])
    def test_single_atom_bessel_form(self, t):
        mat = u_E(ATOM_UNIT, 0.0, t)
        expected = special.j1(2.0 * t) / t
        assert mat[0, 0] == pytest.approx(expected, abs=2e-6)
        assert mat[1, 1] == pytest.approx(expected, abs=2e-6)

    def test_diagonal_norm_bound(self):
        for t in (0.3, 1.7, 4.0, 8.5):
            mat = u_E(UNIFORM, 0.1, t)
            assert np.max(np.abs(np.diag(mat))) <= 1.0 + 2e-6

    def test_negative_time_rejected(self):
        with pytest.raises(ValueError):
            u_E(UNIFORM, 0.0, -0.5)


class TestMeanPropagator:
    def test_free_case_is_shifted_transform(self):
        t = 1.3
        mat = u_mean(FREE, t)
        base = FREE.measure.fourier(-t)
        s = FREE.splitting
        assert mat[0, 0] == pytest.approx(np.exp(1j * s * t) * base, abs=1e-12)
        assert mat[1, 1] == pytest.approx(np.exp(-1j * s * t) * base,
                                          abs=1e-12)

    def test_initial_time_is_identity(self):
        mat = u_mean(UNIFORM, 0.0)
        np.testing.assert_allclose(mat, np.eye(2), atol=2e-6)

    def test_matches_density_fourier_transform(self):
        # independent route: invert the transforms to level densities and
        # integrate the phase against them directly
        grid = density_grid(UNIFORM, spacing=2e-3, eta=4e-3)
        dens = spectral_density(UNIFORM, grid=grid, eta=4e-3)
        for t in (0.7, 1.5):
            diag = np.diag(u_mean(UNIFORM, t, tol=1e-8))
            for alpha, idx in ((1, 0), (-1, 1)):
                nu = dens.component(alpha)
                ft = np.trapezoid(np.exp(1j * dens.grid * t) * nu, dens.grid)
                assert diag[idx] == pytest.approx(ft, abs=5e-5)


class TestEvolve:
    def test_initial_time_recovers_state(self):
        rho0 = np.array([[0.6, 0.2 + 0.1j], [0.2 - 0.1j, 0.4]])
        traj = evolve(UNIFORM, 0.0, np.array([0.0, 0.5]), rho0)
        np.testing.assert_allclose(traj.states[0], rho0, atol=5e-5)

    def test_free_evolution_is_exact(self):
        rho0 = np.array([[0.6, 0.2 + 0.1j], [0.2 - 0.1j, 0.4]])
        times = np.array([0.0, 0.8, 2.5])
        traj = evolve(FREE, 0.0, times, rho0)
        assert traj.meta["method"] == "free"
        s = FREE.splitting
        for i, t in enumerate(times):
            phase = np.exp(-2j * t * s)
            assert traj.states[i][0, 0] == pytest.approx(0.6, abs=1e-15)
            assert traj.states[i][0, 1] == pytest.approx(
                phase * (0.2 + 0.1j), abs=1e-14)
            assert traj.states[i][1, 0] == pytest.approx(
                np.conj(phase) * (0.2 - 0.1j), abs=1e-14)

    def test_population_decay_pinned(self):
        # values pinned from a tighter-tolerance run of the same contour
        traj = evolve(UNIFORM, 0.0, np.array([0.5, 1.0, 2.0]),
                      np.diag([1.0 + 0j, 0.0]))
        pinned = [0.961517830, 0.862709275, 0.642378431]
        np.testing.assert_allclose(traj.states[:, 0, 0].real, pinned,
                                   atol=2e-5)
        # diagonal initial data keeps the off-diagonals exactly zero
        assert np.all(traj.states[:, 0, 1] == 0)
        assert np.all(traj.states[:, 1, 0] == 0)

    def test_mixed_state_pinned(self):
        rho0 = np.array([[0.6, 0.2 + 0.1j], [0.2 - 0.1j, 0.4]])
        traj = evolve(UNIFORM, 0.0, np.array([0.5, 1.0, 2.0]), rho0)
        pinned_pp = [0.592303525, 0.572541745, 0.528475467]
        pinned_pm = [0.217955427 + 0.041054085j,
                     0.219900402 - 0.025335000j,
                     0.180138829 - 0.120321851j]
        np.testing.assert_allclose(traj.states[:, 0, 0].real, pinned_pp,
                                   atol=2e-5)
        np.testing.assert_allclose(traj.states[:, 0, 1], pinned_pm,
                                   atol=2e-5)

    def test_trace_and_hermiticity(self):
        rho0 = np.array([[0.55, 0.1 - 0.2j], [0.1 + 0.2j, 0.45]])
        traj = evolve(UNIFORM, 0.1, np.array([0.5, 1.5, 3.0]), rho0,
                      tol=1e-5)
        assert traj.trace_errors().max() <= 1e-4
        assert traj.hermiticity_errors().max() <= 1e-4
        assert traj.meta["trace_error"] <= 1e-4
        assert traj.meta["min_denominator"] > 1e-2

    def test_contour_independence(self):
        times = np.array([0.5, 1.0, 2.0])
        rho0 = np.diag([1.0 + 0j, 0.0])
        base = evolve(UNIFORM, 0.0, times, rho0, tol=1e-5)
        eta = default_eta(times[-1])
        doubled = ContourSpec(eta1=2.0 * eta, eta2=2.0 * eta,
                              x=UNIFORM.measure.support_radius + 10.0,
                              tol=1e-5)
        alt = evolve(UNIFORM, 0.0, times, rho0, contour=doubled, tol=1e-5)
        assert np.max(np.abs(base.states - alt.states)) < 5e-5

    def test_rho_limit_matches_trajectory(self):
        rho0 = np.diag([1.0 + 0j, 0.0])
        single = rho_limit(UNIFORM, 0.0, 1.0, rho0)
        traj = evolve(UNIFORM, 0.0, np.array([0.5, 1.0]), rho0)
        assert abs(single.pp - traj.states[1, 0, 0]) < 2e-5

    def test_meta_records_geometry(self):
        traj = evolve(UNIFORM, 3.7, np.array([1.0]), np.diag([1.0 + 0j, 0.0]))
        assert traj.meta["method"] == "contour"
        assert traj.meta["reservoir_energy"] == 3.7
        assert not traj.meta["energy_in_support"]
        assert traj.meta["eta1"] == default_eta(1.0)

    def test_rejects_invalid_initial_state(self):
        bad = np.array([[0.55, 0.52], [0.52, 0.45]])
        with pytest.raises(ConfigValidationError):
            evolve(UNIFORM, 0.0, np.array([1.0]), bad)

    def test_rejects_bad_time_grids(self):
        rho0 = np.diag([1.0 + 0j, 0.0])
        with pytest.raises(ValueError):
            evolve(UNIFORM, 0.0, np.array([1.0, 0.5]), rho0)
        with pytest.raises(ValueError):
            evolve(UNIFORM, 0.0, np.array([-1.0, 0.5]), rho0)
        with pytest.raises(ValueError):
            evolve(UNIFORM, 0.0, np.array([]), rho0)

    def test_denominator_guard_fires_at_tiny_offsets(self):
        p = ModelParams(Uniform(-1.0, 1.0), splitting=0.0, coupling=1.0)
        spec = ContourSpec(eta1=1e-7, eta2=1e-7, x=12.0, fine_width=0.05,
                           tol=1e-4)
        with pytest.raises(DenominatorNearZeroError):
            evolve(p, 0.0, np.array([1.0]), np.diag([1.0 + 0j, 0.0]),
                   contour=spec, tol=1e-4)

    def test_unreachable_tolerance_raises(self):
        with pytest.raises(QuadratureBudgetError):
            evolve(UNIFORM, 0.0, np.array([1.0]), np.diag([1.0 + 0j, 0.0]),
                   tol=1e-9)


class TestContourSpec:
    def test_default_eta_schedule(self):
        assert default_eta(0.0) == 0.5
        assert default_eta(3.0) == 0.25
        assert default_eta(99.0) == pytest.approx(0.01)

    def test_default_contour_reaches_past_support(self):
        spec = default_contour(UNIFORM, 1.0)
        assert spec.x == UNIFORM.measure.support_radius + 10.0

    def test_rejects_bad_geometry(self):
        with pytest.raises(ValueError):
            ContourSpec(eta1=0.0, eta2=0.1, x=5.0)
        with pytest.raises(ValueError):
            ContourSpec(eta1=0.1, eta2=0.1, x=-1.0)
