"""Tests for duhamel.py"""
import math
from dataclasses import replace

import numpy as np
import pytest

from duhamel import (
    ContractionError, SigmaNorm, TimeGrid, ValidityRegionError, build_propagator,
    contraction_ratio, data_at_start, decay_rates, decay_samples, duhamel_tail, iteration_floor,
    k_independence, pde_residual, picard_forcing, picard_map, reconstruct, residual_floor, sigma_rate,
    solve_fixed_point, time_shift_fit,
)
from ground_state import remainder_R
from profiles import build_profiles, eval_vk, eval_Wka, residual
from radial_grid import State, Trajectory, make_grid
from wave_evolver import EvolverConfig, WaveEvolver, evolve


@pytest.fixture(scope="module")
def small_prop():
    return build_propagator(make_grid(6, 20.0, 200))


@pytest.fixture(scope="module")
def wide_prop(wide6):
    return build_propagator(wide6.grid)


@pytest.fixture(scope="module")
def plus3(wide6, wide_eig6):
    return build_profiles(1.0, 3, wide_eig6, wide6)


@pytest.fixture(scope="module")
def plus3_solution(plus3, wide_prop):
    return solve_fixed_point(plus3, TimeGrid.standard(plus3), prop=wide_prop)


def exponential_forcing(prop, m, gamma, T_max, dtau):
    times = np.arange(0.0, T_max + 0.5 * dtau, dtau)
    values = np.exp(-gamma * times)[:, None] * prop.mode(m)[None, :]
    return Trajectory(times, values)


def exponential_tail(prop, m, gamma, t, T_max):
    """Closed-form Duhamel tail of e^{-gamma tau} phi_m and its time derivative."""
    omega = float(prop.frequencies[m])
    L = T_max - t
    denom = gamma ** 2 + omega ** 2
    sin_part = (omega - math.exp(-gamma * L) * (gamma * math.sin(omega * L) + omega * math.cos(omega * L))) / denom
    cos_part = (gamma - math.exp(-gamma * L) * (gamma * math.cos(omega * L) - omega * math.sin(omega * L))) / denom
    h = math.exp(-gamma * t) / omega * sin_part
    ht = -math.exp(-gamma * t) * cos_part
    return h * prop.mode(m), ht * prop.mode(m)


class TestSpectralPropagator:
    """Test suite for the mode decomposition of -Delta."""

    def test_positive_spectrum(self, small_prop):
        """Test all eigenvalues are positive and sorted."""
        assert small_prop.eigenvalues[0] > 0
        assert np.all(np.diff(small_prop.eigenvalues) > 0)

    def test_roundtrip(self, small_prop):
        """Test field -> modes -> field recovers the field."""
        f = np.exp(-small_prop.grid.r ** 2) * np.cos(small_prop.grid.r)
        assert small_prop.roundtrip_error(f) <= 1e-10

    def test_parseval(self, small_prop):
        """Test the mode coefficients carry the weighted L^2 norm."""
        grid = small_prop.grid
        f = 1.0 / (1.0 + grid.r ** 2)
        c = small_prop.to_modes(f)
        assert float(np.sum(c ** 2)) == pytest.approx(float(grid.lebesgue_norm(f, 2)) ** 2, rel=1e-10)

    def test_modes_orthonormal(self, small_prop):
        """Test eigenfields are orthonormal in <., .>_omega."""
        grid = small_prop.grid
        assert float(grid.inner(small_prop.mode(3), small_prop.mode(3))) == pytest.approx(1.0, rel=1e-10)
        assert abs(float(grid.inner(small_prop.mode(3), small_prop.mode(7)))) < 1e-10

    def test_free_evolve_at_zero(self, small_prop):
        """Test t = 0 returns the data."""
        grid = small_prop.grid
        f = np.exp(-grid.r ** 2)
        g = grid.r * np.exp(-grid.r ** 2)
        out = small_prop.free_evolve(f, g, 0.0)
        assert np.allclose(out.u, f, atol=1e-12)
        assert np.allclose(out.ut, g, atol=1e-12)

    def test_single_mode(self, small_prop):
        """Test an eigenfield oscillates as cos(omega t)."""
        phi = small_prop.mode(2)
        omega = float(small_prop.frequencies[2])
        out = small_prop.free_evolve(phi, np.zeros_like(phi), 3.7)
        assert np.allclose(out.u, math.cos(3.7 * omega) * phi, atol=1e-10)
        assert np.allclose(out.ut, -omega * math.sin(3.7 * omega) * phi, atol=1e-9)

    def test_energy_constant(self, small_prop):
        """Test the free energy is conserved to round-off."""
        grid = small_prop.grid
        f = np.exp(-grid.r ** 2 / 4)
        g = 0.5 * np.exp(-grid.r ** 2)

        def free_energy(state):
            return 0.5 * float(grid.lebesgue_norm(state.ut, 2)) ** 2 + 0.5 * float(grid.dirichlet_form(state.u))

        E0 = free_energy(State(0.0, f, g))
        for t in (3.7, 10.0):
            assert free_energy(small_prop.free_evolve(f, g, t)) == pytest.approx(E0, rel=1e-9)

    def test_count_grows_with_radius(self):
        """Test the number of modes below a fixed bound scales with R at fixed h."""
        n20 = build_propagator(make_grid(6, 20.0, 200)).count_below(1.0)
        n40 = build_propagator(make_grid(6, 40.0, 400)).count_below(1.0)
        assert n20 > 0
        assert abs(n40 - 2 * n20) <= 2


class TestDuhamelTail:
    """Test suite for the backward Duhamel integral."""

    def test_zero_forcing(self, small_prop):
        """Test F = 0 gives h = 0."""
        times = np.linspace(0.0, 5.0, 51)
        F = Trajectory(times, np.zeros((times.size, small_prop.grid.N)))
        h, ht = duhamel_tail(small_prop, F, with_derivative=True)
        assert np.all(h.values == 0.0) and np.all(ht.values == 0.0)

    def test_vanishes_at_final_time(self, small_prop):
        """Test h(T_max) = 0 and d_t h(T_max) = 0."""
        F = exponential_forcing(small_prop, 1, 0.7, 6.0, 0.02)
        h, ht = duhamel_tail(small_prop, F, with_derivative=True)
        assert np.all(h.values[-1] == 0.0) and np.all(ht.values[-1] == 0.0)

    def test_low_mode_closed_form(self, small_prop):
        """Test a slow mode (trapezoidal branch) against the closed form, second order in dtau."""
        errors = []
        for dtau in (0.02, 0.01):
            F = exponential_forcing(small_prop, 1, 0.7, 6.0, dtau)
            h, ht = duhamel_tail(small_prop, F, with_derivative=True)
            exact_h, exact_ht = exponential_tail(small_prop, 1, 0.7, 0.0, 6.0)
            scale = float(small_prop.grid.lebesgue_norm(exact_h, 2))
            errors.append(float(small_prop.grid.lebesgue_norm(h.values[0] - exact_h, 2)) / scale)
            assert np.allclose(ht.values[0], exact_ht, rtol=0, atol=1e-3 * np.max(np.abs(exact_ht)))
        assert errors[0] < 1e-3
        assert errors[0] / errors[1] > 3.0

    def test_fast_mode_closed_form(self, small_prop):
        """Test a fast mode (exact-weight branch) against the closed form."""
        dtau = 0.02
        m = int(np.searchsorted(small_prop.frequencies, 10.0))
        assert small_prop.frequencies[m] * dtau > 0.1
        F = exponential_forcing(small_prop, m, 0.7, 6.0, dtau)
        h = duhamel_tail(small_prop, F)
        for i in (0, 100, 200):
            exact_h, _ = exponential_tail(small_prop, m, 0.7, float(F.times[i]), 6.0)
            scale = float(small_prop.grid.lebesgue_norm(exact_h, 2))
            assert float(small_prop.grid.lebesgue_norm(h.values[i] - exact_h, 2)) <= 1e-3 * scale

    def test_linear(self, small_prop):
        """Test the tail is linear in the forcing."""
        F1 = exponential_forcing(small_prop, 1, 0.7, 4.0, 0.02)
        F2 = exponential_forcing(small_prop, 5, 1.3, 4.0, 0.02)
        combo = Trajectory(F1.times, 2.0 * F1.values + 3.0 * F2.values)
        lhs = duhamel_tail(small_prop, combo).values
        rhs = 2.0 * duhamel_tail(small_prop, F1).values + 3.0 * duhamel_tail(small_prop, F2).values
        assert np.allclose(lhs, rhs, rtol=0, atol=1e-12 * np.max(np.abs(rhs)))

    def test_single_sample_time(self, small_prop):
        """Test t= returns the matching sample and rejects other times."""
        F = exponential_forcing(small_prop, 1, 0.7, 4.0, 0.02)
        full = duhamel_tail(small_prop, F)
        assert np.array_equal(duhamel_tail(small_prop, F, t=float(F.times[50])), full.values[50])
        with pytest.raises(ValueError):
            duhamel_tail(small_prop, F, t=0.013)

    def test_rejects_nonuniform_times(self, small_prop):
        """Test a non-uniform time grid is rejected."""
        times = np.array([0.0, 0.1, 0.3, 0.4])
        F = Trajectory(times, np.zeros((4, small_prop.grid.N)))
        with pytest.raises(ValueError):
            duhamel_tail(small_prop, F)


class TestTimeGrid:
    """Test suite for TimeGrid."""

    def test_snaps_final_time(self):
        """Test T_max is moved onto the sample lattice."""
        tg = TimeGrid(0.0, 1.03, 0.1)
        assert tg.T_max == pytest.approx(1.0)
        assert len(tg) == 11
        assert tg.times[-1] == pytest.approx(tg.T_max)

    @pytest.mark.parametrize("args", [(0.0, 1.0, 0.0), (1.0, 0.5, 0.1), (0.0, 0.1, 0.1)])
    def test_rejects_invalid(self, args):
        """Test degenerate grids are rejected."""
        with pytest.raises(ValueError):
            TimeGrid(*args)

    def test_standard(self, plus3):
        """Test the default grid starts one e-folding after t_check and spans six."""
        tg = TimeGrid.standard(plus3)
        assert tg.t_start == pytest.approx(plus3.t_check + 1.0 / plus3.e0)
        assert tg.T_max - tg.t_start == pytest.approx(6.0 / plus3.e0, rel=1e-9)
        assert tg.dtau == pytest.approx(1.0 / (40 * plus3.e0))

    def test_standard_rejects_short_span(self, plus3):
        """Test spans below five e-foldings are rejected."""
        with pytest.raises(ValueError):
            TimeGrid.standard(plus3, span=4.0)


class TestSigmaNorm:
    """Test suite for the exponentially weighted norm."""

    def test_exact_decay(self, small_prop):
        """Test e^{-alpha t} g has norm ||g||_{H^{2,2}} at every time."""
        grid = small_prop.grid
        g = np.exp(-grid.r ** 2)
        times = np.linspace(0.0, 3.0, 7)
        traj = Trajectory(times, np.exp(-1.5 * times)[:, None] * g[None, :])
        norm = SigmaNorm.measure(grid, traj, 1.5, 2)
        assert norm.value == pytest.approx(float(grid.weighted_sobolev_norm(g, 2)), rel=1e-12)

    def test_peak_time(self, small_prop):
        """Test the time of the supremum is reported."""
        grid = small_prop.grid
        g = np.exp(-grid.r ** 2)
        times = np.linspace(0.0, 3.0, 7)
        traj = Trajectory(times, np.exp(-1.0 * times)[:, None] * g[None, :])
        assert SigmaNorm.measure(grid, traj, 2.0, 2).t_star == pytest.approx(3.0)

    def test_sigma_rate(self, plus3):
        """Test alpha = (k + 1/2) e0."""
        assert sigma_rate(plus3) == pytest.approx(3.5 * plus3.e0)


class TestPicardMap:
    """Test suite for the Picard forcing and map."""

    def test_quadratic_remainder_identity(self, plus3):
        """Test R(h + v) - R(v) = 2 v h + h^2 in d = 6."""
        grid = plus3.grid
        v = eval_vk(plus3, plus3.t_check + 2.0 / plus3.e0)
        h = 0.01 * plus3.W * np.exp(-grid.r ** 2 / 10)
        lhs = remainder_R(h + v, plus3.W, 2.0) - remainder_R(v, plus3.W, 2.0)
        assert np.allclose(lhs, 2 * v * h + h * h, rtol=1e-10, atol=1e-14)

    def test_zero_iterate(self, plus3, wide_prop):
        """Test Phi(0) is the tail of minus the dynamic residual."""
        times = TimeGrid.standard(plus3).times
        zero = Trajectory(times, np.zeros((times.size, plus3.grid.N)))
        minus_eps = Trajectory(times, -residual(plus3, times, include_static=False))
        assert np.allclose(picard_map(zero, plus3, wide_prop).values,
                           duhamel_tail(wide_prop, minus_eps).values, rtol=0, atol=1e-15)

    def test_validity_region(self, plus3):
        """Test iterates with |h + v| >= 3/4 W are rejected with the location."""
        times = TimeGrid.standard(plus3).times
        h = Trajectory(times, np.tile(2.0 * plus3.W, (times.size, 1)))
        with pytest.raises(ValidityRegionError) as exc:
            picard_forcing(h, plus3)
        assert exc.value.ratio >= 0.75

    def test_contraction(self, plus3, wide_prop):
        """Test Phi contracts two nearby iterates in the sigma norm."""
        grid = plus3.grid
        times = TimeGrid.standard(plus3).times
        shape = np.exp(-(times - times[0]) * sigma_rate(plus3))[:, None]
        g = plus3.W * np.exp(-grid.r ** 2 / 50)
        h1 = Trajectory(times, 0.01 * shape * g[None, :])
        h2 = Trajectory(times, 0.02 * shape * g[None, :])
        assert contraction_ratio(plus3, wide_prop, h1, h2) < 1.0


class TestFixedPoint:
    """Test suite for solve_fixed_point and the reconstructed solution."""

    def test_zero_amplitude(self, wide6, wide_eig6, wide_prop):
        """Test a = 0 converges at once to h = 0."""
        ps = build_profiles(0.0, 3, wide_eig6, wide6, t_check=0.0)
        result = solve_fixed_point(ps, TimeGrid(1.0, 12.0, 0.05), prop=wide_prop)
        assert result.iterations == 1
        assert np.all(result.h.values == 0.0)

    def test_converges_with_contraction(self, plus3_solution):
        """Test the iteration converges with successive ratios at most 1/2 after the second."""
        result = plus3_solution
        assert result.history[-1] <= 1e-10 * max(1.0, result.history[0])
        assert all(ratio <= 0.5 for ratio in result.ratios[1:])
        assert math.isfinite(result.tail_estimate)

    def test_negative_amplitude_converges(self, wide6, wide_eig6, wide_prop):
        """Test the a = -1 iteration contracts as well."""
        ps = build_profiles(-1.0, 3, wide_eig6, wide6)
        result = solve_fixed_point(ps, TimeGrid.standard(ps), prop=wide_prop)
        assert all(ratio <= 0.5 for ratio in result.ratios[1:])

    def test_stall_raises(self, plus3, wide_prop):
        """Test an iteration cap that is too small raises ContractionError."""
        with pytest.raises(ContractionError):
            solve_fixed_point(plus3, TimeGrid.standard(plus3), prop=wide_prop, max_iter=2)

    def test_decay_rates(self, plus3, plus3_solution):
        """Test W^a - W decays at e0 and h at least at (k + 1/2) e0."""
        rates = decay_rates(plus3, plus3_solution)
        assert rates['w'].rate == pytest.approx(plus3.e0, rel=0.05)
        assert rates['h'].rate >= 0.9 * sigma_rate(plus3)

    def test_iteration_floor(self, plus3_solution):
        """Test the floor is the last Picard step damped by e^{-alpha t}."""
        result = plus3_solution
        times = result.h.times[:5]
        expected = result.history[-1] * np.exp(-result.alpha * times)
        assert np.allclose(iteration_floor(result, times), expected, rtol=1e-14, atol=0.0)

    def test_decay_samples_clear_floor(self, plus3, plus3_solution):
        """Test every decay sample of the converged solution sits 10x above its floor."""
        for name, (points, floors) in decay_samples(plus3, plus3_solution).items():
            assert len(points) >= 5, name
            assert len(floors) == len(points)
            assert all(value > 10 * floor for (_, value), floor in zip(points, floors)), name

    def test_decay_rates_reject_unconverged_floor(self, plus3, plus3_solution):
        """Test an unconverged last Picard step rejects the window."""
        loose = replace(plus3_solution, history=plus3_solution.history + [1e300])
        with pytest.raises(ValueError, match="touches the floor"):
            decay_rates(plus3, loose)

    def test_pde_residual(self, plus3, plus3_solution):
        """Test the reconstructed solution solves the equation to the discretization floor."""
        u, _ = reconstruct(plus3, plus3_solution)
        res = pde_residual(plus3, u)
        norms = plus3.grid.lebesgue_norm(res.values, 2)
        tg = TimeGrid.standard(plus3)
        assert float(np.max(norms)) <= 10.0 * residual_floor(plus3, tg)

    def test_gradient_side(self, wide6, wide_eig6, plus3, plus3_solution):
        """Test ||grad W^a|| lies above ||grad W|| for a > 0 and below for a < 0."""
        grid = plus3.grid
        grad_W = float(grid.h1dot_norm(plus3.W))
        start = data_at_start(plus3, plus3_solution)
        assert float(grid.h1dot_norm(start.u)) > grad_W
        minus = build_profiles(-1.0, 3, wide_eig6, wide6)
        t0 = minus.t_check + 1.0 / minus.e0
        assert float(grid.h1dot_norm(eval_Wka(minus, t0))) < grad_W

    def test_energy_equals_ground_state(self, plus3, plus3_solution):
        """Test the conserved energy of W^a equals that of (W, 0)."""
        grid = plus3.grid
        evolver = WaveEvolver(grid, EvolverConfig(T_run=0.0))
        H_W = evolver.conserved_energy(State(0.0, plus3.W, grid.zeros()))[1]
        H_a = evolver.conserved_energy(data_at_start(plus3, plus3_solution))[1]
        assert H_a == pytest.approx(H_W, rel=1e-5)

    def test_matches_evolution(self, plus3, plus3_solution):
        """Test the leapfrog run from W^a(t_start) follows the fixed point for one e-folding."""
        grid = plus3.grid
        u, _ = reconstruct(plus3, plus3_solution)
        n = 40
        T_run = float(u.times[n] - u.times[0])
        out = evolve(grid, data_at_start(plus3, plus3_solution),
                     EvolverConfig(T_run=T_run, track_distance=False))
        gap = float(grid.h1dot_norm(out.final.u - u.values[n]))
        assert gap <= 1e-2 * float(grid.h1dot_norm(u.values[n] - plus3.W))

    def test_k_independence(self, wide6, wide_eig6, plus3, plus3_solution, wide_prop):
        """Test the k = 2 and k = 3 fixed points describe the same solution."""
        ps2 = build_profiles(1.0, 2, wide_eig6, wide6)
        tg = TimeGrid.standard(plus3)
        result2 = solve_fixed_point(ps2, tg, prop=wide_prop)
        u2, _ = reconstruct(ps2, result2)
        u3, _ = reconstruct(plus3, plus3_solution)
        assert k_independence(plus3.grid, u2.window(tg.t_start, tg.t_start + 3.0 / plus3.e0),
                              u3, plus3.W) <= 1e-2

    def test_to_dict(self, plus3_solution):
        """Test the JSON summary fields."""
        info = plus3_solution.to_dict()
        assert info['a'] == 1.0 and info['k'] == 3
        assert info['iterations'] == len(info['sigma_history'])


class TestTimeShift:
    """Test suite for time_shift_fit."""

    @pytest.fixture(scope="class")
    def trajectories(self, wide6, wide_eig6):
        out = {}
        for name, a in (('ref', 1.0), ('shifted', math.exp(wide_eig6.e0)), ('minus', -1.0)):
            ps = build_profiles(a, 3, wide_eig6, wide6)
            times = TimeGrid.standard(ps, t_start=ps.t_check + 1.3 / ps.e0).times
            out[name] = Trajectory(times, eval_Wka(ps, times))
        return out

    def test_recovers_log_amplitude(self, wide6, trajectories):
        """Test a = e^{e0} is W^1 shifted by one time unit."""
        fit = time_shift_fit(wide6.grid, trajectories['shifted'], trajectories['ref'])
        assert fit.T == pytest.approx(1.0, rel=0.02)
        assert fit.overlap >= 5

    def test_self_shift(self, wide6, trajectories):
        """Test a trajectory matches itself at T = 0."""
        fit = time_shift_fit(wide6.grid, trajectories['ref'], trajectories['ref'])
        assert abs(fit.T) < 1e-6

    def test_opposite_sign_does_not_match(self, wide6, trajectories):
        """Test W^- cannot be shifted onto W^+."""
        same = time_shift_fit(wide6.grid, trajectories['shifted'], trajectories['ref'])
        cross = time_shift_fit(wide6.grid, trajectories['minus'], trajectories['ref'])
        assert cross.residual >= 10 * same.residual

    def test_no_overlap(self, wide6, trajectories):
        """Test shifts too far apart to overlap are rejected."""
        ref = trajectories['ref']
        far = Trajectory(ref.times + 1000.0, ref.values)
        with pytest.raises(ValueError):
            time_shift_fit(wide6.grid, far, ref, max_shift=10.0)
