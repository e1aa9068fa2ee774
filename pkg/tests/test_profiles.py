"""Tests for profiles.py"""
import math

import numpy as np
import pytest

from ground_state import Params, ground_state
from linearized_operator import shifted_solve
from profiles import (
    ExpansionDomainError, build_profiles, cancellation_defects, direct_residual,
    eval_Wka, eval_Wka_t, eval_vk, fit_decay_rate, rate_window, residual,
    residual_rate, roundoff_floor, static_defect, taylor_coeffs,
)


class TestTaylorCoeffs:
    """Test suite for the expansion coefficients of (1+s)^{p_c}."""

    def test_d6_polynomial(self):
        """Test a_2 = 1 and a_3 = a_4 = 0 when p_c = 2."""
        coeffs = taylor_coeffs(Params(6), 4)
        assert coeffs.coefficient(2) == 1.0
        assert coeffs.coefficient(3) == 0.0
        assert coeffs.coefficient(4) == 0.0

    def test_general_second_coefficient(self):
        """Test a_2 = p_c (p_c - 1) / 2."""
        for d in (5, 7, 8):
            p = Params(d).p_c
            assert taylor_coeffs(Params(d), 3).coefficient(2) == pytest.approx(p * (p - 1) / 2)

    def test_d7(self):
        """Test a_2 = 18/25 in d = 7."""
        assert taylor_coeffs(Params(7), 2).coefficient(2) == pytest.approx(18 / 25)

    def test_bounded(self):
        """Test |a_j| <= 1 for d = 7 up to order 12."""
        coeffs = taylor_coeffs(Params(7), 12)
        assert max(abs(c) for c in coeffs.a[2:]) <= 1.0

    def test_rejects_low_order(self):
        """Test J_max < 2 is rejected."""
        with pytest.raises(ValueError):
            taylor_coeffs(Params(6), 1)


class TestBuildProfiles:
    """Test suite for the order-by-order construction."""

    def test_first_order(self, op6, eig6):
        """Test k = 1 gives only Phi_1 = a Y."""
        ps = build_profiles(0.5, 1, eig6, op6)
        assert len(ps.phis) == 1
        assert np.array_equal(ps.phis[0], 0.5 * eig6.Y)

    def test_second_order_d6(self, op6, eig6):
        """Test Phi_2 = (L + 4 e0^2)^{-1} (a^2 Y^2) when p_c = 2."""
        ps = build_profiles(1.0, 2, eig6, op6)
        expected = shifted_solve(op6, 4 * eig6.e0 ** 2, eig6.Y ** 2, eig6.e0)
        assert np.allclose(ps.phis[1], expected, rtol=1e-12, atol=1e-15)

    def test_sign_covariance(self, op6, eig6, profiles6):
        """Test Phi_j(-a) = (-1)^j Phi_j(a) for j <= 3."""
        minus = build_profiles(-1.0, 3, eig6, op6)
        for j, (pm, pp) in enumerate(zip(minus.phis, profiles6.phis), start=1):
            assert np.allclose(pm, (-1) ** j * pp, rtol=1e-10, atol=1e-14)

    def test_amplitude_homogeneity(self, op6, eig6, profiles6):
        """Test Phi_j(a) = a^j Phi_j(1) in d = 6."""
        half = build_profiles(0.5, 3, eig6, op6)
        for j, (ph, p1) in enumerate(zip(half.phis, profiles6.phis), start=1):
            assert np.allclose(ph, 0.5 ** j * p1, rtol=1e-10, atol=1e-15)

    def test_profiles_decay_before_boundary(self, profiles6):
        """Test each Phi_j falls below 1e-8 of its peak before r = R."""
        for phi in profiles6.phis:
            assert abs(phi[-1]) < 1e-8 * np.abs(phi).max()

    def test_cancellation(self, profiles6):
        """Test each order of the recursion cancels to solver tolerance."""
        assert max(cancellation_defects(profiles6)) < 1e-8

    def test_domain_check(self, op6, eig6):
        """Test a check time deep in the past is rejected."""
        with pytest.raises(ExpansionDomainError):
            build_profiles(1.0, 2, eig6, op6, t_check=-5.0 / eig6.e0)

    def test_rejects_order_zero(self, op6, eig6):
        """Test k < 1 is rejected."""
        with pytest.raises(ValueError):
            build_profiles(1.0, 0, eig6, op6)

    def test_d7_truncation_report(self, op7, eig7):
        """Test non-integer p_c records a truncation magnitude per order."""
        ps = build_profiles(1.0, 3, eig7, op7)
        assert set(ps.truncation_report) == {2, 3}
        assert all(0.0 <= value < 0.5 for value in ps.truncation_report.values())


class TestEvaluation:
    """Test suite for W_k^a, v_k and their derivatives."""

    def test_zero_amplitude(self, op6, eig6):
        """Test a = 0 gives W at every time."""
        ps = build_profiles(0.0, 3, eig6, op6)
        W = ground_state(op6.grid)
        for t in (-1.0, 0.0, 5.0):
            assert np.array_equal(eval_Wka(ps, t), W)

    def test_converges_to_W(self, profiles6):
        """Test ||W_k^a(t) - W|| <= e^{-e0 t} sum ||Phi_j|| for t >= 0."""
        grid = profiles6.grid
        bound = sum(grid.lebesgue_norm(phi, 2) for phi in profiles6.phis)
        for t in (1.0, 5.0, 20.0):
            gap = grid.lebesgue_norm(eval_Wka(profiles6, t) - profiles6.W, 2)
            assert gap <= math.exp(-profiles6.e0 * t) * bound

    def test_time_translation(self, profiles6):
        """Test eval_Wka(t + s) = W + sum e^{-j e0 s} e^{-j e0 t} Phi_j."""
        t, s = 2.0, 0.7
        e0 = profiles6.e0
        expected = profiles6.W + sum(math.exp(-j * e0 * (t + s)) * phi
                                     for j, phi in enumerate(profiles6.phis, start=1))
        assert np.allclose(eval_Wka(profiles6, t + s), expected, rtol=1e-13)

    def test_vectorized_times(self, profiles6):
        """Test an array of times returns one row per time."""
        times = np.array([1.0, 2.0, 3.0])
        rows = eval_vk(profiles6, times)
        assert rows.shape == (3, profiles6.grid.N)
        assert np.allclose(rows[1], eval_vk(profiles6, 2.0))

    def test_time_derivative(self, profiles6):
        """Test the analytic d/dt against a centered difference."""
        t, dt = 3.0, 1e-5
        numeric = (eval_Wka(profiles6, t + dt) - eval_Wka(profiles6, t - dt)) / (2 * dt)
        assert np.allclose(eval_Wka_t(profiles6, t), numeric, atol=1e-9)

    def test_vk_weighted_norm_rate(self, profiles6):
        """Test ||v_k(t)||_{H^{2,2}} decays at rate e0."""
        grid = profiles6.grid
        times = rate_window(profiles6.e0, offset=profiles6.t_check)
        samples = [(t, grid.weighted_sobolev_norm(eval_vk(profiles6, t), 2)) for t in times]
        assert fit_decay_rate(samples).rate == pytest.approx(profiles6.e0, rel=0.05)

    def test_vk_below_half_W(self, profiles6):
        """Test |v_k| < W/2 once t exceeds the check time by one e-folding."""
        t = profiles6.t_check + 1.0 / profiles6.e0
        assert np.all(np.abs(eval_vk(profiles6, t)) < 0.5 * profiles6.W)


class TestResidual:
    """Test suite for eps_k^a and its decay."""

    def test_zero_amplitude_is_static(self, op6, eig6):
        """Test a = 0 leaves only the static defect of W."""
        ps = build_profiles(0.0, 2, eig6, op6)
        assert np.allclose(residual(ps, 1.0), static_defect(op6.grid), atol=1e-15)
        assert np.all(residual(ps, 1.0, include_static=False) == 0.0)

    def test_matches_direct_definition(self, profiles6):
        """Test the assembled residual equals the literal definition."""
        grid = profiles6.grid
        t = profiles6.t_check + 2.0 / profiles6.e0
        gap = residual(profiles6, t) - direct_residual(profiles6, t)
        assert grid.lebesgue_norm(gap, 2) < 1e-8

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_decay_rate(self, op6, eig6, k):
        """Test ||eps_k|| decays at (k + 1) e0 within 5%."""
        fit = residual_rate(build_profiles(1.0, k, eig6, op6))
        assert fit.rate == pytest.approx((k + 1) * eig6.e0, rel=0.05)
        assert fit.residual < 0.05

    def test_monotone_in_order(self, op6, eig6):
        """Test adding an order shrinks the residual at a late time."""
        norms = []
        for k in (1, 2, 3):
            ps = build_profiles(1.0, k, eig6, op6)
            t = ps.t_check + 6.0 / eig6.e0
            norms.append(op6.grid.lebesgue_norm(residual(ps, t, include_static=False), 2))
        assert norms[0] > norms[1] > norms[2]


class TestFitDecayRate:
    """Test suite for the log-linear rate fit."""

    def test_exact_exponential(self):
        """Test c e^{-gamma t} returns gamma with negligible residual."""
        t = np.linspace(0, 5, 11)
        fit = fit_decay_rate(list(zip(t, 3.0 * np.exp(-1.7 * t))))
        assert fit.rate == pytest.approx(1.7, rel=1e-12)
        assert fit.residual < 1e-12
        assert fit.t_a == 0.0 and fit.t_b == 5.0

    def test_too_few_samples(self):
        """Test fewer than five samples are rejected."""
        with pytest.raises(ValueError):
            fit_decay_rate([(0, 1.0), (1, 0.5), (2, 0.25), (3, 0.125)])

    def test_nonpositive_values(self):
        """Test zero or negative values are rejected."""
        with pytest.raises(ValueError):
            fit_decay_rate([(t, 1.0 - t) for t in range(5)])

    def test_floor(self):
        """Test a window touching the floor is rejected."""
        samples = [(t, math.exp(-t)) for t in range(6)]
        with pytest.raises(ValueError):
            fit_decay_rate(samples, floor=math.exp(-5) / 2)

    def test_per_sample_floor(self):
        """Test one floor per sample rejects only where a value comes within 10x of its own floor."""
        samples = [(t, math.exp(-t)) for t in range(6)]
        floors = [1e-6] * 5 + [math.exp(-5) / 5]
        with pytest.raises(ValueError, match="touches the floor at t = 5"):
            fit_decay_rate(samples, floor=floors)
        fit = fit_decay_rate(samples, floor=[1e-6] * 6)
        assert fit.rate == pytest.approx(1.0, rel=1e-12)


class TestRoundoffFloor:
    """Test suite for the residual round-off floor."""

    def test_below_residual_in_fit_window(self, op6, eig6):
        """Test the floor sits far below ||eps_k|| across the default window."""
        ps = build_profiles(1.0, 2, eig6, op6)
        times = rate_window(ps.e0, offset=ps.t_check)
        norms = op6.grid.lebesgue_norm(residual(ps, times, include_static=False), 2)
        floors = roundoff_floor(ps, times)
        assert floors.shape == times.shape
        assert np.all(floors > 0)
        assert np.all(norms > 10 * floors)

    def test_late_window_rejected(self, op6, eig6):
        """Test a window where ||eps_3|| has sunk into round-off is rejected."""
        ps = build_profiles(1.0, 3, eig6, op6)
        times = ps.t_check + np.linspace(20.0, 25.0, 8) / ps.e0
        with pytest.raises(ValueError, match="floor"):
            residual_rate(ps, times)
