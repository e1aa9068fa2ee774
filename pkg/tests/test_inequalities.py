"""Tests for inequalities.py"""
import math

import numpy as np
import pytest

from duhamel import build_propagator
from inequalities import (
    bilinear_constant, dual_exponent, embedding_cases, embedding_constant, free_flow_growth,
    gain_of_decay_constant, multiplicative_constant, radial_derivatives, sigma_duhamel_bound,
    sup_derivatives, superlinearity, superlinearity_constant,
)
from profiles import eval_vk
from radial_grid import Trajectory, make_grid
from suites import bump_suite


@pytest.fixture(scope="module")
def grid():
    return make_grid(6, 20.0, 400)


@pytest.fixture(scope="module")
def fields(grid):
    return bump_suite(grid, seed=11, size=40)


class TestHelpers:
    """Test suite for derivative helpers."""

    def test_zeroth_derivative(self, grid, fields):
        """Test k = 0 returns the field."""
        assert np.array_equal(radial_derivatives(grid, fields[0], 0), fields[0])

    def test_sup_derivatives_of_constant_scale(self, grid, fields):
        """Test the W^{m,inf} norm is homogeneous."""
        assert sup_derivatives(grid, 3.0 * fields[0], 2) == pytest.approx(3.0 * sup_derivatives(grid, fields[0], 2))

    def test_dual_exponent(self):
        """Test 2d/(d+2) in d = 6."""
        assert dual_exponent(6) == pytest.approx(1.5)


class TestEmbedding:
    """Test suite for the H^{m,m} embedding sampler."""

    def test_cases_by_dimension(self):
        """Test which (k1, k2) fit below m = 4."""
        assert embedding_cases(6) == [(0, 0)]
        assert embedding_cases(7) == []
        assert set(embedding_cases(3)) == {(0, 0), (0, 1), (1, 0)}

    def test_uniform_constant(self, grid, fields):
        """Test one constant covers the suite."""
        uc = embedding_constant(grid, fields, 0, 0)
        assert uc.count == 40
        assert uc.passed
        assert 0 < uc.constant < math.inf

    def test_zero_field_excluded(self, grid, fields):
        """Test a zero field does not enter the ratios."""
        with_zero = np.vstack([fields[:10], np.zeros((1, grid.N))])
        assert embedding_constant(grid, with_zero, 0, 0).count == 10


class TestBilinear:
    """Test suite for the bilinear sampler."""

    def test_leibniz_bound(self, grid, fields):
        """Test the constant stays below the Leibniz-rule bound 2^{m+1}."""
        uc = bilinear_constant(grid, fields, m=2)
        assert uc.passed
        assert uc.constant <= 2 ** 3


class TestMultiplicative:
    """Test suite for the power sampler."""

    def test_finite_constant(self, grid, fields):
        """Test the constant is finite and amplitude independent."""
        uc = multiplicative_constant(grid, fields, j=2)
        scaled = multiplicative_constant(grid, 4.0 * fields, j=2)
        assert math.isfinite(uc.constant)
        assert scaled.constant == pytest.approx(uc.constant, rel=1e-10)

    def test_rejects_linear_power(self, grid, fields):
        """Test j < 2 is rejected."""
        with pytest.raises(ValueError):
            multiplicative_constant(grid, fields, j=1)


class TestSuperlinearity:
    """Test suite for the scaling law of R."""

    def test_slope_d6(self, grid, fields):
        """Test the log-log slope reaches p_c - 0.1 in d = 6."""
        fit = superlinearity(grid, fields[0])
        assert fit.slope >= 1.9
        assert fit.passed

    def test_slope_d7(self):
        """Test the slope for a non-integer power at small scales."""
        grid7 = make_grid(7, 20.0, 400)
        phi = bump_suite(grid7, seed=11, size=2)[0]
        fit = superlinearity(grid7, phi, scales=np.logspace(-4.0, -2.0, 9))
        assert fit.slope >= 1.8 - 0.1

    def test_rejects_zero(self, grid):
        """Test the zero field is rejected."""
        with pytest.raises(ValueError):
            superlinearity(grid, grid.zeros())

    def test_suite_constant(self, grid, fields):
        """Test the R / ||grad v||^{p_c} ratios admit one constant."""
        uc = superlinearity_constant(grid, fields)
        assert uc.passed
        assert math.isfinite(uc.constant)


class TestGainOfDecay:
    """Test suite for the gain-of-decay constant."""

    def test_constant_over_profiles(self, profiles6):
        """Test the ratio stays finite along W_k^a and covers every sample."""
        grid = profiles6.grid
        times = profiles6.t_check + np.array([2.0, 3.0, 4.0]) / profiles6.e0
        w = Trajectory(times, eval_vk(profiles6, times))
        g = bump_suite(grid, seed=5, size=6)
        uc = gain_of_decay_constant(grid, w, profiles6.e0, g)
        assert uc.count == 6 * 3 * 3
        assert 0 < uc.constant < math.inf


class TestFreeFlow:
    """Test suite for H^{m,m} growth and the sigma-norm Duhamel bound."""

    @pytest.fixture(scope="class")
    def prop(self):
        return build_propagator(make_grid(6, 20.0, 200))

    def test_growth_exponent(self, prop):
        """Test the fitted growth exponents are finite and non-negative."""
        g = bump_suite(prop.grid, seed=2, size=8)
        uc = free_flow_growth(prop, g, np.linspace(0.0, 5.0, 6))
        assert 0.0 <= uc.constant < math.inf
        assert uc.count == 8

    def test_growth_needs_positive_time(self, prop):
        """Test an all-zero time list is rejected."""
        with pytest.raises(ValueError):
            free_flow_growth(prop, bump_suite(prop.grid, seed=2, size=2), [0.0])

    def test_duhamel_bound(self, prop):
        """Test the measured tail gain stays below 1 / (alpha - C)."""
        g = bump_suite(prop.grid, seed=2, size=8)
        growth = free_flow_growth(prop, g, np.linspace(0.0, 5.0, 11)).constant
        result = sigma_duhamel_bound(prop, g, alpha=growth + 2.0, growth=growth)
        assert result.passed
        assert result.bound == pytest.approx(0.5)
