#!/usr/bin/env python3
"""
Ground state module for thresholdlab.
The explicit static solution W, energy, scaling, the nonlinearity and its
remainder R(v) around W.
"""

import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Dict, List

import numpy as np
from scipy.interpolate import PchipInterpolator

from radial_grid import RadialGrid, State


SERIES_BRANCH = 1e-2  # |s| below which J is summed as a power series
SERIES_TERMS = 9


@dataclass(frozen=True)
class Params:
    """Dimension and the energy-critical power p_c = (d+2)/(d-2)."""

    d: int

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 3:
            raise ValueError(f"dimension must be an integer >= 3, got {self.d}")

    @property
    def p_exact(self) -> Fraction:
        return Fraction(self.d + 2, self.d - 2)

    @property
    def p_c(self) -> float:
        return float(self.p_exact)

    @property
    def integer_power(self) -> bool:
        return self.p_exact.denominator == 1

    @property
    def critical_exponent(self) -> float:
        """2d/(d-2), the Sobolev exponent of the potential energy."""
        return 2.0 * self.d / (self.d - 2)


@dataclass(frozen=True)
class EnergyBreakdown:
    """The three pieces of the conserved energy."""

    kinetic_t: float
    kinetic_x: float
    potential: float

    @property
    def total(self) -> float:
        return self.kinetic_t + self.kinetic_x + self.potential

    def to_dict(self) -> Dict[str, float]:
        data = asdict(self)
        data['total'] = self.total
        return data


# ----------------------------------------------------------------------
# W and its symmetries
# ----------------------------------------------------------------------

def ground_state_profile(d: int, r) -> np.ndarray:
    """W(r) = (1 + r^2/(d(d-2)))^{-(d-2)/2} at arbitrary radii."""
    r = np.asarray(r, dtype=np.float64)
    return (1.0 + r * r / (d * (d - 2))) ** (-(d - 2) / 2.0)


def ground_state_derivative(d: int, r) -> np.ndarray:
    """W'(r) = -(r/d)(1 + r^2/(d(d-2)))^{-d/2}."""
    r = np.asarray(r, dtype=np.float64)
    return -(r / d) * (1.0 + r * r / (d * (d - 2))) ** (-d / 2.0)


def ground_state(grid: RadialGrid) -> np.ndarray:
    """Evaluate W on the grid nodes."""
    return ground_state_profile(grid.d, grid.r)


def far_field_value(grid: RadialGrid) -> float:
    """W(R), the Dirichlet value W-based fields carry at the outer radius."""
    return float(ground_state_profile(grid.d, grid.R))


def scaled_ground_state(grid: RadialGrid, lam: float) -> np.ndarray:
    """Analytic W_lambda(r) = lambda^{-(d-2)/2} W(r/lambda)."""
    if not lam > 0:
        raise ValueError(f"scale must be positive, got {lam}")
    return lam ** (-(grid.d - 2) / 2.0) * ground_state_profile(grid.d, grid.r / lam)


def scaling_generator(grid: RadialGrid) -> np.ndarray:
    """Lambda W = (d-2)/2 W + r W', the generator of the scaling symmetry."""
    d = grid.d
    return 0.5 * (d - 2) * ground_state(grid) + grid.r * ground_state_derivative(d, grid.r)


# ----------------------------------------------------------------------
# nonlinearity
# ----------------------------------------------------------------------

def nonlinearity(u, p_c: float) -> np.ndarray:
    """f(u) = |u|^{p_c - 1} u."""
    u = np.asarray(u, dtype=np.float64)
    if p_c == 2.0:
        return np.abs(u) * u
    return np.abs(u) ** (p_c - 1.0) * u


def binomial_series(p_c: float, order: int) -> List[float]:
    """Coefficients c_0..c_order of (1+s)^{p_c} about s = 0."""
    coeffs = [1.0]
    for j in range(1, order + 1):
        coeffs.append(coeffs[-1] * (p_c - j + 1) / j)
    return coeffs


def J_function(s, p_c: float) -> np.ndarray:
    """
    J(s) = |1+s|^{p_c-1}(1+s) - p_c s - 1 - |s|^{p_c-1} s.

    Small |s| is summed as a power series so the leading s^2 behaviour
    survives cancellation.
    """
    s = np.asarray(s, dtype=np.float64)
    out = nonlinearity(1.0 + s, p_c) - p_c * s - 1.0 - nonlinearity(s, p_c)
    small = np.abs(s) < SERIES_BRANCH
    if np.any(small):
        ss = s[small]
        coeffs = binomial_series(p_c, SERIES_TERMS)
        series = np.zeros_like(ss)
        for c in reversed(coeffs[2:]):
            series = (series + c) * ss
        series *= ss
        out = np.array(out, copy=True)
        out[small] = series - nonlinearity(ss, p_c)
    return out


def J_bound_constant(s, p_c: float) -> float:
    """Largest ratio |J(s)| / |s|^{p_c} over the samples with 0 < |s| < 1/2."""
    s = np.asarray(s, dtype=np.float64)
    s = s[(np.abs(s) < 0.5) & (s != 0.0)]
    if s.size == 0:
        return 0.0
    return float(np.max(np.abs(J_function(s, p_c)) / np.abs(s) ** p_c))


def J_bound_holds(s, p_c: float, constant: float = 2.0) -> bool:
    """Check |J(s)| <= constant * |s|^{p_c} on the |s| < 1/2 branch."""
    return J_bound_constant(s, p_c) <= constant * (1.0 + 1e-9)


def remainder_R(v, W, p_c: float) -> np.ndarray:
    """
    R(v) = |v+W|^{p_c-1}(v+W) - p_c W^{p_c-1} v - W^{p_c}.

    Evaluated as W^{p_c} J(v/W) + |v|^{p_c-1} v, which equals the
    definition for W > 0 and stays accurate when v is tiny.
    """
    v = np.asarray(v, dtype=np.float64)
    W = np.asarray(W, dtype=np.float64)
    return W ** p_c * J_function(v / W, p_c) + nonlinearity(v, p_c)


# ----------------------------------------------------------------------
# energy and diagnostics
# ----------------------------------------------------------------------

def energy(grid: RadialGrid, state: State) -> EnergyBreakdown:
    """
    Energy of a state split into its three pieces.

    Args:
        grid: Grid the state lives on
        state: (t, u, u_t)

    Returns:
        EnergyBreakdown with kinetic_t, kinetic_x and potential
    """
    params = Params(grid.d)
    q = params.critical_exponent
    kinetic_t = 0.5 * float(grid.lebesgue_norm(state.ut, 2)) ** 2
    kinetic_x = 0.5 * float(grid.h1dot_norm(state.u)) ** 2
    potential = -float(np.sum(grid.weights * np.abs(grid.check_field(state.u)) ** q)) / q
    return EnergyBreakdown(kinetic_t, kinetic_x, potential)


def discrete_energy(grid: RadialGrid, state: State, boundary_value: float = 0.0) -> EnergyBreakdown:
    """Energy with the Dirichlet form in place of ||grad u||^2; conserved by the leapfrog scheme."""
    q = Params(grid.d).critical_exponent
    kinetic_t = 0.5 * float(grid.lebesgue_norm(state.ut, 2)) ** 2
    kinetic_x = 0.5 * float(grid.dirichlet_form(state.u, boundary_value))
    potential = -float(np.sum(grid.weights * np.abs(grid.check_field(state.u)) ** q)) / q
    return EnergyBreakdown(kinetic_t, kinetic_x, potential)


def ground_state_energy(grid: RadialGrid) -> float:
    """E(W, 0) on the grid."""
    W = ground_state(grid)
    return energy(grid, State(0.0, W, np.zeros_like(W))).total


def static_residual(grid: RadialGrid) -> float:
    """
    ||Delta W + W^{p_c}||_2 / ||W^{p_c}||_2 on the grid.

    The boundary cell is excluded; its local truncation error is O(1)
    for any cell-centered Dirichlet closure.
    """
    p_c = Params(grid.d).p_c
    W = ground_state(grid)
    defect = grid.radial_laplacian(W, far_field_value(grid)) + nonlinearity(W, p_c)
    w = grid.weights[:-1]
    num = math.sqrt(float(np.sum(w * defect[:-1] ** 2)))
    den = math.sqrt(float(np.sum(w * nonlinearity(W, p_c)[:-1] ** 2)))
    return num / den


def pohozaev_defect(grid: RadialGrid) -> Dict[str, float]:
    """Both sides of ||grad W||_2^2 = ||W||_{2d/(d-2)}^{2d/(d-2)} and their relative gap."""
    params = Params(grid.d)
    W = ground_state(grid)
    gradient = float(grid.h1dot_norm(W)) ** 2
    potential = float(np.sum(grid.weights * W ** params.critical_exponent))
    return {
        'gradient_sq': gradient,
        'potential': potential,
        'relative_defect': abs(gradient - potential) / gradient,
    }


def sobolev_ratio(grid: RadialGrid, f) -> float:
    """||f||_{2d/(d-2)} / ||grad f||_2; rejects the zero field."""
    f = grid.check_field(f)
    grad = float(grid.h1dot_norm(f))
    if grad == 0.0:
        raise ValueError("sobolev ratio is undefined for the zero field")
    return float(grid.lebesgue_norm(f, Params(grid.d).critical_exponent)) / grad


# ----------------------------------------------------------------------
# scaling
# ----------------------------------------------------------------------

def _even_interpolator(grid: RadialGrid, values: np.ndarray, edge_value: float) -> PchipInterpolator:
    """Monotone cubic through the nodes, reflected evenly across r = 0 and pinned at r = R."""
    r = np.concatenate([-grid.r[::-1], grid.r, [grid.R]])
    y = np.concatenate([values[::-1], values, [edge_value]])
    return PchipInterpolator(r, y, extrapolate=False)


def _resample(grid: RadialGrid, values: np.ndarray, points: np.ndarray, tail: bool) -> np.ndarray:
    d = grid.d
    if tail:
        edge = values[-1] * (grid.r[-1] / grid.R) ** (d - 2)
    else:
        edge = 0.0
    interp = _even_interpolator(grid, values, edge)
    out = np.zeros_like(points)
    inside = points <= grid.R
    out[inside] = interp(points[inside])
    if tail:
        outside = ~inside
        out[outside] = edge * (grid.R / points[outside]) ** (d - 2)
    return out


def scale(grid: RadialGrid, state: State, lam: float, far_field_tail: bool = False,
          max_loss: float = 1e-2) -> State:
    """
    Apply the scaling symmetry at fixed t.

    u -> lam^{-(d-2)/2} u(r/lam) and u_t -> lam^{-d/2} u_t(r/lam), resampled
    onto the same grid by monotone cubic interpolation.

    Args:
        grid: Grid the state lives on
        state: State to rescale
        lam: Positive scale factor
        far_field_tail: Continue u beyond R by its harmonic tail u(R)(R/r)^{d-2}
        max_loss: With far_field_tail, largest fraction of ||grad u||^2 allowed
            to be pushed beyond R

    Raises:
        ValueError: lam <= 0, or the rescaled field does not fit in [0, R]
    """
    if not lam > 0:
        raise ValueError(f"scale must be positive, got {lam}")
    if lam == 1.0:
        return state.copy()

    d = grid.d
    u = grid.check_field(state.u)
    ut = grid.check_field(state.ut)

    if lam > 1.0:
        if far_field_tail:
            grad_sq = grid.weights * grid.radial_derivative(u) ** 2
            total = float(np.sum(grad_sq))
            lost = float(np.sum(grad_sq[grid.r > grid.R / lam]))
            if total > 0 and lost / total > max_loss:
                raise ValueError(f"scaling by {lam} pushes {lost / total:.2%} of ||grad u||^2 beyond R")
        else:
            support = max(grid.effective_support(u), grid.effective_support(ut))
            if lam * support > grid.R:
                raise ValueError(f"rescaled support {lam * support:.4g} exceeds R = {grid.R:.4g}")

    points = grid.r / lam
    u_new = lam ** (-(d - 2) / 2.0) * _resample(grid, u, points, far_field_tail)
    ut_new = lam ** (-d / 2.0) * _resample(grid, ut, points, False)
    return State(state.t, u_new, ut_new)


if __name__ == '__main__':
    from radial_grid import make_grid

    print("=" * 70)
    print("Ground state checks (d = 6)")
    print("=" * 70)
    grid = make_grid(6, 60.0, 6000)
    res = static_residual(grid)
    poh = pohozaev_defect(grid)
    E = ground_state_energy(grid)
    print(f"{'✓' if res <= 1e-4 else '✗'} static residual {res:.3e}")
    print(f"{'✓' if poh['relative_defect'] <= 1e-3 else '✗'} Pohozaev defect {poh['relative_defect']:.3e}")
    print(f"  E(W,0) = {E:.6f}, ||grad W||^2/d = {poh['gradient_sq'] / 6:.6f}")
