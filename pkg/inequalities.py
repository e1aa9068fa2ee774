#!/usr/bin/env python3
"""
Sampled inequality checks for thresholdlab.

Each check evaluates both sides of an estimate over a seeded field suite
and reduces the ratios to one suite-wide constant (see suites.uniform_constant)
or, for scaling laws, to a fitted log-log slope.
"""

import math
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from duhamel import SigmaNorm, SpectralPropagator, duhamel_tail
from ground_state import Params, ground_state, remainder_R
from radial_grid import M_MAX, RadialGrid, Trajectory
from suites import UniformConstant, ratios, uniform_constant


SUPERLINEAR_SCALES = tuple(np.logspace(-4.0, -1.0, 13))
GAIN_AMPLITUDES = (1e-3, 1e-2, 1e-1)
SLOPE_MARGIN = 0.1


def radial_derivatives(grid: RadialGrid, f, k: int) -> np.ndarray:
    """d^k f / dr^k with the parity alternation of weighted_sobolev_norm."""
    out = grid.check_field(f)
    for j in range(k):
        out = grid.radial_derivative(out, odd=(j % 2 == 1))
    return out


def sup_derivatives(grid: RadialGrid, f, m: int) -> float:
    """W^{m,inf} norm: max over j <= m of ||d^j f||_inf."""
    return max(float(np.max(np.abs(radial_derivatives(grid, f, j)))) for j in range(m + 1))


def dual_exponent(d: int) -> float:
    """2d / (d + 2), the Lebesgue exponent dual to the critical one."""
    return 2.0 * d / (d + 2.0)


# ----------------------------------------------------------------------
# H^{m,m} samplers
# ----------------------------------------------------------------------

def embedding_cases(d: int, m: int = M_MAX) -> List[Tuple[int, int]]:
    """(k1, k2) with k1 + k2 + d/2 + 1 <= m."""
    budget = m - d / 2.0 - 1.0
    return [(k1, k2) for k1 in range(m + 1) for k2 in range(m + 1) if k1 + k2 <= budget]


def embedding_constant(grid: RadialGrid, fields: np.ndarray, k1: int, k2: int,
                       m: int = M_MAX) -> UniformConstant:
    """Suite constant for ||<r>^k1 d^k2 f||_inf <= C ||f||_{H^{m,m}}."""
    num = [float(np.max(np.abs(grid.bracket ** k1 * radial_derivatives(grid, f, k2)))) for f in fields]
    den = [float(grid.weighted_sobolev_norm(f, m)) for f in fields]
    return uniform_constant(ratios(num, den))


def bilinear_constant(grid: RadialGrid, fields: np.ndarray, m: int = 2) -> UniformConstant:
    """Suite constant for ||f g||_{H^{m,m}} <= C ||f||_{W^{m,inf}} ||g||_{H^{m,m}}, g the next field."""
    n = len(fields)
    num, den = [], []
    for i in range(n):
        f, g = fields[i], fields[(i + 1) % n]
        num.append(float(grid.weighted_sobolev_norm(f * g, m)))
        den.append(sup_derivatives(grid, f, m) * float(grid.weighted_sobolev_norm(g, m)))
    return uniform_constant(ratios(num, den))


def multiplicative_constant(grid: RadialGrid, fields: np.ndarray, j: int = 2, C: float = 0.5,
                            m: int = 2) -> UniformConstant:
    """
    Suite constant for ||<r>^{Cj} h^j||_{H^{m,m}} <= K j^m ||h||_{H^{m,m}}^j.

    The sampled m is capped at M_MAX, below the range where the estimate
    is proved; the constant is reported, not asserted.
    """
    if j < 2:
        raise ValueError(f"power must be >= 2, got {j}")
    weight = grid.bracket ** (C * j)
    num = [float(grid.weighted_sobolev_norm(weight * f ** j, m)) for f in fields]
    den = [j ** m * float(grid.weighted_sobolev_norm(f, m)) ** j for f in fields]
    return uniform_constant(ratios(num, den))


# ----------------------------------------------------------------------
# super-linearity of R and gain of decay
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class SlopeFit:
    """Least-squares slope of log ||R(s phi)|| against log s."""

    slope: float
    target: float
    scales: Tuple[float, ...]
    norms: Tuple[float, ...]

    @property
    def passed(self) -> bool:
        return self.slope >= self.target - SLOPE_MARGIN

    def to_dict(self) -> Dict[str, object]:
        return {'slope': self.slope, 'target': self.target, 'margin': SLOPE_MARGIN,
                'passed': self.passed}


def superlinearity(grid: RadialGrid, phi, scales: Sequence[float] = SUPERLINEAR_SCALES) -> SlopeFit:
    """
    Fit ||R(s phi)||_{L^{2d/(d+2)}} ~ s^slope with phi normalized to max|phi| = 1.

    Raises:
        ValueError: phi is identically zero
    """
    phi = grid.check_field(phi)
    peak = float(np.max(np.abs(phi)))
    if peak == 0.0:
        raise ValueError("superlinearity needs a nonzero field")
    phi = phi / peak
    W = ground_state(grid)
    p_c = Params(grid.d).p_c
    q = dual_exponent(grid.d)
    norms = [float(grid.lebesgue_norm(remainder_R(s * phi, W, p_c), q)) for s in scales]
    slope = float(np.polyfit(np.log(scales), np.log(norms), 1)[0])
    return SlopeFit(slope=slope, target=p_c, scales=tuple(float(s) for s in scales),
                    norms=tuple(norms))


def superlinearity_constant(grid: RadialGrid, fields: np.ndarray, s: float = 1e-2) -> UniformConstant:
    """Suite constant for ||R(v)||_{L^{2d/(d+2)}} <= C ||grad v||_2^{p_c}, v = s phi / max|phi|."""
    W = ground_state(grid)
    p_c = Params(grid.d).p_c
    q = dual_exponent(grid.d)
    num, den = [], []
    for f in fields:
        v = s * f / float(np.max(np.abs(f)))
        num.append(float(grid.lebesgue_norm(remainder_R(v, W, p_c), q)))
        den.append(float(grid.h1dot_norm(v)) ** p_c)
    return uniform_constant(ratios(num, den))


def gain_of_decay_constant(grid: RadialGrid, w: Trajectory, e0: float, fields: np.ndarray,
                           amplitudes: Sequence[float] = GAIN_AMPLITUDES) -> UniformConstant:
    """
    Suite constant for
    ||R(h + w) - R(w)||_{L^{2d/(d+2)}} <= C (||grad h||^{p_c} + ||grad h|| e^{-(p_c-1) e0 t})
    with h = eta W g / max|g| over the suite, the amplitudes eta and the samples of w.
    """
    W = ground_state(grid)
    p_c = Params(grid.d).p_c
    q = dual_exponent(grid.d)
    num, den = [], []
    for g in fields:
        shape = W * g / float(np.max(np.abs(g)))
        for eta in amplitudes:
            h = eta * shape
            grad_h = float(grid.h1dot_norm(h))
            for t, wt in zip(w.times, w.values):
                diff = remainder_R(h + wt, W, p_c) - remainder_R(wt, W, p_c)
                num.append(float(grid.lebesgue_norm(diff, q)))
                den.append(grad_h ** p_c + grad_h * math.exp(-(p_c - 1.0) * e0 * t))
    return uniform_constant(ratios(num, den))


# ----------------------------------------------------------------------
# free flow in H^{m,m} and the sigma-norm Duhamel bound
# ----------------------------------------------------------------------

def free_flow_growth(prop: SpectralPropagator, fields: np.ndarray, times: Sequence[float],
                     m: int = 2) -> UniformConstant:
    """
    Per-field exponent C with ||u(t)||_{H^{m,m}} <= (||grad f|| + ||g|| + ||f||)_{H^{m,m}} e^{C t},
    data (f, g) = (fields[i], fields[i+1] / 2), reduced to one suite constant.
    """
    grid = prop.grid
    times = [float(t) for t in times if t > 0]
    if not times:
        raise ValueError("need at least one positive time")
    n = len(fields)
    exponents = []
    for i in range(n):
        f, g = fields[i], 0.5 * fields[(i + 1) % n]
        base = (float(grid.weighted_sobolev_norm(grid.radial_derivative(f), m))
                + float(grid.weighted_sobolev_norm(g, m)) + float(grid.weighted_sobolev_norm(f, m)))
        worst = 0.0
        for t in times:
            u = prop.free_evolve(f, g, t).u
            ratio = float(grid.weighted_sobolev_norm(u, m)) / base
            worst = max(worst, math.log(max(ratio, 1.0)) / t)
        exponents.append(worst)
    return uniform_constant(exponents)


@dataclass(frozen=True)
class DuhamelBound:
    """Measured sigma-norm gain of the Duhamel tail against 1 / (alpha - C)."""

    measured: UniformConstant
    alpha: float
    growth: float

    @property
    def bound(self) -> float:
        return 1.0 / (self.alpha - self.growth) if self.alpha > self.growth else math.inf

    @property
    def passed(self) -> bool:
        return self.measured.constant <= self.bound

    def to_dict(self) -> Dict[str, object]:
        return {'measured': self.measured.to_dict(), 'alpha': self.alpha, 'growth': self.growth,
                'bound': self.bound, 'passed': self.passed}


def sigma_duhamel_bound(prop: SpectralPropagator, fields: np.ndarray, alpha: float, growth: float,
                        span: float = 5.0, dtau: float = 0.05, m: int = 2) -> DuhamelBound:
    """Sigma norm of the tail of F = e^{-alpha tau} g over that of F, for each suite field g."""
    grid = prop.grid
    times = np.arange(0.0, span + 0.5 * dtau, dtau)
    decay = np.exp(-alpha * times)[:, None]
    measured = []
    for g in fields:
        F = Trajectory(times, decay * g[None, :])
        tail = duhamel_tail(prop, F)
        measured.append(SigmaNorm.measure(grid, tail, alpha, m).value
                        / SigmaNorm.measure(grid, F, alpha, m).value)
    return DuhamelBound(measured=uniform_constant(measured), alpha=alpha, growth=growth)


if __name__ == '__main__':
    from radial_grid import make_grid
    from suites import bump_suite

    grid = make_grid(6, 20.0, 400)
    fields = bump_suite(grid, seed=7)
    print("=" * 70)
    print("Sampled inequalities (d = 6, 100 fields)")
    print("=" * 70)
    for k1, k2 in embedding_cases(grid.d):
        uc = embedding_constant(grid, fields, k1, k2)
        print(f"{'✓' if uc.passed else '✗'} embedding (k1={k1}, k2={k2}): C = {uc.constant:.4g}")
    uc = bilinear_constant(grid, fields)
    print(f"{'✓' if uc.passed else '✗'} bilinear: C = {uc.constant:.4g}")
    fit = superlinearity(grid, fields[0])
    print(f"{'✓' if fit.passed else '✗'} R super-linearity slope {fit.slope:.4f} (p_c = {fit.target})")
