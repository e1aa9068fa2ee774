#!/usr/bin/env python3
"""
Duhamel fixed-point module for thresholdlab.
Builds the exact threshold solution W^a = W_k^a + h by Picard iteration of

    h(t) = -int_t^inf sin((t - tau) sqrt(-Delta)) / sqrt(-Delta) F(h)(tau) dtau

with a spectral free-wave propagator on the truncated domain, and provides
the checks that go with it: sigma-norm histories, PDE residuals, decay
rates, time-shift fits and the k-independence spot check.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import minimize_scalar

from ground_state import far_field_value, nonlinearity, remainder_R
from linearized_operator import SpectrumError, assemble_L
from profiles import (
    RateFit, ProfileSet, eval_Wka, eval_Wka_t, eval_vk, fit_decay_rate, residual, static_defect,
)
from radial_grid import RadialGrid, State, Trajectory


VALIDITY_LIMIT = 0.75
START_OFFSET = 1.0          # t_start = t_check + START_OFFSET / e0
MIN_SPAN = 5.0              # T_max - t_start >= MIN_SPAN / e0
DEFAULT_SPAN = 6.0
STEPS_PER_EFOLD = 40        # dtau = 1 / (STEPS_PER_EFOLD e0)
EXACT_QUADRATURE_THETA = 0.1
SIGMA_ORDER = 2
STALL_LIMIT = 3


class ValidityRegionError(ValueError):
    """|h + v_k| reached 3/4 W, outside the region where the expansion of f holds."""

    def __init__(self, r: float, t: float, ratio: float):
        self.r = r
        self.t = t
        self.ratio = ratio
        super().__init__(f"|h + v_k| / W = {ratio:.3f} at r = {r:.4g}, t = {t:.4g}")


class ContractionError(RuntimeError):
    """The Picard iteration is not contracting."""


# ----------------------------------------------------------------------
# spectral propagator
# ----------------------------------------------------------------------

class SpectralPropagator:
    """
    Eigen-decomposition of the discrete -Delta (Dirichlet at r = R).

    Eigenfields are orthonormal in the weighted inner product; mode
    coefficients are c = V^T (sqrt(w) f).
    """

    def __init__(self, grid: RadialGrid, eigenvalues: np.ndarray, vectors: np.ndarray):
        self.grid = grid
        self.eigenvalues = eigenvalues
        self.frequencies = np.sqrt(eigenvalues)
        self.vectors = vectors
        self._sqrt_w = np.sqrt(grid.weights)

    def __repr__(self):
        return f"SpectralPropagator({self.grid!r}, omega in [{self.frequencies[0]:.4g}, {self.frequencies[-1]:.4g}])"

    def to_modes(self, f) -> np.ndarray:
        """Mode coefficients of a field or a stack of fields (last axis)."""
        return (np.asarray(f, dtype=np.float64) * self._sqrt_w) @ self.vectors

    def from_modes(self, c) -> np.ndarray:
        return (np.asarray(c, dtype=np.float64) @ self.vectors.T) / self._sqrt_w

    def mode(self, m: int) -> np.ndarray:
        """The m-th eigenfield, normalized in L^2_omega."""
        return self.vectors[:, m] / self._sqrt_w

    def free_evolve(self, f, g, t: float) -> State:
        """
        (u, u_t) at time t of the free wave with data (f, g) at time 0.

        u = cos(t sqrt(-Delta)) f + sin(t sqrt(-Delta)) / sqrt(-Delta) g, mode by mode.
        """
        omega = self.frequencies
        cf = self.to_modes(f)
        cg = self.to_modes(g)
        cos_t = np.cos(omega * t)
        sin_t = np.sin(omega * t)
        u = cos_t * cf + sin_t / omega * cg
        ut = -omega * sin_t * cf + cos_t * cg
        return State(float(t), self.from_modes(u), self.from_modes(ut))

    def roundtrip_error(self, f) -> float:
        f = np.asarray(f, dtype=np.float64)
        scale = float(self.grid.lebesgue_norm(f, 2)) or 1.0
        return float(self.grid.lebesgue_norm(self.from_modes(self.to_modes(f)) - f, 2)) / scale

    def count_below(self, bound: float) -> int:
        """Number of eigenvalues below bound."""
        return int(np.searchsorted(self.eigenvalues, bound))


def build_propagator(grid: RadialGrid) -> SpectralPropagator:
    """
    Full symmetric tridiagonal eigen-decomposition of the discrete -Delta.

    Raises:
        SpectrumError: an eigenvalue is not positive
    """
    d, e = assemble_L(grid, potential=False).symmetric()
    lam, vectors = eigh_tridiagonal(d, e)
    if lam[0] <= 0:
        raise SpectrumError(f"discrete -Delta has eigenvalue {lam[0]:.6g} <= 0")
    return SpectralPropagator(grid, lam, vectors)


def free_evolve(prop: SpectralPropagator, f, g, t: float) -> State:
    return prop.free_evolve(f, g, t)


# ----------------------------------------------------------------------
# time grids and the sigma norm
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class TimeGrid:
    """Uniform samples t_start, t_start + dtau, ..., T_max."""

    t_start: float
    T_max: float
    dtau: float

    def __post_init__(self):
        if not self.dtau > 0:
            raise ValueError(f"time step must be positive, got {self.dtau}")
        if not self.T_max > self.t_start:
            raise ValueError(f"T_max = {self.T_max} must exceed t_start = {self.t_start}")
        n = int(round((self.T_max - self.t_start) / self.dtau))
        if n < 2:
            raise ValueError("time grid needs at least three samples")
        object.__setattr__(self, 'T_max', self.t_start + n * self.dtau)

    @property
    def times(self) -> np.ndarray:
        n = int(round((self.T_max - self.t_start) / self.dtau))
        return self.t_start + self.dtau * np.arange(n + 1)

    def __len__(self):
        return self.times.size

    @classmethod
    def standard(cls, ps: ProfileSet, t_start: Optional[float] = None, span: float = DEFAULT_SPAN,
                 steps_per_efold: int = STEPS_PER_EFOLD) -> "TimeGrid":
        """
        Default grid for a profile set: t_start = t_check + 1/e0, T_max = t_start + span/e0,
        dtau = 1 / (40 e0).

        Raises:
            ValueError: span shorter than 5 e-foldings
        """
        if span < MIN_SPAN:
            raise ValueError(f"span of {span} e-foldings is below the minimum {MIN_SPAN}")
        e0 = ps.e0
        if t_start is None:
            t_start = ps.t_check + START_OFFSET / e0
        return cls(float(t_start), float(t_start + span / e0), 1.0 / (steps_per_efold * e0))


def sigma_rate(ps: ProfileSet) -> float:
    """alpha = (k + 1/2) e0."""
    return (ps.k + 0.5) * ps.e0


@dataclass(frozen=True)
class SigmaNorm:
    """sup over sample times of e^{alpha t} ||f(t)||_{H^{m,m}}, with the time it is attained."""

    alpha: float
    m: int
    value: float
    t_star: float

    @classmethod
    def measure(cls, grid: RadialGrid, traj: Trajectory, alpha: float, m: int = SIGMA_ORDER) -> "SigmaNorm":
        norms = np.atleast_1d(grid.weighted_sobolev_norm(traj.values, m))
        weighted = np.exp(alpha * traj.times) * norms
        i = int(np.argmax(weighted))
        value = float(weighted[i])
        if not math.isfinite(value):
            raise ValueError(f"sigma norm is not finite at t = {traj.times[i]:.4g}")
        return cls(alpha=alpha, m=m, value=value, t_star=float(traj.times[i]))


# ----------------------------------------------------------------------
# Duhamel tail
# ----------------------------------------------------------------------

def _interval_weights(omega: np.ndarray, dtau: float) -> Tuple[np.ndarray, ...]:
    """
    Weights of F_n and F_{n+1} in int_0^dtau cos(omega s) F ds and int_0^dtau sin(omega s) F ds
    for F linear on the interval.

    Exact for omega dtau > EXACT_QUADRATURE_THETA, trapezoidal below.
    """
    theta = omega * dtau
    cos_t = np.cos(theta)
    sin_t = np.sin(theta)
    exact = theta > EXACT_QUADRATURE_THETA
    safe = np.where(exact, omega, 1.0)

    a1 = np.where(exact, sin_t / safe + (cos_t - 1.0) / (safe * safe * dtau), 0.5 * dtau * cos_t)
    a0 = np.where(exact, sin_t / safe - a1, 0.5 * dtau)
    b1 = np.where(exact, -cos_t / safe + sin_t / (safe * safe * dtau), 0.5 * dtau * sin_t)
    b0 = np.where(exact, (1.0 - cos_t) / safe - b1, 0.0)
    return cos_t, sin_t, a0, a1, b0, b1


def duhamel_tail(prop: SpectralPropagator, F: Trajectory, t: Optional[float] = None,
                 with_derivative: bool = False):
    """
    h(t_n) = -int_{t_n}^{T_max} sin((t_n - tau) sqrt(-Delta)) / sqrt(-Delta) F(tau) dtau at every sample.

    Evaluated mode by mode with a backward rotation recurrence over the
    intervals; F is linear between samples.

    Args:
        prop: Spectral propagator
        F: Forcing on a uniform time grid
        t: Return only the field at this sample time
        with_derivative: Also return d_t h

    Returns:
        Trajectory h (or the field h(t)), and d_t h when requested
    """
    times = F.times
    if times.size < 2:
        raise ValueError("forcing needs at least two samples")
    dtau = float(times[1] - times[0])
    if not np.allclose(np.diff(times), dtau, rtol=1e-9, atol=0.0):
        raise ValueError("forcing must be sampled on a uniform time grid")

    omega = prop.frequencies
    cos_t, sin_t, a0, a1, b0, b1 = _interval_weights(omega, dtau)
    Fhat = prop.to_modes(F.values)

    S = np.zeros_like(omega)  # omega * int sin(omega (t_n - tau)) / omega F
    C = np.zeros_like(omega)  # int cos(omega (t_n - tau)) F
    S_all = np.zeros_like(Fhat)
    C_all = np.zeros_like(Fhat)
    for n in range(times.size - 2, -1, -1):
        Fn, Fn1 = Fhat[n], Fhat[n + 1]
        S_new = cos_t * S - sin_t * C - (b0 * Fn + b1 * Fn1)
        C_new = cos_t * C + sin_t * S + a0 * Fn + a1 * Fn1
        S, C = S_new, C_new
        S_all[n] = S
        C_all[n] = C

    h = Trajectory(times, prop.from_modes(-S_all / omega))
    ht = Trajectory(times, prop.from_modes(-C_all))
    if t is not None:
        i = int(np.argmin(np.abs(times - t)))
        if abs(times[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"t = {t} is not a sample time")
        return (h.values[i], ht.values[i]) if with_derivative else h.values[i]
    return (h, ht) if with_derivative else h


def tail_estimate(prop: SpectralPropagator, F: Trajectory) -> float:
    """
    Size of the neglected int_{T_max}^inf, from the last forcing sample and its decay rate.

    Uses |sin(omega s)/omega| <= 1/omega_min and F(tau) ~ F(T_max) e^{-gamma (tau - T_max)}.
    """
    grid = prop.grid
    last = float(grid.lebesgue_norm(F.values[-1], 2))
    if last == 0.0:
        return 0.0
    prev = float(grid.lebesgue_norm(F.values[-2], 2))
    dtau = float(F.times[-1] - F.times[-2])
    gamma = math.log(prev / last) / dtau if prev > last else 0.0
    if gamma <= 0.0:
        return math.inf
    return last / (gamma * float(prop.frequencies[0]))


# ----------------------------------------------------------------------
# Picard map
# ----------------------------------------------------------------------

def picard_forcing(h: Trajectory, ps: ProfileSet) -> Trajectory:
    """
    F = p_c W^{p_c-1} h + R(h + v_k) - R(v_k) - eps_k at every sample time.

    The dynamic residual is used, so the static defect of the discrete W
    does not enter.

    Raises:
        ValidityRegionError: |h + v_k| >= 3/4 W somewhere
    """
    grid = ps.grid
    W = ps.W
    p_c = ps.p_c
    times = h.times
    v = eval_vk(ps, times)
    total = v + h.values
    ratio = np.abs(total) / W
    worst = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    if ratio[worst] >= VALIDITY_LIMIT:
        raise ValidityRegionError(float(grid.r[worst[1]]), float(times[worst[0]]), float(ratio[worst]))
    eps = residual(ps, times, include_static=False)
    F = p_c * W ** (p_c - 1.0) * h.values + remainder_R(total, W, p_c) - remainder_R(v, W, p_c) - eps
    return Trajectory(times, F)


def picard_map(h: Trajectory, ps: ProfileSet, prop: SpectralPropagator, with_derivative: bool = False):
    """Phi(h) = duhamel_tail of the assembled forcing."""
    return duhamel_tail(prop, picard_forcing(h, ps), with_derivative=with_derivative)


def contraction_ratio(ps: ProfileSet, prop: SpectralPropagator, h1: Trajectory, h2: Trajectory,
                      m: int = SIGMA_ORDER) -> float:
    """SigmaNorm(Phi(h1) - Phi(h2)) / SigmaNorm(h1 - h2)."""
    alpha = sigma_rate(ps)
    grid = ps.grid
    num = SigmaNorm.measure(grid, picard_map(h1, ps, prop) - picard_map(h2, ps, prop), alpha, m).value
    den = SigmaNorm.measure(grid, h1 - h2, alpha, m).value
    if den == 0.0:
        raise ValueError("trajectories coincide")
    return num / den


@dataclass
class FixedPointResult:
    """Fixed point h = W^a - W_k^a with its time derivative and the iteration history."""

    h: Trajectory
    ht: Trajectory
    history: List[float]
    alpha: float
    m: int
    tail_estimate: float
    ps: ProfileSet = field(repr=False)

    @property
    def iterations(self) -> int:
        return len(self.history)

    @property
    def ratios(self) -> List[float]:
        return [b / a for a, b in zip(self.history, self.history[1:]) if a > 0]

    def to_dict(self) -> Dict[str, object]:
        return {
            'a': self.ps.a,
            'k': self.ps.k,
            't_start': float(self.h.times[0]),
            'T_max': float(self.h.times[-1]),
            'iterations': self.iterations,
            'sigma_history': list(self.history),
            'alpha': self.alpha,
            'm': self.m,
            'tail_estimate': self.tail_estimate,
        }


def solve_fixed_point(ps: ProfileSet, tg: TimeGrid, tol: float = 1e-10,
                      prop: Optional[SpectralPropagator] = None, m: int = SIGMA_ORDER,
                      max_iter: int = 60, verbose: bool = False) -> FixedPointResult:
    """
    Iterate h_{n+1} = Phi(h_n) from h_0 = 0.

    Stops once SigmaNorm(h_{n+1} - h_n) <= tol * max(1, SigmaNorm(h_{n+1})).

    Raises:
        ContractionError: the difference failed to shrink on 3 consecutive
            iterations, or max_iter was reached
        ValidityRegionError: an iterate left |h + v_k| < 3/4 W
    """
    grid = ps.grid
    if prop is None:
        prop = build_propagator(grid)
    alpha = sigma_rate(ps)
    times = tg.times
    h = Trajectory(times, np.zeros((times.size, grid.N)))
    history: List[float] = []
    stalled = 0

    for it in range(1, max_iter + 1):
        F = picard_forcing(h, ps)
        h_new, ht_new = duhamel_tail(prop, F, with_derivative=True)
        diff = SigmaNorm.measure(grid, h_new - h, alpha, m).value
        size = SigmaNorm.measure(grid, h_new, alpha, m).value
        if history and diff >= history[-1]:
            stalled += 1
        else:
            stalled = 0
        history.append(diff)
        h = h_new
        if verbose:
            ratio = f"  ratio {diff / history[-2]:.3f}" if len(history) > 1 and history[-2] > 0 else ""
            print(f"  iteration {it:2d}: sigma(h_n+1 - h_n) = {diff:.3e}{ratio}")
        if diff <= tol * max(1.0, size):
            return FixedPointResult(h=h, ht=ht_new, history=history, alpha=alpha, m=m,
                                    tail_estimate=tail_estimate(prop, F), ps=ps)
        if stalled >= STALL_LIMIT:
            raise ContractionError(
                f"no contraction for {STALL_LIMIT} consecutive iterations (history {history[-4:]}); "
                f"increase t_start")
    raise ContractionError(f"not converged after {max_iter} iterations; increase t_start")


# ----------------------------------------------------------------------
# reconstruction and checks
# ----------------------------------------------------------------------

def reconstruct(ps: ProfileSet, result: FixedPointResult) -> Tuple[Trajectory, Trajectory]:
    """W^a = W_k^a + h and d_t W^a on the fixed-point time grid."""
    times = result.h.times
    u = Trajectory(times, eval_Wka(ps, times) + result.h.values)
    ut = Trajectory(times, eval_Wka_t(ps, times) + result.ht.values)
    return u, ut


def data_at_start(ps: ProfileSet, result: FixedPointResult) -> State:
    """(W^a, d_t W^a) at t_start."""
    u, ut = reconstruct(ps, result)
    return State(float(u.times[0]), u.values[0], ut.values[0])


def pde_residual(ps: ProfileSet, u: Trajectory) -> Trajectory:
    """
    u_tt - Delta u - f(u) - defect(W) at interior sample times, u_tt by centered differences.

    defect(W) = -Delta W - f(W) is the static defect the fixed point carries by construction.
    """
    grid = ps.grid
    if len(u) < 3:
        raise ValueError("need at least three samples")
    dtau = float(u.times[1] - u.times[0])
    vals = u.values
    utt = (vals[2:] - 2.0 * vals[1:-1] + vals[:-2]) / (dtau * dtau)
    inner = vals[1:-1]
    res = (utt - grid.radial_laplacian(inner, far_field_value(grid))
           - nonlinearity(inner, ps.p_c) - static_defect(grid))
    return Trajectory(u.times[1:-1], res)


def residual_floor(ps: ProfileSet, tg: TimeGrid) -> float:
    """dtau^2 / 12 max ||d_t^4 W_k^a|| plus the interior static defect of W."""
    grid = ps.grid
    j = np.arange(1, ps.k + 1)
    x = np.exp(-j * ps.e0 * tg.t_start)
    fourth = np.tensordot((j * ps.e0) ** 4 * x, np.asarray(ps.phis), axes=1)
    time_term = tg.dtau ** 2 / 12.0 * float(grid.lebesgue_norm(fourth, 2))
    defect = static_defect(grid)[:-1]
    space_term = math.sqrt(float(np.sum(grid.weights[:-1] * defect ** 2)))
    return time_term + space_term


def iteration_floor(result: FixedPointResult, times) -> np.ndarray:
    """
    L2 accuracy of the converged h at the given times.

    The last Picard step bounds the remaining error in the sigma norm once
    the iteration contracts by 1/2, and the H^{m,m} norm dominates the L2
    norm, so the floor is that step times e^{-alpha t}.
    """
    last = result.history[-1] if result.history else 0.0
    return last * np.exp(-result.alpha * np.asarray(times, dtype=np.float64))


def decay_samples(ps: ProfileSet, result: FixedPointResult, w_window: Tuple[float, float] = (1.5, 5.0),
                  h_window: Tuple[float, float] = (0.0, 3.0),
                  samples: int = 12) -> Dict[str, Tuple[List[Tuple[float, float]], np.ndarray]]:
    """
    (t, norm) samples and per-sample floors for the decay of ||W^a - W||_2 ('w')
    and of ||W^a - W_k^a||_2 = ||h||_2 ('h').

    Windows are in e-foldings after t_start. The h window stays clear of the
    T_max truncation; the w window starts late enough that Phi_1 dominates.
    """
    grid = ps.grid
    times = result.h.times

    def pick(window):
        lo = times[0] + window[0] / ps.e0
        hi = min(times[0] + window[1] / ps.e0, times[-1])
        idx = np.flatnonzero((times >= lo - 1e-12) & (times <= hi + 1e-12))
        return idx[np.unique(np.linspace(0, idx.size - 1, samples).round().astype(int))]

    iw = pick(w_window)
    ih = pick(h_window)
    w_norms = grid.lebesgue_norm(eval_vk(ps, times[iw]) + result.h.values[iw], 2)
    h_norms = grid.lebesgue_norm(result.h.values[ih], 2)
    return {
        'w': (list(zip(times[iw], w_norms)), iteration_floor(result, times[iw])),
        'h': (list(zip(times[ih], h_norms)), iteration_floor(result, times[ih])),
    }


def decay_rates(ps: ProfileSet, result: FixedPointResult, **windows) -> Dict[str, RateFit]:
    """
    Fitted decay rates of ||W^a - W||_2 and ||h||_2; see decay_samples.

    Raises:
        ValueError: a window touches its floor
    """
    return {name: fit_decay_rate(points, floor=floor)
            for name, (points, floor) in decay_samples(ps, result, **windows).items()}


@dataclass(frozen=True)
class ShiftFit:
    """Best time shift T with traj_a(t + T) ~ traj_ref(t)."""

    T: float
    residual: float
    overlap: int

    def to_dict(self) -> Dict[str, float]:
        return {'T': self.T, 'residual': self.residual, 'overlap': self.overlap}


def time_shift_fit(grid: RadialGrid, traj_a: Trajectory, traj_ref: Trajectory,
                   min_overlap: int = 5, max_shift: Optional[float] = None) -> ShiftFit:
    """
    Least-squares time shift between two trajectories.

    Minimizes the RMS over the overlap of ||traj_a(t + T) - traj_ref(t)||_2,
    traj_a interpolated in time by cubic splines. For threshold solutions
    the minimizer is T = log|a| / e0 relative to a = 1.

    Raises:
        ValueError: fewer than min_overlap reference samples can be matched at any
            shift (within |T| <= max_shift when given)
    """
    spline = CubicSpline(traj_a.times, traj_a.values, axis=0)
    a_lo, a_hi = traj_a.times[0], traj_a.times[-1]
    ref_t = traj_ref.times

    def overlap_mask(T: float) -> np.ndarray:
        shifted = ref_t + T
        return (shifted >= a_lo - 1e-12) & (shifted <= a_hi + 1e-12)

    def objective(T: float) -> float:
        mask = overlap_mask(T)
        if mask.sum() < min_overlap:
            return math.inf
        diff = spline(ref_t[mask] + T) - traj_ref.values[mask]
        return float(np.sqrt(np.mean(grid.lebesgue_norm(diff, 2) ** 2)))

    step = 2.0 * float(np.min(np.diff(ref_t))) if ref_t.size > 1 else 0.01 * (a_hi - a_lo)
    candidates = np.arange(a_lo - ref_t[-1], a_hi - ref_t[0] + step, step)
    if max_shift is not None:
        candidates = candidates[np.abs(candidates) <= max_shift]
    if candidates.size == 0:
        raise ValueError(f"no shift within |T| <= {max_shift}")
    values = np.array([objective(T) for T in candidates])
    if not np.any(np.isfinite(values)):
        raise ValueError("trajectories do not overlap at any shift")
    best = int(np.nanargmin(values))
    lo = candidates[max(best - 1, 0)]
    hi = candidates[min(best + 1, candidates.size - 1)]
    res = minimize_scalar(objective, bounds=(lo, hi), method='bounded', options={'xatol': 1e-10})
    T, value = (float(res.x), float(res.fun)) if res.fun <= values[best] else (float(candidates[best]), float(values[best]))
    return ShiftFit(T=T, residual=value, overlap=int(overlap_mask(T).sum()))


def k_independence(grid: RadialGrid, u_lo: Trajectory, u_hi: Trajectory, W: np.ndarray) -> float:
    """max over common samples of ||u_lo - u_hi|| / ||u_hi - W||."""
    common, i_lo, i_hi = np.intersect1d(np.round(u_lo.times, 12), np.round(u_hi.times, 12),
                                        return_indices=True)
    if common.size == 0:
        raise ValueError("no common sample times")
    gap = grid.lebesgue_norm(u_lo.values[i_lo] - u_hi.values[i_hi], 2)
    size = grid.lebesgue_norm(u_hi.values[i_hi] - W, 2)
    return float(np.max(gap / size))


if __name__ == '__main__':
    from linearized_operator import ground_eigenpair
    from profiles import build_profiles
    from radial_grid import make_grid

    grid = make_grid(6, 40.0, 800)
    L = assemble_L(grid)
    eig = ground_eigenpair(L)
    prop = build_propagator(grid)
    print("=" * 70)
    print(f"Picard iteration for W^a (d = 6, e0 = {eig.e0:.6f})")
    print("=" * 70)
    for amplitude in (1.0, -1.0):
        ps = build_profiles(amplitude, 3, eig, L)
        result = solve_fixed_point(ps, TimeGrid.standard(ps), prop=prop, verbose=True)
        rates = decay_rates(ps, result)
        print(f"✓ a = {amplitude:+.0f}: {result.iterations} iterations, "
              f"rate(w) = {rates['w'].rate:.4f}, rate(h) = {rates['h'].rate:.4f}")
