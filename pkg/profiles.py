#!/usr/bin/env python3
"""
Profile builder module for thresholdlab.
Constructs the approximate threshold solutions

    W_k^a(t) = W + sum_{j=1..k} e^{-j e0 t} Phi_j

order by order, evaluates them with their time derivative, and measures
the decay of the residual they leave in the wave equation.
"""

import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ground_state import (
    SERIES_BRANCH, Params, binomial_series, far_field_value, ground_state, nonlinearity, remainder_R,
)
from linearized_operator import DiscreteOperator, Eigenpair, shifted_solve


DOMAIN_LIMIT = 0.75     # |v/W| must stay below this at the check time
TAPER_START = 0.5       # forcing taper begins here for non-integer p_c
RATE_WINDOW = (4.0, 8.0)  # e0 t range of the default residual-rate fit
RATE_SAMPLES = 9
FLOOR_MARGIN = 10.0      # fitted values must exceed this multiple of the floor


class ExpansionDomainError(ValueError):
    """The correction v_k leaves the region |v/W| < 3/4 where the expansion holds."""


@dataclass(frozen=True)
class ExpansionCoeffs:
    """Taylor coefficients a_0..a_{J_max} of P(s) = (1+s)^{p_c}; a_0 = 1, a_1 = p_c."""

    p_c: float
    J_max: int
    a: Tuple[float, ...]

    def coefficient(self, j: int) -> float:
        return self.a[j]


@dataclass(frozen=True)
class RateFit:
    """Least-squares exponential rate over a window, with the RMS of the log-linear fit."""

    t_a: float
    t_b: float
    rate: float
    residual: float
    samples: int

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class ProfileSet:
    """Profiles Phi_1..Phi_k of W_k^a together with what evaluating them needs."""

    a: float
    k: int
    e0: float
    Y: np.ndarray
    phis: Tuple[np.ndarray, ...]
    L: DiscreteOperator
    coeffs: ExpansionCoeffs
    t_check: float
    forcings: Tuple[np.ndarray, ...] = ()
    applied: Tuple[np.ndarray, ...] = ()
    truncation_report: Dict[int, float] = field(default_factory=dict)

    @property
    def grid(self):
        return self.L.grid

    @property
    def p_c(self) -> float:
        return self.coeffs.p_c

    @property
    def W(self) -> np.ndarray:
        return ground_state(self.grid)

    def metadata(self) -> Dict[str, float]:
        return {'d': self.grid.d, 'a': self.a, 'k': self.k, 'e0': self.e0, 't_check': self.t_check}


def taylor_coeffs(params: Params, J_max: int) -> ExpansionCoeffs:
    """
    Coefficients of P(s) = (1+s)^{p_c} by the generalized binomial recurrence.

    Args:
        params: Dimension parameters
        J_max: Truncation order (>= 2)
    """
    if J_max < 2:
        raise ValueError(f"truncation order must be >= 2, got {J_max}")
    return ExpansionCoeffs(params.p_c, J_max, tuple(binomial_series(params.p_c, J_max)))


def _series_powers(phis: Sequence[np.ndarray], order: int) -> Dict[int, Dict[int, np.ndarray]]:
    """P[l][n] = coefficient of x^n in (sum_i x^i Phi_i)^l for 1 <= l <= n <= order."""
    known = len(phis)
    powers = {1: {n: phis[n - 1] for n in range(1, min(known, order) + 1)}}
    for l in range(2, order + 1):
        powers[l] = {}
        for n in range(l, order + 1):
            acc = np.zeros_like(phis[0])
            for m in range(1, n - l + 2):
                prev = powers[l - 1].get(n - m)
                if m <= known and prev is not None:
                    acc = acc + phis[m - 1] * prev
            powers[l][n] = acc
    return powers


def _forcing(phis: Sequence[np.ndarray], j: int, W: np.ndarray, coeffs: ExpansionCoeffs) -> np.ndarray:
    """Coefficient of x^j in W^{p_c} [P(v/W) - 1 - p_c v/W]."""
    powers = _series_powers(phis, j)
    F = np.zeros_like(W)
    for l in range(2, j + 1):
        F = F + coeffs.coefficient(l) * W ** (coeffs.p_c - l) * powers[l][j]
    return F


def _taper(v: np.ndarray, W: np.ndarray) -> np.ndarray:
    """1 where |v/W| <= 1/2, 0 beyond 3/4, cosine-squared in between."""
    s = np.clip((np.abs(v / W) - TAPER_START) / (DOMAIN_LIMIT - TAPER_START), 0.0, 1.0)
    return np.cos(0.5 * np.pi * s) ** 2


def default_check_time(a: float, eig: Eigenpair, W: np.ndarray) -> float:
    """Time at which |a| e^{-e0 t} max|Y/W| = 1/2."""
    peak = abs(a) * float(np.max(np.abs(eig.Y / W)))
    if peak == 0.0:
        return 0.0
    return math.log(2.0 * peak) / eig.e0


def build_profiles(a: float, k: int, eig: Eigenpair, L: DiscreteOperator,
                   coeffs: Optional[ExpansionCoeffs] = None, t_check: Optional[float] = None,
                   verbose: bool = False) -> ProfileSet:
    """
    Build Phi_1 = a Y and Phi_j = (L + j^2 e0^2)^{-1} F_j for j = 2..k.

    F_j is the coefficient of e^{-j e0 t} in W^{p_c}[P(v/W) - 1 - p_c v/W]
    with v = sum_i e^{-i e0 t} Phi_i.

    Args:
        a: Amplitude of the eigenfunction direction
        k: Expansion order (>= 1)
        eig: Negative eigenpair of L
        L: Linearized operator
        coeffs: Taylor coefficients (default: order max(k, 2))
        t_check: Smallest time of interest (default: where |v_1/W| peaks at 1/2)
        verbose: Print per-order progress

    Raises:
        ExpansionDomainError: |v_k(t_check)/W| >= 3/4 somewhere
        NearSingularShiftError: propagated from the shifted solves
    """
    if int(k) != k or k < 1:
        raise ValueError(f"order must be an integer >= 1, got {k}")
    grid = L.grid
    params = Params(grid.d)
    if coeffs is None:
        coeffs = taylor_coeffs(params, max(k, 2))
    elif coeffs.J_max < k:
        raise ValueError(f"coefficients truncated at {coeffs.J_max} < order {k}")

    W = ground_state(grid)
    e0 = eig.e0
    if t_check is None:
        t_check = default_check_time(a, eig, W)
    x_check = math.exp(-e0 * t_check)

    phis: List[np.ndarray] = [a * eig.Y]
    forcings: List[np.ndarray] = [np.zeros(grid.N)]
    applied: List[np.ndarray] = [np.zeros(grid.N)]
    report: Dict[int, float] = {}

    for j in range(2, k + 1):
        F = _forcing(phis, j, W, coeffs)
        if not params.integer_power:
            v = sum(x_check ** (i + 1) * phi for i, phi in enumerate(phis))
            chi = _taper(v, W)
            norm_F = float(grid.lebesgue_norm(F, 2))
            report[j] = float(grid.lebesgue_norm((1.0 - chi) * F, 2)) / norm_F if norm_F > 0 else 0.0
            F = chi * F
        mu = j * j * e0 * e0
        phi = shifted_solve(L, mu, F, e0)
        phis.append(phi)
        forcings.append(F)
        applied.append(L.apply(phi) + mu * phi)
        if verbose:
            print(f"  ✓ Phi_{j}: ||F_j|| = {grid.lebesgue_norm(F, 2):.3e}, "
                  f"||Phi_j|| = {grid.lebesgue_norm(phi, 2):.3e}")

    v_check = sum(x_check ** (i + 1) * phi for i, phi in enumerate(phis))
    ratio = np.abs(v_check / W)
    worst = int(np.argmax(ratio))
    if ratio[worst] >= DOMAIN_LIMIT:
        raise ExpansionDomainError(
            f"|v/W| = {ratio[worst]:.3f} at r = {grid.r[worst]:.4g}, t = {t_check:.4g}; "
            f"evaluate the expansion at later times")

    return ProfileSet(a=float(a), k=int(k), e0=e0, Y=eig.Y, phis=tuple(phis), L=L, coeffs=coeffs,
                      t_check=float(t_check), forcings=tuple(forcings), applied=tuple(applied),
                      truncation_report=report)


# ----------------------------------------------------------------------
# evaluation
# ----------------------------------------------------------------------

def _powers_of_x(ps: ProfileSet, t) -> np.ndarray:
    """Array of shape (..., k) holding e^{-j e0 t} for j = 1..k."""
    j = np.arange(1, ps.k + 1)
    return np.exp(-np.multiply.outer(np.asarray(t, dtype=np.float64), j) * ps.e0)


def _combine(weights: np.ndarray, fields: Sequence[np.ndarray]) -> np.ndarray:
    return np.tensordot(weights, np.asarray(fields), axes=([-1], [0]))


def eval_vk(ps: ProfileSet, t) -> np.ndarray:
    """v_k(t) = sum_j e^{-j e0 t} Phi_j; an array of times gives one row per time."""
    return _combine(_powers_of_x(ps, t), ps.phis)


def eval_Wka(ps: ProfileSet, t) -> np.ndarray:
    """W_k^a(t) = W + v_k(t)."""
    return ps.W + eval_vk(ps, t)


def eval_Wka_t(ps: ProfileSet, t) -> np.ndarray:
    """Analytic time derivative -sum_j j e0 e^{-j e0 t} Phi_j."""
    j = np.arange(1, ps.k + 1)
    return _combine(-j * ps.e0 * _powers_of_x(ps, t), ps.phis)


def eval_Wka_tt(ps: ProfileSet, t) -> np.ndarray:
    j = np.arange(1, ps.k + 1)
    return _combine((j * ps.e0) ** 2 * _powers_of_x(ps, t), ps.phis)


def static_defect(grid) -> np.ndarray:
    """-Delta W - f(W) on the grid with the far-field boundary value."""
    W = ground_state(grid)
    return -grid.radial_laplacian(W, far_field_value(grid)) - nonlinearity(W, Params(grid.d).p_c)


def residual(ps: ProfileSet, t, include_static: bool = True) -> np.ndarray:
    """
    eps_k^a(t) = (d_tt - Delta) W_k^a - f(W_k^a), with d_tt analytic.

    Assembled as static defect + sum_j e^{-j e0 t} (L + j^2 e0^2) Phi_j - R(v_k),
    where the j = 1 term vanishes by the eigen relation. include_static=False
    drops the time-independent defect of the discrete W.
    """
    x = _powers_of_x(ps, t)
    v = _combine(x, ps.phis)
    dynamic = _combine(x, ps.applied) - remainder_R(v, ps.W, ps.p_c)
    if include_static:
        return dynamic + static_defect(ps.grid)
    return dynamic


def direct_residual(ps: ProfileSet, t: float) -> np.ndarray:
    """The same residual evaluated literally from its definition, for cross-checks."""
    grid = ps.grid
    u = eval_Wka(ps, t)
    return eval_Wka_tt(ps, t) - grid.radial_laplacian(u, far_field_value(grid)) - nonlinearity(u, ps.p_c)


def cancellation_defects(ps: ProfileSet) -> List[float]:
    """
    Relative size of the e^{-j e0 t} coefficient of (d_tt + L) v_k - sum_l a_l W^{p_c-l}(...)
    for each j <= k.
    """
    grid = ps.grid
    defects = []
    first = ps.L.apply(ps.phis[0]) + ps.e0 ** 2 * ps.phis[0]
    scale = float(grid.lebesgue_norm(ps.phis[0], 2)) * ps.e0 ** 2
    defects.append(float(grid.lebesgue_norm(first, 2)) / scale if scale > 0 else 0.0)
    for j in range(2, ps.k + 1):
        F = ps.forcings[j - 1]
        norm_F = float(grid.lebesgue_norm(F, 2))
        gap = float(grid.lebesgue_norm(ps.applied[j - 1] - F, 2))
        defects.append(gap / norm_F if norm_F > 0 else gap)
    return defects


# ----------------------------------------------------------------------
# rate fitting
# ----------------------------------------------------------------------

def fit_decay_rate(samples: Sequence[Tuple[float, float]],
                   floor: Union[float, Sequence[float]] = 0.0) -> RateFit:
    """
    Exponential decay rate from (t, value) samples by a log-linear least-squares fit.

    Args:
        samples: At least five (t, value > 0) pairs
        floor: Discretization floor, one value for all samples or one per
            sample; every value must exceed 10x its floor

    Returns:
        RateFit with the negated slope and the RMS of the fit

    Raises:
        ValueError: too few samples, a non-positive value, or a window touching the floor
    """
    if len(samples) < 5:
        raise ValueError(f"need at least 5 samples, got {len(samples)}")
    t = np.array([s[0] for s in samples], dtype=np.float64)
    values = np.array([s[1] for s in samples], dtype=np.float64)
    if np.any(values <= 0) or not np.all(np.isfinite(values)):
        raise ValueError("decay samples must be finite and positive")
    floors = np.broadcast_to(np.asarray(floor, dtype=np.float64), values.shape)
    touching = np.flatnonzero(values <= FLOOR_MARGIN * floors)
    if touching.size:
        i = touching[0]
        raise ValueError(f"window touches the floor at t = {t[i]:.4g}: "
                         f"{values[i]:.3e} <= {FLOOR_MARGIN:g} x {floors[i]:.3e}")
    logs = np.log(values)
    slope, intercept = np.polyfit(t, logs, 1)
    rms = float(np.sqrt(np.mean((logs - (slope * t + intercept)) ** 2)))
    return RateFit(t_a=float(t.min()), t_b=float(t.max()), rate=float(-slope), residual=rms, samples=len(t))


def rate_window(e0: float, window: Tuple[float, float] = RATE_WINDOW, samples: int = RATE_SAMPLES,
                offset: float = 0.0) -> np.ndarray:
    """Sample times spanning e0 (t - offset) in window."""
    return offset + np.linspace(window[0], window[1], samples) / e0


def roundoff_floor(ps: ProfileSet, times) -> np.ndarray:
    """
    Round-off level of ||eps_k^a(t)||_2 with the static defect removed, one value per time.

    Machine epsilon times the terms the residual is assembled from. Where
    |v/W| reaches the series branch of J, the literal evaluation cancels
    terms of size W^{p_c}, and those count too.
    """
    grid = ps.grid
    x = _powers_of_x(ps, times)
    v = _combine(x, ps.phis)
    W = ps.W
    terms = np.abs(_combine(x, ps.applied)) + np.abs(remainder_R(v, W, ps.p_c))
    terms = terms + np.where(np.abs(v) >= SERIES_BRANCH * W, W ** ps.p_c, 0.0)
    return np.finfo(np.float64).eps * np.atleast_1d(grid.lebesgue_norm(terms, 2))


def residual_rate(ps: ProfileSet, times: Optional[np.ndarray] = None) -> RateFit:
    """
    Decay rate of ||eps_k^a(t)||_2 with the static defect removed.

    Raises:
        ValueError: the window touches the round-off floor
    """
    if times is None:
        times = rate_window(ps.e0, offset=ps.t_check)
    norms = ps.grid.lebesgue_norm(residual(ps, times, include_static=False), 2)
    return fit_decay_rate(list(zip(times, norms)), floor=roundoff_floor(ps, times))


if __name__ == '__main__':
    from linearized_operator import assemble_L, ground_eigenpair
    from radial_grid import make_grid

    grid = make_grid(6, 40.0, 1600)
    L = assemble_L(grid)
    eig = ground_eigenpair(L)
    print("=" * 70)
    print(f"Residual decay rates (d = 6, e0 = {eig.e0:.6f})")
    print("=" * 70)
    for order in (1, 2, 3):
        fit = residual_rate(build_profiles(1.0, order, eig, L))
        target = (order + 1) * eig.e0
        mark = '✓' if abs(fit.rate / target - 1) <= 0.05 else '✗'
        print(f"{mark} k = {order}: rate {fit.rate:.5f}  target {target:.5f}  rms {fit.residual:.2e}")
