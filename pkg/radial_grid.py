#!/usr/bin/env python3
"""
Radial grid module for thresholdlab.
Cell-centered discretization of [0, R] in d dimensions, differential
operators and every norm the experiments measure.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid
from scipy.special import gamma


M_MAX = 4  # highest weighted-Sobolev order the grid resolves


class NonFiniteFieldError(ValueError):
    """A field carries NaN or Inf values."""


def sphere_area(d: int) -> float:
    """Surface area sigma_{d-1} = 2 pi^{d/2} / Gamma(d/2) of the unit sphere in R^d."""
    return 2.0 * math.pi ** (d / 2.0) / gamma(d / 2.0)


def ball_volume(d: int, R: float) -> float:
    """Volume of the d-ball of radius R."""
    return math.pi ** (d / 2.0) * R ** d / gamma(d / 2.0 + 1.0)


class RadialGrid:
    """Discretized radial domain [0, R] with d-dimensional quadrature weights."""

    def __init__(self, d: int, R: float, N: int):
        """
        Initialize the grid.

        Args:
            d: Space dimension (>= 3)
            R: Outer radius
            N: Number of cells (>= 16)
        """
        if int(d) != d or d < 3:
            raise ValueError(f"dimension must be an integer >= 3, got {d}")
        if not R > 0:
            raise ValueError(f"outer radius must be positive, got {R}")
        if int(N) != N or N < 16:
            raise ValueError(f"node count must be an integer >= 16, got {N}")

        self.d = int(d)
        self.R = float(R)
        self.N = int(N)
        self.h = self.R / self.N
        self.sigma = sphere_area(self.d)

        self.faces = np.arange(self.N + 1) * self.h
        self.r = (np.arange(self.N) + 0.5) * self.h
        self.areas = self.sigma * self.faces ** (self.d - 1)
        # exact shell volumes; equal sigma r_i^{d-1} h up to O(h^2)
        self.weights = self.sigma * np.diff(self.faces ** self.d) / self.d
        self.bracket = np.sqrt(1.0 + self.r ** 2)

    def __repr__(self):
        return f"RadialGrid(d={self.d}, R={self.R}, N={self.N})"

    def __eq__(self, other):
        if not isinstance(other, RadialGrid):
            return NotImplemented
        return (self.d, self.R, self.N) == (other.d, other.R, other.N)

    def __hash__(self):
        return hash((self.d, self.R, self.N))

    # ------------------------------------------------------------------
    # fields
    # ------------------------------------------------------------------

    def check_field(self, f) -> np.ndarray:
        """
        Validate a field (or a stack of fields) against the grid.

        Returns:
            The values as a float64 array

        Raises:
            ValueError: last axis does not match the node count
            NonFiniteFieldError: NaN or Inf present
        """
        values = np.asarray(f, dtype=np.float64)
        if values.shape[-1:] != (self.N,):
            raise ValueError(f"field has {values.shape[-1:]} values, grid has {self.N} nodes")
        if not np.all(np.isfinite(values)):
            bad = int(np.flatnonzero(~np.isfinite(values.reshape(-1)))[0]) % self.N
            raise NonFiniteFieldError(f"non-finite value at r = {self.r[bad]:.6g}")
        return values

    def zeros(self) -> np.ndarray:
        return np.zeros(self.N)

    def ones(self) -> np.ndarray:
        return np.ones(self.N)

    def inner(self, f, g) -> np.ndarray:
        """Weighted inner product <f, g>_omega over the last axis."""
        return np.sum(self.weights * np.asarray(f) * np.asarray(g), axis=-1)

    def total_weight(self) -> float:
        return float(np.sum(self.weights))

    def effective_support(self, f, rel: float = 1e-10) -> float:
        """
        Smallest radius beyond which |f| < rel * max|f|.

        A stacked input is treated as one field (maximum over the stack).
        """
        values = np.abs(np.asarray(f, dtype=np.float64))
        if values.ndim > 1:
            values = values.reshape(-1, self.N).max(axis=0)
        peak = values.max()
        if peak == 0.0:
            return 0.0
        above = np.flatnonzero(values >= rel * peak)
        return float(self.faces[above[-1] + 1])

    # ------------------------------------------------------------------
    # differential operators
    # ------------------------------------------------------------------

    def radial_derivative(self, f, odd: bool = False) -> np.ndarray:
        """
        Centered second-order derivative in r.

        Reflection across r = 0 (even by default, odd for fields that are
        themselves radial derivatives) and one-sided second-order
        differences at r = R.
        """
        f = np.asarray(f, dtype=np.float64)
        df = np.gradient(f, self.h, axis=-1, edge_order=2)
        # ghost value at -h/2 is +f_0 (even) or -f_0 (odd)
        ghost = -f[..., 0] if odd else f[..., 0]
        df[..., 0] = (f[..., 1] - ghost) / (2.0 * self.h)
        return df

    def _fluxes(self, f: np.ndarray, boundary_value: float) -> np.ndarray:
        flux = np.zeros(f.shape[:-1] + (self.N + 1,))
        flux[..., 1:self.N] = self.areas[1:self.N] * np.diff(f, axis=-1) / self.h
        flux[..., self.N] = self.areas[self.N] * (boundary_value - f[..., -1]) / (0.5 * self.h)
        return flux

    def radial_laplacian(self, f, boundary_value: float = 0.0) -> np.ndarray:
        """
        Conservative radial Laplacian (r^{d-1} f')' / r^{d-1}.

        Self-adjoint under <., .>_omega for boundary_value = 0 (Dirichlet
        at r = R). A nonzero boundary_value imposes f(R) = boundary_value.
        """
        f = np.asarray(f, dtype=np.float64)
        flux = self._fluxes(f, boundary_value)
        return np.diff(flux, axis=-1) / self.weights

    def dirichlet_form(self, f, boundary_value: float = 0.0) -> np.ndarray:
        """Discrete Dirichlet energy, the quadratic form whose gradient is -radial_laplacian."""
        f = np.asarray(f, dtype=np.float64)
        interior = np.sum(self.areas[1:self.N] * np.diff(f, axis=-1) ** 2, axis=-1) / self.h
        edge = self.areas[self.N] * (boundary_value - f[..., -1]) ** 2 / (0.5 * self.h)
        return interior + edge

    # ------------------------------------------------------------------
    # norms
    # ------------------------------------------------------------------

    def lebesgue_norm(self, f, p: float):
        """
        L^p norm with the grid weights; p = inf gives max|f|.

        Stacked inputs return one norm per leading index.
        """
        if not (p == math.inf or 1.0 <= p < math.inf):
            raise ValueError(f"exponent must lie in [1, inf], got {p}")
        values = np.abs(self.check_field(f))
        if p == math.inf:
            return values.max(axis=-1)
        if p == 2.0:
            return np.sqrt(np.sum(self.weights * values * values, axis=-1))
        return np.sum(self.weights * values ** p, axis=-1) ** (1.0 / p)

    def h1dot_norm(self, f):
        """Homogeneous Sobolev norm ||grad f||_2."""
        return self.lebesgue_norm(self.radial_derivative(f), 2)

    def weighted_sobolev_norm(self, f, m: int):
        """
        H^{m,m} norm: sum over j <= m of ||<r>^{m-j} d^j f||_2.

        Radial derivatives stand in for the full gradient.
        """
        if int(m) != m or m < 0:
            raise ValueError(f"order must be a non-negative integer, got {m}")
        if m > M_MAX:
            raise ValueError(f"order {m} exceeds the resolvable maximum {M_MAX}")
        deriv = self.check_field(f)
        total = 0.0
        for j in range(m + 1):
            total = total + self.lebesgue_norm(self.bracket ** (m - j) * deriv, 2)
            if j < m:
                deriv = self.radial_derivative(deriv, odd=(j % 2 == 1))
        return total


def make_grid(d: int, R: float, N: int) -> RadialGrid:
    """Construct a RadialGrid; rejects d < 3, R <= 0 and N < 16."""
    return RadialGrid(d, R, N)


@dataclass(frozen=True)
class State:
    """A time slice (t, u, u_t) on one grid."""

    t: float
    u: np.ndarray
    ut: np.ndarray

    def __post_init__(self):
        if np.shape(self.u) != np.shape(self.ut):
            raise ValueError("u and ut must live on the same grid")

    def copy(self) -> "State":
        return State(self.t, np.array(self.u, dtype=np.float64), np.array(self.ut, dtype=np.float64))


@dataclass(frozen=True)
class MixedNormSpec:
    """Exponents of a sampled spacetime norm L^q_t L^r_x."""

    q: float
    r: float

    def __post_init__(self):
        for name, value in (('q', self.q), ('r', self.r)):
            if not (value == math.inf or 1.0 <= value < math.inf):
                raise ValueError(f"{name} must lie in [1, inf], got {value}")

    @staticmethod
    def scattering_size(d: int) -> "MixedNormSpec":
        """The L^{2(d+1)/(d-2)}_{t,x} scattering-size exponent pair."""
        p = 2.0 * (d + 1) / (d - 2)
        return MixedNormSpec(p, p)

    @staticmethod
    def energy_pair(d: int) -> "MixedNormSpec":
        """(inf, 2d/(d-2)): the Sobolev-embedded energy pair."""
        return MixedNormSpec(math.inf, 2.0 * d / (d - 2))

    @staticmethod
    def endpoint_pair(d: int) -> "MixedNormSpec":
        """(2, 2d/(d-3)): the endpoint Strichartz pair, d >= 4."""
        return MixedNormSpec(2.0, 2.0 * d / (d - 3))


@dataclass(frozen=True)
class Trajectory:
    """Fields sampled on an increasing time grid; values has shape (len(times), N)."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != times.shape[0]:
            raise ValueError(f"values shape {values.shape} does not match {times.shape[0]} sample times")
        if times.size > 1 and np.any(np.diff(times) <= 0):
            raise ValueError("sample times must be strictly increasing")
        object.__setattr__(self, 'times', times)
        object.__setattr__(self, 'values', values)

    def __len__(self):
        return self.times.shape[0]

    def __sub__(self, other: "Trajectory") -> "Trajectory":
        return Trajectory(self.times, self.values - other.values)

    def __add__(self, other: "Trajectory") -> "Trajectory":
        return Trajectory(self.times, self.values + other.values)

    @staticmethod
    def zeros_like(other: "Trajectory") -> "Trajectory":
        return Trajectory(other.times, np.zeros_like(other.values))

    def window(self, t_a: float, t_b: float) -> "Trajectory":
        """Samples with t_a <= t <= t_b."""
        keep = (self.times >= t_a) & (self.times <= t_b)
        return Trajectory(self.times[keep], self.values[keep])


def mixed_spacetime_norm(grid: RadialGrid, traj: Trajectory, spec: MixedNormSpec) -> float:
    """
    Temporal L^q (trapezoidal) of the spatial L^r norms of a trajectory.

    Args:
        grid: Grid the trajectory lives on
        traj: Non-empty trajectory
        spec: Exponent pair (q, r)

    Returns:
        The sampled mixed norm
    """
    if len(traj) == 0:
        raise ValueError("trajectory is empty")
    spatial = np.atleast_1d(grid.lebesgue_norm(traj.values, spec.r))
    if spec.q == math.inf:
        return float(spatial.max())
    if len(traj) == 1:
        return 0.0
    return float(trapezoid(spatial ** spec.q, traj.times) ** (1.0 / spec.q))


if __name__ == '__main__':
    grid = make_grid(6, 1.0, 1000)
    print(f"{grid}: sum of weights {grid.total_weight():.10f}, ball volume {ball_volume(6, 1.0):.10f}")
    r2 = grid.r ** 2
    print(f"Laplacian of r^2 at the first cells: {grid.radial_laplacian(r2)[:3]}")
