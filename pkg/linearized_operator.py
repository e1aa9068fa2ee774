#!/usr/bin/env python3
"""
Linearized operator module for thresholdlab.
Assembles L = -Delta - p_c W^{p_c-1} on the radial grid, finds its negative
eigenpair and solves the shifted systems (L + mu) x = rhs.
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import eigh_tridiagonal, solve_banded
from scipy.optimize import brentq

from ground_state import Params, ground_state, ground_state_profile, scaling_generator
from radial_grid import RadialGrid


ESSENTIAL_FLOOR = 1e-6  # delta_ess = ESSENTIAL_FLOOR * e0^2
SOLVE_TOLERANCE = 1e-10
MIN_EIGEN_RADIUS = 40.0


class SpectrumError(RuntimeError):
    """The discrete spectrum contradicts the expected structure."""


class NearSingularShiftError(ValueError):
    """The shift -mu sits on (or next to) an eigenvalue."""

    def __init__(self, mu: float, eigenvalue: float):
        self.mu = mu
        self.eigenvalue = eigenvalue
        super().__init__(f"shift mu = {mu:.10g} is within tolerance of eigenvalue {eigenvalue:.10g}")


@dataclass(frozen=True)
class Eigenpair:
    """Negative eigenvalue -e0^2 and its omega-normalized eigenfunction, Y[0] > 0."""

    e0: float
    Y: np.ndarray

    @property
    def eigenvalue(self) -> float:
        return -self.e0 ** 2


class DiscreteOperator:
    """
    Tridiagonal discretization of -Delta + V with Dirichlet closure at r = R.

    V defaults to -p_c W^{p_c-1}; potential=False gives the bare -Delta.
    """

    def __init__(self, grid: RadialGrid, potential: bool = True):
        self.grid = grid
        self.params = Params(grid.d)
        if potential:
            p_c = self.params.p_c
            self.V = -p_c * ground_state(grid) ** (p_c - 1.0)
        else:
            self.V = np.zeros(grid.N)
        self.has_potential = potential

        h = grid.h
        w = grid.weights
        A = grid.areas
        outer = A[1:].copy()
        outer[-1] = 2.0 * A[-1]  # half-cell distance to the boundary face
        self.diag = (outer + A[:-1]) / (h * w) + self.V
        self.upper = -A[1:-1] / (h * w[:-1])   # couples i to i+1
        self.lower = -A[1:-1] / (h * w[1:])    # couples i+1 to i
        self.sym_offdiag = -A[1:-1] / (h * np.sqrt(w[:-1] * w[1:]))
        self._sqrt_w = np.sqrt(w)
        self._e0_cache: Optional[float] = None

    def __repr__(self):
        kind = "L" if self.has_potential else "-Delta"
        return f"DiscreteOperator({kind}, {self.grid!r})"

    def apply(self, f) -> np.ndarray:
        """Matrix action; equals -radial_laplacian(f) + V f."""
        f = np.asarray(f, dtype=np.float64)
        return -self.grid.radial_laplacian(f) + self.V * f

    def symmetric(self) -> Tuple[np.ndarray, np.ndarray]:
        """Diagonal and off-diagonal of diag(sqrt w) L diag(sqrt w)^{-1}."""
        return self.diag, self.sym_offdiag

    def to_symmetric(self, f) -> np.ndarray:
        return self._sqrt_w * np.asarray(f)

    def from_symmetric(self, y) -> np.ndarray:
        return np.asarray(y) / self._sqrt_w.reshape((-1,) + (1,) * (np.ndim(y) - 1))

    def banded(self, mu: float = 0.0) -> np.ndarray:
        """(L + mu) in the (1, 1) banded layout of scipy.linalg.solve_banded."""
        ab = np.zeros((3, self.grid.N))
        ab[0, 1:] = self.upper
        ab[1, :] = self.diag + mu
        ab[2, :-1] = self.lower
        return ab

    def lowest_eigenvalues(self, count: int = 1) -> np.ndarray:
        d, e = self.symmetric()
        return eigh_tridiagonal(d, e, eigvals_only=True, select='i', select_range=(0, count - 1))

    def eigenvalues_between(self, lo: float, hi: float) -> np.ndarray:
        """Eigenvalues in the half-open interval (lo, hi]."""
        d, e = self.symmetric()
        return eigh_tridiagonal(d, e, eigvals_only=True, select='v', select_range=(lo, hi))

    def reference_e0(self) -> float:
        """e0 from the lowest eigenvalue, cached; 0 when the spectrum is non-negative."""
        if self._e0_cache is None:
            lam = float(self.lowest_eigenvalues(1)[0])
            self._e0_cache = math.sqrt(-lam) if lam < 0 else 0.0
        return self._e0_cache


def assemble_L(grid: RadialGrid, potential: bool = True) -> DiscreteOperator:
    """Build L = -Delta - p_c W^{p_c-1} (or -Delta alone) on the grid."""
    return DiscreteOperator(grid, potential=potential)


def ground_eigenpair(L: DiscreteOperator, refine_steps: int = 1,
                     min_radius: float = MIN_EIGEN_RADIUS) -> Eigenpair:
    """
    Smallest eigenvalue -e0^2 of L and its eigenfunction.

    Bisection plus inverse iteration on the symmetrized tridiagonal matrix
    (LAPACK stebz/stein through eigh_tridiagonal), followed by optional
    shifted inverse-iteration steps.

    Raises:
        ValueError: the grid is too small to hold the potential well
        SpectrumError: the lowest eigenvalue is not negative
    """
    if L.grid.R < min_radius:
        raise ValueError(f"outer radius {L.grid.R} below {min_radius}; the well is not resolved")
    d, e = L.symmetric()
    w, v = eigh_tridiagonal(d, e, select='i', select_range=(0, 0))
    lam = float(w[0])
    if lam >= 0:
        raise SpectrumError(f"lowest eigenvalue {lam:.6g} is not negative; refine the grid or enlarge R")

    y = v[:, 0]
    for _ in range(refine_steps):
        ab = np.zeros((3, d.size))
        ab[0, 1:] = e
        ab[1, :] = d - lam * (1.0 + 1e-12)
        ab[2, :-1] = e
        z = solve_banded((1, 1), ab, y)
        y = z / np.linalg.norm(z)
        Sy = d * y
        Sy[:-1] += e * y[1:]
        Sy[1:] += e * y[:-1]
        lam = float(y @ Sy)

    Y = L.from_symmetric(y)
    if Y[0] < 0:
        Y = -Y
    e0 = math.sqrt(-lam)
    L._e0_cache = e0
    return Eigenpair(e0=e0, Y=Y)


def eigen_residual(L: DiscreteOperator, eig: Eigenpair) -> float:
    """||L Y + e0^2 Y||_2."""
    return float(L.grid.lebesgue_norm(L.apply(eig.Y) - eig.eigenvalue * eig.Y, 2))


def negative_count(L: DiscreteOperator) -> int:
    """Number of eigenvalues below -delta_ess, delta_ess = 1e-6 e0^2."""
    lowest = float(L.lowest_eigenvalues(1)[0])
    if lowest >= 0:
        return 0
    floor = ESSENTIAL_FLOOR * (-lowest)
    return int(L.eigenvalues_between(2.0 * lowest - 1.0, -floor).size)


def spectral_gap(L: DiscreteOperator) -> float:
    """Distance between the two lowest eigenvalues."""
    w = L.lowest_eigenvalues(2)
    return float(w[1] - w[0])


def rayleigh_quotient(L: DiscreteOperator, f) -> float:
    """<L f, f>_omega / <f, f>_omega."""
    grid = L.grid
    return float(grid.inner(L.apply(f), f) / grid.inner(f, f))


def zero_mode_quotient(L: DiscreteOperator) -> float:
    """
    Rayleigh quotient of the scaling mode Lambda W, tapered to zero on [R/2, R].

    Lambda W spans the kernel of the continuum operator; the quotient
    tends to 0 as R grows.
    """
    grid = L.grid
    taper = np.where(grid.r <= grid.R / 2, 1.0,
                     np.cos(np.pi * (grid.r - grid.R / 2) / grid.R) ** 2)
    return rayleigh_quotient(L, taper * scaling_generator(grid))


def shifted_solve(L: DiscreteOperator, mu: float, rhs, e0: Optional[float] = None) -> np.ndarray:
    """
    Solve (L + mu) x = rhs by a banded direct solve.

    Args:
        L: Discrete operator
        mu: Shift
        rhs: Right-hand side field
        e0: Eigenvalue scale for the singularity tolerance (computed when omitted)

    Returns:
        x with ||(L + mu) x - rhs||_2 <= 1e-10 ||rhs||_2

    Raises:
        NearSingularShiftError: -mu lies within 1e-6 e0^2 of an eigenvalue
    """
    grid = L.grid
    rhs = grid.check_field(rhs)
    if e0 is None:
        e0 = L.reference_e0() or 1.0
    tol = ESSENTIAL_FLOOR * e0 ** 2
    nearby = L.eigenvalues_between(-mu - tol, -mu + tol)
    if nearby.size:
        raise NearSingularShiftError(mu, float(nearby[0]))

    rhs_norm = float(grid.lebesgue_norm(rhs, 2))
    if rhs_norm == 0.0:
        return np.zeros(grid.N)

    ab = L.banded(mu)
    x = solve_banded((1, 1), ab, rhs)
    for _ in range(2):
        defect = rhs - (L.apply(x) + mu * x)
        if grid.lebesgue_norm(defect, 2) <= SOLVE_TOLERANCE * rhs_norm:
            break
        x = x + solve_banded((1, 1), ab, defect)
    return x


# ----------------------------------------------------------------------
# independent shooting oracle
# ----------------------------------------------------------------------

def _shoot(e: float, d: int, p_c: float, r0: float, r_max: float) -> float:
    V0 = p_c

    def rhs(r, y):
        pot = p_c * ground_state_profile(d, r) ** (p_c - 1.0)
        return [y[1], -(d - 1) / r * y[1] + (e * e - pot) * y[0]]

    start = [1.0, (e * e - V0) * r0 / d]
    sol = solve_ivp(rhs, (r0, r_max), start, method='DOP853', rtol=1e-11, atol=1e-13)
    return float(sol.y[0, -1] * math.exp(-e * r_max))


def shooting_e0(d: int, r_max: float = 25.0, r0: float = 1e-4, scan: int = 40) -> float:
    """
    e0 from the radial ODE -y'' - (d-1)y'/r - p_c W^{p_c-1} y = -e^2 y.

    The growing e^{er} component at r_max changes sign as e crosses e0;
    a scan locates the bracket and brentq refines it.
    """
    p_c = Params(d).p_c
    grid_e = np.linspace(0.05, math.sqrt(p_c) * 0.999, scan)
    values = [_shoot(e, d, p_c, r0, r_max) for e in grid_e]
    bracket = None
    for i in range(scan - 1):
        if values[i] < 0 <= values[i + 1]:
            bracket = (grid_e[i], grid_e[i + 1])
    if bracket is None:
        raise SpectrumError(f"no sign change of the shooting function for d = {d}")
    return float(brentq(_shoot, *bracket, args=(d, p_c, r0, r_max), xtol=1e-12))


if __name__ == '__main__':
    from radial_grid import make_grid

    print("=" * 70)
    print("Linearized operator spectrum")
    print("=" * 70)
    for dim in (6, 7, 8):
        grid = make_grid(dim, 60.0, 6000)
        L = assemble_L(grid)
        eig = ground_eigenpair(L)
        print(f"d = {dim}: e0 = {eig.e0:.8f}  negative count = {negative_count(L)}  "
              f"shooting e0 = {shooting_e0(dim):.8f}")
