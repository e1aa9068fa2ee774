#!/usr/bin/env python3
"""
Seeded field suites for the sampled inequality and maximality checks.

Every suite is a stack of smooth radial fields, sums of even Gaussian bumps
times a C-infinity cutoff, drawn from a generator keyed by (seed, label) so
the same configuration always produces the same fields.
"""

import zlib
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from ground_state import ground_state, scaling_generator, sobolev_ratio
from radial_grid import RadialGrid


SUITE_SIZE = 100
HOLDOUT_FACTOR = 2.0
MAX_BUMPS = 3


def suite_rng(seed: int, label: str) -> np.random.Generator:
    """Independent generator per (seed, label)."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), zlib.crc32(label.encode())]))


def smooth_step(s) -> np.ndarray:
    """C-infinity transition: 0 for s <= 0, 1 for s >= 1."""
    s = np.clip(np.asarray(s, dtype=np.float64), 0.0, 1.0)
    with np.errstate(divide='ignore', over='ignore'):
        a = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
        b = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1.0 - s, 1.0)), 0.0)
    return a / (a + b)


def smooth_cutoff(grid: RadialGrid, r_inner: float, r_outer: float) -> np.ndarray:
    """1 on r <= r_inner, 0 on r >= r_outer, smooth in between."""
    if not 0 <= r_inner < r_outer:
        raise ValueError(f"need 0 <= r_inner < r_outer, got {r_inner}, {r_outer}")
    return 1.0 - smooth_step((grid.r - r_inner) / (r_outer - r_inner))


def bump_suite(grid: RadialGrid, seed: int, size: int = SUITE_SIZE, support: float = 0.5,
               label: str = 'bumps') -> np.ndarray:
    """
    Stack of `size` smooth fields vanishing beyond support * R.

    Each field is a sum of 1 to 3 even Gaussians exp(-((r -+ c)/w)^2) with
    random centers, widths and signed amplitudes, cut off smoothly.

    Returns:
        Array of shape (size, N)
    """
    if size < 2:
        raise ValueError(f"suite needs at least two fields, got {size}")
    if not 0 < support <= 1:
        raise ValueError(f"support fraction must lie in (0, 1], got {support}")
    rng = suite_rng(seed, label)
    r_cut = support * grid.R
    chi = smooth_cutoff(grid, 0.6 * r_cut, r_cut)
    w_min = max(0.5, 10.0 * grid.h)
    w_max = max(2.0 * w_min, 0.25 * r_cut)
    r = grid.r
    fields = np.empty((size, grid.N))
    for i in range(size):
        n = int(rng.integers(1, MAX_BUMPS + 1))
        centers = rng.uniform(0.0, 0.4 * r_cut, n)
        widths = rng.uniform(w_min, w_max, n)
        amps = rng.uniform(-1.0, 1.0, n)
        f = np.zeros(grid.N)
        for c, w, a in zip(centers, widths, amps):
            f += a * (np.exp(-((r - c) / w) ** 2) + np.exp(-((r + c) / w) ** 2))
        fields[i] = chi * f
    return fields


# ----------------------------------------------------------------------
# uniform constants
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class UniformConstant:
    """
    One constant for a whole suite, with a hold-out check.

    The constant is fitted (as the maximum ratio) on the first half of the
    suite; it passes when the second half stays below factor times that.
    """

    fitted: float
    holdout: float
    constant: float
    count: int
    factor: float = HOLDOUT_FACTOR

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.constant) and self.holdout <= self.factor * self.fitted)

    def to_dict(self) -> Dict[str, object]:
        return {
            'constant': self.constant,
            'fitted': self.fitted,
            'holdout': self.holdout,
            'count': self.count,
            'factor': self.factor,
            'passed': self.passed,
        }


def ratios(numerators, denominators) -> np.ndarray:
    """num / den with zero denominators dropped."""
    num = np.asarray(numerators, dtype=np.float64)
    den = np.asarray(denominators, dtype=np.float64)
    keep = den != 0
    return num[keep] / den[keep]


def uniform_constant(values, factor: float = HOLDOUT_FACTOR) -> UniformConstant:
    """
    Fit a suite constant to per-sample ratios.

    Raises:
        ValueError: fewer than two ratios
    """
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size < 2:
        raise ValueError(f"need at least two ratios, got {values.size}")
    half = values.size // 2
    fitted = float(np.max(values[:half]))
    holdout = float(np.max(values[half:]))
    return UniformConstant(fitted=fitted, holdout=holdout, constant=max(fitted, holdout),
                           count=int(values.size), factor=factor)


# ----------------------------------------------------------------------
# local maximality of the Sobolev ratio at W
# ----------------------------------------------------------------------

def h1_inner(grid: RadialGrid, f, g) -> np.ndarray:
    """<grad f, grad g>_omega."""
    return grid.inner(grid.radial_derivative(f), grid.radial_derivative(g))


def symmetry_directions(grid: RadialGrid) -> List[np.ndarray]:
    """
    W and Lambda W, cut off near R and orthonormalized in H-dot^1.

    The Sobolev ratio is constant along both (homogeneity and scaling).
    """
    chi = smooth_cutoff(grid, 0.8 * grid.R, grid.R)
    basis: List[np.ndarray] = []
    for direction in (chi * ground_state(grid), chi * scaling_generator(grid)):
        for e in basis:
            direction = direction - float(h1_inner(grid, direction, e)) * e
        basis.append(direction / np.sqrt(float(h1_inner(grid, direction, direction))))
    return basis


def sobolev_perturbations(grid: RadialGrid, seed: int, size: int = SUITE_SIZE) -> np.ndarray:
    """
    Suite fields with the symmetry directions projected out, scaled so
    ||grad g||_2 = ||grad W||_2. Every field vanishes at r = R.
    """
    fields = bump_suite(grid, seed, size=size, support=0.9, label='sobolev')
    basis = symmetry_directions(grid)
    target = float(grid.h1dot_norm(ground_state(grid)))
    out = np.empty_like(fields)
    for i, g in enumerate(fields):
        for e in basis:
            g = g - float(h1_inner(grid, g, e)) * e
        out[i] = g * (target / float(grid.h1dot_norm(g)))
    return out


@dataclass
class MaximalityReport:
    """Sobolev ratio at W against W + epsilon g over a perturbation suite."""

    ratio_W: float
    ratios: np.ndarray
    epsilon: float

    @property
    def below(self) -> int:
        return int(np.sum(self.ratios < self.ratio_W))

    @property
    def passed(self) -> bool:
        return self.below == self.ratios.size

    @property
    def worst_margin(self) -> float:
        """Smallest ratio_W - ratio over the suite (positive when all pass)."""
        return float(np.min(self.ratio_W - self.ratios))

    def to_dict(self) -> Dict[str, object]:
        return {
            'ratio_W': self.ratio_W,
            'epsilon': self.epsilon,
            'count': int(self.ratios.size),
            'below': self.below,
            'worst_margin': self.worst_margin,
            'passed': self.passed,
        }


def local_maximality(grid: RadialGrid, seed: int, size: int = SUITE_SIZE, epsilon: float = 0.1,
                     perturbations: Optional[np.ndarray] = None) -> MaximalityReport:
    """Compare sobolev_ratio(W + epsilon g) with sobolev_ratio(W) for each suite field g."""
    W = ground_state(grid)
    if perturbations is None:
        perturbations = sobolev_perturbations(grid, seed, size)
    values = np.array([sobolev_ratio(grid, W + epsilon * g) for g in perturbations])
    return MaximalityReport(ratio_W=float(sobolev_ratio(grid, W)), ratios=values, epsilon=epsilon)


if __name__ == '__main__':
    from radial_grid import make_grid

    grid = make_grid(6, 40.0, 1600)
    print("=" * 70)
    print("Sobolev ratio local maximality (d = 6, 100 perturbations)")
    print("=" * 70)
    report = local_maximality(grid, seed=7)
    status = '✓' if report.passed else '✗'
    print(f"{status} {report.below}/{report.ratios.size} below ratio(W) = {report.ratio_W:.8f}")
    print(f"  worst margin {report.worst_margin:.3e}")
