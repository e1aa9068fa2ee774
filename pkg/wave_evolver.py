#!/usr/bin/env python3
"""
Wave evolver module for thresholdlab.
Integrates the radial focusing wave equation u_tt = Delta u + |u|^{p_c-1} u
with a kick-drift-kick leapfrog, detects blow-up, measures the distance to
the family of rescaled ground states and records time-series diagnostics.
"""

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from ground_state import (
    EnergyBreakdown, Params, discrete_energy, far_field_value, ground_state,
    ground_state_profile, nonlinearity, scaled_ground_state, scaling_generator,
)
from profiles import ProfileSet, eval_Wka, eval_Wka_t, fit_decay_rate, static_defect
from radial_grid import MixedNormSpec, RadialGrid, State
from suites import smooth_cutoff


SERIES_COLUMNS = ['t', 'E_total', 'E_kin_t', 'E_kin_x', 'E_pot', 'grad_norm', 'ut_norm',
                  'sup_u', 'dist_W', 'lambda_best']
LOG_SCALE_BOUND = 2.0
LOG_SCALE_XATOL = 1e-10
DISPERSAL_GRADIENT = 0.9   # ||grad u|| below this fraction of ||grad W||
DISPERSAL_POTENTIAL = 0.1  # |potential| / kinetic_x below this
SUBTHRESHOLD_FACTORS = (0.9, 1.1)


class LightConeError(ValueError):
    """The run is longer than the distance from the data's support to r = R."""


@dataclass(frozen=True)
class EvolverConfig:
    """
    Settings for one evolution.

    background='ground_state' imposes u(R) = W(R) and adds the static defect
    of the discrete W as a constant force, so (W, 0) is an exact equilibrium
    of the scheme; background='vacuum' is the plain equation with u(R) = 0.
    """

    T_run: float
    cfl: float = 0.5
    direction: str = 'forward'
    blowup_threshold: float = 100.0
    diagnostic_stride: int = 20
    background: str = 'ground_state'
    nonlinear: bool = True
    track_distance: bool = True

    def __post_init__(self):
        if not self.T_run >= 0:
            raise ValueError(f"run length must be non-negative, got {self.T_run}")
        if not 0 < self.cfl <= 0.9:
            raise ValueError(f"cfl must lie in (0, 0.9], got {self.cfl}")
        if self.direction not in ('forward', 'backward'):
            raise ValueError(f"direction must be 'forward' or 'backward', got {self.direction!r}")
        if self.background not in ('ground_state', 'vacuum'):
            raise ValueError(f"background must be 'ground_state' or 'vacuum', got {self.background!r}")
        if self.background == 'ground_state' and not self.nonlinear:
            raise ValueError("the ground-state background needs the nonlinearity")
        if self.diagnostic_stride < 1:
            raise ValueError(f"diagnostic stride must be >= 1, got {self.diagnostic_stride}")
        if not self.blowup_threshold > 1:
            raise ValueError(f"blow-up threshold must exceed 1, got {self.blowup_threshold}")

    def timestep(self, grid: RadialGrid) -> float:
        """dt = cfl * h."""
        return self.cfl * grid.h


@dataclass(frozen=True)
class DiagnosticRecord:
    """One row of the diagnostic time series."""

    t: float
    energy: EnergyBreakdown
    conserved: float
    grad_norm: float
    ut_norm: float
    sup_u: float
    dist_W: float
    lambda_best: float
    lambda_at_bound: bool
    scattering_partial: float

    def row(self) -> List[float]:
        return [self.t, self.energy.total, self.energy.kinetic_t, self.energy.kinetic_x,
                self.energy.potential, self.grad_norm, self.ut_norm, self.sup_u,
                self.dist_W, self.lambda_best]


@dataclass
class EvolutionOutcome:
    """Result of evolve(): final state, blow-up flag and the diagnostic series."""

    final: State
    blew_up: bool
    t_blowup_estimate: Optional[float]
    series: List[DiagnosticRecord] = field(default_factory=list)
    steps: int = 0
    dt: float = 0.0

    @property
    def energy_drift(self) -> float:
        """max |H(t) - H(0)| / |H(0)| over the records, H the scheme's conserved energy."""
        if not self.series:
            return 0.0
        h0 = self.series[0].conserved
        scale = abs(h0) if h0 != 0 else 1.0
        return max(abs(rec.conserved - h0) for rec in self.series) / scale


# ----------------------------------------------------------------------
# distance to the ground-state family
# ----------------------------------------------------------------------

def dist_to_W(grid: RadialGrid, state: State) -> Tuple[float, float]:
    """
    min over lambda of ||grad(u - W_lambda)||_2 + ||u_t||_2.

    A coarse scan over log lambda in [-2, 2] brackets the minimum and a
    bounded Brent search refines it.

    Returns:
        (distance, lambda_best)
    """
    u = grid.check_field(state.u)
    ut_norm = float(grid.lebesgue_norm(state.ut, 2))

    def objective(s: float) -> float:
        return float(grid.h1dot_norm(u - scaled_ground_state(grid, math.exp(s))))

    scan = np.linspace(-LOG_SCALE_BOUND, LOG_SCALE_BOUND, 41)
    values = [objective(s) for s in scan]
    best = int(np.argmin(values))
    lo = scan[max(best - 1, 0)]
    hi = scan[min(best + 1, scan.size - 1)]
    res = minimize_scalar(objective, bounds=(lo, hi), method='bounded', options={'xatol': LOG_SCALE_XATOL})
    s_best, value = (float(res.x), float(res.fun)) if res.fun < values[best] else (float(scan[best]), values[best])
    return value + ut_norm, math.exp(s_best)


def distance_floor(grid: RadialGrid) -> float:
    """
    Smallest dist_to_W the search resolves: its value at (W, 0) plus the
    change of W_lambda across the log-lambda tolerance.
    """
    at_W, _ = dist_to_W(grid, State(0.0, ground_state(grid), grid.zeros()))
    return at_W + LOG_SCALE_XATOL * float(grid.h1dot_norm(scaling_generator(grid)))


# ----------------------------------------------------------------------
# the integrator
# ----------------------------------------------------------------------

def time_reverse(state: State) -> State:
    """(t, u, u_t) -> (-t, u, -u_t)."""
    return State(-state.t, np.array(state.u, dtype=np.float64), -np.asarray(state.ut, dtype=np.float64))


class WaveEvolver:
    """Leapfrog integrator for one grid and one configuration."""

    def __init__(self, grid: RadialGrid, cfg: EvolverConfig):
        """
        Initialize the evolver.

        Args:
            grid: Radial grid
            cfg: Evolution settings
        """
        self.grid = grid
        self.cfg = cfg
        self.params = Params(grid.d)
        self.W0 = float(ground_state_profile(grid.d, 0.0))
        if cfg.background == 'ground_state':
            self.background = ground_state(grid)
            self.boundary_value = far_field_value(grid)
            self.balance = -static_defect(grid)
        else:
            self.background = grid.zeros()
            self.boundary_value = 0.0
            self.balance = None
        self._scattering = MixedNormSpec.scattering_size(grid.d)

    def acceleration(self, u: np.ndarray) -> np.ndarray:
        """Delta u + f(u), plus the balancing force on the ground-state background."""
        acc = self.grid.radial_laplacian(u, self.boundary_value)
        if self.cfg.nonlinear:
            acc = acc + nonlinearity(u, self.params.p_c)
        if self.balance is not None:
            acc = acc - self.balance
        return acc

    def step(self, state: State, dt: float) -> State:
        """
        One kick-drift-kick step.

        Overflow is not an error here: the returned state may hold non-finite
        values, which evolve() reads as blow-up.
        """
        with np.errstate(over='ignore', invalid='ignore'):
            ut_half = state.ut + 0.5 * dt * self.acceleration(state.u)
            u = state.u + dt * ut_half
            ut = ut_half + 0.5 * dt * self.acceleration(u)
        return State(state.t + dt, u, ut)

    def conserved_energy(self, state: State) -> Tuple[EnergyBreakdown, float]:
        """Physical energy and the quantity the scheme conserves (they differ by the balancing term)."""
        E = discrete_energy(self.grid, state, self.boundary_value)
        H = E.total
        if self.balance is not None:
            H += float(self.grid.inner(self.balance, state.u))
        return E, H

    def support_radius(self, state: State) -> float:
        """Effective support of the deviation from the background."""
        grid = self.grid
        return max(grid.effective_support(np.asarray(state.u) - self.background),
                   grid.effective_support(state.ut))

    def check_domain(self, state: State):
        """
        Raises:
            LightConeError: T_run > R - R_support
        """
        reach = self.support_radius(state) + self.cfg.T_run
        if reach > self.grid.R:
            raise LightConeError(
                f"support {self.support_radius(state):.4g} + T_run {self.cfg.T_run:.4g} "
                f"exceeds R = {self.grid.R:.4g}")

    def record(self, state: State, scattering_partial: float) -> DiagnosticRecord:
        grid = self.grid
        E, H = self.conserved_energy(state)
        if self.cfg.track_distance:
            dist, lam = dist_to_W(grid, state)
        else:
            dist, lam = math.nan, math.nan
        at_bound = bool(np.isfinite(lam) and abs(math.log(lam)) >= LOG_SCALE_BOUND - 1e-6)
        return DiagnosticRecord(
            t=float(state.t), energy=E, conserved=H,
            grad_norm=float(grid.h1dot_norm(state.u)),
            ut_norm=float(grid.lebesgue_norm(state.ut, 2)),
            sup_u=float(np.max(np.abs(state.u))),
            dist_W=dist, lambda_best=lam, lambda_at_bound=at_bound,
            scattering_partial=scattering_partial,
        )

    def _blown_up(self, state: State) -> bool:
        if not (np.all(np.isfinite(state.u)) and np.all(np.isfinite(state.ut))):
            return True
        return float(np.max(np.abs(state.u))) > self.cfg.blowup_threshold * self.W0

    def evolve(self, state: State, verbose: bool = False) -> EvolutionOutcome:
        """
        Iterate step() for T_run, or until blow-up.

        A backward run is time_reverse, a forward run, time_reverse.

        Raises:
            LightConeError: the run would reach r = R
        """
        grid = self.grid
        cfg = self.cfg
        state = State(state.t, grid.check_field(state.u), grid.check_field(state.ut))
        self.check_domain(state)
        if cfg.direction == 'backward':
            forward = replace(cfg, direction='forward')
            outcome = WaveEvolver(grid, forward).evolve(time_reverse(state), verbose=verbose)
            return _reverse_outcome(outcome)

        dt_max = cfg.timestep(grid)
        steps = int(math.ceil(cfg.T_run / dt_max - 1e-9)) if cfg.T_run > 0 else 0
        dt = cfg.T_run / steps if steps else dt_max
        q = self._scattering.q

        scattering = 0.0
        series = [self.record(state, scattering)]
        last_record_t = state.t
        blew_up = False
        t_blowup = None
        taken = 0

        for n in range(1, steps + 1):
            nxt = self.step(state, dt)
            if self._blown_up(nxt):
                blew_up = True
                t_blowup = nxt.t
                if verbose:
                    print(f"  ✗ blow-up detected at t = {nxt.t:.6f}")
                break
            state = nxt
            taken = n
            if n % cfg.diagnostic_stride == 0 or n == steps:
                norm_q = float(grid.lebesgue_norm(state.u, q)) ** q
                scattering += norm_q * (state.t - last_record_t)
                last_record_t = state.t
                series.append(self.record(state, scattering))
                if verbose and n % (cfg.diagnostic_stride * 10) == 0:
                    rec = series[-1]
                    print(f"  t = {rec.t:8.3f}  ||grad u|| = {rec.grad_norm:.6f}  sup|u| = {rec.sup_u:.4f}")

        if blew_up and series[-1].t != state.t:
            series.append(self.record(state, scattering))
        return EvolutionOutcome(final=state, blew_up=blew_up, t_blowup_estimate=t_blowup,
                                series=series, steps=taken, dt=dt)


def _reverse_outcome(outcome: EvolutionOutcome) -> EvolutionOutcome:
    series = [replace(rec, t=-rec.t) for rec in outcome.series]
    t_blowup = -outcome.t_blowup_estimate if outcome.t_blowup_estimate is not None else None
    return EvolutionOutcome(final=time_reverse(outcome.final), blew_up=outcome.blew_up,
                            t_blowup_estimate=t_blowup, series=series,
                            steps=outcome.steps, dt=outcome.dt)


def evolve(grid: RadialGrid, state: State, cfg: EvolverConfig, verbose: bool = False) -> EvolutionOutcome:
    """Convenience wrapper around WaveEvolver(grid, cfg).evolve(state)."""
    return WaveEvolver(grid, cfg).evolve(state, verbose=verbose)


def step(grid: RadialGrid, state: State, dt: float, cfg: Optional[EvolverConfig] = None) -> State:
    """One leapfrog step; cfg defaults to the plain equation with u(R) = 0."""
    if cfg is None:
        cfg = EvolverConfig(T_run=dt, background='vacuum')
    if dt > 0.9 * grid.h + 1e-15:
        raise ValueError(f"dt = {dt:.4g} violates the CFL limit 0.9 h = {0.9 * grid.h:.4g}")
    return WaveEvolver(grid, cfg).step(state, dt)


# ----------------------------------------------------------------------
# classification and run families
# ----------------------------------------------------------------------

def classify(grid: RadialGrid, outcome: EvolutionOutcome) -> str:
    """
    'blowup', 'dispersal' or 'undecided'.

    Dispersal means some record has ||grad u|| < 0.9 ||grad W|| and
    |potential| < 0.1 kinetic_x.
    """
    if outcome.blew_up:
        return 'blowup'
    grad_W = float(grid.h1dot_norm(ground_state(grid)))
    for rec in outcome.series:
        kinetic_x = rec.energy.kinetic_x
        if (rec.grad_norm < DISPERSAL_GRADIENT * grad_W and kinetic_x > 0
                and abs(rec.energy.potential) < DISPERSAL_POTENTIAL * kinetic_x):
            return 'dispersal'
    return 'undecided'


def threshold_state(ps: ProfileSet, t0: float) -> State:
    """(W_k^a(t0), d_t W_k^a(t0)) as evolution data."""
    return State(float(t0), eval_Wka(ps, t0), eval_Wka_t(ps, t0))


def launch_support(grid: RadialGrid, state: State, background: str = 'ground_state') -> float:
    """R_support of evolution data, measured as evolve() measures it before the first step."""
    return WaveEvolver(grid, EvolverConfig(T_run=0.0, background=background)).support_radius(state)


def subthreshold_state(grid: RadialGrid, c: float, cutoff: float = 0.5) -> State:
    """
    (c W chi, 0) with chi a smooth cutoff to zero at r = cutoff * R.

    Below the threshold energy for c near 1, c != 1, and on the side of
    ||grad W|| given by c. The cutoff keeps the data inside the light cone.
    """
    r_cut = cutoff * grid.R
    chi = smooth_cutoff(grid, 0.5 * r_cut, r_cut)
    return State(0.0, c * chi * ground_state(grid), grid.zeros())


def convergence_rate(ps: ProfileSet, t0: float, T_run: float, cfl: float = 0.5,
                     stride: int = 20):
    """
    Forward evolution of W_k^a(t0) data and the fitted decay rate of dist_to_W.

    Returns:
        (EvolutionOutcome, RateFit)
    """
    grid = ps.grid
    cfg = EvolverConfig(T_run=T_run, cfl=cfl, diagnostic_stride=stride)
    outcome = evolve(grid, threshold_state(ps, t0), cfg)
    samples = [(rec.t, rec.dist_W) for rec in outcome.series if rec.dist_W > 0]
    return outcome, fit_decay_rate(samples, floor=distance_floor(grid))


def shadowing_error(ps: ProfileSet, t0: float, window: float = 1.0, cfl: float = 0.5,
                    stride: int = 4) -> Dict[str, float]:
    """
    Largest ||grad(u(t) - W_k^a(t))||_2 over [t0, t0 + window] for u launched from W_k^a(t0).

    The residual bound e^{-(k+1) e0 t0} is reported next to it.
    """
    grid = ps.grid
    cfg = EvolverConfig(T_run=window, cfl=cfl, diagnostic_stride=stride, track_distance=False)
    evolver = WaveEvolver(grid, cfg)
    state = threshold_state(ps, t0)
    evolver.check_domain(state)
    dt_max = cfg.timestep(grid)
    steps = int(math.ceil(window / dt_max - 1e-9))
    dt = window / steps
    worst = 0.0
    for _ in range(steps):
        state = evolver.step(state, dt)
        gap = float(grid.h1dot_norm(state.u - eval_Wka(ps, state.t)))
        worst = max(worst, gap)
    return {
        't0': float(t0),
        'window': float(window),
        'max_gap': worst,
        'residual_scale': math.exp(-(ps.k + 1) * ps.e0 * t0),
    }


# ----------------------------------------------------------------------
# output
# ----------------------------------------------------------------------

def write_series_csv(path, series: List[DiagnosticRecord]) -> Path:
    """Write the diagnostic series with the fixed column layout."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(SERIES_COLUMNS)
        for rec in series:
            writer.writerow([f"{value:.12e}" for value in rec.row()])
    return path


def summary(grid: RadialGrid, outcome: EvolutionOutcome) -> Dict[str, object]:
    """JSON-ready summary of one run."""
    first, last = outcome.series[0], outcome.series[-1]
    return {
        'classification': classify(grid, outcome),
        'blew_up': outcome.blew_up,
        't_blowup_estimate': outcome.t_blowup_estimate,
        't_start': first.t,
        't_final': last.t,
        'steps': outcome.steps,
        'dt': outcome.dt,
        'energy_drift': outcome.energy_drift,
        'grad_norm_initial': first.grad_norm,
        'grad_norm_final': last.grad_norm,
        'sup_u_max': max(rec.sup_u for rec in outcome.series),
        'scattering_partial': last.scattering_partial,
    }


if __name__ == '__main__':
    from radial_grid import make_grid

    grid = make_grid(6, 40.0, 800)
    print("=" * 70)
    print("Static ground state run (d = 6, T = 20)")
    print("=" * 70)
    W = ground_state(grid)
    outcome = evolve(grid, State(0.0, W, grid.zeros()), EvolverConfig(T_run=20.0))
    gap = float(grid.h1dot_norm(outcome.final.u - W)) / float(grid.h1dot_norm(W))
    print(f"{'✓' if gap <= 1e-3 else '✗'} ||grad(u - W)|| / ||grad W|| = {gap:.3e}")
    print(f"{'✓' if outcome.energy_drift <= 2e-4 else '✗'} energy drift {outcome.energy_drift:.3e}")
    wide = make_grid(6, 80.0, 1600)
    for c in (0.9, 1.1):
        run = evolve(wide, subthreshold_state(wide, c),
                     EvolverConfig(T_run=20.0, background='vacuum', track_distance=False))
        print(f"  c = {c}: {classify(wide, run)}")
