#!/usr/bin/env python3
"""
Experiment suites for thresholdlab.

Each cmd_* function runs one suite for a resolved ExperimentConfig, writes
its report.json, CSV tables and field files under <out_dir>/<suite>/, and
returns the SuiteReport. A failing sweep point is recorded as a FAULT and
the suite carries on.
"""

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Sequence

import numpy as np
from scipy.integrate import quad

from checksums import ChecksumManifest
from config_manager import ConfigManager, ExperimentConfig
from duhamel import (
    STEPS_PER_EFOLD, ContractionError, TimeGrid, build_propagator, data_at_start, decay_samples,
    k_independence, pde_residual, reconstruct, residual_floor, sigma_rate, solve_fixed_point,
    time_shift_fit,
)
from field_io import FieldFile, write_field
from ground_state import (
    Params, energy, ground_state, ground_state_derivative, ground_state_energy, ground_state_profile,
    pohozaev_defect, scale, static_residual,
)
from inequalities import (
    bilinear_constant, embedding_cases, embedding_constant, free_flow_growth,
    gain_of_decay_constant, multiplicative_constant, sigma_duhamel_bound, superlinearity,
    superlinearity_constant,
)
from linearized_operator import (
    assemble_L, eigen_residual, ground_eigenpair, negative_count, shooting_e0, spectral_gap,
    zero_mode_quotient,
)
from profiles import (
    build_profiles, cancellation_defects, eval_vk, fit_decay_rate, rate_window, residual, residual_rate,
    roundoff_floor,
)
from radial_grid import RadialGrid, State, Trajectory, make_grid, sphere_area
from suites import bump_suite, local_maximality
from sweeps import JobResult, run_sweep
from wave_evolver import (
    SUBTHRESHOLD_FACTORS, EvolverConfig, classify, convergence_rate, evolve, subthreshold_state, summary,
    threshold_state, write_series_csv,
)


FORMAT_VERSION = 1
PASS, FAIL, FAULT, INFO = 'PASS', 'FAIL', 'FAULT', 'INFO'
SCALING_FACTORS = (0.5, 2.0)
RESIDUAL_RATIO = (3.0, 5.0)
SENSITIVITY_N = 100
DOMAIN_FACTOR = 1.5
CONTRACTION_RETRIES = 3
# execution settings that do not change any computed number
EXECUTION_KEYS = ('out_dir', 'workers')


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars, arrays and tuples into plain JSON types."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    return value


def amplitude_tag(a: float) -> str:
    return f"a{a:+.6g}"


@dataclass
class Check:
    """One reported check."""

    name: str
    status: str
    value: Any = None
    target: Any = None

    def to_dict(self) -> Dict[str, Any]:
        return {'name': self.name, 'status': self.status, 'value': to_jsonable(self.value),
                'target': to_jsonable(self.target)}


class SuiteReport:
    """Checks and tables of one suite run."""

    def __init__(self, suite: str, cfg: ExperimentConfig, constraints: List[str], verbose: bool = True):
        self.suite = suite
        self.cfg = cfg
        self.constraints = list(constraints)
        self.verbose = verbose
        self.checks: List[Check] = []
        self.tables: Dict[str, Any] = {}

    @property
    def out_dir(self) -> Path:
        return Path(self.cfg.out_dir) / self.suite

    def _log(self, check: Check):
        if not self.verbose:
            return
        mark = {PASS: '✓', FAIL: '✗', FAULT: '✗', INFO: '⚠'}[check.status]
        target = f"  (target {check.target})" if check.target is not None else ""
        print(f"  {mark} {check.name}: {_short(check.value)}{target}")

    def add(self, name: str, passed: bool, value: Any, target: Any) -> Check:
        check = Check(name, PASS if passed else FAIL, value, target)
        self.checks.append(check)
        self._log(check)
        return check

    def info(self, name: str, value: Any) -> Check:
        check = Check(name, INFO, value)
        self.checks.append(check)
        self._log(check)
        return check

    def fault(self, name: str, error: str) -> Check:
        check = Check(name, FAULT, error)
        self.checks.append(check)
        self._log(check)
        return check

    def fault_from(self, name: str, result: JobResult) -> Check:
        return self.fault(name, f"{result.error_type}: {result.error}")

    @property
    def counts(self) -> Dict[str, int]:
        return {status: sum(1 for c in self.checks if c.status == status)
                for status in (PASS, FAIL, FAULT, INFO)}

    @property
    def ok(self) -> bool:
        counts = self.counts
        return counts[FAIL] == 0 and counts[FAULT] == 0

    def to_dict(self) -> Dict[str, Any]:
        config = {k: v for k, v in self.cfg.to_dict().items() if k not in EXECUTION_KEYS}
        return {
            'format_version': FORMAT_VERSION,
            'suite': self.suite,
            'status': PASS if self.ok else FAIL,
            'config': to_jsonable(config),
            'constraints': self.constraints,
            'checks': [c.to_dict() for c in self.checks],
            'counts': self.counts,
            'tables': to_jsonable(self.tables),
        }

    def write(self) -> Path:
        """Write <out_dir>/<suite>/report.json with sorted keys."""
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.out_dir / 'report.json'
        with open(path, 'w', newline='\n') as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write('\n')
        return path


def _short(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.6g}"
    return str(value)


def write_table(path: Path, columns: Sequence[str], rows: Sequence[Sequence[Any]]) -> Path:
    """CSV with a header row; floats in fixed 12-digit exponent format."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(columns)
        for row in rows:
            writer.writerow([f"{v:.12e}" if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def _banner(title: str, verbose: bool):
    if verbose:
        print("\n" + "=" * 70)
        print(title)
        print("=" * 70)


def _begin(name: str, cfg: ExperimentConfig, verbose: bool):
    sub = cfg.for_suite(name)
    constraints = [line for line in ConfigManager.check(cfg, suites=(name,))
                   if line.split(':')[0][2:] not in EXECUTION_KEYS]
    _banner(f"Suite {name}: d = {sub.d}, R = {sub.R}, N = {sub.N}", verbose)
    return sub, SuiteReport(name, sub, constraints, verbose)


def _sweep(sub: ExperimentConfig, jobs) -> List[JobResult]:
    return run_sweep(jobs, max_workers=sub.workers, verbose=False)


# ----------------------------------------------------------------------
# ground state
# ----------------------------------------------------------------------

def truncated_energy(d: int, R: float) -> float:
    """E(W, 0) restricted to the ball of radius R, by adaptive quadrature of the closed form."""
    sigma = sphere_area(d)
    q = Params(d).critical_exponent
    gradient = quad(lambda r: float(ground_state_derivative(d, r)) ** 2 * r ** (d - 1), 0.0, R,
                    limit=400, epsabs=0.0, epsrel=1e-12)[0]
    potential = quad(lambda r: float(ground_state_profile(d, r)) ** q * r ** (d - 1), 0.0, R,
                     limit=400, epsabs=0.0, epsrel=1e-12)[0]
    return sigma * (0.5 * gradient - potential / q)


def cmd_groundstate(cfg: ExperimentConfig, verbose: bool = True) -> SuiteReport:
    """
    Static residual with its refinement ratio, Pohozaev identity and energy of W
    for every dimension in dims; scaling invariance and local maximality in d.
    """
    sub, report = _begin('groundstate', cfg, verbose)
    tol_res = sub.tolerance('static_residual')
    rows = []

    for d in sorted({sub.d, *sub.dims}):
        tag = f"d={d}"
        grid = make_grid(d, sub.R, sub.N)
        W = ground_state(grid)
        try:
            res = static_residual(grid)
            report.add(f"static_residual[{tag}]", res <= tol_res, res, f"<= {tol_res}")
            ratio = static_residual(make_grid(d, sub.R, sub.N // 2)) / res
            report.add(f"residual_order[{tag}]", RESIDUAL_RATIO[0] <= ratio <= RESIDUAL_RATIO[1], ratio,
                       f"in [{RESIDUAL_RATIO[0]:g}, {RESIDUAL_RATIO[1]:g}] under h -> h/2")
        except Exception as e:
            report.fault(f"static_residual[{tag}]", f"{type(e).__name__}: {e}")

        try:
            poh = pohozaev_defect(grid)
            report.add(f"pohozaev[{tag}]", poh['relative_defect'] <= sub.tolerance('pohozaev'),
                       poh['relative_defect'], f"<= {sub.tolerance('pohozaev')}")
            report.tables[f"pohozaev[{tag}]"] = poh
            E_grid = energy(grid, State(0.0, W, grid.zeros())).total
            gap = abs(E_grid - poh['gradient_sq'] / d) / abs(E_grid)
            report.add(f"energy_identity[{tag}]", gap <= sub.tolerance('energy'), gap,
                       f"|E - ||grad W||^2/d| <= {sub.tolerance('energy')} E")
            E_exact = truncated_energy(d, grid.R)
            gap = abs(E_grid / E_exact - 1.0)
            report.add(f"energy[{tag}]", gap <= sub.tolerance('energy'), gap, f"<= {sub.tolerance('energy')}")
            rows.append([d, 1.0, E_grid, E_exact, gap])
        except Exception as e:
            report.fault(f"energy[{tag}]", f"{type(e).__name__}: {e}")

        write_field(report.out_dir / f"W_d{d}.field", FieldFile.from_grid(grid, 'ground_state', W))

    grid = make_grid(sub.d, sub.R, sub.N)
    W = ground_state(grid)
    tag = f"d={sub.d}"
    try:
        coarse = static_residual(make_grid(sub.d, sub.R, SENSITIVITY_N))
        report.add(f"residual_sensitivity[{tag},N={SENSITIVITY_N}]", coarse > tol_res, coarse,
                   f"> {tol_res} (coarse grid must fail the residual gate)")
    except Exception as e:
        report.fault(f"residual_sensitivity[{tag},N={SENSITIVITY_N}]", f"{type(e).__name__}: {e}")

    try:
        for lam in SCALING_FACTORS:
            scaled = scale(grid, State(0.0, W, grid.zeros()), lam, far_field_tail=True)
            E_lam = energy(grid, scaled).total
            E_ref = truncated_energy(grid.d, grid.R / lam)
            gap = abs(E_lam / E_ref - 1.0)
            report.add(f"scaling_invariance[lambda={lam:g}]", gap <= sub.tolerance('scaling'), gap,
                       f"<= {sub.tolerance('scaling')}")
            rows.append([grid.d, lam, E_lam, E_ref, gap])
    except Exception as e:
        report.fault('scaling_invariance', f"{type(e).__name__}: {e}")
    write_table(report.out_dir / 'energy.csv', ['d', 'lambda', 'E_grid', 'E_exact_truncated', 'relative_gap'],
                rows)

    try:
        maximality = local_maximality(grid, seed=sub.seed)
        report.add('sobolev_local_maximum', maximality.passed, maximality.worst_margin, "> 0 for every field")
        report.tables['sobolev'] = maximality.to_dict()
    except Exception as e:
        report.fault('sobolev_local_maximum', f"{type(e).__name__}: {e}")

    report.write()
    return report


# ----------------------------------------------------------------------
# spectrum
# ----------------------------------------------------------------------

def refinement_order(values: Sequence[float], sizes: Sequence[int]) -> float:
    """Observed convergence order from the last three entries of a refinement sequence."""
    if len(values) < 3:
        return math.nan
    e1 = abs(values[-3] - values[-2])
    e2 = abs(values[-2] - values[-1])
    if e2 == 0.0:
        return math.inf
    return math.log(e1 / e2) / math.log(sizes[-1] / sizes[-2])


def _spectrum_point(sub: ExperimentConfig, d: int, out_dir: Path) -> Dict[str, Any]:
    rows = []
    for N in sub.refinement:
        L = assemble_L(make_grid(d, sub.R, N))
        eig = ground_eigenpair(L)
        rows.append({'N': N, 'e0': eig.e0, 'eigen_residual': eigen_residual(L, eig)})
    grid = L.grid
    write_field(out_dir / f"Y_d{d}.field", FieldFile.from_grid(grid, 'eigenfunction', eig.Y, e0=eig.e0))
    wide = make_grid(d, DOMAIN_FACTOR * sub.R, int(round(DOMAIN_FACTOR * grid.N)))
    return {
        'rows': rows,
        'e0': eig.e0,
        'negative_count': negative_count(L),
        'potential_off_count': negative_count(assemble_L(grid, potential=False)),
        'zero_mode_quotient': zero_mode_quotient(L),
        'spectral_gap': spectral_gap(L),
        'wide_e0': ground_eigenpair(assemble_L(wide)).e0,
        'wide_R': wide.R,
        'shooting_e0': shooting_e0(d),
        'order': refinement_order([row['e0'] for row in rows], list(sub.refinement)),
    }


def cmd_spectrum(cfg: ExperimentConfig, verbose: bool = True) -> SuiteReport:
    """
    e0 per dimension with a refinement table, stability under N -> 2N and
    R -> 1.5R, negative count, spectral gap, Y files and the zero-mode quotient.
    """
    sub, report = _begin('spectrum', cfg, verbose)
    jobs = [((d,), _spectrum_point, (sub, d, report.out_dir)) for d in sub.dims]
    tol_stable = sub.tolerance('e0_stability')
    table = []
    for result in _sweep(sub, jobs):
        (d,) = result.key
        tag = f"d={d}"
        if not result.ok:
            report.fault_from(f"spectrum[{tag}]", result)
            continue
        info = result.value
        rows = info['rows']
        e0 = info['e0']
        table.extend([d, row['N'], row['e0'], row['eigen_residual']] for row in rows)
        report.add(f"negative_count[{tag}]", info['negative_count'] == 1, info['negative_count'], 1)
        report.add(f"potential_off_count[{tag}]", info['potential_off_count'] == 0,
                   info['potential_off_count'], 0)
        worst_residual = max(row['eigen_residual'] for row in rows)
        report.add(f"eigen_residual[{tag}]", worst_residual <= sub.tolerance('eigen_residual'),
                   worst_residual, f"<= {sub.tolerance('eigen_residual')}")
        report.add(f"refinement_order[{tag}]", info['order'] >= 1.8, info['order'], ">= 1.8")
        if len(rows) >= 2:
            prev, last = rows[-2], rows[-1]
            change = abs(last['e0'] / prev['e0'] - 1.0)
            report.add(f"e0_grid_stability[{tag},N={prev['N']}->{last['N']}]", change < tol_stable, change,
                       f"< {tol_stable}")
        change = abs(info['wide_e0'] / e0 - 1.0)
        report.add(f"e0_domain_stability[{tag},R={sub.R:g}->{info['wide_R']:g}]", change < tol_stable, change,
                   f"< {tol_stable}")
        gap_target = sub.tolerance('spectral_gap') * e0 ** 2
        report.add(f"spectral_gap[{tag}]", info['spectral_gap'] > gap_target, info['spectral_gap'],
                   f"> {gap_target:.6g} ({sub.tolerance('spectral_gap'):g} e0^2)")
        gap = abs(e0 / info['shooting_e0'] - 1.0)
        report.add(f"shooting_agreement[{tag}]", gap <= sub.tolerance('e0_agreement'), gap,
                   f"<= {sub.tolerance('e0_agreement')}")
        report.info(f"e0[{tag}]", e0)
        report.info(f"zero_mode_quotient[{tag}]", info['zero_mode_quotient'])
    write_table(report.out_dir / 'e0_refinement.csv', ['d', 'N', 'e0', 'eigen_residual'], table)
    report.tables['e0_refinement'] = table
    report.write()
    return report


# ----------------------------------------------------------------------
# profiles
# ----------------------------------------------------------------------

def _operator(sub: ExperimentConfig):
    L = assemble_L(make_grid(sub.d, sub.R, sub.N))
    return L, ground_eigenpair(L)


def _profile_point(a: float, k: int, eig, L, out_dir: Path) -> Dict[str, Any]:
    ps = build_profiles(a, k, eig, L)
    run_dir = out_dir / f"{amplitude_tag(a)}_k{k}"
    for j, phi in enumerate(ps.phis, start=1):
        write_field(run_dir / f"phi_{j}.field", FieldFile.from_grid(ps.grid, f"phi_{j}", phi, **ps.metadata()))
    info = {'phis': ps.phis, 'defects': cancellation_defects(ps), 't_check': ps.t_check, 'e0': ps.e0}
    info['fit'] = None
    if a == 0.0:
        info['floor'] = float(ps.grid.lebesgue_norm(residual(ps, ps.t_check), 2))
        return info
    times = rate_window(ps.e0, offset=ps.t_check)
    info['roundoff'] = float(np.max(roundoff_floor(ps, times)))
    try:
        info['fit'] = residual_rate(ps, times)
    except ValueError as e:
        info['rejected'] = str(e)
    return info


def cmd_profiles(cfg: ExperimentConfig, verbose: bool = True) -> SuiteReport:
    """Residual decay rates of W_k^a over the (a, k) sweep, with the sign-parity table."""
    sub, report = _begin('profiles', cfg, verbose)
    L, eig = _operator(sub)
    report.info('e0', eig.e0)
    jobs = [((a, k), _profile_point, (a, k, eig, L, report.out_dir))
            for a in sub.a_list for k in sub.k_list]
    rows = []
    phis = {}
    for result in _sweep(sub, jobs):
        a, k = result.key
        tag = f"{amplitude_tag(a)},k={k}"
        if not result.ok:
            report.fault_from(f"profiles[{tag}]", result)
            continue
        info = result.value
        phis[(a, k)] = info['phis']
        report.info(f"cancellation_defect[{tag}]", max(info['defects']))
        target = (k + 1) * eig.e0
        if 'floor' in info:
            report.info(f"residual_floor[{tag}]", info['floor'])
            rows.append([a, k, math.nan, target, math.nan, info['floor']])
            continue
        if 'rejected' in info:
            report.add(f"residual_rate[{tag}]", False, f"window rejected: {info['rejected']}",
                       f"{target:.6g} within {sub.tolerance('rate'):.0%}")
            rows.append([a, k, math.nan, target, math.nan, info['roundoff']])
            continue
        fit = info['fit']
        gap = abs(fit.rate / target - 1.0)
        report.add(f"residual_rate[{tag}]", gap <= sub.tolerance('rate'), fit.rate,
                   f"{target:.6g} within {sub.tolerance('rate'):.0%}")
        rows.append([a, k, fit.rate, target, fit.residual, info['roundoff']])

    if Params(sub.d).integer_power:
        for (a, k), pos in sorted(phis.items()):
            if a <= 0 or (-a, k) not in phis:
                continue
            neg = phis[(-a, k)]
            worst = max(float(np.max(np.abs(n - (-1) ** j * p))) / max(float(np.max(np.abs(p))), 1e-300)
                        for j, (p, n) in enumerate(zip(pos, neg), start=1))
            report.add(f"sign_parity[a=+-{a:g},k={k}]", worst <= sub.tolerance('parity'), worst,
                       f"<= {sub.tolerance('parity')}")

    write_table(report.out_dir / 'rates.csv', ['a', 'k', 'rate', 'target', 'fit_residual', 'floor'], rows)
    report.tables['rates'] = rows
    report.write()
    return report


# ----------------------------------------------------------------------
# fixed point
# ----------------------------------------------------------------------

def _time_grid(sub: ExperimentConfig, ps) -> TimeGrid:
    t_start = sub.resolve_t_start(ps.t_check, ps.e0)
    return TimeGrid(t_start, sub.resolve_T_max(t_start, ps.e0), 1.0 / (STEPS_PER_EFOLD * ps.e0))


def _solve_with_retry(sub: ExperimentConfig, ps, prop):
    """
    Solve on the configured window; on non-contraction move the window one
    e-folding later, at most CONTRACTION_RETRIES times.
    """
    tg = _time_grid(sub, ps)
    for attempt in range(CONTRACTION_RETRIES + 1):
        try:
            return tg, attempt, solve_fixed_point(ps, tg, tol=sub.tolerance('fixed_point'), prop=prop, m=sub.m)
        except ContractionError:
            if attempt == CONTRACTION_RETRIES:
                raise
            shift = 1.0 / ps.e0
            tg = TimeGrid(tg.t_start + shift, tg.T_max + shift, tg.dtau)


def _fixed_point_point(sub: ExperimentConfig, a: float, k: int, eig, L, prop) -> Dict[str, Any]:
    ps = build_profiles(a, k, eig, L)
    tg, retries, result = _solve_with_retry(sub, ps, prop)
    u, _ = reconstruct(ps, result)
    info: Dict[str, Any] = {'ps': ps, 'tg': tg, 'result': result, 'u': u, 'retries': retries}
    if a == 0.0:
        return info
    grid = ps.grid
    info['rates'] = {}
    for name, (points, floor) in decay_samples(ps, result).items():
        try:
            info['rates'][name] = fit_decay_rate(points, floor=floor)
        except ValueError as e:
            info['rates'][name] = f"window rejected: {e}"
    norms = grid.lebesgue_norm(pde_residual(ps, u).values, 2)
    info['pde_residual'] = float(np.max(norms))
    info['floor'] = residual_floor(ps, tg)

    start = data_at_start(ps, result)
    E_W = ground_state_energy(grid)
    info['energy_gap'] = abs(energy(grid, start).total / E_W - 1.0)
    info['gradient_side'] = float(grid.h1dot_norm(start.u)) - float(grid.h1dot_norm(ps.W))

    n = min(STEPS_PER_EFOLD, len(u) - 1)
    T_run = float(u.times[n] - u.times[0])
    run = evolve(grid, start, EvolverConfig(T_run=T_run, cfl=sub.cfl, track_distance=False))
    info['cross_validation'] = (float(grid.h1dot_norm(run.final.u - u.values[n]))
                                / float(grid.h1dot_norm(u.values[n] - ps.W)))
    return info


def cmd_fixedpoint(cfg: ExperimentConfig, verbose: bool = True) -> SuiteReport:
    """Picard fixed points W^a per (a, k), their checks, k independence and the time-shift table."""
    sub, report = _begin('fixedpoint', cfg, verbose)
    L, eig = _operator(sub)
    prop = build_propagator(L.grid)
    grid = L.grid
    k_max = max(sub.k_list)
    jobs = [((a, k), _fixed_point_point, (sub, a, k, eig, L, prop))
            for a in sub.a_list for k in sub.k_list]
    # companion amplitudes s e^{+-e0}: the same orbits shifted by one time unit either way
    signs = sorted({math.copysign(1.0, a) for a in sub.a_list if a != 0.0})
    queued = {(a, k_max) for a in sub.a_list}
    for s in signs:
        for c in (s * math.exp(-eig.e0), s * math.exp(eig.e0)):
            if (c, k_max) not in queued:
                jobs.append(((c, k_max), _fixed_point_point, (sub, c, k_max, eig, L, prop)))

    solved = {}
    history_rows = []
    for result in _sweep(sub, jobs):
        a, k = result.key
        tag = f"{amplitude_tag(a)},k={k}"
        if not result.ok:
            report.fault_from(f"fixedpoint[{tag}]", result)
            continue
        info = result.value
        solved[(a, k)] = info
        fp = info['result']
        history_rows.extend([a, k, i + 1, value] for i, value in enumerate(fp.history))
        report.tables[f"fixedpoint[{tag}]"] = fp.to_dict()
        if a == 0.0:
            report.add(f"trivial_solution[{tag}]", bool(np.all(fp.h.values == 0.0)), fp.iterations, "h = 0")
            continue
        worst_ratio = max(fp.ratios[1:], default=0.0)
        report.add(f"contraction[{tag}]", worst_ratio <= sub.tolerance('contraction'), worst_ratio,
                   f"<= {sub.tolerance('contraction')} after iteration 2")
        rates = info['rates']
        w_target = f"{eig.e0:.6g} within {sub.tolerance('rate'):.0%}"
        if isinstance(rates['w'], str):
            report.add(f"decay_w[{tag}]", False, rates['w'], w_target)
        else:
            gap = abs(rates['w'].rate / eig.e0 - 1.0)
            report.add(f"decay_w[{tag}]", gap <= sub.tolerance('rate'), rates['w'].rate, w_target)
        h_target = 0.95 * sigma_rate(info['ps'])
        if isinstance(rates['h'], str):
            report.add(f"decay_h[{tag}]", False, rates['h'], f">= {h_target:.6g}")
        else:
            report.add(f"decay_h[{tag}]", rates['h'].rate >= h_target, rates['h'].rate, f">= {h_target:.6g}")
        bound = sub.tolerance('residual_factor') * info['floor']
        report.add(f"pde_residual[{tag}]", info['pde_residual'] <= bound, info['pde_residual'],
                   f"<= {bound:.3e}")
        report.add(f"cross_validation[{tag}]", info['cross_validation'] <= sub.tolerance('cross_validation'),
                   info['cross_validation'], f"<= {sub.tolerance('cross_validation')}")
        report.add(f"threshold_energy[{tag}]", info['energy_gap'] <= sub.tolerance('threshold_energy'),
                   info['energy_gap'], f"<= {sub.tolerance('threshold_energy')}")
        side = math.copysign(1.0, info['gradient_side'])
        report.add(f"gradient_side[{tag}]", side == math.copysign(1.0, a), info['gradient_side'],
                   f"sign {'+' if a > 0 else '-'}")
        if info['retries']:
            report.info(f"t_start_retries[{tag}]", info['retries'])

    for (a, k), info in sorted(solved.items()):
        if k != k_max or a == 0.0:
            continue
        for k_lo in sorted(set(sub.k_list) - {k_max}):
            if (a, k_lo) not in solved:
                continue
            u_lo = solved[(a, k_lo)]['u']
            tg = info['tg']
            window = u_lo.window(tg.t_start, tg.t_start + 3.0 / eig.e0)
            name = f"k_independence[{amplitude_tag(a)},k={k_lo}vs{k}]"
            try:
                gap = k_independence(grid, window, info['u'], info['ps'].W)
            except ValueError as e:
                report.fault(name, str(e))
                continue
            report.add(name,
                       gap <= sub.tolerance('k_independence'), gap, f"<= {sub.tolerance('k_independence')}")

    shift_rows = _shift_table(report, sub, solved, k_max, eig.e0, grid)
    write_table(report.out_dir / 'sigma_history.csv', ['a', 'k', 'iteration', 'sigma_difference'], history_rows)
    write_table(report.out_dir / 'time_shift.csv', ['a', 'a_ref', 'T_fit', 'T_expected', 'residual'], shift_rows)
    report.tables['time_shift'] = shift_rows
    report.write()
    return report


def _shift_table(report: SuiteReport, sub: ExperimentConfig, solved, k_max: int, e0: float,
                 grid: RadialGrid) -> List[List[float]]:
    """Fit W^a(t + T) ~ W^{a_ref}(t); same-sign fits recover log|a/a_ref|/e0, cross-sign fits do not."""
    rows = []
    same_residual = {}
    refs = {}
    for (a, k), info in sorted(solved.items()):
        if k == k_max and a != 0.0:
            refs.setdefault(math.copysign(1.0, a), (a, info['u']))
    for (a, k), info in sorted(solved.items()):
        if k != k_max or a == 0.0:
            continue
        sign = math.copysign(1.0, a)
        a_ref, u_ref = refs[sign]
        if a == a_ref:
            continue
        try:
            fit = time_shift_fit(grid, info['u'], u_ref)
        except ValueError as e:
            report.fault(f"time_shift[{amplitude_tag(a)}]", str(e))
            continue
        expected = math.log(abs(a / a_ref)) / e0
        gap = abs(fit.T / expected - 1.0) if expected != 0 else abs(fit.T)
        report.add(f"time_shift[{amplitude_tag(a)}]", gap <= sub.tolerance('shift'), fit.T,
                   f"{expected:.6g} within {sub.tolerance('shift'):.0%}")
        same_residual[sign] = max(same_residual.get(sign, 0.0), fit.residual)
        rows.append([a, a_ref, fit.T, expected, fit.residual])

    if len(refs) == 2 and same_residual:
        a_plus, u_plus = refs[1.0]
        a_minus, u_minus = refs[-1.0]
        try:
            cross = time_shift_fit(grid, u_minus, u_plus)
            floor = max(same_residual.values())
            report.add("opposite_sign_mismatch", cross.residual >= 10.0 * floor, cross.residual,
                       f">= 10 x {floor:.3e}")
            rows.append([a_minus, a_plus, cross.T, math.nan, cross.residual])
        except ValueError as e:
            report.fault("opposite_sign_mismatch", str(e))
    return rows


# ----------------------------------------------------------------------
# dichotomy
# ----------------------------------------------------------------------

def expected_outcome(a: float) -> str:
    """Backward-in-time fate of W^a: W^+ blows up, W^- disperses, W stays put."""
    if a > 0:
        return 'blowup'
    if a < 0:
        return 'dispersal'
    return 'undecided'


def _dichotomy_point(sub: ExperimentConfig, a: float, k: int, eig, L, out_dir: Path) -> Dict[str, Any]:
    ps = build_profiles(a, k, eig, L)
    t0 = sub.resolve_t_start(ps.t_check, ps.e0)
    cfg = EvolverConfig(T_run=sub.T_run, cfl=sub.cfl, direction='backward', track_distance=False)
    outcome = evolve(ps.grid, threshold_state(ps, t0), cfg)
    run_dir = out_dir / f"{amplitude_tag(a)}_k{k}"
    write_series_csv(run_dir / 'series.csv', outcome.series)
    info = {'summary': summary(ps.grid, outcome), 't0': t0}
    if sub.stability_check:
        # same cfl on the doubled grid: h and dt both halve
        fine = assemble_L(make_grid(sub.d, sub.R, 2 * sub.N))
        ps_fine = build_profiles(a, k, ground_eigenpair(fine), fine)
        rerun = evolve(ps_fine.grid, threshold_state(ps_fine, t0), cfg)
        info['refined'] = classify(ps_fine.grid, rerun)
        info['refined_dt'] = rerun.dt
    if a != 0.0:
        try:
            _, fit = convergence_rate(ps, t0 + 1.0 / ps.e0, 3.0 / ps.e0, cfl=sub.cfl)
            info['forward_rate'] = fit.rate
        except ValueError as e:
            info['forward_rate'] = f"window rejected: {e}"
    return info


def _reference_point(sub: ExperimentConfig, c: float, out_dir: Path) -> Dict[str, Any]:
    grid = make_grid(sub.d, sub.R, sub.N)
    cfg = EvolverConfig(T_run=sub.T_run, cfl=sub.cfl, background='vacuum', track_distance=False)
    outcome = evolve(grid, subthreshold_state(grid, c), cfg)
    write_series_csv(out_dir / f"subthreshold_c{c:g}" / 'series.csv', outcome.series)
    return {'summary': summary(grid, outcome)}


def cmd_dichotomy(cfg: ExperimentConfig, verbose: bool = True) -> SuiteReport:
    """Backward evolutions of W_k^a data classified as blow-up, dispersal or undecided."""
    sub, report = _begin('dichotomy', cfg, verbose)
    L, eig = _operator(sub)
    jobs = [(('threshold', a, k), _dichotomy_point, (sub, a, k, eig, L, report.out_dir))
            for a in sub.a_list for k in sub.k_list]
    if sub.reference_runs:
        jobs += [(('subthreshold', c, 0), _reference_point, (sub, c, report.out_dir))
                 for c in SUBTHRESHOLD_FACTORS]

    rows = []
    for result in _sweep(sub, jobs):
        family, a, k = result.key
        tag = f"{amplitude_tag(a)},k={k}" if family == 'threshold' else f"c={a:g}"
        if not result.ok:
            report.fault_from(f"{family}[{tag}]", result)
            continue
        info = result.value
        s = info['summary']
        rows.append([family, a, k, s['classification'], s['t_start'], s['t_final'],
                     s['t_blowup_estimate'] if s['t_blowup_estimate'] is not None else math.nan,
                     s['grad_norm_initial'], s['grad_norm_final'], s['energy_drift']])
        if family == 'subthreshold':
            if a > 1.0:
                report.add(f"subthreshold[{tag}]", s['classification'] == 'blowup', s['classification'],
                           'blowup')
            else:
                report.add(f"subthreshold[{tag}]", s['classification'] != 'blowup', s['classification'],
                           'no blow-up')
            continue
        expected = expected_outcome(a)
        report.add(f"classification[{tag}]", s['classification'] == expected, s['classification'], expected)
        drift_rate = s['energy_drift'] / max(abs(s['t_final'] - s['t_start']), 1e-300)
        if a == 0.0:
            # (W, 0) is an equilibrium of the balanced scheme; its drift is the round-off baseline
            report.info(f"static_control[{tag}]", drift_rate)
        elif not s['blew_up']:
            report.add(f"energy_drift[{tag}]", drift_rate <= sub.tolerance('energy_drift'), drift_rate,
                       f"<= {sub.tolerance('energy_drift')} per unit time")
        if 'refined' in info:
            report.add(f"refinement_stability[{tag}]", info['refined'] == s['classification'],
                       info['refined'], f"{s['classification']} at 2N, dt = {info['refined_dt']:.4g}")
        if 'forward_rate' in info:
            rate_target = f"{eig.e0:.6g} within {sub.tolerance('convergence_rate'):.0%}"
            if isinstance(info['forward_rate'], str):
                report.add(f"forward_convergence[{tag}]", False, info['forward_rate'], rate_target)
            else:
                gap = abs(info['forward_rate'] / eig.e0 - 1.0)
                report.add(f"forward_convergence[{tag}]", gap <= sub.tolerance('convergence_rate'),
                           info['forward_rate'], rate_target)

    columns = ['family', 'a', 'k', 'classification', 't_start', 't_final', 't_blowup', 'grad_initial',
               'grad_final', 'energy_drift']
    write_table(report.out_dir / 'classification.csv', columns, rows)
    report.tables['runs'] = rows
    report.write()
    return report


# ----------------------------------------------------------------------
# inequalities
# ----------------------------------------------------------------------

def cmd_inequalities(cfg: ExperimentConfig, verbose: bool = True) -> SuiteReport:
    """Suite-wide constants and slopes for the sampled inequalities."""
    sub, report = _begin('inequalities', cfg, verbose)
    grid = make_grid(sub.d, sub.R, sub.N)
    fields = bump_suite(grid, seed=sub.seed)
    rows = []

    def constant(name: str, compute: Callable[[], Any], asserted: bool = True):
        try:
            uc = compute()
        except Exception as e:
            report.fault(name, f"{type(e).__name__}: {e}")
            return None
        if asserted:
            report.add(name, uc.passed, uc.constant, f"hold-out max <= {uc.factor:g} x fitted")
        else:
            report.info(name, uc.constant)
        rows.append([name, uc.fitted, uc.holdout, uc.constant, uc.count])
        return uc

    for k1, k2 in embedding_cases(grid.d):
        constant(f"embedding[k1={k1},k2={k2}]", lambda: embedding_constant(grid, fields, k1, k2))
    constant(f"bilinear[m={sub.m}]", lambda: bilinear_constant(grid, fields, m=sub.m))
    for j in (2, 3):
        constant(f"multiplicative[j={j}]", lambda: multiplicative_constant(grid, fields, j=j, m=sub.m),
                 asserted=False)

    p_c = Params(grid.d).p_c
    scales = None if Params(grid.d).integer_power else np.logspace(-4.0, -2.0, 9)
    try:
        fits = [superlinearity(grid, f) if scales is None else superlinearity(grid, f, scales)
                for f in fields[:5]]
        worst = min(fits, key=lambda fit: fit.slope)
        report.add("superlinearity_slope", all(fit.passed for fit in fits), worst.slope,
                   f">= {p_c:g} - 0.1")
    except Exception as e:
        report.fault("superlinearity_slope", f"{type(e).__name__}: {e}")
    constant("superlinearity_constant", lambda: superlinearity_constant(grid, fields))

    try:
        L = assemble_L(grid)
        eig = ground_eigenpair(L)
        a = next((a for a in sub.a_list if a != 0.0), 1.0)
        ps = build_profiles(a, max(sub.k_list), eig, L)
        times = ps.t_check + np.array([2.0, 3.0, 4.0]) / ps.e0
        w = Trajectory(times, eval_vk(ps, times))
        constant("gain_of_decay", lambda: gain_of_decay_constant(grid, w, ps.e0, fields))
    except Exception as e:
        report.fault("gain_of_decay", f"{type(e).__name__}: {e}")

    try:
        prop = build_propagator(grid)
        growth = constant(f"free_flow_growth[m={sub.m}]",
                          lambda: free_flow_growth(prop, fields, np.linspace(0.0, 5.0, 11), m=sub.m))
        if growth is not None:
            alpha = growth.constant + 2.0
            bound = sigma_duhamel_bound(prop, fields, alpha=alpha, growth=growth.constant, m=sub.m)
            report.add("sigma_duhamel_bound", bound.passed, bound.measured.constant, f"<= {bound.bound:.6g}")
            report.tables['sigma_duhamel_bound'] = bound.to_dict()
    except Exception as e:
        report.fault("sigma_duhamel_bound", f"{type(e).__name__}: {e}")

    write_table(report.out_dir / 'constants.csv', ['check', 'fitted', 'holdout', 'constant', 'count'], rows)
    report.tables['constants'] = rows
    report.write()
    return report


# ----------------------------------------------------------------------
# orchestration
# ----------------------------------------------------------------------

COMMANDS: Dict[str, Callable[[ExperimentConfig, bool], SuiteReport]] = {
    'groundstate': cmd_groundstate,
    'spectrum': cmd_spectrum,
    'profiles': cmd_profiles,
    'fixedpoint': cmd_fixedpoint,
    'dichotomy': cmd_dichotomy,
    'inequalities': cmd_inequalities,
}


def run_suites(names: Sequence[str], cfg: ExperimentConfig, verbose: bool = True) -> List[SuiteReport]:
    """
    Run suites in order and write the SHA256SUMS manifest of the output directory.

    A suite that raises is recorded as a single FAULT report.
    """
    reports = []
    for name in names:
        try:
            reports.append(COMMANDS[name](cfg, verbose))
        except Exception as e:
            sub = cfg.for_suite(name)
            report = SuiteReport(name, sub, [], verbose)
            report.fault(name, f"{type(e).__name__}: {e}")
            report.write()
            reports.append(report)

    ChecksumManifest.write(cfg.out_dir)
    if verbose:
        _banner("Summary", verbose)
        for report in reports:
            counts = report.counts
            mark = '✓' if report.ok else '✗'
            print(f"{mark} {report.suite}: {counts[PASS]} passed, {counts[FAIL]} failed, "
                  f"{counts[FAULT]} fault(s), {counts[INFO]} info")
    return reports


def exit_status(reports: Sequence[SuiteReport]) -> int:
    """0 iff no suite failed or faulted."""
    return 0 if all(report.ok for report in reports) else 1


if __name__ == '__main__':
    import sys

    manager = ConfigManager()
    names = sys.argv[1:] or list(COMMANDS)
    sys.exit(exit_status(run_suites(names, manager.experiment_config())))
