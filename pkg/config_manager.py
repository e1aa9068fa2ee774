#!/usr/bin/env python3
"""Configuration manager for thresholdlab experiment suites."""

import copy
import json
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from duhamel import MIN_SPAN
from linearized_operator import assemble_L, ground_eigenpair
from profiles import build_profiles
from radial_grid import make_grid
from wave_evolver import SUBTHRESHOLD_FACTORS, launch_support, subthreshold_state, threshold_state


CONFIG_FILE = Path.home() / ".config" / "thresholdlab" / "config.json"

SUITES = ('groundstate', 'spectrum', 'profiles', 'fixedpoint', 'dichotomy', 'inequalities')
SWEEP_SUITES = ('profiles', 'fixedpoint', 'dichotomy')
EVOLUTION_SUITES = ('dichotomy',)

DEFAULTS = {
    'd': 6,
    'R': 40.0,
    'N': 1600,
    'cfl': 0.5,
    'm': 2,
    'dims': [6],
    'a_list': [1.0, -1.0],
    'k_list': [1, 2, 3],
    # t_start = t_check + offset / e0
    't_start': {'policy': 'check_offset', 'offset': 1.0},
    # T_max = t_start + span / e0
    'T_max': {'policy': 'span', 'span': 6.0},
    'T_run': 25.0,
    'refinement': [400, 800, 1600],
    'reference_runs': True,
    'stability_check': True,
    'tolerances': {
        'static_residual': 1e-4,
        'pohozaev': 1e-3,
        'energy': 1e-3,
        'scaling': 1e-3,
        'eigen_residual': 1e-8,
        'rate': 0.05,
        'shift': 0.02,
        'fixed_point': 1e-10,
        'cross_validation': 1e-2,
        'k_independence': 1e-2,
        # per unit time
        'energy_drift': 1e-5,
        'threshold_energy': 1e-4,
        'e0_agreement': 1e-2,
        'e0_stability': 1e-2,
        # fraction of e0^2
        'spectral_gap': 0.1,
        'convergence_rate': 0.10,
        'parity': 1e-10,
        'contraction': 0.5,
        'residual_factor': 10.0,
    },
    'out_dir': 'thresholdlab-runs',
    'seed': 7,
    'workers': 2,
    'suites': {
        'groundstate': {'R': 60.0, 'N': 6000, 'dims': [6, 7, 8]},
        'spectrum': {'R': 60.0, 'N': 6000, 'dims': [6, 7, 8], 'refinement': [1500, 3000, 6000]},
        'profiles': {},
        'fixedpoint': {'R': 60.0, 'N': 1200},
        'dichotomy': {'R': 80.0, 'N': 1600, 'T_run': 25.0, 'k_list': [3],
                      'a_list': [1e-2, -1e-2, 1e-3, -1e-3, 0.0]},
        'inequalities': {'R': 40.0, 'N': 800},
    },
}


class ConfigError(ValueError):
    """A configuration constraint was violated."""


def deep_merge(base: Dict, overlay: Dict) -> Dict:
    """Recursively merge overlay into a copy of base; overlay wins on leaves."""
    merged = copy.deepcopy(base)
    for key, value in overlay.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved settings for one suite run."""

    d: int
    R: float
    N: int
    cfl: float
    m: int
    dims: Tuple[int, ...]
    a_list: Tuple[float, ...]
    k_list: Tuple[int, ...]
    t_start: Dict[str, object]
    T_max: Dict[str, object]
    T_run: float
    refinement: Tuple[int, ...]
    reference_runs: bool
    stability_check: bool
    tolerances: Dict[str, float]
    out_dir: str
    seed: int
    workers: int
    suites: Dict[str, Dict] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: Dict) -> "ExperimentConfig":
        """
        Build from a merged config dict.

        Raises:
            ConfigError: a key is missing or has the wrong type
        """
        try:
            return cls(
                d=int(data['d']),
                R=float(data['R']),
                N=int(data['N']),
                cfl=float(data['cfl']),
                m=int(data['m']),
                dims=tuple(int(d) for d in data['dims']),
                a_list=tuple(float(a) for a in data['a_list']),
                k_list=tuple(int(k) for k in data['k_list']),
                t_start=dict(data['t_start']),
                T_max=dict(data['T_max']),
                T_run=float(data['T_run']),
                refinement=tuple(int(n) for n in data['refinement']),
                reference_runs=bool(data['reference_runs']),
                stability_check=bool(data['stability_check']),
                tolerances={key: float(value) for key, value in data['tolerances'].items()},
                out_dir=str(data['out_dir']),
                seed=int(data['seed']),
                workers=int(data['workers']),
                suites=copy.deepcopy(data.get('suites', {})),
            )
        except KeyError as e:
            raise ConfigError(f"missing configuration key {e}") from e
        except (TypeError, ValueError) as e:
            raise ConfigError(f"invalid configuration value: {e}") from e

    def to_dict(self) -> Dict:
        data = asdict(self)
        for key in ('dims', 'a_list', 'k_list', 'refinement'):
            data[key] = list(data[key])
        return data

    def for_suite(self, name: str) -> "ExperimentConfig":
        """This config with the overrides of suites.<name> applied."""
        if name not in SUITES:
            raise ConfigError(f"unknown suite {name!r}")
        overrides = self.suites.get(name, {})
        known = {f.name for f in fields(self)} - {'suites'}
        unknown = sorted(set(overrides) - known)
        if unknown:
            raise ConfigError(f"suites.{name}: unknown keys {', '.join(unknown)}")
        merged = deep_merge(self.to_dict(), overrides)
        return replace(ExperimentConfig.from_dict(merged), suites={})

    def tolerance(self, name: str) -> float:
        if name not in self.tolerances:
            raise ConfigError(f"no tolerance named {name!r}")
        return self.tolerances[name]

    def resolve_t_start(self, t_check: float, e0: float) -> float:
        """Start of the fixed-point window under the t_start policy."""
        if self.t_start['policy'] == 'fixed':
            return float(self.t_start['value'])
        return t_check + float(self.t_start['offset']) / e0

    def resolve_T_max(self, t_start: float, e0: float) -> float:
        """End of the fixed-point window under the T_max policy."""
        if self.T_max['policy'] == 'fixed':
            return float(self.T_max['value'])
        return t_start + float(self.T_max['span']) / e0


_SUPPORT_CACHE: Dict[str, float] = {}


def measured_support(sub: ExperimentConfig) -> float:
    """
    Largest R_support over the launch states of an evolution suite.

    The threshold data W_k^a(t0) for every (a, k), and the sub-threshold
    references when enabled, are built on the suite grid and measured
    the way the evolver measures them before its first step.

    Raises:
        ConfigError: the launch data cannot be built on this grid
    """
    key = json.dumps([sub.d, sub.R, sub.N, sub.a_list, sub.k_list, sub.t_start, sub.reference_runs],
                     sort_keys=True)
    if key in _SUPPORT_CACHE:
        return _SUPPORT_CACHE[key]
    grid = make_grid(sub.d, sub.R, sub.N)
    radii = [0.0]
    try:
        L = assemble_L(grid)
        eig = ground_eigenpair(L)
        for a in sub.a_list:
            for k in sub.k_list:
                ps = build_profiles(a, k, eig, L)
                t0 = sub.resolve_t_start(ps.t_check, ps.e0)
                radii.append(launch_support(grid, threshold_state(ps, t0)))
    except (ValueError, RuntimeError) as e:
        raise ConfigError(f"cannot build the launch data: {e}") from e
    if sub.reference_runs:
        radii.extend(launch_support(grid, subthreshold_state(grid, c), background='vacuum')
                     for c in SUBTHRESHOLD_FACTORS)
    _SUPPORT_CACHE[key] = max(radii)
    return _SUPPORT_CACHE[key]


class ConfigManager:
    """Manage the thresholdlab configuration file."""

    def __init__(self, config_path: Optional[Path] = None):
        """
        Initialize configuration manager.

        Args:
            config_path: Path to config file (default: ~/.config/thresholdlab/config.json)
        """
        self.config_path = Path(config_path) if config_path else CONFIG_FILE
        self.config = self.load()

    def load(self) -> Dict:
        """Load configuration from file merged over the defaults."""
        if self.config_path.exists():
            try:
                with open(self.config_path, 'r') as f:
                    return deep_merge(DEFAULTS, json.load(f))
            except (OSError, json.JSONDecodeError) as e:
                print(f"⚠ Could not load config: {e}")
        return copy.deepcopy(DEFAULTS)

    def save(self) -> bool:
        """Save configuration to file."""
        try:
            self.config_path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.config_path, 'w') as f:
                json.dump(self.config, f, indent=2, sort_keys=True)
            return True
        except OSError as e:
            print(f"✗ Error saving config: {e}")
            return False

    def get(self, key: str, default=None):
        """Get a value by dotted key, e.g. 'suites.dichotomy.T_run'."""
        node = self.config
        for part in key.split('.'):
            if not isinstance(node, dict) or part not in node:
                return default
            node = node[part]
        return node

    def set(self, key: str, value):
        """Set a value by dotted key and save."""
        parts = key.split('.')
        node = self.config
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
        self.save()

    def get_grid(self) -> Tuple[int, float, int]:
        """(d, R, N) of the base grid."""
        return int(self.config['d']), float(self.config['R']), int(self.config['N'])

    def get_seed(self) -> int:
        return int(self.config.get('seed', DEFAULTS['seed']))

    def get_workers(self) -> int:
        return int(self.config.get('workers', DEFAULTS['workers']))

    def get_out_dir(self) -> str:
        """Output directory with ~ and environment variables expanded."""
        path = self.config.get('out_dir', DEFAULTS['out_dir'])
        return os.path.expandvars(os.path.expanduser(path))

    def get_suite_overrides(self, name: str) -> Dict:
        return self.config.get('suites', {}).get(name, {})

    def experiment_config(self, out_dir: Optional[str] = None, workers: Optional[int] = None,
                          seed: Optional[int] = None) -> ExperimentConfig:
        """Resolved ExperimentConfig, with command-line values taking precedence."""
        data = copy.deepcopy(self.config)
        data['out_dir'] = out_dir if out_dir is not None else self.get_out_dir()
        if workers is not None:
            data['workers'] = workers
        if seed is not None:
            data['seed'] = seed
        return ExperimentConfig.from_dict(data)

    @staticmethod
    def check(cfg: ExperimentConfig, suites: Tuple[str, ...] = SUITES) -> List[str]:
        """
        Check every derived constraint of cfg for the given suites.

        Returns:
            Transcript, one line per satisfied constraint

        Raises:
            ConfigError: at the first violated constraint
        """
        transcript: List[str] = []

        def require(ok: bool, label: str, detail: str):
            if not ok:
                raise ConfigError(f"{label}: {detail}")
            transcript.append(f"✓ {label}: {detail}")

        require(cfg.workers >= 1, "workers", f"{cfg.workers} >= 1")
        require(cfg.seed >= 0, "seed", f"{cfg.seed} >= 0")
        for name, value in sorted(cfg.tolerances.items()):
            require(value > 0, f"tolerances.{name}", f"{value} > 0")
        policy = cfg.t_start.get('policy')
        require(policy in ('check_offset', 'fixed'), "t_start.policy", f"{policy!r}")
        if policy == 'check_offset':
            offset = float(cfg.t_start.get('offset', -1.0))
            require(offset >= 0, "t_start.offset", f"{offset} >= 0")
        policy = cfg.T_max.get('policy')
        require(policy in ('span', 'fixed'), "T_max.policy", f"{policy!r}")
        if policy == 'span':
            span = float(cfg.T_max.get('span', 0.0))
            require(span >= MIN_SPAN, "T_max.span", f"{span} >= {MIN_SPAN} e-folds")

        for name in suites:
            sub = cfg.for_suite(name)
            tag = f"[{name}]"
            for d in sorted({sub.d, *sub.dims}):
                require(d >= 3, f"{tag} d", f"{d} >= 3")
            require(sub.R > 0, f"{tag} R", f"{sub.R} > 0")
            require(sub.N >= 16, f"{tag} N", f"{sub.N} >= 16")
            require(0 < sub.cfl <= 0.9, f"{tag} cfl", f"0 < {sub.cfl} <= 0.9")
            require(0 <= sub.m <= 4, f"{tag} m", f"0 <= {sub.m} <= 4")
            if name == 'spectrum':
                require(len(sub.refinement) >= 2 and all(n >= 16 for n in sub.refinement),
                        f"{tag} refinement", f"{list(sub.refinement)}")
            if name in SWEEP_SUITES:
                require(len(sub.a_list) > 0, f"{tag} a_list", f"{len(sub.a_list)} amplitude(s)")
                require(len(sub.k_list) > 0 and min(sub.k_list) >= 1, f"{tag} k_list",
                        f"{list(sub.k_list)}, all >= 1")
            if name in EVOLUTION_SUITES:
                require(sub.T_run >= 0, f"{tag} T_run", f"{sub.T_run} >= 0")
                support = measured_support(sub)
                require(sub.T_run <= sub.R - support, f"{tag} light cone",
                        f"T_run {sub.T_run} <= R - R_support = {sub.R - support:.4g} "
                        f"(R_support {support:.4g} measured on the launch data)")
            if name in SWEEP_SUITES:
                transcript.append(f"✓ {tag} |v/W| < 3/4 is enforced per profile at t_check")
        return transcript

    def export_config(self, path: Path) -> bool:
        """
        Export configuration to a file.

        Args:
            path: Path to export file

        Returns:
            True if successful
        """
        try:
            with open(path, 'w') as f:
                json.dump(self.config, f, indent=2, sort_keys=True)
            return True
        except OSError as e:
            print(f"✗ Error exporting config: {e}")
            return False

    def import_config(self, path: Path) -> bool:
        """
        Import configuration from a file, merged over the current one.

        Args:
            path: Path to import file

        Returns:
            True if successful
        """
        try:
            with open(path, 'r') as f:
                imported = json.load(f)
            self.config = deep_merge(self.config, imported)
            self.save()
            return True
        except (OSError, json.JSONDecodeError) as e:
            print(f"✗ Error importing config: {e}")
            return False

    def reset(self):
        """Reset configuration to defaults."""
        self.config = copy.deepcopy(DEFAULTS)
        self.save()

    def show_config(self):
        """Print current configuration."""
        print("Current Configuration:")
        print("=" * 70)
        d, R, N = self.get_grid()
        print(f"\nGrid: d = {d}, R = {R}, N = {N}, cfl = {self.config['cfl']}, m = {self.config['m']}")
        print(f"Amplitudes: {self.config['a_list']}")
        print(f"Orders:     {self.config['k_list']}")
        print(f"t_start:    {self.config['t_start']}")
        print(f"T_max:      {self.config['T_max']}")
        print(f"Output:     {self.get_out_dir()}  (seed {self.get_seed()}, {self.get_workers()} worker(s))")

        print("\nTolerances:")
        for name, value in sorted(self.config['tolerances'].items()):
            print(f"  • {name}: {value:g}")

        print("\nSuite overrides:")
        for name in SUITES:
            overrides = self.get_suite_overrides(name)
            print(f"  • {name}: {json.dumps(overrides, sort_keys=True) if overrides else 'none'}")
        print("=" * 70)


if __name__ == '__main__':
    import sys

    config = ConfigManager()

    if len(sys.argv) > 1:
        if sys.argv[1] == 'show':
            config.show_config()
        elif sys.argv[1] == 'check':
            try:
                for line in ConfigManager.check(config.experiment_config()):
                    print(line)
            except ConfigError as e:
                print(f"✗ {e}")
                sys.exit(1)
        elif sys.argv[1] == 'reset':
            config.reset()
            print("Configuration reset to defaults")
        elif sys.argv[1] == 'export' and len(sys.argv) > 2:
            if config.export_config(Path(sys.argv[2])):
                print(f"Configuration exported to {sys.argv[2]}")
        elif sys.argv[1] == 'import' and len(sys.argv) > 2:
            if config.import_config(Path(sys.argv[2])):
                print(f"Configuration imported from {sys.argv[2]}")
        else:
            print("Usage:")
            print("  python3 config_manager.py show")
            print("  python3 config_manager.py check")
            print("  python3 config_manager.py reset")
            print("  python3 config_manager.py export <file>")
            print("  python3 config_manager.py import <file>")
    else:
        config.show_config()
