#!/usr/bin/env python3
"""
thresholdlab - numerical lab for threshold solutions of the focusing
energy-critical radial wave equation.

Usage:
  python3 thresholdlab.py SUITE [--config PATH] [--out DIR] [--workers N] [--seed U64]
  python3 thresholdlab.py all [...]
  python3 thresholdlab.py verify RUN_A RUN_B
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from checksums import verify_runs
from config_manager import SUITES, ConfigError, ConfigManager
from experiments import exit_status, run_suites


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='thresholdlab',
        description='Threshold solutions W+- of the focusing energy-critical radial NLW')
    commands = parser.add_subparsers(dest='command', required=True)

    for name in SUITES + ('all',):
        help_text = 'Run every suite in order' if name == 'all' else f'Run the {name} suite'
        sub = commands.add_parser(name, help=help_text)
        sub.add_argument('--config', type=Path, default=None,
                         help='Config file (default: ~/.config/thresholdlab/config.json)')
        sub.add_argument('--out', type=str, default=None, help='Output directory')
        sub.add_argument('--workers', type=int, default=None, help='Concurrent sweep points')
        sub.add_argument('--seed', type=int, default=None, help='Seed of the perturbation suites')
        sub.add_argument('--quiet', action='store_true', help='Suppress per-check output')

    verify = commands.add_parser('verify', help='Compare the SHA256SUMS manifests of two runs')
    verify.add_argument('run_a', type=Path)
    verify.add_argument('run_b', type=Path)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, check the configuration and run; returns the exit status."""
    args = build_parser().parse_args(argv)

    if args.command == 'verify':
        return 0 if verify_runs(args.run_a, args.run_b) else 1

    names = list(SUITES) if args.command == 'all' else [args.command]
    manager = ConfigManager(args.config)
    try:
        cfg = manager.experiment_config(out_dir=args.out, workers=args.workers, seed=args.seed)
        transcript = ConfigManager.check(cfg, suites=tuple(names))
    except ConfigError as e:
        print(f"✗ Configuration rejected: {e}")
        return 2

    if not args.quiet:
        print("=" * 70)
        print(f"thresholdlab: {', '.join(names)} -> {cfg.out_dir}")
        print("=" * 70)
        for line in transcript:
            print(f"  {line}")

    reports = run_suites(names, cfg, verbose=not args.quiet)
    status = exit_status(reports)
    print(f"\n{'✓ All checks passed' if status == 0 else '✗ Some checks failed'}; results in {cfg.out_dir}")
    return status


if __name__ == '__main__':
    sys.exit(main())
