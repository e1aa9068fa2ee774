#!/usr/bin/env python3
"""Checksum manifests for experiment output directories."""

import hashlib
import re
from pathlib import Path
from typing import Dict, List, Optional, Tuple


MANIFEST_NAME = 'SHA256SUMS'


class ChecksumManifest:
    """Write and compare SHA256SUMS manifests of run directories."""

    @staticmethod
    def compute_sha256(filepath) -> str:
        """
        Compute SHA256 hash of a file.

        Args:
            filepath: Path to the file

        Returns:
            Lowercase hex string of SHA256 hash
        """
        sha256 = hashlib.sha256()
        with open(filepath, 'rb') as f:
            for chunk in iter(lambda: f.read(1024 * 1024), b''):
                sha256.update(chunk)
        return sha256.hexdigest().lower()

    @staticmethod
    def collect(run_dir) -> Dict[str, str]:
        """Hash every file under run_dir except the manifest, keyed by POSIX relative path."""
        run_dir = Path(run_dir)
        hashes = {}
        for path in sorted(run_dir.rglob('*')):
            if not path.is_file() or path.name == MANIFEST_NAME:
                continue
            hashes[path.relative_to(run_dir).as_posix()] = ChecksumManifest.compute_sha256(path)
        return hashes

    @staticmethod
    def write(run_dir) -> Path:
        """
        Write run_dir/SHA256SUMS, one '<hash>  <path>' line per file, sorted by path.

        Returns:
            Path of the manifest
        """
        run_dir = Path(run_dir)
        hashes = ChecksumManifest.collect(run_dir)
        manifest = run_dir / MANIFEST_NAME
        with open(manifest, 'w', newline='\n') as f:
            for name in sorted(hashes):
                f.write(f"{hashes[name]}  {name}\n")
        return manifest

    @staticmethod
    def parse(content: str) -> Dict[str, str]:
        """
        Parse SHA256SUMS content.

        Format examples:
            <hash>  <filename>
            <hash> *<filename>

        Returns:
            Dict of filename -> hash
        """
        hashes = {}
        for line in content.strip().split('\n'):
            line = line.strip()
            if not line or line.startswith('#'):
                continue
            match = re.match(r'([a-fA-F0-9]{64})\s+\*?(.+)$', line)
            if match:
                hash_val, fname = match.groups()
                hashes[fname.strip()] = hash_val.lower()
        return hashes

    @staticmethod
    def read(run_dir) -> Dict[str, str]:
        """
        Read run_dir/SHA256SUMS.

        Raises:
            FileNotFoundError: no manifest in run_dir
        """
        manifest = Path(run_dir) / MANIFEST_NAME
        return ChecksumManifest.parse(manifest.read_text())

    @staticmethod
    def verify(run_dir) -> Tuple[bool, List[str]]:
        """
        Check the files of run_dir against its own manifest.

        Returns:
            (ok, problems) with one message per missing, extra or changed file
        """
        recorded = ChecksumManifest.read(run_dir)
        actual = ChecksumManifest.collect(run_dir)
        problems = _differences(recorded, actual, 'manifest', 'disk')
        return not problems, problems

    @staticmethod
    def compare(run_a, run_b) -> Tuple[bool, List[str]]:
        """
        Compare the manifests of two runs.

        Returns:
            (identical, differences)
        """
        a = ChecksumManifest.read(run_a)
        b = ChecksumManifest.read(run_b)
        problems = _differences(a, b, str(run_a), str(run_b))
        return not problems, problems


def _differences(a: Dict[str, str], b: Dict[str, str], name_a: str, name_b: str) -> List[str]:
    problems = []
    for fname in sorted(set(a) | set(b)):
        if fname not in b:
            problems.append(f"{fname}: only in {name_a}")
        elif fname not in a:
            problems.append(f"{fname}: only in {name_b}")
        elif a[fname] != b[fname]:
            problems.append(f"{fname}: {a[fname][:16]}... != {b[fname][:16]}...")
    return problems


def verify_runs(run_a, run_b, verbose: bool = True) -> bool:
    """Print the comparison of two run directories; True when byte-identical."""
    identical, problems = ChecksumManifest.compare(run_a, run_b)
    if verbose:
        if identical:
            print(f"✓ {run_a} and {run_b} are byte-identical")
        else:
            print(f"✗ {len(problems)} difference(s) between {run_a} and {run_b}:")
            for problem in problems:
                print(f"    {problem}")
    return identical


if __name__ == '__main__':
    import sys

    if len(sys.argv) < 2:
        print("Usage: python checksums.py <run_dir> [other_run_dir]")
        sys.exit(1)

    if len(sys.argv) > 2:
        sys.exit(0 if verify_runs(sys.argv[1], sys.argv[2]) else 1)

    ok, problems = ChecksumManifest.verify(sys.argv[1])
    print("✓ manifest matches" if ok else "\n".join(f"✗ {p}" for p in problems))
    sys.exit(0 if ok else 1)
