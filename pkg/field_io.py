#!/usr/bin/env python3
"""
Field files for thresholdlab.

A field file is a plain-text header of 'key: value' lines, a blank line,
then the node values as little-endian 64-bit floats.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional

import numpy as np

from radial_grid import RadialGrid


FORMAT_VERSION = 1
HEADER_KEYS = ('format_version', 'd', 'R', 'N', 'kind', 'metadata')
PAYLOAD_DTYPE = np.dtype('<f8')


class FieldFormatError(ValueError):
    """Malformed field file."""


@dataclass
class FieldFile:
    """One radial field with the grid it lives on."""

    d: int
    R: float
    N: int
    kind: str
    values: np.ndarray
    metadata: Dict[str, object] = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.N,):
            raise FieldFormatError(f"values shape {self.values.shape} does not match N = {self.N}")
        if not self.kind or '\n' in self.kind:
            raise FieldFormatError(f"invalid kind {self.kind!r}")

    @classmethod
    def from_grid(cls, grid: RadialGrid, kind: str, values, **metadata) -> "FieldFile":
        return cls(d=grid.d, R=float(grid.R), N=grid.N, kind=kind, values=values, metadata=metadata)

    def header(self) -> str:
        lines = [
            f"format_version: {self.format_version}",
            f"d: {self.d}",
            f"R: {float(self.R)!r}",
            f"N: {self.N}",
            f"kind: {self.kind}",
            f"metadata: {json.dumps(self.metadata, sort_keys=True)}",
        ]
        return "\n".join(lines) + "\n\n"


def write_field(path, ff: FieldFile) -> Path:
    """Write a field file, creating parent directories."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'wb') as f:
        f.write(ff.header().encode('utf-8'))
        f.write(ff.values.astype(PAYLOAD_DTYPE).tobytes())
    return path


def read_field(path) -> FieldFile:
    """
    Read a field file.

    Raises:
        FieldFormatError: missing header keys, unknown version or a payload
            of the wrong length
    """
    raw = Path(path).read_bytes()
    split = raw.find(b"\n\n")
    if split < 0:
        raise FieldFormatError(f"{path}: no blank line after the header")
    header: Dict[str, str] = {}
    for line in raw[:split].decode('utf-8').split("\n"):
        key, sep, value = line.partition(':')
        if not sep:
            raise FieldFormatError(f"{path}: malformed header line {line!r}")
        header[key.strip()] = value.strip()
    missing = [k for k in HEADER_KEYS if k not in header]
    if missing:
        raise FieldFormatError(f"{path}: header lacks {', '.join(missing)}")
    version = int(header['format_version'])
    if version != FORMAT_VERSION:
        raise FieldFormatError(f"{path}: unsupported format_version {version}")

    N = int(header['N'])
    payload = raw[split + 2:]
    if len(payload) != N * PAYLOAD_DTYPE.itemsize:
        raise FieldFormatError(f"{path}: payload has {len(payload)} bytes, expected {N * PAYLOAD_DTYPE.itemsize}")
    values = np.frombuffer(payload, dtype=PAYLOAD_DTYPE).astype(np.float64)
    return FieldFile(d=int(header['d']), R=float(header['R']), N=N, kind=header['kind'],
                     values=values, metadata=json.loads(header['metadata']), format_version=version)


def grid_of(ff: FieldFile, grid: Optional[RadialGrid] = None) -> RadialGrid:
    """The grid a field file was written on; checks agreement when grid is given."""
    from radial_grid import make_grid

    if grid is None:
        return make_grid(ff.d, ff.R, ff.N)
    if (grid.d, float(grid.R), grid.N) != (ff.d, float(ff.R), ff.N):
        raise FieldFormatError(f"field is on (d={ff.d}, R={ff.R}, N={ff.N}), not {grid!r}")
    return grid
