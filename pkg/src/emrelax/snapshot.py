"""Binary field snapshots.

File layout (version 1, little-endian)::

    offset  type      meaning
    0       4 bytes   magic  b"EMRS"
    4       uint16    format version (1)
    6       uint16    kind: 0 = scalar field, 1 = vector field
    8       uint32    dim
    12      uint32    points per dimension
    16      uint32    component count (1 for scalar fields)
    20      float64   domain length per axis
    28      float64[] samples, component-major, each component row-major (C order)

The sample block holds ``ncomp * points**dim`` values. Readers must reject
unknown magic or a newer version.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .grid import PeriodicGrid

MAGIC = b"EMRS"
VERSION = 1
_HEADER = struct.Struct("<4sHHIIId")


def write_snapshot(path: str | Path, grid: PeriodicGrid, field: np.ndarray) -> None:
    field = np.asarray(field, dtype="<f8")
    if field.shape == grid.shape:
        kind, ncomp = 0, 1
    else:
        grid.check_vector(field)
        kind, ncomp = 1, field.shape[0]
    header = _HEADER.pack(MAGIC, VERSION, kind, grid.dim, grid.points, ncomp, grid.length)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(field).tobytes(order="C"))


def read_snapshot(path: str | Path) -> tuple[PeriodicGrid, np.ndarray]:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, version, kind, dim, points, ncomp, length = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: not a field snapshot")
    if version > VERSION:
        raise ValueError(f"{path}: snapshot version {version} is newer than {VERSION}")
    grid = PeriodicGrid(dim, points, length)
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    expected = ncomp * grid.size
    if data.size != expected:
        raise ValueError(f"{path}: expected {expected} samples, found {data.size}")
    shape = grid.shape if kind == 0 else (ncomp, *grid.shape)
    return grid, data.reshape(shape).astype(float)
