"""Flat binary container for field snapshots.

Layout (little-endian, no padding):

==========  ========  =====================================
offset      type      meaning
==========  ========  =====================================
0           8s        magic ``b"SPECFLD1"``
8           u4        dim (1 or 2)
12          u4        nfields (1 + dim: density, velocity components)
16          f8        snapshot time
24          u8 * dim  modes N_i per axis
...         f8 * dim  box lengths L_i per axis
==========  ========  =====================================

followed by ``nfields`` arrays of float64 in C (row-major) order, each
with prod(N_i) entries: the density fluctuation first, then the
velocity components in axis order.
"""

from __future__ import annotations

import struct

import numpy as np

from .grid import FieldState, SpectralGrid, make_grid

__all__ = ["MAGIC", "write_snapshot", "read_snapshot"]

MAGIC = b"SPECFLD1"


def write_snapshot(path, grid: SpectralGrid, state: FieldState) -> None:
    a = np.asarray(state.a, dtype=float)
    u = np.asarray(state.u, dtype=float)
    if a.shape != grid.shape or u.shape != (grid.dim,) + grid.shape:
        raise ValueError("state shapes do not match the grid")
    nfields = 1 + grid.dim
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IId", grid.dim, nfields, float(state.t)))
        fh.write(struct.pack(f"<{grid.dim}Q", *grid.modes))
        fh.write(struct.pack(f"<{grid.dim}d", *grid.lengths))
        fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())
        for i in range(grid.dim):
            fh.write(np.ascontiguousarray(u[i], dtype="<f8").tobytes())


def read_snapshot(path) -> tuple[SpectralGrid, FieldState]:
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != MAGIC:
            raise ValueError(f"not a snapshot file (magic {magic!r})")
        dim, nfields, t = struct.unpack("<IId", fh.read(16))
        if dim not in (1, 2):
            raise ValueError(f"unsupported dim {dim}")
        if nfields != 1 + dim:
            raise ValueError(f"expected {1 + dim} fields for dim {dim}, found {nfields}")
        modes = struct.unpack(f"<{dim}Q", fh.read(8 * dim))
        lengths = struct.unpack(f"<{dim}d", fh.read(8 * dim))
        npoints = int(np.prod(modes))
        payload = np.frombuffer(fh.read(8 * nfields * npoints), dtype="<f8")
        if payload.size != nfields * npoints:
            raise ValueError("snapshot file is truncated")
    grid = make_grid(dim, lengths, modes)
    fields = payload.reshape(nfields, *modes)
    state = FieldState(a=fields[0].copy(), u=fields[1:].copy(), t=float(t))
    return grid, state
