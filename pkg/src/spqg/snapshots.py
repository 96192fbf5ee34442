"""Bit-exact binary snapshots and flat metadata sidecars.

Layout (all little-endian):

    magic "SPQG" | version u32 | dim u32 | N u32 per axis | L f64 per axis |
    component count u32 | coefficients as (real, imag) f64 pairs,
    components outermost, wavevectors row-major in axis order with the FFT
    index order 0, 1, ..., N/2-1, -N/2, ..., -1.

That index order is numpy's native FFT layout, so coefficient blocks are
written and read without any reshuffling.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .grids import BoxGrid, SpectralField

__all__ = [
    "MAGIC",
    "VERSION",
    "write_snapshot",
    "read_snapshot",
    "write_sidecar",
    "read_sidecar",
    "dump_eigensystem",
]

MAGIC = b"SPQG"
VERSION = 1


def write_snapshot(path, field: SpectralField, version: int = VERSION) -> None:
    grid = field.grid
    header = bytearray()
    header += MAGIC
    header += struct.pack("<I", version)
    header += struct.pack("<I", grid.dim)
    header += struct.pack(f"<{grid.dim}I", *grid.n)
    header += struct.pack(f"<{grid.dim}d", *grid.lengths)
    header += struct.pack("<I", field.components)
    data = np.ascontiguousarray(field.coeffs.astype("<c16", copy=False))
    with open(path, "wb") as fh:
        fh.write(bytes(header))
        fh.write(data.tobytes())


def read_snapshot(path) -> SpectralField:
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise ValueError(f"{path}: not an SPQG snapshot (bad magic {raw[:4]!r})")
    off = 4
    version, dim = struct.unpack_from("<II", raw, off)
    off += 8
    if version != VERSION:
        raise ValueError(f"{path}: unsupported snapshot version {version}")
    n = struct.unpack_from(f"<{dim}I", raw, off)
    off += 4 * dim
    lengths = struct.unpack_from(f"<{dim}d", raw, off)
    off += 8 * dim
    (comps,) = struct.unpack_from("<I", raw, off)
    off += 4
    count = comps * int(np.prod(n))
    coeffs = np.frombuffer(raw, dtype="<c16", count=count, offset=off)
    grid = BoxGrid(dim, n, lengths)
    return SpectralField(grid, coeffs.reshape(comps, *n).copy())


def write_sidecar(path, entries: dict) -> None:
    """Flat key=value text metadata (one entry per line, keys sorted)."""
    lines = [f"{k} = {_fmt(v)}" for k, v in sorted(entries.items())]
    Path(path).write_text("\n".join(lines) + "\n")


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ",".join(_fmt(x) for x in v)
    return str(v)


def read_sidecar(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def dump_eigensystem(path, eigsys) -> None:
    """Store an eigensystem as one snapshot for regression comparisons.

    Components are the branch frequencies (cast to complex) followed by the
    eigenvector components, branch-major.
    """
    freqs = eigsys.freqs.astype(np.complex128)
    nb = freqs.shape[0]
    vecs = eigsys.vecs.reshape(nb * eigsys.vecs.shape[1], *eigsys.grid.n)
    stack = np.concatenate([freqs, vecs])
    write_snapshot(path, SpectralField(eigsys.grid, stack))
