"""Binary snapshot format: exact layout, round trips, sidecars."""

import struct

import numpy as np
import pytest

from spqg.grids import BoxGrid, SpectralField
from spqg.snapshots import (
    dump_eigensystem,
    read_sidecar,
    read_snapshot,
    write_sidecar,
    write_snapshot,
)
from spqg.waves import EigenSystem2D


def test_round_trip_bit_exact(tmp_path):
    grid = BoxGrid(2, 16, 4 * np.pi)
    rng = np.random.default_rng(0)
    f = SpectralField.from_physical(grid, rng.standard_normal((3, *grid.n)))
    path = tmp_path / "field.spqg"
    write_snapshot(path, f)
    g = read_snapshot(path)
    assert g.grid == grid
    assert np.array_equal(g.coeffs, f.coeffs)


def test_header_layout_golden(tmp_path):
    grid = BoxGrid(2, (4, 6), (1.0, 2.5))
    coeffs = np.zeros((1, 4, 6), dtype=complex)
    coeffs[0, 1, 2] = 3.0 + 4.0j
    path = tmp_path / "tiny.spqg"
    write_snapshot(path, SpectralField(grid, coeffs))
    raw = path.read_bytes()
    assert raw[:4] == b"SPQG"
    version, dim = struct.unpack_from("<II", raw, 4)
    assert (version, dim) == (1, 2)
    n = struct.unpack_from("<II", raw, 12)
    assert n == (4, 6)
    lengths = struct.unpack_from("<dd", raw, 20)
    assert lengths == (1.0, 2.5)
    (comps,) = struct.unpack_from("<I", raw, 36)
    assert comps == 1
    # row-major FFT order: the (1, 2) entry sits at flat index 1*6 + 2
    off = 40 + (1 * 6 + 2) * 16
    re, im = struct.unpack_from("<dd", raw, off)
    assert (re, im) == (3.0, 4.0)
    assert len(raw) == 40 + 4 * 6 * 16


def test_3d_round_trip(tmp_path):
    grid = BoxGrid(3, (4, 6, 8), (1.0, 2.0, 3.0))
    rng = np.random.default_rng(1)
    f = SpectralField.from_physical(grid, rng.standard_normal((4, *grid.n)))
    path = tmp_path / "cube.spqg"
    write_snapshot(path, f)
    g = read_snapshot(path)
    assert g.grid == grid
    assert np.array_equal(g.coeffs, f.coeffs)


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "junk.spqg"
    path.write_bytes(b"NOPE" + b"\0" * 64)
    with pytest.raises(ValueError, match="magic"):
        read_snapshot(path)


def test_sidecar_round_trip(tmp_path):
    entries = {"params.gamma": 2.0, "seed": 7, "experiment.kind": "single_run",
               "sweep.delta_list": [0.2, 0.1]}
    path = tmp_path / "meta.txt"
    write_sidecar(path, entries)
    back = read_sidecar(path)
    assert back["params.gamma"] == "2.0"
    assert back["seed"] == "7"
    assert back["sweep.delta_list"] == "0.2,0.1"


def test_eigensystem_dump_regression(tmp_path):
    grid = BoxGrid(2, 12, 2 * np.pi)
    sys = EigenSystem2D(grid, 1.0)
    path = tmp_path / "eig.spqg"
    dump_eigensystem(path, sys)
    stored = read_snapshot(path)
    assert stored.components == 3 + 9
    rebuilt = EigenSystem2D(grid, 1.0)
    assert np.array_equal(stored.coeffs[:3].real, rebuilt.freqs)
    assert np.array_equal(stored.coeffs[3:].reshape(3, 3, *grid.n), rebuilt.vecs)
