import os
import stat

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maskwfs.fileio import (
    FormatError,
    atomic_write,
    file_sha256,
    mask_hash,
    read_field,
    read_magic,
    read_mask,
    write_field,
    write_mask,
)
from maskwfs.optics import ComplexField, Grid, default_mask


@settings(max_examples=20, deadline=None)
@given(nx=st.integers(4, 12).map(lambda n: 2 * n), ny=st.integers(4, 12).map(lambda n: 2 * n),
       seed=st.integers(0, 2 ** 32 - 1))
def test_field_round_trip_is_bitwise(nx, ny, seed, tmp_path_factory):
    rng = np.random.default_rng(seed)
    g = Grid(nx, ny, 1.1e-7, 0.9e-7, 13.5e-9)
    f = ComplexField(g, rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape))
    path = tmp_path_factory.mktemp("f") / "x.cfld"
    write_field(path, f)
    back = read_field(path)
    assert back.grid == g
    assert back.values.tobytes() == f.values.tobytes()


def test_mask_round_trip(tmp_path, mask):
    write_mask(tmp_path / "m.mask", mask)
    back = read_mask(tmp_path / "m.mask")
    np.testing.assert_array_equal(back.transmission, mask.transmission)
    assert back.grid == mask.grid and back.n_slices == 1 and back.dz == 0.0
    assert mask_hash(back) == mask_hash(mask)
    thick = default_mask(n_slices=3, dz=2e-7)
    write_mask(tmp_path / "t.mask", thick)
    t = read_mask(tmp_path / "t.mask")
    assert (t.n_slices, t.dz) == (3, 2e-7)
    assert mask_hash(t) != mask_hash(mask)


def test_magic_and_version(tmp_path, small_grid):
    write_field(tmp_path / "a.cfld", ComplexField(small_grid, np.ones(small_grid.shape)))
    assert read_magic(tmp_path / "a.cfld") == (b"CFLD", 1)
    with pytest.raises(FormatError):
        read_magic(_write(tmp_path / "short", b"CF"))


def _write(path, data):
    path.write_bytes(data)
    return path


def test_field_corruption_is_reported_with_offsets(tmp_path, small_grid):
    write_field(tmp_path / "a.cfld", ComplexField(small_grid, np.ones(small_grid.shape)))
    data = (tmp_path / "a.cfld").read_bytes()
    with pytest.raises(FormatError, match="magic"):
        read_field(_write(tmp_path / "m.cfld", b"MASK" + data[4:]))
    with pytest.raises(FormatError, match="byte"):
        read_field(_write(tmp_path / "t.cfld", data[:-5]))
    with pytest.raises(FormatError, match="version"):
        read_field(_write(tmp_path / "v.cfld", data[:4] + b"\x07\x00\x00\x00" + data[8:]))
    with pytest.raises(FormatError):
        read_field(_write(tmp_path / "g.cfld", data[:16] + b"\x03\x00\x00\x00" + data[20:]))


def test_mask_corruption(tmp_path, mask):
    write_mask(tmp_path / "m.mask", mask)
    data = (tmp_path / "m.mask").read_bytes()
    with pytest.raises(FormatError, match="byte"):
        read_mask(_write(tmp_path / "t.mask", data[:-1]))
    bad = bytearray(data)
    bad[-1] = 7
    with pytest.raises(FormatError):
        read_mask(_write(tmp_path / "b.mask", bytes(bad)))


def test_atomic_write_mode_and_cleanup(tmp_path):
    old = os.umask(0o022)
    try:
        atomic_write(tmp_path / "x", b"abc")
    finally:
        os.umask(old)
    assert stat.S_IMODE(os.stat(tmp_path / "x").st_mode) == 0o644
    assert file_sha256(tmp_path / "x") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
    with pytest.raises(TypeError):
        atomic_write(tmp_path / "y", "not bytes")
    assert sorted(os.listdir(tmp_path)) == ["x"]
