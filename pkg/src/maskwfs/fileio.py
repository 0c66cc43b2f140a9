"""Binary containers for fields ("CFLD") and masks ("MASK").

Both start with a 16-byte header: 4-byte magic, little-endian uint32
version, 8 reserved zero bytes. Then ``nx, ny`` (uint32) and
``dx, dy, wavelength`` (float64), all little-endian.
"""

from __future__ import annotations

import hashlib
import os
import struct
import tempfile

import numpy as np

from .optics import ComplexField, Grid, MaskModel

__all__ = [
    "FormatError",
    "write_field",
    "read_field",
    "write_mask",
    "read_mask",
    "mask_hash",
    "file_sha256",
    "atomic_write",
    "read_magic",
]

FIELD_MAGIC = b"CFLD"
MASK_MAGIC = b"MASK"
VERSION = 1
_PREFIX = struct.Struct("<4sI8x")
_GRID = struct.Struct("<IIddd")
_SLICES = struct.Struct("<Id")


class FormatError(ValueError):
    """Malformed or truncated file."""


def _default_mode(fd):
    # mkstemp creates 0600; give the final file the usual umask-derived mode
    umask = os.umask(0)
    os.umask(umask)
    os.fchmod(fd, 0o666 & ~umask)


def atomic_write(path, data):
    """Write `data` to `path` via a temp file and rename."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        _default_mode(fd)
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def file_sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def read_magic(path):
    with open(path, "rb") as fh:
        head = fh.read(_PREFIX.size)
    if len(head) < _PREFIX.size:
        raise FormatError(f"{path}: file shorter than header")
    magic, version = _PREFIX.unpack(head)
    return magic, version


def _pack_grid(grid):
    return _GRID.pack(grid.nx, grid.ny, grid.dx, grid.dy, grid.wavelength)


def _unpack_grid(buf, offset, path):
    if len(buf) < offset + _GRID.size:
        raise FormatError(f"{path}: truncated grid header at byte {offset}")
    nx, ny, dx, dy, lam = _GRID.unpack_from(buf, offset)
    try:
        return Grid(nx, ny, dx, dy, lam), offset + _GRID.size
    except ValueError as exc:
        raise FormatError(f"{path}: invalid grid at byte {offset}: {exc}") from None


def _check_prefix(buf, magic, path):
    if len(buf) < _PREFIX.size:
        raise FormatError(f"{path}: truncated header at byte 0")
    got, version = _PREFIX.unpack_from(buf, 0)
    if got != magic:
        raise FormatError(f"{path}: bad magic {got!r} at byte 0, expected {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version} at byte 4")
    return _PREFIX.size


def field_bytes(f):
    return (_PREFIX.pack(FIELD_MAGIC, VERSION) + _pack_grid(f.grid)
            + np.ascontiguousarray(f.values, dtype="<c16").tobytes())


def write_field(path, f):
    atomic_write(path, field_bytes(f))


def read_field(path):
    with open(path, "rb") as fh:
        buf = fh.read()
    off = _check_prefix(buf, FIELD_MAGIC, path)
    grid, off = _unpack_grid(buf, off, path)
    need = grid.nx * grid.ny * 16
    if len(buf) - off != need:
        raise FormatError(f"{path}: expected {need} data bytes at byte {off}, found {len(buf) - off}")
    vals = np.frombuffer(buf, dtype="<c16", offset=off).reshape(grid.shape)
    try:
        return ComplexField(grid, vals)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None


def mask_bytes(mask):
    return (_PREFIX.pack(MASK_MAGIC, VERSION) + _pack_grid(mask.grid)
            + _SLICES.pack(mask.n_slices, mask.dz)
            + np.ascontiguousarray(mask.transmission, dtype=np.uint8).tobytes())


def write_mask(path, mask):
    atomic_write(path, mask_bytes(mask))


def read_mask(path):
    with open(path, "rb") as fh:
        buf = fh.read()
    off = _check_prefix(buf, MASK_MAGIC, path)
    grid, off = _unpack_grid(buf, off, path)
    if len(buf) < off + _SLICES.size:
        raise FormatError(f"{path}: truncated slice header at byte {off}")
    n_slices, dz = _SLICES.unpack_from(buf, off)
    off += _SLICES.size
    need = grid.nx * grid.ny
    if len(buf) - off != need:
        raise FormatError(f"{path}: expected {need} mask bytes at byte {off}, found {len(buf) - off}")
    t = np.frombuffer(buf, dtype=np.uint8, offset=off).reshape(grid.shape)
    try:
        return MaskModel(grid, t, n_slices=n_slices, dz=dz)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None


def mask_hash(mask):
    """SHA-256 of the serialized mask; identifies the sensor in corpora and checkpoints."""
    return hashlib.sha256(mask_bytes(mask)).hexdigest()
