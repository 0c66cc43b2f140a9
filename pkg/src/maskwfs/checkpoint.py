"""Network checkpoint container ("WNET").

Layout (little-endian)::

    "WNET", uint32 version, 8 reserved bytes
    uint32 len + UTF-8 architecture descriptor
    uint32 input ny, nx
    float64 kappa, label_scale
    32-byte SHA-256 of the training corpus (zeros if unknown)
    uint32 len + UTF-8 JSON metadata (sorted keys)
    uint32 tensor count, then per tensor:
        uint32 len + name, uint32 ndim, uint32 dims..., float32 values
"""

from __future__ import annotations

import hashlib
import json
import struct
import warnings

import numpy as np

from .fileio import FormatError, atomic_write
from .network import Architecture, NetworkParams

__all__ = ["save_checkpoint", "load_checkpoint", "checkpoint_bytes", "checkpoint_id"]

MAGIC = b"WNET"
VERSION = 1
_PREFIX = struct.Struct("<4sI8x")


def _lp(text):
    b = text.encode()
    return struct.pack("<I", len(b)) + b


def checkpoint_bytes(params, metadata=None):
    meta = dict(params.meta)
    meta.update(metadata or {})
    meta.pop("checkpoint_id", None)
    corpus = meta.get("corpus_hash") or "0" * 64
    meta["corpus_hash"] = corpus
    out = [_PREFIX.pack(MAGIC, VERSION), _lp(params.arch.descriptor()),
           struct.pack("<II", *params.arch.input_shape),
           struct.pack("<dd", params.kappa, params.label_scale),
           bytes.fromhex(corpus),
           _lp(json.dumps(meta, sort_keys=True, separators=(",", ":"))),
           struct.pack("<I", len(params.tensors))]
    for name, t in params.tensors.items():
        out.append(_lp(name))
        out.append(struct.pack("<I", t.ndim) + struct.pack(f"<{t.ndim}I", *t.shape))
        out.append(np.ascontiguousarray(t, dtype="<f4").tobytes())
    return b"".join(out)


def checkpoint_id(data):
    return hashlib.sha256(data).hexdigest()[:16]


def save_checkpoint(params, path, metadata=None):
    """Atomically write `params` (stored as float32) and return the checkpoint id."""
    data = checkpoint_bytes(params, metadata)
    atomic_write(path, data)
    return checkpoint_id(data)


class _Reader:
    def __init__(self, buf, path):
        self.buf, self.off, self.path = buf, 0, path

    def take(self, n):
        if self.off + n > len(self.buf):
            raise FormatError(f"{self.path}: truncated at byte {self.off}")
        b = self.buf[self.off:self.off + n]
        self.off += n
        return b

    def unpack(self, fmt):
        s = struct.Struct(fmt)
        return s.unpack(self.take(s.size))

    def text(self):
        (n,) = self.unpack("<I")
        return self.take(n).decode()


def load_checkpoint(path, expect_corpus_hash=None, expect_mask_hash=None):
    """Read a checkpoint; returns float32 :class:`NetworkParams` with metadata in ``meta``.

    Hash mismatches against the optional expectations raise ``UserWarning``.
    """
    with open(path, "rb") as fh:
        buf = fh.read()
    r = _Reader(buf, path)
    magic, version = r.unpack(_PREFIX.format)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r} at byte 0")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported checkpoint version {version}")
    arch = Architecture.from_descriptor(r.text())
    shape = r.unpack("<II")
    if tuple(shape) != arch.input_shape:
        raise FormatError(f"{path}: input size {shape} disagrees with descriptor")
    kappa, label_scale = r.unpack("<dd")
    corpus = r.take(32).hex()
    meta = json.loads(r.text())
    (count,) = r.unpack("<I")
    tensors = {}
    for _ in range(count):
        name = r.text()
        (ndim,) = r.unpack("<I")
        dims = r.unpack(f"<{ndim}I")
        n = int(np.prod(dims))
        tensors[name] = np.frombuffer(r.take(4 * n), dtype="<f4").reshape(dims).astype(np.float32)
    if r.off != len(buf):
        raise FormatError(f"{path}: trailing data at byte {r.off}")
    meta["corpus_hash"] = corpus
    meta["checkpoint_id"] = checkpoint_id(buf)
    if expect_corpus_hash and corpus != expect_corpus_hash:
        warnings.warn(f"{path}: corpus hash {corpus[:12]} != expected {expect_corpus_hash[:12]}")
    if expect_mask_hash and meta.get("mask_hash") != expect_mask_hash:
        warnings.warn(f"{path}: mask hash differs from the expected sensor")
    try:
        return NetworkParams(arch, tensors, kappa, label_scale, meta)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
