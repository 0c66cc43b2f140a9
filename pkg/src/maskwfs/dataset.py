"""Synthetic training corpora: aberrated focal spots and their mask diffraction patterns.

Corpus files ("WDS1") hold a fixed header followed by fixed-size records,
so they can be memory-mapped and indexed without loading everything::

    header  : magic "WDS1", uint32 version, 8 reserved bytes
              uint32 nx, ny; float64 dx, dy, wavelength
              32-byte SHA-256 of the mask
              uint64 record count; uint32 noise-level count; 4 reserved bytes
    record  : uint64 seed, float64 peak counts (+inf = noise free),
              float32 pattern[ny, nx], complex64 object[ny, nx]
"""

from __future__ import annotations

import os
import struct
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .fileio import FormatError, _default_mode, mask_hash
from .optics import (
    ZERNIKE_INDICES,
    ComplexField,
    Grid,
    MaskModel,
    ZernikeCoeffs,
    default_grid,
    default_mask,
    diffraction_intensity,
    multislice_mask_transit,
    synthesize_focused_object,
)

__all__ = [
    "DEFAULT_NOISE_LEVELS",
    "DEFAULT_COEFF_RANGES",
    "DatasetSample",
    "GenConfig",
    "Corpus",
    "sample_coeffs",
    "canonicalize_phase",
    "forward_pattern",
    "poissonize",
    "snr_of",
    "object_seed",
    "generate_object",
    "generate_samples",
    "generate_corpus",
    "open_corpus",
    "read_corpus",
]

DEFAULT_NOISE_LEVELS = (np.inf, 50.0, 40.0, 30.0, 20.0, 10.0, 5.0)
_RANGE_BY_ORDER = {2: 1.5, 3: 1.0, 4: 0.7}
DEFAULT_COEFF_RANGES = tuple((-_RANGE_BY_ORDER[n], _RANGE_BY_ORDER[n]) for n, _ in ZERNIKE_INDICES)

MAGIC = b"WDS1"
VERSION = 1
_HEADER = struct.Struct("<4sI8xIIddd32sQI4x")


@dataclass(frozen=True, eq=False)
class DatasetSample:
    pattern: np.ndarray
    object: ComplexField
    peak_counts: float
    rng_seed: int


@dataclass(frozen=True, eq=False)
class GenConfig:
    """Corpus generation settings.

    `w0` and `aperture_radius` are in meters on the pupil sampling (which
    shares `grid`); see :func:`~maskwfs.optics.synthesize_focused_object`.
    """

    n_samples: int
    grid: Grid = field(default_factory=default_grid)
    mask: MaskModel = None
    w0: float = None
    aperture_radius: float = None
    coeff_ranges: tuple = DEFAULT_COEFF_RANGES
    noise_levels: tuple = DEFAULT_NOISE_LEVELS
    master_seed: int = 0

    def __post_init__(self):
        if int(self.n_samples) != self.n_samples or self.n_samples < 1:
            raise ValueError(f"n_samples must be a positive integer, got {self.n_samples!r}")
        if self.mask is None:
            object.__setattr__(self, "mask", default_mask(self.grid))
        if self.mask.grid != self.grid:
            raise ValueError("mask grid does not match generation grid")
        if self.w0 is None:
            object.__setattr__(self, "w0", 5 * self.grid.dx)
        if self.aperture_radius is None:
            object.__setattr__(self, "aperture_radius", 1.6 * self.w0)
        ranges = tuple((float(lo), float(hi)) for lo, hi in self.coeff_ranges)
        if len(ranges) != len(ZERNIKE_INDICES):
            raise ValueError(f"need {len(ZERNIKE_INDICES)} coefficient ranges")
        if any(lo > hi for lo, hi in ranges):
            raise ValueError("coefficient range low > high")
        object.__setattr__(self, "coeff_ranges", ranges)
        levels = tuple(float(v) for v in self.noise_levels)
        if not levels or any(not v > 0 for v in levels):
            raise ValueError("noise levels must be positive (inf allowed)")
        object.__setattr__(self, "noise_levels", levels)
        if not 0 <= int(self.master_seed) < 2 ** 64:
            raise ValueError("master_seed must fit in 64 bits")
        object.__setattr__(self, "master_seed", int(self.master_seed))


def sample_coeffs(rng, ranges=DEFAULT_COEFF_RANGES):
    """Draw each coefficient uniformly from its ``(low, high)`` range."""
    return ZernikeCoeffs(tuple(rng.uniform(lo, hi) for lo, hi in ranges))


def canonicalize_phase(obj, center=None):
    """Rotate the global phase so the reference pixel is real and positive.

    `center` defaults to the grid center ``(ny // 2, nx // 2)``.
    """
    v = obj.values
    center = obj.grid.center if center is None else tuple(center)
    c = v[center]
    mag = abs(c)
    if not mag > 1e-12 * np.abs(v).max():
        raise ValueError("reference pixel magnitude too small; phase undefined")
    out = v * (np.conj(c) / mag)
    out[center] = mag
    return ComplexField(obj.grid, out)


def forward_pattern(obj, mask):
    """Detector intensity for a pre-mask object."""
    return diffraction_intensity(multislice_mask_transit(obj, mask))


def poissonize(pattern, peak_counts, seed):
    """Shot-noise realization with the pattern maximum scaled to `peak_counts`.

    `seed` may be an int or a ``numpy.random.Generator``. Infinite
    `peak_counts` returns the pattern unchanged.
    """
    pattern = np.asarray(pattern, dtype=np.float64)
    if np.any(pattern < 0) or not np.all(np.isfinite(pattern)):
        raise ValueError("pattern must be finite and non-negative")
    if not peak_counts > 0:
        raise ValueError("peak_counts must be positive")
    if np.isinf(peak_counts):
        return pattern
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    top = pattern.max()
    if top == 0:
        return np.zeros_like(pattern)
    return rng.poisson(pattern * (peak_counts / top)).astype(np.float64)


def snr_of(peak_counts):
    """Shot-noise SNR of the peak pixel."""
    if not peak_counts > 0:
        raise ValueError("peak_counts must be positive")
    return float(np.sqrt(peak_counts))


def object_seed(master_seed, index):
    """Per-object 64-bit seed derived from ``(master_seed, index)``."""
    ss = np.random.SeedSequence([int(master_seed), int(index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def generate_object(cfg, seed):
    rng = np.random.default_rng(seed)
    coeffs = sample_coeffs(rng, cfg.coeff_ranges)
    obj = synthesize_focused_object(cfg.w0, coeffs, cfg.grid, cfg.aperture_radius)
    return canonicalize_phase(obj)


def generate_samples(cfg, index):
    """All noise variants of object `index`, in double precision."""
    seed = object_seed(cfg.master_seed, index)
    obj = generate_object(cfg, seed)
    clean = forward_pattern(obj, cfg.mask)
    out = []
    for k, level in enumerate(cfg.noise_levels):
        pattern = poissonize(clean, level, np.random.default_rng([seed, k]))
        out.append(DatasetSample(pattern, obj, level, seed))
    return out


def _record_dtype(grid):
    return np.dtype([
        ("seed", "<u8"),
        ("peak", "<f8"),
        ("pattern", "<f4", grid.shape),
        ("object", "<c8", grid.shape),
    ])


def _header_bytes(grid, mhash, n_records, n_levels):
    return _HEADER.pack(MAGIC, VERSION, grid.nx, grid.ny, grid.dx, grid.dy, grid.wavelength,
                        bytes.fromhex(mhash), n_records, n_levels)


def _pack_records(samples, dtype):
    rec = np.zeros(len(samples), dtype=dtype)
    for i, s in enumerate(samples):
        rec[i]["seed"] = s.rng_seed
        rec[i]["peak"] = s.peak_counts
        rec[i]["pattern"] = s.pattern
        rec[i]["object"] = s.object.values
    return rec.tobytes()


def generate_corpus(cfg, path, threads=1, chunk=64):
    """Write the corpus for `cfg` to `path` and return the path.

    Objects are generated independently per index, so the output is
    byte-identical for any `threads`. The file is written to a temporary
    name and renamed when complete.
    """
    path = os.fspath(path)
    dtype = _record_dtype(cfg.grid)
    n_levels = len(cfg.noise_levels)
    header = _header_bytes(cfg.grid, mask_hash(cfg.mask), cfg.n_samples * n_levels, n_levels)
    d = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    except OSError as exc:
        raise OSError(f"cannot write corpus {path}: {exc}") from exc
    try:
        _default_mode(fd)
        with os.fdopen(fd, "wb") as fh, ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
            fh.write(header)
            for start in range(0, cfg.n_samples, chunk):
                idx = range(start, min(start + chunk, cfg.n_samples))
                for samples in pool.map(lambda i: generate_samples(cfg, i), idx):
                    fh.write(_pack_records(samples, dtype))
        os.replace(tmp, path)
    except OSError as exc:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise OSError(f"cannot write corpus {path}: {exc}") from exc
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


class Corpus:
    """Memory-mapped view of a corpus file.

    ``records`` is a structured array with fields ``seed``, ``peak``,
    ``pattern`` and ``object``.
    """

    def __init__(self, path):
        self.path = os.fspath(path)
        size = os.path.getsize(self.path)
        with open(self.path, "rb") as fh:
            head = fh.read(_HEADER.size)
        if len(head) < _HEADER.size:
            raise FormatError(f"{self.path}: truncated header at byte {len(head)}")
        magic, version, nx, ny, dx, dy, lam, mh, n_records, n_levels = _HEADER.unpack(head)
        if magic != MAGIC:
            raise FormatError(f"{self.path}: bad magic {magic!r} at byte 0")
        if version != VERSION:
            raise FormatError(f"{self.path}: unsupported version {version} at byte 4")
        try:
            self.grid = Grid(nx, ny, dx, dy, lam)
        except ValueError as exc:
            raise FormatError(f"{self.path}: invalid grid at byte 16: {exc}") from None
        self.mask_hash = mh.hex()
        self.n_levels = n_levels
        self.dtype = _record_dtype(self.grid)
        expected = _HEADER.size + n_records * self.dtype.itemsize
        if size != expected:
            complete = (size - _HEADER.size) // self.dtype.itemsize
            off = _HEADER.size + min(complete, n_records) * self.dtype.itemsize
            raise FormatError(
                f"{self.path}: expected {n_records} records ({expected} bytes), file has {size} bytes; "
                f"record at byte {off} is incomplete or extra data follows")
        if n_records:
            self.records = np.memmap(self.path, dtype=self.dtype, mode="r", offset=_HEADER.size,
                                     shape=(n_records,))
        else:
            self.records = np.zeros(0, dtype=self.dtype)

    def __len__(self):
        return len(self.records)

    def record_offset(self, i):
        return _HEADER.size + i * self.dtype.itemsize

    def sample(self, i):
        r = self.records[i]
        pattern = np.array(r["pattern"], dtype=np.float64)
        obj = np.array(r["object"], dtype=np.complex128)
        off = self.record_offset(i)
        if not np.all(np.isfinite(pattern)) or np.any(pattern < 0):
            raise FormatError(f"{self.path}: invalid pattern in record at byte {off}")
        c = obj[self.grid.center]
        if c.imag != 0 or not c.real > 0:
            raise FormatError(f"{self.path}: object not canonicalized in record at byte {off}")
        try:
            field_ = ComplexField(self.grid, obj)
        except ValueError as exc:
            raise FormatError(f"{self.path}: record at byte {off}: {exc}") from None
        return DatasetSample(pattern, field_, float(r["peak"]), int(r["seed"]))


def open_corpus(path):
    return Corpus(path)


def read_corpus(path):
    """Yield the samples of a corpus in stored order.

    The file size is checked against the header before anything is
    yielded, so a truncated file raises without producing partial output.
    """
    corpus = Corpus(path)
    for i in range(len(corpus)):
        yield corpus.sample(i)
