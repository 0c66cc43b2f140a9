"""Accuracy and latency comparisons between the neural and iterative retrievers.

Both methods are scored on the exit wave restricted to the open mask
pixels: the iterative method recovers that wave directly, and the neural
pre-mask output is first passed through the mask. Intensities are
normalized to unit maximum over that region before differencing.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import astuple, dataclass, fields

import numpy as np
from scipy import ndimage

from .dataset import forward_pattern, poissonize, snr_of
from .optics import ComplexField, Grid, angular_spectrum_propagate, circular_aperture, multislice_mask_transit

__all__ = [
    "BenchRow",
    "DiameterCheck",
    "rmse_intensity",
    "rmse_phase",
    "align_phase",
    "run_snr_sweep",
    "format_bench_table",
    "parse_bench_table",
    "curve_files",
    "time_retrieval",
    "measure_diameter",
    "backprop_diameter_check",
    "pinhole_grid",
    "simulate_pinhole",
]

COMPARISON_NOTE = ("metrics on the mask-open exit wave; intensities normalized to unit max over that region; "
                   "phase over pixels above 5% of both magnitudes")


@dataclass(frozen=True)
class BenchRow:
    peak_counts: float
    snr: float
    method: str
    mean_intensity_rmse: float
    std_intensity_rmse: float
    mean_phase_rmse: float
    std_phase_rmse: float
    n_samples: int
    mean_wall_ms: float

    def __post_init__(self):
        if self.method not in ("neural", "iterative"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.std_intensity_rmse < 0 or self.std_phase_rmse < 0:
            raise ValueError("standard deviations must be non-negative")
        if np.isinf(self.peak_counts):
            if not np.isinf(self.snr):
                raise ValueError("snr must be inf for noise-free rows")
        elif abs(self.snr - np.sqrt(self.peak_counts)) > 1e-12 * max(1.0, self.snr):
            raise ValueError("snr must equal sqrt(peak_counts)")


def _values(f):
    return getattr(f, "values", f)


def _region(region, shape):
    r = np.asarray(region).astype(bool)
    if r.shape != shape:
        raise ValueError("region shape does not match fields")
    if not r.any():
        raise ValueError("region is empty")
    return r


def rmse_intensity(a, b, region):
    """RMS difference of unit-max-normalized intensities over `region`."""
    a, b = _values(a), _values(b)
    if a.shape != b.shape:
        raise ValueError("field shapes differ")
    r = _region(region, a.shape)
    out = []
    for f in (a, b):
        i = np.abs(f[r]) ** 2
        top = i.max()
        out.append(i / top if top > 0 else i)
    return float(np.sqrt(np.mean((out[0] - out[1]) ** 2)))


def rmse_phase(a, b, region, threshold=0.05):
    """RMS wrapped phase difference over bright pixels of `region` [rad]."""
    a, b = _values(a), _values(b)
    if a.shape != b.shape:
        raise ValueError("field shapes differ")
    r = _region(region, a.shape)
    ma, mb = np.abs(a), np.abs(b)
    ok = r & (ma > threshold * ma[r].max()) & (mb > threshold * mb[r].max())
    if not ok.any():
        raise ValueError("no pixels above the magnitude threshold")
    # difference of angles, wrapped to [-pi, pi); exactly zero for identical inputs
    d = np.angle(a[ok]) - np.angle(b[ok])
    d = (d + np.pi) % (2 * np.pi) - np.pi
    return float(np.sqrt(np.mean(d ** 2)))


def align_phase(f, pixel):
    """Remove the global phase so `pixel` is real and non-negative (no-op if dark)."""
    v = _values(f)
    c = v[pixel]
    if abs(c) == 0:
        return f
    out = v * (np.conj(c) / abs(c))
    out[pixel] = abs(c)
    return f.with_values(out) if isinstance(f, ComplexField) else out


def run_snr_sweep(objects, mask, retrievers, levels, bench_seed=0, on_result=None):
    """Score every retriever on every object at every noise level.

    Parameters
    ----------
    objects : sequence of ComplexField
        Ground-truth pre-mask objects (held out from training).
    mask : MaskModel
    retrievers : dict
        ``{"neural": fn, "iterative": fn}``; each ``fn(pattern)`` returns a
        ``(field, plane, wall_seconds)`` triple where ``plane`` is
        ``"object"`` (pre-mask; pushed through the mask here) or ``"exit"``.
    levels : sequence of float
        Peak counts; ``inf`` means noise free.
    on_result : callable, optional
        Called as ``on_result(i, level, name, estimate, truth)`` with the
        phase-aligned exit waves, e.g. to save example retrievals.

    Returns
    -------
    list of BenchRow, ordered by level then method.
    """
    support = mask.transmission.astype(bool)
    scores = {(lvl, m): [] for lvl in levels for m in retrievers}
    for i, obj in enumerate(objects):
        clean = forward_pattern(obj, mask)
        truth = multislice_mask_transit(obj, mask).values
        ref = np.unravel_index(np.argmax(np.where(support, np.abs(truth), -1)), truth.shape)
        truth = align_phase(truth, ref)
        for k, lvl in enumerate(levels):
            pattern = poissonize(clean, lvl, np.random.default_rng([bench_seed, i, k]))
            for name, fn in retrievers.items():
                field, plane, dt = fn(pattern)
                est = multislice_mask_transit(field, mask).values if plane == "object" else _values(field)
                est = align_phase(est, ref)
                if on_result is not None:
                    on_result(i, lvl, name, est, truth)
                ri = rmse_intensity(est, truth, support)
                try:
                    rp = rmse_phase(est, truth, support)
                except ValueError:
                    rp = np.nan
                scores[(lvl, name)].append((ri, rp, dt))
    rows = []
    for lvl in levels:
        for name in retrievers:
            s = np.array(scores[(lvl, name)], dtype=float).reshape(-1, 3)
            rows.append(BenchRow(
                peak_counts=float(lvl), snr=snr_of(lvl), method=name,
                mean_intensity_rmse=float(np.mean(s[:, 0])), std_intensity_rmse=float(np.std(s[:, 0])),
                mean_phase_rmse=float(np.nanmean(s[:, 1])) if np.isfinite(s[:, 1]).any() else float("nan"),
                std_phase_rmse=float(np.nanstd(s[:, 1])) if np.isfinite(s[:, 1]).any() else 0.0,
                n_samples=len(s), mean_wall_ms=float(np.mean(s[:, 2]) * 1e3)))
    return rows


def config_hash(config):
    return hashlib.sha256(json.dumps(config, sort_keys=True, default=str).encode()).hexdigest()[:16]


def format_bench_table(rows, config=None):
    config = config or {}
    head = [f"# config_hash\t{config_hash(config)}",
            f"# config\t{json.dumps(config, sort_keys=True, default=str)}",
            f"# note\t{COMPARISON_NOTE}",
            "# " + "\t".join(f.name for f in fields(BenchRow))]
    body = []
    for r in rows:
        vals = astuple(r)
        body.append("\t".join([repr(vals[0]), repr(vals[1]), vals[2]] + [repr(v) for v in vals[3:7]]
                              + [str(vals[7]), repr(vals[8])]))
    return "\n".join(head + body) + "\n"


def parse_bench_table(text):
    rows = []
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        p = line.split("\t")
        rows.append(BenchRow(float(p[0]), float(p[1]), p[2], *map(float, p[3:7]), int(p[7]), float(p[8])))
    return rows


def curve_files(rows, config=None):
    """Two-column (snr, mean RMSE) text per method and quantity; returns ``{name: text}``."""
    out = {}
    h = config_hash(config or {})
    for method in sorted({r.method for r in rows}):
        for q in ("intensity", "phase"):
            sel = sorted((r for r in rows if r.method == method), key=lambda r: r.snr)
            lines = [f"# config_hash\t{h}", f"# {method} {q} RMSE vs SNR", "# snr\tmean_rmse"]
            lines += [f"{r.snr!r}\t{getattr(r, f'mean_{q}_rmse')!r}" for r in sel]
            out[f"curve_{method}_{q}.tsv"] = "\n".join(lines) + "\n"
    return out


def time_retrieval(pattern, method, repetitions=5):
    """Median wall time [ms] of ``method(pattern)`` after one discarded warm-up call."""
    if repetitions < 3:
        raise ValueError("need at least 3 repetitions")
    method(pattern)
    samples = []
    for _ in range(repetitions):
        t0 = time.perf_counter()
        method(pattern)
        samples.append((time.perf_counter() - t0) * 1e3)
    return float(np.median(samples)), samples


# --- back-propagation check ------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DiameterCheck:
    passed: bool
    measured: float
    expected: float
    tolerance: float
    field: ComplexField


def _run_width(profile, peak_idx, level):
    """Width of the above-`level` run containing `peak_idx`, with linear edge interpolation."""
    n = len(profile)
    lo = peak_idx
    while lo > 0 and profile[lo - 1] >= level:
        lo -= 1
    hi = peak_idx
    while hi < n - 1 and profile[hi + 1] >= level:
        hi += 1
    left = float(lo)
    if lo > 0:
        a, b = profile[lo - 1], profile[lo]
        left = lo - (b - level) / (b - a)
    right = float(hi)
    if hi < n - 1:
        a, b = profile[hi], profile[hi + 1]
        right = hi + (a - level) / (a - b)
    return right - left


def measure_diameter(f, floor=1e-30):
    """Mean of the x and y 50%-of-peak widths [m].

    The cuts pass through the centroid of the above-threshold region that
    contains the peak, so flat-topped fields are cut across their middle
    rather than through whichever pixel happens to be brightest.
    """
    intensity = f.intensity
    peak = intensity.max()
    if not peak > floor:
        raise ValueError("field peak intensity below numeric floor")
    level = 0.5 * peak
    labels, _ = ndimage.label(intensity >= level)
    region = labels == labels[np.unravel_index(np.argmax(intensity), intensity.shape)]
    cy, cx = (int(round(c)) for c in ndimage.center_of_mass(region))
    if not region[cy, cx]:
        cy, cx = np.unravel_index(np.argmax(intensity), intensity.shape)
    wx = _run_width(intensity[cy, :], cx, level) * f.grid.dx
    wy = _run_width(intensity[:, cx], cy, level) * f.grid.dy
    return float(0.5 * (wx + wy))


def backprop_diameter_check(retrieved, z, expected_diameter, tolerance):
    """Propagate back by `z` and compare the 50%-threshold diameter with `expected_diameter`."""
    back = angular_spectrum_propagate(retrieved, -z) if z else retrieved
    d = measure_diameter(back)
    return DiameterCheck(abs(d - expected_diameter) <= tolerance, d, expected_diameter, tolerance, back)


def pinhole_grid(n=256, dx=0.125e-6, wavelength=13.5e-9):
    return Grid(n, n, dx, dx, wavelength)


def simulate_pinhole(diameter=2.7e-6, grid=None):
    """Uniform plane wave just behind a circular pinhole."""
    grid = pinhole_grid() if grid is None else grid
    return ComplexField(grid, circular_aperture(grid, diameter).astype(float))
