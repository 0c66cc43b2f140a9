"""Scalar optics on sampled grids.

Everything here works on :class:`ComplexField` values whose arrays are
stored ``(ny, nx)`` with the zero-frequency / origin sample at
``(ny // 2, nx // 2)``.  Fourier transforms are unitary, so Parseval holds
without extra bookkeeping.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np
import scipy.fft as sfft

__all__ = [
    "Grid",
    "ComplexField",
    "MaskModel",
    "ZernikeCoeffs",
    "ZERNIKE_INDICES",
    "fft2_centered",
    "ifft2_centered",
    "zernike_basis",
    "zernike_phase",
    "gaussian_source",
    "synthesize_focused_object",
    "gamma_map",
    "transfer_function",
    "angular_spectrum_propagate",
    "multislice_mask_transit",
    "multislice_mask_adjoint",
    "diffraction_intensity",
    "default_grid",
    "default_mask",
    "circular_aperture",
]

# (n, m) pairs for the 12 aberration terms, OSA/ANSI order (j = 3..14).
ZERNIKE_INDICES = (
    (2, -2), (2, 0), (2, 2),
    (3, -3), (3, -1), (3, 1), (3, 3),
    (4, -4), (4, -2), (4, 0), (4, 2), (4, 4),
)


@dataclass(frozen=True)
class Grid:
    """Sampling geometry of a 2D field.

    Parameters
    ----------
    nx, ny : int
        Sample counts along x (columns) and y (rows). Even, at least 8.
    dx, dy : float
        Sample pitch [m] (or reciprocal units after a Fourier transform).
    wavelength : float
        Wavelength [m].
    """

    nx: int
    ny: int
    dx: float
    dy: float
    wavelength: float

    def __post_init__(self):
        for name in ("nx", "ny"):
            v = getattr(self, name)
            if int(v) != v or v < 8 or v % 2:
                raise ValueError(f"{name} must be an even integer >= 8, got {v!r}")
            object.__setattr__(self, name, int(v))
        for name in ("dx", "dy", "wavelength"):
            v = float(getattr(self, name))
            if not np.isfinite(v) or v <= 0:
                raise ValueError(f"{name} must be positive and finite, got {v!r}")
            object.__setattr__(self, name, v)

    @property
    def shape(self):
        return (self.ny, self.nx)

    @property
    def extent(self):
        """Full (x, y) extent of the grid [m]."""
        return (self.nx * self.dx, self.ny * self.dy)

    def coords(self):
        """Return centered 1D sample coordinates ``(x, y)``."""
        x = (np.arange(self.nx) - self.nx // 2) * self.dx
        y = (np.arange(self.ny) - self.ny // 2) * self.dy
        return x, y

    def meshgrid(self):
        x, y = self.coords()
        return np.meshgrid(x, y, indexing="xy")

    def frequencies(self):
        """Centered spatial-frequency lattices ``(fx, fy)`` [cycles/m]."""
        fx = (np.arange(self.nx) - self.nx // 2) / (self.nx * self.dx)
        fy = (np.arange(self.ny) - self.ny // 2) / (self.ny * self.dy)
        return np.meshgrid(fx, fy, indexing="xy")

    def reciprocal(self):
        return Grid(self.nx, self.ny, 1.0 / (self.nx * self.dx),
                    1.0 / (self.ny * self.dy), self.wavelength)

    @property
    def center(self):
        return (self.ny // 2, self.nx // 2)


def _readonly(a):
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class ComplexField:
    """Complex samples on a :class:`Grid`. Immutable; values are copied in."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=np.complex128, copy=True)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite samples")
        object.__setattr__(self, "values", _readonly(v))

    def with_values(self, values):
        return ComplexField(self.grid, values)

    @property
    def intensity(self):
        return np.abs(self.values) ** 2

    def norm(self):
        return float(np.linalg.norm(self.values))


@dataclass(frozen=True, eq=False)
class MaskModel:
    """Binary transmission mask, optionally split into several thin slices.

    The transmission map must be binary, partly open, and must not map
    onto itself under a 180 degree rotation about the grid center; otherwise
    an object and its rotated conjugate would be indistinguishable.
    """

    grid: Grid
    transmission: np.ndarray = field(repr=False)
    n_slices: int = 1
    dz: float = 0.0

    def __post_init__(self):
        t = np.asarray(self.transmission)
        if t.shape != self.grid.shape:
            raise ValueError(f"transmission shape {t.shape} does not match grid {self.grid.shape}")
        if not np.all((t == 0) | (t == 1)):
            raise ValueError("transmission must be binary (0/1)")
        t = _readonly(t.astype(np.uint8))
        frac = t.mean()
        if not 0 < frac < 1:
            raise ValueError(f"open fraction must be strictly between 0 and 1, got {frac}")
        if np.array_equal(t, _rotate180(t)):
            raise ValueError("mask is centrosymmetric; an asymmetric geometry is required")
        if int(self.n_slices) != self.n_slices or self.n_slices < 1:
            raise ValueError("n_slices must be a positive integer")
        if not np.isfinite(self.dz) or self.dz < 0:
            raise ValueError("dz must be finite and non-negative")
        object.__setattr__(self, "transmission", t)
        object.__setattr__(self, "n_slices", int(self.n_slices))
        object.__setattr__(self, "dz", float(self.dz))

    @property
    def open_fraction(self):
        return float(self.transmission.mean())

    @classmethod
    def unchecked(cls, grid, transmission, n_slices=1, dz=0.0):
        """Build a mask skipping the geometry checks.

        Only for diagnostics such as all-open or symmetric test masks.
        """
        obj = object.__new__(cls)
        object.__setattr__(obj, "grid", grid)
        object.__setattr__(obj, "transmission", _readonly(np.asarray(transmission, dtype=np.uint8).copy()))
        object.__setattr__(obj, "n_slices", int(n_slices))
        object.__setattr__(obj, "dz", float(dz))
        return obj


def _rotate180(a):
    # rotation about the (ny//2, nx//2) sample, which is the origin for even sizes
    return np.roll(a[::-1, ::-1], (1, 1), axis=(0, 1))


@dataclass(frozen=True)
class ZernikeCoeffs:
    """Twelve aberration weights [rad] in :data:`ZERNIKE_INDICES` order."""

    c: tuple

    def __post_init__(self):
        c = tuple(float(v) for v in self.c)
        if len(c) != len(ZERNIKE_INDICES):
            raise ValueError(f"expected {len(ZERNIKE_INDICES)} coefficients, got {len(c)}")
        if not all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "c", c)

    @classmethod
    def zeros(cls):
        return cls((0.0,) * len(ZERNIKE_INDICES))

    def as_array(self):
        return np.array(self.c)


def _as_values(f):
    if isinstance(f, ComplexField):
        return f.values
    raise TypeError(f"expected ComplexField, got {type(f).__name__}")


def _fft2c(a, workers=None):
    return sfft.fftshift(sfft.fft2(sfft.ifftshift(a, axes=(-2, -1)), norm="ortho", workers=workers),
                         axes=(-2, -1))


def _ifft2c(a, workers=None):
    return sfft.fftshift(sfft.ifft2(sfft.ifftshift(a, axes=(-2, -1)), norm="ortho", workers=workers),
                         axes=(-2, -1))


def fft2_centered(f):
    """Unitary centered 2D DFT; the result lives on the reciprocal grid."""
    return ComplexField(f.grid.reciprocal(), _fft2c(_as_values(f)))


def ifft2_centered(f):
    """Inverse of :func:`fft2_centered`."""
    return ComplexField(f.grid.reciprocal(), _ifft2c(_as_values(f)))


def _radial(n, m, r):
    m = abs(m)
    out = np.zeros_like(r)
    for k in range((n - m) // 2 + 1):
        coef = (-1) ** k * factorial(n - k) / (
            factorial(k) * factorial((n + m) // 2 - k) * factorial((n - m) // 2 - k))
        out += coef * r ** (n - 2 * k)
    return out


def zernike_basis(grid, aperture_radius):
    """Unnormalized Zernike maps for the 12 aberration terms.

    Returns an array of shape ``(12, ny, nx)``; each map is zero outside
    the disk of radius `aperture_radius`.
    """
    if not aperture_radius > 0:
        raise ValueError("aperture_radius must be positive")
    half = min(grid.nx * grid.dx, grid.ny * grid.dy) / 2
    if aperture_radius > half * (1 + 1e-12):
        raise ValueError(f"aperture radius {aperture_radius:g} exceeds half the grid extent {half:g}")
    X, Y = grid.meshgrid()
    r = np.hypot(X, Y) / aperture_radius
    theta = np.arctan2(Y, X)
    inside = r <= 1.0
    maps = np.empty((len(ZERNIKE_INDICES),) + grid.shape)
    for i, (n, m) in enumerate(ZERNIKE_INDICES):
        ang = np.cos(m * theta) if m >= 0 else np.sin(-m * theta)
        maps[i] = np.where(inside, _radial(n, m, r) * ang, 0.0)
    return maps


def zernike_phase(coeffs, grid, aperture_radius):
    """Aberration phase map [rad]: weighted sum of the 12 Zernike terms."""
    basis = zernike_basis(grid, aperture_radius)
    return np.tensordot(coeffs.as_array(), basis, axes=1)


def gaussian_source(w0, grid):
    """Real Gaussian amplitude ``exp(-(x^2 + y^2) / w0^2)``, peak 1 at the center."""
    if not w0 > 0:
        raise ValueError("w0 must be positive")
    if 2 * w0 >= min(grid.extent):
        raise ValueError("beam waist does not fit in the grid")
    X, Y = grid.meshgrid()
    return ComplexField(grid, np.exp(-(X ** 2 + Y ** 2) / w0 ** 2))


def synthesize_focused_object(w0, coeffs, grid, aperture_radius=None):
    """Focus an aberrated Gaussian pupil with a single Fourier transform.

    The pupil is sampled on `grid`; the focal field is returned on the same
    `grid`, i.e. the focusing optic is assumed to map pupil samples onto
    mask-plane samples one to one. `aperture_radius` defaults to ``2 * w0``.
    """
    if aperture_radius is None:
        aperture_radius = 2.0 * w0
    src = gaussian_source(w0, grid)
    phi = zernike_phase(coeffs, grid, aperture_radius)
    pupil = src.values * np.exp(1j * phi)
    return ComplexField(grid, _fft2c(pupil))


def gamma_map(grid):
    """Direction cosine ``sqrt(1 - (lambda fx)^2 - (lambda fy)^2)`` on the frequency lattice.

    Returns a masked array; evanescent entries (negative radicand) are masked.
    """
    fx, fy = grid.frequencies()
    lam = grid.wavelength
    rad = 1.0 - (lam * fx) ** 2 - (lam * fy) ** 2
    evanescent = rad < 0
    return np.ma.masked_array(np.sqrt(np.where(evanescent, 0.0, rad)), mask=evanescent)


def transfer_function(grid, z):
    """Angular-spectrum transfer factor, zero for evanescent components."""
    g = gamma_map(grid)
    phase = 2 * np.pi * z / grid.wavelength * g.filled(0.0)
    return np.where(np.ma.getmaskarray(g), 0.0, np.exp(1j * phase))


def _propagate_values(values, grid, z):
    if z == 0:
        return values
    return _ifft2c(_fft2c(values) * transfer_function(grid, z))


def angular_spectrum_propagate(f, z):
    """Propagate a field by distance `z` [m]; negative `z` back-propagates.

    ``z == 0`` returns the field unchanged.
    """
    v = _as_values(f)
    if not np.isfinite(z):
        raise ValueError("propagation distance must be finite")
    return ComplexField(f.grid, _propagate_values(v, f.grid, float(z)))


def _check_mask_grid(f, mask):
    if f.grid != mask.grid:
        raise ValueError(f"mask grid {mask.grid} does not match field grid {f.grid}")


def multislice_mask_transit(f, mask):
    """Exit wave behind the mask: ``n_slices`` rounds of (transmit, propagate dz)."""
    _check_mask_grid(f, mask)
    v = f.values
    t = mask.transmission
    for _ in range(mask.n_slices):
        v = _propagate_values(v * t, mask.grid, mask.dz)
    return ComplexField(f.grid, v)


def transit_values(values, mask):
    """Array-level mask transit; broadcasts over leading axes."""
    t = mask.transmission
    for _ in range(mask.n_slices):
        values = values * t
        if mask.dz != 0:
            values = _ifft2c(_fft2c(values) * transfer_function(mask.grid, mask.dz))
    return values


def transit_adjoint_values(values, mask):
    """Adjoint of :func:`transit_values` (Hermitian transpose of the linear map)."""
    t = mask.transmission
    for _ in range(mask.n_slices):
        if mask.dz != 0:
            values = _ifft2c(_fft2c(values) * np.conj(transfer_function(mask.grid, mask.dz)))
        values = values * t
    return values


def multislice_mask_adjoint(f, mask):
    _check_mask_grid(f, mask)
    return ComplexField(f.grid, transit_adjoint_values(f.values, mask))


def diffraction_intensity(f):
    """Far-field intensity ``|FFT(f)|^2`` (arbitrary scale, non-negative)."""
    return np.abs(_fft2c(_as_values(f))) ** 2


def default_grid(n=128, extent=20e-6, wavelength=13.5e-9):
    return Grid(n, n, extent / n, extent / n, wavelength)


# (x, y, diameter) [m]; clustered around the beam axis so several holes carry
# comparable light, which keeps the support from acting like a single round hole
DEFAULT_HOLES = (
    (-1.6e-6, -0.9e-6, 2.0e-6),
    (1.2e-6, -1.5e-6, 1.1e-6),
    (0.3e-6, 0.5e-6, 0.8e-6),
    (-0.9e-6, 1.6e-6, 1.3e-6),
    (1.7e-6, 1.0e-6, 1.6e-6),
)


def circular_aperture(grid, diameter, center=(0.0, 0.0)):
    """Binary disk map (1 inside, 0 outside)."""
    X, Y = grid.meshgrid()
    cx, cy = center
    return ((X - cx) ** 2 + (Y - cy) ** 2 <= (diameter / 2) ** 2).astype(np.uint8)


def default_mask(grid=None, holes=DEFAULT_HOLES, n_slices=1, dz=0.0):
    """Thin binary mask with five holes of distinct diameters."""
    grid = default_grid() if grid is None else grid
    t = np.zeros(grid.shape, dtype=np.uint8)
    for cx, cy, d in holes:
        t |= circular_aperture(grid, d, (cx, cy))
    return MaskModel(grid, t, n_slices=n_slices, dz=dz)
