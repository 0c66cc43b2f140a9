"""Support / Fourier-modulus alternating projections (ER and HIO).

The retrieved quantity is the exit wave directly behind the mask; the mask
holes act as the support.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .optics import ComplexField, Grid, _fft2c, _ifft2c
from .results import RetrievalResult

__all__ = [
    "IterConfig",
    "IterTrace",
    "IterationDiverged",
    "initial_guess",
    "fourier_project",
    "support_project_ER",
    "support_update_HIO",
    "support_from_mask",
    "retrieve_iterative",
]


class IterationDiverged(ArithmeticError):
    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True, eq=False)
class IterConfig:
    """Iteration schedule.

    With ``algorithm="HIO"`` the first `er_warmup` and last `er_final`
    iterations use ER and the rest use HIO with feedback `hio_beta`.
    ``algorithm="ER"`` runs ER throughout.
    """

    support: np.ndarray
    n_iterations: int = 500
    algorithm: str = "HIO"
    hio_beta: float = 0.9
    er_warmup: int = 40
    er_final: int = 40
    seed: int = 0

    def __post_init__(self):
        s = np.asarray(self.support)
        if s.ndim != 2 or not np.all((s == 0) | (s == 1)):
            raise ValueError("support must be a binary 2D map")
        if not s.any():
            raise ValueError("support is empty")
        s = s.astype(bool)
        s.flags.writeable = False
        object.__setattr__(self, "support", s)
        if self.algorithm not in ("ER", "HIO"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if not 0 < self.hio_beta <= 1:
            raise ValueError("hio_beta must lie in (0, 1]")
        if int(self.n_iterations) != self.n_iterations or self.n_iterations < 0:
            raise ValueError("n_iterations must be a non-negative integer")
        if self.er_warmup < 0 or self.er_final < 0:
            raise ValueError("ER phase lengths must be non-negative")

    def step_kind(self, k):
        if self.algorithm == "ER":
            return "ER"
        if k < self.er_warmup or k >= self.n_iterations - self.er_final:
            return "ER"
        return "HIO"


@dataclass(frozen=True, eq=False)
class IterTrace:
    """Relative Fourier-modulus error after each iteration."""

    errors: np.ndarray
    kinds: tuple = ()

    def __len__(self):
        return len(self.errors)


def _unit_grid(shape):
    ny, nx = shape
    return Grid(nx, ny, 1.0, 1.0, 1.0)


def _check_pattern(pattern):
    pattern = np.asarray(pattern, dtype=np.float64)
    if pattern.ndim != 2:
        raise ValueError("pattern must be 2D")
    if not np.all(np.isfinite(pattern)) or np.any(pattern < 0):
        raise ValueError("pattern must be finite and non-negative")
    return pattern


def initial_guess(pattern, seed, grid=None):
    """Inverse transform of ``sqrt(pattern)`` with uniformly random phases."""
    pattern = _check_pattern(pattern)
    rng = np.random.default_rng(seed)
    phases = np.exp(2j * np.pi * rng.random(pattern.shape))
    grid = _unit_grid(pattern.shape) if grid is None else grid
    return ComplexField(grid, _ifft2c(np.sqrt(pattern) * phases))


def _modulus_replace(G, amplitude):
    mag = np.abs(G)
    phase = np.ones_like(G)
    nz = mag > 0
    phase[nz] = G[nz] / mag[nz]
    return amplitude * phase


def fourier_project(g, pattern):
    """Replace the Fourier modulus of `g` by ``sqrt(pattern)``, keeping the phase."""
    pattern = _check_pattern(pattern)
    if pattern.shape != g.grid.shape:
        raise ValueError("pattern shape does not match field grid")
    return g.with_values(_ifft2c(_modulus_replace(_fft2c(g.values), np.sqrt(pattern))))


def _support_array(support, shape):
    s = np.asarray(support).astype(bool)
    if s.shape != shape:
        raise ValueError(f"support shape {s.shape} does not match field {shape}")
    return s


def support_project_ER(g, support):
    s = _support_array(support, g.grid.shape)
    return g.with_values(np.where(s, g.values, 0))


def support_update_HIO(g_prev, g_fourier, support, beta):
    """Inside the support take `g_fourier`; outside, ``g_prev - beta * g_fourier``."""
    s = _support_array(support, g_prev.grid.shape)
    if g_fourier.grid.shape != g_prev.grid.shape:
        raise ValueError("field shapes differ")
    return g_prev.with_values(np.where(s, g_fourier.values, g_prev.values - beta * g_fourier.values))


def support_from_mask(mask):
    return mask.transmission.astype(bool)


def retrieve_iterative(pattern, cfg, grid=None):
    """Run the configured schedule on one diffraction pattern.

    Returns ``(RetrievalResult, IterTrace)``. The result field is the
    support-constrained exit-wave estimate; with zero iterations it is the
    initial guess.
    """
    t0 = time.perf_counter()
    pattern = _check_pattern(pattern)
    grid = _unit_grid(pattern.shape) if grid is None else grid
    if grid.shape != pattern.shape or cfg.support.shape != pattern.shape:
        raise ValueError("pattern, grid and support shapes must agree")
    S = cfg.support
    amp = np.sqrt(pattern)
    amp_norm = np.linalg.norm(amp)
    amp_norm = amp_norm if amp_norm > 0 else 1.0

    g = initial_guess(pattern, cfg.seed, grid).values
    G = _fft2c(g)
    errors = np.empty(cfg.n_iterations)
    kinds = []
    with np.errstate(over="ignore", invalid="ignore"):  # non-finite iterates are caught below
        for k in range(cfg.n_iterations):
            gp = _ifft2c(_modulus_replace(G, amp))
            kind = cfg.step_kind(k)
            kinds.append(kind)
            if kind == "ER":
                g = np.where(S, gp, 0)
            else:
                g = np.where(S, gp, g - cfg.hio_beta * gp)
            G = _fft2c(g)
            errors[k] = np.linalg.norm(np.abs(G) - amp) / amp_norm
            if not np.isfinite(errors[k]):
                trace = IterTrace(errors[:k + 1].copy(), tuple(kinds))
                raise IterationDiverged(f"non-finite iterate at iteration {k}", trace)
    if kinds and kinds[-1] == "HIO":
        g = np.where(S, gp, 0)
    result = RetrievalResult(
        ComplexField(grid, g), method="iterative",
        wall_time_s=time.perf_counter() - t0, iterations=cfg.n_iterations,
        extra={"algorithm": cfg.algorithm,
               "final_error": float(errors[-1]) if len(errors) else float("nan")})
    return result, IterTrace(errors, tuple(kinds))
