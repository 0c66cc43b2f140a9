"""Training objective: label error on the real and imaginary parts plus the
error of the diffraction pattern re-simulated through the mask.

Each term is a mean of squared differences over the ``n`` pixels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .optics import _fft2c, _ifft2c, transit_adjoint_values, transit_values

__all__ = ["LossBreakdown", "loss_eq1", "batch_loss_and_grad"]


@dataclass(frozen=True)
class LossBreakdown:
    real_term: float
    imag_term: float
    pattern_term: float

    @property
    def total(self):
        return self.real_term + self.imag_term + self.pattern_term

    def __add__(self, other):
        return LossBreakdown(self.real_term + other.real_term, self.imag_term + other.imag_term,
                             self.pattern_term + other.pattern_term)

    def scaled(self, s):
        return LossBreakdown(self.real_term * s, self.imag_term * s, self.pattern_term * s)

    def as_tuple(self):
        return (self.real_term, self.imag_term, self.pattern_term, self.total)


def _normalized_patterns(U, mask):
    Q = _fft2c(transit_values(U, mask))
    intensity = (Q.real ** 2 + Q.imag ** 2)
    flat = intensity.reshape(intensity.shape[0], -1)
    k = np.argmax(flat, axis=1)
    m = flat[np.arange(len(k)), k]
    m = np.where(m > 0, m, 1)
    return Q, intensity, k, m


def batch_loss_and_grad(U_ret, U_act, mask, with_grad=True, pattern_weight=1.0):
    """Batch-mean loss and its gradient with respect to the retrieved object.

    Parameters
    ----------
    U_ret, U_act : ndarray, complex, shape (B, ny, nx)
    mask : MaskModel or None
        ``None`` disables the pattern term.

    Returns
    -------
    (LossBreakdown, ndarray or None)
        The gradient is complex, ``dL/dRe + 1j * dL/dIm``, same shape as `U_ret`.
    """
    if U_ret.shape != U_act.shape:
        raise ValueError(f"shape mismatch {U_ret.shape} vs {U_act.shape}")
    B = U_ret.shape[0]
    n = U_ret.shape[-1] * U_ret.shape[-2]
    diff = U_ret - U_act
    real_terms = np.mean(diff.real.reshape(B, -1) ** 2, axis=1)
    imag_terms = np.mean(diff.imag.reshape(B, -1) ** 2, axis=1)
    grad = (2.0 / n) * diff if with_grad else None

    if mask is None or pattern_weight == 0:
        pat_terms = np.zeros(B, dtype=real_terms.dtype)
    else:
        Q, I_ret, k, m = _normalized_patterns(U_ret, mask)
        _, I_act, _, m_act = _normalized_patterns(U_act, mask)
        P = I_ret / m[:, None, None]
        J = I_act / m_act[:, None, None]
        r = P - J
        pat_terms = pattern_weight * np.mean(r.reshape(B, -1) ** 2, axis=1)
        if with_grad:
            dP = (2.0 * pattern_weight / n) * r
            dI = dP / m[:, None, None]
            corr = -np.sum((dP * I_ret).reshape(B, -1), axis=1) / m ** 2
            dI.reshape(B, -1)[np.arange(B), k] += corr
            gQ = 2.0 * dI * Q
            grad = grad + transit_adjoint_values(_ifft2c(gQ), mask)

    terms = np.stack([real_terms, imag_terms, pat_terms], axis=1)
    if not np.all(np.isfinite(terms)):
        bad = int(np.nonzero(~np.all(np.isfinite(terms), axis=1))[0][0])
        raise FloatingPointError(f"non-finite loss for sample {bad} in batch")
    mean = terms.mean(axis=0)
    breakdown = LossBreakdown(float(mean[0]), float(mean[1]), float(mean[2]))
    if with_grad:
        grad = grad / B
    return breakdown, grad


def loss_eq1(retrieved, actual, mask):
    """Loss breakdown for a single retrieved/actual object pair.

    `retrieved` and `actual` are ComplexFields or complex arrays; `mask`
    may be ``None`` to drop the pattern term.
    """
    a = getattr(retrieved, "values", retrieved)
    b = getattr(actual, "values", actual)
    a = np.asarray(a, dtype=np.complex128)[None]
    b = np.asarray(b, dtype=np.complex128)[None]
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise FloatingPointError("non-finite input to loss")
    breakdown, _ = batch_loss_and_grad(a, b, mask, with_grad=False)
    return breakdown
