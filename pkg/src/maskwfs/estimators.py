"""scikit-learn style wrappers around the two retrievers.

Patterns are passed as ``(n_samples, ny, nx)`` stacks (a single 2-D
pattern is accepted and treated as one sample); retrieved fields come back
as complex stacks of the same shape. The wrappers hold only configuration
until fitted, so ``get_params``/``set_params``/``clone`` behave as usual.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .checkpoint import load_checkpoint
from .iterative import IterConfig, retrieve_iterative, support_from_mask
from .network import Architecture, infer, normalize_pattern
from .optics import MaskModel, default_mask
from .training import ArraySource, TrainConfig, fit_network

__all__ = [
    "check_patterns",
    "check_objects",
    "PatternNormalizer",
    "IterativeRetriever",
    "NeuralRetriever",
]


def check_patterns(X, *, min_size=8):
    """Validate diffraction patterns and return a float64 ``(n, ny, nx)`` stack.

    Raises
    ------
    ValueError
        On wrong dimensionality, non-finite or negative values, or images
        smaller than `min_size` on a side.
    """
    X = np.asarray(X)
    if np.iscomplexobj(X):
        raise ValueError("patterns must be real intensities")
    X = X.astype(np.float64, copy=False)
    if X.ndim == 2:
        X = X[None]
    if X.ndim != 3:
        raise ValueError(f"expected (n, ny, nx) patterns, got shape {X.shape}")
    if X.shape[0] == 0:
        raise ValueError("no patterns given")
    if min(X.shape[1:]) < min_size:
        raise ValueError(f"patterns must be at least {min_size}x{min_size}")
    if not np.all(np.isfinite(X)):
        raise ValueError("patterns contain non-finite values")
    if np.any(X < 0):
        raise ValueError("patterns must be non-negative")
    return X


def check_objects(y, shape=None):
    """Validate complex ground-truth objects and return a complex128 stack."""
    y = np.asarray(y)
    if y.ndim == 2:
        y = y[None]
    if y.ndim != 3:
        raise ValueError(f"expected (n, ny, nx) objects, got shape {y.shape}")
    y = y.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(y)):
        raise ValueError("objects contain non-finite values")
    if shape is not None and y.shape != tuple(shape):
        raise ValueError(f"objects shape {y.shape} does not match patterns {tuple(shape)}")
    return y


def _resolve_mask(mask, shape):
    m = default_mask() if mask is None else mask
    if not isinstance(m, MaskModel):
        raise TypeError("mask must be a MaskModel")
    if m.grid.shape != tuple(shape):
        raise ValueError(f"mask grid {m.grid.shape} does not match patterns {tuple(shape)}")
    return m


class PatternNormalizer(TransformerMixin, BaseEstimator):
    """Max-normalize each pattern, then compress with ``log(1+kx)/log(1+k)``.

    Stateless; ``fit`` only records the input image shape.
    """

    def __init__(self, kappa=1000.0):
        self.kappa = kappa

    def fit(self, X, y=None):
        X = check_patterns(X)
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")
        self.image_shape_ = X.shape[1:]
        return self

    def transform(self, X):
        check_is_fitted(self, "image_shape_")
        X = check_patterns(X)
        if X.shape[1:] != self.image_shape_:
            raise ValueError("pattern size differs from the fitted size")
        return normalize_pattern(X, self.kappa)


class IterativeRetriever(BaseEstimator):
    """Support-constrained ER/HIO phase retrieval of the mask exit wave.

    Parameters
    ----------
    mask : MaskModel, optional
        Sensor mask; its open pixels form the support. Defaults to the
        built-in five-hole mask.
    n_iterations : int
        Total iterations (ER warm-up + HIO + final ER for ``"HIO"``).
    algorithm : {"HIO", "ER"}
    hio_beta, er_warmup, er_final : schedule parameters.
    random_state : int
        Seed of the random initial phase.
    """

    def __init__(self, mask=None, n_iterations=500, algorithm="HIO", hio_beta=0.9,
                 er_warmup=40, er_final=40, random_state=0):
        self.mask = mask
        self.n_iterations = n_iterations
        self.algorithm = algorithm
        self.hio_beta = hio_beta
        self.er_warmup = er_warmup
        self.er_final = er_final
        self.random_state = random_state

    def _config(self, support):
        return IterConfig(support=support, n_iterations=self.n_iterations, algorithm=self.algorithm,
                          hio_beta=self.hio_beta, er_warmup=self.er_warmup, er_final=self.er_final,
                          seed=self.random_state)

    def fit(self, X=None, y=None):
        """Resolve the mask and validate the schedule; no learning happens."""
        shape = check_patterns(X).shape[1:] if X is not None else None
        m = default_mask() if self.mask is None else self.mask
        if shape is not None:
            m = _resolve_mask(self.mask, shape)
        self.mask_ = m
        self.support_ = support_from_mask(m)
        self._config(self.support_)  # raises on a bad schedule
        return self

    def predict(self, X):
        """Exit-wave estimates, complex ``(n, ny, nx)``."""
        check_is_fitted(self, "support_")
        X = check_patterns(X)
        if X.shape[1:] != self.support_.shape:
            raise ValueError("pattern size differs from the mask grid")
        cfg = self._config(self.support_)
        out = np.empty(X.shape, dtype=np.complex128)
        self.traces_ = []
        for i, p in enumerate(X):
            res, trace = retrieve_iterative(p, cfg, self.mask_.grid)
            out[i] = res.field.values
            self.traces_.append(trace)
        return out


class NeuralRetriever(BaseEstimator):
    """Encoder/twin-decoder network mapping a pattern to the pre-mask object.

    ``fit`` trains from scratch with ADAM and validation-based early
    stopping. Without explicit validation data, the last
    ``validation_fraction`` of the samples is held out (noise-free
    selection is the caller's responsibility in that case).
    """

    def __init__(self, mask=None, encoder_channels=(1, 16, 32, 64, 128), kernel=5, batch_size=16,
                 max_epochs=50, patience=5, learning_rate=1e-4, pattern_weight=1.0, kappa=1000.0,
                 validation_fraction=0.1, dtype="float32", random_state=0):
        self.mask = mask
        self.encoder_channels = encoder_channels
        self.kernel = kernel
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.patience = patience
        self.learning_rate = learning_rate
        self.pattern_weight = pattern_weight
        self.kappa = kappa
        self.validation_fraction = validation_fraction
        self.dtype = dtype
        self.random_state = random_state

    def fit(self, X, y, X_val=None, y_val=None):
        X = check_patterns(X)
        y = check_objects(y, X.shape)
        if X_val is None:
            if not 0 < self.validation_fraction < 1:
                raise ValueError("validation_fraction must be in (0, 1)")
            n_val = max(1, int(round(self.validation_fraction * len(X))))
            if n_val >= len(X):
                raise ValueError("too few samples to hold out a validation set")
            X, X_val, y, y_val = X[:-n_val], X[-n_val:], y[:-n_val], y[-n_val:]
        else:
            X_val = check_patterns(X_val)
            y_val = check_objects(y_val, X_val.shape)
        mask = _resolve_mask(self.mask, X.shape[1:])
        arch = Architecture(tuple(self.encoder_channels), self.kernel, tuple(X.shape[1:]))
        cfg = TrainConfig(batch_size=self.batch_size, max_epochs=self.max_epochs, patience=self.patience,
                          learning_rate=self.learning_rate, seed=self.random_state,
                          pattern_weight=self.pattern_weight, kappa=self.kappa, arch=arch, dtype=self.dtype)
        res = fit_network(ArraySource(X, y), ArraySource(X_val, y_val), mask, cfg, progress_every=0)
        self.params_ = res.params
        self.mask_ = mask
        self.training_log_ = res.log
        self.best_epoch_ = res.best_epoch
        return self

    @classmethod
    def from_checkpoint(cls, path, mask=None):
        """Estimator wrapping a saved checkpoint, ready for ``predict``."""
        params = load_checkpoint(path)
        est = cls(mask=mask, encoder_channels=params.arch.encoder, kernel=params.arch.kernel,
                  kappa=params.kappa, dtype=str(params.dtype))
        est.params_ = params
        est.mask_ = _resolve_mask(mask, params.arch.input_shape)
        return est

    def predict(self, X):
        """Canonicalized pre-mask objects, complex ``(n, ny, nx)``."""
        check_is_fitted(self, "params_")
        X = check_patterns(X)
        if X.shape[1:] != tuple(self.params_.arch.input_shape):
            raise ValueError("pattern size differs from the network input size")
        out = np.empty(X.shape, dtype=np.complex128)
        for i, p in enumerate(X):
            out[i] = infer(p, self.params_, self.mask_.grid).field.values
        return out
