"""Mini-batch ADAM training with validation-based early stopping."""

from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .checkpoint import save_checkpoint
from .dataset import open_corpus
from .fileio import atomic_write, file_sha256, mask_hash
from .loss import LossBreakdown, batch_loss_and_grad, loss_eq1
from .network import Architecture, _forward, init_params, network_gradients, normalize_pattern

__all__ = [
    "AdamState",
    "TrainConfig",
    "TrainResult",
    "TrainingAborted",
    "ArraySource",
    "CorpusSource",
    "adam_step",
    "evaluate_loss",
    "fit_network",
    "train",
    "loss_eq1",
    "format_log",
]

log = logging.getLogger(__name__)

LOG_COLUMNS = ("epoch", "train_real", "train_imag", "train_pattern", "train_total",
               "val_real", "val_imag", "val_pattern", "val_total", "seconds")


class TrainingAborted(RuntimeError):
    def __init__(self, message, checkpoint=None):
        super().__init__(message)
        self.checkpoint = checkpoint


@dataclass
class AdamState:
    m: dict
    v: dict
    t: int = 0
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def fresh(cls, tensors, lr=1e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        return cls({k: np.zeros_like(v) for k, v in tensors.items()},
                   {k: np.zeros_like(v) for k, v in tensors.items()}, 0, lr, beta1, beta2, eps)


def adam_step(tensors, grads, state):
    """One bias-corrected ADAM update, applied in place.

    Returns ``(tensors, state)`` for convenience.
    """
    for k, g in grads.items():
        if g.shape != tensors[k].shape:
            raise ValueError(f"gradient shape mismatch for {k}")
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient for {k}")
    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t
    for k, g in grads.items():
        m, v = state.m[k], state.v[k]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        step = (state.lr / bc1) * m / (np.sqrt(v / bc2) + state.eps)
        tensors[k] -= step.astype(tensors[k].dtype, copy=False)
    return tensors, state


class ArraySource:
    """In-memory samples: raw patterns ``(N, H, W)`` and complex objects ``(N, H, W)``."""

    def __init__(self, patterns, objects):
        self.patterns = np.asarray(patterns)
        self.objects = np.asarray(objects)
        if self.patterns.shape != self.objects.shape or self.patterns.ndim != 3:
            raise ValueError("patterns and objects must be matching (N, H, W) stacks")

    def __len__(self):
        return len(self.patterns)

    def batch(self, idx):
        return self.patterns[idx], self.objects[idx]

    def max_object_magnitude(self):
        return float(np.abs(self.objects).max()) if len(self) else 1.0


class CorpusSource:
    """Samples read lazily from a memory-mapped corpus file.

    With ``noise_free_only`` only records with infinite peak counts are used.
    """

    def __init__(self, path, noise_free_only=False):
        self.corpus = open_corpus(path)
        peaks = np.asarray(self.corpus.records["peak"]) if len(self.corpus) else np.zeros(0)
        self.index = np.nonzero(np.isinf(peaks))[0] if noise_free_only else np.arange(len(peaks))
        self.path = self.corpus.path

    def __len__(self):
        return len(self.index)

    def batch(self, idx):
        rec = self.corpus.records[self.index[np.asarray(idx)]]
        return np.asarray(rec["pattern"]), np.asarray(rec["object"])

    def max_object_magnitude(self, chunk=256):
        top = 0.0
        for s in range(0, len(self), chunk):
            _, obj = self.batch(np.arange(s, min(s + chunk, len(self))))
            top = max(top, float(np.abs(obj).max()))
        return top if top > 0 else 1.0


@dataclass
class TrainConfig:
    batch_size: int = 16
    max_epochs: int = 50
    patience: int = 5
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    pattern_weight: float = 1.0
    kappa: float = 1000.0
    arch: Architecture = field(default_factory=Architecture)
    dtype: str = "float32"
    train_path: str = None
    val_path: str = None
    checkpoint_dir: str = None

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.max_epochs < 0:
            raise ValueError("max_epochs must be >= 0")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")


@dataclass
class TrainResult:
    params: object
    log: list
    best_epoch: int
    best_val: float
    stopped_epoch: int
    checkpoint: str = None


def _prepare(source, idx, params):
    patterns, objects = source.batch(idx)
    x = normalize_pattern(patterns, params.kappa).astype(params.dtype)
    cdt = np.complex64 if params.dtype == np.float32 else np.complex128
    y = (np.asarray(objects, dtype=np.complex128) / params.label_scale).astype(cdt)
    return x, y


def evaluate_loss(source, params, mask, batch_size=32, pattern_weight=1.0):
    """Mean loss breakdown over every sample of `source` (no gradients)."""
    n = len(source)
    if n == 0:
        return LossBreakdown(0.0, 0.0, 0.0)
    total = LossBreakdown(0.0, 0.0, 0.0)
    for s in range(0, n, batch_size):
        idx = np.arange(s, min(s + batch_size, n))
        x, y = _prepare(source, idx, params)
        re, im, _ = _forward(x, params)
        b, _ = batch_loss_and_grad(re + 1j * im, y, mask, with_grad=False, pattern_weight=pattern_weight)
        total = total + b.scaled(len(idx))
    return total.scaled(1.0 / n)


def format_log(rows):
    lines = ["# " + "\t".join(LOG_COLUMNS)]
    for r in rows:
        lines.append("\t".join([str(r[0])] + [f"{v:.9e}" for v in r[1:9]] + [f"{r[9]:.3f}"]))
    return "\n".join(lines) + "\n"


def fit_network(train_source, val_source, mask, cfg, params=None, checkpoint_path=None,
                log_path=None, metadata=None, progress_every=200):
    """Train until the validation loss stops improving.

    Training stops once more than ``cfg.patience`` consecutive epochs fail
    to improve the best validation total, or after ``cfg.max_epochs``. The
    returned parameters are those of the best validation epoch (the initial
    parameters when no epoch ran).
    """
    if params is None:
        params = init_params(cfg.arch, seed=cfg.seed, dtype=np.dtype(cfg.dtype), kappa=cfg.kappa,
                             label_scale=train_source.max_object_magnitude())
    meta = dict(metadata or {})
    meta.setdefault("mask_hash", mask_hash(mask) if mask is not None else "")
    state = AdamState.fresh(params.tensors, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps)
    rng = np.random.default_rng(cfg.seed)
    best = params.copy()
    best_val, best_epoch, bad = np.inf, 0, 0
    rows = []
    ckpt_id = None

    def write_best(epoch, val):
        nonlocal ckpt_id
        if checkpoint_path:
            ckpt_id = save_checkpoint(best, checkpoint_path, dict(meta, epoch=epoch, val_loss=val))

    if cfg.max_epochs == 0:
        write_best(0, float("nan"))
    epoch = 0
    for epoch in range(1, cfg.max_epochs + 1):
        t0 = time.perf_counter()
        order = rng.permutation(len(train_source))
        acc = LossBreakdown(0.0, 0.0, 0.0)
        n_batches = 0
        for s in range(0, len(order), cfg.batch_size):
            idx = order[s:s + cfg.batch_size]
            x, y = _prepare(train_source, idx, params)
            try:
                b, grads = network_gradients(x, y, params, mask, cfg.pattern_weight)
                adam_step(params.tensors, grads, state)
            except FloatingPointError as exc:
                raise TrainingAborted(f"epoch {epoch}, batch {n_batches}: {exc}", checkpoint_path) from exc
            acc = acc + b
            n_batches += 1
            if progress_every and n_batches % progress_every == 0:
                log.info("epoch %d batch %d/%d loss %.4e", epoch, n_batches,
                         -(-len(order) // cfg.batch_size), b.total)
        train_b = acc.scaled(1.0 / max(n_batches, 1))
        val_b = evaluate_loss(val_source, params, mask, pattern_weight=cfg.pattern_weight)
        rows.append((epoch, *train_b.as_tuple(), *val_b.as_tuple(), time.perf_counter() - t0))
        log.info("epoch %d train %.4e val %.4e (%.1fs)", epoch, train_b.total, val_b.total, rows[-1][-1])
        if log_path:
            atomic_write(log_path, format_log(rows).encode())
        if val_b.total < best_val:
            best_val, best_epoch, bad = val_b.total, epoch, 0
            best = params.copy()
            write_best(epoch, val_b.total)
        else:
            bad += 1
            if bad > cfg.patience:
                break
    if log_path and not rows:
        atomic_write(log_path, format_log(rows).encode())
    best.meta.update(meta, epoch=best_epoch, val_loss=best_val)
    if ckpt_id:
        best.meta["checkpoint_id"] = ckpt_id
    return TrainResult(best, rows, best_epoch, float(best_val), epoch, checkpoint_path)


def train(cfg, mask):
    """Train from corpus files named in `cfg`; writes ``best.wnet`` and ``train_log.tsv``."""
    train_src = CorpusSource(cfg.train_path)
    val_src = CorpusSource(cfg.val_path, noise_free_only=True)
    if mask_hash(mask) != train_src.corpus.mask_hash:
        raise ValueError("mask does not match the training corpus")
    if train_src.corpus.grid.shape != cfg.arch.input_shape:
        raise ValueError("network input size does not match corpus grid")
    os.makedirs(cfg.checkpoint_dir, exist_ok=True)
    ckpt = os.path.join(cfg.checkpoint_dir, "best.wnet")
    meta = {"corpus_hash": file_sha256(cfg.train_path), "val_corpus_hash": file_sha256(cfg.val_path),
            "grid": list(_grid_tuple(train_src.corpus.grid)), "seed": cfg.seed}
    return fit_network(train_src, val_src, mask, cfg, checkpoint_path=ckpt,
                       log_path=os.path.join(cfg.checkpoint_dir, "train_log.tsv"), metadata=meta)


def _grid_tuple(g):
    return (g.nx, g.ny, g.dx, g.dy, g.wavelength)
