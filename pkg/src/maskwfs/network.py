"""Convolutional encoder with two transposed-convolution decoder branches.

The encoder halves the spatial size four times; each decoder branch doubles
it back and emits one real map, so the two branches together give the
real and imaginary parts of the retrieved object.

Public conv helpers take ``(batch, channels, height, width)`` arrays; the
network itself runs channels-last so every layer is one matrix product.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .loss import batch_loss_and_grad
from .optics import ComplexField, Grid

__all__ = [
    "LayerSpec",
    "Architecture",
    "NetworkParams",
    "init_params",
    "conv_forward",
    "deconv_forward",
    "normalize_pattern",
    "network_forward",
    "network_gradients",
    "infer",
]

BRANCHES = ("enc", "real", "imag")


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    in_channels: int
    out_channels: int
    kernel: int
    activation: str
    stride: int = 2

    def __post_init__(self):
        if self.kind not in ("conv_stride2", "deconv_stride2"):
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.kernel < 1 or self.kernel % 2 == 0:
            raise ValueError("kernel size must be odd")
        if self.activation not in ("relu", "linear"):
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.stride != 2:
            raise ValueError("layers use stride 2")

    def weight_shape(self):
        # deconv weights are stored as the conv they are the adjoint of: (in, out, k, k)
        return (self.out_channels, self.in_channels, self.kernel, self.kernel) if self.kind == "conv_stride2" \
            else (self.in_channels, self.out_channels, self.kernel, self.kernel)


@dataclass(frozen=True)
class Architecture:
    """Layer sizes. ``encoder`` lists channel counts from the input upward."""

    encoder: tuple = (1, 16, 32, 64, 128)
    kernel: int = 5
    input_shape: tuple = (128, 128)

    def __post_init__(self):
        object.__setattr__(self, "encoder", tuple(int(c) for c in self.encoder))
        object.__setattr__(self, "input_shape", tuple(int(s) for s in self.input_shape))
        if self.encoder[0] != 1 or len(self.encoder) < 2:
            raise ValueError("encoder must start from one input channel")
        factor = 2 ** (len(self.encoder) - 1)
        if any(s % factor for s in self.input_shape):
            raise ValueError(f"input size {self.input_shape} not divisible by {factor}")

    @property
    def decoder(self):
        return self.encoder[::-1]

    def layers(self):
        ch = self.encoder
        n = len(ch) - 1
        out = {"enc": [LayerSpec("conv_stride2", ch[i], ch[i + 1], self.kernel, "relu") for i in range(n)]}
        dec = self.decoder
        for b in ("real", "imag"):
            out[b] = [LayerSpec("deconv_stride2", dec[i], dec[i + 1], self.kernel,
                                "linear" if i == n - 1 else "relu") for i in range(n)]
        return out

    def param_shapes(self):
        shapes = {}
        for branch, specs in self.layers().items():
            for i, s in enumerate(specs):
                shapes[f"{branch}{i}.weight"] = s.weight_shape()
                shapes[f"{branch}{i}.bias"] = (s.out_channels,)
        return shapes

    def descriptor(self):
        enc = "-".join(map(str, self.encoder))
        dec = "-".join(map(str, self.decoder))
        return (f"maskwfs-net/1;enc={enc};dec={dec};kernel={self.kernel};stride=2;"
                f"hidden=relu;out=linear;branches=real,imag;input={self.input_shape[0]}x{self.input_shape[1]}")

    @classmethod
    def from_descriptor(cls, text):
        parts = dict(p.split("=", 1) for p in text.split(";")[1:])
        h, w = parts["input"].split("x")
        return cls(tuple(int(c) for c in parts["enc"].split("-")), int(parts["kernel"]), (int(h), int(w)))


@dataclass(eq=False)
class NetworkParams:
    """Named kernels and biases in declaration order, plus normalization constants.

    `label_scale` divides ground-truth objects before they are compared to
    the network outputs; `kappa` sets the log compression of the input.
    """

    arch: Architecture
    tensors: dict
    kappa: float = 1000.0
    label_scale: float = 1.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        shapes = self.arch.param_shapes()
        if list(self.tensors) != list(shapes):
            raise ValueError("parameter names/order do not match the architecture")
        for k, s in shapes.items():
            if self.tensors[k].shape != s:
                raise ValueError(f"{k}: shape {self.tensors[k].shape} != {s}")
            if not np.all(np.isfinite(self.tensors[k])):
                raise ValueError(f"{k}: non-finite values")

    @property
    def dtype(self):
        return next(iter(self.tensors.values())).dtype

    @property
    def n_params(self):
        return int(sum(t.size for t in self.tensors.values()))

    def copy(self, dtype=None):
        dtype = self.dtype if dtype is None else dtype
        return NetworkParams(self.arch, {k: np.array(v, dtype=dtype) for k, v in self.tensors.items()},
                             self.kappa, self.label_scale, dict(self.meta))

    def zeros_like(self):
        return {k: np.zeros_like(v) for k, v in self.tensors.items()}


def init_params(arch=None, seed=0, dtype=np.float32, kappa=1000.0, label_scale=1.0):
    """He-normal kernels (fan-in scaled), zero biases; final layers use unit gain."""
    arch = Architecture() if arch is None else arch
    rng = np.random.default_rng(seed)
    tensors = {}
    for branch, specs in arch.layers().items():
        for i, s in enumerate(specs):
            fan_in = s.in_channels * s.kernel ** 2
            if s.kind == "deconv_stride2":
                fan_in /= s.stride ** 2
            gain = 2.0 if s.activation == "relu" else 1.0
            w = rng.standard_normal(s.weight_shape()) * np.sqrt(gain / fan_in)
            tensors[f"{branch}{i}.weight"] = w.astype(dtype)
            tensors[f"{branch}{i}.bias"] = np.zeros(s.out_channels, dtype=dtype)
    return NetworkParams(arch, tensors, kappa, label_scale)


# ----------------------------------------------------------------------------
# channels-last primitives

def _out_size(n, k, s, p):
    return (n + 2 * p - k) // s + 1


def _im2col(x, k, s, p, ho, wo):
    """(B, H, W, C) -> (B*ho*wo, k*k*C) patches ordered (ki, kj, c)."""
    xp = np.pad(x, ((0, 0), (p, p), (p, p), (0, 0))) if p else x
    win = sliding_window_view(xp, (k, k), axis=(1, 2))[:, : s * (ho - 1) + 1: s, : s * (wo - 1) + 1: s]
    # win: (B, ho, wo, C, k, k)
    B, C = x.shape[0], x.shape[3]
    return np.ascontiguousarray(win.transpose(0, 1, 2, 4, 5, 3)).reshape(B * ho * wo, k * k * C)


def _col2im(cols, shape, k, s, p, ho, wo):
    """Adjoint of :func:`_im2col`: scatter-add patches into a (B, H, W, C) array."""
    B, H, W, C = shape
    xp = np.zeros((B, H + 2 * p, W + 2 * p, C), dtype=cols.dtype)
    c = cols.reshape(B, ho, wo, k, k, C)
    for i in range(k):
        for j in range(k):
            xp[:, i: i + s * (ho - 1) + 1: s, j: j + s * (wo - 1) + 1: s, :] += c[:, :, :, i, j, :]
    return xp[:, p: p + H, p: p + W, :]


def _wmat(w):
    # conv-layout weight (out, in, k, k) -> (out, k*k*in) matching _im2col order
    return w.transpose(0, 2, 3, 1).reshape(w.shape[0], -1)


def _conv(x, w, b, s, p):
    k = w.shape[-1]
    B, H, W, _ = x.shape
    ho, wo = _out_size(H, k, s, p), _out_size(W, k, s, p)
    cols = _im2col(x, k, s, p, ho, wo)
    y = cols @ _wmat(w).T
    if b is not None:
        y += b
    return y.reshape(B, ho, wo, w.shape[0]), cols


def _conv_back(dy, cols, w, xshape, s, p, need_dx=True):
    k = w.shape[-1]
    B, ho, wo, co = dy.shape
    d = dy.reshape(-1, co)
    dw = (d.T @ cols).reshape(co, k, k, -1).transpose(0, 3, 1, 2)
    db = d.sum(axis=0)
    dx = _col2im(d @ _wmat(w), xshape, k, s, p, ho, wo) if need_dx else None
    return dx, dw, db


def _deconv(x, w, b, s, p):
    """Transposed conv; `w` has shape (in, out, k, k) as the adjoint conv's weight."""
    k = w.shape[-1]
    B, H, W, ci = x.shape
    co = w.shape[1]
    out_shape = (B, s * H, s * W, co)
    cols = x.reshape(-1, ci) @ _wmat(w)
    y = _col2im(cols, out_shape, k, s, p, H, W)
    if b is not None:
        y = y + b
    return y


def _deconv_back(dy, x, w, s, p, need_dx=True):
    k = w.shape[-1]
    B, H, W, ci = x.shape
    dcols = _im2col(dy, k, s, p, H, W)
    wm = _wmat(w)
    dw = (x.reshape(-1, ci).T @ dcols).reshape(ci, k, k, -1).transpose(0, 3, 1, 2)
    db = dy.sum(axis=(0, 1, 2))
    dx = (dcols @ wm.T).reshape(x.shape) if need_dx else None
    return dx, dw, db


def _check_nchw(x, w, name):
    if x.ndim != 4:
        raise ValueError(f"{name}: expected a 4D (batch, channels, h, w) input")
    if w.ndim != 4 or w.shape[2] != w.shape[3] or w.shape[2] % 2 == 0:
        raise ValueError(f"{name}: kernel must be (a, b, k, k) with odd k")


def conv_forward(x, kernel, bias, stride=2, pad=None):
    """Strided cross-correlation with zero padding.

    Parameters
    ----------
    x : ndarray, shape (B, C_in, H, W)
    kernel : ndarray, shape (C_out, C_in, k, k)
    bias : ndarray, shape (C_out,)
    pad : int, optional
        Defaults to ``(k - 1) // 2`` so the output size is ``H / stride``.
    """
    _check_nchw(x, kernel, "conv_forward")
    if x.shape[1] != kernel.shape[1]:
        raise ValueError(f"conv_forward: input has {x.shape[1]} channels, kernel expects {kernel.shape[1]}")
    p = (kernel.shape[-1] - 1) // 2 if pad is None else pad
    y, _ = _conv(np.moveaxis(x, 1, -1), kernel, bias, stride, p)
    return np.moveaxis(y, -1, 1)


def deconv_forward(x, kernel, bias, stride=2, pad=None):
    """Transposed convolution, the adjoint of :func:`conv_forward` (up to bias).

    `kernel` has shape (C_in, C_out, k, k); the output is ``stride`` times
    larger in each spatial dimension.
    """
    _check_nchw(x, kernel, "deconv_forward")
    if x.shape[1] != kernel.shape[0]:
        raise ValueError(f"deconv_forward: input has {x.shape[1]} channels, kernel expects {kernel.shape[0]}")
    p = (kernel.shape[-1] - 1) // 2 if pad is None else pad
    k = kernel.shape[-1]
    if _out_size(stride * x.shape[2], k, stride, p) != x.shape[2]:
        raise ValueError("deconv_forward: padding incompatible with exact upsampling")
    y = _deconv(np.moveaxis(x, 1, -1), kernel, bias, stride, p)
    return np.moveaxis(y, -1, 1)


# ----------------------------------------------------------------------------
# network

def normalize_pattern(pattern, kappa=1000.0):
    """Scale to unit maximum, then ``log(1 + kappa x) / log(1 + kappa)``.

    Works on a single map or a stack (normalizing each map separately).
    """
    p = np.asarray(pattern, dtype=np.float64)
    top = p.reshape(-1, p.shape[-2] * p.shape[-1]).max(axis=1).reshape(p.shape[:-2] + (1, 1))
    x = np.divide(p, top, out=np.zeros_like(p), where=top > 0)
    return np.log1p(kappa * x) / np.log1p(kappa)


def _forward(x, params, keep=False):
    """x: (B, H, W) normalized patterns. Returns (real, imag) maps and caches."""
    t = params.tensors
    arch = params.arch
    specs = arch.layers()
    a = x[..., None].astype(params.dtype, copy=False)
    cache = {"enc": [], "real": [], "imag": []}
    for i, s in enumerate(specs["enc"]):
        y, cols = _conv(a, t[f"enc{i}.weight"], t[f"enc{i}.bias"], 2, (s.kernel - 1) // 2)
        out = np.maximum(y, 0)
        _check_finite(out, f"enc{i}")
        if keep:
            cache["enc"].append((cols, a.shape, out))
        a = out
    code = a
    outs = []
    for branch in ("real", "imag"):
        a = code
        for i, s in enumerate(specs[branch]):
            y = _deconv(a, t[f"{branch}{i}.weight"], t[f"{branch}{i}.bias"], 2, (s.kernel - 1) // 2)
            relu = s.activation == "relu"
            out = np.maximum(y, 0) if relu else y
            _check_finite(out, f"{branch}{i}")
            if keep:
                # relu outputs double as the backward gate; linear layers need none
                cache[branch].append((a, out if relu else None))
            a = out
        outs.append(a[..., 0])
    return outs[0], outs[1], cache


def _check_finite(a, layer):
    if not np.all(np.isfinite(a)):
        raise FloatingPointError(f"non-finite activations in layer {layer}")


def network_forward(pattern, params):
    """Run the network on normalized pattern(s).

    Accepts a single ``(H, W)`` map or a ``(B, H, W)`` stack; returns the
    real and imaginary output maps with the same leading shape.
    """
    x = np.asarray(pattern)
    single = x.ndim == 2
    if single:
        x = x[None]
    if x.shape[-2:] != params.arch.input_shape:
        raise ValueError(f"pattern shape {x.shape[-2:]} does not match network input {params.arch.input_shape}")
    re, im, _ = _forward(x, params)
    return (re[0], im[0]) if single else (re, im)


def _backward(params, cache, d_re, d_im):
    t = params.tensors
    specs = params.arch.layers()
    grads = {}
    d_code = None
    for branch, g in (("real", d_re), ("imag", d_im)):
        g = g[..., None].astype(params.dtype, copy=False)
        for i in reversed(range(len(specs[branch]))):
            a_in, a_out = cache[branch][i]
            if a_out is not None:
                g = g * (a_out > 0)
            dx, dw, db = _deconv_back(g, a_in, t[f"{branch}{i}.weight"], 2, (specs[branch][i].kernel - 1) // 2)
            grads[f"{branch}{i}.weight"], grads[f"{branch}{i}.bias"] = dw, db
            g = dx
        d_code = g if d_code is None else d_code + g
    g = d_code
    for i in reversed(range(len(specs["enc"]))):
        cols, xshape, a_out = cache["enc"][i]
        g = g * (a_out > 0)
        dx, dw, db = _conv_back(g, cols, t[f"enc{i}.weight"], xshape, 2,
                                (specs["enc"][i].kernel - 1) // 2, need_dx=i > 0)
        grads[f"enc{i}.weight"], grads[f"enc{i}.bias"] = dw, db
        g = dx
    return {k: grads[k] for k in t}


def network_gradients(inputs, targets, params, mask=None, pattern_weight=1.0):
    """Batch-mean loss and exact gradients for every parameter tensor.

    Parameters
    ----------
    inputs : ndarray, (B, H, W)
        Normalized diffraction patterns.
    targets : ndarray, complex, (B, H, W)
        Ground-truth objects already divided by ``params.label_scale``.
    mask : MaskModel or None
        Mask used for the re-simulated pattern term; ``None`` drops it.

    Returns
    -------
    (LossBreakdown, dict)
    """
    inputs = np.asarray(inputs)
    if inputs.ndim != 3 or len(inputs) == 0:
        raise ValueError("inputs must be a non-empty (B, H, W) stack")
    re, im, cache = _forward(inputs, params, keep=True)
    U = re + 1j * im
    breakdown, gU = batch_loss_and_grad(U, np.asarray(targets).astype(U.dtype, copy=False), mask,
                                        pattern_weight=pattern_weight)
    grads = _backward(params, cache, gU.real, gU.imag)
    return breakdown, grads


def infer(pattern, params, grid=None, canonicalize=True):
    """Single forward pass on a raw pattern; returns a RetrievalResult.

    The output object is rescaled by ``params.label_scale`` and, by default,
    canonicalized so its center pixel has zero phase.
    """
    from .dataset import canonicalize_phase
    from .results import RetrievalResult

    t0 = time.perf_counter()
    x = normalize_pattern(pattern, params.kappa)
    re, im = network_forward(x, params)
    obj = (re.astype(np.float64) + 1j * im.astype(np.float64)) * params.label_scale
    if grid is None:
        grid = Grid(obj.shape[1], obj.shape[0], 1.0, 1.0, 1.0)
    f = ComplexField(grid, obj)
    if canonicalize:
        f = canonicalize_phase(f)
    dt = time.perf_counter() - t0
    return RetrievalResult(f, method="neural", wall_time_s=dt,
                           checkpoint_id=params.meta.get("checkpoint_id"))
