"""Range-Doppler denoising CNN in plain numpy.

The network is a stack of same-padded 3x3 convolutions.  Layer 1 is
conv + ReLU, the middle layers are conv + batch norm + ReLU and the last
layer is a linear conv with two kernels (real and imaginary part).

Tensors at the API are ``(batch, channel, N, M)``; internally activations
are kept channels-last so every convolution is a single matrix product
over an im2col buffer.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .radar_sim import ConfigError


class NumericError(RuntimeError):
    """Training produced a non-finite loss."""


@dataclass(frozen=True)
class ArchitectureSpec:
    kernel_counts: tuple[int, ...]
    kernel_size: tuple[int, int] = (3, 3)
    input_channels: int = 2

    def __post_init__(self):
        object.__setattr__(self, "kernel_counts", tuple(int(k) for k in self.kernel_counts))
        ks = self.kernel_counts
        if len(ks) < 2:
            raise ConfigError("an architecture needs at least two layers")
        if ks[-1] != 2:
            raise ConfigError("the last layer must have two kernels")
        if any(k < 1 or k & (k - 1) for k in ks):
            raise ConfigError(f"kernel counts must be powers of two: {ks}")
        if any(b > a for a, b in zip(ks[1:], ks[2:])):
            raise ConfigError(f"kernel counts must not increase after layer 1: {ks}")
        kh, kw = self.kernel_size
        if kh % 2 == 0 or kw % 2 == 0:
            raise ConfigError("kernel sizes must be odd for same padding")

    @classmethod
    def parse(cls, text: str) -> "ArchitectureSpec":
        return cls(tuple(int(t) for t in text.replace(" ", "").strip("[]").split(",") if t))

    @property
    def n_layers(self) -> int:
        return len(self.kernel_counts)

    def has_bn(self, layer: int) -> bool:
        return 0 < layer < self.n_layers - 1

    def channels(self) -> list[tuple[int, int]]:
        ins = (self.input_channels,) + self.kernel_counts[:-1]
        return list(zip(ins, self.kernel_counts))

    def __str__(self):
        return "[" + ",".join(map(str, self.kernel_counts)) + "]"


def param_count(arch: ArchitectureSpec | Sequence[int]) -> int:
    """Trainable parameters: conv weights and biases plus BN scale and shift."""
    if not isinstance(arch, ArchitectureSpec):
        arch = ArchitectureSpec(tuple(arch))
    kh, kw = arch.kernel_size
    total = 0
    for i, (cin, cout) in enumerate(arch.channels()):
        total += cin * cout * kh * kw + cout
        if arch.has_bn(i):
            total += 2 * cout
    return total


@dataclass
class LayerParams:
    weight: np.ndarray
    bias: np.ndarray
    bn_gamma: np.ndarray | None = None
    bn_beta: np.ndarray | None = None
    bn_running_mean: np.ndarray | None = None
    bn_running_var: np.ndarray | None = None

    def trainable(self) -> list[np.ndarray]:
        out = [self.weight, self.bias]
        if self.bn_gamma is not None:
            out += [self.bn_gamma, self.bn_beta]
        return out

    def arrays(self) -> list[np.ndarray]:
        """Every stored array in checkpoint order."""
        out = [self.weight, self.bias]
        if self.bn_gamma is not None:
            out += [self.bn_gamma, self.bn_beta, self.bn_running_mean, self.bn_running_var]
        return out


@dataclass
class ModelState:
    arch: ArchitectureSpec
    layers: list[LayerParams]
    mode: str = "eval"
    bn_momentum: float = 0.1
    bn_eps: float = 1e-5
    cache: list | None = field(default=None, repr=False)

    @property
    def dtype(self):
        return self.layers[0].weight.dtype

    def params(self) -> list[np.ndarray]:
        return [p for layer in self.layers for p in layer.trainable()]

    def copy(self) -> "ModelState":
        new = copy.deepcopy(self)
        new.cache = None
        return new

    def astype(self, dtype) -> "ModelState":
        new = self.copy()
        for layer in new.layers:
            for name in ("weight", "bias", "bn_gamma", "bn_beta", "bn_running_mean", "bn_running_var"):
                a = getattr(layer, name)
                if a is not None:
                    setattr(layer, name, a.astype(dtype))
        return new


def init_model(arch: ArchitectureSpec, seed: int = 0, dtype=np.float32) -> ModelState:
    """He-uniform conv weights, zero biases, BN gamma 1 / beta 0."""
    rng = np.random.default_rng(seed)
    kh, kw = arch.kernel_size
    layers = []
    for i, (cin, cout) in enumerate(arch.channels()):
        limit = np.sqrt(6.0 / (cin * kh * kw))
        w = rng.uniform(-limit, limit, size=(cout, cin, kh, kw)).astype(dtype)
        layer = LayerParams(w, np.zeros(cout, dtype))
        if arch.has_bn(i):
            layer.bn_gamma = np.ones(cout, dtype)
            layer.bn_beta = np.zeros(cout, dtype)
            layer.bn_running_mean = np.zeros(cout, dtype)
            layer.bn_running_var = np.ones(cout, dtype)
        layers.append(layer)
    return ModelState(arch, layers)


def _im2col(x: np.ndarray, kh: int, kw: int) -> np.ndarray:
    """``(B, H, W, C)`` -> ``(B*H*W, C*kh*kw)`` with zero padding."""
    B, H, W, C = x.shape
    ph, pw = kh // 2, kw // 2
    xp = np.pad(x, ((0, 0), (ph, ph), (pw, pw), (0, 0)))
    win = sliding_window_view(xp, (kh, kw), axis=(1, 2))  # B, H, W, C, kh, kw
    return win.reshape(B * H * W, C * kh * kw)


def _col2im(dcols: np.ndarray, shape, kh: int, kw: int) -> np.ndarray:
    B, H, W, C = shape
    ph, pw = kh // 2, kw // 2
    d = dcols.reshape(B, H, W, C, kh, kw)
    dxp = np.zeros((B, H + 2 * ph, W + 2 * pw, C), dtype=dcols.dtype)
    for i in range(kh):
        for j in range(kw):
            dxp[:, i : i + H, j : j + W, :] += d[..., i, j]
    return dxp[:, ph : ph + H, pw : pw + W, :]


def _channel_sum(a: np.ndarray) -> np.ndarray:
    """Sum over every axis but the last; a BLAS product beats ``sum(axis=0)`` on narrow arrays."""
    a2 = a.reshape(-1, a.shape[-1])
    return np.ones(a2.shape[0], dtype=a.dtype) @ a2


def conv2d(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Same-padded 2-D cross-correlation on ``(B, C, H, W)`` input."""
    B, C, H, W = x.shape
    O, _, kh, kw = weight.shape
    cols = _im2col(np.moveaxis(x, 1, -1), kh, kw)
    y = cols @ weight.reshape(O, -1).T + bias
    return np.moveaxis(y.reshape(B, H, W, O), -1, 1)


def _check_input(model: ModelState, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    if x.ndim == 3:
        x = x[None]
    if x.ndim != 4 or x.shape[1] != model.arch.input_channels:
        raise ValueError(
            f"expected (batch, {model.arch.input_channels}, N, M) input, got {x.shape}"
        )
    return x


def forward(model: ModelState, x: np.ndarray, mode: str | None = None) -> np.ndarray:
    """Run the network; train mode caches activations for :func:`backward`.

    A 3-D input is treated as a batch of one and returned without the batch
    axis.
    """
    mode = mode or model.mode
    if mode not in ("train", "eval"):
        raise ValueError(f"unknown mode {mode!r}")
    squeeze = np.ndim(x) == 3
    x = _check_input(model, x)
    arch = model.arch
    train = mode == "train"
    if train and x.shape[0] < 2 and any(arch.has_bn(i) for i in range(arch.n_layers)):
        raise ValueError("batch norm in train mode needs a batch of at least 2")

    kh, kw = arch.kernel_size
    h = np.moveaxis(x.astype(model.dtype, copy=False), 1, -1)
    cache = []
    last = arch.n_layers - 1
    for i, layer in enumerate(model.layers):
        B, H, W, C = h.shape
        O = layer.weight.shape[0]
        cols = _im2col(h, kh, kw)
        z = (cols @ layer.weight.reshape(O, -1).T + layer.bias).reshape(B, H, W, O)
        entry = {"cols": cols, "in_shape": h.shape}
        if arch.has_bn(i):
            if train:
                n = z.size // O
                mu = _channel_sum(z) / n
                var = _channel_sum((z - mu) ** 2) / n
                mom = model.bn_momentum
                layer.bn_running_mean[...] = (1 - mom) * layer.bn_running_mean + mom * mu
                layer.bn_running_var[...] = (1 - mom) * layer.bn_running_var + mom * var * n / max(n - 1, 1)
            else:
                mu, var = layer.bn_running_mean, layer.bn_running_var
            inv_std = 1.0 / np.sqrt(var + model.bn_eps)
            xhat = (z - mu) * inv_std
            z = layer.bn_gamma * xhat + layer.bn_beta
            entry.update(xhat=xhat, inv_std=inv_std)
        if i < last:
            entry["active"] = z > 0
            z = np.maximum(z, 0)
        cache.append(entry)
        h = z
    model.cache = cache if train else None
    out = np.moveaxis(h, -1, 1)
    return out[0] if squeeze else out


def backward(model: ModelState, grad_out: np.ndarray, x: np.ndarray | None = None):
    """Gradients of a scalar loss given ``d loss / d output``.

    Returns ``(param_grads, input_grad)`` where ``param_grads`` follows
    :meth:`ModelState.params` order.  Requires a preceding train-mode
    :func:`forward` on the same batch.
    """
    if model.cache is None:
        raise RuntimeError("backward needs a train-mode forward pass first")
    g = np.asarray(grad_out)
    if g.ndim == 3:
        g = g[None]
    g = np.moveaxis(g.astype(model.dtype, copy=False), 1, -1)
    B, H, W, C = model.cache[0]["in_shape"]
    if x is not None and np.shape(x)[-3:] != (C, H, W):
        raise ValueError("input does not match the cached forward pass")
    if g.shape[:3] != (B, H, W):
        raise ValueError(f"grad_out shape {g.shape} does not match the cached forward pass")
    kh, kw = model.arch.kernel_size
    grads: list[list[np.ndarray]] = []
    for i in reversed(range(model.arch.n_layers)):
        layer = model.layers[i]
        entry = model.cache[i]
        if "active" in entry:
            g = g * entry["active"]
        layer_grads = []
        if "xhat" in entry:
            xhat, inv_std = entry["xhat"], entry["inv_std"]
            dgamma = _channel_sum(g * xhat)
            dbeta = _channel_sum(g)
            n = g.size // g.shape[-1]
            dxhat = g * layer.bn_gamma
            g = inv_std / n * (n * dxhat - _channel_sum(dxhat) - xhat * _channel_sum(dxhat * xhat))
            layer_grads = [dgamma, dbeta]
        O = layer.weight.shape[0]
        g2 = g.reshape(-1, O)
        dw = (g2.T @ entry["cols"]).reshape(layer.weight.shape)
        db = _channel_sum(g2)
        grads.append([dw, db] + layer_grads)
        dcols = g2 @ layer.weight.reshape(O, -1)
        g = _col2im(dcols, entry["in_shape"], kh, kw)
    param_grads = [p for layer_grads in reversed(grads) for p in layer_grads]
    return param_grads, np.moveaxis(g, -1, 1)


def mse_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error and its gradient with respect to ``pred``."""
    pred = np.asarray(pred)
    target = np.asarray(target)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {target.shape}")
    diff = pred - target
    return float(np.mean(diff.astype(np.float64) ** 2)), 2.0 * diff / diff.size


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list[np.ndarray] | None = None
    v: list[np.ndarray] | None = None

    def __post_init__(self):
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ConfigError("Adam betas must lie in [0, 1)")


def adam_step(state: AdamState, params: list[np.ndarray], grads: list[np.ndarray]) -> list[np.ndarray]:
    """In-place bias-corrected Adam update; returns ``params``."""
    if len(params) != len(grads):
        raise ValueError("parameter and gradient lists differ in length")
    if state.m is None:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1 - b1**state.t
    c2 = 1 - b2**state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape or p.shape != m.shape:
            raise ValueError(f"shape mismatch {p.shape} vs {g.shape}")
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        p -= (state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)).astype(p.dtype)
    return params
