"""Dense tensor primitives: convolution, windowing, resampling, activations.

All feature maps are float64 numpy arrays in channel-last H x W x C layout
(no batch axis; callers iterate samples).  Every function here is pure and
leaves its inputs untouched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import erf


class ShapeError(ValueError):
    """Raised when tensor shapes do not satisfy an operation's contract."""


@dataclass(frozen=True)
class ConvSpec:
    """Static description of a 2-D convolution layer.

    Weights follow the (k, k, in_channels // groups, out_channels) layout;
    `padding` is zero-padding on each spatial border.  Stride-1 layers are
    normally built with `padding = k // 2` so spatial size is preserved.
    """

    kernel: int
    in_channels: int
    out_channels: int
    stride: int = 1
    padding: int = 0
    groups: int = 1
    has_bias: bool = True

    def __post_init__(self):
        if self.kernel < 1 or self.stride < 1 or self.padding < 0:
            raise ShapeError(f"invalid conv geometry: {self}")
        if self.in_channels % self.groups or self.out_channels % self.groups:
            raise ShapeError(
                f"channels ({self.in_channels}->{self.out_channels}) not divisible "
                f"by groups={self.groups}"
            )

    @property
    def weight_shape(self):
        return (self.kernel, self.kernel, self.in_channels // self.groups, self.out_channels)

    @staticmethod
    def same(kernel: int, in_channels: int, out_channels: int, groups: int = 1) -> "ConvSpec":
        """Stride-1 spec whose padding preserves spatial size (odd kernels)."""
        return ConvSpec(kernel, in_channels, out_channels, stride=1,
                        padding=kernel // 2, groups=groups)


def _as_f64(x) -> np.ndarray:
    return np.ascontiguousarray(x, dtype=np.float64)


def conv2d(x: np.ndarray, spec: ConvSpec, weights: np.ndarray,
           bias: np.ndarray | None = None) -> np.ndarray:
    """Grouped 2-D cross-correlation of an H x W x Cin map.

    Returns H' x W' x Cout with H' = (H + 2p - k) // stride + 1.
    """
    x = _as_f64(x)
    if x.ndim != 3:
        raise ShapeError(f"conv2d expects H x W x C input, got shape {x.shape}")
    if x.shape[2] != spec.in_channels:
        raise ShapeError(f"input has {x.shape[2]} channels, spec wants {spec.in_channels}")
    if tuple(weights.shape) != spec.weight_shape:
        raise ShapeError(f"weight shape {weights.shape} != expected {spec.weight_shape}")
    if bias is not None and bias.shape != (spec.out_channels,):
        raise ShapeError(f"bias shape {bias.shape} != ({spec.out_channels},)")
    k, s, p, g = spec.kernel, spec.stride, spec.padding, spec.groups
    if x.shape[0] + 2 * p < k or x.shape[1] + 2 * p < k:
        raise ShapeError(f"spatial size {x.shape[:2]} too small for kernel {k} at padding {p}")

    xp = np.pad(x, ((p, p), (p, p), (0, 0))) if p else x
    # (Ho, Wo, C, k, k) patch view, subsampled by the stride.
    win = sliding_window_view(xp, (k, k), axis=(0, 1))[::s, ::s]
    ho, wo = win.shape[:2]
    cin_g = spec.in_channels // g
    cout_g = spec.out_channels // g
    out = np.empty((ho, wo, spec.out_channels))
    for gi in range(g):
        cols = win[:, :, gi * cin_g:(gi + 1) * cin_g]
        cols = cols.transpose(0, 1, 3, 4, 2).reshape(ho * wo, k * k * cin_g)
        wg = weights[:, :, :, gi * cout_g:(gi + 1) * cout_g].reshape(k * k * cin_g, cout_g)
        out[:, :, gi * cout_g:(gi + 1) * cout_g] = (cols @ wg).reshape(ho, wo, cout_g)
    if bias is not None:
        out += bias
    return out


def conv2d_input_grad(gout: np.ndarray, spec: ConvSpec, weights: np.ndarray,
                      in_shape: tuple) -> np.ndarray:
    """Adjoint of conv2d with respect to its input (col2im scatter)."""
    k, s, p, g = spec.kernel, spec.stride, spec.padding, spec.groups
    h, w, _ = in_shape
    ho, wo = gout.shape[:2]
    cin_g = spec.in_channels // g
    cout_g = spec.out_channels // g
    gxp = np.zeros((h + 2 * p, w + 2 * p, spec.in_channels))
    for gi in range(g):
        gg = gout[:, :, gi * cout_g:(gi + 1) * cout_g].reshape(ho * wo, cout_g)
        wg = weights[:, :, :, gi * cout_g:(gi + 1) * cout_g].reshape(k * k * cin_g, cout_g)
        gcols = (gg @ wg.T).reshape(ho, wo, k, k, cin_g)
        sl = slice(gi * cin_g, (gi + 1) * cin_g)
        for di in range(k):
            for dj in range(k):
                gxp[di:di + s * ho:s, dj:dj + s * wo:s, sl] += gcols[:, :, di, dj, :]
    if p:
        return gxp[p:-p, p:-p, :]
    return gxp


def conv2d_weight_grad(gout: np.ndarray, spec: ConvSpec, x: np.ndarray) -> np.ndarray:
    """Adjoint of conv2d with respect to its weights."""
    k, s, p, g = spec.kernel, spec.stride, spec.padding, spec.groups
    xp = np.pad(x, ((p, p), (p, p), (0, 0))) if p else _as_f64(x)
    win = sliding_window_view(xp, (k, k), axis=(0, 1))[::s, ::s]
    ho, wo = win.shape[:2]
    cin_g = spec.in_channels // g
    cout_g = spec.out_channels // g
    gw = np.empty(spec.weight_shape)
    for gi in range(g):
        cols = win[:, :, gi * cin_g:(gi + 1) * cin_g]
        cols = cols.transpose(0, 1, 3, 4, 2).reshape(ho * wo, k * k * cin_g)
        gg = gout[:, :, gi * cout_g:(gi + 1) * cout_g].reshape(ho * wo, cout_g)
        gw[:, :, :, gi * cout_g:(gi + 1) * cout_g] = (cols.T @ gg).reshape(k, k, cin_g, cout_g)
    return gw


def window_partition(x: np.ndarray, m: int) -> np.ndarray:
    """Split H x W x C into non-overlapping m x m windows -> (nWin, m*m, C).

    Windows are ordered row-major over the window grid, and positions inside
    each window are row-major as well.
    """
    x = _as_f64(x)
    h, w, c = x.shape
    if h % m or w % m:
        raise ShapeError(
            f"spatial size {h}x{w} not divisible by window {m}; pad the input first")
    gh, gw = h // m, w // m
    return (x.reshape(gh, m, gw, m, c)
             .transpose(0, 2, 1, 3, 4)
             .reshape(gh * gw, m * m, c))


def window_merge(win: np.ndarray, h: int, w: int) -> np.ndarray:
    """Inverse of window_partition: (nWin, m*m, C) -> H x W x C."""
    win = _as_f64(win)
    nwin, mm, c = win.shape
    m = int(round(mm ** 0.5))
    if m * m != mm or nwin * mm != h * w or h % m or w % m:
        raise ShapeError(f"windows {win.shape} do not tile an {h}x{w} map")
    gh, gw = h // m, w // m
    return (win.reshape(gh, gw, m, m, c)
               .transpose(0, 2, 1, 3, 4)
               .reshape(h, w, c))


def nearest_upsample(x: np.ndarray) -> np.ndarray:
    """2x nearest-neighbor upsampling of an H x W x C map."""
    x = _as_f64(x)
    return np.repeat(np.repeat(x, 2, axis=0), 2, axis=1)


def downsample(x: np.ndarray, spec: ConvSpec, weights: np.ndarray,
               bias: np.ndarray | None = None) -> np.ndarray:
    """Halve spatial size with a 3x3 stride-2 conv."""
    if x.shape[0] % 2 or x.shape[1] % 2:
        raise ShapeError(f"downsample needs even spatial size, got {x.shape[:2]}")
    if spec.kernel != 3 or spec.stride != 2 or spec.padding != 1:
        raise ShapeError(f"downsample wants a 3x3 stride-2 pad-1 spec, got {spec}")
    return conv2d(x, spec, weights, bias)


def upsample(x: np.ndarray, spec: ConvSpec, weights: np.ndarray,
             bias: np.ndarray | None = None) -> np.ndarray:
    """Double spatial size: 2x nearest-neighbor then a 3x3 stride-1 conv."""
    if spec.kernel != 3 or spec.stride != 1 or spec.padding != 1:
        raise ShapeError(f"upsample wants a 3x3 stride-1 same-pad spec, got {spec}")
    return conv2d(nearest_upsample(x), spec, weights, bias)


def reflect_pad(x: np.ndarray, pb: int, pr: int) -> np.ndarray:
    """Reflect-pad the bottom by pb rows and the right by pr columns."""
    if pb == 0 and pr == 0:
        return _as_f64(x)
    if pb >= x.shape[0] or pr >= x.shape[1]:
        raise ShapeError(f"reflect pad ({pb},{pr}) too large for {x.shape[:2]}")
    return np.pad(_as_f64(x), ((0, pb), (0, pr), (0, 0)), mode="reflect")


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(_as_f64(x), 0.0)


def sigmoid(x: np.ndarray) -> np.ndarray:
    x = _as_f64(x)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def gelu(x: np.ndarray) -> np.ndarray:
    """Exact-erf GELU: 0.5 * x * (1 + erf(x / sqrt(2)))."""
    x = _as_f64(x)
    return 0.5 * x * (1.0 + erf(x / np.sqrt(2.0)))


def softmax_rows(x: np.ndarray) -> np.ndarray:
    """Softmax along the last axis; rows sum to 1."""
    x = _as_f64(x)
    z = x - x.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def layer_norm(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray,
               eps: float = 1e-6) -> np.ndarray:
    """Per-position normalization over the channel (last) axis."""
    x = _as_f64(x)
    mu = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    return (x - mu) / np.sqrt(var + eps) * gamma + beta
