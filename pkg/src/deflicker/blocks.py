"""Network building blocks: phase fusion, frequency feed-forward, attention.

Every forward function takes a flat {name: array-or-Var} parameter mapping and
a name prefix, so the same code runs traced (for training/gradcheck) and
untraced (for plain inference).  The matching init_* functions create the
parameter tensors under the same names.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .tensor_ops import ConvSpec, ShapeError


def expanded_channels(channels: int, gamma: float = 2.66) -> int:
    """Hidden width of one feed-forward branch: ceil(gamma * C)."""
    return int(math.ceil(gamma * channels))


def relative_position_index(m: int) -> np.ndarray:
    """(M^2, M^2) lookup into a (2M-1)^2 relative-offset bias table."""
    coords = np.stack(np.meshgrid(np.arange(m), np.arange(m), indexing="ij"),
                      axis=-1).reshape(-1, 2)
    delta = coords[:, None, :] - coords[None, :, :] + (m - 1)
    return (delta[..., 0] * (2 * m - 1) + delta[..., 1]).astype(np.int64)


def _fan_in_uniform(rng: np.random.Generator, spec: ConvSpec) -> np.ndarray:
    fan_in = spec.kernel * spec.kernel * (spec.in_channels // spec.groups)
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=spec.weight_shape)


def init_conv(rng: np.random.Generator, spec: ConvSpec, zero: bool = False) -> dict:
    w = np.zeros(spec.weight_shape) if zero else _fan_in_uniform(rng, spec)
    out = {"w": w}
    if spec.has_bias:
        out["b"] = np.zeros(spec.out_channels)
    return out


def _with_prefix(prefix: str, d: dict) -> dict:
    return {prefix + k: v for k, v in d.items()}


# ---------------------------------------------------------------------------
# phase-correlation fusion of the three frames
# ---------------------------------------------------------------------------

def pfm_specs(channels: int) -> dict[str, ConvSpec]:
    c = channels
    return {"gate0": ConvSpec.same(3, c, c), "gate2": ConvSpec.same(3, c, c),
            "fuse": ConvSpec.same(3, 3 * c, c)}


def init_pfm(rng: np.random.Generator, channels: int) -> dict:
    params = {}
    for name, spec in pfm_specs(channels).items():
        params.update(_with_prefix(name + ".", init_conv(rng, spec)))
    return params


def pfm_fuse(x0, x1, x2, params, prefix: str, channels: int):
    """Fuse neighbours into the reference frame via phase-agreement gating.

    Each neighbour's spectrum is soft-masked by a learned gate driven by its
    per-bin phase agreement with the reference, the gate symmetrized so the
    filtered frame stays real, then the three frames are merged by a conv.
    """
    specs = pfm_specs(channels)
    p = lambda n: params[prefix + n]

    f1 = ad.fft2(x1)

    def filtered(xt, gate_name):
        ft = ad.fft2(xt)
        sim = ad.scale(ad.add(ad.phase_cosine(ft, f1), 1.0), 0.5)
        gate = ad.sigmoid(ad.conv2d(sim, specs[gate_name], p(gate_name + ".w"),
                                    p(gate_name + ".b")))
        gate = ad.symmetrize_freq(gate)
        return ad.ifft2_real(ad.cmul_real(ft, gate))

    merged = ad.concat([filtered(x0, "gate0"), x1, filtered(x2, "gate2")], axis=2)
    return ad.relu(ad.conv2d(merged, specs["fuse"], p("fuse.w"), p("fuse.b")))


# ---------------------------------------------------------------------------
# autocorrelation feed-forward
# ---------------------------------------------------------------------------

def affn_specs(channels: int, gamma: float = 2.66) -> dict[str, ConvSpec]:
    ce = expanded_channels(channels, gamma)
    return {
        "expand": ConvSpec(1, channels, 2 * ce),
        "dw": ConvSpec.same(3, ce, ce, groups=ce),
        "proj": ConvSpec(1, ce, channels),
    }


def init_affn(rng: np.random.Generator, channels: int, gamma: float = 2.66) -> dict:
    params = {}
    for name, spec in affn_specs(channels, gamma).items():
        params.update(_with_prefix(name + ".", init_conv(rng, spec)))
    # spectral and autocorrelation mixing start switched off
    params["alpha"] = np.zeros(1)
    params["beta"] = np.zeros(1)
    return params


def affn_forward(x, params, prefix: str, channels: int, gamma: float = 2.66):
    """Feed-forward with learned power-spectrum and autocorrelation terms."""
    specs = affn_specs(channels, gamma)
    ce = expanded_channels(channels, gamma)
    p = lambda n: params[prefix + n]

    f = ad.conv2d(x, specs["expand"], p("expand.w"), p("expand.b"))
    y = ad.fft2(f)
    yk = ad.add_real_to_complex(y, ad.mul(p("alpha"), ad.cabs2(y)))
    fl = ad.add(ad.ifft2_real(yk), ad.mul(p("beta"), ad.autocorr(f)))
    f1 = ad.narrow(fl, 2, 0, ce)
    f2 = ad.narrow(fl, 2, ce, ce)
    gated = ad.conv2d(ad.mul(ad.gelu(f1), f2), specs["dw"], p("dw.w"), p("dw.b"))
    return ad.conv2d(gated, specs["proj"], p("proj.w"), p("proj.b"))


# ---------------------------------------------------------------------------
# windowed multi-head attention (shared by encoder and decoder attention)
# ---------------------------------------------------------------------------

def window_attention(q, k, v, heads: int, window: int, bias_table, gate=None):
    """Non-overlapping window attention with relative-position bias.

    q/k/v are (H, W, C) projections; gate, when given, is a (H, W, C) map
    multiplied into v per element.  C must split evenly over heads and both
    spatial sides must be window multiples.
    """
    h, w, c = ad.value_of(q).shape
    if c % heads:
        raise ShapeError(f"channels {c} not divisible by {heads} heads")
    if h % window or w % window:
        raise ShapeError(f"grid {h}x{w} not a multiple of window {window}")
    d = c // heads
    m2 = window * window
    nw = (h // window) * (w // window)

    def split_heads(t):
        t = ad.window_partition(t, window)
        t = ad.reshape(t, (nw, m2, heads, d))
        return ad.transpose(t, (0, 2, 1, 3))

    qh, kh, vh = split_heads(q), split_heads(k), split_heads(v)
    if gate is not None:
        vh = ad.mul(split_heads(gate), vh)
    scores = ad.scale(ad.matmul(qh, ad.transpose(kh, (0, 1, 3, 2))),
                      1.0 / math.sqrt(d))
    bias = ad.transpose(ad.gather_rows(bias_table, relative_position_index(window)),
                        (2, 0, 1))
    attn = ad.softmax_rows(ad.add(scores, bias))
    out = ad.matmul(attn, vh)
    out = ad.reshape(ad.transpose(out, (0, 2, 1, 3)), (nw, m2, c))
    return ad.window_merge(out, h, w)


def _qkv_specs(channels: int) -> dict[str, ConvSpec]:
    c = channels
    return {"q": ConvSpec(1, c, c), "k": ConvSpec(1, c, c),
            "v": ConvSpec(1, c, c), "proj": ConvSpec(1, c, c)}


def init_wmha(rng: np.random.Generator, channels: int, heads: int, window: int) -> dict:
    params = {}
    for name, spec in _qkv_specs(channels).items():
        params.update(_with_prefix(name + ".", init_conv(rng, spec)))
    params["bias_table"] = np.zeros(((2 * window - 1) ** 2, heads))
    return params


def wmha_forward(x, params, prefix: str, channels: int, heads: int, window: int):
    """Plain windowed multi-head self-attention on the full-resolution grid."""
    specs = _qkv_specs(channels)
    p = lambda n: params[prefix + n]
    q = ad.conv2d(x, specs["q"], p("q.w"), p("q.b"))
    k = ad.conv2d(x, specs["k"], p("k.w"), p("k.b"))
    v = ad.conv2d(x, specs["v"], p("v.w"), p("v.b"))
    att = window_attention(q, k, v, heads, window, p("bias_table"))
    return ad.conv2d(att, specs["proj"], p("proj.w"), p("proj.b"))


# ---------------------------------------------------------------------------
# wavelet directional attention
# ---------------------------------------------------------------------------

def wdam_specs(channels: int) -> dict[str, ConvSpec]:
    c = channels
    specs = {"mod": ConvSpec.same(3, 2 * c, c), "high": ConvSpec.same(3, 3 * c, 3 * c)}
    specs.update(_qkv_specs(c))
    return specs


def init_wdam(rng: np.random.Generator, channels: int, heads: int, window: int) -> dict:
    params = {}
    for name, spec in wdam_specs(channels).items():
        params.update(_with_prefix(name + ".", init_conv(rng, spec)))
    params["bias_table"] = np.zeros(((2 * window - 1) ** 2, heads))
    return params


def wdam_forward(x, params, prefix: str, channels: int, heads: int, window: int):
    """Attention on the Haar low band, value-gated by stripe-direction cues.

    The LH/HL detail bands drive a sigmoid modulation map applied to V; the
    three high bands pass through one dense 3x3 conv; the inverse transform
    reassembles the full-resolution feature.
    """
    c = channels
    specs = wdam_specs(c)
    p = lambda n: params[prefix + n]

    s = ad.haar_dwt(x)
    ll = ad.narrow(s, 2, 0, c)
    lh = ad.narrow(s, 2, c, c)
    hl = ad.narrow(s, 2, 2 * c, c)
    hh = ad.narrow(s, 2, 3 * c, c)

    gate = ad.sigmoid(ad.conv2d(ad.concat([lh, hl], axis=2), specs["mod"],
                                p("mod.w"), p("mod.b")))
    q = ad.conv2d(ll, specs["q"], p("q.w"), p("q.b"))
    k = ad.conv2d(ll, specs["k"], p("k.w"), p("k.b"))
    v = ad.conv2d(ll, specs["v"], p("v.w"), p("v.b"))
    att = window_attention(q, k, v, heads, window, p("bias_table"), gate=gate)
    att = ad.conv2d(att, specs["proj"], p("proj.w"), p("proj.b"))

    high = ad.conv2d(ad.concat([lh, hl, hh], axis=2), specs["high"],
                     p("high.w"), p("high.b"))
    return ad.haar_idwt(ad.concat([att, high], axis=2))


# ---------------------------------------------------------------------------
# transformer block
# ---------------------------------------------------------------------------

def init_block(rng: np.random.Generator, channels: int, heads: int, window: int,
               kind: str, gamma: float = 2.66) -> dict:
    if kind not in ("wmha", "wdam"):
        raise ValueError(f"unknown block kind {kind!r}")
    init_attn = init_wmha if kind == "wmha" else init_wdam
    params = {"ln1.g": np.ones(channels), "ln1.b": np.zeros(channels),
              "ln2.g": np.ones(channels), "ln2.b": np.zeros(channels)}
    params.update(_with_prefix("attn.", init_attn(rng, channels, heads, window)))
    params.update(_with_prefix("ffn.", init_affn(rng, channels, gamma)))
    return params


def block_forward(x, params, prefix: str, channels: int, heads: int, window: int,
                  kind: str, gamma: float = 2.66):
    """Pre-norm residual block: attention then feed-forward."""
    p = lambda n: params[prefix + n]
    attn = wmha_forward if kind == "wmha" else wdam_forward
    h1 = ad.layer_norm(x, p("ln1.g"), p("ln1.b"))
    x = ad.add(x, attn(h1, params, prefix + "attn.", channels, heads, window))
    h2 = ad.layer_norm(x, p("ln2.g"), p("ln2.b"))
    return ad.add(x, affn_forward(h2, params, prefix + "ffn.", channels, gamma))


# ---------------------------------------------------------------------------
# attention cost accounting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FlopReport:
    """Exact multiply-accumulate counts for the two attention block kinds.

    Counts are derived from shapes, never measured.  The attention core is
    the QK^T and attention-times-V products; projections are the four 1x1
    convs (q, k, v, out).  The decoder's modulation conv appears twice: the
    per-pixel linear term used in the headline ratio (channel mixing treated
    as a fixed design width) and the exact dense MAC count.
    """

    height: int
    width: int
    channels: int
    heads: int
    window: int
    wmha_attention_core: int
    wmha_projections: int
    wdam_attention_core: int
    wdam_projections: int
    modulation_linear: int
    modulation_exact: int
    wavelet_transforms: int  # one DWT + one IDWT

    @property
    def wmha_total(self) -> int:
        return self.wmha_attention_core + self.wmha_projections

    @property
    def wdam_total(self) -> int:
        return (self.wdam_attention_core + self.wdam_projections
                + self.modulation_exact + self.wavelet_transforms)

    @property
    def core_ratio(self) -> float:
        """Attention-core cost ratio WDAM / W-MHA: exactly 0.25."""
        return self.wdam_attention_core / self.wmha_attention_core

    @property
    def full_ratio(self) -> float:
        """Core + projections + linear modulation term, over the W-MHA core."""
        return (self.wdam_attention_core + self.wdam_projections
                + self.modulation_linear) / self.wmha_total

    def summary(self) -> str:
        return "\n".join([
            f"grid {self.height}x{self.width}, C={self.channels}, "
            f"heads={self.heads}, window={self.window}",
            f"wmha attention core MACs: {self.wmha_attention_core}",
            f"wmha projection MACs:     {self.wmha_projections}",
            f"wmha total MACs:          {self.wmha_total}",
            f"wdam attention core MACs: {self.wdam_attention_core}",
            f"wdam projection MACs:     {self.wdam_projections}",
            f"modulation conv (linear): {self.modulation_linear}",
            f"modulation conv (exact):  {self.modulation_exact}",
            f"wavelet transform MACs:   {self.wavelet_transforms}",
            f"wdam total MACs:          {self.wdam_total}",
            f"attention-core ratio:     {self.core_ratio:.4f}",
            f"full-block ratio:         {self.full_ratio:.4f}",
        ])


def flops_report(height: int, width: int, channels: int, heads: int,
                 window: int) -> FlopReport:
    """Count attention MACs on a (height, width) grid.

    The decoder attention runs every core term on the half-resolution low
    band, so each core count is exactly a quarter of the encoder's.
    """
    if channels % heads:
        raise ShapeError(f"channels {channels} not divisible by {heads} heads")
    if height % (2 * window) or width % (2 * window):
        raise ShapeError(f"grid {height}x{width} must be a multiple of "
                         f"twice the window ({2 * window})")
    hw = height * width
    c = channels
    m2 = window * window
    quarter = hw // 4
    return FlopReport(
        height=height, width=width, channels=c, heads=heads, window=window,
        wmha_attention_core=2 * hw * m2 * c,
        wmha_projections=4 * hw * c * c,
        wdam_attention_core=2 * quarter * m2 * c,
        wdam_projections=4 * quarter * c * c,
        modulation_linear=quarter * 9 * 2 * c,
        modulation_exact=quarter * 9 * 2 * c * c,
        wavelet_transforms=2 * 4 * hw * c,
    )
