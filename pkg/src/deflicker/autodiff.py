"""Tape-based reverse-mode differentiation over the package's primitives.

Every op here dispatches on its arguments: called with plain numpy arrays it
just computes the forward value, called with at least one `Var` it records a
node on that Var's tape and returns a traced `Var` whose forward value is
bit-identical to the untraced result.  Model code is therefore written once
and runs traced or untraced.

Complex arrays ride the tape as real pairs: for a real-valued loss the
gradient of a complex node is stored as dL/dRe + i * dL/dIm, which turns
Wirtinger bookkeeping into plain calculus on the two real components.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from . import tensor_ops
from .tensor_ops import ConvSpec, ShapeError

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


class TapeError(RuntimeError):
    """Tape misuse: cross-tape mixing, non-scalar loss, detached graph."""


#: Every differentiable primitive, flagged linear (True) when its backward
#: rule is an adjoint that must satisfy the dot-product test.
OP_CATALOG = {
    "add": True,
    "sub": True,
    "neg": True,
    "mul": False,
    "scale": True,
    "abs": False,
    "relu": False,
    "sigmoid": False,
    "gelu": False,
    "softmax_rows": False,
    "layer_norm": False,
    "sum": True,
    "mean": True,
    "reshape": True,
    "transpose": True,
    "concat": True,
    "narrow": True,
    "matmul": False,
    "conv2d": True,
    "window_partition": True,
    "window_merge": True,
    "nearest_upsample": True,
    "reflect_pad": True,
    "crop": True,
    "gather_rows": True,
    "haar_dwt": True,
    "haar_idwt": True,
    "fft2": True,
    "ifft2_real": True,
    "to_complex": True,
    "cadd": True,
    "cmul": False,
    "cmul_real": False,
    "cabs2": False,
    "add_real_to_complex": True,
    "symmetrize_freq": True,
    "phase_cosine": False,
}


class Tape:
    """Ordered record of primitive applications; ids are topological."""

    def __init__(self):
        self._ops: list[str] = []
        self._parents: list[tuple[int, ...]] = []
        self._values: list[np.ndarray] = []
        self._backwards: list = []

    def __len__(self):
        return len(self._ops)

    def leaf(self, value) -> "Var":
        """Register an input/parameter array as a differentiable leaf."""
        return self._record("leaf", (), np.asarray(value), None)

    def _record(self, op, parents, value, backward) -> "Var":
        self._ops.append(op)
        self._parents.append(parents)
        self._values.append(value)
        self._backwards.append(backward)
        return Var(self, len(self._ops) - 1)

    def value(self, idx: int) -> np.ndarray:
        return self._values[idx]

    def backward(self, out: "Var", seed: np.ndarray | None = None) -> list:
        """Reverse accumulation from `out`; returns grads indexed by node id.

        With seed=None, `out` must be scalar and is seeded with 1 (the usual
        loss case).  A seed array of out's shape computes a general
        vector-Jacobian product.
        """
        if out.tape is not self:
            raise TapeError("output does not belong to this tape")
        ov = self._values[out.idx]
        if seed is None:
            if np.size(ov) != 1:
                raise TapeError(f"loss must be scalar, got shape {np.shape(ov)}")
            seed = np.ones_like(ov)
        else:
            seed = np.asarray(seed)
            if seed.shape != np.shape(ov):
                raise TapeError(f"seed shape {seed.shape} != output shape {np.shape(ov)}")
        grads: list = [None] * len(self._ops)
        grads[out.idx] = seed
        for i in range(out.idx, -1, -1):
            g = grads[i]
            if g is None or self._backwards[i] is None:
                continue
            for pid, pg in zip(self._parents[i], self._backwards[i](g)):
                if pid < 0 or pg is None:
                    continue
                if grads[pid] is None:
                    grads[pid] = pg
                else:
                    grads[pid] = grads[pid] + pg
        return grads


@dataclass(frozen=True)
class Var:
    """Handle to one tape node."""

    tape: Tape
    idx: int

    @property
    def value(self) -> np.ndarray:
        return self.tape.value(self.idx)

    @property
    def shape(self):
        return np.shape(self.value)

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)


def value_of(x) -> np.ndarray:
    """Forward value of a Var, or the array itself."""
    return x.value if isinstance(x, Var) else np.asarray(x)


def _tape_of(*args) -> Tape | None:
    tape = None
    for a in args:
        if isinstance(a, Var):
            if tape is None:
                tape = a.tape
            elif tape is not a.tape:
                raise TapeError("cannot mix values from different tapes")
    return tape


def _pid(x) -> int:
    return x.idx if isinstance(x, Var) else -1


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Reduce a broadcasted gradient back to `shape`."""
    shape = tuple(shape)
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, s in enumerate(shape):
        if s == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g.reshape(shape)


# ---------------------------------------------------------------------------
# real elementwise / reduction ops
# ---------------------------------------------------------------------------

def add(x, y):
    xv, yv = value_of(x), value_of(y)
    out = xv + yv
    tape = _tape_of(x, y)
    if tape is None:
        return out
    xs, ys = np.shape(xv), np.shape(yv)
    bwd = lambda g: (_unbroadcast(g, xs) if isinstance(x, Var) else None,
                     _unbroadcast(g, ys) if isinstance(y, Var) else None)
    return tape._record("add", (_pid(x), _pid(y)), out, bwd)


def sub(x, y):
    xv, yv = value_of(x), value_of(y)
    out = xv - yv
    tape = _tape_of(x, y)
    if tape is None:
        return out
    xs, ys = np.shape(xv), np.shape(yv)
    bwd = lambda g: (_unbroadcast(g, xs) if isinstance(x, Var) else None,
                     _unbroadcast(-g, ys) if isinstance(y, Var) else None)
    return tape._record("sub", (_pid(x), _pid(y)), out, bwd)


def neg(x):
    xv = value_of(x)
    if not isinstance(x, Var):
        return -xv
    return x.tape._record("neg", (x.idx,), -xv, lambda g: (-g,))


def mul(x, y):
    xv, yv = value_of(x), value_of(y)
    out = xv * yv
    tape = _tape_of(x, y)
    if tape is None:
        return out
    xs, ys = np.shape(xv), np.shape(yv)
    bwd = lambda g: (_unbroadcast(g * yv, xs) if isinstance(x, Var) else None,
                     _unbroadcast(g * xv, ys) if isinstance(y, Var) else None)
    return tape._record("mul", (_pid(x), _pid(y)), out, bwd)


def scale(x, c: float):
    """Multiplication by a python constant (not a tape value)."""
    xv = value_of(x)
    out = xv * c
    if not isinstance(x, Var):
        return out
    return x.tape._record("scale", (x.idx,), out, lambda g: (g * c,))


def absolute(x):
    xv = value_of(x)
    out = np.abs(xv)
    if not isinstance(x, Var):
        return out
    s = np.sign(xv)  # subgradient 0 at the kink
    return x.tape._record("abs", (x.idx,), out, lambda g: (g * s,))


def relu(x):
    xv = value_of(x)
    out = tensor_ops.relu(xv)
    if not isinstance(x, Var):
        return out
    mask = (xv > 0).astype(np.float64)  # subgradient 0 at the kink
    return x.tape._record("relu", (x.idx,), out, lambda g: (g * mask,))


def sigmoid(x):
    xv = value_of(x)
    out = tensor_ops.sigmoid(xv)
    if not isinstance(x, Var):
        return out
    return x.tape._record("sigmoid", (x.idx,), out, lambda g: (g * out * (1.0 - out),))


def gelu(x):
    xv = value_of(x)
    out = tensor_ops.gelu(xv)
    if not isinstance(x, Var):
        return out
    cdf = 0.5 * (1.0 + erf(xv / np.sqrt(2.0)))
    pdf = _INV_SQRT_2PI * np.exp(-0.5 * xv * xv)
    return x.tape._record("gelu", (x.idx,), out, lambda g: (g * (cdf + xv * pdf),))


def softmax_rows(x):
    xv = value_of(x)
    out = tensor_ops.softmax_rows(xv)
    if not isinstance(x, Var):
        return out

    def bwd(g):
        # fused jacobian-vector product: s * (g - <g, s>)
        inner = np.sum(g * out, axis=-1, keepdims=True)
        return (out * (g - inner),)

    return x.tape._record("softmax_rows", (x.idx,), out, bwd)


def layer_norm(x, gamma, beta, eps: float = 1e-6):
    xv, gv, bv = value_of(x), value_of(gamma), value_of(beta)
    mu = xv.mean(axis=-1, keepdims=True)
    var = xv.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (xv - mu) * inv
    out = xhat * gv + bv
    tape = _tape_of(x, gamma, beta)
    if tape is None:
        return out
    gs, bs = np.shape(gv), np.shape(bv)

    def bwd(g):
        gx = None
        if isinstance(x, Var):
            dxhat = g * gv
            m1 = dxhat.mean(axis=-1, keepdims=True)
            m2 = (dxhat * xhat).mean(axis=-1, keepdims=True)
            gx = inv * (dxhat - m1 - xhat * m2)
        gg = _unbroadcast(g * xhat, gs) if isinstance(gamma, Var) else None
        gb = _unbroadcast(g, bs) if isinstance(beta, Var) else None
        return (gx, gg, gb)

    return tape._record("layer_norm", (_pid(x), _pid(gamma), _pid(beta)), out, bwd)


def tsum(x):
    xv = value_of(x)
    out = np.sum(xv)
    if not isinstance(x, Var):
        return out
    shape = np.shape(xv)
    return x.tape._record("sum", (x.idx,), out, lambda g: (np.broadcast_to(g, shape).copy(),))


def tmean(x):
    xv = value_of(x)
    out = np.mean(xv)
    if not isinstance(x, Var):
        return out
    shape = np.shape(xv)
    n = float(np.size(xv))
    return x.tape._record("mean", (x.idx,), out,
                          lambda g: (np.broadcast_to(g / n, shape).copy(),))


# ---------------------------------------------------------------------------
# structural ops
# ---------------------------------------------------------------------------

def reshape(x, shape):
    xv = value_of(x)
    out = xv.reshape(shape)
    if not isinstance(x, Var):
        return out
    orig = np.shape(xv)
    return x.tape._record("reshape", (x.idx,), out, lambda g: (g.reshape(orig),))


def transpose(x, axes):
    xv = value_of(x)
    out = np.transpose(xv, axes)
    if not isinstance(x, Var):
        return out
    inv = np.argsort(axes)
    return x.tape._record("transpose", (x.idx,), out, lambda g: (np.transpose(g, inv),))


def concat(parts, axis: int):
    vals = [value_of(p) for p in parts]
    out = np.concatenate(vals, axis=axis)
    tape = _tape_of(*parts)
    if tape is None:
        return out
    sizes = [v.shape[axis] for v in vals]
    offsets = np.cumsum([0] + sizes)

    def bwd(g):
        gs = []
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            if isinstance(p, Var):
                sl = [slice(None)] * g.ndim
                sl[axis] = slice(lo, hi)
                gs.append(g[tuple(sl)])
            else:
                gs.append(None)
        return tuple(gs)

    return tape._record("concat", tuple(_pid(p) for p in parts), out, bwd)


def narrow(x, axis: int, start: int, size: int):
    """Contiguous slice along one axis."""
    xv = value_of(x)
    sl = [slice(None)] * xv.ndim
    sl[axis] = slice(start, start + size)
    out = xv[tuple(sl)]
    if not isinstance(x, Var):
        return out
    shape = np.shape(xv)

    def bwd(g):
        gx = np.zeros(shape, dtype=g.dtype)
        gx[tuple(sl)] = g
        return (gx,)

    return x.tape._record("narrow", (x.idx,), out, bwd)


def matmul(a, b):
    """Batched matrix product; leading axes must match exactly."""
    av, bv = value_of(a), value_of(b)
    if av.shape[:-2] != bv.shape[:-2]:
        raise ShapeError(f"matmul leading dims differ: {av.shape} vs {bv.shape}")
    out = av @ bv
    tape = _tape_of(a, b)
    if tape is None:
        return out
    bwd = lambda g: (g @ np.swapaxes(bv, -1, -2) if isinstance(a, Var) else None,
                     np.swapaxes(av, -1, -2) @ g if isinstance(b, Var) else None)
    return tape._record("matmul", (_pid(a), _pid(b)), out, bwd)


def conv2d(x, spec: ConvSpec, weights, bias=None):
    xv, wv = value_of(x), value_of(weights)
    bv = value_of(bias) if bias is not None else None
    out = tensor_ops.conv2d(xv, spec, wv, bv)
    tape = _tape_of(x, weights, bias)
    if tape is None:
        return out
    in_shape = xv.shape

    def bwd(g):
        gx = (tensor_ops.conv2d_input_grad(g, spec, wv, in_shape)
              if isinstance(x, Var) else None)
        gw = tensor_ops.conv2d_weight_grad(g, spec, xv) if isinstance(weights, Var) else None
        gb = g.sum(axis=(0, 1)) if isinstance(bias, Var) else None
        return (gx, gw, gb)

    return tape._record("conv2d", (_pid(x), _pid(weights), _pid(bias)), out, bwd)


def window_partition(x, m: int):
    xv = value_of(x)
    out = tensor_ops.window_partition(xv, m)
    if not isinstance(x, Var):
        return out
    h, w = xv.shape[:2]
    return x.tape._record("window_partition", (x.idx,), out,
                          lambda g: (tensor_ops.window_merge(g, h, w),))


def window_merge(win, h: int, w: int):
    wv = value_of(win)
    out = tensor_ops.window_merge(wv, h, w)
    if not isinstance(win, Var):
        return out
    m = int(round(wv.shape[1] ** 0.5))
    return win.tape._record("window_merge", (win.idx,), out,
                            lambda g: (tensor_ops.window_partition(g, m),))


def nearest_upsample(x):
    xv = value_of(x)
    out = tensor_ops.nearest_upsample(xv)
    if not isinstance(x, Var):
        return out

    def bwd(g):
        h2, w2 = g.shape[0] // 2, g.shape[1] // 2
        return (g.reshape(h2, 2, w2, 2, *g.shape[2:]).sum(axis=(1, 3)),)

    return x.tape._record("nearest_upsample", (x.idx,), out, bwd)


def reflect_pad(x, pb: int, pr: int):
    """Reflect-pad bottom/right; adjoint folds the pad back in."""
    xv = value_of(x)
    out = tensor_ops.reflect_pad(xv, pb, pr)
    if not isinstance(x, Var):
        return out
    h, w = xv.shape[:2]

    def bwd(g):
        g = g.copy()
        for t in range(pr):
            g[:, w - 2 - t] += g[:, w + t]
        g = g[:, :w]
        for t in range(pb):
            g[h - 2 - t] += g[h + t]
        return (g[:h],)

    return x.tape._record("reflect_pad", (x.idx,), out, bwd)


def crop(x, h: int, w: int):
    """Keep the top-left h x w region (inverse of boundary padding)."""
    xv = value_of(x)
    out = xv[:h, :w]
    if not isinstance(x, Var):
        return out
    shape = np.shape(xv)

    def bwd(g):
        gx = np.zeros(shape, dtype=g.dtype)
        gx[:h, :w] = g
        return (gx,)

    return x.tape._record("crop", (x.idx,), out, bwd)


def gather_rows(table, index: np.ndarray):
    """table[index] for an integer index array; adjoint scatter-adds."""
    tv = value_of(table)
    out = tv[index]
    if not isinstance(table, Var):
        return out
    shape = np.shape(tv)

    def bwd(g):
        gt = np.zeros(shape, dtype=g.dtype)
        np.add.at(gt, index, g)
        return (gt,)

    return table.tape._record("gather_rows", (table.idx,), out, bwd)


# ---------------------------------------------------------------------------
# wavelet ops (stacked-channel layout: [LL | LH | HL | HH])
# ---------------------------------------------------------------------------

def _dwt_stack(x: np.ndarray) -> np.ndarray:
    a = x[0::2, 0::2]
    b = x[0::2, 1::2]
    c = x[1::2, 0::2]
    d = x[1::2, 1::2]
    return np.concatenate([(a + b + c + d) / 2.0, (a + b - c - d) / 2.0,
                           (a - b + c - d) / 2.0, (a - b - c + d) / 2.0], axis=2)


def _idwt_stack(s: np.ndarray) -> np.ndarray:
    c4 = s.shape[2]
    c = c4 // 4
    ll, lh, hl, hh = (s[:, :, i * c:(i + 1) * c] for i in range(4))
    out = np.empty((2 * s.shape[0], 2 * s.shape[1], c))
    out[0::2, 0::2] = (ll + lh + hl + hh) / 2.0
    out[0::2, 1::2] = (ll + lh - hl - hh) / 2.0
    out[1::2, 0::2] = (ll - lh + hl - hh) / 2.0
    out[1::2, 1::2] = (ll - lh - hl + hh) / 2.0
    return out


def haar_dwt(x):
    """One Haar level, subbands stacked on the channel axis (C -> 4C)."""
    xv = value_of(x)
    if xv.shape[0] % 2 or xv.shape[1] % 2:
        raise ShapeError(f"haar_dwt needs even spatial size, got {xv.shape[:2]}")
    out = _dwt_stack(xv)
    if not isinstance(x, Var):
        return out
    # orthonormal: adjoint = inverse
    return x.tape._record("haar_dwt", (x.idx,), out, lambda g: (_idwt_stack(g),))


def haar_idwt(s):
    sv = value_of(s)
    if sv.shape[2] % 4:
        raise ShapeError(f"stacked subbands need 4k channels, got {sv.shape[2]}")
    out = _idwt_stack(sv)
    if not isinstance(s, Var):
        return out
    return s.tape._record("haar_idwt", (s.idx,), out, lambda g: (_dwt_stack(g),))


# ---------------------------------------------------------------------------
# complex / spectral ops (gradients as real pairs)
# ---------------------------------------------------------------------------

def fft2(x):
    """Unnormalized forward 2-D DFT of a real tensor (complex output)."""
    xv = value_of(x)
    out = np.fft.fft2(xv, axes=(0, 1))
    if not isinstance(x, Var):
        return out
    n = xv.shape[0] * xv.shape[1]
    real_in = not np.iscomplexobj(xv)

    def bwd(g):
        gx = n * np.fft.ifft2(g, axes=(0, 1))
        return (gx.real.copy() if real_in else gx,)

    return x.tape._record("fft2", (x.idx,), out, bwd)


def ifft2_real(z):
    """Inverse 2-D DFT (1/(H*W) factor), imaginary part discarded."""
    zv = value_of(z)
    out = np.fft.ifft2(zv, axes=(0, 1)).real.copy()
    if not isinstance(z, Var):
        return out
    n = zv.shape[0] * zv.shape[1]
    complex_in = np.iscomplexobj(zv)

    def bwd(g):
        gz = np.fft.fft2(g, axes=(0, 1)) / n
        return (gz if complex_in else gz.real.copy(),)

    return z.tape._record("ifft2_real", (z.idx,), out, bwd)


def to_complex(r):
    rv = value_of(r)
    out = rv.astype(np.complex128)
    if not isinstance(r, Var):
        return out
    return r.tape._record("to_complex", (r.idx,), out, lambda g: (g.real.copy(),))


def cadd(z, w):
    zv, wv = value_of(z), value_of(w)
    out = zv + wv
    tape = _tape_of(z, w)
    if tape is None:
        return out
    bwd = lambda g: (g if isinstance(z, Var) else None,
                     g if isinstance(w, Var) else None)
    return tape._record("cadd", (_pid(z), _pid(w)), out, bwd)


def cmul(z, w):
    """Elementwise complex product; pair-convention grads use conjugates."""
    zv, wv = value_of(z), value_of(w)
    out = zv * wv
    tape = _tape_of(z, w)
    if tape is None:
        return out
    bwd = lambda g: (g * np.conj(wv) if isinstance(z, Var) else None,
                     g * np.conj(zv) if isinstance(w, Var) else None)
    return tape._record("cmul", (_pid(z), _pid(w)), out, bwd)


def cmul_real(z, r):
    """Complex spectrum times a real gate (bin-wise)."""
    zv, rv = value_of(z), value_of(r)
    out = zv * rv
    tape = _tape_of(z, r)
    if tape is None:
        return out
    bwd = lambda g: (g * rv if isinstance(z, Var) else None,
                     (g * np.conj(zv)).real.copy() if isinstance(r, Var) else None)
    return tape._record("cmul_real", (_pid(z), _pid(r)), out, bwd)


def cabs2(z):
    """|z|^2 as a real tensor; grad_z = 2 * g * z under the pair convention."""
    zv = value_of(z)
    out = (zv.real * zv.real + zv.imag * zv.imag)
    if not isinstance(z, Var):
        return out
    return z.tape._record("cabs2", (z.idx,), out, lambda g: (2.0 * g * zv,))


def add_real_to_complex(z, r):
    """z + r with the real tensor r entering the real component."""
    zv, rv = value_of(z), value_of(r)
    out = zv + rv
    tape = _tape_of(z, r)
    if tape is None:
        return out
    bwd = lambda g: (g if isinstance(z, Var) else None,
                     g.real.copy() if isinstance(r, Var) else None)
    return tape._record("add_real_to_complex", (_pid(z), _pid(r)), out, bwd)


def _negate_freq(w: np.ndarray) -> np.ndarray:
    """w evaluated at circularly negated spatial frequencies."""
    out = w[::-1, ::-1]
    return np.roll(np.roll(out, 1, axis=0), 1, axis=1)


def symmetrize_freq(w):
    """(w(k) + w(-k)) / 2: makes a real gate conjugate-symmetry safe.

    Self-adjoint projection, so the backward rule is the op itself.
    """
    wv = value_of(w)
    out = 0.5 * (wv + _negate_freq(wv))
    if not isinstance(w, Var):
        return out
    return w.tape._record("symmetrize_freq", (w.idx,), out,
                          lambda g: (0.5 * (g + _negate_freq(g)),))


_PHASE_EPS = 1e-24


def phase_cosine(z, zref):
    """cos of the per-bin phase difference between two complex spectra.

    Equals cos(arg z - arg zref) wherever both magnitudes are nonzero,
    computed without arctan2 so it stays differentiable.
    """
    zv, rv = value_of(z), value_of(zref)
    if zv.shape != rv.shape:
        raise ShapeError(f"phase_cosine shapes differ: {zv.shape} vs {rv.shape}")
    mz = np.abs(zv)
    mr = np.abs(rv)
    den = mz * mr + _PHASE_EPS
    num = zv.real * rv.real + zv.imag * rv.imag
    out = num / den
    tape = _tape_of(z, zref)
    if tape is None:
        return out
    tiny = 1e-300

    def bwd(g):
        gz = gr = None
        if isinstance(z, Var):
            gz = (g / den) * (rv - out * (mr / np.maximum(mz, tiny)) * zv)
        if isinstance(zref, Var):
            gr = (g / den) * (zv - out * (mz / np.maximum(mr, tiny)) * rv)
        return (gz, gr)

    return tape._record("phase_cosine", (_pid(z), _pid(zref)), out, bwd)


def autocorr(x):
    """Circular autocorrelation per channel, traced through the FFT pair."""
    return ifft2_real(to_complex(cabs2(fft2(x))))


# ---------------------------------------------------------------------------
# gradient verification
# ---------------------------------------------------------------------------

@dataclass
class GradEntry:
    max_rel_err: float
    passed: bool
    n_coords: int


@dataclass
class GradReport:
    """Analytic-vs-central-difference comparison per parameter."""

    h: float
    tol: float
    entries: dict[str, GradEntry] = field(default_factory=dict)

    @property
    def all_pass(self) -> bool:
        return all(e.passed for e in self.entries.values())

    @property
    def worst(self) -> float:
        return max((e.max_rel_err for e in self.entries.values()), default=0.0)

    def summary(self) -> str:
        lines = []
        for name, e in sorted(self.entries.items()):
            status = "ok" if e.passed else "FAIL"
            lines.append(f"{status:4s} {name}: rel_err={e.max_rel_err:.3e} "
                         f"({e.n_coords} coords, h={self.h:g})")
        return "\n".join(lines)


def pair_inner(a, b) -> float:
    """Inner product under the real-pair convention: Re.Re + Im.Im."""
    a = np.asarray(a)
    b = np.asarray(b)
    return float(np.sum(a.real * b.real) + np.sum(a.imag * b.imag))


def _rel_err(ga: float, gn: float) -> float:
    return abs(ga - gn) / max(abs(ga), abs(gn), 1e-8)


def gradcheck(build_loss, params: dict, h: float = 1e-5, tol: float = 1e-4,
              max_coords: int = 200, seed: int = 0) -> GradReport:
    """Compare tape gradients of build_loss against central differences.

    build_loss maps a {name: value} dict to a scalar; it is called once with
    Vars (analytic pass) and twice per probed coordinate with plain arrays.
    Coordinates are subsampled to at most max_coords per parameter.  Callers
    should keep probe points away from relu/abs kinks.
    """
    rng = np.random.default_rng(seed)
    tape = Tape()
    leaves = {k: tape.leaf(np.asarray(v, dtype=np.float64)) for k, v in params.items()}
    loss = build_loss(leaves)
    if not isinstance(loss, Var):
        raise TapeError("build_loss did not return a traced value")
    grads = tape.backward(loss)

    report = GradReport(h=h, tol=tol)
    base = {k: np.asarray(v, dtype=np.float64) for k, v in params.items()}
    for name, v in base.items():
        analytic = grads[leaves[name].idx]
        if analytic is None:
            analytic = np.zeros_like(v)
        n = v.size
        coords = (np.arange(n) if n <= max_coords
                  else rng.choice(n, size=max_coords, replace=False))
        worst = 0.0
        flat = v.reshape(-1)
        for ci in coords:
            orig = flat[ci]
            flat[ci] = orig + h
            lp = float(value_of(build_loss(base)))
            flat[ci] = orig - h
            lm = float(value_of(build_loss(base)))
            flat[ci] = orig
            numeric = (lp - lm) / (2.0 * h)
            worst = max(worst, _rel_err(float(analytic.reshape(-1)[ci]), numeric))
        report.entries[name] = GradEntry(worst, worst < tol, len(coords))
    return report


# ---------------------------------------------------------------------------
# registry-wide verification suites
# ---------------------------------------------------------------------------

def _adjoint_rel_err(build, x0, rng) -> float:
    """Dot-product test <L x, y> == <x, L^T y> for a linear map built on one leaf."""
    tape = Tape()
    xv = tape.leaf(np.asarray(x0))
    out = build(xv)
    ov = out.value
    y = rng.standard_normal(ov.shape)
    if np.iscomplexobj(ov):
        y = y + 1j * rng.standard_normal(ov.shape)
    lhs = pair_inner(ov, y)
    grads = tape.backward(out, seed=y)
    lt = grads[xv.idx]
    rhs = pair_inner(np.asarray(x0), lt)
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-12)


def run_adjoint_suite(seed: int = 0) -> dict[str, float]:
    """Dot-product adjoint test for every linear op in OP_CATALOG.

    Returns {op name: max relative error over its cases}.  Additive partner
    arguments are held at zero so each map under test is genuinely linear in
    the probed argument; multiplicative partners are held at random values.
    """
    rng = np.random.default_rng(seed)
    r = rng.standard_normal
    errs: dict[str, float] = {}

    def case(name, x0, build):
        err = _adjoint_rel_err(build, x0, rng)
        errs[name] = max(errs.get(name, 0.0), err)

    x342 = r((3, 4, 2))
    case("add", x342, lambda v: add(v, np.zeros((3, 4, 2))))
    case("add", x342, lambda v: add(np.zeros((3, 4, 2)), v))
    case("sub", x342, lambda v: sub(v, np.zeros((3, 4, 2))))
    case("sub", x342, lambda v: sub(np.zeros((3, 4, 2)), v))
    case("neg", x342, neg)
    case("scale", x342, lambda v: scale(v, 1.7))
    case("sum", x342, tsum)
    case("mean", x342, tmean)
    case("reshape", x342, lambda v: reshape(v, (4, 6)))
    case("transpose", x342, lambda v: transpose(v, (2, 0, 1)))
    case("concat", x342, lambda v: concat([v, np.zeros((3, 2, 2))], 1))
    case("concat", x342, lambda v: concat([np.zeros((3, 1, 2)), v], 1))
    case("narrow", x342, lambda v: narrow(v, 1, 1, 2))

    spec_a = ConvSpec.same(3, 2, 3)
    wa = r((3, 3, 2, 3))
    xa = r((5, 6, 2))
    case("conv2d", xa, lambda v: conv2d(v, spec_a, wa, None))
    case("conv2d", wa, lambda v: conv2d(xa, spec_a, v, None))
    case("conv2d", r(3),
         lambda v: conv2d(np.zeros((5, 6, 2)), spec_a, np.zeros((3, 3, 2, 3)), v))
    spec_b = ConvSpec(3, 4, 4, stride=2, padding=1, groups=2)
    wb = r((3, 3, 2, 4))
    xb = r((6, 6, 4))
    case("conv2d", xb, lambda v: conv2d(v, spec_b, wb, None))
    case("conv2d", wb, lambda v: conv2d(xb, spec_b, v, None))

    case("window_partition", r((4, 6, 3)), lambda v: window_partition(v, 2))
    case("window_merge", r((6, 4, 3)), lambda v: window_merge(v, 4, 6))
    case("nearest_upsample", x342, nearest_upsample)
    case("reflect_pad", r((5, 6, 2)), lambda v: reflect_pad(v, 2, 3))
    case("crop", r((5, 6, 2)), lambda v: crop(v, 3, 4))

    idx = rng.integers(0, 9, size=(3, 5))
    case("gather_rows", r((9, 2)), lambda v: gather_rows(v, idx))

    case("haar_dwt", r((6, 8, 2)), haar_dwt)
    case("haar_idwt", r((3, 4, 8)), haar_idwt)

    x452 = r((4, 5, 2))
    z452 = r((4, 5, 2)) + 1j * r((4, 5, 2))
    zz = np.zeros((4, 5, 2), dtype=np.complex128)
    case("fft2", x452, fft2)
    case("fft2", z452, fft2)
    case("ifft2_real", z452, ifft2_real)
    case("to_complex", x452, to_complex)
    case("cadd", z452, lambda v: cadd(v, zz))
    case("cadd", z452, lambda v: cadd(zz, v))
    case("add_real_to_complex", z452, lambda v: add_real_to_complex(v, np.zeros((4, 5, 2))))
    case("add_real_to_complex", x452, lambda v: add_real_to_complex(zz, v))
    case("symmetrize_freq", r((4, 6, 2)), symmetrize_freq)

    missing = [n for n, lin in OP_CATALOG.items() if lin and n not in errs]
    if missing:
        raise TapeError(f"adjoint suite missing linear ops: {missing}")
    return errs


def run_gradcheck_suite(seed: int = 0, h: float = 1e-5, tol: float = 1e-4,
                        max_coords: int = 12) -> GradReport:
    """Central-difference gradcheck covering every op in OP_CATALOG.

    Each op is exercised inside a small random weighted-sum loss; complex
    intermediates are produced from real parameters (via fft2/to_complex) so
    finite differences stay real-valued.  Probe points for relu/abs are kept
    away from the kink at zero.
    """
    rng = np.random.default_rng(seed)
    r = rng.standard_normal

    def away(*shape):
        mag = rng.uniform(0.3, 1.3, size=shape)
        return mag * np.where(rng.random(shape) < 0.5, -1.0, 1.0)

    report = GradReport(h=h, tol=tol)

    def check(name, build, params):
        sub_report = gradcheck(build, params, h=h, tol=tol,
                               max_coords=max_coords, seed=seed)
        worst = sub_report.worst
        n = sum(e.n_coords for e in sub_report.entries.values())
        prev = report.entries.get(name)
        if prev is not None:
            worst = max(worst, prev.max_rel_err)
            n += prev.n_coords
        report.entries[name] = GradEntry(worst, worst < tol, n)

    w342 = r((3, 4, 2))
    check("add", lambda p: tsum(mul(w342, add(p["x"], p["y"]))),
          {"x": r((3, 4, 2)), "y": r((3, 4, 2))})
    check("sub", lambda p: tsum(mul(w342, sub(p["x"], p["y"]))),
          {"x": r((3, 4, 2)), "y": r((3, 4, 2))})
    check("neg", lambda p: tsum(mul(w342, neg(p["x"]))), {"x": r((3, 4, 2))})
    check("mul", lambda p: tsum(mul(mul(p["x"], p["y"]), w342)),
          {"x": r((3, 4, 2)), "y": r((3, 4, 2))})
    check("scale", lambda p: tsum(mul(w342, scale(p["x"], -2.3))),
          {"x": r((3, 4, 2))})
    check("abs", lambda p: tsum(mul(w342, absolute(p["x"]))),
          {"x": away(3, 4, 2)})
    check("relu", lambda p: tsum(mul(w342, relu(p["x"]))),
          {"x": away(3, 4, 2)})
    check("sigmoid", lambda p: tsum(mul(w342, sigmoid(p["x"]))),
          {"x": r((3, 4, 2))})
    check("gelu", lambda p: tsum(mul(w342, gelu(p["x"]))),
          {"x": r((3, 4, 2))})

    w46 = r((4, 6))
    check("softmax_rows", lambda p: tsum(mul(w46, softmax_rows(p["x"]))),
          {"x": r((4, 6))})
    w345 = r((3, 4, 5))
    check("layer_norm",
          lambda p: tsum(mul(w345, layer_norm(p["x"], p["g"], p["b"]))),
          {"x": r((3, 4, 5)), "g": 1.0 + 0.2 * r(5), "b": 0.2 * r(5)})

    check("sum", lambda p: tsum(p["x"]), {"x": r((3, 4, 2))})
    check("mean", lambda p: tmean(p["x"]), {"x": r((3, 4, 2))})
    w46b = r((4, 6))
    check("reshape", lambda p: tsum(mul(w46b, reshape(p["x"], (4, 6)))),
          {"x": r((3, 4, 2))})
    w243 = r((2, 4, 3))
    check("transpose", lambda p: tsum(mul(w243, transpose(p["x"], (2, 1, 0)))),
          {"x": r((3, 4, 2))})
    w352 = r((3, 5, 2))
    check("concat", lambda p: tsum(mul(w352, concat([p["x"], p["y"]], 1))),
          {"x": r((3, 4, 2)), "y": r((3, 1, 2))})
    w312 = r((3, 1, 2))
    check("narrow", lambda p: tsum(mul(w312, narrow(p["x"], 1, 2, 1))),
          {"x": r((3, 4, 2))})
    w235 = r((2, 3, 5))
    check("matmul", lambda p: tsum(mul(w235, matmul(p["a"], p["b"]))),
          {"a": r((2, 3, 4)), "b": r((2, 4, 5))})

    spec_a = ConvSpec.same(3, 2, 3)
    w563 = r((5, 6, 3))
    check("conv2d",
          lambda p: tsum(mul(w563, conv2d(p["x"], spec_a, p["w"], p["b"]))),
          {"x": r((5, 6, 2)), "w": r((3, 3, 2, 3)), "b": r(3)})
    spec_b = ConvSpec(3, 4, 4, stride=2, padding=1, groups=2)
    w334 = r((3, 3, 4))
    check("conv2d",
          lambda p: tsum(mul(w334, conv2d(p["x"], spec_b, p["w"], p["b"]))),
          {"x": r((6, 6, 4)), "w": r((3, 3, 2, 4)), "b": r(4)})

    wpart = r((6, 4, 3))
    check("window_partition",
          lambda p: tsum(mul(wpart, window_partition(p["x"], 2))),
          {"x": r((4, 6, 3))})
    wmerge = r((4, 6, 3))
    check("window_merge",
          lambda p: tsum(mul(wmerge, window_merge(p["x"], 4, 6))),
          {"x": r((6, 4, 3))})
    wup = r((6, 8, 2))
    check("nearest_upsample",
          lambda p: tsum(mul(wup, nearest_upsample(p["x"]))),
          {"x": r((3, 4, 2))})
    wpad = r((7, 9, 2))
    check("reflect_pad",
          lambda p: tsum(mul(wpad, reflect_pad(p["x"], 2, 3))),
          {"x": r((5, 6, 2))})
    wcrop = r((3, 4, 2))
    check("crop", lambda p: tsum(mul(wcrop, crop(p["x"], 3, 4))),
          {"x": r((5, 6, 2))})
    gidx = rng.integers(0, 7, size=(4, 5))
    wgat = r((4, 5, 3))
    check("gather_rows",
          lambda p: tsum(mul(wgat, gather_rows(p["t"], gidx))),
          {"t": r((7, 3))})

    wdwt = r((3, 4, 8))
    check("haar_dwt", lambda p: tsum(mul(wdwt, haar_dwt(p["x"]))),
          {"x": r((6, 8, 2))})
    widwt = r((6, 8, 2))
    check("haar_idwt", lambda p: tsum(mul(widwt, haar_idwt(p["s"]))),
          {"s": r((3, 4, 8))})

    wf = r((4, 5, 2))
    zc = r((4, 5, 2)) + 1j * r((4, 5, 2))
    check("fft2", lambda p: tsum(mul(wf, cabs2(fft2(p["x"])))),
          {"x": r((4, 5, 2))})
    check("cabs2", lambda p: tsum(mul(wf, cabs2(fft2(p["x"])))),
          {"x": r((4, 5, 2))})
    check("ifft2_real",
          lambda p: tsum(mul(wf, ifft2_real(cmul(fft2(p["x"]), zc)))),
          {"x": r((4, 5, 2))})
    check("to_complex",
          lambda p: tsum(mul(wf, ifft2_real(cmul(to_complex(p["x"]), zc)))),
          {"x": r((4, 5, 2))})
    check("cadd",
          lambda p: tsum(mul(wf, cabs2(cadd(fft2(p["x"]), cmul(fft2(p["y"]), zc))))),
          {"x": r((4, 5, 2)), "y": r((4, 5, 2))})
    check("cmul",
          lambda p: tsum(mul(wf, cabs2(cmul(fft2(p["x"]), fft2(p["y"]))))),
          {"x": r((4, 5, 2)), "y": r((4, 5, 2))})
    check("cmul_real",
          lambda p: tsum(mul(wf, cabs2(cmul_real(fft2(p["x"]), p["r"])))),
          {"x": r((4, 5, 2)), "r": r((4, 5, 2))})
    check("add_real_to_complex",
          lambda p: tsum(mul(wf, cabs2(add_real_to_complex(fft2(p["x"]), p["r"])))),
          {"x": r((4, 5, 2)), "r": r((4, 5, 2))})
    w462 = r((4, 6, 2))
    check("symmetrize_freq",
          lambda p: tsum(mul(w462, symmetrize_freq(p["x"]))),
          {"x": r((4, 6, 2))})
    check("phase_cosine",
          lambda p: tsum(mul(wf, phase_cosine(fft2(p["x"]), fft2(p["y"])))),
          {"x": 1.0 + 0.4 * r((4, 5, 2)), "y": 1.0 + 0.4 * r((4, 5, 2))})

    missing = [n for n in OP_CATALOG if n not in report.entries]
    if missing:
        raise TapeError(f"gradcheck suite missing ops: {missing}")
    return report
