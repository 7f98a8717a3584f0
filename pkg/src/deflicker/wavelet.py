"""Single-level orthonormal Haar analysis/synthesis and directional energy.

Convention (rows = vertical axis): for each non-overlapping 2x2 block
[[a, b], [c, d]],

    LL = (a + b + c + d) / 2     LH = (a + b - c - d) / 2
    HL = (a - b + c - d) / 2     HH = (a - b - c + d) / 2

so LH is the vertical high-pass and responds to horizontal stripes, HL to
vertical stripes.  The /2 normalization makes the transform orthonormal:
the inverse is the adjoint and energy is conserved exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor_ops import ShapeError


@dataclass(frozen=True)
class WaveletSubbands:
    """The four half-resolution subbands of one Haar level."""

    LL: np.ndarray
    LH: np.ndarray
    HL: np.ndarray
    HH: np.ndarray

    def __post_init__(self):
        shapes = {b.shape for b in (self.LL, self.LH, self.HL, self.HH)}
        if len(shapes) != 1:
            raise ShapeError(f"subband shapes differ: {sorted(shapes)}")


def haar_dwt(x: np.ndarray) -> WaveletSubbands:
    """One Haar level of an H x W x C map (H, W even)."""
    x = np.asarray(x, dtype=np.float64)
    h, w = x.shape[0], x.shape[1]
    if h % 2 or w % 2:
        raise ShapeError(f"haar_dwt needs even spatial size, got {h}x{w}")
    a = x[0::2, 0::2]
    b = x[0::2, 1::2]
    c = x[1::2, 0::2]
    d = x[1::2, 1::2]
    return WaveletSubbands(
        LL=(a + b + c + d) / 2.0,
        LH=(a + b - c - d) / 2.0,
        HL=(a - b + c - d) / 2.0,
        HH=(a - b - c + d) / 2.0,
    )


def haar_idwt(s: WaveletSubbands) -> np.ndarray:
    """Exact inverse of haar_dwt (orthonormal: inverse = adjoint)."""
    ll, lh, hl, hh = s.LL, s.LH, s.HL, s.HH
    hh2, ww2 = ll.shape[0], ll.shape[1]
    out = np.empty((2 * hh2, 2 * ww2) + ll.shape[2:])
    out[0::2, 0::2] = (ll + lh + hl + hh) / 2.0
    out[0::2, 1::2] = (ll + lh - hl - hh) / 2.0
    out[1::2, 0::2] = (ll - lh + hl - hh) / 2.0
    out[1::2, 1::2] = (ll - lh - hl + hh) / 2.0
    return out


def directional_energy(s: WaveletSubbands):
    """Per-channel sum of squares of each subband, as a dict of 1-D arrays."""

    def energy(band):
        return np.atleast_1d(np.sum(band * band, axis=(0, 1)))

    return {
        "LL": energy(s.LL),
        "LH": energy(s.LH),
        "HL": energy(s.HL),
        "HH": energy(s.HH),
    }
