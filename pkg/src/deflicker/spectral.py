"""Frequency-domain machinery: 2-D FFT, amplitude/phase algebra,
phase correlation, and circular autocorrelation.

Normalization is fixed package-wide: the forward transform is the plain
unnormalized DFT, the inverse carries the 1/(H*W) factor.  Autocorrelation
values depend on this choice, so it is part of the contract.
"""

from __future__ import annotations

import numpy as np

from .tensor_ops import ShapeError

#: max-abs imaginary residue tolerated when a spectrum is expected to be
#: conjugate-symmetric and the inverse transform should be real.
REAL_TOL = 1e-9


class DegenerateInputError(ValueError):
    """Raised when an input has no usable spectral content (e.g. constant)."""


def _spatial_axes(x: np.ndarray):
    if x.ndim not in (2, 3):
        raise ShapeError(f"expected H x W or H x W x C array, got shape {x.shape}")
    return (0, 1)


def fft2(x: np.ndarray) -> np.ndarray:
    """Unnormalized forward 2-D DFT per channel.  Any H, W >= 1."""
    return np.fft.fft2(np.asarray(x, dtype=np.float64), axes=_spatial_axes(x))


def ifft2(spectrum: np.ndarray, assume_real: bool = True) -> np.ndarray:
    """Inverse 2-D DFT with the 1/(H*W) factor.

    With assume_real=True (the common case: the spectrum came from a real
    image and is conjugate-symmetric) the imaginary residue is discarded and
    a real array is returned.
    """
    out = np.fft.ifft2(np.asarray(spectrum, dtype=np.complex128),
                       axes=_spatial_axes(spectrum))
    if assume_real:
        residue = np.abs(out.imag).max(initial=0.0)
        scale = max(1.0, np.abs(out.real).max(initial=0.0))
        if residue > REAL_TOL * scale:
            raise DegenerateInputError(
                f"spectrum was not conjugate-symmetric (imag residue {residue:.3e})")
        return out.real.copy()
    return out


def amp_phase(spectrum: np.ndarray):
    """Polar decomposition of a complex spectrum.

    Phase lies in (-pi, pi]; the phase of a zero bin is 0.
    """
    spectrum = np.asarray(spectrum, dtype=np.complex128)
    amplitude = np.abs(spectrum)
    phase = np.arctan2(spectrum.imag, spectrum.real)
    # arctan2(-0.0, negative) gives -pi; fold onto the (-pi, pi] convention.
    phase[phase == -np.pi] = np.pi
    return amplitude, phase


def from_amp_phase(amplitude: np.ndarray, phase: np.ndarray) -> np.ndarray:
    """Rebuild a complex spectrum from amplitude >= 0 and phase."""
    amplitude = np.asarray(amplitude, dtype=np.float64)
    if np.any(amplitude < 0):
        raise ValueError("amplitude must be non-negative")
    return amplitude * np.exp(1j * np.asarray(phase, dtype=np.float64))


def phase_swap(a: np.ndarray, b: np.ndarray):
    """Exchange the phase spectra of two equally shaped tensors.

    Returns (a', b') where a' carries a's amplitude with b's phase and
    vice versa.  Applying the swap twice restores the originals.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"phase_swap shapes differ: {a.shape} vs {b.shape}")
    amp_a, phi_a = amp_phase(fft2(a))
    amp_b, phi_b = amp_phase(fft2(b))
    a_swapped = ifft2(from_amp_phase(amp_a, phi_b))
    b_swapped = ifft2(from_amp_phase(amp_b, phi_a))
    return a_swapped, b_swapped


def phase_similarity(phi_t: np.ndarray, phi_ref: np.ndarray,
                     literal: bool = False) -> np.ndarray:
    """Per-bin agreement score between two phase tensors, in [0, 1].

    Default score is (1 + cos(dphi)) / 2: 1 where phases agree, 0 where they
    are opposed.  literal=True instead returns |exp(i*phi_t) * exp(-i*phi_ref)|,
    which is identically 1 and kept only for comparison.
    """
    phi_t = np.asarray(phi_t, dtype=np.float64)
    phi_ref = np.asarray(phi_ref, dtype=np.float64)
    if phi_t.shape != phi_ref.shape:
        raise ShapeError(f"phase shapes differ: {phi_t.shape} vs {phi_ref.shape}")
    if literal:
        return np.abs(np.exp(1j * phi_t) * np.exp(-1j * phi_ref))
    return 0.5 * (1.0 + np.cos(phi_t - phi_ref))


def phase_correlation_surface(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Inverse FFT of the normalized cross-power spectrum of two H x W images.

    The surface peaks at the circular shift of b relative to a.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or a.shape != b.shape:
        raise ShapeError(f"expected two equal H x W images, got {a.shape} and {b.shape}")
    # conjugation side chosen so the peak lands AT the roll offset:
    # b = roll(a, s) gives cross power exp(-2i pi k s / N) whose IFFT is
    # a delta at s itself rather than at -s.
    cross = np.conj(fft2(a)) * fft2(b)
    mag = np.abs(cross)
    if not np.any(mag > 0):
        raise DegenerateInputError("zero cross-power spectrum (constant input?)")
    norm = np.zeros_like(cross)
    nz = mag > 0
    norm[nz] = cross[nz] / mag[nz]
    return ifft2(norm)


def phase_correlation_peak(a: np.ndarray, b: np.ndarray):
    """Circular shift (dy, dx) of b relative to a, from the correlation peak."""
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        raise DegenerateInputError("phase correlation needs non-constant inputs")
    surface = phase_correlation_surface(a, b)
    dy, dx = np.unravel_index(np.argmax(surface), surface.shape)
    return int(dy), int(dx)


def autocorrelation(x: np.ndarray) -> np.ndarray:
    """Circular autocorrelation per channel via the Wiener-Khinchin theorem.

    R = IFFT(|FFT(x)|^2), so R[0, 0] equals the channel's sum of squares and
    R is even under circular index negation.
    """
    spectrum = fft2(x)
    return ifft2((spectrum * np.conj(spectrum)).real)
