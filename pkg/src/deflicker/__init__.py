"""Burst deflickering toolkit.

Numerical core for restoring a clean frame from a three-frame burst
corrupted by rolling-shutter AC flicker: FFT phase machinery, Haar
wavelet analysis, a tape-based reverse-mode autodiff engine, the
fusion/attention blocks built on top of them, a U-shaped restoration
network, and a physics-based flicker simulator for synthetic data.
"""

__version__ = "0.1.0"
