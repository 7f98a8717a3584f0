"""Restoration quality metrics: L1, PSNR, and luminance SSIM."""

from __future__ import annotations

import numpy as np
from scipy.ndimage import correlate

from .tensor_ops import ShapeError

#: Rec. 601 luma weights for RGB -> luminance.
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _check_pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def l1_loss(pred, target) -> float:
    """Mean absolute difference."""
    pred, target = _check_pair(pred, target)
    return float(np.mean(np.abs(pred - target)))


def psnr(a, b, peak: float = 1.0) -> float:
    """10*log10(peak^2 / MSE); +inf for identical inputs."""
    a, b = _check_pair(a, b)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return float("inf")
    return 10.0 * np.log10(peak * peak / mse)


def format_db(value: float) -> str:
    """PSNR formatting for reports: infinity prints as "inf"."""
    if np.isinf(value):
        return "inf"
    return f"{value:.4f}"


def luminance(img: np.ndarray) -> np.ndarray:
    """Rec. 601 luma of an (H, W, 3) image, or a grayscale map unchanged."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        return img
    if img.ndim == 3 and img.shape[2] == 3:
        return img @ LUMA_WEIGHTS
    if img.ndim == 3 and img.shape[2] == 1:
        return img[:, :, 0]
    raise ShapeError(f"expected (H, W), (H, W, 1) or (H, W, 3), got {img.shape}")


def gaussian_kernel(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    half = (size - 1) / 2.0
    g = np.exp(-((np.arange(size) - half) ** 2) / (2.0 * sigma * sigma))
    k = np.outer(g, g)
    return k / k.sum()


def ssim(a, b, peak: float = 1.0) -> float:
    """Mean local SSIM over the luminance channel.

    11x11 Gaussian window (sigma 1.5), K1=0.01, K2=0.03; averaged over the
    valid interior where the window fits entirely.
    """
    a, b = _check_pair(a, b)
    x = luminance(a)
    y = luminance(b)
    half = SSIM_WINDOW // 2
    if x.shape[0] < SSIM_WINDOW or x.shape[1] < SSIM_WINDOW:
        raise ShapeError(f"image {x.shape} smaller than the {SSIM_WINDOW}x"
                         f"{SSIM_WINDOW} SSIM window")
    kernel = gaussian_kernel()

    def smooth(img):
        return correlate(img, kernel, mode="constant")[half:-half, half:-half]

    mu_x = smooth(x)
    mu_y = smooth(y)
    xx = smooth(x * x) - mu_x * mu_x
    yy = smooth(y * y) - mu_y * mu_y
    xy = smooth(x * y) - mu_x * mu_y
    c1 = (SSIM_K1 * peak) ** 2
    c2 = (SSIM_K2 * peak) ** 2
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * xy + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (xx + yy + c2)
    return float(np.mean(num / den))
