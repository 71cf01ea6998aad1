"""Image quality metrics: PSNR and mean SSIM."""

from __future__ import annotations

import numpy as np

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01**2
SSIM_C2 = 0.03**2

# BT.601 luma weights
_LUMA = np.array([0.299, 0.587, 0.114])


def _check_pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    return a, b


def _rgb(img):
    return img[..., :3] if img.ndim == 3 else img


def psnr(image_a, image_b) -> float:
    """Peak signal-to-noise ratio in dB over RGB with MAX=1; identical images give +inf."""
    a, b = _check_pair(image_a, image_b)
    mse = float(np.mean((_rgb(a) - _rgb(b)) ** 2))
    if mse == 0.0:
        return float("inf")
    return 10.0 * np.log10(1.0 / mse)


def luminance(img) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        return img
    return _rgb(img) @ _LUMA


def gaussian_kernel(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    half = (size - 1) / 2.0
    x = np.arange(size) - half
    g = np.exp(-(x**2) / (2.0 * sigma**2))
    k = np.outer(g, g)
    return k / k.sum()


def _windows(img: np.ndarray, size: int) -> np.ndarray:
    return np.lib.stride_tricks.sliding_window_view(img, (size, size))


def mssim(image_a, image_b) -> float:
    """Mean SSIM over 11x11 Gaussian-weighted luminance windows (valid positions only)."""
    a, b = _check_pair(image_a, image_b)
    ya = luminance(a)
    yb = luminance(b)
    if ya.shape[0] < SSIM_WINDOW or ya.shape[1] < SSIM_WINDOW:
        raise ValueError(f"images must be at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {ya.shape}")
    k = gaussian_kernel()
    wa = _windows(ya, SSIM_WINDOW)
    wb = _windows(yb, SSIM_WINDOW)
    mu_a = np.tensordot(wa, k, axes=([2, 3], [0, 1]))
    mu_b = np.tensordot(wb, k, axes=([2, 3], [0, 1]))
    ea2 = np.tensordot(wa**2, k, axes=([2, 3], [0, 1]))
    eb2 = np.tensordot(wb**2, k, axes=([2, 3], [0, 1]))
    eab = np.tensordot(wa * wb, k, axes=([2, 3], [0, 1]))
    var_a = ea2 - mu_a**2
    var_b = eb2 - mu_b**2
    cov = eab - mu_a * mu_b
    num = (2 * mu_a * mu_b + SSIM_C1) * (2 * cov + SSIM_C2)
    den = (mu_a**2 + mu_b**2 + SSIM_C1) * (var_a + var_b + SSIM_C2)
    return float(np.mean(num / den))
