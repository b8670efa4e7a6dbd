"""Synthetic-to-real appearance adaptation: Gaussian blur and white noise."""
from __future__ import annotations

import math

import numpy as np

DEFAULT_SIGMA = 1.5
DEFAULT_NOISE_STD = 10.0


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalized 1D kernel of radius ``ceil(3 * sigma)``."""
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return np.ones(1)
    radius = math.ceil(3.0 * sigma)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def _convolve_axis(img: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    r = len(kernel) // 2
    pad = [(0, 0)] * img.ndim
    pad[axis] = (r, r)
    padded = np.pad(img, pad, mode="edge")
    n = img.shape[axis]
    out = np.zeros_like(img, dtype=np.float64)
    for i, wgt in enumerate(kernel):
        out += wgt * np.take(padded, np.arange(i, i + n), axis=axis)
    return out


def gaussian_blur(image: np.ndarray, sigma: float) -> np.ndarray:
    """Separable blur (rows, then columns) with clamp-to-edge borders.

    Works on ``(H, W)`` or ``(H, W, C)`` uint8 images; the result is rounded
    back to uint8 once, after both passes.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    image = np.asarray(image)
    if sigma == 0:
        return image.copy()
    k = gaussian_kernel(sigma)
    tmp = _convolve_axis(image.astype(np.float64), k, axis=1)
    out = _convolve_axis(tmp, k, axis=0)
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def add_white_noise(image: np.ndarray, std_levels: float, rng: np.random.Generator) -> np.ndarray:
    """Add i.i.d. zero-mean Gaussian noise (in 8-bit levels) and clamp to [0, 255]."""
    if std_levels < 0:
        raise ValueError(f"noise std must be >= 0, got {std_levels}")
    image = np.asarray(image)
    if std_levels == 0:
        return image.copy()
    noisy = image.astype(np.float64) + rng.normal(0.0, std_levels, size=image.shape)
    return np.clip(np.rint(noisy), 0, 255).astype(np.uint8)


def apply_adaptation(image: np.ndarray, kind: str, rng: np.random.Generator | None = None,
                     sigma: float = DEFAULT_SIGMA, std: float = DEFAULT_NOISE_STD) -> np.ndarray:
    if kind == "none":
        return image
    if kind == "gauss":
        return gaussian_blur(image, sigma)
    if kind == "white_noise":
        if rng is None:
            raise ValueError("white noise needs a seeded generator")
        return add_white_noise(image, std, rng)
    raise ValueError(f"unknown adaptation '{kind}'")
