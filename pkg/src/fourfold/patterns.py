"""Deterministic synthetic objects and kernel banks for tests and the CLI.

Optical correlators only reproduce the part of an image's spectrum that
fits through the lens aperture, so the objects here are smooth and taper
to zero at their border.
"""

import numpy as np
from scipy.ndimage import gaussian_filter


def smooth_object(n, seed=0, sigma=1.5, taper=True):
    """Band-limited random object in [0, 1], Hann-tapered to zero at the edge."""
    rng = np.random.default_rng(seed)
    img = gaussian_filter(rng.random((n, n)), sigma, mode="wrap")
    img -= img.min()
    if taper:
        w = np.hanning(n)
        img *= np.outer(w, w)
    return img / img.max()


def soft_square(n, side, sigma=1.5):
    """Bright square on a dark background with Gaussian-softened edges."""
    img = np.zeros((n, n))
    lo = n // 2 - side // 2
    img[lo:lo + side, lo:lo + side] = 1.0
    img = gaussian_filter(img, sigma)
    return np.clip(img / img.max(), 0.0, 1.0)


def gaussian_kernel(k, sigma):
    a = np.arange(k) - k // 2
    g = np.exp(-(a[:, None] ** 2 + a[None, :] ** 2) / (2 * sigma**2))
    return g / g.sum()


def gabor_kernel(k, theta, period, sigma):
    a = np.arange(k) - k // 2
    y, x = np.meshgrid(a, a, indexing="ij")
    xr = x * np.cos(theta) + y * np.sin(theta)
    return np.exp(-(x**2 + y**2) / (2 * sigma**2)) * np.cos(2 * np.pi * xr / period)


def delta_kernel(k=1):
    w = np.zeros((k, k))
    w[k // 2, k // 2] = 1.0
    return w


def random_kernels(count, k, seed=0, signed=None):
    """``count`` random k x k kernels alternating non-negative and signed weights.

    ``signed=True/False`` forces one kind.
    """
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        is_signed = (i % 2 == 1) if signed is None else signed
        out.append(rng.standard_normal((k, k)) if is_signed else rng.random((k, k)))
    return out


def alexnet_like_kernels(k=11):
    """Six first-layer-style kernels: three low-frequency blobs, three Gabors."""
    a = np.arange(k) - k // 2
    y, x = np.meshgrid(a, a, indexing="ij")
    elongated = np.exp(-((x * np.cos(np.pi / 6) + y * np.sin(np.pi / 6)) ** 2) / (2 * 3.0**2)
                       - ((-x * np.sin(np.pi / 6) + y * np.cos(np.pi / 6)) ** 2) / (2 * 1.2**2))
    return [
        gaussian_kernel(k, 1.5),
        gaussian_kernel(k, 3.0),
        elongated / elongated.sum(),
        gabor_kernel(k, 0.0, 6.0, 2.5),
        gabor_kernel(k, np.pi / 4, 6.0, 2.5),
        gabor_kernel(k, np.pi / 2, 6.0, 2.5),
    ]
