"""Scale-free comparisons between detected maps and oracle outputs."""

import numpy as np


def peak_normalize(a):
    a = np.asarray(a, dtype=np.float64)
    peak = np.abs(a).max()
    return a / peak if peak > 0 else a.copy()


def crop_border(a, border):
    if border <= 0:
        return a
    return a[border:-border, border:-border]


def nrmse(test, reference, border=0):
    """Relative L2 error ``||t - r|| / ||r||`` after peak-normalizing both maps."""
    t = crop_border(peak_normalize(test), border)
    r = crop_border(peak_normalize(reference), border)
    denom = np.linalg.norm(r)
    if denom == 0:
        return 0.0 if np.linalg.norm(t) == 0 else float("inf")
    return float(np.linalg.norm(t - r) / denom)


def correlation(a, b, border=0):
    """Pearson correlation coefficient of two maps."""
    a = crop_border(np.asarray(a, dtype=np.float64), border).ravel()
    b = crop_border(np.asarray(b, dtype=np.float64), border).ravel()
    a = a - a.mean()
    b = b - b.mean()
    denom = np.linalg.norm(a) * np.linalg.norm(b)
    if denom == 0:
        return 0.0
    return float(a @ b / denom)
