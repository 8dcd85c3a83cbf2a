"""Hot loops with a numba path and a pure-numpy fallback.

Set ``FOURFOLD_NO_NUMBA=1`` before import to force the numpy path. Both
paths compute the same sums in the same tap order; results agree to
floating-point rounding, not bit-for-bit.
"""

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

USE_NUMBA = numba is not None and os.environ.get("FOURFOLD_NO_NUMBA", "") not in ("1", "true", "yes")


def conv_valid_numpy(padded, weights, stride=1):
    """Valid-mode true convolution by explicit tap summation.

    ``out[i, j] = sum_ab w[a, b] * padded[i*s + kr-1-a, j*s + kc-1-b]``
    """
    kr, kc = weights.shape
    oh = (padded.shape[0] - kr) // stride + 1
    ow = (padded.shape[1] - kc) // stride + 1
    out = np.zeros((oh, ow), dtype=np.result_type(padded, weights))
    for a in range(kr):
        r0 = kr - 1 - a
        for b in range(kc):
            c0 = kc - 1 - b
            w = weights[a, b]
            if w == 0:
                continue
            out += w * padded[r0:r0 + stride * (oh - 1) + 1:stride, c0:c0 + stride * (ow - 1) + 1:stride]
    return out


def maxpool_numpy(x, window, stride):
    view = np.lib.stride_tricks.sliding_window_view(x, (window, window))
    return view[::stride, ::stride].max(axis=(-2, -1))


if numba is not None:

    @numba.njit(cache=True)
    def conv_valid_numba(padded, weights, stride=1):
        kr, kc = weights.shape
        oh = (padded.shape[0] - kr) // stride + 1
        ow = (padded.shape[1] - kc) // stride + 1
        out = np.zeros((oh, ow), dtype=padded.dtype)
        for i in range(oh):
            for j in range(ow):
                acc = 0.0
                r = i * stride
                c = j * stride
                for a in range(kr):
                    for b in range(kc):
                        acc += weights[a, b] * padded[r + kr - 1 - a, c + kc - 1 - b]
                out[i, j] = acc
        return out

    @numba.njit(cache=True)
    def maxpool_numba(x, window, stride):
        oh = (x.shape[0] - window) // stride + 1
        ow = (x.shape[1] - window) // stride + 1
        out = np.empty((oh, ow), dtype=x.dtype)
        for i in range(oh):
            for j in range(ow):
                m = x[i * stride, j * stride]
                for a in range(window):
                    for b in range(window):
                        v = x[i * stride + a, j * stride + b]
                        if v > m:
                            m = v
                out[i, j] = m
        return out

else:  # pragma: no cover
    conv_valid_numba = None
    maxpool_numba = None


def conv_valid(padded, weights, stride=1):
    padded = np.ascontiguousarray(padded, dtype=np.float64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    if USE_NUMBA:
        return conv_valid_numba(padded, weights, stride)
    return conv_valid_numpy(padded, weights, stride)


def maxpool(x, window, stride):
    x = np.ascontiguousarray(x, dtype=np.float64)
    if USE_NUMBA:
        return maxpool_numba(x, window, stride)
    return maxpool_numpy(x, window, stride)
