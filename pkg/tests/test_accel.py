import os
import subprocess
import sys

import numpy as np
import pytest

from fourfold import _accel

needs_numba = pytest.mark.skipif(_accel.conv_valid_numba is None, reason="numba not installed")


@needs_numba
@pytest.mark.parametrize("stride", [1, 2, 4])
@pytest.mark.parametrize("k", [(1, 1), (3, 3), (5, 2), (11, 11)])
def test_conv_paths_agree(rng, stride, k):
    padded = rng.standard_normal((40, 37))
    w = rng.standard_normal(k)
    a = _accel.conv_valid_numba(padded, w, stride)
    b = _accel.conv_valid_numpy(padded, w, stride)
    assert a.shape == b.shape
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)


@needs_numba
@pytest.mark.parametrize("window, stride", [(1, 1), (2, 2), (3, 2), (3, 1)])
def test_maxpool_paths_agree(rng, window, stride):
    x = rng.standard_normal((21, 18))
    np.testing.assert_array_equal(_accel.maxpool_numba(x, window, stride), _accel.maxpool_numpy(x, window, stride))


def test_conv_numpy_hand_example():
    padded = np.arange(16, dtype=float).reshape(4, 4)
    w = np.array([[1.0, 0.0], [0.0, 0.0]])
    # the flipped kernel's 1 sits at the bottom-right tap
    np.testing.assert_array_equal(_accel.conv_valid_numpy(padded, w), padded[1:, 1:])


def _probe(env_value):
    env = dict(os.environ)
    env.pop("FOURFOLD_NO_NUMBA", None)
    if env_value is not None:
        env["FOURFOLD_NO_NUMBA"] = env_value
    out = subprocess.run(
        [sys.executable, "-c", "from fourfold import _accel; print(_accel.USE_NUMBA)"],
        env=env, capture_output=True, text=True, check=True,
    )
    return out.stdout.strip()


def test_env_flag_selects_numpy_path():
    assert _probe("1") == "False"
    assert _probe("yes") == "False"


@needs_numba
def test_numba_is_default():
    assert _probe(None) == "True"
