"""Time the numba and numpy paths of the direct-convolution and max-pool kernels.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--size 227]

The first numba call includes JIT compilation (or a cache load) and is
reported separately.
"""

import argparse
import time

import numpy as np

from fourfold import _accel


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--size", type=int, default=227)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    n = args.size
    cases = [
        ("conv 11x11 s1", _accel.conv_valid_numba, _accel.conv_valid_numpy, (rng.random((n + 10, n + 10)), rng.random((11, 11)), 1)),
        ("conv 11x11 s4", _accel.conv_valid_numba, _accel.conv_valid_numpy, (rng.random((n, n)), rng.random((11, 11)), 4)),
        ("conv 3x3 s1", _accel.conv_valid_numba, _accel.conv_valid_numpy, (rng.random((n + 2, n + 2)), rng.random((3, 3)), 1)),
        ("maxpool 3/2", _accel.maxpool_numba, _accel.maxpool_numpy, (rng.random((n, n)), 3, 2)),
    ]
    if _accel.conv_valid_numba is None:
        print("numba is not installed; only the numpy path is timed")
    print(f"{'kernel':<16}{'numpy ms':>12}{'numba ms':>12}{'first call ms':>16}{'speedup':>10}")
    for name, fast, slow, argv in cases:
        t_np = best_of(lambda: slow(*argv), args.repeat) * 1e3
        if fast is None:
            print(f"{name:<16}{t_np:>12.3f}")
            continue
        t0 = time.perf_counter()
        a = fast(*argv)
        first = (time.perf_counter() - t0) * 1e3
        np.testing.assert_allclose(a, slow(*argv), rtol=1e-10, atol=1e-10)
        t_nb = best_of(lambda: fast(*argv), args.repeat) * 1e3
        print(f"{name:<16}{t_np:>12.3f}{t_nb:>12.3f}{first:>16.1f}{t_np / t_nb:>10.1f}x")


if __name__ == "__main__":
    main()
