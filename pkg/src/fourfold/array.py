"""Correlator tile arrays: layout, crosstalk, and full optical layers."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np

from fourfold.correlator import (
    CorrelatorSpec,
    FourierMask,
    detect,
    kernel_to_fourier_mask,
    run_4f,
)
from fourfold.errors import GeometryError, InvalidInputError
from fourfold.field import GridSpec, embed, field_from_image, total_power
from fourfold.propagation import _next_pow2

CHANNEL_POLICY = "detect-then-sum"


@dataclass(frozen=True)
class ArrayLayout:
    n_kernels: int
    n_channels: int
    tile_size: float
    rows: int
    cols: int

    @property
    def n_tiles(self) -> int:
        return self.n_kernels * self.n_channels

    @property
    def total_area(self) -> float:
        """Area of the ``rows x cols`` tile grid in m^2."""
        return self.rows * self.cols * self.tile_size**2

    @property
    def occupied_area(self) -> float:
        """Area of the tiles actually carrying a correlator, in m^2."""
        return self.n_tiles * self.tile_size**2

    @property
    def total_area_cm2(self) -> float:
        return self.total_area * 1e4

    def tile_index(self, channel: int, kernel: int) -> tuple[int, int]:
        """(row, col) of a correlator; tiles are packed row-major by (channel, kernel)."""
        i = channel * self.n_kernels + kernel
        return divmod(i, self.cols)


def layout_array(n_kernels: int, n_channels: int = 1, tile_size: float = 0.57e-3) -> ArrayLayout:
    if n_kernels < 1 or n_channels < 1:
        raise InvalidInputError("kernel and channel counts must be >= 1")
    if not tile_size > 0:
        raise InvalidInputError(f"tile size must be positive, got {tile_size}")
    n = n_kernels * n_channels
    cols = math.ceil(math.sqrt(n))
    rows = math.ceil(n / cols)
    return ArrayLayout(n_kernels, n_channels, tile_size, rows, cols)


@dataclass(frozen=True)
class CrosstalkReport:
    fraction: float
    # power fractions of the 8 neighbours, row-major around the centre tile
    per_tile: tuple[float, ...]
    injected_power: float
    center_fraction: float


def crosstalk_report(
    spec: CorrelatorSpec,
    obj,
    kernel,
    tile_size: float | None = None,
    workers=None,
) -> CrosstalkReport:
    """Simulate one correlator in the middle of a 3x3 block of empty tiles.

    The grid spans exactly three tiles per side. Lenses and the filter mask
    exist only inside the centre tile; everything else absorbs. At the
    default sampling no ray can travel far enough to wrap around the
    periodic grid, so no guard band is added.
    """
    tile = spec.lens_diameter if tile_size is None else tile_size
    if tile < spec.lens_diameter * (1 - 1e-12):
        raise GeometryError("tile must be at least as large as the lens")
    m = int(round(tile / spec.pitch))
    if abs(m * spec.pitch - tile) > 1e-6 * tile:
        raise GeometryError(f"tile size {tile} is not a whole number of {spec.pitch} pixels")
    img = np.asarray(obj, dtype=np.float64)
    if img.ndim != 2 or img.shape[0] > m or img.shape[1] > m:
        raise GeometryError(f"object {img.shape} does not fit inside a {m}x{m} tile")
    n = 3 * m
    grid = GridSpec(n, n, spec.pitch, spec.wavelength)
    u, _ = embed(img, grid.shape)
    src = field_from_image(u, spec.pitch, spec.wavelength)
    p_in = total_power(src)
    if p_in == 0:
        return CrosstalkReport(0.0, (0.0,) * 8, 0.0, 0.0)
    fmask = kernel_to_fourier_mask(kernel, spec, grid)
    out = run_4f(src, fmask, spec, workers=workers)
    power = np.abs(out.amplitudes) ** 2 * spec.pitch**2
    # the centre tile is the one containing the optical axis sample n // 2
    c0 = n // 2 - m // 2
    bounds = [(c0 - m, c0), (c0, c0 + m), (c0 + m, c0 + 2 * m)]
    tiles = []
    for r0, r1 in bounds:
        for q0, q1 in bounds:
            tiles.append(_wrapped_sum(power, r0, r1, q0, q1) / p_in)
    center = tiles.pop(4)
    return CrosstalkReport(float(sum(tiles)), tuple(float(t) for t in tiles), p_in, float(center))


def _wrapped_sum(a, r0, r1, c0, c1):
    rows = np.arange(r0, r1) % a.shape[0]
    cols = np.arange(c0, c1) % a.shape[1]
    return float(a[np.ix_(rows, cols)].sum())


def crosstalk_fraction(spec: CorrelatorSpec, obj, kernel, tile_size: float | None = None) -> float:
    """Fraction of injected power that reaches the 8 neighbouring output tiles."""
    return crosstalk_report(spec, obj, kernel, tile_size).fraction


def default_grid_size(image_shape, spec: CorrelatorSpec) -> int:
    """Power-of-two simulation grid: 4x the image and 2x the lens aperture."""
    side = max(image_shape)
    return _next_pow2(max(4 * side, 2 * spec.aperture_samples, 8))


def optical_convolution(
    image,
    kernel,
    spec: CorrelatorSpec,
    grid_size: int | None = None,
    detector_scale: float = 1.0,
    propagation_wavelength: float | None = None,
    workers=None,
) -> tuple[np.ndarray, FourierMask]:
    """Detected 4f output for one image and kernel, cropped to the image size.

    The map is multiplied by ``fmask.scale ** 2`` so that, for a well
    sampled object, it approximates ``detector_scale * conv(image, kernel)**2``.
    """
    img = np.asarray(image, dtype=np.float64)
    n = default_grid_size(img.shape, spec) if grid_size is None else int(grid_size)
    if n < max(img.shape):
        raise GeometryError(f"grid size {n} is smaller than the image {img.shape}")
    lam = spec.wavelength if propagation_wavelength is None else propagation_wavelength
    grid = GridSpec(n, n, spec.pitch, lam)
    padded, (oy, ox) = embed(img, grid.shape)
    fmask = kernel_to_fourier_mask(kernel, spec, grid)
    out = run_4f(field_from_image(padded, spec.pitch, lam), fmask, spec, workers=workers)
    det = detect(out, detector_scale * fmask.scale**2)
    h, w = img.shape
    return det[oy:oy + h, ox:ox + w], fmask


@dataclass(frozen=True)
class LayerOutput:
    maps: list = dc_field(repr=False)
    channel_policy: str = CHANNEL_POLICY
    # scale_factors[c][j] is the mask normalization of kernel j on channel c
    scale_factors: list = dc_field(default_factory=list)
    grid_size: int = 0
    specs: tuple = ()


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        env = os.environ.get("FOURFOLD_THREADS")
        if env:
            try:
                threads = int(env)
            except ValueError:
                raise InvalidInputError(f"FOURFOLD_THREADS must be an integer, got {env!r}") from None
        else:
            threads = os.cpu_count() or 1
    if threads < 1:
        raise InvalidInputError(f"thread count must be >= 1, got {threads}")
    return threads


def run_layer(
    channels,
    kernels,
    spec_per_channel,
    detector_scale: float = 1.0,
    grid_size: int | None = None,
    threads: int | None = None,
) -> LayerOutput:
    """Run every (channel, kernel) correlator and sum intensities over channels.

    ``kernels[c][j]`` is kernel ``j`` for channel ``c``. Distinct-wavelength
    channels cannot interfere, so each channel is squared at its own
    detector and the intensities are added afterwards.
    """
    chans = [np.asarray(c, dtype=np.float64) for c in channels]
    if not chans:
        raise InvalidInputError("at least one channel is required")
    if any(c.shape != chans[0].shape for c in chans):
        raise InvalidInputError("all channel images must have the same shape")
    if len(kernels) != len(chans):
        raise InvalidInputError(f"{len(kernels)} kernel lists for {len(chans)} channels")
    n_k = len(kernels[0])
    if n_k == 0:
        raise InvalidInputError("at least one kernel is required")
    if any(len(ks) != n_k for ks in kernels):
        raise InvalidInputError("kernel lists must have equal length across channels")
    if isinstance(spec_per_channel, CorrelatorSpec):
        specs = [spec_per_channel] * len(chans)
    else:
        specs = list(spec_per_channel)
    if len(specs) != len(chans):
        raise InvalidInputError(f"{len(specs)} correlator specs for {len(chans)} channels")
    n = grid_size
    if n is None:
        n = max(default_grid_size(chans[0].shape, s) for s in specs)

    jobs = [(c, j) for c in range(len(chans)) for j in range(n_k)]

    def work(job):
        c, j = job
        return optical_convolution(chans[c], kernels[c][j], specs[c], n, detector_scale)

    workers = resolve_threads(threads)
    if workers == 1:
        results = [work(job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, jobs))

    by_job = dict(zip(jobs, results))
    maps = []
    for j in range(n_k):
        acc = np.zeros(chans[0].shape)
        # fixed ascending channel order keeps the sum independent of scheduling
        for c in range(len(chans)):
            acc = acc + by_job[(c, j)][0]
        maps.append(acc)
    scales = [[by_job[(c, j)][1].scale for j in range(n_k)] for c in range(len(chans))]
    return LayerOutput(maps, CHANNEL_POLICY, scales, n, tuple(specs))


def layer_kernels_from_flat(flat, n_channels):
    """Regroup a flat kernel list ordered (kernel, channel) into ``kernels[c][j]``."""
    if n_channels < 1 or len(flat) % n_channels:
        raise InvalidInputError(f"{len(flat)} kernels cannot be split over {n_channels} channels")
    n_k = len(flat) // n_channels
    return [[flat[j * n_channels + c] for j in range(n_k)] for c in range(n_channels)]

