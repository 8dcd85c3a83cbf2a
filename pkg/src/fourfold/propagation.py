"""Angular-spectrum free-space propagation."""

from __future__ import annotations

import functools
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.fft as sfft

from fourfold.errors import InvalidInputError, NumericError
from fourfold.field import ComplexField, GridSpec


@dataclass(frozen=True)
class TransferFunction:
    grid: GridSpec
    z: float
    values: np.ndarray = dc_field(repr=False)
    band_limited: bool = False


def spatial_frequencies(grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """DFT frequency lattice in cycles/m, in unshifted FFT order."""
    return sfft.fftfreq(grid.nx, grid.pitch), sfft.fftfreq(grid.ny, grid.pitch)


def band_limit_threshold(grid: GridSpec) -> float:
    """Distance beyond which the band-limited transfer function is used by default."""
    n = min(grid.nx, grid.ny)
    return n * grid.pitch**2 / grid.wavelength


def _band_limit(n: int, pitch: float, wavelength: float, z: float) -> float:
    extent = n * pitch
    return 1.0 / (wavelength * np.sqrt((2.0 * z / extent) ** 2 + 1.0))


@functools.lru_cache(maxsize=32)
def _transfer_values(grid: GridSpec, z: float, band_limit: bool) -> np.ndarray:
    fx, fy = spatial_frequencies(grid)
    lam = grid.wavelength
    # normalized direction cosines keep H(0, 0) phase exactly 2*pi*z/lam
    ax = (lam * fx) ** 2
    ay = (lam * fy) ** 2
    arg = 1.0 - ay[:, None] - ax[None, :]
    propagating = arg >= 0
    if band_limit:
        lim_x = _band_limit(grid.nx, grid.pitch, lam, z)
        lim_y = _band_limit(grid.ny, grid.pitch, lam, z)
        propagating &= (np.abs(fy)[:, None] <= lim_y) & (np.abs(fx)[None, :] <= lim_x)
    phase = (2.0 * np.pi * z / lam) * np.sqrt(np.where(propagating, arg, 0.0))
    h = np.where(propagating, np.exp(1j * phase), 0.0)
    h.setflags(write=False)
    return h


def transfer_function(grid: GridSpec, z: float, band_limit: bool | None = None) -> TransferFunction:
    """Angular-spectrum transfer function for distance ``z`` (may be negative).

    Evanescent components are set to zero. ``band_limit=None`` enables the
    local-frequency band limit only when ``|z|`` exceeds
    :func:`band_limit_threshold`.
    """
    z = float(z)
    if not np.isfinite(z):
        raise InvalidInputError(f"propagation distance must be finite, got {z}")
    if band_limit is None:
        band_limit = abs(z) > band_limit_threshold(grid)
    return TransferFunction(grid, z, _transfer_values(grid, z, bool(band_limit)), bool(band_limit))


def _next_pow2(n: int) -> int:
    return 1 << (int(n) - 1).bit_length()


def propagate(
    field: ComplexField,
    z: float,
    band_limit: bool | None = None,
    pad_factor: int = 1,
    workers: int | None = None,
) -> ComplexField:
    """Propagate ``field`` by ``z`` meters in free space.

    ``pad_factor`` > 1 zero-pads the grid to ``pad_factor`` times its size
    (a power of two) before transforming and crops back afterwards.
    """
    if pad_factor < 1 or pad_factor != _next_pow2(pad_factor):
        raise InvalidInputError(f"pad_factor must be a power of two >= 1, got {pad_factor}")
    grid = field.grid
    u = field.amplitudes
    if pad_factor > 1:
        big = GridSpec(grid.nx * pad_factor, grid.ny * pad_factor, grid.pitch, grid.wavelength)
        oy = big.ny // 2 - grid.ny // 2
        ox = big.nx // 2 - grid.nx // 2
        padded = np.zeros(big.shape, dtype=np.complex128)
        padded[oy:oy + grid.ny, ox:ox + grid.nx] = u
        out = _propagate_array(padded, big, z, band_limit, workers)
        out = out[oy:oy + grid.ny, ox:ox + grid.nx]
    else:
        out = _propagate_array(u, grid, z, band_limit, workers)
    if not np.all(np.isfinite(out)):
        raise NumericError("propagation produced non-finite samples")
    return ComplexField(grid, out)


def _propagate_array(u, grid, z, band_limit, workers):
    h = transfer_function(grid, z, band_limit).values
    return sfft.ifft2(sfft.fft2(u, workers=workers) * h, workers=workers)
