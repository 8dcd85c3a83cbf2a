"""Sampled scalar complex fields on a uniform grid."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from fourfold.errors import InvalidInputError, NumericError, ShapeError

DEFAULT_PITCH = 2.5e-6
RGB_WAVELENGTHS = {"red": 632e-9, "green": 532e-9, "blue": 442e-9}


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GridSpec:
    """Sample counts, pitch and wavelength of a square-pixel grid.

    Arrays living on this grid have shape ``(ny, nx)``; y is the outer
    (row) index. Physical coordinates are measured from the center sample
    at ``(ny // 2, nx // 2)``.
    """

    nx: int
    ny: int
    pitch: float = DEFAULT_PITCH
    wavelength: float = RGB_WAVELENGTHS["green"]

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise InvalidInputError("sample counts must be integers")
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))
        if self.nx < 2 or self.ny < 2:
            raise InvalidInputError(f"grid must be at least 2x2, got {self.nx}x{self.ny}")
        if not (np.isfinite(self.pitch) and self.pitch > 0):
            raise InvalidInputError(f"pitch must be positive, got {self.pitch}")
        if not (np.isfinite(self.wavelength) and self.wavelength > 0):
            raise InvalidInputError(f"wavelength must be positive, got {self.wavelength}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def width(self) -> float:
        return self.nx * self.pitch

    @property
    def height(self) -> float:
        return self.ny * self.pitch

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """1D sample positions (x, y) in meters, zero at the center sample."""
        x = (np.arange(self.nx) - self.nx // 2) * self.pitch
        y = (np.arange(self.ny) - self.ny // 2) * self.pitch
        return x, y

    def with_wavelength(self, wavelength: float) -> GridSpec:
        return GridSpec(self.nx, self.ny, self.pitch, wavelength)

    def same_sampling(self, other: GridSpec) -> bool:
        return self.nx == other.nx and self.ny == other.ny and np.isclose(self.pitch, other.pitch, rtol=1e-12, atol=0)


@dataclass(frozen=True)
class ComplexField:
    grid: GridSpec
    amplitudes: np.ndarray = dc_field(repr=False)

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=np.complex128)
        if a.shape != self.grid.shape:
            raise ShapeError(f"amplitudes shape {a.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(a)):
            raise NumericError("field contains non-finite samples")
        object.__setattr__(self, "amplitudes", _frozen(a))

    def replace(self, amplitudes: np.ndarray) -> ComplexField:
        return ComplexField(self.grid, amplitudes)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.amplitudes, dtype=dtype)


def field_from_image(
    pixels,
    pitch: float = DEFAULT_PITCH,
    wavelength: float = RGB_WAVELENGTHS["green"],
    encoding: str = "amplitude",
) -> ComplexField:
    """Inject a [0, 1] image as a zero-phase field.

    ``encoding="amplitude"`` uses the pixel value as field amplitude;
    ``"intensity"`` uses its square root so that ``|E|^2`` is the image.
    """
    img = np.asarray(pixels, dtype=np.float64)
    if img.ndim != 2 or img.size == 0:
        raise InvalidInputError(f"expected a non-empty 2D image, got shape {img.shape}")
    if not np.all(np.isfinite(img)):
        raise InvalidInputError("image contains non-finite pixels")
    if img.min() < 0 or img.max() > 1:
        raise InvalidInputError(f"pixel values must lie in [0, 1], got [{img.min()}, {img.max()}]")
    if encoding == "amplitude":
        amp = img
    elif encoding == "intensity":
        amp = np.sqrt(img)
    else:
        raise InvalidInputError(f"unknown encoding {encoding!r}")
    grid = GridSpec(img.shape[1], img.shape[0], pitch, wavelength)
    return ComplexField(grid, amp.astype(np.complex128))


def intensity(field: ComplexField, scale: float = 1.0) -> np.ndarray:
    """``scale * |E|^2``. ``scale`` is the detector's responsivity constant."""
    if not scale > 0:
        raise InvalidInputError(f"scale must be positive, got {scale}")
    a = field.amplitudes
    if not np.all(np.isfinite(a)):
        raise NumericError("field contains non-finite samples")
    return scale * (a.real**2 + a.imag**2)


def total_power(field: ComplexField) -> float:
    a = field.amplitudes
    return float(np.sum(a.real**2 + a.imag**2) * field.grid.pitch**2)


def embed(image: np.ndarray, shape: tuple[int, int]) -> tuple[np.ndarray, tuple[int, int]]:
    """Center ``image`` inside a zero array of ``shape``; return array and offset."""
    h, w = image.shape
    ny, nx = shape
    if h > ny or w > nx:
        raise ShapeError(f"image {image.shape} does not fit in {shape}")
    oy = ny // 2 - h // 2
    ox = nx // 2 - w // 2
    out = np.zeros(shape, dtype=image.dtype)
    out[oy:oy + h, ox:ox + w] = image
    return out, (oy, ox)
