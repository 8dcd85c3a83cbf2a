"""Single 4f correlator: kernel-to-mask compilation, split-step execution, detection.

The ideal digital convolution used as the independent oracle also lives
here (:func:`ideal_convolve`).
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from fourfold import _accel
from fourfold.elements import ElementMask, aperture_region, lens_mask
from fourfold.errors import DegenerateKernelError, GeometryError, InvalidInputError, NumericError, ShapeError
from fourfold.field import ComplexField, GridSpec, intensity
from fourfold.propagation import propagate


@dataclass(frozen=True)
class CorrelatorSpec:
    """Geometry of one 4f correlator. Defaults are the metasurface design values.

    ``aperture="square"`` models lenslets that fill their tile edge to edge,
    as in a densely packed array; ``"circle"`` gives round lenses of the
    same width.
    """

    focal_length: float = 3e-3
    lens_diameter: float = 0.57e-3
    pitch: float = 2.5e-6
    wavelength: float = 532e-9
    lens_model: str = "hyperbolic"
    aperture: str = "square"

    def __post_init__(self):
        for name in ("focal_length", "lens_diameter", "pitch", "wavelength"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise InvalidInputError(f"{name} must be positive, got {v}")
        if self.lens_model not in ("paraxial", "hyperbolic"):
            raise InvalidInputError(f"unknown lens model {self.lens_model!r}")
        if self.aperture not in ("circle", "square"):
            raise InvalidInputError(f"unknown aperture shape {self.aperture!r}")

    def with_wavelength(self, wavelength: float) -> CorrelatorSpec:
        return CorrelatorSpec(
            self.focal_length, self.lens_diameter, self.pitch, wavelength, self.lens_model, self.aperture
        )

    @property
    def aperture_samples(self) -> int:
        return int(np.ceil(self.lens_diameter / self.pitch - 1e-9))


@dataclass(frozen=True)
class Kernel:
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        if w.ndim == 1:
            w = w[None, :]
        if w.ndim != 2 or w.size == 0:
            raise InvalidInputError(f"kernel must be a non-empty 2D array, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise InvalidInputError("kernel weights must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def shape(self) -> tuple[int, int]:
        return self.weights.shape

    def __hash__(self):
        return hash((self.weights.shape, self.weights.tobytes()))

    def __eq__(self, other):
        return isinstance(other, Kernel) and np.array_equal(self.weights, other.weights)


@dataclass(frozen=True)
class FourierMask:
    mask: ElementMask
    scale: float
    kernel: Kernel
    spec: CorrelatorSpec


def _as_kernel(kernel) -> Kernel:
    return kernel if isinstance(kernel, Kernel) else Kernel(kernel)


def kernel_offsets(n: int) -> np.ndarray:
    """Tap offsets relative to the kernel center, which sits at index ``n // 2``."""
    return np.arange(n) - n // 2


def kernel_spectrum(kernel, fx, fy, pitch: float) -> np.ndarray:
    """Discrete-space Fourier transform of the kernel, sampled on ``fy x fx``.

    Evaluated by direct summation over taps, factored into two small
    matrix products since the exponential separates in x and y.
    """
    w = _as_kernel(kernel).weights
    kr, kc = w.shape
    ex = np.exp(-2j * np.pi * pitch * np.outer(np.asarray(fx, dtype=float), kernel_offsets(kc)))
    ey = np.exp(-2j * np.pi * pitch * np.outer(np.asarray(fy, dtype=float), kernel_offsets(kr)))
    return ey @ w @ ex.T


def kernel_to_fourier_mask(kernel, spec: CorrelatorSpec, grid: GridSpec) -> FourierMask:
    """Compile a spatial kernel into the filter-plane transmittance.

    The mask sample at physical position (x, y) carries the kernel spectrum
    at (x, y) / (lambda f), normalized so the largest magnitude inside the
    aperture is 1. ``scale`` holds that normalization.
    """
    kernel = _as_kernel(kernel)
    if not np.isclose(grid.pitch, spec.pitch, rtol=1e-9, atol=0):
        raise ShapeError(f"grid pitch {grid.pitch} does not match correlator pitch {spec.pitch}")
    if not np.any(kernel.weights):
        raise DegenerateKernelError("degenerate kernel: all weights are zero")
    lam_f = spec.wavelength * spec.focal_length
    x, y = grid.coords()
    support = aperture_region(grid, spec.aperture, spec.lens_diameter)
    raw = kernel_spectrum(kernel, x / lam_f, y / lam_f, spec.pitch)
    raw = np.where(support, raw, 0.0)
    scale = float(np.abs(raw).max())
    if not scale > 0:
        raise DegenerateKernelError("degenerate kernel: spectrum vanishes inside the aperture")
    mask = ElementMask(grid.with_wavelength(spec.wavelength), raw / scale)
    return FourierMask(mask, scale, kernel, spec)


@functools.lru_cache(maxsize=16)
def _lens(grid: GridSpec, spec: CorrelatorSpec) -> np.ndarray:
    return lens_mask(
        grid, spec.focal_length, spec.lens_model, spec.lens_diameter, spec.aperture, spec.wavelength
    ).transmittance


def run_4f(field: ComplexField, fmask: FourierMask, spec: CorrelatorSpec | None = None, workers=None) -> ComplexField:
    """Split-step simulation of lens, filter, lens with ``f`` spacing.

    Light propagates at the input field's wavelength; lenses are designed for
    ``spec.wavelength``. The output plane holds the 180-degree rotated
    convolution of the input with the kernel (up to a global phase).
    """
    spec = fmask.spec if spec is None else spec
    grid = field.grid
    if not np.isclose(grid.pitch, spec.pitch, rtol=1e-9, atol=0):
        raise ShapeError(f"field pitch {grid.pitch} does not match correlator pitch {spec.pitch}")
    if not grid.same_sampling(fmask.mask.grid):
        raise ShapeError("Fourier mask was built for a different grid")
    if spec.lens_diameter > min(grid.width, grid.height) * (1 + 1e-12):
        raise GeometryError("lens aperture exceeds the simulation grid")
    f = spec.focal_length
    lens = _lens(GridSpec(grid.nx, grid.ny, grid.pitch, spec.wavelength), spec)
    u = propagate(field, f, workers=workers)
    u = propagate(u.replace(u.amplitudes * lens), f, workers=workers)
    u = propagate(u.replace(u.amplitudes * fmask.mask.transmittance), f, workers=workers)
    return propagate(u.replace(u.amplitudes * lens), f, workers=workers)


def rotate_about_center(a: np.ndarray) -> np.ndarray:
    """Point reflection ``i -> 2*(n//2) - i`` (mod n) about the grid center sample."""
    out = a[::-1, ::-1]
    shift = tuple(2 * (n // 2) - (n - 1) for n in a.shape)
    return np.roll(out, shift, axis=(0, 1))


def bin_sum(a: np.ndarray, factor: int) -> np.ndarray:
    ny, nx = a.shape
    if ny % factor or nx % factor:
        raise GeometryError(f"grid {nx}x{ny} is not divisible by binning factor {factor}")
    return a.reshape(ny // factor, factor, nx // factor, factor).sum(axis=(1, 3))


def detect(field: ComplexField, scale: float = 1.0, sensor_pitch: float | None = None) -> np.ndarray:
    """Square-law detection, un-rotated and box-binned to the sensor pitch.

    The 180-degree rotation is undone on the simulation grid (about its
    center sample) before binning, so the map comes out upright.
    """
    pitch = field.grid.pitch
    if sensor_pitch is None:
        sensor_pitch = pitch
    ratio = sensor_pitch / pitch
    factor = int(round(ratio))
    if factor < 1 or abs(ratio - factor) > 1e-9 * ratio:
        raise GeometryError(f"sensor pitch {sensor_pitch} is not an integer multiple of {pitch}")
    img = rotate_about_center(intensity(field, scale))
    if factor > 1:
        img = bin_sum(img, factor)
    if not np.all(np.isfinite(img)):
        raise NumericError("detected intensity is not finite")
    return img


def _same_padding(image: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    kr, kc = shape
    cr, cc = kr // 2, kc // 2
    return np.pad(image, ((kr - 1 - cr, cr), (kc - 1 - cc, cc)))


def ideal_convolve(image, kernel) -> np.ndarray:
    """Brute-force stride-1 convolution, zero padded, same-size output.

    ``out[i, j] = sum_ab w[a, b] * img[i - (a - kr//2), j - (b - kc//2)]``,
    evaluated tap by tap without any transform.
    """
    img = np.asarray(image, dtype=np.float64)
    w = _as_kernel(kernel).weights
    if img.ndim != 2:
        raise InvalidInputError(f"image must be 2D, got shape {img.shape}")
    if not np.all(np.isfinite(img)):
        raise InvalidInputError("image must be finite")
    return _accel.conv_valid(_same_padding(img, w.shape), w, 1)
