"""Thin-element masks: lenses, apertures, and two-phase checkerboard encoding."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from fourfold.errors import GamutError, GeometryError, InvalidInputError, ShapeError
from fourfold.field import ComplexField, GridSpec

# largest side length checkerboard_expand will produce
MAX_SIDE = 1 << 15

# tolerance (in samples) for aperture edge tests, absorbs float rounding
_EDGE_EPS = 1e-9


@dataclass(frozen=True)
class ElementMask:
    grid: GridSpec
    transmittance: np.ndarray = dc_field(repr=False)

    def __post_init__(self):
        t = np.asarray(self.transmittance, dtype=np.complex128)
        if t.shape != self.grid.shape:
            raise ShapeError(f"transmittance shape {t.shape} does not match grid {self.grid.shape}")
        if np.any(np.abs(t) > 1 + 1e-12):
            raise GamutError("mask transmittance exceeds 1 (not passive)")
        t = t.copy()
        t.setflags(write=False)
        object.__setattr__(self, "transmittance", t)


@dataclass(frozen=True)
class CheckerboardEncoding:
    phi1: np.ndarray = dc_field(repr=False)
    phi2: np.ndarray = dc_field(repr=False)
    target: np.ndarray = dc_field(repr=False)

    def reconstruct(self) -> np.ndarray:
        return 0.5 * (np.exp(1j * self.phi1) + np.exp(1j * self.phi2))


def _radius_sq_in_samples(grid: GridSpec) -> np.ndarray:
    ix = np.arange(grid.nx) - grid.nx // 2
    iy = np.arange(grid.ny) - grid.ny // 2
    return iy[:, None].astype(float) ** 2 + ix[None, :].astype(float) ** 2


def aperture_region(grid: GridSpec, shape: str, size: float) -> np.ndarray:
    """Boolean support of a centered circle (diameter) or square (side).

    Circles include samples with ``r <= size/2``, so a zero-size circle keeps
    the center sample. Squares are half-open, ``-size/2 <= x < size/2``, so
    a square of ``m * pitch`` covers exactly ``m`` samples per side.
    """
    if size < 0:
        raise GeometryError(f"aperture size must be non-negative, got {size}")
    if size > min(grid.width, grid.height) * (1 + 1e-12):
        raise GeometryError(
            f"aperture {size:.6g} m exceeds grid extent {min(grid.width, grid.height):.6g} m"
        )
    half = 0.5 * size / grid.pitch
    if shape == "circle":
        return _radius_sq_in_samples(grid) <= half**2 + _EDGE_EPS
    if shape == "square":
        ix = np.arange(grid.nx) - grid.nx // 2
        iy = np.arange(grid.ny) - grid.ny // 2
        inx = (ix >= -half - _EDGE_EPS) & (ix < half - _EDGE_EPS)
        iny = (iy >= -half - _EDGE_EPS) & (iy < half - _EDGE_EPS)
        return iny[:, None] & inx[None, :]
    raise InvalidInputError(f"unknown aperture shape {shape!r}")


def aperture_mask(grid: GridSpec, shape: str = "circle", size: float | None = None) -> ElementMask:
    if size is None:
        size = min(grid.width, grid.height)
    return ElementMask(grid, aperture_region(grid, shape, size).astype(np.complex128))


def lens_phase(grid: GridSpec, focal_length: float, model: str = "hyperbolic", wavelength: float | None = None):
    """Lens phase in radians on the grid (no aperture applied)."""
    lam = grid.wavelength if wavelength is None else wavelength
    x, y = grid.coords()
    r2 = y[:, None] ** 2 + x[None, :] ** 2
    if model == "paraxial":
        return -np.pi * r2 / (lam * focal_length)
    if model == "hyperbolic":
        f = focal_length
        # sqrt(r2 + f^2) - f written to avoid cancellation near the axis
        sag = r2 / (np.sqrt(r2 + f * f) + abs(f))
        return -(2 * np.pi / lam) * np.sign(f) * sag
    raise InvalidInputError(f"unknown lens model {model!r}")


def lens_mask(
    grid: GridSpec,
    focal_length: float,
    model: str = "hyperbolic",
    aperture_diameter: float | None = None,
    aperture: str = "circle",
    wavelength: float | None = None,
) -> ElementMask:
    """Thin lens of focal length ``focal_length`` behind a hard aperture.

    ``wavelength`` is the design wavelength; it defaults to the grid's.
    """
    if focal_length == 0 or not np.isfinite(focal_length):
        raise InvalidInputError("focal length must be finite and non-zero")
    if aperture_diameter is None:
        aperture_diameter = min(grid.width, grid.height)
    support = aperture_region(grid, aperture, aperture_diameter)
    phase = lens_phase(grid, focal_length, model, wavelength)
    return ElementMask(grid, np.where(support, np.exp(1j * phase), 0.0))


def apply_element(field: ComplexField, mask: ElementMask) -> ComplexField:
    if not field.grid.same_sampling(mask.grid):
        raise ShapeError(
            f"mask grid {mask.grid.nx}x{mask.grid.ny}@{mask.grid.pitch:g} does not match "
            f"field grid {field.grid.nx}x{field.grid.ny}@{field.grid.pitch:g}"
        )
    return ComplexField(field.grid, field.amplitudes * mask.transmittance)


def checkerboard_phases(target) -> CheckerboardEncoding:
    """Split each complex value into two unit phasors whose mean is the value.

    Phases are wrapped to (-pi, pi]; ``arg(0)`` is taken as 0.
    """
    t = np.atleast_2d(np.asarray(target, dtype=np.complex128))
    mag = np.abs(t)
    if np.any(mag > 1 + 1e-12):
        raise GamutError(f"|target| up to {mag.max():.6g} is outside the unit disk")
    theta = np.arccos(np.minimum(mag, 1.0))
    arg = np.angle(t)
    phi1 = np.angle(np.exp(1j * (arg + theta)))
    phi2 = np.angle(np.exp(1j * (arg - theta)))
    return CheckerboardEncoding(phi1, phi2, t)


def checkerboard_expand(
    encoding: CheckerboardEncoding,
    subpixel_factor: int = 2,
    pitch: float = 2.5e-6,
    wavelength: float = 532e-9,
) -> ElementMask:
    """Expand each logical pixel into a ``factor x factor`` two-phase checkerboard.

    ``pitch`` is the logical pixel pitch; the returned mask samples at
    ``pitch / subpixel_factor``.
    """
    f = int(subpixel_factor)
    if f != subpixel_factor or f < 2 or f % 2:
        raise InvalidInputError(f"subpixel_factor must be an even integer >= 2, got {subpixel_factor}")
    ny, nx = encoding.phi1.shape
    if ny * f > MAX_SIDE or nx * f > MAX_SIDE:
        raise GeometryError(f"expanded mask {ny * f}x{nx * f} exceeds {MAX_SIDE} samples per side")
    parity = (np.add.outer(np.arange(f), np.arange(f)) % 2).astype(bool)
    p1 = np.kron(np.exp(1j * encoding.phi1), np.ones((f, f)))
    p2 = np.kron(np.exp(1j * encoding.phi2), np.ones((f, f)))
    second = np.tile(parity, (ny, nx))
    t = np.where(second, p2, p1)
    grid = GridSpec(max(nx * f, 2), max(ny * f, 2), pitch / f, wavelength)
    return ElementMask(grid, t)
