import numpy as np
import pytest

from fourfold import ComplexField, GridSpec, total_power
from fourfold.errors import InvalidInputError
from fourfold.propagation import propagate, spatial_frequencies, transfer_function


def gaussian_field(grid, w0):
    x, y = grid.coords()
    r2 = y[:, None] ** 2 + x[None, :] ** 2
    return ComplexField(grid, np.exp(-r2 / w0**2))


def beam_radius(field):
    """1/e^2 radius from the second moment of intensity: w^2 = 2 <r^2>."""
    x, y = field.grid.coords()
    r2 = y[:, None] ** 2 + x[None, :] ** 2
    i = np.abs(field.amplitudes) ** 2
    return np.sqrt(2 * np.sum(r2 * i) / np.sum(i))


def test_frequency_lattice_examples():
    fx, _ = spatial_frequencies(GridSpec(4, 4, 1.0))
    np.testing.assert_array_equal(fx, [0, 0.25, -0.5, -0.25])
    fx, _ = spatial_frequencies(GridSpec(2, 2, 0.5))
    np.testing.assert_array_equal(fx, [0, -1])
    fx, fy = spatial_frequencies(GridSpec(16, 10, 2e-6))
    assert np.abs(fx).max() == pytest.approx(1 / (2 * 2e-6))
    assert np.abs(fy).max() == pytest.approx(1 / (2 * 2e-6))


def test_transfer_function_zero_distance_is_one_where_propagating():
    h = transfer_function(GridSpec(32, 32, 0.2e-6, 0.5e-6), 0.0).values
    prop = h != 0
    assert np.all(h[prop] == 1)
    assert not prop.all()  # pitch below lambda/2 has evanescent samples


def test_transfer_function_dc_phase():
    h = transfer_function(GridSpec(8, 8, 1e-6, 500e-9), 1e-3).values
    assert h[0, 0] == pytest.approx(1.0, abs=1e-9)
    z = 1.234567e-3
    lam = 633e-9
    h = transfer_function(GridSpec(8, 8, 1e-6, lam), z).values
    assert h[0, 0] == np.exp(1j * 2 * np.pi * z / lam)


def test_evanescent_cutoff():
    lam = 500e-9
    grid = GridSpec(64, 64, 0.2e-6, lam)
    fx, fy = spatial_frequencies(grid)
    h = transfer_function(grid, 1e-6).values
    ev = (fx[None, :] ** 2 + fy[:, None] ** 2) > 1 / lam**2
    assert ev.any()
    assert np.all(h[ev] == 0)
    assert np.all(np.abs(h) <= 1 + 1e-15)


def test_band_limit_auto_switch():
    grid = GridSpec(256, 256, 2.5e-6, 532e-9)
    assert not transfer_function(grid, 3e-3).band_limited
    assert transfer_function(grid, 15e-3).band_limited
    assert not transfer_function(grid, 15e-3, band_limit=False).band_limited


def test_plane_wave_is_eigenfunction():
    lam, z = 532e-9, 2.7e-3
    grid = GridSpec(32, 24, 2.5e-6, lam)
    out = propagate(ComplexField(grid, np.ones(grid.shape)), z)
    np.testing.assert_allclose(out.amplitudes, np.exp(1j * 2 * np.pi * z / lam), atol=1e-12)
    assert total_power(out) == pytest.approx(grid.nx * grid.ny * grid.pitch**2, rel=1e-9)


def test_zero_distance_identity(rng):
    grid = GridSpec(40, 40, 1e-6)
    a = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    out = propagate(ComplexField(grid, a), 0.0)
    assert np.linalg.norm(out.amplitudes - a) / np.linalg.norm(a) <= 1e-12


def test_gaussian_beam_radius_at_rayleigh_range():
    # analytic oracle: w(z) = w0 sqrt(1 + (z / zR)^2)
    w0, lam = 50e-6, 532e-9
    grid = GridSpec(256, 256, 2.5e-6, lam)
    zr = np.pi * w0**2 / lam
    f0 = gaussian_field(grid, w0)
    out = propagate(f0, zr)
    x, y = grid.coords()
    i = np.abs(out.amplitudes) ** 2
    edge = i.sum() - i[16:-16, 16:-16].sum()
    assert edge / i.sum() < 1e-6
    assert beam_radius(f0) == pytest.approx(w0, rel=1e-6)
    assert beam_radius(out) == pytest.approx(w0 * np.sqrt(2), rel=0.01)


def test_power_conservation_and_inversion():
    grid = GridSpec(128, 128, 2.5e-6, 532e-9)
    f0 = gaussian_field(grid, 30e-6)
    out = propagate(f0, 3e-3)
    assert abs(total_power(out) / total_power(f0) - 1) <= 1e-9
    back = propagate(out, -3e-3)
    err = np.linalg.norm(back.amplitudes - f0.amplitudes) / np.linalg.norm(f0.amplitudes)
    assert err <= 1e-9


def test_composition():
    grid = GridSpec(128, 128, 2.5e-6, 532e-9)
    f0 = gaussian_field(grid, 25e-6)
    a = propagate(propagate(f0, 1e-3), 0.7e-3)
    b = propagate(f0, 1.7e-3)
    assert np.linalg.norm(a.amplitudes - b.amplitudes) / np.linalg.norm(b.amplitudes) <= 1e-9


def test_padding_matches_unpadded_for_contained_beam():
    grid = GridSpec(128, 128, 2.5e-6, 532e-9)
    f0 = gaussian_field(grid, 25e-6)
    a = propagate(f0, 1e-3)
    b = propagate(f0, 1e-3, pad_factor=2)
    assert np.linalg.norm(a.amplitudes - b.amplitudes) / np.linalg.norm(a.amplitudes) < 1e-6
    with pytest.raises(InvalidInputError):
        propagate(f0, 1e-3, pad_factor=3)


def test_non_finite_distance_rejected():
    with pytest.raises(InvalidInputError):
        transfer_function(GridSpec(4, 4), np.inf)
