import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq
from scipy.special import j1

from fourfold import ComplexField, GridSpec, total_power
from fourfold.elements import (
    ElementMask,
    aperture_mask,
    apply_element,
    checkerboard_expand,
    checkerboard_phases,
    lens_mask,
    lens_phase,
)
from fourfold.errors import GamutError, GeometryError, InvalidInputError, ShapeError
from fourfold.propagation import propagate

F, D, LAM = 3e-3, 0.57e-3, 532e-9


def airy_fwhm(lam, f, d):
    """Full width at half maximum of (2 J1(v)/v)^2, v = pi d r / (lam f)."""
    v = brentq(lambda v: (2 * j1(v) / v) ** 2 - 0.5, 0.5, 3.0)
    return 2 * v * lam * f / (np.pi * d)


def interpolate_row(field, xs):
    """Band-limited (DFT) interpolation of the field along y = 0 at positions xs."""
    g = field.grid
    spec = np.fft.fft2(field.amplitudes)
    fx = np.fft.fftfreq(g.nx, g.pitch)
    fy = np.fft.fftfreq(g.ny, g.pitch)
    # row through the center sample: sum over fy with phase of y = 0
    y0 = (g.ny // 2) * g.pitch
    col = (spec * np.exp(2j * np.pi * fy * y0)[:, None]).sum(axis=0) / g.ny
    x0 = (g.nx // 2) * g.pitch
    return np.exp(2j * np.pi * np.outer(xs + x0, fx)) @ col / g.nx


def fwhm(xs, profile):
    half = profile.max() / 2
    above = np.nonzero(profile >= half)[0]
    i0, i1 = above[0], above[-1]
    left = np.interp(half, [profile[i0 - 1], profile[i0]], [xs[i0 - 1], xs[i0]])
    right = np.interp(half, [profile[i1 + 1], profile[i1]], [xs[i1 + 1], xs[i1]])
    return right - left


@pytest.mark.parametrize("model", ["paraxial", "hyperbolic"])
def test_lens_on_axis_and_support(model):
    g = GridSpec(64, 64, 2.5e-6, LAM)
    m = lens_mask(g, F, model, 0.1e-3).transmittance
    assert m[32, 32] == 1
    mag = np.abs(m)
    assert set(np.unique(np.round(mag, 12))) <= {0.0, 1.0}
    x, y = g.coords()
    r = np.hypot(y[:, None], x[None, :])
    assert np.all(mag[r > 0.05e-3 + 1e-12] == 0)
    assert np.all(np.isclose(mag[r <= 0.05e-3 - 1e-9], 1))


def test_paraxial_phase_minus_pi_at_fresnel_radius():
    lam, f = 500e-9, 2e-3
    r = np.sqrt(lam * f)
    pitch = r / 10
    g = GridSpec(64, 64, pitch, lam)
    ph = lens_phase(g, f, "paraxial")
    assert ph[32, 42] == pytest.approx(-np.pi, rel=1e-12)


def test_lens_aperture_too_large():
    with pytest.raises(GeometryError):
        lens_mask(GridSpec(64, 64, 2.5e-6), F, aperture_diameter=1e-3)


def test_paraxial_hyperbolic_discrepancy_within_fourth_order_bound():
    g = GridSpec(256, 256, 2.5e-6, LAM)
    x, y = g.coords()
    r = np.hypot(y[:, None], x[None, :])
    inside = r <= D / 2
    diff = np.abs(lens_phase(g, F, "paraxial") - lens_phase(g, F, "hyperbolic"))[inside]
    bound = (2 * np.pi / LAM) * (D / 2) ** 4 / (8 * F**3)
    assert diff.max() <= bound * (1 + 1e-9)
    assert bound == pytest.approx(0.3602, abs=1e-3)  # small against the 2 pi cycle


def _focus(model, pitch=2.5e-6, n=512):
    g = GridSpec(n, n, pitch, LAM)
    lens = lens_mask(g, F, model, D)
    return propagate(apply_element(ComplexField(g, np.ones(g.shape)), lens), F)


def test_focal_peaks_coincide_for_both_models():
    peaks = []
    for model in ("paraxial", "hyperbolic"):
        i = np.abs(_focus(model).amplitudes) ** 2
        peaks.append(np.unravel_index(np.argmax(i), i.shape))
    assert peaks[0] == peaks[1] == (256, 256)


def test_focal_spot_matches_airy_width():
    out = _focus("hyperbolic", pitch=1.25e-6, n=1024)
    i = np.abs(out.amplitudes) ** 2
    cy, cx = np.unravel_index(np.argmax(i), i.shape)
    assert abs(cy - 512) <= 1 and abs(cx - 512) <= 1
    xs = np.linspace(-6e-6, 6e-6, 1201)
    prof = np.abs(interpolate_row(out, xs)) ** 2
    expected = airy_fwhm(LAM, F, D)
    assert expected == pytest.approx(1.029 * LAM * F / D, rel=1e-3)
    assert fwhm(xs, prof) == pytest.approx(expected, rel=0.10)


def test_aperture_examples():
    g = GridSpec(32, 32, 1e-6)
    assert np.all(aperture_mask(g, "square", 32e-6).transmittance == 1)
    zero = aperture_mask(g, "circle", 0.0).transmittance
    # documented rule: r <= size/2 keeps the center sample
    assert zero.sum() == 1 and zero[16, 16] == 1
    with pytest.raises(GeometryError):
        aperture_mask(g, "circle", 40e-6)
    sq = aperture_mask(g, "square", 10e-6).transmittance
    assert sq.real.sum() == 100


def test_circle_area_converges():
    expected = np.pi * 0.6**2 / 4
    errs = []
    for n in (64, 256, 1024):
        g = GridSpec(n, n, 1.0 / n)
        frac = aperture_mask(g, "circle", 0.6).transmittance.real.mean()
        errs.append(abs(frac / expected - 1))
    assert errs[-1] < 0.02
    assert errs[-1] <= errs[0]


def test_apply_element_examples(rng):
    g = GridSpec(16, 16)
    f = ComplexField(g, rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape))
    assert np.array_equal(apply_element(f, ElementMask(g, np.ones(g.shape))).amplitudes, f.amplitudes)
    assert not apply_element(f, ElementMask(g, np.zeros(g.shape))).amplitudes.any()
    phase = ElementMask(g, np.exp(1j * rng.uniform(-np.pi, np.pi, g.shape)))
    assert total_power(apply_element(f, phase)) == pytest.approx(total_power(f), rel=1e-12)
    with pytest.raises(ShapeError):
        apply_element(f, ElementMask(GridSpec(8, 8), np.ones((8, 8))))


def test_mask_must_be_passive():
    with pytest.raises(GamutError):
        ElementMask(GridSpec(2, 2), np.full((2, 2), 1.1))


def test_checkerboard_examples():
    e = checkerboard_phases(1.0)
    assert (e.phi1[0, 0], e.phi2[0, 0]) == (0.0, 0.0)
    e = checkerboard_phases(0.5)
    assert e.phi1[0, 0] == pytest.approx(np.pi / 3, abs=1e-15)
    assert e.phi2[0, 0] == pytest.approx(-np.pi / 3, abs=1e-15)
    e = checkerboard_phases(0.0)
    assert e.phi1[0, 0] == pytest.approx(np.pi / 2) and e.phi2[0, 0] == pytest.approx(-np.pi / 2)
    assert abs(e.reconstruct()[0, 0]) < 1e-15


def test_checkerboard_gamut_error():
    with pytest.raises(GamutError):
        checkerboard_phases(np.array([[0.5, 1.01j]]))


def test_checkerboard_expand_examples():
    m = checkerboard_expand(checkerboard_phases(1.0), 2).transmittance
    np.testing.assert_allclose(m, np.ones((2, 2)), atol=1e-15)
    m = checkerboard_expand(checkerboard_phases(0.0), 2).transmittance
    np.testing.assert_allclose(m, [[1j, -1j], [-1j, 1j]], atol=1e-15)
    with pytest.raises(InvalidInputError):
        checkerboard_expand(checkerboard_phases(0.0), 3)
    with pytest.raises(GeometryError):
        checkerboard_expand(checkerboard_phases(np.zeros((1, 20000))), 2)


disk = st.tuples(st.floats(0, 1), st.floats(-np.pi, np.pi)).map(lambda t: t[0] * np.exp(1j * t[1]))


@settings(max_examples=50, deadline=None)
@given(st.lists(disk, min_size=1, max_size=36), st.sampled_from([2, 4, 6]))
def test_checkerboard_tile_mean_equals_target(values, factor):
    target = np.array(values).reshape(1, -1)
    enc = checkerboard_phases(target)
    assert np.all(np.abs(enc.phi1) <= np.pi) and np.all(np.abs(enc.phi2) <= np.pi)
    np.testing.assert_allclose(enc.reconstruct(), target, atol=1e-12, rtol=0)
    m = checkerboard_expand(enc, factor).transmittance
    means = m.reshape(1, factor, -1, factor).mean(axis=(1, 3))
    np.testing.assert_allclose(means, target, atol=1e-12, rtol=0)
