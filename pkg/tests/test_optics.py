import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from maskwfs.optics import (
    ZERNIKE_INDICES,
    ComplexField,
    Grid,
    MaskModel,
    ZernikeCoeffs,
    _radial,
    angular_spectrum_propagate,
    default_mask,
    diffraction_intensity,
    fft2_centered,
    gamma_map,
    gaussian_source,
    ifft2_centered,
    multislice_mask_transit,
    synthesize_focused_object,
    zernike_basis,
    zernike_phase,
)

from .oracles import band_limited, dft2_oracle, idft2_oracle


def _field(grid, rng):
    return ComplexField(grid, rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape))


# --- Fourier transforms -------------------------------------------------------

@pytest.mark.parametrize("shape", [(8, 8), (16, 16), (8, 16), (12, 10)])
def test_fft_matches_direct_dft(shape, rng):
    g = Grid(shape[1], shape[0], 1.0, 1.0, 1.0)
    f = _field(g, rng)
    np.testing.assert_allclose(fft2_centered(f).values, dft2_oracle(f.values), rtol=0, atol=1e-10)


def test_ifft_matches_direct_inverse_dft(rng):
    g = Grid(32, 32, 1.0, 1.0, 1.0)
    f = _field(g, rng)
    out = ifft2_centered(f).values
    assert np.max(np.abs(out - idft2_oracle(f.values))) < 1e-12
    back = fft2_centered(ifft2_centered(f)).values
    assert np.max(np.abs(back - f.values)) < 1e-12


def test_fft_of_centered_delta_is_flat():
    g = Grid(16, 8, 1.0, 1.0, 1.0)
    v = np.zeros(g.shape)
    v[g.center] = 1
    out = fft2_centered(ComplexField(g, v)).values
    np.testing.assert_allclose(out, 1 / np.sqrt(16 * 8), atol=1e-15)


def test_ifft_of_constant_is_delta():
    g = Grid(16, 16, 1.0, 1.0, 1.0)
    out = ifft2_centered(ComplexField(g, np.ones(g.shape))).values
    expect = np.zeros(g.shape)
    expect[g.center] = 16
    np.testing.assert_allclose(out, expect, atol=1e-12)


def test_fft_of_gaussian_is_real_positive_gaussian():
    g = Grid(64, 64, 1.0, 1.0, 1.0)
    w0 = 4.0
    out = fft2_centered(gaussian_source(w0, g)).values
    assert np.max(np.abs(out.imag)) < 1e-12
    assert np.all(out.real > -1e-15 * out.real.max())
    assert np.all(out.real[out.real > 1e-12 * out.real.max()] > 0)
    fx, fy = g.frequencies()
    analytic = np.exp(-(np.pi * w0) ** 2 * (fx ** 2 + fy ** 2))
    analytic *= out.real[g.center] / analytic[g.center]
    np.testing.assert_allclose(out.real, analytic, atol=1e-10)


def test_fft_norm_preserved(rng):
    g = Grid(64, 64, 1.0, 1.0, 1.0)
    f = _field(g, rng)
    assert abs(fft2_centered(f).norm() - f.norm()) / f.norm() < 1e-12


def test_fft_reciprocal_grid():
    g = Grid(64, 32, 2e-7, 1e-7, 13.5e-9)
    out = fft2_centered(ComplexField(g, np.ones(g.shape)))
    assert out.grid.dx == pytest.approx(1 / (64 * 2e-7))
    assert out.grid.dy == pytest.approx(1 / (32 * 1e-7))


def test_non_finite_field_rejected():
    g = Grid(8, 8, 1.0, 1.0, 1.0)
    v = np.zeros(g.shape, complex)
    v[0, 0] = np.nan
    with pytest.raises(ValueError, match="non-finite"):
        ComplexField(g, v)


@pytest.mark.parametrize("bad", [dict(nx=7), dict(nx=6), dict(dx=0), dict(wavelength=-1)])
def test_grid_invariants(bad):
    kw = dict(nx=8, ny=8, dx=1.0, dy=1.0, wavelength=1.0)
    kw.update(bad)
    with pytest.raises(ValueError):
        Grid(**kw)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([8, 16, 24]))
def test_fft_round_trip_property(seed, n):
    rng = np.random.default_rng(seed)
    g = Grid(n, n, 1.0, 1.0, 1.0)
    f = _field(g, rng)
    F = fft2_centered(f)
    assert abs(F.norm() - f.norm()) <= 1e-12 * f.norm()
    assert np.max(np.abs(ifft2_centered(F).values - f.values)) <= 1e-12 * np.max(np.abs(f.values)) * n


# --- Zernike ------------------------------------------------------------------

def test_zernike_zero_coefficients(grid):
    assert np.all(zernike_phase(ZernikeCoeffs.zeros(), grid, 5e-6) == 0)


def test_zernike_defocus_center_value(grid):
    c = [0.0] * 12
    c[ZERNIKE_INDICES.index((2, 0))] = 1.0
    phi = zernike_phase(ZernikeCoeffs(c), grid, 5e-6)
    assert phi[grid.center] == -1.0


def test_zernike_zero_outside_disk(grid):
    basis = zernike_basis(grid, 3e-6)
    X, Y = grid.meshgrid()
    assert np.all(basis[:, np.hypot(X, Y) > 3e-6] == 0)


def test_zernike_aperture_too_large(grid):
    with pytest.raises(ValueError):
        zernike_basis(grid, 11e-6)


def test_zernike_coeff_count():
    with pytest.raises(ValueError):
        ZernikeCoeffs((1.0,) * 11)


def _continuous_inner(i, j):
    (n1, m1), (n2, m2) = ZERNIKE_INDICES[i], ZERNIKE_INDICES[j]

    def ang(m, t):
        return np.cos(m * t) if m >= 0 else np.sin(-m * t)

    def integrand(t, r):
        rr = np.array([r])
        return float(_radial(n1, m1, rr)[0] * _radial(n2, m2, rr)[0]) * ang(m1, t) * ang(m2, t) * r

    val, _ = integrate.dblquad(integrand, 0, 1, 0, 2 * np.pi, epsabs=1e-11)
    return val


def test_zernike_continuous_orthogonality_oracle():
    # the reference integral: cross terms vanish, diagonal terms do not
    for i, j in [(0, 2), (1, 9), (4, 5), (8, 10), (3, 7)]:
        assert abs(_continuous_inner(i, j)) < 1e-9
    assert _continuous_inner(1, 1) > 0.1


def test_zernike_discrete_near_orthogonality():
    g = Grid(128, 128, 1.0, 1.0, 1.0)
    basis = zernike_basis(g, 64.0).reshape(12, -1)
    gram = basis @ basis.T
    norms = np.sqrt(np.diag(gram))
    normalized = gram / np.outer(norms, norms)
    off = normalized[~np.eye(12, dtype=bool)]
    assert np.max(np.abs(off)) < 0.02


# --- sources ------------------------------------------------------------------

def test_gaussian_source_values():
    g = Grid(64, 64, 0.5, 0.5, 1.0)
    w0 = 4.0
    f = gaussian_source(w0, g).values
    assert f[g.center] == 1.0
    assert f[g.center[0], g.center[1] + 8] == pytest.approx(np.exp(-1), abs=1e-15)
    assert np.max(np.abs(f.imag)) == 0


@pytest.mark.parametrize("w0", [0.0, -1.0, 40.0])
def test_gaussian_source_rejects(w0):
    with pytest.raises(ValueError):
        gaussian_source(w0, Grid(64, 64, 1.0, 1.0, 1.0))


def test_focused_object_zero_coeffs(grid):
    w0 = 5 * grid.dx
    f = synthesize_focused_object(w0, ZernikeCoeffs.zeros(), grid)
    assert np.max(np.abs(f.values.imag)) < 1e-12
    assert np.all(f.values.real > -1e-15 * f.values.real.max())
    assert f.norm() == pytest.approx(gaussian_source(w0, grid).norm(), rel=1e-12)


def _fwhm(intensity):
    cy, cx = np.unravel_index(np.argmax(intensity), intensity.shape)
    row = intensity[cy] / intensity[cy, cx]
    return int(np.sum(row >= 0.5))


def test_defocus_widens_focus(grid):
    w0 = 5 * grid.dx
    c = [0.0] * 12
    c[ZERNIKE_INDICES.index((2, 0))] = 1.5
    plain = synthesize_focused_object(w0, ZernikeCoeffs.zeros(), grid, 8 * grid.dx)
    defocused = synthesize_focused_object(w0, ZernikeCoeffs(c), grid, 8 * grid.dx)
    assert _fwhm(defocused.intensity) > _fwhm(plain.intensity)
    assert defocused.norm() == pytest.approx(plain.norm(), rel=1e-12)


# --- propagation --------------------------------------------------------------

def test_gamma_center_and_cutoff():
    g = Grid(16, 16, 0.5, 0.5, 1.0)  # lambda * f_nyquist == 1
    gm = gamma_map(g)
    assert gm[g.center] == 1.0
    assert gm[g.center[0], 0] == 0.0
    assert gm.mask[0, 0]  # corner is evanescent


def test_gamma_paraxial_default_lattice():
    g = Grid(128, 128, 1e-6, 1e-6, 13.5e-9)
    fx, fy = g.frequencies()
    assert np.max(g.wavelength ** 2 * (fx ** 2 + fy ** 2)) < 1
    assert not np.ma.getmaskarray(gamma_map(g)).any()


def test_propagate_zero_is_identity(grid, rng):
    f = _field(grid, rng)
    assert np.array_equal(angular_spectrum_propagate(f, 0.0).values, f.values)


def test_propagate_round_trip(grid, rng):
    f = band_limited(grid, rng)
    back = angular_spectrum_propagate(angular_spectrum_propagate(f, 37e-6), -37e-6)
    assert np.linalg.norm(back.values - f.values) / f.norm() < 1e-10


def test_propagate_conserves_energy(grid, rng):
    f = band_limited(grid, rng)
    out = angular_spectrum_propagate(f, 250e-6)
    assert abs(out.norm() - f.norm()) / f.norm() < 1e-10


def test_propagate_semigroup(grid, rng):
    f = band_limited(grid, rng)
    a = angular_spectrum_propagate(angular_spectrum_propagate(f, 12e-6), 31e-6)
    b = angular_spectrum_propagate(f, 43e-6)
    assert np.linalg.norm(a.values - b.values) / f.norm() < 1e-10


def test_propagate_rejects_nonfinite_distance(grid, rng):
    with pytest.raises(ValueError):
        angular_spectrum_propagate(_field(grid, rng), np.inf)


def test_evanescent_components_removed():
    g = Grid(16, 16, 0.4, 0.4, 1.0)
    v = np.zeros(g.shape, complex)
    v[0, 0] = 1
    spec = fft2_centered(angular_spectrum_propagate(ComplexField(g, v), 1.0)).values
    assert np.max(np.abs(spec[np.ma.getmaskarray(gamma_map(g))])) < 1e-15


# --- mask transit & intensity ---------------------------------------------------

def test_open_mask_one_slice_equals_propagation(grid, rng):
    f = band_limited(grid, rng)
    m = MaskModel.unchecked(grid, np.ones(grid.shape), 1, 5e-6)
    np.testing.assert_allclose(multislice_mask_transit(f, m).values,
                               angular_spectrum_propagate(f, 5e-6).values, atol=1e-13)


def test_closed_mask_gives_zero(grid, rng):
    m = MaskModel.unchecked(grid, np.zeros(grid.shape), 2, 1e-6)
    assert not multislice_mask_transit(_field(grid, rng), m).values.any()


def test_thin_mask_is_pointwise_product(grid, mask, rng):
    f = _field(grid, rng)
    assert np.array_equal(multislice_mask_transit(f, mask).values, f.values * mask.transmission)


def test_transit_grid_mismatch(mask, rng):
    other = Grid(128, 128, 1e-7, 1e-7, 13.5e-9)
    with pytest.raises(ValueError, match="grid"):
        multislice_mask_transit(_field(other, rng), mask)


def test_transit_is_linear(grid, rng):
    m = default_mask(grid, n_slices=3, dz=0.4e-6)
    f, h = _field(grid, rng), _field(grid, rng)
    a, b = 0.7 - 0.2j, -1.3 + 0.5j
    lhs = multislice_mask_transit(f.with_values(a * f.values + b * h.values), m).values
    rhs = a * multislice_mask_transit(f, m).values + b * multislice_mask_transit(h, m).values
    assert np.max(np.abs(lhs - rhs)) < 1e-10


def test_intensity_basic(grid, rng):
    assert not diffraction_intensity(ComplexField(grid, np.zeros(grid.shape))).any()
    f = _field(grid, rng)
    I = diffraction_intensity(f)
    assert np.all(I >= 0)
    assert I.sum() == pytest.approx(f.norm() ** 2, rel=1e-12)
    rotated = diffraction_intensity(f.with_values(f.values * np.exp(1.234j)))
    assert np.max(np.abs(rotated - I)) < 1e-12 * I.max()


# --- mask geometry and the twin image --------------------------------------------

def _rot180(a):
    return np.roll(a[::-1, ::-1], (1, 1), axis=(0, 1))


def test_default_mask_properties(mask):
    t = mask.transmission
    assert set(np.unique(t)) == {0, 1}
    assert 0 < mask.open_fraction < 1
    assert not np.array_equal(t, _rot180(t))


def test_mask_invariants(grid):
    with pytest.raises(ValueError, match="binary"):
        MaskModel(grid, np.full(grid.shape, 0.5))
    with pytest.raises(ValueError, match="open fraction"):
        MaskModel(grid, np.ones(grid.shape))
    sym = np.zeros(grid.shape, np.uint8)
    sym[60:69, 60:69] = 1
    with pytest.raises(ValueError, match="centrosymmetric"):
        MaskModel(grid, sym)


def test_twin_image_broken_by_asymmetric_mask(grid, mask, rng):
    f = band_limited(grid, rng)
    twin = f.with_values(np.conj(_rot180(f.values)))
    a = diffraction_intensity(multislice_mask_transit(f, mask))
    b = diffraction_intensity(multislice_mask_transit(twin, mask))
    assert np.linalg.norm(a - b) / np.linalg.norm(a) > 0.01

    sym = np.zeros(grid.shape, np.uint8)
    sym[50:60, 44:52] = 1
    sym |= _rot180(sym)
    sym_mask = MaskModel.unchecked(grid, sym)
    a = diffraction_intensity(multislice_mask_transit(f, sym_mask))
    b = diffraction_intensity(multislice_mask_transit(twin, sym_mask))
    assert np.max(np.abs(a - b)) < 1e-10 * a.max()
