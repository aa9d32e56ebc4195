import numpy as np
import pytest

from pwap import FourierField, Lattice, build_basis, sobolev_norm
from pwap.lattice import _good_size


def test_reciprocal_duality():
    lat = Lattice([[3.0, 0.5], [0.0, 2.0]])
    assert np.allclose(lat.reciprocal @ lat.vectors.T, 2 * np.pi * np.eye(2))
    assert lat.volume == pytest.approx(6.0)


def test_cartesian_positions():
    lat = Lattice([[4.0]])
    assert np.allclose(lat.cartesian([0.25]), [1.0])


def test_degenerate_cell_rejected():
    with pytest.raises(ValueError):
        Lattice([[1.0, 0.0], [2.0, 0.0]])


def test_ordering_nondecreasing_and_prefix(lattice1d):
    coarse = build_basis(lattice1d, 8.0)
    fine = build_basis(lattice1d, 30.0)
    assert np.all(np.diff(fine.g2) >= -1e-12)
    assert np.array_equal(fine.miller[: coarse.nbasis], coarse.miller)


def test_prefix_property_2d():
    lat = Lattice([[2 * np.pi, 0.0], [0.0, 2 * np.pi]])
    coarse = build_basis(lat, 5.0)
    fine = build_basis(lat, 21.0)
    assert np.array_equal(fine.miller[: coarse.nbasis], coarse.miller)
    # ties are broken identically at both cutoffs
    g2 = fine.g2
    for i in range(1, len(g2)):
        if abs(g2[i] - g2[i - 1]) < 1e-9:
            assert tuple(fine.miller[i - 1]) < tuple(fine.miller[i])


def test_sphere_membership(lattice1d):
    basis = build_basis(lattice1d, 12.5)
    assert np.all(basis.g2 <= 2 * 12.5 + 1e-12)
    # the next integer mode lies outside
    mmax = np.abs(basis.miller).max()
    assert (mmax + 1) ** 2 > 2 * 12.5


def test_good_size_five_smooth():
    for n in (1, 7, 11, 13, 97, 121):
        m = _good_size(n)
        assert m >= n
        for p in (2, 3, 5):
            while m % p == 0:
                m //= p
        assert m == 1
    assert _good_size(8) == 8
    assert _good_size(17) == 18


def test_grid_large_enough_for_cubic_products(lattice1d):
    basis = build_basis(lattice1d, 16.0)
    mmax = np.abs(basis.miller).max()
    assert basis.grid_shape[0] >= 2 * 3 * mmax + 1


def test_roundtrip_parseval(lattice1d):
    basis = build_basis(lattice1d, 20.0)
    rng = np.random.default_rng(3)
    c = rng.standard_normal(basis.nbasis) + 1j * rng.standard_normal(basis.nbasis)
    grid = basis.to_real(c)
    back = basis.to_fourier(grid)
    assert np.allclose(back, c, atol=1e-12)
    # Parseval: L2 norm on the grid equals the coefficient norm
    l2 = np.sqrt(basis.integrate(np.abs(grid) ** 2))
    assert l2 == pytest.approx(np.linalg.norm(c), rel=1e-12)


def test_plane_wave_values(lattice1d):
    # e_G(x) = exp(iGx)/sqrt(2 pi) sampled on the uniform grid
    basis = build_basis(lattice1d, 8.0)
    idx = 3
    c = np.zeros(basis.nbasis, dtype=complex)
    c[idx] = 1.0
    grid = basis.to_real(c)
    n = basis.grid_shape[0]
    x = np.arange(n) * (2 * np.pi / n)
    expect = np.exp(1j * basis.miller[idx, 0] * x) / np.sqrt(2 * np.pi)
    assert np.allclose(grid, expect, atol=1e-12)


def test_integrate_constant(lattice1d):
    basis = build_basis(lattice1d, 4.0)
    assert basis.integrate(np.ones(basis.grid_shape)) == pytest.approx(2 * np.pi)


def test_amplitude_convention_roundtrip(lattice1d):
    basis = build_basis(lattice1d, 10.0)
    rng = np.random.default_rng(5)
    hat = rng.standard_normal(basis.grid_shape) \
        + 1j * rng.standard_normal(basis.grid_shape)
    grid = basis.amplitudes_to_grid(hat)
    assert np.allclose(basis.grid_to_amplitudes(grid), hat, atol=1e-12)


def test_embed_amplitudes_matches_transforms(lattice1d):
    basis = build_basis(lattice1d, 10.0)
    rng = np.random.default_rng(6)
    c = rng.standard_normal(basis.nbasis) + 1j * rng.standard_normal(basis.nbasis)
    # orthonormal coefficients scale to amplitudes by 1/sqrt(|cell|)
    hat = basis.embed_amplitudes(c / np.sqrt(basis.lattice.volume))
    assert np.allclose(basis.amplitudes_to_grid(hat), basis.to_real(c), atol=1e-12)


def test_supersample_validation(lattice1d):
    with pytest.raises(ValueError):
        build_basis(lattice1d, 10.0, supersample=1)
    with pytest.raises(ValueError):
        build_basis(lattice1d, -1.0)


def test_sobolev_norm_weights(lattice1d):
    basis = build_basis(lattice1d, 8.0)
    c = np.zeros(basis.nbasis, dtype=complex)
    c[0] = 2.0  # G = 0
    f = FourierField(basis, c)
    assert sobolev_norm(f, 1.0) == pytest.approx(2.0)
    idx = int(np.argmax(basis.g2))
    c2 = np.zeros_like(c)
    c2[idx] = 1.0
    assert sobolev_norm(FourierField(basis, c2), 1.0) == \
        pytest.approx(np.sqrt(1 + basis.g2[idx]))


def test_nbasis_count_1d(lattice1d):
    # unit reciprocal lattice: modes |m| <= floor(sqrt(2 ecut))
    basis = build_basis(lattice1d, 16.0)
    assert basis.nbasis == 2 * int(np.sqrt(32.0)) + 1
