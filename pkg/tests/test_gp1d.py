import numpy as np
import pytest

import oracles
from pwap import (Lattice, build_basis, cosine_potential, gp_ground_state,
                  verify_proposition)
from pwap.gp1d import _defect_norm, potential_grid


def test_cosine_potential_amplitudes():
    v = cosine_potential(0.3)
    m = v.basis.miller[:, 0]
    for i, mi in enumerate(m):
        if abs(mi) == 1:
            assert v.coeffs[i] == pytest.approx(0.15)
        else:
            assert v.coeffs[i] == 0


def test_potential_grid_realizes_cosine(lattice1d):
    basis = build_basis(lattice1d, 8.0)
    grid = potential_grid(cosine_potential(0.5), basis)
    n = basis.grid_shape[0]
    x = np.arange(n) * (2 * np.pi / n)
    assert np.allclose(grid, 0.5 * np.cos(x), atol=1e-12)


def test_potential_grid_rejects_other_lattice():
    v = cosine_potential(0.3)
    other = build_basis(Lattice([[1.0]]), 8.0)
    with pytest.raises(ValueError):
        potential_grid(v, other)


def test_ground_state_matches_dense_oracle(lattice1d):
    basis = build_basis(lattice1d, 18.0)
    v_amps = oracles.cosine_amplitudes(0.3)
    cref, lam_ref = oracles.dense_gp_ground_state(basis, v_amps)
    phi, lam = gp_ground_state(cosine_potential(0.3), basis, tol=1e-12)
    assert lam == pytest.approx(lam_ref, abs=1e-9)
    c = phi.coeffs[:, 0]
    assert np.linalg.norm(c - cref) < 1e-7
    # state is real valued after phase anchoring
    assert np.max(np.abs(c.imag)) < 1e-10


def test_ground_state_free_case(lattice1d):
    # V = 0: constant orbital, lambda = 1/(2 pi)
    basis = build_basis(lattice1d, 12.0)
    phi, lam = gp_ground_state(cosine_potential(0.0), basis, tol=1e-12)
    assert lam == pytest.approx(1.0 / (2 * np.pi), abs=1e-11)
    c = phi.coeffs[:, 0]
    assert abs(c[0]) == pytest.approx(1.0, abs=1e-11)
    assert np.linalg.norm(c[1:]) < 1e-10


def test_ground_state_rejects_2d():
    lat = Lattice([[2 * np.pi, 0], [0, 2 * np.pi]])
    basis = build_basis(lat, 4.0)
    with pytest.raises(ValueError):
        gp_ground_state(cosine_potential(0.3, lat), basis)


def test_defect_norm_free_case_closed_form(lattice1d):
    """V = 0: the defect is diagonal, norm = (1 - 1/pi)/(m^2 + 1/pi) at the
    first mode outside X_N."""
    for n_cut in (4.0, 9.0):
        ref = build_basis(lattice1d, 16 * n_cut)
        basis_n = build_basis(lattice1d, n_cut)
        phi, lam = gp_ground_state(cosine_potential(0.0), basis_n, tol=1e-12)
        lifted = phi.lift(ref)
        n_low = int(np.count_nonzero(ref.g2 <= 2 * n_cut))
        got = _defect_norm(cosine_potential(0.0), ref, lifted.coeffs[:, 0],
                           lam, n_low)
        m_min = int(np.floor(np.sqrt(2 * n_cut))) + 1
        expect = (1 - 1 / np.pi) / (m_min**2 + 1 / np.pi)
        assert got == pytest.approx(expect, rel=1e-4)


def test_defect_norm_matches_dense_oracle(lattice1d):
    v = cosine_potential(0.3)
    v_amps = oracles.cosine_amplitudes(0.3)
    n_cut = 4.0
    ref = build_basis(lattice1d, 16 * n_cut)
    basis_n = build_basis(lattice1d, n_cut)
    phi, lam = gp_ground_state(v, basis_n, tol=1e-12)
    lifted = phi.lift(ref)
    n_low = int(np.count_nonzero(ref.g2 <= 2 * n_cut))
    got = _defect_norm(v, ref, lifted.coeffs[:, 0], lam, n_low)
    expect = oracles.dense_defect_norm(v_amps, ref, lifted.coeffs[:, 0], lam,
                                       n_low)
    assert got == pytest.approx(expect, rel=1e-3)


def test_verify_proposition_decay(lattice1d):
    v = cosine_potential(0.3)
    result = verify_proposition(v, [4, 8, 16])
    assert all(a > b for a, b in zip(result.norms, result.norms[1:]))
    assert all(a >= b - 1e-12 for a, b in zip(result.lambdas, result.lambdas[1:]))
    assert result.decay_exponent is not None
    # fitted bound interpolates the norms within a small factor
    for n, norm in zip(result.cutoffs, result.norms):
        fit = result.fitted_bound(n)
        assert 0.3 * norm < fit < 3 * norm


def test_verify_proposition_single_cutoff(lattice1d):
    result = verify_proposition(cosine_potential(0.3), [6])
    assert result.decay_exponent is None
    with pytest.raises(ValueError):
        result.fitted_bound(6)


def test_verify_proposition_validation():
    v = cosine_potential(0.3)
    with pytest.raises(ValueError):
        verify_proposition(v, [])
    with pytest.raises(ValueError):
        verify_proposition(v, [8, 4])
