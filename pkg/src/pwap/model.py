"""Mean-field model: periodized Gaussian wells, optional Hartree term, and a
Gross-Pitaevskii quartic nonlinearity (alpha/2) int rho^2.

Two coefficient conventions coexist, as usual for plane-wave codes:

* orbitals carry coefficients w.r.t. the orthonormal e_G (Parseval norms),
* potentials and densities carry amplitudes, f(x) = sum_q f_q exp(i q.x),
  so that matrix elements <e_G | f | e_G'> equal f_(G - G').

The nonlinearity is quadratic in the density, hence cubic in the orbitals;
with the default supersampling every integral below is exact on the grid.
"""
from __future__ import annotations

import numpy as np

from .lattice import FourierField, Lattice, PlaneWaveBasis


def _coeffs(phi):
    """Accept an OrbitalSet or a bare (nbasis, nel) coefficient array."""
    c = getattr(phi, "coeffs", phi)
    c = np.asarray(c, dtype=complex)
    if c.ndim == 1:
        c = c[:, None]
    return c


class Atom:
    """Gaussian-well atom: v(x) = depth * exp(-|x - X|^2 / (2 width^2)).

    Attributes
    ----------
    frac : (d,) ndarray
        Position in fractional coordinates of the cell.
    depth : float
        Well depth A in hartree; attractive wells have depth < 0.
    width : float
        Gaussian width sigma in bohr, > 0.
    """

    def __init__(self, frac, depth: float, width: float):
        self.frac = np.atleast_1d(np.asarray(frac, dtype=float))
        self.depth = float(depth)
        self.width = float(width)
        if self.width <= 0:
            raise ValueError(f"atom width must be positive, got {width}")

    def __repr__(self):
        return f"Atom(frac={self.frac.tolist()}, depth={self.depth}, width={self.width})"


class MeanFieldModel:
    """Energy model E(P) = Tr(h0 P) + E_H(rho) + (alpha/2) int rho^2.

    Attributes
    ----------
    lattice : Lattice
    atoms : list of Atom
    alpha : float
        Strength of the quartic nonlinearity, >= 0; alpha = 0 and
        hartree = False give a linear eigenvalue problem.
    hartree : bool
        Include the periodic Coulomb (Hartree) term.
    nel : int
        Number of occupied orbitals.
    """

    def __init__(self, lattice: Lattice, atoms, alpha: float = 0.0,
                 hartree: bool = False, nel: int = 1):
        self.lattice = lattice
        self.atoms = list(atoms)
        for at in self.atoms:
            if at.frac.shape != (lattice.dim,):
                raise ValueError("atom position dimension does not match the lattice")
        self.alpha = float(alpha)
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {alpha}")
        self.hartree = bool(hartree)
        self.nel = int(nel)
        if self.nel < 1:
            raise ValueError(f"nel must be >= 1, got {nel}")

    @property
    def linear(self) -> bool:
        return self.alpha == 0.0 and not self.hartree

    def atom_positions(self):
        """Cartesian atom positions, shape (n_at, d)."""
        return np.array([self.lattice.cartesian(a.frac) for a in self.atoms])


def _atom_amplitudes(model: MeanFieldModel, qvecs, q2, j: int):
    """Fourier amplitudes of the periodized Gaussian of atom j at wavevectors q."""
    at = model.atoms[j]
    d = model.lattice.dim
    pos = model.lattice.cartesian(at.frac)
    pref = at.depth * (2 * np.pi * at.width**2) ** (d / 2) / model.lattice.volume
    return pref * np.exp(-0.5 * at.width**2 * q2) * np.exp(-1j * (qvecs @ pos))


def local_potential_amplitudes(model: MeanFieldModel, qvecs, q2):
    """Amplitudes of the total local potential at arbitrary wavevectors."""
    out = np.zeros(q2.shape, dtype=complex)
    for j in range(len(model.atoms)):
        out += _atom_amplitudes(model, qvecs, q2, j)
    return out


def local_potential(model: MeanFieldModel, basis: PlaneWaveBasis) -> FourierField:
    """Analytic Fourier amplitudes of the periodized Gaussian wells on the sphere.

    Coefficient at G: (1/|cell|) sum_j A_j (2 pi sigma_j^2)^(d/2)
    exp(-sigma_j^2 |G|^2 / 2) exp(-i G . X_j).
    """
    return FourierField(basis, local_potential_amplitudes(model, basis.gvecs, basis.g2))


def local_potential_grid(model: MeanFieldModel, basis: PlaneWaveBasis):
    """Real-space local potential on the FFT grid (all grid modes included)."""
    flat = basis.grid_gvecs.reshape(-1, model.lattice.dim)
    hat = local_potential_amplitudes(model, flat, basis.grid_g2.ravel())
    return basis.amplitudes_to_grid(hat.reshape(basis.grid_shape)).real


def hartree_potential(density: FourierField, basis: PlaneWaveBasis) -> FourierField:
    """Zero-mean periodic solution of -Lap V_H = 4 pi (rho - mean rho) on the sphere."""
    out = np.zeros(basis.nbasis, dtype=complex)
    nz = basis.g2 > 1e-14
    out[nz] = 4 * np.pi * density.coeffs[nz] / basis.g2[nz]
    return FourierField(basis, out)


def _hartree_grid(basis: PlaneWaveBasis, rho_hat):
    """Hartree potential grid from density amplitudes on the full mode grid."""
    vh_hat = np.zeros_like(rho_hat)
    nz = basis.grid_g2 > 1e-14
    vh_hat[nz] = 4 * np.pi * rho_hat[nz] / basis.grid_g2[nz]
    return basis.amplitudes_to_grid(vh_hat).real


class Density:
    """Density on the FFT grid together with its Fourier amplitudes.

    Attributes
    ----------
    grid : real ndarray of basis.grid_shape, bohr^-d
    hat : complex ndarray of basis.grid_shape
        Amplitudes rho_q with rho(x) = sum_q rho_q exp(i q.x).
    """

    def __init__(self, basis: PlaneWaveBasis, grid):
        self.basis = basis
        self.grid = np.asarray(grid, dtype=float)
        self.hat = basis.grid_to_amplitudes(self.grid)

    def integral(self) -> float:
        return float(self.basis.integrate(self.grid))

    def l2norm(self) -> float:
        return float(np.sqrt(self.basis.integrate(self.grid**2)))


def density(basis: PlaneWaveBasis, phi) -> Density:
    """Density rho(x) = sum_i |phi_i(x)|^2 of an orbital set."""
    c = _coeffs(phi)
    rho = np.zeros(basis.grid_shape)
    for i in range(c.shape[1]):
        psi = basis.to_real(c[:, i])
        rho += np.abs(psi) ** 2
    return Density(basis, rho)


def pair_density_grid(basis: PlaneWaveBasis, phi, xi):
    """rho_X(x) = 2 Re sum_i phi_i(x)* xi_i(x), the density of X = Phi Xi* + Xi Phi*."""
    cp, cx = _coeffs(phi), _coeffs(xi)
    out = np.zeros(basis.grid_shape)
    for i in range(cp.shape[1]):
        out += 2 * np.real(np.conj(basis.to_real(cp[:, i])) * basis.to_real(cx[:, i]))
    return out


class Hamiltonian:
    """H = kinetic + local multiplication, at a frozen density.

    ``kinetic`` is the diagonal of the kinetic operator over the G-list,
    ``potential`` the total local potential on the FFT grid, and ``response``
    maps a density variation on the grid to the induced potential variation
    (the Hessian of the density-dependent energy); None for linear models.
    """

    def __init__(self, basis: PlaneWaveBasis, kinetic, potential, response=None):
        self.basis = basis
        self.kinetic = np.asarray(kinetic, dtype=float)
        self.potential = np.asarray(potential, dtype=float)
        self.response = response

    @classmethod
    def from_model(cls, model: MeanFieldModel, basis: PlaneWaveBasis, rho: Density | None):
        vtot = local_potential_grid(model, basis)
        if rho is not None:
            if model.alpha != 0.0:
                vtot = vtot + model.alpha * rho.grid
            if model.hartree:
                vtot = vtot + _hartree_grid(basis, rho.hat)

        def response(rho_x_grid):
            dv = model.alpha * rho_x_grid
            if model.hartree:
                dv = dv + _hartree_grid(basis, basis.grid_to_amplitudes(rho_x_grid))
            return dv

        return cls(basis, basis.kinetic, vtot, None if model.linear else response)

    def apply(self, cols):
        """Apply H to one coefficient vector or to columns of them."""
        c = np.asarray(cols, dtype=complex)
        single = c.ndim == 1
        if single:
            c = c[:, None]
        out = self.kinetic[:, None] * c
        for i in range(c.shape[1]):
            out[:, i] += self.basis.to_fourier(self.potential * self.basis.to_real(c[:, i]))
        return out[:, 0] if single else out


def hamiltonian_at(model: MeanFieldModel, basis: PlaneWaveBasis, phi=None) -> Hamiltonian:
    """Self-consistent Hamiltonian H(P) at the density of phi (or the core H0)."""
    rho = density(basis, phi) if phi is not None else None
    return Hamiltonian.from_model(model, basis, rho)


def apply_hamiltonian(model: MeanFieldModel, basis: PlaneWaveBasis, phi,
                      psi: FourierField) -> FourierField:
    """(-1/2 Lap + V_loc + [V_H(rho)] + alpha rho) psi at the density of phi."""
    ham = hamiltonian_at(model, basis, phi)
    return FourierField(basis, ham.apply(psi.coeffs))


def energy_terms(model: MeanFieldModel, basis: PlaneWaveBasis, phi) -> dict:
    """Energy contributions by term; all grid integrals are alias-free."""
    c = _coeffs(phi)
    if c.shape[1] > basis.nbasis:
        raise ValueError("more orbitals than basis functions")
    rho = density(basis, phi)
    kin = float(np.sum(basis.kinetic[:, None] * np.abs(c) ** 2))
    loc = float(basis.integrate(local_potential_grid(model, basis) * rho.grid))
    har = 0.0
    if model.hartree:
        har = 0.5 * float(basis.integrate(_hartree_grid(basis, rho.hat) * rho.grid))
    nl = 0.5 * model.alpha * float(basis.integrate(rho.grid**2))
    return {"kinetic": kin, "local": loc, "hartree": har, "nonlinear": nl,
            "total": kin + loc + har + nl}


def energy(model: MeanFieldModel, basis: PlaneWaveBasis, phi) -> float:
    """Total energy E(P) in hartree."""
    return energy_terms(model, basis, phi)["total"]


def _force_from_density_hat(model: MeanFieldModel, basis: PlaneWaveBasis, rho_hat):
    """-Tr((dV/dX) . ) against a density given by grid-mode amplitudes."""
    d = model.lattice.dim
    vol = model.lattice.volume
    flat_g = basis.grid_gvecs.reshape(-1, d)
    out = np.zeros((d, len(model.atoms)))
    rh = rho_hat.ravel()
    for j in range(len(model.atoms)):
        vj = _atom_amplitudes(model, flat_g, basis.grid_g2.ravel(), j)
        for beta in range(d):
            dv = -1j * flat_g[:, beta] * vj
            out[beta, j] = -vol * float(np.real(np.vdot(dv, rh)))
    return out


def atom_gradient_grid(model: MeanFieldModel, basis: PlaneWaveBasis, j: int, beta: int):
    """dV_loc/dX_{j,beta} on the FFT grid (a real multiplication operator)."""
    d = model.lattice.dim
    flat_g = basis.grid_gvecs.reshape(-1, d)
    vj = _atom_amplitudes(model, flat_g, basis.grid_g2.ravel(), j)
    dv = (-1j * flat_g[:, beta] * vj).reshape(basis.grid_shape)
    return basis.amplitudes_to_grid(dv).real


def forces(model: MeanFieldModel, basis: PlaneWaveBasis, phi):
    """Hellmann-Feynman forces F[beta, j] = -Tr((dV_loc/dX_{j,beta}) P), hartree/bohr."""
    rho = density(basis, phi)
    return _force_from_density_hat(model, basis, rho.hat)


def force_derivative(model: MeanFieldModel, basis: PlaneWaveBasis, phi, xi):
    """Directional force derivative dF . X = -Tr((dV_loc/dX) X), X = Phi Xi* + Xi Phi*.

    Exact (the force is linear in P); shape (d, n_at) like forces.
    """
    cp, cx = _coeffs(phi), _coeffs(xi)
    gauge = np.linalg.norm(cp.conj().T @ cx)
    if gauge > 1e-8:
        raise ValueError(f"tangent gauge violation: |Phi* Xi| = {gauge:.3e}")
    rho_x = pair_density_grid(basis, phi, xi)
    return _force_from_density_hat(model, basis, basis.grid_to_amplitudes(rho_x))
