"""1D periodic Gross-Pitaevskii specialization and the high-frequency
resolvent check.

The model on the 2 pi cell is E(phi) = int |phi'|^2 + V |phi|^2 + 1/2 |phi|^4
with ||phi|| = 1, whose Euler-Lagrange equation is
-phi'' + V phi + phi^3 = lambda phi (kinetic operator -Lap, no 1/2).

The verification measures, over a reference truncation of L2,

    || M^(1/2) (Omega + K)^(-1) M^(1/2) - I ||  on X_N-perp -> L2,

where Omega + K = Pperp (-Lap + V + 3 phi^2 - lambda) Pperp on the orbital
complement phi-perp and M^(1/2) is Pperp (1 - Lap)^(1/2) Pperp (unshifted, in
contrast to the solver metric). The norm decays like a power of the basis
size; the fitted decay exponent is reported.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import FourierField, Lattice, PlaneWaveBasis, build_basis
from .model import Hamiltonian
from .geometry import OrbitalSet

RAYLEIGH_TOL = 1e-6


def cosine_potential(amplitude: float, lattice: Lattice | None = None) -> FourierField:
    """V(x) = amplitude * cos(x) on the 2 pi cell, as Fourier amplitudes."""
    lat = lattice if lattice is not None else Lattice([[2 * np.pi]])
    basis = build_basis(lat, 1.0)
    coeffs = np.zeros(basis.nbasis, dtype=complex)
    for i, m in enumerate(basis.miller[:, 0]):
        if abs(m) == 1:
            coeffs[i] = 0.5 * amplitude
    return FourierField(basis, coeffs)


def potential_grid(v: FourierField, basis: PlaneWaveBasis):
    """Re-expand a potential's amplitudes on another basis's FFT grid."""
    if v.basis.lattice.dim != basis.lattice.dim or \
            not np.allclose(v.basis.lattice.vectors, basis.lattice.vectors):
        raise ValueError("potential lives on a different lattice")
    shape = np.array(basis.grid_shape)
    grid_amp = np.zeros(basis.grid_shape, dtype=complex)
    for row, coeff in zip(v.basis.miller, v.coeffs):
        if np.any(np.abs(row) > (shape - 1) // 2):
            raise ValueError("potential mode outside the target grid")
        grid_amp[tuple(row % shape)] += coeff
    grid = basis.amplitudes_to_grid(grid_amp)
    if np.max(np.abs(grid.imag)) > 1e-10 * max(1.0, np.max(np.abs(grid.real))):
        raise ValueError("potential must be real valued")
    return grid.real


def gp_hamiltonian(v: FourierField, basis: PlaneWaveBasis, phi) -> Hamiltonian:
    """-Lap + V + |phi|^2 with the unit-strength density response."""
    coeffs = np.asarray(getattr(phi, "coeffs", phi), dtype=complex).reshape(-1)
    rho = np.abs(basis.to_real(coeffs)) ** 2
    return Hamiltonian(basis, basis.g2, potential_grid(v, basis) + rho,
                       response=lambda rho_x: rho_x)


def gp_ground_state(v: FourierField, basis: PlaneWaveBasis, tol: float = 1e-10,
                    maxiter: int = 500, mixing: float = 0.8, seed: int = 0):
    """Ground state of the 1D GP problem on ``basis``.

    Returns (OrbitalSet, lambda) with the global phase fixed so the G = 0
    coefficient is real and positive; the state is then real valued.
    """
    from .solvers import lobpcg

    if basis.lattice.dim != 1:
        raise ValueError("the GP specialization is one-dimensional")
    vgrid = potential_grid(v, basis)
    precond_w = 1.0 / (1.0 + basis.g2)
    c = np.zeros(basis.nbasis, dtype=complex)
    c[0] = 1.0  # constant mode comes first in the ordering
    rho = np.abs(basis.to_real(c)) ** 2
    eig_tol = min(1e-12, tol * 1e-2)
    for _ in range(maxiter):
        ham = Hamiltonian(basis, basis.g2, vgrid + rho, response=lambda g: g)
        _, phi = lobpcg(ham.apply, basis, 1, tol=eig_tol,
                        preconditioner=lambda r: precond_w[:, None] * r,
                        x0=c[:, None], seed=seed)
        c = phi.coeffs[:, 0]
        anchor = c[0] if abs(c[0]) > 1e-12 else c[np.argmax(np.abs(c))]
        c = c * (np.conj(anchor) / abs(anchor))
        rho_out = np.abs(basis.to_real(c)) ** 2
        ham_sc = Hamiltonian(basis, basis.g2, vgrid + rho_out,
                             response=lambda g: g)
        hc = ham_sc.apply(c)
        lam = float(np.real(np.vdot(c, hc)))
        res = hc - c * np.vdot(c, hc)
        if np.sqrt(2.0) * np.linalg.norm(res) <= tol:
            return OrbitalSet(basis, c[:, None]), lam
        rho = (1.0 - mixing) * rho + mixing * rho_out
    raise RuntimeError(f"GP self-consistency stalled above {tol:g}")


@dataclass
class GpVerification:
    """Operator norms of the preconditioned-resolvent defect per cutoff."""
    cutoffs: list
    norms: list
    lambdas: list
    decay_exponent: float | None
    fit_constant: float | None

    def fitted_bound(self, n: int) -> float:
        if self.decay_exponent is None:
            raise ValueError("no fit available for a single cutoff")
        return float(self.fit_constant * (1.0 + 2.0 * n) ** -self.decay_exponent)


def _defect_norm(v: FourierField, ref: PlaneWaveBasis, phi_ref, lam: float,
                 n_low: int, seed: int = 0, cg_tol: float = 1e-10,
                 maxiter: int = 2000) -> float:
    """|| M^(1/2) A^(-1) M^(1/2) - I || from X_N-perp to L2 on the reference space.

    A = Pperp (-Lap + V + 3 phi^2 - lambda) Pperp acts on the orbital
    complement; the domain embeds high modes, the defect is measured over the
    whole space. Power iteration on D* D with a Rayleigh-quotient stop.
    """
    cphi = np.asarray(phi_ref, dtype=complex).reshape(-1)
    w = potential_grid(v, ref) + 3.0 * np.abs(ref.to_real(cphi)) ** 2 - lam
    sq = np.sqrt(1.0 + ref.g2)
    dinv = 1.0 / (1.0 + ref.g2)

    def pperp(x):
        return x - cphi * np.vdot(cphi, x)

    def apply_a(x):
        y = pperp(x)
        return pperp(ref.g2 * y + ref.to_fourier(w * ref.to_real(y)))

    def solve_a(b):
        x = np.zeros_like(b)
        r = b.copy()
        z = pperp(dinv * r)
        p = z.copy()
        rz = np.real(np.vdot(r, z))
        bnorm = np.linalg.norm(b)
        for _ in range(maxiter):
            ap = apply_a(p)
            pap = np.real(np.vdot(p, ap))
            if pap <= 0:
                raise RuntimeError("resolvent operator lost coercivity")
            alpha = rz / pap
            x += alpha * p
            r -= alpha * ap
            if np.linalg.norm(r) <= cg_tol * bnorm:
                return x
            z = pperp(dinv * r)
            rz_new = np.real(np.vdot(r, z))
            p = z + (rz_new / rz) * p
            rz = rz_new
        raise RuntimeError("resolvent solve did not converge")

    def defect(x):
        # x in phi-perp; M^(1/2) x = Pperp((1 - Lap)^(1/2) x)
        vsol = solve_a(pperp(sq * x))
        return pperp(sq * vsol) - x

    rng = np.random.default_rng(seed)
    x = rng.standard_normal(ref.nbasis) + 1j * rng.standard_normal(ref.nbasis)
    x[:n_low] = 0
    x /= np.linalg.norm(x)
    rayleigh = 0.0
    for _ in range(1000):
        y = defect(defect(x))
        y[:n_low] = 0
        new = float(np.real(np.vdot(x, y)))
        ynorm = np.linalg.norm(y)
        if ynorm == 0:
            return 0.0
        x = y / ynorm
        if abs(new - rayleigh) <= RAYLEIGH_TOL * abs(new):
            rayleigh = new
            break
        rayleigh = new
    return float(np.sqrt(max(rayleigh, 0.0)))


def verify_proposition(v: FourierField, cutoffs, ref_factor: int = 16,
                       seed: int = 0) -> GpVerification:
    """Measure the resolvent-defect norm over a list of increasing cutoffs.

    The infinite-dimensional complement is truncated at ref_factor times the
    largest cutoff. The log-log fit of norm against basis size (1 + 2N) gives
    the decay exponent (skipped for a single cutoff).
    """
    cuts = [float(n) for n in cutoffs]
    if len(cuts) == 0:
        raise ValueError("need at least one cutoff")
    if any(b <= a for a, b in zip(cuts, cuts[1:])):
        raise ValueError("cutoffs must be strictly increasing")
    lat = v.basis.lattice
    if lat.dim != 1:
        raise ValueError("the verification is one-dimensional")
    ref = build_basis(lat, ref_factor * max(cuts))

    norms, lambdas = [], []
    for n in cuts:
        basis_n = build_basis(lat, n)
        phi, lam = gp_ground_state(v, basis_n)
        lifted = phi.lift(ref)
        n_low = int(np.count_nonzero(ref.g2 <= 2.0 * n))
        norms.append(_defect_norm(v, ref, lifted.coeffs[:, 0], lam, n_low,
                                  seed=seed))
        lambdas.append(lam)

    decay = const = None
    if len(cuts) >= 2:
        sizes = np.log1p(2.0 * np.asarray(cuts))
        slope, intercept = np.polyfit(sizes, np.log(norms), 1)
        decay = float(-slope)
        const = float(np.exp(intercept))
    return GpVerification(list(cuts), norms, lambdas, decay, const)
