"""Geometry of the orbital (Grassmann) manifold.

States are density matrices P = Phi Phi* with Phi* Phi = I. A tangent vector
X = Phi Xi* + Xi Phi* is stored through its half Xi, constrained to
Phi* Xi = 0; consequently every inner product and norm below carries the
factor 2 of the full symmetric X (|X|_F = sqrt(2) |Xi|_F).

Operators on the tangent space:

* Omega(Xi)   = Pperp (H Xi - Xi Lambda), Lambda = Phi* H Phi,
* K(Xi)      = Pperp ((dV/drho)[rho_X] Phi), the mean-field response,
* M          = Pperp T^(1/2) Pperp T^(1/2) Pperp, columnwise with
  T_i = -1/2 Lap + t_i and t_i = max(kinetic energy of phi_i, floor).

M^(1/2) = Pperp T^(1/2) Pperp is applied directly; M^(-1/2) and M^(-1) are
computed by preconditioned CG restricted to the tangent space.
"""
from __future__ import annotations

import numpy as np

from .lattice import PlaneWaveBasis
from .model import (MeanFieldModel, Hamiltonian, hamiltonian_at,
                    pair_density_grid, _coeffs)

METRIC_FLOOR = 1e-3
CG_TOL = 1e-12
CG_MAXITER = 500


class OrbitalSet:
    """Orthonormal orbitals as coefficient columns over a basis."""

    def __init__(self, basis: PlaneWaveBasis, coeffs):
        self.basis = basis
        self.coeffs = np.asarray(coeffs, dtype=complex)
        if self.coeffs.ndim != 2 or self.coeffs.shape[0] != basis.nbasis:
            raise ValueError(f"orbital coefficients must be ({basis.nbasis}, nel)")

    @property
    def nel(self) -> int:
        return self.coeffs.shape[1]

    def orthonormality_error(self) -> float:
        g = self.coeffs.conj().T @ self.coeffs
        return float(np.linalg.norm(g - np.eye(self.nel)))

    def lift(self, fine: PlaneWaveBasis) -> "OrbitalSet":
        """Zero-pad onto a larger basis of the same lattice (prefix nesting)."""
        n = self.basis.nbasis
        if fine.nbasis < n or not np.array_equal(fine.miller[:n], self.basis.miller):
            raise ValueError("target basis does not nest the source basis")
        out = np.zeros((fine.nbasis, self.nel), dtype=complex)
        out[:n] = self.coeffs
        return OrbitalSet(fine, out)


class TangentSet:
    """Half-tangent Xi with Phi* Xi = 0, over the same basis as Phi."""

    def __init__(self, basis: PlaneWaveBasis, coeffs):
        self.basis = basis
        self.coeffs = np.asarray(coeffs, dtype=complex)
        if self.coeffs.ndim != 2 or self.coeffs.shape[0] != basis.nbasis:
            raise ValueError(f"tangent coefficients must be ({basis.nbasis}, nel)")

    def copy(self) -> "TangentSet":
        return TangentSet(self.basis, self.coeffs.copy())


def tangent_inner(xi1, xi2) -> float:
    """<X1, X2>_F = 2 Re Tr(Xi1* Xi2) of the full symmetric tangents."""
    return 2.0 * float(np.real(np.vdot(_coeffs(xi1), _coeffs(xi2))))


def tangent_norm(xi) -> float:
    return float(np.sqrt(2.0) * np.linalg.norm(_coeffs(xi)))


def project_tangent(phi, y) -> np.ndarray:
    """Pperp y = y - Phi (Phi* y), columnwise."""
    cp = _coeffs(phi)
    cy = np.asarray(y, dtype=complex)
    single = cy.ndim == 1
    if single:
        cy = cy[:, None]
    out = cy - cp @ (cp.conj().T @ cy)
    return out[:, 0] if single else out


class OrbitalMetric:
    """Columnwise metric M_i built from diagonal operators T_i.

    ``tdiag[:, i]`` holds the (real, positive) diagonal of T_i over the
    G-list; ``phi`` fixes the tangent space the metric lives on.
    """

    def __init__(self, basis: PlaneWaveBasis, phi, tdiag):
        self.basis = basis
        self.phi = _coeffs(phi)
        self.tdiag = np.asarray(tdiag, dtype=float)
        if self.tdiag.shape != self.phi.shape:
            raise ValueError("tdiag must have one column per orbital")
        if np.any(self.tdiag <= 0):
            raise ValueError("metric diagonal must be positive")

    @classmethod
    def from_orbitals(cls, basis: PlaneWaveBasis, phi, floor: float = METRIC_FLOOR):
        cp = _coeffs(phi)
        shifts = np.maximum(basis.kinetic @ (np.abs(cp) ** 2), floor)
        return cls(basis, phi, basis.kinetic[:, None] + shifts[None, :])


def orbital_metric(basis: PlaneWaveBasis, phi, floor: float = METRIC_FLOOR) -> OrbitalMetric:
    """Default metric, T_i = -1/2 Lap + max(1/2 |grad phi_i|^2, floor)."""
    return OrbitalMetric.from_orbitals(basis, phi, floor)


def _tangent_cg(apply_op, b, precond, tol: float = CG_TOL, maxiter: int = CG_MAXITER):
    """CG for a self-adjoint positive definite operator on the tangent space."""
    x = np.zeros_like(b)
    r = b.copy()
    z = precond(r)
    p = z.copy()
    rz = np.real(np.vdot(r, z))
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return x
    for _ in range(maxiter):
        ap = apply_op(p)
        alpha = rz / np.real(np.vdot(p, ap))
        x += alpha * p
        r -= alpha * ap
        if np.linalg.norm(r) <= tol * bnorm:
            break
        z = precond(r)
        rz_new = np.real(np.vdot(r, z))
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x


def apply_metric_power(metric: OrbitalMetric, xi, s_exp: float) -> np.ndarray:
    """M^s Xi for s in {-1, -1/2, 1/2, 1}; columnwise, stays in the tangent space."""
    cx = project_tangent(metric.phi, _coeffs(xi))
    sqrt_t = np.sqrt(metric.tdiag)

    def half(v):
        return project_tangent(metric.phi, sqrt_t * v)

    if s_exp == 0.5:
        return half(cx)
    if s_exp == 1:
        return half(half(cx))
    if s_exp == -0.5:
        return _tangent_cg(half, cx,
                           lambda v: project_tangent(metric.phi, v / sqrt_t))
    if s_exp == -1:
        return _tangent_cg(lambda v: half(half(v)), cx,
                           lambda v: project_tangent(metric.phi, v / metric.tdiag))
    raise ValueError(f"unsupported metric power {s_exp}; use -1, -0.5, 0.5 or 1")


class TangentOperators:
    """Omega, K and the metric at a fixed state, with the Hamiltonian cached.

    Works for any Hamiltonian-like object exposing ``apply`` over coefficient
    columns and an optional ``response`` from density variations on the grid
    to potential variations (None disables K).
    """

    def __init__(self, basis: PlaneWaveBasis, phi, ham: Hamiltonian,
                 metric: OrbitalMetric | None = None, canonical: bool = False):
        self.basis = basis
        self.phi = _coeffs(phi)
        self.ham = ham
        self.hphi = ham.apply(self.phi)
        self.lam = self.phi.conj().T @ self.hphi
        self.gauge = None
        if canonical:
            # rotate to the frame diagonalizing Phi* H Phi, so that the
            # columnwise metric (and everything built on it) does not depend
            # on the arbitrary unitary the caller happened to supply
            _, u = np.linalg.eigh(0.5 * (self.lam + self.lam.conj().T))
            self.phi = self.phi @ u
            self.hphi = self.hphi @ u
            self.lam = self.phi.conj().T @ self.hphi
            self.gauge = u
        self.metric = metric if metric is not None else orbital_metric(basis, self.phi)

    @classmethod
    def at_state(cls, model: MeanFieldModel, basis: PlaneWaveBasis, phi,
                 canonical: bool = False):
        return cls(basis, phi, hamiltonian_at(model, basis, phi), canonical=canonical)

    def project(self, y):
        return project_tangent(self.phi, y)

    def residual(self) -> np.ndarray:
        """Pperp H(P) Phi; zero exactly at critical points."""
        return self.project(self.hphi)

    def omega(self, cx) -> np.ndarray:
        return self.project(self.ham.apply(cx) - cx @ self.lam)

    def kop(self, cx) -> np.ndarray:
        if self.ham.response is None:
            return np.zeros_like(cx)
        rho_x = pair_density_grid(self.basis, self.phi, cx)
        dv = self.ham.response(rho_x)
        out = np.empty_like(self.phi)
        for i in range(self.phi.shape[1]):
            out[:, i] = self.basis.to_fourier(dv * self.basis.to_real(self.phi[:, i]))
        return self.project(out)

    def omega_plus_k(self, cx) -> np.ndarray:
        return self.omega(cx) + self.kop(cx)

    def metric_power(self, cx, s_exp: float) -> np.ndarray:
        return apply_metric_power(self.metric, cx, s_exp)


def residual(model: MeanFieldModel, basis: PlaneWaveBasis, phi) -> TangentSet:
    """Projected gradient Pperp H(P) Phi at the self-consistent Hamiltonian."""
    ops = TangentOperators.at_state(model, basis, phi)
    return TangentSet(basis, ops.residual())


def apply_omega(model: MeanFieldModel, basis: PlaneWaveBasis, phi, xi) -> TangentSet:
    ops = TangentOperators.at_state(model, basis, phi)
    return TangentSet(basis, ops.omega(_coeffs(xi)))


def apply_k(model: MeanFieldModel, basis: PlaneWaveBasis, phi, xi) -> TangentSet:
    ops = TangentOperators.at_state(model, basis, phi)
    return TangentSet(basis, ops.kop(_coeffs(xi)))


def exact_error_tangent(phi, reference) -> np.ndarray:
    """Half-tangent of X = Pi_P(P - P*): xi_i = -Pperp (P* phi_i).

    ``reference`` must already live on the same basis as ``phi`` (lift first).
    """
    cp = _coeffs(phi)
    cr = _coeffs(reference)
    if cr.shape[0] != cp.shape[0]:
        raise ValueError("reference orbitals live on a different basis; lift them first")
    pstar_phi = cr @ (cr.conj().T @ cp)
    return -project_tangent(cp, pstar_phi)
