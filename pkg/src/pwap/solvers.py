"""Ground-state solvers and linear solves on the tangent space.

The eigensolver is a block LOBPCG with orthonormal-basis Rayleigh-Ritz and a
dense fallback for very small problems. All randomness is seeded, so repeated
runs are bit-identical.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lattice import PlaneWaveBasis
from .model import MeanFieldModel, Hamiltonian, density, energy
from .geometry import OrbitalSet, TangentSet, TangentOperators, tangent_norm
from .model import _coeffs


@dataclass
class ScfOptions:
    """Knobs for the self-consistent loop."""
    mixing: float = 0.7          # fraction of the output density kept per step
    maxiter: int = 200
    tol: float = 1e-9            # on the tangent norm of the projected gradient
    eig_tol: float = 1e-10       # eigensolver residual tolerance
    seed: int = 0


@dataclass
class SolveReport:
    converged: bool
    iterations: int
    residual_norm: float
    energy_history: list = field(default_factory=list)


def _orthonormalize(block, drop_tol: float = 1e-12):
    """SVD-based orthonormal span; rank-deficient columns are dropped."""
    u, s, _ = np.linalg.svd(np.asarray(block, dtype=complex), full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return u[:, :0]
    return u[:, s > drop_tol * s[0]]


def lowdin(coeffs):
    """Closest orthonormal frame A (A* A)^(-1/2); fails on rank deficiency."""
    g = coeffs.conj().T @ coeffs
    w, v = np.linalg.eigh(g)
    if w[0] <= 1e-14:
        raise RuntimeError("orbital frame is numerically rank deficient")
    return coeffs @ (v * w**-0.5) @ v.conj().T


def lobpcg(apply_h, basis: PlaneWaveBasis, nel: int, tol: float = 1e-10,
           preconditioner=None, x0=None, seed: int = 0, maxiter: int = 300):
    """Lowest ``nel`` eigenpairs of a Hermitian operator given by its action.

    Returns (eigenvalues, OrbitalSet). Small problems (3 nel >= nbasis) go
    through a dense eigendecomposition instead.
    """
    n = basis.nbasis
    if nel < 1 or nel > n:
        raise ValueError(f"need 1 <= nel <= {n}, got {nel}")
    rng = np.random.default_rng(seed)

    if 3 * nel >= n:
        h = np.asarray(apply_h(np.eye(n, dtype=complex)))
        h = 0.5 * (h + h.conj().T)
        w, v = np.linalg.eigh(h)
        return w[:nel], OrbitalSet(basis, v[:, :nel])

    def fill(block, want):
        # top up with seeded random directions if the span collapsed
        while block.shape[1] < want:
            extra = rng.standard_normal((n, want - block.shape[1])) \
                + 1j * rng.standard_normal((n, want - block.shape[1]))
            block = _orthonormalize(np.hstack([block, extra]))
        return block

    if x0 is not None:
        x = _orthonormalize(_coeffs(x0))
    else:
        x = np.empty((n, 0), dtype=complex)
    x = fill(x, nel)[:, :nel]

    hx = np.asarray(apply_h(x))
    prev = None
    theta = np.real(np.sum(np.conj(x) * hx, axis=0))
    for _ in range(maxiter):
        res = hx - x * theta[None, :]
        resnorm = np.linalg.norm(res, axis=0)
        if np.all(resnorm <= tol * np.maximum(1.0, np.abs(theta))):
            break
        w = preconditioner(res) if preconditioner is not None else res
        blocks = [x, w] if prev is None else [x, w, prev]
        s = fill(_orthonormalize(np.hstack(blocks)), nel)
        hs = np.asarray(apply_h(s))
        a = s.conj().T @ hs
        a = 0.5 * (a + a.conj().T)
        evals, evecs = np.linalg.eigh(a)
        xnew = s @ evecs[:, :nel]
        prev = _orthonormalize(xnew - x @ (x.conj().T @ xnew))
        x = xnew
        hx = hs @ evecs[:, :nel]
        theta = evals[:nel]
    return theta, OrbitalSet(basis, x)


def _kinetic_preconditioner(basis: PlaneWaveBasis):
    w = 1.0 / (basis.kinetic + 1.0)
    return lambda r: w[:, None] * r


def scf(model: MeanFieldModel, basis: PlaneWaveBasis,
        opts: ScfOptions | None = None):
    """Self-consistent ground state by eigensolve + linear density mixing.

    Convergence is judged on the tangent norm of Pperp H(P) Phi with H taken
    at the density of the current iterate, so the reported residual is the
    true projected gradient, not the mixed-Hamiltonian one.
    """
    opts = opts or ScfOptions()
    if not 0 < opts.mixing <= 1:
        raise ValueError(f"mixing must lie in (0, 1], got {opts.mixing}")
    precond = _kinetic_preconditioner(basis)

    ham0 = Hamiltonian.from_model(model, basis, None)
    _, phi = lobpcg(ham0.apply, basis, model.nel, tol=opts.eig_tol,
                    preconditioner=precond, seed=opts.seed)
    rho_in = density(basis, phi).grid

    history = []
    rnorm = np.inf
    it = 0
    for it in range(1, opts.maxiter + 1):
        ham = _ham_at_grid(model, basis, rho_in)
        _, phi = lobpcg(ham.apply, basis, model.nel, tol=opts.eig_tol,
                        preconditioner=precond, x0=phi.coeffs, seed=opts.seed)
        rho_out = density(basis, phi).grid
        history.append(energy(model, basis, phi))
        ops = TangentOperators.at_state(model, basis, phi)
        rnorm = tangent_norm(ops.residual())
        if rnorm <= opts.tol:
            return phi, SolveReport(True, it, float(rnorm), history)
        rho_in = (1.0 - opts.mixing) * rho_in + opts.mixing * rho_out
    return phi, SolveReport(False, it, float(rnorm), history)


def _ham_at_grid(model: MeanFieldModel, basis: PlaneWaveBasis, rho_grid) -> Hamiltonian:
    from .model import Density
    return Hamiltonian.from_model(model, basis, Density(basis, rho_grid))


def solve_tangent(ops: TangentOperators, rhs, tol: float = 1e-9,
                  restrict_to_coarse: int | None = None, maxiter: int = 2000):
    """CG for (Omega + K) Xi = rhs on the tangent space, M^-1 preconditioned.

    With ``restrict_to_coarse = n`` the solve is Galerkin-restricted to
    tangent vectors supported on the first n basis functions; the base
    orbitals must then be coarse-supported themselves so that the row mask
    and the tangent projector commute. Raises on indefiniteness.
    """
    nc = restrict_to_coarse
    phi = ops.phi
    if nc is not None:
        if nc < 1 or nc > phi.shape[0]:
            raise ValueError(f"restriction size {nc} outside the basis")
        if np.linalg.norm(phi[nc:]) > 1e-10:
            raise ValueError("restricted solve needs coarse-supported orbitals")

    def proj(v):
        if nc is not None:
            v = v.copy()
            v[nc:] = 0
        return ops.project(v)

    def apply_a(v):
        return proj(ops.omega_plus_k(v))

    def apply_minv(v):
        return proj(ops.metric_power(v, -1))

    b = proj(np.asarray(rhs, dtype=complex))
    bnorm = np.linalg.norm(b)
    x = np.zeros_like(b)
    if bnorm == 0:
        return x, 0
    r = b.copy()
    z = apply_minv(r)
    p = z.copy()
    rz = np.real(np.vdot(r, z))
    for it in range(1, maxiter + 1):
        ap = apply_a(p)
        pap = np.real(np.vdot(p, ap))
        if pap <= 0:
            raise RuntimeError("tangent operator is not positive definite "
                               "(state is not a stable critical point)")
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        if np.linalg.norm(r) <= tol * bnorm:
            return x, it
        z = apply_minv(r)
        rz_new = np.real(np.vdot(r, z))
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise RuntimeError(f"tangent CG did not reach {tol:g} in {maxiter} iterations")


def solve_omega_plus_k(model: MeanFieldModel, basis: PlaneWaveBasis, phi, rhs,
                       tol: float = 1e-9,
                       restrict_to_coarse: int | None = None) -> TangentSet:
    """Solve (Omega + K) Xi = rhs at the state phi; rhs is projected first."""
    ops = TangentOperators.at_state(model, basis, phi)
    x, _ = solve_tangent(ops, _coeffs(rhs), tol, restrict_to_coarse)
    return TangentSet(basis, x)


def newton_step(model: MeanFieldModel, fine_basis: PlaneWaveBasis,
                phi_coarse: OrbitalSet, tol: float = 1e-10) -> OrbitalSet:
    """One Riemannian Newton step of a coarse state inside a finer basis.

    Lifts, solves (Omega + K) delta = R(P) on the fine tangent space and
    retracts Phi - delta back to the manifold.
    """
    lifted = phi_coarse.lift(fine_basis)
    ops = TangentOperators.at_state(model, fine_basis, lifted)
    delta, _ = solve_tangent(ops, ops.residual(), tol)
    return OrbitalSet(fine_basis, lowdin(lifted.coeffs - delta))
