"""A posteriori error bounds and estimates for plane-wave ground states.

Everything is evaluated at a coarse solution lifted into a fine (reference)
basis, where the variational residual is fully representable. Three error
tangents are compared throughout:

* exact:    Pi_P(P - P*), available when a reference state is supplied,
* residual: M^-1 R(P), the metric-preconditioned residual,
* schur:    the block solve that inverts (Omega + K) on low frequencies and
            replaces it by the metric on high frequencies.

First-order QoI errors follow by pairing each tangent with the derivative of
the quantity: dE.X = <R, X>, the density variation rho_X, and the (linear,
hence exact) force derivative.

All report scalars are gauge invariant: operators are built in the frame
that diagonalizes Phi* H Phi, which is canonical up to column phases that no
scalar below can see.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lattice import PlaneWaveBasis
from .model import (MeanFieldModel, _coeffs, atom_gradient_grid, energy, forces,
                    force_derivative, pair_density_grid)
from .geometry import (OrbitalSet, TangentSet, TangentOperators,
                       apply_metric_power, exact_error_tangent,
                       tangent_inner, tangent_norm)
from .solvers import solve_tangent


class FrequencySplit:
    """Partition of a fine G-list into |G|^2/2 <= ecut ("low") and the rest.

    The basis ordering is nondecreasing in |G|, so the low block is exactly
    the first ``n_low`` coefficients and lifted coarse data keeps its block.
    """

    def __init__(self, fine: PlaneWaveBasis, ecut: float):
        if ecut <= 0 or ecut > fine.ecut:
            raise ValueError(f"split cutoff must lie in (0, {fine.ecut}], got {ecut}")
        self.fine = fine
        self.ecut = float(ecut)
        self.mask_low = fine.g2 <= 2.0 * self.ecut
        self.mask_high = ~self.mask_low
        self.n_low = int(np.count_nonzero(self.mask_low))
        if not self.mask_low[: self.n_low].all():
            raise AssertionError("basis ordering violates the frequency split")

    @classmethod
    def from_bases(cls, coarse: PlaneWaveBasis, fine: PlaneWaveBasis):
        if coarse.nbasis >= fine.nbasis:
            raise ValueError("fine basis must strictly contain the coarse basis")
        split = cls(fine, coarse.ecut)
        if split.n_low != coarse.nbasis or \
                not np.array_equal(fine.miller[: coarse.nbasis], coarse.miller):
            raise ValueError("coarse basis is not the low block of the fine basis")
        return split


def _on_fine(phi, fine: PlaneWaveBasis) -> OrbitalSet:
    if isinstance(phi, OrbitalSet):
        if phi.basis.nbasis == fine.nbasis and \
                np.array_equal(phi.basis.miller, fine.miller):
            return phi
        return phi.lift(fine)
    arr = _coeffs(phi)
    if arr.shape[0] != fine.nbasis:
        raise ValueError("orbitals do not match the fine basis; pass an "
                         "OrbitalSet so they can be lifted")
    return OrbitalSet(fine, arr)


def _c2r(z):
    return np.concatenate([np.real(z), np.imag(z)])


def _r2c(v):
    half = v.size // 2
    return v[:half] + 1j * v[half:]


def _extreme_eigenvalue(apply_op, start, mode: str, precond=None,
                        tol: float = 1e-9, maxiter: int = 400) -> float:
    """Locally optimal (block size 1) preconditioned eigeniteration.

    Finds the smallest ("min") or largest ("max") eigenvalue. The operator
    only needs to be real-linear and self-adjoint for Re <.,.> (the
    mean-field response is not complex-linear), so the Rayleigh-Ritz space
    is spanned in the real representation [Re; Im] where any such operator
    is a symmetric matrix.
    """

    def apply_r(v):
        return _c2r(apply_op(_r2c(v)))

    x = _c2r(np.asarray(start, dtype=complex))
    x = x / np.linalg.norm(x)
    ax = apply_r(x)
    theta = float(x @ ax)
    p = None
    for _ in range(maxiter):
        r = ax - theta * x
        if np.linalg.norm(r) <= tol * max(1.0, abs(theta)):
            break
        w = _c2r(precond(_r2c(r))) if precond is not None else r
        cols = [x, w] if p is None else [x, w, p]
        b = np.stack(cols, axis=1)
        u, s, _ = np.linalg.svd(b, full_matrices=False)
        u = u[:, s > 1e-10 * s[0]]
        # operator products are recomputed on the orthonormalized basis:
        # recycling them through near-singular bases lets errors compound
        # until Ritz values leave the true spectrum
        au = np.stack([apply_r(u[:, j]) for j in range(u.shape[1])], axis=1)
        h = u.T @ au
        h = 0.5 * (h + h.T)
        evals, evecs = np.linalg.eigh(h)
        idx = 0 if mode == "min" else -1
        theta = float(evals[idx])
        y = evecs[:, idx]
        xnew, axnew = u @ y, au @ y
        p = xnew - float(x @ xnew) * x
        pn = np.linalg.norm(p)
        p = p / pn if pn > 1e-12 else None
        x, ax = xnew, axnew
    return theta


def _tangent_start(ops: TangentOperators, seed: int):
    n, k = ops.phi.shape
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
    return ops.project(v).ravel()


def _op_norm_plain(ops: TangentOperators, tol: float, seed: int) -> float:
    """1 / lambda_min(Omega + K) on the tangent space."""
    n, k = ops.phi.shape
    lam_min = _extreme_eigenvalue(
        lambda v: ops.omega_plus_k(v.reshape(n, k)).ravel(),
        _tangent_start(ops, seed), "min",
        precond=lambda v: ops.metric_power(v.reshape(n, k), -1).ravel(),
        tol=tol)
    if lam_min <= 0:
        raise RuntimeError(f"Omega + K is not coercive (lambda_min = {lam_min:.3e})")
    return 1.0 / lam_min


def _op_norm_metric(ops: TangentOperators, tol: float, seed: int) -> float:
    """Largest eigenvalue of M^(1/2) (Omega + K)^-1 M^(1/2)."""
    n, k = ops.phi.shape

    def apply_b(v):
        y = apply_metric_power(ops.metric, v.reshape(n, k), 0.5)
        z, _ = solve_tangent(ops, y, tol=min(tol, 1e-10) * 1e-1)
        return apply_metric_power(ops.metric, z, 0.5).ravel()

    return _extreme_eigenvalue(apply_b, _tangent_start(ops, seed), "max", tol=tol)


def inv_jacobian_norm(model: MeanFieldModel, basis: PlaneWaveBasis, phi,
                      metric=None, tol: float = 1e-9, seed: int = 0) -> float:
    """Operator norm of the inverse Jacobian of the gradient map.

    Without a metric this is 1/lambda_min(Omega + K); with ``metric`` (any
    truthy value selects the state's own metric, or pass an OrbitalMetric)
    it is the largest eigenvalue of M^(1/2) (Omega + K)^-1 M^(1/2).
    """
    ops = TangentOperators.at_state(model, basis, phi, canonical=True)
    if metric is None or metric is False:
        return _op_norm_plain(ops, tol, seed)
    if metric is not True:
        ops.metric = metric
    return _op_norm_metric(ops, tol, seed)


@dataclass
class NormBoundReport:
    """Error-norm bounds; iterates as the (plain, metric, residual_norms) triple."""
    bound_plain: float
    bound_metric: float
    residual_norms: tuple
    op_norm_plain: float
    op_norm_metric: float

    def __iter__(self):
        return iter((self.bound_plain, self.bound_metric, self.residual_norms))


def norm_bound_report(model: MeanFieldModel, split: FrequencySplit, phi,
                      tol: float = 1e-9, seed: int = 0) -> NormBoundReport:
    """Residual-based bounds on the error norm of a coarse state.

    bound_plain  = |(Omega+K)^-1| |R|_F          (controls |Pi_P(P - P*)|_F)
    bound_metric = |M^(1/2)(Omega+K)^-1 M^(1/2)| |M^(-1/2) R|_F
                                                 (controls |M^(1/2) Pi_P(P - P*)|_F)

    residual_norms carries (|R|_F, |M^(-1/2) R|_F); the latter doubles as the
    heuristic error estimate.
    """
    lifted = _on_fine(phi, split.fine)
    ops = TangentOperators.at_state(model, split.fine, lifted, canonical=True)
    r = ops.residual()
    rnorm = tangent_norm(r)
    rnorm_metric = tangent_norm(ops.metric_power(r, -0.5))
    op_plain = _op_norm_plain(ops, tol, seed)
    op_metric = _op_norm_metric(ops, tol, seed)
    return NormBoundReport(op_plain * rnorm, op_metric * rnorm_metric,
                           (rnorm, rnorm_metric), op_plain, op_metric)


def _schur_tangent(ops: TangentOperators, n_low: int, tol: float):
    """Block-approximate solve of (Omega + K) Xi = R.

    High block: M is diagonal there (the orbitals are coarse-supported, so
    the tangent projector acts as the identity on high frequencies) and
    replaces (Omega+K)_22. Low block: exact restricted solve with the
    coupling (Omega+K)_12 moved to the right-hand side.
    """
    if np.linalg.norm(ops.phi[n_low:]) > 1e-10:
        raise ValueError("frequency-split estimate needs coarse-supported orbitals")
    r = ops.residual()
    r2 = r.copy()
    r2[:n_low] = 0
    xi2 = r2 / ops.metric.tdiag
    coupled = ops.omega_plus_k(xi2)
    coupled[n_low:] = 0
    rhs1 = (r - r2) - coupled
    xi1, iters = solve_tangent(ops, rhs1, tol, restrict_to_coarse=n_low)
    return xi1 + xi2, iters


def schur_residual(model: MeanFieldModel, split: FrequencySplit, phi,
                   tol: float = 1e-10) -> TangentSet:
    """Frequency-split approximation of the error tangent (Omega+K)^-1 R.

    Returned in the caller's orbital frame, so it pairs directly with phi.
    """
    lifted = _on_fine(phi, split.fine)
    ops = TangentOperators.at_state(model, split.fine, lifted, canonical=True)
    xi, _ = _schur_tangent(ops, split.n_low, tol)
    return TangentSet(split.fine, xi @ ops.gauge.conj().T)


@dataclass
class QoiEstimates:
    """First-order error estimates of one quantity against each tangent.

    ``value`` is the quantity at the coarse state; ``post_*`` the
    post-processed value A(P) - dA.X (absent for the density, whose error is
    tracked through the L2 norm of rho_X only).
    """
    value: object = None
    estimate_exact: object = None
    estimate_residual: object = None
    estimate_schur: object = None
    post_exact: object = None
    post_residual: object = None
    post_schur: object = None


@dataclass
class ErrorReport:
    energy: QoiEstimates
    density: QoiEstimates
    forces: QoiEstimates
    residual_norm: float
    residual_norm_metric: float
    op_norm_plain: float | None = None
    op_norm_metric: float | None = None
    diagnostics: dict = field(default_factory=dict)

    def scalars(self) -> dict:
        """Flat name -> float view of every scalar in the report."""
        out = {"residual_norm": self.residual_norm,
               "residual_norm_metric": self.residual_norm_metric}
        if self.op_norm_plain is not None:
            out["op_norm_plain"] = self.op_norm_plain
        if self.op_norm_metric is not None:
            out["op_norm_metric"] = self.op_norm_metric
        out["energy_value"] = self.energy.value
        fval = np.asarray(self.forces.value)
        for (b, j), v in np.ndenumerate(fval):
            out[f"force_{b}_{j}"] = float(v)
        for tag in ("exact", "residual", "schur"):
            e = getattr(self.energy, f"estimate_{tag}")
            if e is None:
                continue
            out[f"energy_est_{tag}"] = float(e)
            out[f"energy_post_{tag}"] = float(getattr(self.energy, f"post_{tag}"))
            out[f"density_est_{tag}"] = float(getattr(self.density, f"estimate_{tag}"))
            fest = np.asarray(getattr(self.forces, f"estimate_{tag}"))
            fpost = np.asarray(getattr(self.forces, f"post_{tag}"))
            out[f"force_est_{tag}_euclid"] = float(np.linalg.norm(fest))
            for (b, j), v in np.ndenumerate(fest):
                out[f"force_{b}_{j}_est_{tag}"] = float(v)
            for (b, j), v in np.ndenumerate(fpost):
                out[f"force_{b}_{j}_post_{tag}"] = float(v)
        return out


def qoi_error_estimates(model: MeanFieldModel, split: FrequencySplit, phi,
                        reference: OrbitalSet | None = None,
                        tol: float = 1e-10) -> ErrorReport:
    """First-order energy, density and force error estimates of a coarse state.

    With a ``reference`` state the exact-error tangent column is filled in;
    the residual and Schur columns never need one.
    """
    fine = split.fine
    lifted = _on_fine(phi, fine)
    ops = TangentOperators.at_state(model, fine, lifted, canonical=True)
    cphi = ops.phi
    r = ops.residual()

    tangents = {}
    if reference is not None:
        tangents["exact"] = exact_error_tangent(cphi, _on_fine(reference, fine).coeffs)
    tangents["residual"] = ops.metric_power(r, -1)
    tangents["schur"], schur_iters = _schur_tangent(ops, split.n_low, tol)

    e_val = energy(model, fine, cphi)
    f_val = forces(model, fine, cphi)
    energy_q = QoiEstimates(value=e_val)
    density_q = QoiEstimates()
    forces_q = QoiEstimates(value=f_val)
    for tag, xi in tangents.items():
        de = tangent_inner(r, xi)
        rho_x = pair_density_grid(fine, cphi, xi)
        df = force_derivative(model, fine, cphi, xi)
        setattr(energy_q, f"estimate_{tag}", de)
        setattr(energy_q, f"post_{tag}", e_val - de)
        setattr(density_q, f"estimate_{tag}",
                float(np.sqrt(fine.integrate(rho_x**2))))
        setattr(forces_q, f"estimate_{tag}", df)
        setattr(forces_q, f"post_{tag}", f_val - df)

    report = ErrorReport(
        energy=energy_q, density=density_q, forces=forces_q,
        residual_norm=tangent_norm(r),
        residual_norm_metric=tangent_norm(ops.metric_power(r, -0.5)),
        diagnostics={"schur_cg_iterations": schur_iters,
                     "fine_nbasis": fine.nbasis, "low_nbasis": split.n_low,
                     "tol": tol})
    bad = [k for k, v in report.scalars().items() if not np.isfinite(v)]
    if bad:
        raise RuntimeError(f"non-finite entries in error report: {bad}")
    return report


def operator_norm_force_bound(model: MeanFieldModel, basis: PlaneWaveBasis, phi,
                              atom: int, direction: int,
                              error_norm: float | None = None,
                              tol: float = 1e-9, seed: int = 0) -> float:
    """Cauchy-Schwarz force-error bound |dF . X| <= sqrt(2) |Pperp dV Phi|_F |X|_F.

    ``error_norm`` should bound |Pi_P(P - P*)|_F; when omitted it is taken as
    the plain residual bound |(Omega+K)^-1| |R|_F at this state. Deliberately
    pessimistic; kept for comparison against the linearized estimates.
    """
    lifted = _on_fine(phi, basis) if isinstance(phi, OrbitalSet) else phi
    ops = TangentOperators.at_state(model, basis, lifted, canonical=True)
    dv = atom_gradient_grid(model, basis, atom, direction)
    dvphi = np.empty_like(ops.phi)
    for i in range(ops.phi.shape[1]):
        dvphi[:, i] = basis.to_fourier(dv * basis.to_real(ops.phi[:, i]))
    factor = np.sqrt(2.0) * np.linalg.norm(ops.project(dvphi))
    if error_norm is None:
        error_norm = _op_norm_plain(ops, tol, seed) * tangent_norm(ops.residual())
    return float(factor * error_norm)
