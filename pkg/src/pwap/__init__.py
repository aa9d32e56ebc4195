"""Periodic plane-wave mean-field solver with a posteriori error estimation.

The package solves a simplified Kohn-Sham / Gross-Pitaevskii ground-state
problem in a plane-wave basis and quantifies discretization error through
residual-based bounds, metric-preconditioned estimates, and a
frequency-split approximation of the error for quantities of interest
(energy, density, interatomic forces).
"""

from .archive import ArchiveError, read_state, write_state
from .config import ConfigError, GpCheckConfig, RunConfig, parse_config
from .estimators import (ErrorReport, FrequencySplit, NormBoundReport,
                         QoiEstimates, inv_jacobian_norm, norm_bound_report,
                         operator_norm_force_bound, qoi_error_estimates,
                         schur_residual)
from .geometry import (OrbitalMetric, OrbitalSet, TangentOperators, TangentSet,
                       apply_k, apply_metric_power, apply_omega,
                       exact_error_tangent, orbital_metric, project_tangent,
                       residual, tangent_inner, tangent_norm)
from .gp1d import (GpVerification, cosine_potential, gp_ground_state,
                   verify_proposition)
from .lattice import (FourierField, Lattice, PlaneWaveBasis, build_basis,
                      sobolev_norm, to_fourier, to_real)
from .model import (Atom, Density, Hamiltonian, MeanFieldModel,
                    apply_hamiltonian, density, energy, energy_terms,
                    force_derivative, forces, hamiltonian_at,
                    hartree_potential, local_potential, pair_density_grid)
from .solvers import (ScfOptions, SolveReport, lobpcg, lowdin, newton_step,
                      scf, solve_omega_plus_k, solve_tangent)

__version__ = "0.1.0"

__all__ = [
    "ArchiveError", "Atom", "ConfigError", "Density", "ErrorReport",
    "FourierField", "FrequencySplit", "GpCheckConfig", "GpVerification",
    "Hamiltonian", "Lattice", "MeanFieldModel", "NormBoundReport",
    "OrbitalMetric", "OrbitalSet", "PlaneWaveBasis", "QoiEstimates",
    "RunConfig", "ScfOptions", "SolveReport", "TangentOperators",
    "TangentSet", "apply_hamiltonian", "apply_k", "apply_metric_power",
    "apply_omega", "build_basis", "cosine_potential", "density", "energy",
    "energy_terms", "exact_error_tangent", "force_derivative", "forces",
    "gp_ground_state", "hamiltonian_at", "hartree_potential",
    "inv_jacobian_norm", "lobpcg", "local_potential", "lowdin",
    "newton_step", "norm_bound_report", "operator_norm_force_bound",
    "orbital_metric", "pair_density_grid", "parse_config", "project_tangent",
    "qoi_error_estimates", "read_state", "residual", "schur_residual", "scf",
    "sobolev_norm", "solve_omega_plus_k", "solve_tangent", "tangent_inner",
    "tangent_norm", "to_fourier", "to_real", "verify_proposition",
    "write_state",
]
