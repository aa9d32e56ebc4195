"""Command line driver: ground-state solves, convergence/estimator studies,
and the 1D GP resolvent check.

Exit codes: 0 success, 1 solver failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import plots
from .archive import ArchiveError, read_state, write_json, write_state
from .config import ConfigError, RunConfig, parse_config, reference_key
from .estimators import FrequencySplit, norm_bound_report, qoi_error_estimates
from .geometry import TangentOperators, exact_error_tangent, tangent_inner, tangent_norm
from .gp1d import cosine_potential, verify_proposition
from .lattice import build_basis
from .model import density, energy_terms, forces
from .reports import write_csv
from .solvers import newton_step, scf

CONVERGENCE_COLUMNS = ["cutoff", "E_err_variational", "E_err_newton",
                       "rho_err_L2", "rho_err_newton_L2", "F_err_euclid",
                       "F_err_newton_euclid", "status"]
BOUNDS_COLUMNS = ["cutoff", "bound_plain", "bound_metric", "residual_norm",
                  "residual_norm_metric", "op_norm_plain", "op_norm_metric",
                  "err_norm", "err_norm_metric", "status"]
GP_COLUMNS = ["N", "norm", "bound_fit"]


def _resolve_threads(cli_value):
    if cli_value is not None:
        return max(1, cli_value)
    env = os.environ.get("PWAP_THREADS", "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"PWAP_THREADS={env!r} is not an integer")
    return 1


def _cutoff_seed(base: int, ecut: float) -> int:
    ss = np.random.SeedSequence([int(base) & 0xFFFFFFFF,
                                 int(round(ecut * 1024)) & 0xFFFFFFFF])
    return int(ss.generate_state(1)[0])


def cmd_solve(cfg: RunConfig, outdir: Path) -> int:
    """Solve one ground state and archive orbitals, energy, forces, report."""
    model = cfg.require_model()
    ecut = cfg.ecut if cfg.ecut is not None else cfg.reference_cutoff
    if ecut is None:
        raise ConfigError(f"{cfg.path}: [study] ecut (or reference_cutoff) is "
                          f"required for solve")
    basis = build_basis(model.lattice, ecut, cfg.supersample)
    phi, report = scf(model, basis, cfg.scf)
    terms = energy_terms(model, basis, phi)
    outdir.mkdir(parents=True, exist_ok=True)
    write_state(outdir / "state.pwap", phi)
    write_json(outdir / "result.json", {
        "ecut": ecut,
        "nel": model.nel,
        "seed": cfg.seed,
        "nbasis": basis.nbasis,
        "energy": terms["total"],
        "energy_terms": terms,
        "forces": forces(model, basis, phi).tolist(),
        "report": {"converged": report.converged,
                   "iterations": report.iterations,
                   "residual_norm": report.residual_norm,
                   "energy_history": report.energy_history},
    })
    if not report.converged:
        print(f"solver stalled at residual {report.residual_norm:.3e}",
              file=sys.stderr)
        return 1
    return 0


def _reference_state(cfg: RunConfig, ref_basis, outdir: Path):
    cache = outdir / "cache" / f"reference-{reference_key(cfg)[:16]}.pwap"
    if cache.is_file():
        try:
            phi = read_state(cache)
            if phi.basis.nbasis == ref_basis.nbasis and \
                    np.array_equal(phi.basis.miller, ref_basis.miller):
                return phi
        except ArchiveError:
            pass
    phi, report = scf(cfg.model, ref_basis, cfg.scf)
    if not report.converged:
        raise RuntimeError(f"reference solve stalled at residual "
                           f"{report.residual_norm:.3e}")
    write_state(cache, phi)
    return phi


def _study_one(cfg: RunConfig, ecut, ref_basis, ref_phi, ref_data):
    """All three row dicts for one coarse cutoff."""
    model = cfg.model
    e_ref, f_ref, rho_ref = ref_data
    basis = build_basis(model.lattice, ecut, cfg.supersample)
    opts = replace(cfg.scf, seed=_cutoff_seed(cfg.seed, ecut))
    phi, report = scf(model, basis, opts)
    if not report.converged:
        raise RuntimeError(f"scf stalled at residual {report.residual_norm:.3e}")

    lifted = phi.lift(ref_basis)
    rho = density(ref_basis, lifted)
    e_var = energy_terms(model, basis, phi)["total"]
    f_var = forces(model, basis, phi)
    refined = newton_step(model, ref_basis, phi, tol=1e-10)
    e_newton = energy_terms(model, ref_basis, refined)["total"]
    f_newton = forces(model, ref_basis, refined)
    rho_newton = density(ref_basis, refined)

    def l2(grid):
        return float(np.sqrt(ref_basis.integrate(grid**2)))

    conv = {"cutoff": ecut, "status": "ok",
            "E_err_variational": e_var - e_ref,
            "E_err_newton": e_newton - e_ref,
            "rho_err_L2": l2(rho.grid - rho_ref),
            "rho_err_newton_L2": l2(rho_newton.grid - rho_ref),
            "F_err_euclid": float(np.linalg.norm(f_var - f_ref)),
            "F_err_newton_euclid": float(np.linalg.norm(f_newton - f_ref))}

    split = FrequencySplit.from_bases(basis, ref_basis)
    nbr = norm_bound_report(model, split, phi)
    ops = TangentOperators.at_state(model, ref_basis, lifted, canonical=True)
    x_exact = exact_error_tangent(ops.phi, ref_phi.coeffs)
    err_norm = tangent_norm(x_exact)
    err_norm_metric = float(np.sqrt(tangent_inner(
        x_exact, ops.metric_power(x_exact, 1))))
    bounds = {"cutoff": ecut, "status": "ok",
              "bound_plain": nbr.bound_plain, "bound_metric": nbr.bound_metric,
              "residual_norm": nbr.residual_norms[0],
              "residual_norm_metric": nbr.residual_norms[1],
              "op_norm_plain": nbr.op_norm_plain,
              "op_norm_metric": nbr.op_norm_metric,
              "err_norm": err_norm, "err_norm_metric": err_norm_metric}

    qoi = qoi_error_estimates(model, split, phi, reference=ref_phi)
    est = {"cutoff": ecut, "status": "ok"}
    est.update(qoi.scalars())
    est["force_err_euclid"] = float(np.linalg.norm(np.asarray(qoi.forces.value) - f_ref))
    for tag in ("exact", "residual", "schur"):
        post = getattr(qoi.forces, f"post_{tag}")
        if post is not None:
            est[f"force_err_post_{tag}"] = float(np.linalg.norm(np.asarray(post) - f_ref))
    return conv, bounds, est


def cmd_study(cfg: RunConfig, outdir: Path, threads: int) -> int:
    """Convergence, bound and estimator tables over a list of cutoffs."""
    model = cfg.require_model()
    cutoffs, ref_cut = cfg.require_study()
    ref_basis = build_basis(model.lattice, ref_cut, cfg.supersample)
    ref_phi = _reference_state(cfg, ref_basis, outdir)
    ref_data = (energy_terms(model, ref_basis, ref_phi)["total"],
                forces(model, ref_basis, ref_phi),
                density(ref_basis, ref_phi).grid)

    def one(ecut):
        try:
            return _study_one(cfg, ecut, ref_basis, ref_phi, ref_data)
        except (RuntimeError, ValueError) as exc:
            failed = {"cutoff": ecut, "status": f"failed: {exc}"}
            return failed, dict(failed), dict(failed)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, cutoffs))
    else:
        results = [one(e) for e in cutoffs]

    order = np.argsort(cutoffs)
    conv_rows = [results[i][0] for i in order]
    bound_rows = [results[i][1] for i in order]
    est_rows = [results[i][2] for i in order]

    est_columns = ["cutoff"]
    for row in est_rows:
        for key in row:
            if key not in est_columns and key != "status":
                est_columns.append(key)
    est_columns.append("status")

    outdir.mkdir(parents=True, exist_ok=True)
    write_csv(outdir / "convergence.csv", CONVERGENCE_COLUMNS, conv_rows)
    write_csv(outdir / "bounds.csv", BOUNDS_COLUMNS, bound_rows)
    write_csv(outdir / "estimators.csv", est_columns, est_rows)
    plots.plot_convergence(conv_rows, outdir / "convergence.png")
    plots.plot_bounds(bound_rows, outdir / "bounds.png")
    plots.plot_estimators(est_rows, outdir / "estimators.png")

    failures = [r for r in conv_rows if r.get("status") != "ok"]
    for row in failures:
        print(f"cutoff {row['cutoff']}: {row['status']}", file=sys.stderr)
    return 1 if failures else 0


def cmd_gp_check(cfg: RunConfig, outdir: Path) -> int:
    """Resolvent-defect norms of the 1D GP model over a cutoff list."""
    gp = cfg.require_gp()
    v = cosine_potential(gp.v_amplitude)
    result = verify_proposition(v, gp.cutoffs, ref_factor=gp.ref_factor,
                                seed=gp.seed)
    if result.decay_exponent is None:
        print("warning: single cutoff, decay fit skipped", file=sys.stderr)
    rows = []
    for n, norm in zip(result.cutoffs, result.norms):
        row = {"N": int(n) if float(n).is_integer() else n, "norm": norm}
        if result.decay_exponent is not None:
            row["bound_fit"] = result.fitted_bound(n)
        rows.append(row)
    outdir.mkdir(parents=True, exist_ok=True)
    write_csv(outdir / "prop_a1.csv", GP_COLUMNS, rows)
    plots.plot_gp_norms(rows, outdir / "prop_a1.png")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="pwap",
        description="Plane-wave mean-field solver with a posteriori error "
                    "estimation")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in (("solve", "solve one ground state and archive it"),
                      ("study", "convergence and estimator study over cutoffs"),
                      ("gp-check", "1D Gross-Pitaevskii resolvent check")):
        sp = sub.add_parser(name, help=doc)
        sp.add_argument("--config", required=True, metavar="PATH")
        sp.add_argument("--out", metavar="DIR",
                        help="output directory (overrides [output] dir)")
        sp.add_argument("--threads", type=int, metavar="N",
                        help="worker threads (also via PWAP_THREADS)")
    args = parser.parse_args(argv)

    try:
        cfg = parse_config(args.config)
        outdir = Path(args.out) if args.out else (cfg.outdir or Path("."))
        threads = _resolve_threads(args.threads)
        if args.command == "solve":
            return cmd_solve(cfg, outdir)
        if args.command == "study":
            return cmd_study(cfg, outdir, threads)
        return cmd_gp_check(cfg, outdir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # numerical failures: archive/csv state is kept
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
