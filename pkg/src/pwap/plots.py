"""Static figures rendered next to the CSV outputs.

Each plotting helper takes the already-assembled row dicts, so the figures
always show exactly what the CSV files contain.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _ok(rows, *keys):
    out = []
    for r in rows:
        if r.get("status", "ok") != "ok":
            continue
        try:
            out.append(tuple(float(r[k]) for k in keys))
        except (KeyError, TypeError, ValueError):
            continue
    return out


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_convergence(rows, path):
    """Variational vs Newton-refined errors against the cutoff."""
    series = [("E_err_variational", "energy, variational", "C0", "-"),
              ("E_err_newton", "energy, Newton", "C0", "--"),
              ("rho_err_L2", "density, variational", "C1", "-"),
              ("rho_err_newton_L2", "density, Newton", "C1", "--"),
              ("F_err_euclid", "forces, variational", "C2", "-"),
              ("F_err_newton_euclid", "forces, Newton", "C2", "--")]
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for key, label, color, style in series:
        pts = _ok(rows, "cutoff", key)
        if pts:
            x, y = zip(*pts)
            ax.loglog(x, [abs(v) for v in y], style, color=color, label=label,
                      marker="o", markersize=3)
    ax.set_xlabel("cutoff (hartree)")
    ax.set_ylabel("error")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    _save(fig, path)


def plot_bounds(rows, path):
    """Error-norm bounds and residual norms against the true error norms."""
    series = [("bound_plain", "plain bound"),
              ("bound_metric", "metric bound"),
              ("residual_norm", "|R|"),
              ("residual_norm_metric", "|M^-1/2 R|"),
              ("err_norm", "|error|"),
              ("err_norm_metric", "|M^1/2 error|")]
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for key, label in series:
        pts = _ok(rows, "cutoff", key)
        if pts:
            x, y = zip(*pts)
            ax.loglog(x, y, label=label, marker="o", markersize=3)
    ax.set_xlabel("cutoff (hartree)")
    ax.set_ylabel("norm")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    _save(fig, path)


def plot_estimators(rows, path):
    """Force error of the raw and post-processed values per cutoff."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for key, label in [("force_err_euclid", "raw F(P)"),
                       ("force_err_post_residual", "post-processed, M^-1 R"),
                       ("force_err_post_schur", "post-processed, Schur")]:
        pts = _ok(rows, "cutoff", key)
        if pts:
            x, y = zip(*pts)
            ax.loglog(x, y, label=label, marker="o", markersize=3)
    ax.set_xlabel("cutoff (hartree)")
    ax.set_ylabel("force error (euclidean)")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    _save(fig, path)


def plot_gp_norms(rows, path):
    """Measured defect norms with the fitted power law."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    pts = _ok(rows, "N", "norm")
    if pts:
        x, y = zip(*pts)
        ax.loglog([1 + 2 * v for v in x], y, "o-", label="measured")
    fit = _ok(rows, "N", "bound_fit")
    if fit:
        x, y = zip(*fit)
        ax.loglog([1 + 2 * v for v in x], y, "--", label="fit")
    ax.set_xlabel("basis size proxy 1 + 2N")
    ax.set_ylabel("defect operator norm")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    _save(fig, path)
