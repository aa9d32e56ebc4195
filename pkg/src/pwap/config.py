"""INI run configuration: parsing, validation, and content hashing."""
from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .lattice import Lattice
from .model import Atom, MeanFieldModel
from .solvers import ScfOptions


class ConfigError(Exception):
    """Invalid run configuration; maps to exit code 2."""


@dataclass
class GpCheckConfig:
    cutoffs: list
    v_amplitude: float = 0.3
    ref_factor: int = 16
    seed: int = 0


@dataclass
class RunConfig:
    """Parsed configuration; sections a command does not use may be None."""
    path: Path
    model: MeanFieldModel | None = None
    ecut: float | None = None
    cutoffs: list = field(default_factory=list)
    reference_cutoff: float | None = None
    seed: int = 0
    supersample: int = 3
    scf: ScfOptions = field(default_factory=ScfOptions)
    outdir: Path | None = None
    gp: GpCheckConfig | None = None

    def require_model(self) -> MeanFieldModel:
        if self.model is None:
            raise ConfigError(f"{self.path}: missing [model] section")
        return self.model

    def require_study(self):
        if not self.cutoffs:
            raise ConfigError(f"{self.path}: [study] cutoffs is required")
        if self.reference_cutoff is None:
            raise ConfigError(f"{self.path}: [study] reference_cutoff is required")
        return self.cutoffs, self.reference_cutoff

    def require_gp(self) -> GpCheckConfig:
        if self.gp is None:
            raise ConfigError(f"{self.path}: missing [gp] section")
        return self.gp


def _get(parser, section, key, cast, default=..., path=""):
    if not parser.has_option(section, key):
        if default is ...:
            raise ConfigError(f"{path}: [{section}] {key} is required")
        return default
    raw = parser.get(section, key)
    try:
        return cast(raw)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{path}: [{section}] {key} = {raw!r}: {exc}") from exc


def _floats(raw: str):
    return [float(tok) for tok in raw.replace(",", " ").split()]


def _bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _parse_model(parser, path) -> MeanFieldModel:
    dim = _get(parser, "model", "dim", int, path=path)
    if dim not in (1, 2, 3):
        raise ConfigError(f"{path}: [model] dim must be 1, 2 or 3, got {dim}")
    cell = _get(parser, "model", "cell", _floats, path=path)
    if len(cell) != dim * dim:
        raise ConfigError(f"{path}: [model] cell needs {dim * dim} entries, "
                          f"got {len(cell)}")
    lattice = Lattice(np.asarray(cell).reshape(dim, dim))

    atoms = []
    raw_atoms = _get(parser, "model", "atoms", str, default="", path=path)
    for line in raw_atoms.splitlines():
        line = line.strip()
        if not line:
            continue
        vals = _floats(line)
        if len(vals) != dim + 2:
            raise ConfigError(f"{path}: [model] atoms line {line!r} needs "
                              f"{dim} coordinates, a depth and a width")
        atoms.append(Atom(vals[:dim], vals[dim], vals[dim + 1]))

    alpha = _get(parser, "model", "alpha", float, default=0.0, path=path)
    hartree = _get(parser, "model", "hartree", _bool, default=False, path=path)
    nel = _get(parser, "model", "nel", int, default=1, path=path)
    try:
        return MeanFieldModel(lattice, atoms, alpha=alpha, hartree=hartree, nel=nel)
    except ValueError as exc:
        raise ConfigError(f"{path}: [model]: {exc}") from exc


def parse_config(path) -> RunConfig:
    """Load and validate an INI run configuration."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"{path}: no such config file")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        # configparser errors carry line numbers already
        raise ConfigError(f"{path}: {exc}") from exc

    cfg = RunConfig(path=path)
    if parser.has_section("model"):
        cfg.model = _parse_model(parser, path)

    if parser.has_section("study"):
        cfg.cutoffs = _get(parser, "study", "cutoffs", _floats, default=[], path=path)
        if any(c <= 0 for c in cfg.cutoffs):
            raise ConfigError(f"{path}: [study] cutoffs must be positive")
        if sorted(cfg.cutoffs) != cfg.cutoffs:
            raise ConfigError(f"{path}: [study] cutoffs must be increasing")
        cfg.reference_cutoff = _get(parser, "study", "reference_cutoff", float,
                                    default=None, path=path)
        if cfg.reference_cutoff is not None and cfg.cutoffs and \
                cfg.reference_cutoff <= max(cfg.cutoffs):
            raise ConfigError(f"{path}: [study] reference_cutoff must exceed "
                              f"every entry of cutoffs")
        cfg.ecut = _get(parser, "study", "ecut", float, default=None, path=path)
        cfg.seed = _get(parser, "study", "seed", int, default=0, path=path)

    # defaults apply whether or not a [solver] section is present
    cfg.scf = ScfOptions(
        mixing=_get(parser, "solver", "mixing", float, default=0.7, path=path),
        maxiter=_get(parser, "solver", "maxiter", int, default=200, path=path),
        tol=_get(parser, "solver", "tol", float, default=1e-9, path=path),
        eig_tol=_get(parser, "solver", "eig_tol", float, default=1e-10, path=path),
        seed=cfg.seed)
    cfg.supersample = _get(parser, "solver", "supersample", int, default=3,
                           path=path)
    if cfg.scf.mixing <= 0 or cfg.scf.mixing > 1:
        raise ConfigError(f"{path}: [solver] mixing must lie in (0, 1]")

    if parser.has_section("output"):
        cfg.outdir = Path(_get(parser, "output", "dir", str, default=".", path=path))

    if parser.has_section("gp"):
        dim = _get(parser, "gp", "dim", int, default=1, path=path)
        if dim != 1:
            raise ConfigError(f"{path}: [gp] dim must be 1, got {dim}")
        cuts = _get(parser, "gp", "cutoffs", _floats, path=path)
        if len(cuts) == 0 or any(b <= a for a, b in zip(cuts, cuts[1:])):
            raise ConfigError(f"{path}: [gp] cutoffs must be strictly increasing")
        cfg.gp = GpCheckConfig(
            cutoffs=cuts,
            v_amplitude=_get(parser, "gp", "v_amplitude", float, default=0.3,
                             path=path),
            ref_factor=_get(parser, "gp", "ref_factor", int, default=16, path=path),
            seed=_get(parser, "gp", "seed", int, default=0, path=path))

    return cfg


def reference_key(cfg: RunConfig) -> str:
    """Content hash of everything the cached reference solution depends on."""
    model = cfg.require_model()
    payload = {
        "cell": np.asarray(model.lattice.vectors).ravel().tolist(),
        "atoms": [[*a.frac.tolist(), a.depth, a.width] for a in model.atoms],
        "alpha": model.alpha,
        "hartree": model.hartree,
        "nel": model.nel,
        "reference_cutoff": cfg.reference_cutoff,
        "supersample": cfg.supersample,
        "scf": [cfg.scf.mixing, cfg.scf.maxiter, cfg.scf.tol, cfg.scf.eig_tol],
        "seed": cfg.seed,
    }
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()
