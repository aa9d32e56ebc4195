import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pwap import Atom, Lattice, MeanFieldModel, ScfOptions, build_basis, scf


@pytest.fixture(scope="session")
def lattice1d():
    return Lattice([[2 * np.pi]])


@pytest.fixture(scope="session")
def two_well_model(lattice1d):
    """Two asymmetric Gaussian wells with a quartic term; no Hartree."""
    return MeanFieldModel(
        lattice1d,
        [Atom((0.21,), -4.0, 0.45), Atom((0.63,), -3.2, 0.35)],
        alpha=2.0, hartree=False, nel=2)


@pytest.fixture(scope="session")
def hartree_model(lattice1d):
    return MeanFieldModel(
        lattice1d,
        [Atom((0.35,), -3.0, 0.4)],
        alpha=1.0, hartree=True, nel=2)


@pytest.fixture(scope="session")
def small_basis(lattice1d):
    # 11 plane waves; small enough for every dense oracle
    return build_basis(lattice1d, 16.0)


@pytest.fixture(scope="session")
def small_state(two_well_model, small_basis):
    # the outer residual floors near the eigensolver tolerance, so tighten both
    phi, report = scf(two_well_model, small_basis,
                      ScfOptions(tol=1e-11, eig_tol=1e-13))
    assert report.converged
    return phi
