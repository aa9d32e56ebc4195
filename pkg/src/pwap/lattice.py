"""Periodic cells, plane-wave spheres and FFT transforms.

Fields are expanded on the L2-orthonormal plane waves

    e_G(x) = exp(i G.x) / sqrt(|cell|),    |G|^2 / 2 <= ecut,

with G running over the reciprocal lattice. Coefficient vectors follow the
basis ordering (nondecreasing |G|, ties broken lexicographically on the
integer coordinates), so the G-list of a smaller cutoff is always a prefix
of the G-list of a larger cutoff on the same lattice.
"""
from __future__ import annotations

import numpy as np

_GOOD_PRIMES = (2, 3, 5)


def _good_size(n: int) -> int:
    """Smallest integer >= n whose prime factors are all in 2, 3, 5."""
    n = max(int(n), 1)
    while True:
        m = n
        for p in _GOOD_PRIMES:
            while m % p == 0:
                m //= p
        if m == 1:
            return n
        n += 1


class Lattice:
    """Bravais lattice of dimension 1, 2 or 3.

    Attributes
    ----------
    vectors : (d, d) ndarray
        Cell vectors as rows, in bohr.
    dim : int
        Spatial dimension.
    volume : float
        Cell volume in bohr^d.
    reciprocal : (d, d) ndarray
        Reciprocal vectors as rows; reciprocal[i] . vectors[j] = 2 pi delta_ij.
    """

    def __init__(self, vectors):
        vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
        if vectors.ndim != 2 or vectors.shape[0] != vectors.shape[1]:
            raise ValueError(f"cell vectors must form a square matrix, got shape {vectors.shape}")
        d = vectors.shape[0]
        if d not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {d}")
        det = np.linalg.det(vectors)
        if abs(det) < 1e-14:
            raise ValueError("cell vectors are linearly dependent")
        self.vectors = vectors
        self.dim = d
        self.volume = abs(det)
        self.reciprocal = 2 * np.pi * np.linalg.inv(vectors).T

    def cartesian(self, frac):
        """Cartesian coordinates of fractional positions (last axis = d)."""
        return np.asarray(frac, dtype=float) @ self.vectors

    def __repr__(self):
        return f"Lattice(dim={self.dim}, volume={self.volume:.6g})"


class PlaneWaveBasis:
    """Plane-wave sphere |G|^2/2 <= ecut plus the FFT grid it embeds into.

    The FFT grid holds every mode up to ``supersample`` times the sphere
    extent in each direction, so pointwise products of up to
    ``supersample + 1`` basis functions are alias-free on it. The default
    supersample = 3 resolves cubic products exactly.

    Attributes
    ----------
    lattice : Lattice
    ecut : float
        Kinetic-energy cutoff in hartree.
    supersample : int
    miller : (nbasis, d) int ndarray
        Integer coordinates of the sphere G-vectors, in basis order.
    gvecs : (nbasis, d) ndarray
        Cartesian G-vectors, bohr^-1.
    g2 : (nbasis,) ndarray
        |G|^2.
    kinetic : (nbasis,) ndarray
        |G|^2 / 2, the plane-wave kinetic energies.
    nbasis : int
    grid_shape : tuple of int
        FFT grid dimensions (rounded up to products of 2, 3, 5).
    grid_g2 : ndarray of grid_shape
        |G|^2 of every FFT grid mode.
    """

    def __init__(self, lattice: Lattice, ecut: float, supersample: int = 3):
        if ecut <= 0:
            raise ValueError(f"ecut must be positive, got {ecut}")
        supersample = int(supersample)
        if supersample < 2:
            raise ValueError(f"supersample must be >= 2, got {supersample}")
        self.lattice = lattice
        self.ecut = float(ecut)
        self.supersample = supersample
        d = lattice.dim

        # |m_i| <= |G| |a_i| / (2 pi) bounds the integer search box
        gmax = np.sqrt(2.0 * ecut)
        alen = np.linalg.norm(lattice.vectors, axis=1)
        bounds = np.ceil(gmax * alen / (2 * np.pi)).astype(int) + 1
        axes = [np.arange(-b, b + 1) for b in bounds]
        mesh = np.meshgrid(*axes, indexing="ij")
        miller = np.stack([m.ravel() for m in mesh], axis=1)
        gvecs = miller @ lattice.reciprocal
        g2 = np.einsum("ij,ij->i", gvecs, gvecs)
        keep = g2 <= 2.0 * ecut
        miller, gvecs, g2 = miller[keep], gvecs[keep], g2[keep]

        # nondecreasing |G|, ties broken lexicographically on integer coords
        keys = tuple(miller[:, ax] for ax in reversed(range(d))) + (np.round(g2, 9),)
        order = np.lexsort(keys)
        self.miller = np.ascontiguousarray(miller[order])
        self.gvecs = np.ascontiguousarray(gvecs[order])
        self.g2 = np.ascontiguousarray(g2[order])
        self.kinetic = 0.5 * self.g2
        self.nbasis = len(self.g2)

        extent = np.abs(self.miller).max(axis=0)
        self.grid_shape = tuple(_good_size(2 * supersample * e + 1) for e in extent)
        self._ntot = int(np.prod(self.grid_shape))
        self._embed = tuple(
            np.mod(self.miller[:, ax], self.grid_shape[ax]) for ax in range(d)
        )

        # integer coordinates and |G|^2 of every FFT grid mode
        freq = [np.fft.fftfreq(n, 1.0 / n).astype(int) for n in self.grid_shape]
        gmesh = np.meshgrid(*freq, indexing="ij")
        grid_miller = np.stack([m.ravel() for m in gmesh], axis=1)
        grid_g = grid_miller @ lattice.reciprocal
        self.grid_gvecs = grid_g.reshape(self.grid_shape + (d,))
        self.grid_g2 = np.einsum("ij,ij->i", grid_g, grid_g).reshape(self.grid_shape)

    # -- transforms ---------------------------------------------------------

    def to_real(self, coeffs):
        """Real-space values on the FFT grid of sum_G c_G e_G."""
        coeffs = np.asarray(coeffs)
        if coeffs.shape != (self.nbasis,):
            raise ValueError(f"expected {self.nbasis} coefficients, got shape {coeffs.shape}")
        grid = np.zeros(self.grid_shape, dtype=complex)
        grid[self._embed] = coeffs
        return np.fft.ifftn(grid) * (self._ntot / np.sqrt(self.lattice.volume))

    def to_fourier(self, grid):
        """Coefficients on the sphere of a grid field (projection if not band-limited)."""
        grid = np.asarray(grid)
        if grid.shape != self.grid_shape:
            raise ValueError(f"expected grid shape {self.grid_shape}, got {grid.shape}")
        hat = np.fft.fftn(grid)
        return hat[self._embed] * (np.sqrt(self.lattice.volume) / self._ntot)

    def integrate(self, grid):
        """Cell integral of a grid field (exact for band-limited integrands)."""
        return np.sum(grid) * (self.lattice.volume / self._ntot)

    def amplitudes_to_grid(self, hat_grid):
        """Real-space values of sum_q f_q exp(i q.x) from grid-mode amplitudes."""
        return np.fft.ifftn(hat_grid) * self._ntot

    def grid_to_amplitudes(self, grid):
        """Grid-mode amplitudes f_q of a real-space field: f(x) = sum_q f_q exp(i q.x)."""
        return np.fft.fftn(grid) / self._ntot

    def embed_amplitudes(self, sphere_coeffs):
        """Scatter sphere-indexed amplitudes onto the full FFT mode grid."""
        hat = np.zeros(self.grid_shape, dtype=complex)
        hat[self._embed] = sphere_coeffs
        return hat

    def __repr__(self):
        return (f"PlaneWaveBasis(ecut={self.ecut}, nbasis={self.nbasis}, "
                f"grid={self.grid_shape})")


class FourierField:
    """Coefficients of a periodic field indexed by the basis G-list."""

    def __init__(self, basis: PlaneWaveBasis, coeffs):
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.shape != (basis.nbasis,):
            raise ValueError(f"expected {basis.nbasis} coefficients, got shape {coeffs.shape}")
        self.basis = basis
        self.coeffs = coeffs

    def norm(self):
        """L2 norm via Parseval (coefficients w.r.t. the orthonormal e_G)."""
        return float(np.linalg.norm(self.coeffs))


def build_basis(lattice: Lattice, ecut: float, supersample: int = 3) -> PlaneWaveBasis:
    """Construct the plane-wave basis of all G with |G|^2/2 <= ecut."""
    return PlaneWaveBasis(lattice, ecut, supersample)


def to_real(field: FourierField):
    """Real-space grid values of a field given in the orthonormal e_G expansion."""
    return field.basis.to_real(field.coeffs)


def to_fourier(basis: PlaneWaveBasis, grid) -> FourierField:
    """Project grid values back onto the sphere; inverse of to_real for band-limited fields."""
    return FourierField(basis, basis.to_fourier(grid))


def sobolev_norm(field: FourierField, s_exp: float) -> float:
    """H^s-type norm (sum_G (1+|G|^2)^s |c_G|^2)^(1/2)."""
    w = (1.0 + field.basis.g2) ** s_exp
    return float(np.sqrt(np.sum(w * np.abs(field.coeffs) ** 2)))
