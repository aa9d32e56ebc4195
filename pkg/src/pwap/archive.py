"""Binary ground-state archives.

Layout (all little-endian):

    magic   5 bytes  b"PWAP1"
    version u8       (currently 1)
    dim     u8
    pad     u8       zero
    nel     u32
    nbasis  u32
    supersample u32
    pad     u32      zero
    ecut    f64
    cell    f64 * dim*dim          lattice vectors, row major
    miller  i32 * nbasis*dim       integer coordinates, basis order
    coeffs  f64 * 2*nbasis*nel     (re, im) pairs, column after column

The miller block is a descriptor: on load the basis is rebuilt from
(cell, ecut, supersample) and must reproduce it exactly. Files are written to
a temporary name and renamed, so readers never observe partial archives.
"""
from __future__ import annotations

import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .lattice import Lattice, PlaneWaveBasis
from .geometry import OrbitalSet

MAGIC = b"PWAP1"
VERSION = 1
_HEAD = "<5sBBBIIII d"


class ArchiveError(Exception):
    pass


def _atomic_write(path: Path, payload: bytes):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.chmod(tmp, 0o666 & ~_umask())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _umask() -> int:
    # mkstemp files are 0600; restore the permissions a plain open would give
    mask = os.umask(0)
    os.umask(mask)
    return mask


def write_state(path, phi: OrbitalSet):
    basis = phi.basis
    dim = basis.lattice.dim
    parts = [struct.pack(_HEAD.replace(" ", ""), MAGIC, VERSION, dim, 0,
                         phi.nel, basis.nbasis, basis.supersample, 0,
                         basis.ecut)]
    parts.append(np.asarray(basis.lattice.vectors, dtype="<f8").tobytes())
    parts.append(basis.miller.astype("<i4").tobytes())
    pairs = np.empty((basis.nbasis * phi.nel, 2))
    flat = phi.coeffs.T.reshape(-1)  # column after column
    pairs[:, 0] = flat.real
    pairs[:, 1] = flat.imag
    parts.append(pairs.astype("<f8").tobytes())
    _atomic_write(path, b"".join(parts))


def read_state(path) -> OrbitalSet:
    raw = Path(path).read_bytes()
    head_fmt = _HEAD.replace(" ", "")
    head_size = struct.calcsize(head_fmt)
    if len(raw) < head_size:
        raise ArchiveError(f"{path}: truncated header")
    magic, version, dim, _, nel, nbasis, supersample, _, ecut = \
        struct.unpack_from(head_fmt, raw)
    if magic != MAGIC:
        raise ArchiveError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise ArchiveError(f"{path}: unsupported version {version}")
    off = head_size
    cell = np.frombuffer(raw, "<f8", dim * dim, off).reshape(dim, dim)
    off += 8 * dim * dim
    miller = np.frombuffer(raw, "<i4", nbasis * dim, off).reshape(nbasis, dim)
    off += 4 * nbasis * dim
    pairs = np.frombuffer(raw, "<f8", 2 * nbasis * nel, off).reshape(-1, 2)
    if off + 16 * nbasis * nel != len(raw):
        raise ArchiveError(f"{path}: size mismatch")

    basis = PlaneWaveBasis(Lattice(cell), ecut, supersample)
    if basis.nbasis != nbasis or not np.array_equal(basis.miller, miller):
        raise ArchiveError(f"{path}: basis descriptor does not match the "
                           f"rebuilt basis")
    coeffs = (pairs[:, 0] + 1j * pairs[:, 1]).reshape(nel, nbasis).T
    return OrbitalSet(basis, coeffs)


def write_json(path, payload: dict):
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    _atomic_write(path, text.encode())
