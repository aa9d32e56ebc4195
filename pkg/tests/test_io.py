import numpy as np
import pytest

from pwap import (ArchiveError, ConfigError, ScfOptions, build_basis,
                  parse_config, read_state, scf, write_state)
from pwap.config import reference_key
from pwap.reports import FORMAT_LINE, read_csv, write_csv

GOOD = """
[model]
dim = 1
cell = 6.283185307179586
atoms =
    0.21 -4.0 0.45
    0.63 -3.2 0.35
alpha = 2.0
hartree = false
nel = 2

[study]
cutoffs = 4, 8
reference_cutoff = 32
seed = 3

[solver]
mixing = 0.6
tol = 1e-8

[output]
dir = results
"""


def _write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_parse_good_config(tmp_path):
    cfg = parse_config(_write(tmp_path, GOOD))
    model = cfg.require_model()
    assert model.nel == 2 and model.alpha == 2.0 and not model.hartree
    assert len(model.atoms) == 2
    assert model.atoms[1].width == 0.35
    cutoffs, ref = cfg.require_study()
    assert cutoffs == [4.0, 8.0] and ref == 32.0
    assert cfg.seed == 3
    assert cfg.scf.mixing == 0.6 and cfg.scf.tol == 1e-8
    assert cfg.scf.seed == 3  # study seed propagates to the solver
    assert str(cfg.outdir) == "results"


def test_parse_inline_comments(tmp_path):
    cfg = parse_config(_write(tmp_path, "[study]\ncutoffs = 2, 4  # two steps\n"
                                        "reference_cutoff = 8 ; fine\n"))
    assert cfg.cutoffs == [2.0, 4.0]
    assert cfg.reference_cutoff == 8.0


def test_missing_file():
    with pytest.raises(ConfigError, match="no such config"):
        parse_config("/definitely/not/here.ini")


@pytest.mark.parametrize("text,frag", [
    ("[model]\ndim = 4\ncell = 1\n", "dim"),
    ("[model]\ndim = 1\ncell = 1 2 3\n", "cell"),
    ("[model]\ndim = 1\ncell = 6.28\natoms = 0.5 -1.0\n", "atoms"),
    ("[model]\ndim = 1\ncell = 6.28\nnel = 0\n", "nel"),
    ("[study]\ncutoffs = 8, 4\nreference_cutoff = 32\n", "increasing"),
    ("[study]\ncutoffs = -2\nreference_cutoff = 32\n", "positive"),
    ("[study]\ncutoffs = 4, 8\nreference_cutoff = 8\n", "exceed"),
    ("[study]\ncutoffs = oops\nreference_cutoff = 32\n", "cutoffs"),
    ("[solver]\nmixing = 1.5\n", "mixing"),
    ("[gp]\ndim = 2\ncutoffs = 4, 8\n", "dim"),
    ("[gp]\ncutoffs = 8, 8\n", "increasing"),
])
def test_parse_rejects(tmp_path, text, frag):
    with pytest.raises(ConfigError, match=frag):
        parse_config(_write(tmp_path, text))


def test_require_sections(tmp_path):
    cfg = parse_config(_write(tmp_path, "[study]\ncutoffs = 4\n"
                                        "reference_cutoff = 8\n"))
    with pytest.raises(ConfigError, match="model"):
        cfg.require_model()
    with pytest.raises(ConfigError, match="gp"):
        cfg.require_gp()


def test_reference_key_tracks_content(tmp_path):
    k1 = reference_key(parse_config(_write(tmp_path, GOOD, "a.ini")))
    k2 = reference_key(parse_config(_write(tmp_path, GOOD, "b.ini")))
    assert k1 == k2  # path does not matter
    other = GOOD.replace("reference_cutoff = 32", "reference_cutoff = 64")
    k3 = reference_key(parse_config(_write(tmp_path, other, "c.ini")))
    assert k3 != k1


def test_archive_roundtrip(tmp_path, small_basis, small_state):
    path = tmp_path / "state.pwap"
    write_state(path, small_state)
    assert path.read_bytes()[:5] == b"PWAP1"
    back = read_state(path)
    assert back.basis.nbasis == small_basis.nbasis
    assert back.basis.ecut == small_basis.ecut
    assert np.array_equal(back.coeffs, small_state.coeffs)


def test_archive_rejects_corruption(tmp_path, small_state):
    path = tmp_path / "state.pwap"
    write_state(path, small_state)
    blob = bytearray(path.read_bytes())
    blob[0:5] = b"NOPE1"
    path.write_bytes(bytes(blob))
    with pytest.raises(ArchiveError):
        read_state(path)
    path.write_bytes(bytes(blob)[:20])
    with pytest.raises(ArchiveError):
        read_state(path)


def test_archive_overwrite_is_idempotent(tmp_path, small_state):
    path = tmp_path / "state.pwap"
    write_state(path, small_state)
    first = path.read_bytes()
    write_state(path, small_state)
    assert path.read_bytes() == first


def test_csv_roundtrip(tmp_path):
    path = tmp_path / "table.csv"
    rows = [{"cutoff": 4.0, "err": 0.125, "status": "ok"},
            {"cutoff": 8.0, "err": None, "status": "failed: no, really"}]
    write_csv(path, ["cutoff", "err", "status"], rows)
    text = path.read_text()
    assert text.startswith(FORMAT_LINE + "\n")
    assert "failed: no; really" in text  # commas sanitized
    columns, back = read_csv(path)
    assert columns == ["cutoff", "err", "status"]
    assert back[0]["err"] == "0.125"
    assert back[1]["err"] == ""


def test_csv_float_repr_roundtrip(tmp_path):
    path = tmp_path / "t.csv"
    value = 1.0 / 3.0
    write_csv(path, ["x"], [{"x": value}])
    _, rows = read_csv(path)
    assert float(rows[0]["x"]) == value  # shortest repr is lossless
