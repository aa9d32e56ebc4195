"""End-to-end runs of the command line entry point."""
import json

import pytest

from pwap.cli import main
from pwap.reports import read_csv

MODEL = """
[model]
dim = 1
cell = 6.283185307179586
atoms =
    0.21 -4.0 0.45
    0.63 -3.2 0.35
alpha = 2.0
hartree = false
nel = 2
"""

STUDY = MODEL + """
[study]
cutoffs = 4, 8
reference_cutoff = 24
seed = 5
"""

GP = """
[gp]
cutoffs = 2, 8
v_amplitude = 0.3
ref_factor = 8
"""


def _cfg(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def _study_bytes(outdir):
    return {name: (outdir / name).read_bytes()
            for name in ("convergence.csv", "bounds.csv", "estimators.csv")}


def test_solve_writes_archive_and_json(tmp_path):
    cfg = _cfg(tmp_path, MODEL + "[study]\necut = 16\nseed = 2\n")
    out = tmp_path / "out"
    assert main(["solve", "--config", cfg, "--out", str(out)]) == 0
    assert (out / "state.pwap").is_file()
    result = json.loads((out / "result.json").read_text())
    assert result["ecut"] == 16 and result["nbasis"] == 11
    assert result["report"]["converged"] is True
    assert result["energy"] == pytest.approx(
        result["energy_terms"]["total"])
    assert len(result["forces"][0]) == 2


def test_solve_requires_cutoff(tmp_path, capsys):
    cfg = _cfg(tmp_path, MODEL)
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "config error:" in capsys.readouterr().err


def test_solve_reports_stall(tmp_path, capsys):
    cfg = _cfg(tmp_path, MODEL + "[study]\necut = 16\n"
                                 "[solver]\nmaxiter = 2\ntol = 1e-14\n")
    out = tmp_path / "out"
    assert main(["solve", "--config", cfg, "--out", str(out)]) == 1
    assert "stalled" in capsys.readouterr().err
    # partial results are still archived for inspection
    result = json.loads((out / "result.json").read_text())
    assert result["report"]["converged"] is False


def test_missing_config_exits_two(tmp_path, capsys):
    assert main(["study", "--config", str(tmp_path / "gone.ini")]) == 2
    assert "config error:" in capsys.readouterr().err


def test_study_outputs_and_determinism(tmp_path):
    cfg = _cfg(tmp_path, STUDY)
    out1, out2, out3 = (tmp_path / f"out{i}" for i in (1, 2, 3))
    assert main(["study", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["study", "--config", cfg, "--out", str(out2)]) == 0
    assert main(["study", "--config", cfg, "--out", str(out3),
                 "--threads", "2"]) == 0

    first = _study_bytes(out1)
    assert first == _study_bytes(out2)  # same seed, byte-identical
    assert first == _study_bytes(out3)  # thread count does not leak in

    for name in ("convergence.png", "bounds.png", "estimators.png"):
        assert (out1 / name).stat().st_size > 0

    columns, rows = read_csv(out1 / "convergence.csv")
    assert [row["cutoff"] for row in rows] == ["4.0", "8.0"]
    assert all(row["status"] == "ok" for row in rows)
    # variational energy error shrinks with the cutoff
    errs = [abs(float(row["E_err_variational"])) for row in rows]
    assert errs[1] < errs[0]

    _, bounds = read_csv(out1 / "bounds.csv")
    for row in bounds:
        assert float(row["bound_plain"]) >= float(row["err_norm"])


def test_study_reference_cache(tmp_path):
    cfg = _cfg(tmp_path, STUDY)
    out = tmp_path / "out"
    assert main(["study", "--config", cfg, "--out", str(out)]) == 0
    caches = list((out / "cache").glob("reference-*.pwap"))
    assert len(caches) == 1
    first = _study_bytes(out)

    # a corrupted cache entry is silently recomputed
    caches[0].write_bytes(b"junk")
    assert main(["study", "--config", cfg, "--out", str(out)]) == 0
    assert _study_bytes(out) == first
    assert caches[0].read_bytes()[:5] == b"PWAP1"


def test_threads_env(tmp_path, monkeypatch, capsys):
    cfg = _cfg(tmp_path, STUDY)
    monkeypatch.setenv("PWAP_THREADS", "soon")
    assert main(["study", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "PWAP_THREADS" in capsys.readouterr().err

    monkeypatch.setenv("PWAP_THREADS", "2")
    out = tmp_path / "env_out"
    assert main(["study", "--config", cfg, "--out", str(out)]) == 0
    assert (out / "convergence.csv").is_file()


def test_gp_check(tmp_path):
    cfg = _cfg(tmp_path, GP)
    out = tmp_path / "out"
    assert main(["gp-check", "--config", cfg, "--out", str(out)]) == 0
    columns, rows = read_csv(out / "prop_a1.csv")
    assert columns == ["N", "norm", "bound_fit"]
    assert [row["N"] for row in rows] == ["2", "8"]
    norms = [float(row["norm"]) for row in rows]
    assert norms[1] < norms[0]
    assert all(float(row["bound_fit"]) > 0 for row in rows)
    assert (out / "prop_a1.png").stat().st_size > 0


def test_gp_check_single_cutoff(tmp_path, capsys):
    cfg = _cfg(tmp_path, "[gp]\ncutoffs = 4\nref_factor = 8\n")
    out = tmp_path / "out"
    assert main(["gp-check", "--config", cfg, "--out", str(out)]) == 0
    assert "single cutoff" in capsys.readouterr().err
    _, rows = read_csv(out / "prop_a1.csv")
    assert rows[0]["bound_fit"] == ""


def test_output_section_default_dir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = _cfg(tmp_path, MODEL + "[study]\necut = 16\n"
                                 "[output]\ndir = from_cfg\n")
    assert main(["solve", "--config", cfg]) == 0
    assert (tmp_path / "from_cfg" / "state.pwap").is_file()
