import json
import subprocess
import sys

import pytest

from artifact import cli
from artifact import manifold as MF


def run(*argv):
    proc = subprocess.run([sys.executable, "-m", "artifact", *argv], capture_output=True, text=True)
    return proc.returncode, proc.stdout, proc.stderr


def test_spin_reports_two_acyclic_lifts():
    code, out, _ = run("spin", "--fixture", str(MF.fixture_path("fig8")))
    assert code == 0
    doc = json.loads(out)
    assert doc["count"] == 2
    assert all(l["acyclic"] for l in doc["lifts"])
    assert doc["schema"] == cli.SCHEMA_VERSION


def test_zeta_report_has_value_and_tail():
    code, out, _ = run("zeta", "--k", "6", "--s", "3,0")
    assert code == 0
    doc = json.loads(out)
    assert "value" in doc and "tail_bound" in doc
    assert doc["tail_bound"] is not None and doc["tail_bound"] > 0


def test_output_is_deterministic():
    a = run("zeta", "--k", "6", "--s", "3,0", "--cutoff", "3")
    b = run("zeta", "--k", "6", "--s", "3,0", "--cutoff", "3")
    assert a == b


def test_unknown_subcommand_exits_2():
    code, _, err = run("frobnicate")
    assert code == 2
    assert "usage" in err


def test_fixture_error_exits_1(tmp_path):
    doc = json.loads(MF.fixture_path("fig8").read_text())
    doc["holonomy"]["a"] = MF.matrix_to_json(2 * MF.load_shipped("fig8").holonomy[0])
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    code, _, err = run("validate", "--fixture", str(bad))
    assert code == 1
    assert "non-unimodular generator" in err
    assert err.strip().splitlines()[1].lstrip().startswith("- ")


def test_missing_file_exits_1(tmp_path):
    code, _, err = run("spin", "--fixture", str(tmp_path / "missing.json"))
    assert code == 1


def test_formats(capsys):
    assert cli.main(["torsion", "--n", "5", "--format", "text"]) == 0
    text = capsys.readouterr().out
    assert "log_abs:" in text
    assert cli.main(["torsion", "--n", "5", "--format", "csv"]) == 0
    csv_text = capsys.readouterr().out
    assert csv_text.splitlines()[0] == "key,value"


def test_spectrum_csv(capsys):
    assert cli.main(["spectrum", "--cutoff", "1.2", "--format", "csv"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].startswith("word,re_lambda")
    assert len(lines) == 5


def test_torsion_value(capsys):
    assert cli.main(["torsion", "--n", "5"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["value"]["re"] == pytest.approx(3 / 28, rel=1e-9)


def test_filling_subcommands(capsys):
    assert cli.main(["filling", "verify", "--fixture", "fig8_5_1"]) == 0
    assert json.loads(capsys.readouterr().out)["report"]["ok"]
    assert cli.main(["filling", "factors", "--n", "3", "--lambda", "1,0"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["factor"]["re"] < 0
    assert cli.main(["filling", "relation", "--fixture", "fig8_12_1", "--n", "4"]) == 0
    assert json.loads(capsys.readouterr().out)["relations"][0]["ok"]


def test_analysis_subcommands(capsys, tmp_path):
    assert cli.main(["analysis", "bergman"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["unit_lower_triangular"] and doc["sigma_min"] > 0.5
    assert cli.main(["analysis", "mueller", "--cutoff", "4"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert abs(doc["value"] - doc["algebraic"]) <= doc["uncertainty"]
    from artifact import analysis as AN
    zl = AN.forward_zeta_logs([1.1 + 0.7j, 1.6 - 2.1j], range(5, 50))
    seq = AN.reconstruct_sequence(zl, 2.0, {4: -1.0, 5: -2.0}, range(4, 50))
    path = tmp_path / "seq.json"
    path.write_text(json.dumps({str(n): v for n, v in seq.items()}))
    assert cli.main(["analysis", "recover", "--sequence", str(path), "--volume", "2", "--atoms", "4"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert len(doc["atoms"]) == 4


def test_validate_filled_fixture(capsys):
    assert cli.main(["validate", "--fixture", "fig8_20_1"]) == 0
    assert json.loads(capsys.readouterr().out)["kind"] == "filled"


def test_verify_all_exits_0():
    # reuses the spectra cached by the acceptance tests when run in the same session
    assert cli.main(["verify-all", "--fixture", str(MF.fixture_path("fig8"))]) == 0
