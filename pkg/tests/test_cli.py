import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from hierarchia.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_sigma_text_and_latex(capsys):
    assert run(capsys, "sigma", "--n", "3")[:2] == (0, "-q*qbar_xx + q^2*qbar^2\n")
    assert run(capsys, "sigma", "--n", "3", "--format", "latex")[1] == "-q\\bar q_{xx} + q^2\\bar q^2\n"
    assert run(capsys, "sigma", "--hierarchy", "kdv", "--n", "3")[1] == "u^2 + u_xx\n"


def test_json_output_is_deterministic_apart_from_timestamp(capsys):
    outs = []
    for _ in range(2):
        data = json.loads(run(capsys, "hamiltonian", "--n", "2", "--format", "json")[1])
        data.pop("timestamp")
        outs.append(data)
    assert outs[0] == outs[1]
    assert outs[0]["label"] == "H_nls_2"


def test_flow_and_out_file(capsys, tmp_path):
    target = tmp_path / "flow.txt"
    assert run(capsys, "flow", "--hierarchy", "gp", "--n", "2", "--out", str(target))[0] == 0
    assert target.read_text() == "-2*q + 2*q^2*qbar - q_xx\n"


def test_usage_errors(capsys, monkeypatch):
    assert run(capsys, "sigma", "--n", "-1")[0] == 2
    assert run(capsys, "sigma")[0] == 2
    assert run(capsys, "bogus")[0] == 2
    monkeypatch.setenv("HIERARCHIA_NMAX", "4")
    code, _, err = run(capsys, "sigma", "--n", "9")
    assert code == 2 and "HIERARCHIA_NMAX" in err


def test_coeff_table(capsys):
    code, out, _ = run(capsys, "coeff-table", "--family", "D", "--nmax", "4", "--jmax", "1")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0] == ["n", "j=0", "j=1"]
    assert rows[3] == ["2", "1", "0"]
    assert run(capsys, "coeff-table", "--family", "Z")[0] == 2


def test_verify_pass_and_fail(capsys):
    code, out, _ = run(capsys, "verify", "symbols", "--nmax", "6")
    report = json.loads(out)
    assert code == 0 and report["passed"] == report["total"]
    code, out, err = run(capsys, "verify", "coeff", "--family", "D", "--against", "oracle",
                         "--perturb", "coeff:D:6:1")
    assert code == 1
    assert "FAIL D-vs-oracle at index (6,1)" in err
    assert json.loads(out)["first_failure"]["first_failure"] == [6, 1]


def test_verify_list_and_errors(capsys):
    code, out, _ = run(capsys, "verify", "genfun", "--list")
    assert code == 0 and "catalan-gf" in json.loads(out)
    assert run(capsys, "verify", "coeff", "--perturb", "coeff:D")[0] == 2
    assert run(capsys, "verify", "coeff", "--id", "nope")[0] == 2
    assert run(capsys, "verify", "coeff", "--family", "K", "--against", "oracle")[0] == 2


def test_verify_threads(capsys):
    code, out, _ = run(capsys, "verify", "recurrence", "--nmax", "8", "--threads", "4")
    assert code == 0 and json.loads(out)["total"] == 4


def test_scatter_dark(capsys, tmp_path):
    manifest = tmp_path / "m.json"
    code, out, _ = run(capsys, "scatter", "--potential", "dark", "--lambda-ray", "2:4:3",
                       "--manifest", str(manifest))
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 3
    assert all(float(r["abs_err_closed_form"]) < 1e-9 for r in rows)
    assert json.loads(manifest.read_text())["config"]["potential"] == "dark"


def test_scatter_config_and_errors(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"potential": "constant", "qplus": "1", "lambda": ["0.5+2i"]}))
    code, out, _ = run(capsys, "scatter", "--config", str(cfg))
    row = next(csv.DictReader(io.StringIO(out)))
    assert code == 0 and abs(complex(float(row["a_re"]), float(row["a_im"])) - 1) < 1e-10
    assert run(capsys, "scatter", "--config", str(tmp_path / "missing.json"))[0] == 2
    assert run(capsys, "scatter", "--potential", "dark")[0] == 2
    assert run(capsys, "scatter", "--lambda-ray", "0:1:3")[0] == 2
    assert run(capsys, "scatter", "--qminus", "2", "--lambda", "2i")[0] == 2


def test_evolve(capsys, tmp_path):
    snap, table = tmp_path / "s.bin", tmp_path / "h.csv"
    code, out, _ = run(capsys, "evolve", "--flow", "nls2", "--n", "256", "--t", "0.05",
                       "--dt", "0.005", "--snapshot", str(snap), "--csv", str(table))
    data = json.loads(out)
    assert code == 0 and data["steps"] == 10
    assert max(data["drift"].values()) < 1e-6
    assert snap.read_bytes()[:8] == b"HIERFLD1"
    assert table.read_text().startswith("t,H0,H1,H2,H3,H4")


def test_evolve_errors(capsys):
    assert run(capsys, "evolve", "--n", "100")[0] == 2
    assert run(capsys, "evolve", "--flow", "gp2", "--init", "sech")[0] == 2
    assert run(capsys, "evolve", "--dt", "0")[0] == 2
    code, _, err = run(capsys, "evolve", "--flow", "nls4", "--dt", "0.2", "--t", "20")
    assert code == 1 and "numeric failure" in err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "hierarchia", "flow", "--n", "0"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and proc.stdout == "q\n"
