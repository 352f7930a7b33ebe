import json
import subprocess
import sys

import numpy as np
import pytest

from rankdep import constants
from rankdep._rng import generator
from rankdep.cli import main, read_csv_matrix


def write_demo_csv(path, n=40, m=4, seed=1, header=False, ties=False):
    rng = generator(seed, 0, 0)
    shared = rng.standard_normal(n)
    data = shared[:, None] + 0.8 * rng.standard_normal((n, m))
    if ties:
        data[0, 0] = data[1, 0]
    lines = []
    if header:
        lines.append(",".join(f"v{j}" for j in range(m)))
    for row in data:
        lines.append(",".join(repr(float(x)) for x in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def test_read_csv_matrix_header_and_blank_lines(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("x,y\n1.0,2.0\n\n3.5,0.25\n")
    mat = read_csv_matrix(str(p))
    assert mat.shape == (2, 2)
    assert mat[1, 1] == 0.25


def test_read_csv_matrix_error_location(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("1.0,2.0\n3.0,oops\n")
    with pytest.raises(Exception) as info:
        read_csv_matrix(str(p))
    assert "row 2" in str(info.value) and "column 2" in str(info.value)


def test_json_report_shape(tmp_path, capsys):
    p = write_demo_csv(tmp_path / "d.csv")
    assert main(["test", str(p), "--stats", "s_tau,s_max_tau"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["schema"] == 1
    assert "note" not in report  # n = 40 is not flagged
    assert [r["statistic"] for r in report["results"]] == ["s_tau", "s_max_tau"]
    for r in report["results"]:
        assert set(r) == {
            "statistic", "raw", "rescaled", "p_value", "reject", "n", "m", "method", "seed",
        }
        assert r["method"] == "asymptotic" and r["n"] == 40 and r["m"] == 4


def test_small_sample_note(tmp_path, capsys):
    p = write_demo_csv(tmp_path / "d.csv", n=10)
    assert main(["test", str(p)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert "montecarlo" in report["note"]


def test_csv_output_format(tmp_path, capsys):
    p = write_demo_csv(tmp_path / "d.csv")
    assert main(["test", str(p), "--format", "csv", "--stats", "z_tau"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "statistic,raw,rescaled,p_value,reject,n,m,method,seed"
    cells = lines[1].split(",")
    assert cells[0] == "z_tau" and cells[4] in ("true", "false")
    float(cells[1])  # raw roundtrips


def test_montecarlo_method_and_env_seed(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("RANKDEP_SEED", "7")
    p = write_demo_csv(tmp_path / "d.csv", n=16)
    assert main(["test", str(p), "--method", "montecarlo", "--reps", "49"]) == 0
    report = json.loads(capsys.readouterr().out)
    r = report["results"][0]
    assert r["method"] == "montecarlo" and r["seed"] == 7
    assert 1 / 50 <= r["p_value"] <= 1.0


def test_bad_env_seed(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("RANKDEP_SEED", "abc")
    p = write_demo_csv(tmp_path / "d.csv", n=16)
    assert main(["test", str(p), "--method", "montecarlo"]) == 3


def test_data_problems_exit_2(tmp_path, capsys):
    assert main(["test", str(tmp_path / "missing.csv")]) == 2

    ties = write_demo_csv(tmp_path / "t.csv", n=16, ties=True)
    assert main(["test", str(ties)]) == 2
    assert "tie" in capsys.readouterr().err.lower()

    small = tmp_path / "s.csv"
    small.write_text("1.0,2.0\n2.0,1.0\n0.5,0.25\n")
    assert main(["test", str(small), "--stats", "t_tau"]) == 2  # needs n >= 4


def test_jitter_policy_accepts_ties(tmp_path, capsys):
    ties = write_demo_csv(tmp_path / "t.csv", n=16, ties=True)
    assert main(["test", str(ties), "--ties", "jitter"]) == 0
    json.loads(capsys.readouterr().out)


def test_config_problems_exit_3(tmp_path, capsys):
    p = write_demo_csv(tmp_path / "d.csv", n=16)
    assert main(["test", str(p), "--stats", "s_bogus"]) == 3
    assert main(["test", str(p), "--alpha", "1.5"]) == 3
    assert main(["test", str(p), "--method", "montecarlo", "--reps", "0"]) == 3
    assert main(["test", str(p), "--method", "bogus"]) == 3
    assert main(["test", str(p), "--threads", "0"]) == 3
    capsys.readouterr()


def test_threads_flag_does_not_change_bytes(tmp_path):
    p = write_demo_csv(tmp_path / "d.csv", n=24, m=5)
    outs = []
    for t in ("1", "4"):
        out = tmp_path / f"out{t}.json"
        rc = main([
            "test", str(p), "--stats", "s_tau,s_rho_s,s_max_tau",
            "--method", "montecarlo", "--reps", "39", "--seed", "5",
            "--threads", t, "--out", str(out),
        ])
        assert rc == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_simulate_writes_csv(tmp_path, capsys):
    rc = main([
        "simulate", "--family", "iid-null", "-n", "12", "-m", "3",
        "--reps", "5", "--stats", "s_tau,s_pearson", "--seed", "2",
    ])
    assert rc == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("statistic,n,m,family,scatter,signal")
    assert len(lines) == 3
    assert lines[1].split(",")[0] == "s_tau"


def test_simulate_infeasible_exit_3(capsys):
    rc = main([
        "simulate", "--family", "mvn", "--n", "12", "--m", "3",
        "--reps", "5", "--signal", "0.5",
    ])
    assert rc == 3  # identity scatter cannot carry signal
    capsys.readouterr()


def test_selftest_passes(capsys):
    assert main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert "checks passed" in out and "FAIL" not in out


def test_selftest_flags_doctored_constants(tmp_path, capsys, monkeypatch):
    consts = constants.load(constants.default_path())
    doc = json.loads(constants.to_json(consts))
    doc["kernels"]["hoeffd"]["mu_prefactor"] = "9/8100"
    path = tmp_path / "doctored.json"
    path.write_text(json.dumps(doc))
    assert main(["selftest", "--constants", str(path)]) == 1
    out = capsys.readouterr().out
    assert "mu_prefactor_hoeffd" in out or "mu_hoeffd_resolution" in out
    # the doctored file must not leak into later library calls
    import os

    assert os.environ.get("RANKDEP_CONSTANTS") is None or "doctored" not in os.environ["RANKDEP_CONSTANTS"]
    fresh = constants.get()
    assert str(fresh.kernels["hoeffd"].mu_prefactor) == "1/4050"


def test_console_script_entry_point(tmp_path):
    p = write_demo_csv(tmp_path / "d.csv", n=16)
    proc = subprocess.run(
        [sys.executable, "-m", "rankdep.cli", "test", str(p), "--stats", "z_rho_hat"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["results"][0]["statistic"] == "z_rho_hat"
