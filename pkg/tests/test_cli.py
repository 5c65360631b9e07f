import csv
import json

import pytest

from sphcond.cli import EXIT_BAD_INPUT, EXIT_INFEASIBLE, EXIT_NUMERIC, EXIT_OK, main
from sphcond.points import write_pointset
from sphcond.sampling import gen_fibonacci, load_tdesign


def run(capsys, *argv):
    code = main(list(map(str, argv)))
    out = capsys.readouterr().out
    return code, json.loads(out)


def csv_rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


@pytest.mark.parametrize("argv,q", [
    (["fibonacci", "--q", "100"], 100),
    (["tdesign", "--name", "T5Q12"], 12),
    (["mcc"], 625),
    (["--scheme", "gaussian", "--scheme-order", "2"], 18),
])
def test_gen_writes_points(capsys, tmp_path, argv, q):
    code, res = run(capsys, "gen", *argv, "--out-dir", tmp_path)
    assert code == EXIT_OK and res["q"] == q
    rows = csv_rows(res["file"])
    assert len(rows) - 1 == q


def test_analyze_tdesign_is_perfect(capsys):
    code, res = run(capsys, "analyze", "--scheme", "tdesign", "--name", "T5Q12", "--order", "2")
    assert code == EXIT_OK and res["kappa"] == pytest.approx(1.0, abs=1e-9)
    assert res["d_measure"]["d"] == pytest.approx(0.0, abs=1e-9)


def test_analyze_fibonacci_literal(capsys):
    code, res = run(capsys, "analyze", "--scheme", "fibonacci", "--q", "32", "--order", "3",
                    "--angle-mode", "literal")
    assert code == EXIT_OK and res["kappa"] == pytest.approx(1670.08, rel=1e-4)


def test_analyze_order_zero_and_real_basis(capsys):
    code, res = run(capsys, "analyze", "--scheme", "fibonacci", "--q", "7", "--order", "0")
    assert res["kappa"] == pytest.approx(1.0)
    _, cplx = run(capsys, "analyze", "--scheme", "fibonacci", "--q", "40", "--order", "4")
    _, real = run(capsys, "analyze", "--scheme", "fibonacci", "--q", "40", "--order", "4", "--real-basis")
    assert real["basis"] == "real" and real["kappa"] == pytest.approx(cplx["kappa"], rel=1e-9)


def test_analyze_points_file(capsys, tmp_path):
    write_pointset(load_tdesign("T7Q24"), tmp_path / "p.csv")
    code, res = run(capsys, "analyze", "--points", tmp_path / "p.csv", "--order", "3")
    assert code == EXIT_OK and res["q"] == 24 and res["kappa"] == pytest.approx(1.0)


def test_reproduce_toy(capsys):
    code, res = run(capsys, "reproduce", "appendixC")
    assert code == EXIT_OK
    assert res["computed"]["kappa"] == pytest.approx(2.2222, abs=1e-4)
    assert res["computed"]["records"] == [[1, 0.4], [2, 0.6], [2, 0.8], [2, 0.9]]


def test_reproduce_table2_tdesign_row(capsys):
    code, res = run(capsys, "reproduce", "table2", "--row", "tdesign")
    assert code == EXIT_OK
    rows = [r for r in res["tdesign"] if r["computed"] is not None]
    assert len(rows) >= 5
    for r in rows:
        assert r["computed"]["log10_kappa"] == pytest.approx(0.0, abs=1e-9)
        assert r["reference"]["log10_kappa"] == 0


def test_optimize_runs_and_is_deterministic(capsys, tmp_path):
    argv = ["optimize", "--scheme", "fibonacci", "--q", "30", "--order", "2", "--q-prime", "12",
            "--solver", "local", "--restarts", "2", "--seed", "5"]
    c1, r1 = run(capsys, *argv, "--out-dir", tmp_path / "a")
    c2, r2 = run(capsys, *argv, "--out-dir", tmp_path / "b", "--threads", "1")
    assert c1 == c2 == EXIT_OK and r1 == r2 and r1["R"] > 0
    m1 = json.loads((tmp_path / "a" / "manifest.json").read_text())
    m2 = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert m1["result_sha256"] == m2["result_sha256"] and m1["seed"] == 5
    assert set(m1) >= {"command_line", "config_hash", "tool_version", "inputs", "outputs"}
    assert len(csv_rows(tmp_path / "a" / "selected.csv")) - 1 == 12


def test_seed_environment_override(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("SPHCOND_SEED", "77")
    code, _ = run(capsys, "gen", "fibonacci", "--q", "10", "--out-dir", tmp_path)
    assert code == EXIT_OK
    assert json.loads((tmp_path / "manifest.json").read_text())["seed"] == 77
    monkeypatch.setenv("SPHCOND_SEED", "x")
    assert run(capsys, "gen", "fibonacci", "--q", "10")[0] == EXIT_BAD_INPUT


def test_exit_codes(capsys, tmp_path):
    assert run(capsys, "gen", "fibonacci", "--q", "-3")[0] == EXIT_BAD_INPUT
    assert run(capsys, "analyze", "--scheme", "fibonacci")[0] == EXIT_BAD_INPUT
    assert run(capsys, "nonsense")[0] == EXIT_BAD_INPUT
    code, res = run(capsys, "analyze", "--points", tmp_path / "missing.csv", "--order", "1")
    assert code == EXIT_BAD_INPUT and "error" in res
    (tmp_path / "h.json").write_text(json.dumps({"membership": [0] * 6 + [1] * 6, "caps": [1, 1]}))
    code, res = run(capsys, "optimize", "--scheme", "tdesign", "--name", "T5Q12", "--order", "1",
                    "--q-prime", "6", "--hoops", tmp_path / "h.json")
    assert code == EXIT_INFEASIBLE
    write_pointset(gen_fibonacci(6), tmp_path / "six.csv")
    code, res = run(capsys, "ambi-eval", "--a", tmp_path / "six.csv", "--b", tmp_path / "six.csv",
                    "--order", "3", "--decoder", "mode_matching")
    assert code == EXIT_NUMERIC and res["error"]["type"] == "RankDeficientError"


def test_ambi_eval_csv(capsys, tmp_path):
    write_pointset(load_tdesign("T5Q12"), tmp_path / "a.csv")
    write_pointset(gen_fibonacci(12), tmp_path / "b.csv")
    code, res = run(capsys, "ambi-eval", "--a", tmp_path / "a.csv", "--b", tmp_path / "b.csv",
                    "--order", "2", "--eval-order", "4", "--out-dir", tmp_path / "o")
    assert code == EXIT_OK
    assert res["winners"]["percent_a"] + res["winners"]["percent_b"] == pytest.approx(100)
    rows = csv_rows(tmp_path / "o" / "xi_a.csv")
    assert rows[0] == ["azimuth_deg", "elevation_deg", "xi"] and len(rows) == 649


def test_hrtf_eval_csv(capsys, tmp_path):
    code, res = run(capsys, "hrtf-eval", "--order", "6", "--noise", "1e-4", "--out-dir", tmp_path)
    assert code == EXIT_OK and res["kappa_ecc"] > 1
    rows = csv_rows(tmp_path / "lsd_mcc.csv")
    assert rows[0] == ["lateral_deg", "elevation_deg", "lsd_db"] and len(rows) == 1251
