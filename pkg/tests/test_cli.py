import csv
import io
import json

import pytest

from loccdetect import cli


def _csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_curves_isotropic(capsys):
    assert cli.main(["curves", "--family", "isotropic", "--theta-grid", "0.7,1"]) == 0
    rows = _csv(capsys.readouterr().out)
    assert len(rows) == 10
    for r in rows:
        assert abs(float(r["beta_formula"]) - float(r["beta_direct"])) < 1e-10
        if abs(float(r["theta"]) - 1) < 1e-12:
            assert abs(float(r["beta_direct"]) - 1) < 1e-12
    tu = next(r for r in rows if r["test"] == "TU" and float(r["theta"]) < 0.8)
    assert abs(float(tu["beta_direct"]) - 0.592) < 1e-12


def test_curves_csv_format(tmp_path):
    out = tmp_path / "c.csv"
    assert cli.main(["curves", "--theta-grid", "0.5:0.6:0.05", "--tests", "TU", "--out", str(out)]) == 0
    text = out.read_bytes().decode("utf-8")
    assert "\r" not in text
    lines = text.splitlines()
    assert lines[0] == "theta,test,beta_formula,beta_direct"
    assert len(lines) == 4
    assert float(lines[1].split(",")[2]) == float(repr(float(lines[1].split(",")[2])))


def test_grid_parsing():
    assert cli.parse_grid("0.9:0.98:0.02") == [0.9, 0.92, 0.94, 0.96, 0.98]
    assert cli.parse_grid("1,0.5") == [0.5, 1.0]
    for bad in ("0:1:0.5", "0.5:1:0", "x", "1.2"):
        with pytest.raises(cli.UsageError):
            cli.parse_grid(bad)


def test_offdiagonal_family_coincidence_is_flagged(capsys):
    # On the figure-1 family with zero off-diagonals TV and TU differ, so a warning row appears.
    code = cli.main(["curves", "--family", "figure1", "--theta-grid", "0.9,0.95"])
    rows = _csv(capsys.readouterr().out)
    warnings = [r for r in rows if r["test"].startswith("warning:")]
    assert code == 2
    assert {r["test"] for r in warnings} == {"warning:TU==TV"}


def test_offdiagonal_family_keeps_chain(capsys):
    code = cli.main(["curves", "--family", "figure1", "--offdiag", "0.05", "--theta-grid", "0.9:0.98:0.02"])
    rows = _csv(capsys.readouterr().out)
    assert code == 0
    assert not any(r["test"].startswith("warning") for r in rows)


def test_curves_json(capsys):
    assert cli.main(["curves", "--format", "json", "--theta-grid", "0.8", "--tests", "TW,TG"]) == 0
    env = json.loads(capsys.readouterr().out)
    assert set(env) == {"command", "parameters", "version", "seed", "results"}
    assert env["command"] == "curves" and env["version"]
    assert len(env["results"]["rows"]) == 2


def test_bad_tests_flag():
    assert cli.main(["curves", "--tests", "TX"]) == 3


def test_argparse_errors_exit_3():
    with pytest.raises(SystemExit) as exc:
        cli.main(["curves", "--format", "xml"])
    assert exc.value.code == 3
    with pytest.raises(SystemExit) as exc:
        cli.main([])
    assert exc.value.code == 3


def test_verify_lp_suite(capsys):
    assert cli.main(["verify", "--suite", "theorem4"]) == 0
    env = json.loads(capsys.readouterr().out)
    checks = {c["name"]: c for c in env["results"][0]["checks"]}
    assert checks["lp_optima"]["measured"] == ["13/2", "2/3", "1", "12", "2/3"]
    assert env["seed"] == 0


def test_verify_discretize_and_ppt(capsys):
    assert cli.main(["verify", "--suite", "discretize"]) == 0
    env = json.loads(capsys.readouterr().out)
    recon = [c for c in env["results"][0]["checks"] if c["name"].endswith("reconstruction")]
    assert len(recon) == 3 and all(c["measured"] <= 1e-10 for c in recon)
    assert cli.main(["verify", "--suite", "ppt"]) == 0
    env = json.loads(capsys.readouterr().out)
    tg = [c for c in env["results"][0]["checks"] if c["name"].startswith("TG_")]
    assert tg and all(c["expected_fail"] and c["passed"] for c in tg)


def test_simulate(capsys):
    assert cli.main(["simulate", "--test", "TW", "--theta", "1", "--shots", "5000"]) == 0
    env = json.loads(capsys.readouterr().out)
    assert env["results"]["beta_hat"] == 1.0
    assert env["seed"] == cli.DEFAULT_SEED
    args = ["simulate", "--test", "Tu", "--theta", "0.7", "--shots", "200000", "--seed", "4"]
    assert cli.main(args) == 0
    first = capsys.readouterr().out
    assert cli.main(args) == 0
    assert capsys.readouterr().out == first


def test_simulate_bell_diagonal_tv(capsys):
    code = cli.main(["simulate", "--test", "TV", "--family", "bell_diagonal", "--theta", "0.7",
                     "--bell-weights", "1:1:1", "--shots", "1000000"])
    env = json.loads(capsys.readouterr().out)
    assert code == 0 and env["results"]["z_score"] <= 3


def test_simulate_usage():
    assert cli.main(["simulate", "--shots", "0"]) == 3
    assert cli.main(["simulate", "--bell-weights", "1:2"]) == 3


def test_asymptotics(capsys):
    assert cli.main(["asymptotics", "--theta", "0.9", "--n-max", "40"]) == 0
    rows = _csv(capsys.readouterr().out)
    ratios = [float(r["ratio"]) for r in rows]
    assert list(rows[0]) == ["n", "beta", "normalizer", "ratio"]
    # Rises from n=1 to n=2, then decreases monotonically toward 1.
    assert ratios[1] > ratios[0]
    assert all(b <= a for a, b in zip(ratios[1:], ratios[2:]))
    assert abs(ratios[-1] - 1) < 1e-3
    assert cli.main(["asymptotics", "--theta", "1", "--n-max", "10"]) == 0
    assert all(float(r["ratio"]) == 1 for r in _csv(capsys.readouterr().out))
    assert cli.main(["asymptotics", "--theta", "0.5", "--n-max", "3"]) == 0
    ratios = [float(r["ratio"]) for r in _csv(capsys.readouterr().out)]
    assert ratios == pytest.approx([4 / 3, 8 / 5, 16 / 9])
    assert cli.main(["asymptotics", "--n-max", "65"]) == 3
