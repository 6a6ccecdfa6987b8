import json
from pathlib import Path

import numpy as np
import pytest

from signet import cli
from signet.errors import NoConvergence

FIX = Path(__file__).parent / "fixtures"
T1, T2, D3 = str(FIX / "t1.graph"), str(FIX / "t2.graph"), str(FIX / "d3.graph")


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_analyze_t2(capsys, tmp_path):
    code, out, _ = run(capsys, "analyze", "--graph", T2, "--out", str(tmp_path))
    assert code == 0
    assert "balance.verdict = StronglyBalanced" in out
    assert "balance.partition = {1,2}|{3}" in out
    assert (tmp_path / "report.txt").read_text() == out


def test_analyze_json(capsys):
    code, out, _ = run(capsys, "analyze", "--graph", T2, "--json")
    d = json.loads(out)
    assert code == 0
    assert d["balance"]["verdict"] == "StronglyBalanced"
    assert d["balance"]["partition"] == [[1, 2], [3]]
    for key in ("eigenvalues", "spectral_radius", "critical_beta", "eventually_positive"):
        assert key in d["spectral"]


def test_critical_beta_t1(capsys):
    code, out, _ = run(capsys, "critical-beta", "--graph", T1, "--alpha", "0.2", "--json")
    d = json.loads(out)
    assert code == 0
    assert abs(d["deterministic"] - 0.1) < 1e-6
    assert d["gossip"] > 0


def test_critical_beta_directed(capsys):
    code, out, err = run(capsys, "critical-beta", "--graph", D3, "--alpha", "0.2")
    assert code == 3 and "signet:" in err


def test_simulate_writes_csv(capsys, tmp_path):
    code, out, _ = run(capsys, "simulate", "--graph", T2, "--x0", "1,0,0.5", "--steps", "500",
                       "--out", str(tmp_path), "--json")
    assert code == 0
    d = json.loads(out)
    assert d["prediction"]["kind"] == "BipartiteConsensus"
    assert d["prediction_error"] < 1e-8
    lines = (tmp_path / "trajectory.csv").read_text().splitlines()
    assert lines[0] == "t,x1,x2,x3,h,spread,norm"
    np.testing.assert_allclose([float(v) for v in lines[-1].split(",")[1:4]], np.array([1, 1, -1]) / 6, atol=1e-8)
    assert json.loads((tmp_path / "prediction.json").read_text()) == d


def test_simulate_continuous(capsys):
    code, out, _ = run(capsys, "simulate", "--graph", T2, "--x0", "1 0 0.5", "--alpha", "1", "--beta", "1",
                       "--continuous", "--dt", "0.5", "--steps", "100", "--json")
    assert code == 0
    np.testing.assert_allclose(json.loads(out)["final"], np.array([1, 1, -1]) / 6, atol=1e-8)


def test_x0_from_file(capsys, tmp_path):
    f = tmp_path / "x0.txt"
    f.write_text("1\n0\n0.5\n")
    code, out, _ = run(capsys, "simulate", "--graph", T2, "--x0", str(f), "--steps", "500", "--json")
    assert code == 0 and json.loads(out)["prediction_error"] < 1e-8


def test_gossip_byte_identical(capsys, tmp_path):
    args = ["gossip", "--graph", T2, "--steps", "2000", "--runs", "5", "--seed", "17", "--json", "--csv"]
    assert run(capsys, *args, "--out", str(tmp_path / "a"))[0] == 0
    assert run(capsys, *args, "--out", str(tmp_path / "b"))[0] == 0
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == ["run_0000.csv", "run_0001.csv", "run_0002.csv", "run_0003.csv", "run_0004.csv", "summary.json"]
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    d = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert sum(d["verdict_counts"].values()) == 5
    header = (tmp_path / "a" / "run_0000.csv").read_text().splitlines()[0]
    assert header == "t,x1,x2,x3,h,spread,norm"


def test_gossip_text_summary(capsys):
    code, out, _ = run(capsys, "gossip", "--graph", T2, "--x0", "1,0,0.5", "--steps", "10000", "--runs", "3")
    assert code == 0
    assert "verdicts.BipartiteConsensus = 3" in out


@pytest.mark.parametrize(
    "argv",
    [
        ["analyze"],
        ["nonsense", "--graph", "x"],
        ["simulate", "--graph", "G", "--alpha", "1.5"],
        ["simulate", "--graph", "G", "--rule", "attract"],
        ["gossip", "--graph", "G", "--runs", "0"],
        ["gossip", "--graph", "G", "--seed", "-1"],
        ["simulate", "--graph", "G", "--bound", "0"],
        ["analyze", "--graph", "/no/such/file"],
    ],
)
def test_usage_errors(capsys, argv):
    argv = [T2 if a == "G" else a for a in argv]
    assert run(capsys, *argv)[0] == 1


def test_parse_error_exit_code(capsys, tmp_path):
    bad = tmp_path / "bad.graph"
    bad.write_text("signet-graph v1\nn 3\ndirected 0\n1 1 +1\n")
    code, _, err = run(capsys, "analyze", "--graph", str(bad))
    assert code == 2 and "line 4" in err


def test_precondition_exit_code(capsys):
    # G+ of T2 is a single edge, so the repelling threshold is undefined
    assert run(capsys, "critical-beta", "--graph", T2)[0] == 3


def test_numeric_exit_code(capsys, monkeypatch):
    def boom(cfg):
        raise NoConvergence("eigensolver budget exhausted")

    monkeypatch.setitem(cli.DISPATCH, "analyze", boom)
    assert run(capsys, "analyze", "--graph", T1)[0] == 4


def test_verify_failure_exit_code(capsys, monkeypatch):
    from signet import acceptance

    def fake(only=None):
        return [acceptance.CriterionResult(99, "fake", False, "forced", 0.0)]

    monkeypatch.setattr(acceptance, "run_all", fake)
    code, out, _ = run(capsys, "verify")
    assert code == 5 and "[FAIL]" in out


def test_verify_subset(capsys):
    code, out, _ = run(capsys, "verify", "--only", "1", "3")
    assert code == 0
    assert len(out.splitlines()) == 2 and all(line.startswith("[PASS]") for line in out.splitlines())


def test_config_precedence(capsys, tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text(f"# defaults\ngraph = {T1}\nalpha = 0.1\njson = true\n")
    d = json.loads(run(capsys, "critical-beta", "--config", str(conf))[1])
    assert abs(d["deterministic"] - 0.05) < 1e-6
    d = json.loads(run(capsys, "critical-beta", "--config", str(conf), "--alpha", "0.2")[1])
    assert abs(d["deterministic"] - 0.1) < 1e-6


def test_bad_config(capsys, tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("colour = blue\n")
    assert run(capsys, "analyze", "--config", str(conf))[0] == 1
    conf.write_text("alpha = fast\n")
    assert run(capsys, "analyze", "--config", str(conf))[0] == 1


def test_formatting():
    assert cli.fmt6(1 / 3) == "0.333333"
    assert cli.fmt6(None) == "none" and cli.fmt6(True) == "true"
    assert cli.kv_block({"a": {"b": 1, "c": [0.5, 2]}}) == "a.b = 1\na.c = [0.5, 2]"
    assert json.loads(cli.dump_json({"x": float("inf"), "y": np.float64(0.1)})) == {"x": None, "y": 0.1}
