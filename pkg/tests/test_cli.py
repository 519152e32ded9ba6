import json

import numpy as np
import pytest

from fexpo import cli
from fexpo import graph_core as gc


@pytest.fixture
def path_file(tmp_path):
    p = tmp_path / "path.wg"
    p.write_text(gc.format_graph(gc.path_graph([1, 2])))
    return str(p)


def test_exponent_prints_symbolic_and_value(path_file, capsys):
    assert cli.run(["exponent", "--graph", path_file, "--alpha", "4H-1", "--H", "0.6"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("symbolic: ")
    assert float(out[1].split(":")[1]) == pytest.approx(0.0)


def test_exponent_second_with_t_set(path_file, capsys):
    assert cli.run(["exponent", "--graph", path_file, "--alpha", "4H-1", "--second",
                    "--t-set", "1,2", "--H", "0.7"]) == 0
    value = float(capsys.readouterr().out.splitlines()[1].split(":")[1])
    assert value == pytest.approx(max(-0.5, 4 * 0.7 - 3))


def test_rewrite_csv(path_file, tmp_path):
    out = tmp_path / "rw.csv"
    assert cli.run(["rewrite", "--graph", path_file, "--alpha", "4H-1", "--out", str(out),
                    "--no-timestamp"]) == 0
    lines = out.read_text().splitlines()
    assert "# case=A" in lines and "# law_holds=True" in lines
    header = next(ln for ln in lines if not ln.startswith("#"))
    assert header == "index,alpha,multiplicity,exponent,graph,provenance"


def test_beta_slope_cycle(capsys):
    assert cli.run(["beta-slope", "--cycle", "2", "--H", "0.6", "--n-grid", "64,128,256,512",
                    "--no-timestamp"]) == 0
    meta = dict(ln[2:].split("=", 1) for ln in capsys.readouterr().out.splitlines() if ln.startswith("# "))
    assert float(meta["slope"]) == pytest.approx(1 - 4 * 0.6, abs=0.1)


def test_beta_slope_needs_target():
    assert cli.run(["beta-slope"]) == 1


def test_chaos_check(capsys):
    assert cli.run(["chaos-check", "--configs", "20", "--seed", "5"]) == 0
    assert "failures: 0" in capsys.readouterr().out


def test_chaos_helpers_are_even_order():
    rng = np.random.default_rng(0)
    for _ in range(50):
        q, gram = cli.random_chaos_config(rng)
        assert sum(q.values()) % 2 == 0 and len(q) <= 4 and max(q.values()) <= 3
        assert np.all(np.linalg.eigvalsh(gram) > -1e-12)


def test_simulate_is_byte_identical(tmp_path):
    args = ["simulate-fou", "--n", "16", "--paths", "50", "--substeps", "2", "--seed", "3", "--no-timestamp"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.run(args + ["--out", str(a), "--threads", "1"]) == 0
    assert cli.run(args + ["--out", str(b), "--threads", "4"]) == 0
    assert a.read_bytes() == b.read_bytes()
    rows = [ln for ln in a.read_text().splitlines() if not ln.startswith("#")]
    assert rows[0] == "path,v_n,z_n" and len(rows) == 51


def test_timestamp_line_is_optional(tmp_path):
    out = tmp_path / "d.csv"
    assert cli.run(["expand-fou", "--n", "64", "--points", "5", "--out", str(out)]) == 0
    assert out.read_text().startswith("# generated ")
    assert cli.run(["expand-fou", "--n", "64", "--points", "5", "--out", str(out), "--no-timestamp"]) == 0
    assert not out.read_text().startswith("# generated ")


def test_expand_fou_full_precision(tmp_path):
    out = tmp_path / "d.csv"
    cli.run(["expand-fou", "--n", "256", "--points", "3", "--out", str(out), "--no-timestamp"])
    lines = out.read_text().splitlines()
    c1 = float(next(ln for ln in lines if ln.startswith("# c1=")).split("=")[1])
    assert c1 == pytest.approx(-0.67307, abs=1e-5)
    z, p = lines[-2].split(",")
    assert float(z) == 0.0 and float(p) > 0
    # 17 significant digits round-trip exactly
    assert repr(float(p)) == repr(float(format(float(p), ".17g")))


def test_compare_json(tmp_path, capsys):
    sim = tmp_path / "s.csv"
    assert cli.run(["simulate-fou", "--n", "32", "--paths", "1500", "--substeps", "2",
                    "--out", str(sim)]) == 0
    assert cli.run(["compare", "--n", "32", "--samples", str(sim), "--bootstrap", "20"]) == 0
    res = json.loads(capsys.readouterr().out)
    assert res["samples"] == 1500 and isinstance(res["improved"], bool)
    assert cli.run(["compare", "--samples", str(sim), "--column", "nope"]) == 1


def test_regression_passes(capsys):
    assert cli.run(["regression"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out and all(ln.startswith("PASS") for ln in out)


def test_regression_failure_exit_code(monkeypatch):
    from fexpo import regression
    bad = regression.RegressionResult(regression.TABLE[0], "x", False)
    monkeypatch.setattr(cli, "run_regression", lambda: [bad])
    assert cli.run(["regression"]) == 2


@pytest.mark.parametrize("argv", [
    ["exponent", "--bogus"],
    ["nosuch"],
    [],
    ["simulate-fou", "--H", "0.8"],
    ["simulate-fou", "--H", "abc"],
    ["chaos-check", "--seed", "-1"],
    ["exponent", "--graph", "/nonexistent.wg", "--alpha", "0"],
])
def test_bad_input_exits_one(argv):
    assert cli.run(argv) == 1


def test_bad_graph_file(tmp_path):
    g = tmp_path / "bad.wg"
    g.write_text("v 1 x\n")
    assert cli.run(["exponent", "--graph", str(g), "--alpha", "0"]) == 1


def test_help_exits_zero():
    assert cli.run(["--help"]) == 0
