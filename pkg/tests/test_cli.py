import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from backbone.cli import RunConfig, emit_plot_data, main, run, validate_input
from backbone.engine import Annealed, Exact, Sampled


def cli(*args):
    return main([str(a) for a in args])


def report_json(capsys, *args):
    assert cli(*args) == 0
    return json.loads(capsys.readouterr().out)


def partials(rep):
    return [r["partial"] for r in rep["spectrum"]]


def test_xor_negentropy(capsys, data_dir):
    rep = report_json(capsys, "--measure", "negentropy", "--input", data_dir / "xor.json", "--exact")
    np.testing.assert_allclose(partials(rep), [1, 0, 0], atol=1e-9)
    assert rep["header"] == {"measure": "negentropy", "aggregator": "min", "strategy": "EXACT",
                             "seed": 0, "ground_size": 3, "base": "2", "local_state": None}
    assert rep["sum_identity_ok"] and rep["total"] == pytest.approx(1.0)
    for row in rep["local"]:
        np.testing.assert_allclose(row["partial"], [1, 0, 0], atol=1e-9)
    assert set(rep["components"]) == {"prior", "posterior"}


def test_and_local_negentropy(capsys, data_dir):
    rep = report_json(capsys, "--measure", "negentropy", "--input", data_dir / "and.json",
                      "--exact", "--local", "1,1,1")
    np.testing.assert_allclose(partials(rep), [1, 1, -1], atol=1e-9)


def test_empty_graph(capsys, data_dir):
    rep = report_json(capsys, "--measure", "communicability", "--input", data_dir / "empty_graph.csv",
                      "--nodes", 3)
    assert all(r["partial"] == 0 for r in rep["spectrum"]) and rep["total"] == 0


def test_independent_bits_entropy(capsys, data_dir):
    rep = report_json(capsys, "--measure", "entropy", "--input", data_dir / "three_bits.json")
    np.testing.assert_allclose(partials(rep), [1, 1, 1], atol=1e-9)


def test_mi_and_kl(capsys, data_dir):
    rep = report_json(capsys, "--measure", "mi-conditional", "--input", data_dir / "xor.json",
                      "--target", 2)
    np.testing.assert_allclose(partials(rep), [1, 0], atol=1e-9)
    rep = report_json(capsys, "--measure", "kl", "--input", data_dir / "and.json",
                      "--prior", data_dir / "three_bits.json", "--aggregator", "max")
    assert rep["sum_identity_ok"]


def test_gaussian_and_base(capsys, data_dir):
    rep = report_json(capsys, "--measure", "gaussian-entropy", "--input", data_dir / "gaussian3.json")
    assert rep["header"]["base"] == "e" and rep["sum_identity_ok"]
    rep2 = report_json(capsys, "--measure", "gaussian-entropy", "--input", data_dir / "gaussian3.json",
                       "--base", "2")
    assert rep2["total"] == pytest.approx(rep["total"] / np.log(2))


@pytest.mark.parametrize("args", [
    ["--measure", "negentropy", "--input", "/no/such/file.json"],
    ["--measure", "mi-joint", "--input", "XOR"],                         # missing --target
    ["--measure", "entropy", "--input", "XOR", "--target", "1"],         # stray --target
    ["--measure", "kl", "--input", "XOR"],                               # missing --prior
    ["--measure", "entropy", "--input", "XOR", "--local", "1,x,0"],
    ["--measure", "entropy", "--input", "XOR", "--local", "1,1"],
    ["--measure", "entropy", "--input", "AND", "--local", "1,1,0"],      # off support
    ["--measure", "mi-joint", "--input", "XOR", "--target", "7"],
    ["--input", "XOR"],
])
def test_input_errors_exit_2(capsys, data_dir, args):
    args = [str(data_dir / "xor.json") if a == "XOR" else str(data_dir / "and.json") if a == "AND"
            else a for a in args]
    assert cli(*args) == 2
    err = capsys.readouterr().err.strip()
    assert err.startswith("error:") and "\n" not in err


def test_infeasible_exit_3_and_no_partial_output(tmp_path, capsys):
    lines = ["u,v,w"] + [f"{i},{j},1" for i in range(7) for j in range(i + 1, 7)]
    (tmp_path / "k7.csv").write_text("\n".join(lines))
    out = tmp_path / "report.json"
    assert cli("--measure", "communicability", "--input", tmp_path / "k7.csv", "--exact",
               "--output", out, "--plot-data", tmp_path / "plot.csv") == 3
    assert sorted(p.name for p in tmp_path.iterdir()) == ["k7.csv"]


def test_golden_stability_and_format_parity(tmp_path, data_dir):
    args = ["--measure", "negentropy", "--input", data_dir / "and.json", "--anneal", "--seed", 11]
    cli(*args, "--output", tmp_path / "a.json")
    cli(*args, "--output", tmp_path / "b.json", "--threads", 4)
    cli(*args, "--output", tmp_path / "c.csv", "--format", "csv")
    a, b = (json.loads((tmp_path / n).read_text()) for n in ("a.json", "b.json"))
    a.pop("wall_time"), b.pop("wall_time")
    assert json.dumps(a) == json.dumps(b)
    rows = list(csv.DictReader((tmp_path / "c.csv").open()))
    for row, rec in zip(rows, a["spectrum"]):
        assert float(row["synergy"]) == pytest.approx(rec["synergy"], rel=1e-11, abs=1e-12)
        assert float(row["partial"]) == pytest.approx(rec["partial"], rel=1e-11, abs=1e-12)
        assert row["violation"] == str(rec["violation"]).lower()


def test_plot_data(tmp_path, data_dir):
    out = tmp_path / "plot.csv"
    assert cli("--measure", "negentropy", "--input", data_dir / "xor.json", "--plot-data", out,
               "--output", tmp_path / "r.json") == 0
    rows = list(csv.DictReader(out.open()))
    assert list(rows[0]) == ["alpha", "synergy", "partial", "violation"]
    np.testing.assert_allclose([float(r["partial"]) for r in rows], [1, 0, 0], atol=1e-9)
    first = out.read_bytes()
    cli("--measure", "negentropy", "--input", data_dir / "xor.json", "--plot-data", out,
        "--output", tmp_path / "r.json")
    assert out.read_bytes() == first


def test_plot_data_marks_repaired_rows(tmp_path):
    (tmp_path / "g.json").write_text(json.dumps(
        {"mean": [0, 0], "covariance": [[100.0, 0], [0, 1e-4]]}))
    cfg = RunConfig("gaussian-entropy", str(tmp_path / "g.json"), enforce_monotone=True)
    rep = run(cfg)
    emit_plot_data(rep, tmp_path / "p.csv")
    rows = list(csv.DictReader((tmp_path / "p.csv").open()))
    assert any(r["violation"] == "true" for r in rows)
    assert rep.raw_synergy is not None
    assert not rep.sum_identity_ok  # repaired atoms no longer sum to the direct total


def test_validate(tmp_path, data_dir, capsys):
    assert cli("--validate", "--input", data_dir / "xor.json") == 0
    out = capsys.readouterr().out
    assert out.startswith("ok:") and "k=3" in out and "support size 4" in out and "entropy 2 bits" in out
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"alphabet_sizes": [2, 2], "pmf": [
        {"state": [0, 0], "p": 0.5}, {"state": [1, 5], "p": 0.499}, {"state": [0, 0], "p": 0.0}]}))
    assert cli("--validate", "--input", bad) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 3
    assert any("deficit 0.001" in l for l in lines)
    g = tmp_path / "g.csv"
    g.write_text("u,v,w\n0,1,1\n1,2,-0.5\n")
    validate_input(g)
    assert cli("--validate", "--input", g) == 0
    out = capsys.readouterr().out
    assert "edge 1" in out and "desideratum" in out


def test_seed_is_echoed_and_entropy_seed(capsys, data_dir):
    rep = report_json(capsys, "--measure", "entropy", "--input", data_dir / "xor.json",
                      "--sample", 5, "--seed", 99)
    assert rep["header"]["seed"] == 99 and "seed=99" in rep["header"]["strategy"]
    rep = report_json(capsys, "--measure", "entropy", "--input", data_dir / "xor.json",
                      "--anneal", "--entropy-seed")
    assert isinstance(rep["header"]["seed"], int)


def test_threads_env_fallback(monkeypatch, capsys, data_dir):
    monkeypatch.setenv("BACKBONE_THREADS", "3")
    rep = report_json(capsys, "--measure", "entropy", "--input", data_dir / "xor.json", "--anneal")
    monkeypatch.delenv("BACKBONE_THREADS")
    rep2 = report_json(capsys, "--measure", "entropy", "--input", data_dir / "xor.json", "--anneal")
    assert rep["spectrum"] == rep2["spectrum"]


def test_console_script_runs(data_dir):
    res = subprocess.run([sys.executable, "-m", "backbone.cli", "--measure", "negentropy",
                          "--input", str(data_dir / "xor.json"), "--format", "csv"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("alpha,synergy")


def test_runconfig_strategies(data_dir):
    path = str(data_dir / "xor.json")
    for strat in (Exact(), Sampled(3, seed=1), Annealed(seed=2)):
        rep = run(RunConfig("entropy", path, strategy=strat))
        np.testing.assert_allclose(rep.partial, [0, 1, 1], atol=1e-9)
