import json
import math

import pytest

from tracefe.cli import ConfigInvalid, RunConfig, load_config, main, parse_complex, parse_params, parse_sweep


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_load_config_defaults():
    assert load_config(env={}) == RunConfig()


def test_load_config_file(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("# budgets\ncmax = 500\ndeterministic = yes\n")
    cfg = load_config(p, env={})
    assert cfg.cmax == 500 and cfg.deterministic


def test_load_config_precedence(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("cmax = 500\n")
    assert load_config(p, env={"TRACEFE_CMAX": "700"}).cmax == 700
    assert load_config(p, env={"TRACEFE_CMAX": "700"}, overrides={"cmax": "900"}).cmax == 900


@pytest.mark.parametrize("text, key", [("tol = -1", "tol"), ("tol_fe = 0", "tol_fe"), ("cmax = 2", "cmax"),
                                       ("colour = red", "colour"), ("cmax = lots", "cmax")])
def test_load_config_invalid(tmp_path, text, key):
    p = tmp_path / "run.cfg"
    p.write_text(text + "\n")
    with pytest.raises(ConfigInvalid) as exc:
        load_config(p, env={})
    assert exc.value.key == key


def test_parsers():
    assert parse_complex("2+i") == 2 + 1j
    assert parse_complex("-1+0.4i") == -1 + 0.4j
    assert parse_params("D=5,chi=D=3*5:2^1,2^2,k=1") == {"D": 5, "chi": "D=3*5:2^1,2^2", "k": 1}
    assert parse_params("g=bump:1,2,X=16") == {"g": "bump:1,2", "X": 16}
    assert parse_sweep("A=1..3,B=5") == {"A": [1, 2, 3], "B": [5]}
    assert parse_sweep("c=2..10..4") == {"c": [2, 6, 10]}


def test_reciprocity_sweep(capsys):
    code, out, err = run(capsys, "verify", "identity", "reciprocity", "--sweep", "A=1..50,B=1..50")
    lines = out.splitlines()
    coprime = sum(math.gcd(a, b) == 1 for a in range(1, 51) for b in range(1, 51))
    assert code == 0 and len(lines) == coprime == 1547
    assert all("pass=true" in ln for ln in lines)


def test_petersson_record(capsys):
    code, out, _ = run(capsys, "verify", "petersson", "--weight", "12", "--level", "1", "--n", "4", "--l", "1",
                       "--format", "json")
    rec = json.loads(out)
    assert code == 0 and rec["passed"]
    assert rec["lhs"][0] == pytest.approx(-0.71875, abs=1e-12)


def test_fe_command(capsys):
    code, out, _ = run(capsys, "verify", "fe", "--weight", "12", "--level", "1", "--s", "0.7", "--format", "json")
    rec = json.loads(out)
    assert code == 0 and rec["residual"] < 1e-8


def test_records_are_self_contained(capsys):
    _, out, _ = run(capsys, "verify", "voronoi", "--c", "1,3", "--format", "json")
    for line in out.splitlines():
        r = json.loads(line)
        assert r["passed"] == (r["residual"] <= max(r["tolerance"], 10 * r["noise_floor"]))


def test_deterministic_output(capsys):
    argv = ("verify", "identity", "orthogonality", "--sweep", "c=1..12,x=0..12", "--deterministic", "--jobs", "2")
    first = run(capsys, *argv)[1]
    second = run(capsys, *argv)[1]
    assert first == second and "time=0.000" in first


def test_failure_exit_code(capsys):
    code, out, _ = run(capsys, "verify", "identity", "lemma_sum", "--params", "D=5,k=1,c=1,l=1,m=0")
    assert code == 1 and "pass=false" in out


def test_usage_errors(capsys):
    assert run(capsys, "verify", "identity", "nope")[0] == 2
    assert run(capsys, "verify", "petersson", "--level", "7")[0] == 2
    assert run(capsys, "verify", "identity", "reciprocity", "--params", "A=4,B=6")[0] == 2
    assert run(capsys, "frobnicate")[0] == 2
    assert run(capsys, "verify", "petersson", "--set", "tol=-1")[0] == 2


def test_internal_error_exit_code(capsys, monkeypatch):
    import tracefe.traceformula as tf

    def boom(*a, **k):
        raise RuntimeError("boom")

    monkeypatch.setattr(tf, "spectral_ratio_check", boom)
    code, _, err = run(capsys, "verify", "petersson")
    assert code == 3 and "RuntimeError" in err


def test_derivation_and_isolation(capsys):
    code, out, _ = run(capsys, "verify", "derivation", "--step", "afel,b4c", "--params", "D=5")
    assert code == 0 and out.count("pass=true") == 2
    code, out, _ = run(capsys, "verify", "isolation", "--weight", "24", "--target", "1")
    assert code == 0 and out.count("pass=true") == 2


def test_scan_decay_writes_plot_data(capsys, tmp_path):
    path = tmp_path / "decay.txt"
    code, out, _ = run(capsys, "scan", "decay", "--X", "8,16,32,64", "--g", "shifted-bump:0.5,6.5,8",
                       "--plot-data", str(path))
    rows = [ln.split() for ln in path.read_text().splitlines() if not ln.startswith("#")]
    assert code == 0 and len(rows) == 4 and all(len(r) == 2 for r in rows)


def test_gen_and_export(capsys, tmp_path):
    assert run(capsys, "gen", "forms", "--weight", "24", "--N", "30", "--out", str(tmp_path))[0] == 0
    assert len(list(tmp_path.glob("weight24_level1_form*.txt"))) == 2
    out = tmp_path / "delta.txt"
    assert run(capsys, "export", "coefficients", "--weight", "12", "--N", "10", "--out", str(out))[0] == 0
    assert "5 4830" in out.read_text()


def test_verify_all_subset(capsys):
    code, out, err = run(capsys, "verify", "all", "--profile", "desk", "--criteria", "9,11")
    assert code == 0 and "criterion 9: PASS" in err and "criterion 11: PASS" in err
    assert all("criterion=" in ln for ln in out.splitlines())
