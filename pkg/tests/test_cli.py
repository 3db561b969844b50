import csv
import io
import json
from pathlib import Path

import numpy as np
import pytest

from tightlag import cli

SAMPLES = Path(__file__).resolve().parents[1] / "samples"


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(argv, capsys):
    code, out, _ = run(argv + ["--format", "json"], capsys)
    return code, json.loads(out)


@pytest.mark.parametrize("surface,expected", [("m0", 3), ("torus:0.5,0.3", 4)])
def test_nullity(surface, expected, capsys):
    code, rep = run_json(["nullity", "--surface", surface], capsys)
    assert code == 0 and rep["nullity"] == expected and rep["stable"]
    assert set(rep["ranks_by_tol"].values()) == {expected}


def test_nullity_rank_deficient_exits_2(capsys):
    code, _, err = run(["nullity", "--surface", f"param:{SAMPLES / 'bad.json'}"], capsys)
    assert code == 2 and "instability" in err


def test_check_lagrangian(capsys):
    code, rep = run_json(["check-lagrangian", "--surface", f"param:{SAMPLES / 'graph_identity.json'}"], capsys)
    assert code == 1 and rep["lagrangian"] is False
    code, rep = run_json(["check-lagrangian", "--surface", f"param:{SAMPLES / 'wobbly_torus.json'}"], capsys)
    assert code == 0 and rep["lagrangian"] is True


def test_gotoh(capsys):
    code, rep = run_json(["gotoh", "--surface", "m0", "--samples", "100"], capsys)
    assert code == 0 and rep["max_bound"] == 3 and rep["nullity"] == 3
    code, rep = run_json(["gotoh", "--surface", f"param:{SAMPLES / 'wobbly_torus.json'}"], capsys)
    assert code == 0 and rep["nullity"] >= rep["max_bound"] == 4
    code, _ = run_json(["gotoh", "--surface", f"param:{SAMPLES / 'graph_identity.json'}"], capsys)
    assert code == 1


def test_kahler_scan_csv(capsys, tmp_path):
    out = tmp_path / "scan.csv"
    code, _, _ = run(["kahler-scan", "--resolution", "64", "--format", "csv", "--out", str(out)], capsys)
    assert code == 0
    text = out.read_text()
    assert text.splitlines()[0] == "sum,diff,dim_im_psi2"
    rows = list(csv.DictReader(io.StringIO(text)))
    assert len(rows) == 4096
    code, out2, _ = run(["kahler-scan", "--resolution", "5", "--format", "csv"], capsys)
    rows = list(csv.DictReader(io.StringIO(out2)))
    lag = [int(r["dim_im_psi2"]) for r in rows if float(r["diff"]) == np.pi / 2]
    assert lag == [1, 2, 2, 2, 1]


def test_poincare(capsys):
    code, rep = run_json(["poincare", "--surface", "m0", "--samples", "100000", "--seed", "7"], capsys)
    assert code == 0
    assert abs(rep["mean"] - 128 * np.pi ** 4) <= max(3 * rep["std_error"], 1e-9 * rep["expected"])


def test_tightness_and_replay(capsys, tmp_path):
    vfile = tmp_path / "violations.json"
    code, rep = run_json(["tightness", "--surface", "torus:0.5,0.5", "--regime", "global",
                          "--expect-tight", "--violations", str(vfile)], capsys)
    assert code == 1 and rep["violations"] > 0
    data = json.loads(vfile.read_text())
    assert all(d["count"] == 0 for d in data)
    code, rep = run_json(["intersect", "--surface", "torus:0.5,0.5", "--replay", str(vfile)], capsys)
    assert code == 0 and rep["mismatches"] == 0 and rep["cases"] == len(data)
    code, rep = run_json(["tightness", "--surface", "m0", "--regime", "global", "--expect-tight",
                          "--samples", "2000", "--violations", str(tmp_path / "none.json")], capsys)
    assert code == 0 and rep["violations"] == 0
    assert not (tmp_path / "none.json").exists()
    code, rep = run_json(["tightness", "--surface", "torus:0.5,0.3", "--regime", "local", "--expect-tight",
                          "--samples", "2000", "--epsilon", "0.05"], capsys)
    assert code == 0 and rep["epsilon"] == 0.05


def test_intersect_sampling(capsys):
    code, rep = run_json(["intersect", "--surface", "torus:0,0", "--samples", "20"], capsys)
    assert code == 0 and rep["histogram"] == {"4": 20}
    code, rep = run_json(["intersect", "--surface", "m0", "--samples", "3", "--method", "generic"], capsys)
    assert code == 0 and rep["histogram"] == {"2": 3}


def test_morse(capsys):
    code, rep = run_json(["morse", "--surface", "torus:0,0", "--samples", "2", "--resolution", "64",
                          "--expect-tight"], capsys)
    assert code == 0 and all(r["zeros"] == r["critical"] == 4 for r in rep["rows"])


def test_json_is_byte_identical(capsys):
    argv = ["poincare", "--surface", "torus:0.5,0.3", "--samples", "2000", "--seed", "3", "--format", "json"]
    _, a, _ = run(argv, capsys)
    _, b, _ = run(argv, capsys)
    assert a == b


def test_json_floats_have_17_digits():
    assert cli.dumps_json({"x": 0.1}) == '{\n  "x": 0.10000000000000001\n}'
    assert float(cli._json_float(np.pi)) == np.pi
    assert cli._json_float(2.0) == "2.0"


def test_text_rounds_to_6_digits():
    assert "mean: 3.14159\n" in cli.render({"mean": np.pi}, "text")


@pytest.mark.parametrize("argv", [["nullity"], ["poincare", "--surface", "foo"], ["bogus"],
                                  ["nullity", "--surface", "m0", "--samples", "0"],
                                  ["check-lagrangian", "--surface", "m0", "--tol", "-1"],
                                  ["intersect", "--surface", "m0", "--replay", "/nonexistent.json"],
                                  ["kahler-scan", "--resolution", "1"],
                                  ["nullity", "--surface", "param:/nonexistent.json"]])
def test_usage_errors(argv, capsys):
    try:
        code = cli.main(argv)
    except SystemExit as e:
        code = e.code
    assert code == 64
