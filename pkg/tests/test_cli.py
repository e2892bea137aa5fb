import json
import subprocess
import sys

import pytest

from isomlab import cli

SHIFT_VECTOR = '{"dim": 1, "terms": [{"coeff": 1, "shift": [0], "decay": [1]}]}'
GEOMETRIC = '{"prefix": [], "generator": {"kind": "geometric", "t": -0.5}}'
SHIFTED = ('{"prefix": [], "generator": {"kind": "shifted", "scale": 1.0, "power": %s, '
           '"base": {"prefix": [], "generator": {"kind": "geometric", "t": -0.5}}}}')

PASSING = {
    "gram": ["gram", "--vectors", "[%s, %s]" % (SHIFT_VECTOR, SHIFT_VECTOR.replace('"shift": [0]', '"shift": [1]'))],
    "cooper-verify": ["cooper-verify", "--rep", '{"kind": "discrete", "generators": [{"type": "shift"}]}',
                      "--truncation", "20", "--bound", "7.6e-9"],
    "wold": ["wold", "--rep", '{"kind": "model", "point": {"d": 2, "A": [1], "lambda": {"2": 0.5}}}',
             "--vector", SHIFT_VECTOR],
    "wold-reconstruct": ["wold-reconstruct", "--rep",
                         '{"kind": "discrete", "generators": [{"type": "shift", "step": 2}]}',
                         "--vector", '{"dim": 1, "entries": [{"index": [3], "coeff": [1, 1]}]}', "--box", "4"],
    "periodic-modes": ["periodic-modes", "--input", '{"spectra": [1, 2], "n_range": [[-3, 3]]}'],
    "fell-separate": ["fell", "separate", "--P", '{"d": 1, "A": [1], "lambda": {}}',
                      "--Q", '{"d": 1, "A": [], "lambda": {"1": 0}}'],
    "fell-closure": ["fell", "closure", "--P", '{"d": 2, "A": [1, 2], "lambda": {}}',
                     "--Q", '{"d": 2, "A": [1], "lambda": {"2": 5}}'],
    "fell-density": ["fell", "density", "--lambda", "3", "--eps", "0.1", "--a", "1"],
    "xmember": ["xmember", "--geometric", "-0.5"],
    "kakutani": ["kakutani", "--a", GEOMETRIC, "--b", SHIFTED % 0.5],
    "va-check": ["va-check", "--sequence", GEOMETRIC, "--dim", "2", "--count", "4"],
    "restrict-equiv": ["restrict-equiv", "--a", GEOMETRIC, "--b", SHIFTED % 1.0, "--n", "2"],
    "wold-failure": ["wold-failure", "--nu", "[0.9, 0.1]", "--d", "10"],
}


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_every_subcommand_is_covered():
    assert set(PASSING) == set(cli.COMMANDS)


@pytest.mark.parametrize("name", sorted(PASSING))
def test_subcommand_passes_and_is_deterministic(name, capsys):
    code, first, _ = run(PASSING[name], capsys)
    assert code == 0, first
    body = json.loads(first)
    assert body["command"] == name
    assert body["certificate"]["status"] == "PASS"
    _, second, _ = run(PASSING[name], capsys)
    assert first == second


def test_density_reports_delta(capsys):
    _, out, _ = run(PASSING["fell-density"], capsys)
    body = json.loads(out)
    assert body["delta"] == pytest.approx(5.01e-3, rel=1e-3)


def test_output_identical_across_processes(tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / f"r{k}.json"
        subprocess.run([sys.executable, "-m", "isomlab", *PASSING["kakutani"], "--out", str(path)], check=True)
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_failing_check_exits_one(capsys):
    code, out, _ = run(["fell", "closure", "--P", '{"d": 1, "A": [], "lambda": {"1": 0}}',
                        "--Q", '{"d": 1, "A": [1], "lambda": {}}'], capsys)
    assert code == 1
    assert json.loads(out)["member"] is False


def test_aliasing_is_reported_as_failure(capsys):
    code, out, _ = run(["periodic-modes", "--input", '{"spectra": [1, 9], "n_range": 1, "quad_points": 8}'], capsys)
    assert code == 1
    assert json.loads(out)["certificate"]["metadata"]["suggested_resolution"] == 16


@pytest.mark.parametrize("argv,field", [
    (["gram", "--vectors", '[{"dim": 1, "terms": [{"coeff": 1, "shift": [0], "decay": [-2]}]}]'],
     "vectors[0].terms[0]"),
    (["wold", "--rep", '{"kind": "warp"}', "--vector", "{}"], "rep.kind"),
    (["fell", "separate", "--P", '{"d": 1, "A": [2], "lambda": {}}', "--Q", '{"d": 1, "A": [1], "lambda": {}}'], "P"),
    (["xmember", "--sequence", '{"generator": null}'], "sequence.prefix"),
    (["wold-failure", "--nu", "[0.5, 0.7]", "--d", "3"], "--nu"),
    (["gram", "--vectors", "[1, 2"], "--vectors"),
    (["xmember", "--geometric", "-0.5", "--tol", "0"], "--tol"),
])
def test_schema_errors_exit_two_and_name_the_field(argv, field, capsys):
    code, out, err = run(argv, capsys)
    assert code == 2
    assert out == ""
    assert field in err


def test_csv_output(capsys):
    code, out, _ = run(["wold-failure", "--nu", "[0.5, 0.5]", "--d", "3", "--format", "csv"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "d,max_mass"
    assert lines[-1] == "3,0.125"


def test_out_flag_writes_file(tmp_path, capsys):
    path = tmp_path / "report.json"
    code, out, _ = run(PASSING["xmember"] + ["--out", str(path)], capsys)
    assert code == 0 and out == ""
    body = json.loads(path.read_text())
    assert body["certificate"]["achieved"] == pytest.approx(0.8464817248906141, abs=1e-12)


def test_inputs_may_be_files(tmp_path, capsys):
    path = tmp_path / "seq.json"
    path.write_text(GEOMETRIC)
    code, out, _ = run(["xmember", "--sequence", str(path)], capsys)
    assert code == 0
    code, _, err = run(["xmember", "--sequence", str(tmp_path / "missing.json")], capsys)
    assert code == 2 and "--sequence" in err
