import json
import subprocess
import sys

import pytest

from intsurj.cli import EXIT_INPUT, EXIT_NOT_SURJECTIVE, EXIT_OK, EXIT_RESOURCE, main
from intsurj.matrix_io import read_matrix
from intsurj.surjectivity import is_surjective_snf


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="ascii")
    return str(path)


@pytest.fixture
def mats(tmp_path):
    return {
        "unit": write(tmp_path, "unit.txt", "2 3\n1 0 5\n0 1 -2\n"),
        "even": write(tmp_path, "even.txt", "# all even\n2 2\n2 0\n0 2\n"),
        "three": write(tmp_path, "three.txt", "2 3\n1 2 3\n4 5 6\n"),
        "short": write(tmp_path, "short.txt", "2 3\n1 2 3\n4 5\n"),
        "word": write(tmp_path, "word.txt", "1 2\n1 x\n"),
    }


def test_check_surjective(mats, capsys):
    assert main(["check", mats["unit"]]) == EXIT_OK
    assert capsys.readouterr().out.startswith("surjective (method fast_path)")


def test_check_not_surjective(mats, capsys):
    assert main(["check", mats["even"]]) == EXIT_NOT_SURJECTIVE
    assert "not surjective, p=2" in capsys.readouterr().out
    assert main(["check", "--method", "snf", mats["three"]]) == EXIT_NOT_SURJECTIVE
    assert "p=3" in capsys.readouterr().out


def test_check_json(mats, capsys):
    assert main(["check", "--json", mats["even"]]) == EXIT_NOT_SURJECTIVE
    out = json.loads(capsys.readouterr().out)
    assert out["surjective"] is False and out["witness"]["p"] == "2"


@pytest.mark.parametrize("name", ["short", "word"])
def test_check_bad_input(mats, name, capsys):
    assert main(["check", mats[name]]) == EXIT_INPUT
    assert "line" in capsys.readouterr().err


def test_missing_file(tmp_path, capsys):
    assert main(["check", str(tmp_path / "nope.txt")]) == EXIT_INPUT


def test_bad_arguments():
    assert main(["check"]) == EXIT_INPUT
    assert main(["frobnicate"]) == EXIT_INPUT


def test_snf_output(mats, capsys):
    assert main(["snf", mats["three"]]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "1 3"
    assert lines[1] == "free rank: 0"
    assert lines[2] == "sylow(3): [1]"
    assert main(["snf", mats["unit"]]) == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "1 1" and out[1:] == ["free rank: 0"]


def test_snf_json(tmp_path, capsys):
    path = write(tmp_path, "m.txt", "2 2\n2 0\n0 6\n")
    assert main(["snf", "--json", path]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["invariant_factors"] == ["2", "6"]
    assert out["sylow"] == {"2": [1, 1], "3": [1]}


def test_snf_zero_matrix(tmp_path, capsys):
    path = write(tmp_path, "z.txt", "2 2\n0 0\n0 0\n")
    assert main(["snf", path]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "" and lines[1] == "free rank: 2"


def test_theory_outputs(capsys):
    assert main(["theory", "--padic", "2", "3", "2"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "21/32"
    assert main(["theory", "--zeta-limit", "0"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "0 (exact)"
    assert main(["theory", "--zeta-limit", "1"]) == EXIT_OK
    value = float(capsys.readouterr().out.split()[0])
    assert 0.4357 < value < 0.4358
    assert main(["theory", "--wood", "2:", "--u", "1", "--json"]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["wood"]["value"].startswith("0.57757")


def test_theory_errors(capsys):
    assert main(["theory"]) == EXIT_INPUT
    assert main(["theory", "--padic", "3", "2", "2"]) == EXIT_INPUT
    assert main(["theory", "--wood", "4:1"]) == EXIT_INPUT


def test_counterexample_is_reproducible(tmp_path, capsys):
    assert main(["counterexample", "1", "2", "--seed", "7"]) == EXIT_OK
    first = capsys.readouterr().out
    assert main(["counterexample", "1", "2", "--seed", "7"]) == EXIT_OK
    assert capsys.readouterr().out == first
    path = tmp_path / "adv.txt"
    assert main(["counterexample", "1", "2", "--seed", "7", "--out", str(path)]) == EXIT_OK
    assert path.read_text(encoding="ascii") == first
    A = read_matrix(str(path))
    assert A.shape == (1, 2)
    code = main(["check", str(path)])
    expected = EXIT_OK if is_surjective_snf(A).surjective else EXIT_NOT_SURJECTIVE
    assert code == expected


def test_counterexample_resource_limit(capsys):
    assert main(["counterexample", "4", "4", "--seed", "1"]) == EXIT_RESOURCE


CONFIG = """kind = surjectivity_rate
distribution = uniform
k = 3
n = 2, 3
u = 1
trials = 120
seed = 4
"""


def test_experiment_outputs_are_byte_identical(tmp_path, capsys):
    cfg = write(tmp_path, "run.cfg", CONFIG)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["experiment", cfg, "--out", str(a)]) == EXIT_OK
    assert main(["experiment", cfg, "--workers", "4", "--out", str(b)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "surjectivity_rate  seed=4" in out and "conjectured limit" in out
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_experiment_unknown_key(tmp_path, capsys):
    cfg = write(tmp_path, "bad.cfg", CONFIG + "colour = red\n")
    assert main(["experiment", cfg, "--out", str(tmp_path / "x")]) == EXIT_INPUT
    assert "colour" in capsys.readouterr().err


def test_experiment_resource_limit(tmp_path, capsys):
    cfg = write(tmp_path, "adv.cfg", "kind = adversarial_failure\ndistribution = adversarial\n"
                                     "n = 3\nm = 5\ntrials = 10\nseed = 1\n")
    assert main(["experiment", cfg, "--out", str(tmp_path / "x")]) == EXIT_RESOURCE
    assert "resource limit" in capsys.readouterr().err


def test_module_entry_point(mats):
    proc = subprocess.run([sys.executable, "-m", "intsurj", "check", mats["even"]],
                          capture_output=True, text=True)
    assert proc.returncode == EXIT_NOT_SURJECTIVE
    assert proc.stdout.startswith("not surjective, p=2")
