import csv
import json

import pytest

from qss_sim import cli
from qss_sim.schemes import ControlKeySet


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_predict(capsys):
    code, out, _ = run(capsys, "predict", "--parties", "3", "--eve", "all-random")
    assert code == 0
    assert out.strip() == "0.375"


def test_predict_single(capsys):
    assert run(capsys, "predict", "--parties", "4", "--eve", "single-random", "--eve-target", "3")[1].strip() == "0.25"


def test_verify(capsys):
    code, out, _ = run(capsys, "verify", "--parties", "2..8")
    assert code == 0
    assert out.count("pass") == 7


def test_verify_failure_names_the_triple(capsys, monkeypatch):
    from qss_sim.quantum_core import Basis

    monkeypatch.setattr(cli, "oracle_mismatches", lambda n: [(n, (Basis.Y,) * n, (0,) * n, 0.5)])
    code, out, _ = run(capsys, "verify", "--parties", "3")
    assert code == 1
    assert "bases=yyy outcome=000" in out


def test_run_symmetric(capsys, tmp_path):
    report = tmp_path / "r.json"
    log = tmp_path / "rounds.csv"
    code, _, err = run(
        capsys, "run", "--scheme", "symmetric", "--parties", "3", "--rounds", "20000", "--seed", "7",
        "--output", str(report), "--log", str(log),
    )
    assert code == 0
    doc = json.loads(report.read_text())
    assert abs(doc["valid_fraction"] - 0.5) < 5 * (0.25 / 20000) ** 0.5
    assert doc["verdict"] == "clean"
    assert "verdict=clean" in err
    with open(log) as fh:
        assert sum(1 for _ in csv.reader(fh)) == 20001


def test_run_reproducible(capsys, tmp_path):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        run(capsys, "run", "--parties", "4", "--rounds", "3000", "--seed", "5", "--eve", "all-random", "-o", str(p))
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_compromised_is_not_a_tool_failure(capsys):
    code, out, _ = run(capsys, "run", "--parties", "3", "--rounds", "4000", "--seed", "1", "--eve", "all-random")
    assert code == 0
    assert json.loads(out)["verdict"] == "compromised"


def test_config_file_and_flag_precedence(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 4, "rounds": 500, "scheme": {"kind": "favored", "epsilon": 0.2}, "seed": 3}))
    _, out, _ = run(capsys, "run", "--config", str(cfg), "--rounds", "700")
    doc = json.loads(out)
    assert doc["config"]["rounds"] == 700
    assert doc["config"]["n"] == 4
    assert doc["config"]["scheme"] == {"kind": "favored", "epsilon": 0.2}
    assert doc["seed"] == 3


def test_env_seed(capsys, monkeypatch):
    monkeypatch.setenv("QSS_SEED", "42")
    _, out, _ = run(capsys, "run", "--parties", "3", "--rounds", "100")
    assert json.loads(out)["seed"] == 42
    _, out, _ = run(capsys, "run", "--parties", "3", "--rounds", "100", "--seed", "1")
    assert json.loads(out)["seed"] == 1


def test_bootstrap_then_run(capsys, tmp_path):
    keys_path = tmp_path / "keys.json"
    code, _, _ = run(capsys, "bootstrap", "--parties", "3", "--key-length", "100", "--seed", "3", "-o", str(keys_path))
    assert code == 0
    keys = ControlKeySet.from_json(keys_path.read_text())
    assert keys.key_length == 100 and keys.invalid_indices() == []
    _, out, _ = run(capsys, "run", "--scheme", "encrypted", "--parties", "3", "--rounds", "1000", "--keys", str(keys_path))
    assert json.loads(out)["valid_fraction"] == 1.0


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "--parties", "1", "--rounds", "10"],
        ["run", "--parties", "3"],
        ["run", "--parties", "3", "--rounds", "10", "--scheme", "favored", "--epsilon", "0.9"],
        ["run", "--parties", "3", "--rounds", "10", "--eve-target", "2"],
    ],
)
def test_bad_values_are_usage_errors(capsys, argv):
    assert run(capsys, *argv)[0] == cli.EXIT_USAGE


def test_bad_flags_are_usage_errors(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["run", "--bogus"])
    assert exc.value.code == cli.EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        cli.main(["predict", "--parties", "3", "--eve", "laser"])
    assert exc.value.code == cli.EXIT_USAGE


def test_parse_range():
    assert cli.parse_range("2..5") == [2, 3, 4, 5]
    assert cli.parse_range("7") == [7]
