import hashlib
import json
import subprocess
import sys

import pytest

from qwalk.cli import main, read_config
from qwalk.experiments import CATALOG, ExperimentSpec, InvalidParameters, execute, parse_params

FAST = {
    "line-walk": {"T": "30"},
    "circle-mix": {"N": "5", "t_max": "200"},
    "hypercube-hit": {"d": "3", "t_max": "60"},
    "absorb": {"T": "200"},
    "glued-trees": {"n": "2", "points": "41"},
    "decohere": {"T": "20"},
    "decohere-sweep": {"T": "20", "p_values": "0,0.5,1"},
    "multicoin": {"T": "20"},
    "demo-adz": {"delta_x": "100", "sweep_eps": "0.05", "sweep_delta_x": "100"},
    "classical-2sat": {"trials": "5"},
    "classical-stconn": {"V": "8", "trials": "10"},
    "classical-mixing": {"size": "5", "t_max": "200"},
}


def _digest(folder):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(folder.iterdir())}


def _run(tmp_path, name, params, seed=0, sub="out"):
    argv = ["run", "--experiment", name, "--seed", str(seed), "--out", str(tmp_path / sub)]
    for k, v in params.items():
        argv += ["--param", f"{k}={v}"]
    return main(argv)


def _summary(tmp_path, sub="out"):
    return json.loads((tmp_path / sub / "summary.json").read_text())


def test_list_shows_every_experiment(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    for name in CATALOG:
        assert f"{name}:" in out
    assert set(FAST) == set(CATALOG)


@pytest.mark.parametrize("name", sorted(FAST))
def test_every_experiment_runs_and_reruns_identically(tmp_path, name):
    assert _run(tmp_path, name, FAST[name], seed=7, sub="a") == 0
    assert _run(tmp_path, name, FAST[name], seed=7, sub="b") == 0
    assert _digest(tmp_path / "a") == _digest(tmp_path / "b")
    summary = _summary(tmp_path, "a")
    assert list(summary) == ["experiment", "tool_version", "seed", "parameters", "metrics", "files"]
    assert summary["seed"] == 7
    for f in summary["files"]:
        assert (tmp_path / "a" / f).read_text().count("\n") >= 2


@pytest.mark.parametrize("argv", [
    ["run", "--experiment", "nope"],
    ["run", "--experiment", "line-walk", "--param", "bogus=1"],
    ["run", "--experiment", "line-walk", "--param", "T=abc"],
    ["run", "--experiment", "line-walk", "--param", "start=sideways"],
    ["run", "--experiment", "line-walk", "--param", "noequals"],
    ["run", "--experiment", "circle-mix", "--param", "N=2"],
    ["run"],
    ["frobnicate"],
])
def test_invalid_input_exits_with_one(tmp_path, argv):
    if argv[0] == "run":
        argv = argv + ["--out", str(tmp_path)]
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 1


def test_resource_cap_exits_with_two(tmp_path, capsys):
    assert _run(tmp_path, "decohere", {"T": "300"}) == 2
    assert "cap" in capsys.readouterr().err
    assert _run(tmp_path, "multicoin", {"M": "20", "T": "100"}) == 2


def test_line_walk_is_bimodal(tmp_path):
    assert _run(tmp_path, "line-walk", {"T": "100", "start": "symmetric"}) == 0
    m = _summary(tmp_path)["metrics"]
    assert m["left_peak"] < -50 and m["right_peak"] > 50
    assert m["variance_exponent"] == pytest.approx(2, abs=0.1)


def test_absorb_defaults(tmp_path):
    assert _run(tmp_path, "absorb", {"T": "2000"}) == 0
    m = _summary(tmp_path)["metrics"]
    assert m["quantum_cumulative"] == pytest.approx(0.6366, abs=0.01)
    assert m["quantum_monotone"]
    assert m["classical_cumulative"] > 0.95


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"# example\nexperiment = line-walk\nT = 12\nseed = 3\nout = {tmp_path / 'cfg'}\n")
    assert read_config(cfg)["T"] == "12"
    assert main(["run", "--config", str(cfg), "--param", "T=14"]) == 0
    summary = _summary(tmp_path, "cfg")
    assert summary["parameters"]["T"] == 14 and summary["seed"] == 3
    bad = tmp_path / "bad.cfg"
    bad.write_text("just words\n")
    assert main(["run", "--config", str(bad)]) == 1


def test_worked_2sat_instance(tmp_path):
    assert _run(tmp_path, "classical-2sat", {"trials": "10"}) == 0
    assert _summary(tmp_path)["metrics"]["first_assignment"] == "110"


def test_parse_params_fills_defaults_and_rejects_unknown():
    values = parse_params("line-walk", {"T": "5"})
    assert values["T"] == 5 and values["start"] == "down"
    with pytest.raises(InvalidParameters):
        parse_params("line-walk", {"W": "5"})
    with pytest.raises(InvalidParameters):
        execute(ExperimentSpec("line-walk", {}, seed=-1))


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "qwalk", "list"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "glued-trees" in proc.stdout
