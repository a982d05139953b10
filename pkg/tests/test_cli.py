import json
import subprocess
import sys

import pytest

from synthbench.cli import main
from synthbench.corpus import read_matrix, write_matrix

from conftest import correlated_fixture


@pytest.fixture
def files(tmp_path):
    real = correlated_fixture(n=400, k=30, seed=8)
    write_matrix(real, tmp_path / "real.mat")
    (tmp_path / "run.toml").write_text(
        'seed = 3\noutput_dir = "out"\n[real]\nmatrix = "real.mat"\n'
        '[synthetic]\nname = "Resample"\nbaseline = "resample"\nn_samples = 400\n'
        "[privacy]\nn_balanced = 4\nn_imbalanced = 4\n"
    )
    return tmp_path


def test_generate_and_evaluate_direct_flags(files, capsys):
    syn = files / "syn.mat"
    assert main(["generate", "--in", str(files / "real.mat"), "--method", "pbr", "--m", "250",
                 "--seed", "1", "--out", str(syn)]) == 0
    assert read_matrix(syn).n_rows == 250
    out = files / "r.json"
    assert main(["evaluate", "--real", str(files / "real.mat"), "--syn", str(syn),
                 "--n-balanced", "4", "--n-imbalanced", "4", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["meta"]["method"] == "syn"
    assert main(["validate", str(out)]) == 0
    assert "valid" in capsys.readouterr().out


def test_evaluate_config_is_deterministic(files):
    a, b = files / "a.json", files / "b.json"
    assert main(["evaluate", "--config", str(files / "run.toml"), "--out", str(a)]) == 0
    assert main(["evaluate", "--config", str(files / "run.toml"), "--workers", "3", "--out", str(b)]) == 0
    strip = lambda p: {k: v for k, v in json.loads(p.read_text()).items() if k != "timing"}
    assert strip(a) == strip(b)


def test_single_block_commands(files):
    cfg = str(files / "run.toml")
    assert main(["fidelity", "--config", cfg, "--folds", "3", "--out", str(files / "f.json")]) == 0
    f = json.loads((files / "f.json").read_text())
    assert "fidelity" in f and "privacy" not in f and "utility" not in f
    assert main(["privacy", "--config", cfg, "--format", "csv", "--out", str(files / "p.csv")]) == 0
    assert main(["validate", str(files / "p.csv")]) == 0
    assert main(["utility", "--config", cfg, "--sweep", "3", "--out", str(files / "u.json")]) == 0
    u = json.loads((files / "u.json").read_text())
    assert len(u["utility"]["sweep"]["rows"]) == 3


def test_ingest_and_scale(files):
    assert main(["ingest", "--config", str(files / "run.toml"), "--out", str(files / "copy.mat")]) == 0
    assert read_matrix(files / "copy.mat") == read_matrix(files / "real.mat")
    curve = files / "curve.csv"
    assert main(["scale", "--real", str(files / "real.mat"), "--grid", "100,400", "--replicates", "2",
                 "--n-balanced", "4", "--n-imbalanced", "4", "--out", str(curve)]) == 0
    assert len(curve.read_text().splitlines()) == 3


def test_rank_command(files, capsys):
    for name, mmd in (("A", 0.01), ("B", 0.03)):
        (files / f"{name}.json").write_text(json.dumps({"meta": {"method": name}, "fidelity": {"mmd": mmd}}))
    code = main(["rank", str(files / "B.json"), str(files / "A.json"), "--weight", "fidelity.mmd=1",
                 "--output", str(files / "rank.json")])
    assert code == 0
    first = capsys.readouterr().out.splitlines()[0].split("\t")
    assert first[:2] == ["1", "A"]
    assert json.loads((files / "rank.json").read_text())["ranking"][0]["method"] == "A"
    assert main(["rank", str(files / "A.json"), "--weight", "fidelity.mmd"]) == 2


def test_exit_codes(files):
    assert main(["evaluate"]) == 2
    assert main(["evaluate", "--config", str(files / "missing.toml")]) == 2
    (files / "bad.toml").write_text('[real]\nmatrix = "real.mat"\n[synthetic]\nbaseline = "gan"\n')
    assert main(["evaluate", "--config", str(files / "bad.toml")]) == 2
    out = ["--output-dir", str(files / "o")]
    assert main(["evaluate", "--real", str(files / "nope.mat"), *out]) == 3
    assert main(["scale", "--real", str(files / "real.mat"), "--axis", "n", "--grid", "5000",
                 "--replicates", "1", *out]) == 3
    (files / "broken.json").write_text('{"fidelity": {"mmd": "x"}}')
    assert main(["validate", str(files / "broken.json")]) == 3


def test_console_script_entry_point(files):
    proc = subprocess.run([sys.executable, "-m", "synthbench.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("synth-bench ")
