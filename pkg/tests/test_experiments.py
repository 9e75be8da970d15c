import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from heati.experiments import cli
from heati.experiments.config import builtin_data_dir, load_config, parse_config
from heati.experiments.results import COLUMNS, SCHEMA_VERSION, ResultRecord, emit_results, read_results
from heati.experiments.runner import InputFileError, aggregate, run_experiment, wallclock_for
from heati.quantum import ConfigurationError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

TINY_CLUSTER = """
[run]
task = "cluster"
name = "tiny"
master_seed = 3

[system]
n_qubits = 3

[ansatz]
depths = [1, 2]

[optimizer]
max_steps = 5
restarts = 2
"""

TINY_CHEM = """
[run]
task = "chemistry"

[system]
inputs = ["builtin:H2_0.7414.FCIDUMP"]

[ansatz]
depth = 1

[optimizer]
max_steps = 3
restarts = 2
aggregation = "mean"

[noise]
sampling = true
M0 = 50
drift = true
"""


def _write(tmp_path, text, name="cfg.toml"):
    path = tmp_path / name
    path.write_text(text)
    return path


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.toml")), ids=lambda p: p.stem)
def test_committed_configs_validate(path):
    cfg = load_config(path)
    assert cfg.name == path.stem
    assert cli.main(["validate", str(path)]) == 0


def test_config_fields():
    cfg = load_config(CONFIGS / "h2_noisy.toml")
    assert len(cfg.inputs) == 10 and cfg.noisy and cfg.aggregation == "mean"
    assert cfg.sampling.M0 == 1000 and cfg.drift.epsilon == 0.01
    assert load_config(CONFIGS / "f2_noiseless_d9.toml").extended
    assert cfg.with_overrides(seed=9, restarts=3).adam.restarts == 3


@pytest.mark.parametrize("patch, message", [
    ({"extra": {"x": 1}}, "unknown table"),
    ({"run": {"task": "cluster", "colour": "red"}}, "unknown key"),
    ({"run": {"task": "magnetism"}}, "run.task"),
    ({"system": {"n_qubits": 2}}, "n_qubits >= 3"),
    ({"ansatz": {"depths": [1], "variant": "symmetric"}}, "general variant"),
    ({"ansatz": {"depths": [0]}}, "at least 1"),
    ({"ansatz": {}}, "depth"),
    ({"optimizer": {"max_steps": "many"}}, "expected int"),
    ({"optimizer": {"aggregation": "median"}}, "aggregation"),
    ({"noise": {"sampling": True, "M0": 0}}, "M0"),
    ({"hamiltonian": {"alpha": -1.0}}, "positive"),
])
def test_invalid_cluster_configs(patch, message):
    doc = {"run": {"task": "cluster"}, "system": {"n_qubits": 4}, "ansatz": {"depths": [1]}}
    doc.update(patch)
    with pytest.raises(ConfigurationError, match=message):
        parse_config(doc)


def test_invalid_chemistry_configs(tmp_path):
    base = {"run": {"task": "chemistry"}, "ansatz": {"depth": 1}}
    with pytest.raises(ConfigurationError, match="system.inputs"):
        parse_config(dict(base))
    with pytest.raises(ConfigurationError, match="matched no files"):
        parse_config({**base, "system": {"inputs": ["nothing_*.FCIDUMP"]}}, base=tmp_path)
    with pytest.raises(ConfigurationError, match="not found"):
        parse_config({**base, "system": {"inputs": ["missing.FCIDUMP"]}}, base=tmp_path)
    with pytest.raises(ConfigurationError, match="width"):
        parse_config({**base, "system": {"inputs": ["builtin:H2_0.7414.FCIDUMP"], "n_qubits": 4}})
    with pytest.raises(ConfigurationError, match="general variant only"):
        parse_config({**base, "system": {"inputs": ["builtin:H2_0.7414.FCIDUMP"]}, "hamiltonian": {"B": 1.0}})


def test_validate_and_run_share_loader(tmp_path, capsys):
    bad = _write(tmp_path, TINY_CLUSTER.replace("n_qubits = 3", "n_qubits = 2"))
    assert cli.main(["validate", str(bad)]) == 1
    assert cli.main(["run", str(bad), "--output", str(tmp_path / "out")]) == 1
    assert not (tmp_path / "out.csv").exists()
    assert "n_qubits >= 3" in capsys.readouterr().err


def test_cli_usage_errors(capsys):
    assert cli.main(["frobnicate"]) == 2
    assert cli.main([]) == 2
    assert cli.main(["validate", "/no/such/file.toml"]) == 1


def test_run_writes_records_and_is_deterministic(tmp_path):
    cfg_path = _write(tmp_path, TINY_CLUSTER)
    assert cli.main(["run", str(cfg_path), "--output", str(tmp_path / "a")]) == 0
    assert cli.main(["run", str(cfg_path), "--output", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a.csv").read_text() == (tmp_path / "b.csv").read_text()
    a = read_results(tmp_path / "a.csv")
    assert len(a) == 4 and {r.depth for r in a} == {1, 2}
    assert all(0.0 <= r.fidelity <= 1.0 and r.shots == 0 and r.steps <= 5 for r in a)
    manifest = json.loads((tmp_path / "a.manifest.json").read_text())
    assert manifest["schema_version"] == SCHEMA_VERSION
    assert manifest["columns"] == list(COLUMNS)
    assert manifest["config"]["master_seed"] == 3
    assert len(manifest["seeds"]) == 2
    assert cli.main(["run", str(cfg_path), "--seed", "4", "--output", str(tmp_path / "c")]) == 0
    assert [r.energy for r in read_results(tmp_path / "c.csv")] != [r.energy for r in a]


def test_noisy_chemistry_run(tmp_path):
    cfg = load_config(_write(tmp_path, TINY_CHEM))
    records = run_experiment(cfg)
    assert len(records) == 2
    for r in records:
        assert r.bond_length == 0.7414 and math.isnan(r.fidelity)
        assert r.reference == pytest.approx(-1.137270174661, abs=1e-9)
        assert r.energy >= r.reference - 1e-12
        assert r.shots > 0 and r.wallclock_s == pytest.approx(wallclock_for(cfg, 4, 3))
    means = aggregate(records, "mean")
    assert list(means) == [("H2_0.7414", 1)]


def test_results_round_trip(tmp_path):
    rec = ResultRecord.make(task="cluster", point="N3", bond_length=math.nan, n_qubits=3, depth=2, restart=0,
                            seed=123, energy=-2.9876543210987654, reference=-3.0, fidelity=0.99, t_tot=0.1 + 0.2,
                            steps=7, shots=0, wallclock_s=1.5, best=True, stop_reason="target")
    csv_path, man = emit_results([rec], tmp_path / "sub" / "out", {"note": "x"})
    back = read_results(csv_path)
    assert back[0].energy == rec.energy and back[0].t_tot == rec.t_tot
    assert math.isnan(back[0].bond_length)
    assert json.loads(man.read_text())["note"] == "x"
    empty, _ = emit_results([], tmp_path / "empty")
    assert empty.read_text().strip() == ",".join(COLUMNS)
    assert read_results(empty) == []


def test_results_reject_tampering(tmp_path):
    rec = ResultRecord.make(task="chemistry", point="p", bond_length=1.0, n_qubits=4, depth=1, restart=0, seed=1,
                            energy=-1.0, reference=-1.1, fidelity=math.nan, t_tot=0.4, steps=1, shots=10,
                            wallclock_s=0.1, best=False, stop_reason="max_steps")
    csv_path, _ = emit_results([rec], tmp_path / "r")
    text = csv_path.read_text().replace(repr(rec.delta_e), "0.5")
    csv_path.write_text(text)
    with pytest.raises(ValueError, match="delta_e"):
        read_results(csv_path)
    csv_path.write_text("a,b\n")
    with pytest.raises(ValueError, match="header"):
        read_results(csv_path)


def test_bad_input_file_is_named(tmp_path):
    bad = tmp_path / "broken.FCIDUMP"
    bad.write_text("&FCI NORB=2,NELEC=2,\n&END\n 1.0 1 1\n")
    cfg = parse_config({"run": {"task": "chemistry"}, "system": {"inputs": [str(bad)]}, "ansatz": {"depth": 1}})
    with pytest.raises(InputFileError, match="broken.FCIDUMP"):
        run_experiment(cfg)


def test_exact_subcommand(capsys):
    assert cli.main(["exact", str(builtin_data_dir() / "H2_0.7414.FCIDUMP")]) == 0
    out = capsys.readouterr().out
    assert "qubits           4" in out
    assert "-1.1372701747" in out and "-1.1166843871" in out


def test_estimate_time_subcommand(capsys):
    assert cli.main(["estimate-time", str(CONFIGS / "f2_noisy.toml")]) == 0
    line = capsys.readouterr().out.strip()
    hours = float(line.split("=")[-1].split()[0])
    assert "n_p=36" in line and hours == pytest.approx(10.0, rel=0.1)


def test_gradcheck_subcommand(tmp_path, capsys):
    assert cli.main(["gradcheck", str(_write(tmp_path, TINY_CLUSTER))]) == 0
    assert capsys.readouterr().out.strip().endswith("pass")


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "heati", "validate", str(CONFIGS / "cluster_n6.toml")],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("ok")
