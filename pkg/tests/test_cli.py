import csv
import json

import pytest

from stochcut.cli import DEFAULT_CONFIG, apply_override, load_config, main
from stochcut.errors import ConfigError
from stochcut.instance import instance_to_dict, default_paper_instance

TINY = {
    "train": {"L1": 2, "L2": 20, "seed": 5},
    "cem": {"n_iterations": 3, "n_candidates": 20},
    "eval": {"replications": 2, "horizon": 5, "bootstrap_resamples": 50},
}


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(TINY))
    return str(path)


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_missing_config(tmp_path, capsys):
    code = main(["train", "--config", str(tmp_path / "nope.json"), "--out-root", str(tmp_path)])
    assert code == 3
    assert "config not found" in capsys.readouterr().err


def test_unknown_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["train", "--bogus"])
    assert exc.value.code == 2


def test_help_lists_flags(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["train", "--help"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    for flag in ("--config", "--override", "--out-root", "--name", "--threads", "--seed"):
        assert flag in out


def test_train_twice_byte_identical(tiny_config, tmp_path, capsys):
    root = str(tmp_path / "runs")
    for name in ("a", "b"):
        assert main(["train", "--config", tiny_config, "--seed", "42", "--out-root", root,
                     "--name", name, "--threads", "2" if name == "b" else "1"]) == 0
    a = (tmp_path / "runs" / "a" / "artifact.json").read_bytes()
    b = (tmp_path / "runs" / "b" / "artifact.json").read_bytes()
    assert a == b
    doc = json.loads(a)
    assert len(doc["thetas"]) == 2 and doc["config"]["seed"] == 42
    assert (tmp_path / "runs" / "a" / "logs" / "run.log").stat().st_size > 0


def test_override_sets_L1(tiny_config, tmp_path, capsys):
    assert main(["train", "--config", tiny_config, "--override", "L1=3", "--override",
                 "train.L2=10", "--out-root", str(tmp_path), "--name", "o"]) == 0
    doc = json.loads((tmp_path / "o" / "artifact.json").read_text())
    assert len(doc["thetas"]) == 3 and doc["config"]["L2"] == 10


def test_env_output_root(tiny_config, tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("STOCHCUT_RUN_ROOT", str(tmp_path / "envroot"))
    assert main(["train", "--config", tiny_config, "--name", "e"]) == 0
    assert (tmp_path / "envroot" / "e" / "artifact.json").exists()


def test_evaluate_and_inspect(tiny_config, tmp_path, capsys):
    root = str(tmp_path)
    assert main(["train", "--config", tiny_config, "--out-root", root, "--name", "t"]) == 0
    art = str(tmp_path / "t" / "artifact.json")
    capsys.readouterr()
    assert main(["evaluate", art, "--config", tiny_config, "--out-root", root,
                 "--name", "ev"]) == 0
    out = capsys.readouterr().out
    assert "mean cost" in out and out.count("theta_") == 1
    summary = _rows(tmp_path / "ev" / "csv" / "summary.csv")
    assert summary[0] == ["policy", "mean", "ci_lo", "ci_hi"] and len(summary) == 2
    assert _rows(tmp_path / "ev" / "csv" / "costs.csv")[0] == \
        ["replication", "step", "cost", "rolling_mean"]
    assert _rows(tmp_path / "ev" / "csv" / "inventory.csv")[0] == \
        ["step", "item", "initial", "available", "demand"]
    assert main(["evaluate", art, "--config", tiny_config, "--out-root", root, "--name", "all",
                 "--select", "all"]) == 0
    assert len(_rows(tmp_path / "all" / "csv" / "summary.csv")) == 3
    assert main(["evaluate", art, "--config", tiny_config, "--out-root", root, "--name", "two",
                 "--select", "2"]) == 0
    assert _rows(tmp_path / "two" / "csv" / "summary.csv")[1][0] == "theta_2"
    assert main(["evaluate", art, "--config", tiny_config, "--out-root", root,
                 "--select", "9"]) == 2
    capsys.readouterr()
    assert main(["inspect", art]) == 0
    assert "K=99" in capsys.readouterr().out


def test_evaluate_baselines(tiny_config, tmp_path, capsys):
    for target in ("myopic", "random"):
        assert main(["evaluate", target, "--config", tiny_config, "--out-root", str(tmp_path),
                     "--name", target, "--replications", "2"]) == 0
        rows = _rows(tmp_path / target / "csv" / "summary.csv")
        assert rows[1][0] == target


def test_unreadable_artifact(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("garbage")
    assert main(["evaluate", str(bad), "--out-root", str(tmp_path)]) == 4
    assert main(["inspect", str(bad)]) == 4


def test_sweep(tiny_config, tmp_path, capsys):
    cfg = json.loads(open(tiny_config).read())
    cfg["train"]["L1"] = 1
    path = tmp_path / "sweep.json"
    path.write_text(json.dumps(cfg))
    assert main(["sweep", "--config", str(path), "--gammas", "0.8,0.5", "--out-root",
                 str(tmp_path), "--name", "sw"]) == 0
    rows = _rows(tmp_path / "sw" / "csv" / "gamma_sweep.csv")
    assert rows[0] == ["gamma", "mean", "ci_lo", "ci_hi"]
    assert [r[0] for r in rows[1:]] == ["0.5", "0.8"]
    assert main(["sweep", "--config", str(path), "--gammas", "", "--out-root",
                 str(tmp_path)]) == 2
    assert main(["sweep", "--config", str(path), "--gammas", "0.5,2", "--out-root",
                 str(tmp_path)]) == 2


def test_default_sweep_set():
    gammas = DEFAULT_CONFIG["sweep"]["gammas"]
    assert len(gammas) == 6 and {0.5, 0.6, 0.8} <= set(gammas)


def test_validate(tmp_path, capsys):
    assert main(["validate", "builtin:paper"]) == 0
    assert "n=15" in capsys.readouterr().out
    doc = instance_to_dict(default_paper_instance())
    doc["trim"][1] = 6
    bad = tmp_path / "inst.json"
    bad.write_text(json.dumps(doc))
    assert main(["validate", str(bad)]) == 3
    assert "declared trim 6" in capsys.readouterr().err


def test_config_errors(tmp_path):
    cfg = load_config(None)
    with pytest.raises(ConfigError):
        apply_override(cfg, "train.nope=1")
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"train": {"wat": 1}}))
    with pytest.raises(ConfigError):
        load_config(str(bad))
    assert main(["train", "--config", str(bad), "--out-root", str(tmp_path)]) == 3
    assert main(["train", "--override", "L1", "--out-root", str(tmp_path)]) == 2
    assert main(["train", "--override", "train.gamma=1.5", "--out-root", str(tmp_path)]) == 3


def test_shipped_full_scale_config_matches_defaults():
    from pathlib import Path
    path = Path(__file__).resolve().parents[1] / "configs" / "paper.json"
    cfg = load_config(str(path))
    assert cfg["train"]["L1"] == 30 and cfg["train"]["L2"] == 50000
    assert cfg["train"]["gamma"] == 0.8
    assert cfg["cem"]["n_iterations"] == 10 and cfg["cem"]["n_candidates"] == 100
