import json

import numpy as np
import pytest

from pwsbl.cli import main
from pwsbl.harness import ConfigError, ExperimentConfig, demo_config, load_config, polyak_subgradient, run_experiment
from pwsbl.problems import abs_1d, demo_pws


def test_polyak_abs_one_step():
    tr = polyak_subgradient(abs_1d(), np.array([1.0]), 5)
    assert tr.xs[1][0] == 0.0


def test_polyak_stays_at_optimum():
    tr = polyak_subgradient(demo_pws(), np.zeros(2), 5)
    assert np.all(tr.xs[-1] == 0.0)


def test_polyak_zigzags_on_demo():
    tr = polyak_subgradient(demo_pws(), np.array([1e-4, 1e-2]), 60)
    signs = np.sign([x[0] for x in tr.xs[1:]])
    assert np.sum(signs[1:] != signs[:-1]) >= 10


def test_demo_experiment(tmp_path):
    report = run_experiment(demo_config(tmp_path))
    assert report.passed
    assert {p.name for p in tmp_path.iterdir()} >= {"demo_bl.jsonl", "demo_polyak_sgd.jsonl", "demo_summary.json", "demo_bl.csv"}
    header = json.loads((tmp_path / "demo_bl.jsonl").read_text().splitlines()[0])
    assert header["type"] == "header" and header["config_hash"] == report.config_hash
    bl, polyak = report.run("bl"), report.run("polyak_sgd")
    assert bl.calls_to_target is not None and bl.calls_to_target <= 100
    assert polyak.calls_to_target is None or polyak.calls_to_target > bl.calls_to_target


def test_runs_are_bitwise_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run_experiment(demo_config(a))
    run_experiment(demo_config(b))
    for name in ("demo_bl.jsonl", "demo_polyak_sgd.jsonl", "demo_summary.json", "demo_bl.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


CONFIG = """{
  "schema": "pwsbl-config/1",
  "problem": {"generator": "max_of_quadratics", "params": {"k": 3, "n": 2, "L": 5.0, "mu": 1.0, "seed": 1}},
  "algorithms": [
    {"name": "bl_mu", "mu": 1.0, "m": 4, "eps": 1e-6},
    {"name": "blmu", "m": 4}
  ],
  "x0": [1.0, 1.0]
}"""


def test_unknown_algorithm_names_field_and_line():
    with pytest.raises(ConfigError) as exc:
        load_config(CONFIG)
    assert exc.value.field == "algorithms[1].name"
    assert exc.value.line == 5
    assert "blmu" in str(exc.value)


@pytest.mark.parametrize(
    "patch, field",
    [
        ({"problem": {"generator": "nope"}}, "problem.generator"),
        ({"budget": 0}, "budget"),
        ({"schema": "other/2"}, "schema"),
    ],
)
def test_config_validation_fields(patch, field):
    d = json.loads(CONFIG)
    d["algorithms"] = d["algorithms"][:1]
    d.update(patch)
    with pytest.raises(ConfigError) as exc:
        ExperimentConfig.from_dict(d)
    assert exc.value.field == field


def test_cli_run_and_assert(tmp_path, capsys):
    cfg = json.loads(CONFIG)
    cfg["algorithms"] = cfg["algorithms"][:1]
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    assert main(["run", str(path), "--out-dir", str(tmp_path / "out"), "--assert"]) == 0
    assert (tmp_path / "out").is_dir()


def test_cli_rejects_bad_config(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(CONFIG)
    assert main(["run", str(path)]) == 2
    assert "algorithms[1].name" in capsys.readouterr().err


def test_cli_certify(capsys):
    assert main(["certify", "abs", "0", "--delta", "0.1", "--m", "1", "--mu", "1"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["result"] == "certificate"
    assert out["gap_bound"] == pytest.approx(0.2)
