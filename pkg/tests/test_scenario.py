import json
from pathlib import Path

import pytest
import yaml

from neurodyn.core import ValidationError
from neurodyn.scenario import (
    EXIT_DIVERGENCE,
    OUTPUT_ROOT_ENV,
    ConfigParseError,
    config_digest,
    load_config,
    parse_config,
    run_scenario,
)

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"

MINIMAL = {
    "name": "mini",
    "model": {"preset": "fhn_default"},
    "integrator": {"method": "rk4", "dt": 0.02, "t_end": 50},
    "output_dir": "out",
}


@pytest.fixture(autouse=True)
def _no_env_root(monkeypatch):
    monkeypatch.delenv(OUTPUT_ROOT_ENV, raising=False)


def write(tmp_path, cfg, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(cfg) if not isinstance(cfg, str) else cfg)
    return p


def test_minimal_run_writes_csv_report_manifest(tmp_path):
    m = run_scenario(write(tmp_path, MINIMAL))
    assert m.status == "ok" and m.exit_code == 0
    assert sorted(f["path"] for f in m.files) == ["mini.csv", "report.json"]
    out = tmp_path / "out"
    assert sorted(p.name for p in out.iterdir()) == ["manifest.json", "mini.csv", "report.json"]
    report = json.loads((out / "report.json").read_text())
    assert report["config_digest"] == m.config_digest
    assert report["config"]["name"] == "mini"
    assert report["stimulus"]["amplitude"] == 0.5  # preset drive is the default


def test_rerun_is_byte_identical(tmp_path):
    cfg = write(tmp_path, MINIMAL)
    run_scenario(cfg)
    first = (tmp_path / "out" / "mini.csv").read_bytes()
    run_scenario(cfg)
    assert (tmp_path / "out" / "mini.csv").read_bytes() == first
    assert not list((tmp_path / "out").glob("*.tmp*"))


def test_digest_ignores_key_order():
    a = {"name": "x", "model": {"preset": "hr_bursting", "s0": [1, 2, 3]}}
    b = {"model": {"s0": [1, 2, 3], "preset": "hr_bursting"}, "name": "x"}
    assert config_digest(a) == config_digest(b)
    assert config_digest(a) != config_digest({**a, "name": "y"})


def test_env_root_overrides_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_ROOT_ENV, str(tmp_path / "root"))
    sc = load_config(write(tmp_path, MINIMAL))
    assert sc.output_dir == tmp_path / "root" / "out"


@pytest.mark.parametrize(
    "patch, needle",
    [
        ({"model": {"preset": "izh_rs_typo"}}, "izh_rs_typo"),
        ({"bogus": 1}, "bogus"),
        ({"integrator": {"dt": -1}}, "dt"),
        ({"model": {"family": "fhn"}}, "s0"),
        ({"analysis": {"sync": [{"a": "v", "b": "nope"}]}}, "nope"),
        ({"analysis": {"acceleration": {"gains": [0.1]}}}, "partner"),
        ({"name": ""}, "name"),
    ],
)
def test_validation_errors(tmp_path, patch, needle):
    with pytest.raises(ValidationError) as exc:
        load_config(write(tmp_path, {**MINIMAL, **patch}))
    assert needle in str(exc.value)


def test_parse_errors(tmp_path):
    with pytest.raises(ConfigParseError):
        load_config(write(tmp_path, "name: [unclosed\n"))
    with pytest.raises(ConfigParseError):
        load_config(tmp_path / "missing.yaml")
    with pytest.raises(ConfigParseError):
        parse_config([1, 2])


def test_divergence_writes_partial_outputs(tmp_path):
    cfg = {
        **MINIMAL,
        "name": "blowup",
        "model": {"family": "fhn", "s0": [50.0, 0.0]},
        "integrator": {"method": "euler", "dt": 0.5, "t_end": 100},
    }
    m = run_scenario(write(tmp_path, cfg))
    assert m.status == "diverged" and m.exit_code == EXIT_DIVERGENCE
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["status"] == "diverged" and manifest["error"]
    assert (tmp_path / "out" / "blowup.csv").exists()


def test_hr_network_matrix_file(tmp_path):
    (tmp_path / "ring.txt").write_text("0 1\n1 0\n")
    cfg = {
        **MINIMAL,
        "name": "net",
        "model": {"preset": "hr_bursting"},
        "coupling": {"family": "hr_network", "matrix_file": "ring.txt", "params": {"g_s": -0.5}},
        "integrator": {"method": "rk4", "dt": 0.05, "t_end": 10},
    }
    sc = load_config(write(tmp_path, cfg))
    assert sc.model.dimension == 6


def test_acceleration_report_has_per_gain_verdicts(tmp_path):
    cfg = yaml.safe_load((SCENARIOS / "acceleration.yaml").read_text())
    cfg["integrator"]["t_end"] = 400
    cfg["analysis"]["acceleration"]["gains"] = [0.01, 0.1]
    cfg["output_dir"] = "out"
    m = run_scenario(write(tmp_path, cfg))
    assert m.status == "ok"
    acc = json.loads((tmp_path / "out" / "report.json").read_text())["analysis"]["acceleration"]
    assert [r["gain"] for r in acc["rows"]] == [0.01, 0.1]
    assert all(r["verdict"] in ("accelerated", "not accelerated", "not periodic") for r in acc["rows"])


@pytest.mark.parametrize("path", sorted(SCENARIOS.glob("*.yaml")), ids=lambda p: p.stem)
def test_shipped_scenarios_validate(path):
    assert load_config(path).name == path.stem
