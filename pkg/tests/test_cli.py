import json

import pytest
import yaml

from neurodyn.cli import main
from neurodyn.scenario import OUTPUT_ROOT_ENV
from neurodyn.verify import DEFAULT_FIXTURES, FAST_CHECKS


@pytest.fixture(autouse=True)
def _no_env_root(monkeypatch):
    monkeypatch.delenv(OUTPUT_ROOT_ENV, raising=False)


def cfg(tmp_path, **kw):
    raw = {
        "name": "run",
        "model": {"preset": "izh_rs"},
        "integrator": {"method": "rk4", "dt": 0.01, "t_end": 50},
        "output_dir": "out",
        **kw,
    }
    p = tmp_path / "c.yaml"
    p.write_text(yaml.safe_dump(raw))
    return p


def test_simulate_prints_paths(tmp_path, capsys):
    assert main(["simulate", str(cfg(tmp_path))]) == 0
    lines = capsys.readouterr().out.split()
    assert [l.rsplit("/", 1)[-1] for l in lines] == ["run.csv", "report.json", "manifest.json"]


def test_simulate_unknown_preset_exit_3(tmp_path, capsys):
    assert main(["simulate", str(cfg(tmp_path, model={"preset": "izh_rs_typo"}))]) == 3
    assert "izh_rs_typo" in capsys.readouterr().err


def test_simulate_parse_error_exit_2(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("model: {preset: izh_rs\n")
    assert main(["simulate", str(p)]) == 2
    assert main(["simulate", str(tmp_path / "nope.yaml")]) == 2


def test_simulate_divergence_exit_4(tmp_path):
    p = cfg(tmp_path, model={"family": "fhn", "s0": [50.0, 0.0]},
            integrator={"method": "euler", "dt": 0.5, "t_end": 100})
    assert main(["simulate", str(p)]) == 4
    assert json.loads((tmp_path / "out" / "manifest.json").read_text())["status"] == "diverged"


def test_presets(capsys):
    assert main(["presets"]) == 0
    assert "I_ext=0.025 mA" in capsys.readouterr().out


def test_verify_fast(capsys):
    assert main(["verify", "--fast"]) == 0
    out = capsys.readouterr().out
    assert f"{len(FAST_CHECKS)}/{len(FAST_CHECKS)} checks passed" in out


def test_verify_full_names_tampered_fixture(tmp_path, capsys):
    data = json.loads(DEFAULT_FIXTURES.read_text())
    data["fixtures"]["izh_step_reset_events"]["value"] += 1
    path = tmp_path / "fx.json"
    path.write_text(json.dumps(data))
    assert main(["verify", "--full", "--fixtures", str(path)]) == 1
    out = capsys.readouterr().out
    assert "FAIL izh_step_reset_events" in out
    assert "PASS izh_fi_counts" in out


def test_verify_missing_fixture_file(tmp_path):
    assert main(["verify", "--full", "--fixtures", str(tmp_path / "none.json")]) == 1


def test_verify_regen_writes_file(tmp_path, monkeypatch):
    from neurodyn import verify

    monkeypatch.setattr(verify, "FIXTURES", {"hr_peak_abs_v": verify.FIXTURES["hr_peak_abs_v"]})
    path = tmp_path / "fx.json"
    assert main(["verify", "--regen", "--fixtures", str(path)]) == 0
    fixtures = json.loads(path.read_text())["fixtures"]
    pinned = json.loads(DEFAULT_FIXTURES.read_text())["fixtures"]["hr_peak_abs_v"]
    assert fixtures["hr_peak_abs_v"] == pinned


def test_no_subcommand_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


def test_module_entry_point(tmp_path):
    import subprocess
    import sys

    r = subprocess.run([sys.executable, "-m", "neurodyn", "presets"], capture_output=True, text=True)
    assert r.returncode == 0 and "izh_rs" in r.stdout
