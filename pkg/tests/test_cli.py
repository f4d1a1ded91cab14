"""CLI contract: catalog, config handling, exit codes, outputs, determinism."""

import hashlib
import json
import os

import pytest
from click.testing import CliRunner

from qwalk import cli


@pytest.fixture
def runner():
    return CliRunner()


def test_list_catalog(runner):
    result = runner.invoke(cli.main, ["list"])
    assert result.exit_code == 0
    lines = [l for l in result.output.strip().split("\n") if l]
    assert len(lines) >= 15
    names = [l.split()[0] for l in lines]
    assert names == list(cli.SCENARIOS)  # stable documented order
    for name in names:
        assert cli.SCENARIOS[name]["description"]


def test_every_scenario_has_runnable_defaults():
    for name, sc in cli.SCENARIOS.items():
        assert callable(sc["run"])
        assert isinstance(sc["defaults"], dict)
        # random scenarios expose their seed explicitly
        if any(k in sc["defaults"] for k in ("realizations",)):
            assert "seed" in sc["defaults"], name


def test_check_pass_and_outputs(runner, tmp_path):
    out = tmp_path / "out"
    result = runner.invoke(cli.main, ["check", "ring-lta", "--output", str(out)])
    assert result.exit_code == 0, result.output
    assert all(line.startswith("ok") for line in result.output.strip().split("\n"))
    files = os.listdir(out)
    assert "manifest.json" in files
    assert any(f.endswith(".csv") for f in files)
    assert any(f.endswith(".png") for f in files)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["scenario"] == "ring-lta"
    assert set(manifest["outputs"]) == set(files) - {"manifest.json"}
    assert manifest["versions"]["qwalk"]
    canonical = json.dumps({"scenario": "ring-lta",
                            "params": manifest["params"]}, sort_keys=True)
    assert manifest["config_hash"] == hashlib.sha256(canonical.encode()).hexdigest()
    assert all(c["passed"] for c in manifest["checks"])


def test_check_unknown_scenario_exits_2(runner):
    result = runner.invoke(cli.main, ["check", "not-a-scenario"])
    assert result.exit_code == 2


def test_run_json_config(runner, tmp_path):
    cfg = tmp_path / "c.json"
    out = tmp_path / "o"
    cfg.write_text(json.dumps({"scenario": "revivals",
                               "params": {"sizes": [3, 5], "t_max": 10.0},
                               "output_dir": str(out)}))
    result = runner.invoke(cli.main, ["run", str(cfg)])
    assert result.exit_code == 0, result.output
    assert (out / "manifest.json").exists()


def test_run_toml_config(runner, tmp_path):
    cfg = tmp_path / "c.toml"
    out = tmp_path / "o"
    cfg.write_text('scenario = "revivals"\n'
                   f'output_dir = "{out}"\n'
                   "[params]\nsizes = [3, 4]\nt_max = 10.0\n")
    result = runner.invoke(cli.main, ["run", str(cfg)])
    assert result.exit_code == 0, result.output
    assert (out / "manifest.json").exists()


@pytest.mark.parametrize("payload", [
    '{"params": {}}',                                  # missing scenario
    '{"scenario": "revivals", "bogus": 1}',            # extra key
    '{"scenario": "nope"}',                            # unknown scenario
    '{"scenario": "revivals", "params": {"zzz": 1}}',  # unknown parameter
    "{not json",                                       # parse failure
])
def test_bad_configs_exit_2(runner, tmp_path, payload):
    cfg = tmp_path / "bad.json"
    cfg.write_text(payload)
    result = runner.invoke(cli.main, ["run", str(cfg)])
    assert result.exit_code == 2, result.output


def test_missing_config_file_exits_2(runner):
    result = runner.invoke(cli.main, ["run", "/no/such/file.json"])
    assert result.exit_code == 2


def test_run_is_byte_deterministic(runner, tmp_path):
    def run_once(tag):
        out = tmp_path / tag
        cfg = tmp_path / f"{tag}.json"
        cfg.write_text(json.dumps({"scenario": "ring-lta",
                                   "params": {"sizes": [8, 9]},
                                   "output_dir": str(out)}))
        result = runner.invoke(cli.main, ["run", str(cfg)])
        assert result.exit_code == 0, result.output
        return {f: hashlib.sha256((out / f).read_bytes()).hexdigest()
                for f in os.listdir(out)}

    assert run_once("a") == run_once("b")


def test_parallel_run_respects_thread_env(runner, tmp_path, monkeypatch):
    monkeypatch.setenv("QWALK_THREADS", "2")
    cfgs = []
    for i, sizes in enumerate(([6], [7])):
        out = tmp_path / f"o{i}"
        cfg = tmp_path / f"c{i}.json"
        cfg.write_text(json.dumps({"scenario": "ring-lta",
                                   "params": {"sizes": sizes},
                                   "output_dir": str(out)}))
        cfgs.append(str(cfg))
    result = runner.invoke(cli.main, ["run"] + cfgs)
    assert result.exit_code == 0, result.output
    assert (tmp_path / "o0" / "manifest.json").exists()
    assert (tmp_path / "o1" / "manifest.json").exists()


def test_thread_cap_parsing(monkeypatch):
    monkeypatch.setenv("QWALK_THREADS", "3")
    assert cli._thread_cap() == 3
    monkeypatch.setenv("QWALK_THREADS", "oops")
    assert cli._thread_cap() >= 1
    monkeypatch.delenv("QWALK_THREADS")
    assert cli._thread_cap() >= 1


def test_tolerance_failure_exits_1(runner, tmp_path, monkeypatch):
    # an impossible expected cluster count must fail the self-check, not error
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({
        "scenario": "dendrimer-clusters",
        "params": {"cases": [[3, 2, 1, 999]]},
        "output_dir": str(tmp_path / "o")}))
    result = runner.invoke(cli.main, ["run", str(cfg)])
    assert result.exit_code == 1
    assert "FAIL" in result.output
