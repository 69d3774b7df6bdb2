import json
import socket
import threading
import time

import pytest
from click.testing import CliRunner

from vrjplab.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def _run(runner, args, **kwargs):
    return runner.invoke(main, args, catch_exceptions=False, **kwargs)


class TestValidation:
    def test_bad_rho_exits_2(self, runner, tmp_path):
        res = runner.invoke(main, ["gamma-law", "--rho", "0.5", "--out", str(tmp_path)])
        assert res.exit_code == 2

    def test_unknown_config_key_exits_2(self, runner, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"experiment": "gamma_law", "bogus": 1}))
        res = runner.invoke(main, ["gamma-law", "--config", str(cfg), "--out", str(tmp_path)])
        assert res.exit_code == 2

    def test_config_experiment_mismatch_exits_2(self, runner, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"experiment": "ward"}))
        res = runner.invoke(main, ["gamma-law", "--config", str(cfg), "--out", str(tmp_path)])
        assert res.exit_code == 2

    def test_bad_format_exits_2(self, runner, tmp_path):
        res = runner.invoke(
            main,
            ["gamma-law", "--n", "2", "--replicas", "10", "--formats", "pdf",
             "--out", str(tmp_path)],
        )
        assert res.exit_code == 2

    def test_capacity_exits_2(self, runner, tmp_path):
        res = runner.invoke(main, ["gamma-law", "--n", "30", "--out", str(tmp_path)])
        assert res.exit_code == 2

    def test_bad_criteria_list_exits_2(self, runner):
        res = runner.invoke(main, ["check", "--criteria", "one,two"])
        assert res.exit_code == 2


class TestExecution:
    def test_run_writes_artifacts(self, runner, tmp_path):
        out = tmp_path / "runs"
        res = _run(runner, ["gamma-law", "--n", "3", "--replicas", "60", "--seed", "9",
                            "--out", str(out)])
        assert res.exit_code == 0
        assert (out / "gamma_law.csv").exists()
        assert (out / "gamma_law.md").exists()
        assert (out / "gamma_law_runrecord.json").exists()
        assert "seed=9" in res.output

    def test_config_file_with_overrides(self, runner, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"experiment": "gamma_law", "n": 3, "replicas": 40}))
        out = tmp_path / "o"
        res = _run(runner, ["gamma-law", "--config", str(cfg), "--seed", "3",
                            "--out", str(out)])
        assert res.exit_code == 0
        record = json.loads((out / "gamma_law_runrecord.json").read_text())
        assert record["config"]["replicas"] == 40
        assert record["config"]["seed"] == 3

    def test_env_var_default_outdir(self, runner, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        monkeypatch.setenv("VRJPLAB_OUT", str(tmp_path / "envout"))
        res = _run(runner, ["gamma-law", "--n", "2", "--replicas", "10", "--seed", "2"])
        assert res.exit_code == 0
        assert (tmp_path / "envout" / "gamma_law.csv").exists()

    def test_worker_count_invariance(self, runner, tmp_path):
        csvs = []
        for tag, workers in (("w1", "1"), ("w2", "2")):
            out = tmp_path / tag
            res = _run(runner, ["coarse-check", "--n", "3", "--replicas", "80",
                                "--seed", "5", "--workers", workers, "--out", str(out)])
            assert res.exit_code == 0
            csvs.append((out / "coarse_check.csv").read_bytes())
        assert csvs[0] == csvs[1]

    def test_check_subset(self, runner):
        res = runner.invoke(main, ["check", "--criteria", "6"], catch_exceptions=False)
        assert res.exit_code == 0
        assert "PASS criterion  6" in res.output


def _free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


@pytest.fixture(scope="module")
def live_server():
    uvicorn = pytest.importorskip("uvicorn")
    from vrjplab.service import create_app

    port = _free_port()
    config = uvicorn.Config(create_app(), host="127.0.0.1", port=port, log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 10
    while not server.started:
        if time.time() > deadline:
            pytest.skip("service did not start")
        time.sleep(0.05)
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=5)


class TestThinClient:
    def test_remote_run_matches_local(self, runner, tmp_path, live_server):
        local, remote = tmp_path / "local", tmp_path / "remote"
        args = ["gamma-law", "--n", "3", "--replicas", "50", "--seed", "13"]
        assert _run(runner, args + ["--out", str(local)]).exit_code == 0
        res = _run(runner, args + ["--out", str(remote), "--server", live_server])
        assert res.exit_code == 0
        assert (local / "gamma_law.csv").read_bytes() == (remote / "gamma_law.csv").read_bytes()

    def test_remote_rejection_is_a_validation_error(self, runner, tmp_path, live_server):
        res = runner.invoke(
            main,
            ["gamma-law", "--n", "25", "--out", str(tmp_path), "--server", live_server],
        )
        assert res.exit_code == 2
