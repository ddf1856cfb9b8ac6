"""Command-line surface tests.

main() is driven in-process for train/eval/aggregate (fast, no fork);
the serve command is exercised once over a real subprocess because its
contract is the printed address line and a live socket.
"""
from __future__ import annotations

import json
import socket
import subprocess
import sys
from pathlib import Path

import pytest

from coopmarl.cli import main
from coopmarl.harness import load_manifest, read_metrics
from coopmarl.server import recv_frame, send_frame

CT_FLAGS = ["--env", "capturetarget", "--key", "CaptureTarget-6x6-1t-2a-v0",
            "--time-limit", "15"]
QMIX_SETS = ["--set", "algo.batch_size=4", "--set", "algo.buffer_size=16",
             "--set", "algo.hidden_dim=8"]


def run_train(tmp_path: Path, *extra: str) -> int:
    args = ["train", "--algo", "qmix", *CT_FLAGS, "--seed", "1",
            "--steps", "120", "--eval-interval", "60", "--episodes", "2",
            "--out", str(tmp_path), *QMIX_SETS, *extra]
    return main(args)


class TestTrainCommand:
    def test_writes_metrics_and_manifest(self, tmp_path, capsys):
        assert run_train(tmp_path) == 0
        out = capsys.readouterr().out
        assert "best_mean_return" in out
        run_dir = tmp_path / "qmix_CaptureTarget-6x6-1t-2a-v0_s1"
        rows = read_metrics(run_dir / "metrics.csv")
        assert [r.step for r in rows] == [0, 60, 120]
        manifest = load_manifest(run_dir)
        assert manifest["total_steps"] == 120

    def test_flags_beat_set_overrides(self, tmp_path):
        # --steps 120 must win over --set run.total_steps=9999
        assert run_train(tmp_path, "--set", "run.total_steps=9999") == 0
        manifest = load_manifest(tmp_path / "qmix_CaptureTarget-6x6-1t-2a-v0_s1")
        assert manifest["total_steps"] == 120

    def test_config_file_layering(self, tmp_path, capsys):
        cfg = tmp_path / "base.ini"
        cfg.write_text("""
[run]
algo = qmix
total_steps = 60
eval_interval = 60
n_test_episodes = 2
[env]
family = capturetarget
key = CaptureTarget-6x6-1t-2a-v0
time_limit = 15
[algo]
batch_size = 4
buffer_size = 16
hidden_dim = 8
""", encoding="utf-8")
        assert main(["train", "--config", str(cfg), "--out", str(tmp_path)]) == 0
        rows = read_metrics(tmp_path / "qmix_CaptureTarget-6x6-1t-2a-v0_s1" / "metrics.csv")
        assert [r.step for r in rows] == [0, 60]

    def test_invalid_config_exits_nonzero(self, tmp_path, capsys):
        rc = main(["train", "--algo", "qmix", *CT_FLAGS, "--out", str(tmp_path)])
        assert rc == 2
        assert "total_steps" in capsys.readouterr().err


class TestEvalCommand:
    def test_checkpoint_self_describes(self, tmp_path, capsys):
        assert run_train(tmp_path) == 0
        capsys.readouterr()
        ckpt = sorted(tmp_path.glob("*/checkpoints/*.ckpt"))[-1]
        assert main(["eval", "--checkpoint", str(ckpt), "--episodes", "3"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "step,mean_return,std,min,max,wall_seconds"
        fields = lines[1].split(",")
        assert fields[0] == "120"
        float(fields[1])  # parses

    def test_missing_manifest_is_clean_error(self, tmp_path, capsys):
        ckpt = tmp_path / "checkpoints" / "step_000000000000.ckpt"
        ckpt.parent.mkdir(parents=True)
        ckpt.write_bytes(b"")
        assert main(["eval", "--checkpoint", str(ckpt)]) == 2
        assert "error" in capsys.readouterr().err


class TestAggregateCommand:
    def test_scores_over_runs_dir(self, tmp_path, capsys):
        assert run_train(tmp_path) == 0
        args = ["train", "--algo", "maa2c", *CT_FLAGS, "--seed", "1",
                "--steps", "120", "--eval-interval", "60", "--episodes", "2",
                "--out", str(tmp_path), "--set", "algo.n_runners=2",
                "--set", "algo.batch_size=2", "--set", "algo.hidden_dim=8"]
        assert main(args) == 0
        capsys.readouterr()
        assert main(["aggregate", "--runs", str(tmp_path)]) == 0
        out = capsys.readouterr().out
        lines = out.strip().splitlines()
        best = [l for l in lines if l.startswith("best,")]
        norm = [l for l in lines if l.startswith("normalized,")]
        assert len(best) == 2 and len(norm) == 2
        for line in norm:
            float(line.rsplit(",", 1)[1])

    def test_empty_dir_exits_nonzero(self, tmp_path, capsys):
        assert main(["aggregate", "--runs", str(tmp_path)]) == 2


class TestServeCommand:
    def test_serves_and_prints_address(self):
        proc = subprocess.Popen(
            [sys.executable, "-m", "coopmarl.cli", "serve", "--port", "0"],
            stdout=subprocess.PIPE, text=True)
        try:
            line = proc.stdout.readline().strip()
            assert line.startswith("serving environments on ")
            host, port = line.rsplit(" ", 1)[1].rsplit(":", 1)
            with socket.create_connection((host, int(port)), timeout=5) as s:
                send_frame(s, {"kind": "hello", "v": 1, "env": "capturetarget"})
                reply = json.loads(recv_frame(s).decode())
            assert reply["kind"] == "ok" and reply["n_agents"] == 2
        finally:
            proc.terminate()
            proc.wait(timeout=5)

    def test_port_env_var_respected(self, monkeypatch):
        from coopmarl.server import resolve_port
        monkeypatch.setenv("COOPMARL_PORT", "6123")
        assert resolve_port(None) == 6123
        assert resolve_port(7000) == 7000
        monkeypatch.delenv("COOPMARL_PORT")
        assert resolve_port(None) == 7557
