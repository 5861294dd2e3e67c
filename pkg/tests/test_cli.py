# -*- coding: utf-8 -*-
"""
测试：cli.commands / cli.shell 命令行入口
验证：参数解析、子命令的退出码与产物文件、manifest 重放、shell 会话参数到 RunConfig 的组装。

glue / scaling / solve 的数值部分在各自模块的测试中覆盖，这里只检查重放的逐字节一致与 solve 的前置检查。

运行方式：
  pytest tests/test_cli.py -v -s
"""

import json
from pathlib import Path

import pytest

from cli import commands
from cli.commands import (
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_VERIFY,
    RunConfig,
    build_parser,
    config_from_args,
    load_glue_inputs,
    main,
    parse_t_grid,
    replay,
    run,
)
from cli.shell import SETTINGS, ConifoldShell
from conifold_forge.errors import HypothesisViolated
from conifold_forge.glue_solver import InvertibilityReport
from conifold_forge.reports import inputs_hash, read_json

CFG = {"seed": 0, "output_dir": "runs", "neighbourhood": 0.1, "points_per_decade": 96, "ball_constant": 1.0}


@pytest.fixture(autouse=True)
def quiet(monkeypatch):
    monkeypatch.setenv("CONIFOLD_FORGE_QUIET", "1")


def last_json(capsys):
    return json.loads(capsys.readouterr().out.strip().splitlines()[-1])


def write_chart(tmp_path, data):
    path = tmp_path / "chart.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


# ────────────────────────────────────────────
# 参数解析
# ────────────────────────────────────────────

class TestParsing:
    def test_t_grid_forms(self):
        assert parse_t_grid("0.1") == (0.1,)
        assert parse_t_grid("0.02, 0.05,0.1") == (0.02, 0.05, 0.1)
        grid = parse_t_grid("geom:0.02:0.2:6")
        assert len(grid) == 6
        assert grid[0] == pytest.approx(0.02) and grid[-1] == pytest.approx(0.2)

    @pytest.mark.parametrize("text", ["", "0.1,-0.2", "geom:0.1:0.2", "abc"])
    def test_t_grid_invalid(self, text):
        with pytest.raises(ValueError):
            parse_t_grid(text)

    def test_weights_args(self):
        ns = build_parser().parse_args(["weights", "--m", "4", "--window", "-3", "3", "--seed", "5"])
        config = config_from_args(ns, CFG)
        assert config.command == "weights" and config.seed == 5
        assert config.options["window"] == [-3.0, 3.0] and config.options["m"] == 4
        assert config.output_dir == Path("runs") / "weights"

    def test_glue_args(self, tmp_path):
        ns = build_parser().parse_args(["glue", "--t", "0.05,0.1", "--output", str(tmp_path)])
        config = config_from_args(ns, CFG)
        assert config.t_grid == (0.05, 0.1) and config.output_dir == tmp_path
        assert config.scenario is None and config.params is None

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["verify", "--chart", str(tmp_path / "missing.json")])

    def test_bad_t_grid_rejected(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["solve", "--t", "geom:0.1"])


class TestGlueInputs:
    def test_params_file(self, tmp_path):
        path = tmp_path / "params.json"
        path.write_text(json.dumps({"params": {"tau": 0.7, "t": 9.0}, "beta": -0.4}), encoding="utf-8")
        config = RunConfig("glue", params=str(path))
        scenario, weights, params = load_glue_inputs(config, CFG, 0.1)
        assert params.t == (0.1, 0.1) and params.tau == 0.7
        assert weights.L_hat == (-0.4, -0.4)

    def test_explicit_weights(self, tmp_path):
        path = tmp_path / "params.json"
        path.write_text(json.dumps({"weights": {"L": [-0.5] * 4, "L_hat": [-0.5, -0.5]}}), encoding="utf-8")
        _, weights, _ = load_glue_inputs(RunConfig("glue", params=str(path)), CFG, 0.1)
        assert weights.L == (-0.5,) * 4


# ────────────────────────────────────────────
# 子命令
# ────────────────────────────────────────────

class TestRun:
    def test_weights(self, tmp_path, capsys):
        config = RunConfig("weights", output_dir=tmp_path,
                           options={"m": 3, "link": "sphere", "window": [-3.0, 3.0], "method": "analytic"})
        assert run(config, CFG) == EXIT_OK
        summary = last_json(capsys)
        assert summary["status"] == "ok"
        assert summary["gammas"] == pytest.approx([-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0])
        assert summary["partners_consistent"]
        for name in ("exceptional.json", "exceptional.csv", "manifest.json"):
            assert (tmp_path / name).is_file(), f"缺少产物 {name}"
        assert read_json(tmp_path / "manifest.json")["command"] == "weights"

    def test_torus_needs_m3(self, tmp_path, capsys):
        config = RunConfig("weights", output_dir=tmp_path, options={"m": 4, "link": "torus", "window": [-1.0, 1.0]})
        assert run(config, CFG) == EXIT_CONFIG
        assert last_json(capsys)["status"] == "error"

    def test_neck(self, tmp_path, capsys):
        config = RunConfig("neck", output_dir=tmp_path, options={"m": 3, "c": 1.0, "samples": 200})
        assert run(config, CFG) == EXIT_OK
        summary = last_json(capsys)
        assert summary["sl_residual"] <= 1e-10
        assert all(r["passed"] for r in summary["rates"])
        assert (tmp_path / "neck_samples.csv").is_file()

    def test_verify_pass(self, tmp_path, capsys):
        chart = write_chart(tmp_path, {"kind": "gamma-neck", "m": 3, "c": 1.0})
        out = tmp_path / "out"
        config = RunConfig("verify", output_dir=out, options={"chart": chart, "samples": 50})
        assert run(config, CFG) == EXIT_OK
        assert read_json(out / "verify.json")["result"] == "PASS"
        manifest = read_json(out / "manifest.json")
        assert manifest["inputs"]["chart"] == {"kind": "gamma-neck", "m": 3, "c": 1.0}
        assert "verify.json" in manifest["files"]

    def test_verify_unknown_kind(self, tmp_path, capsys):
        chart = write_chart(tmp_path, {"kind": "sphere"})
        config = RunConfig("verify", output_dir=tmp_path / "out", options={"chart": chart})
        assert run(config, CFG) == EXIT_CONFIG
        summary = last_json(capsys)
        assert summary["status"] == "error" and "sphere" in summary["message"]

    def test_unknown_command(self, tmp_path, capsys):
        assert run(RunConfig("draw", output_dir=tmp_path), CFG) == EXIT_CONFIG

    def test_main_exit_code(self, tmp_path, capsys):
        env = tmp_path / "missing.env"
        with pytest.raises(SystemExit) as exc:
            main(["weights", "--window", "-1", "1", "--output", str(tmp_path), "--env", str(env)])
        assert exc.value.code == EXIT_OK
        assert last_json(capsys)["gammas"] == pytest.approx([-1.0, 0.0, 1.0])

    def test_main_bad_env(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("CONIFOLD_FORGE_SEED", "-1")
        with pytest.raises(SystemExit) as exc:
            main(["weights", "--output", str(tmp_path), "--env", str(tmp_path / "missing.env")])
        assert exc.value.code == EXIT_CONFIG
        assert last_json(capsys)["status"] == "error"



# ────────────────────────────────────────────
# manifest 与重放
# ────────────────────────────────────────────

def artifact_bytes(directory: Path):
    """除 manifest.json 之外全部产物的字节内容。"""
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir()) if p.name != "manifest.json"}


class TestManifest:
    def test_inputs_carry_numeric_config(self):
        config = RunConfig("weights", options={"m": 3}).resolved(CFG)
        assert config.inputs()["config"] == {"neighbourhood": 0.1, "points_per_decade": 96, "ball_constant": 1.0}

    def test_hash_depends_on_env_values(self):
        a = RunConfig("glue").resolved(CFG).inputs()
        b = RunConfig("glue").resolved({**CFG, "ball_constant": 2.0}).inputs()
        assert inputs_hash(a) != inputs_hash(b)

    def test_manifest_settings_win(self):
        config = RunConfig("glue", settings={"points_per_decade": 128}).resolved(CFG)
        assert config.settings["points_per_decade"] == 128
        assert config.settings["neighbourhood"] == 0.1

    def test_replay_weights(self, tmp_path, capsys):
        first = tmp_path / "first"
        config = RunConfig("weights", output_dir=first, options={"m": 3, "window": [-3.0, 3.0]})
        assert run(config, CFG) == EXIT_OK
        again = tmp_path / "again"
        assert replay(str(first / "manifest.json"), str(again), CFG) == EXIT_OK
        assert artifact_bytes(again) == artifact_bytes(first)
        m1, m2 = read_json(first / "manifest.json"), read_json(again / "manifest.json")
        assert m1["inputs_hash"] == m2["inputs_hash"] and m1["files"] == m2["files"]

    def test_replay_verify_without_chart_file(self, tmp_path, capsys):
        """chart 的内容在 manifest 里，原文件删掉后仍能重放。"""
        chart = Path(write_chart(tmp_path, {"kind": "gamma-neck", "m": 3, "c": 1.0}))
        first = tmp_path / "first"
        assert run(RunConfig("verify", output_dir=first, options={"chart": str(chart), "samples": 30}), CFG) == EXIT_OK
        chart.unlink()
        again = tmp_path / "again"
        assert replay(str(first / "manifest.json"), str(again), CFG) == EXIT_OK
        assert artifact_bytes(again) == artifact_bytes(first)

    def test_replay_glue_uses_recorded_config(self, tmp_path, capsys):
        """重放用 manifest 里的数值配置，而不是当前 .env；两个 t 并行构造也逐字节相同。"""
        first = tmp_path / "first"
        assert run(RunConfig("glue", t_grid=(0.05, 0.1), output_dir=first), {**CFG, "threads": 1}) in (EXIT_OK, EXIT_VERIFY)
        again = tmp_path / "again"
        other_env = {**CFG, "points_per_decade": 64, "ball_constant": 3.0, "threads": 2}
        replay(str(first / "manifest.json"), str(again), other_env)
        assert artifact_bytes(again) == artifact_bytes(first)
        assert read_json(again / "manifest.json")["inputs"]["config"]["points_per_decade"] == 96

    def test_main_replay(self, tmp_path, capsys):
        first = tmp_path / "first"
        assert run(RunConfig("weights", output_dir=first, options={"window": [-1.0, 1.0]}), CFG) == EXIT_OK
        capsys.readouterr()
        with pytest.raises(SystemExit) as exc:
            main(["replay", "--manifest", str(first / "manifest.json"), "--output", str(tmp_path / "again"),
                  "--env", str(tmp_path / "missing.env")])
        assert exc.value.code == EXIT_OK
        assert last_json(capsys)["gammas"] == pytest.approx([-1.0, 0.0, 1.0])

    def test_replay_bad_manifest(self, tmp_path, capsys):
        bad = tmp_path / "manifest.json"
        bad.write_text("{}", encoding="utf-8")
        assert replay(str(bad), str(tmp_path / "out"), CFG) == EXIT_CONFIG
        assert last_json(capsys)["status"] == "error"


class TestSolveGate:
    def test_invertibility_runs_before_solve(self, tmp_path, capsys, monkeypatch):
        """t 网格上可逆性下界的比值超过 4 时不进入求解。"""
        def spread_family(family, seed=0):
            ts = tuple(g.t for g in family)
            return InvertibilityReport(ts, tuple(10.0 ** k for k in range(len(ts))))

        def never(*args, **kwargs):
            raise AssertionError("可逆性检查失败后不应求解")

        monkeypatch.setattr(commands, "probe_uniform_invertibility", spread_family)
        monkeypatch.setattr(commands, "solve_sl", never)
        out = tmp_path / "out"
        assert run(RunConfig("solve", t_grid=(0.05, 0.1), output_dir=out), CFG) == EXIT_VERIFY
        summary = last_json(capsys)
        assert summary["status"] == "fail" and summary["invertibility"]["passed"] is False
        assert read_json(out / "invertibility.json")["spread"] == pytest.approx(10.0)

    def test_weight_hypothesis_checked(self, tmp_path, capsys, monkeypatch):
        """求解前先做权重假设检查：违反时以配置错误退出。"""
        def violated(family, seed=0):
            raise HypothesisViolated("β 是例外权重")

        monkeypatch.setattr(commands, "probe_uniform_invertibility", violated)
        assert run(RunConfig("solve", output_dir=tmp_path / "out"), CFG) == EXIT_CONFIG
        assert "例外权重" in last_json(capsys)["message"]



# ────────────────────────────────────────────
# Shell
# ────────────────────────────────────────────

@pytest.fixture
def shell():
    """不创建 PromptSession，只初始化会话参数。"""
    sh = ConifoldShell.__new__(ConifoldShell)
    sh.cfg = dict(CFG)
    sh.state = {k: v for k, (v, _) in SETTINGS.items()}
    return sh


class TestShell:
    def test_weights_config(self, shell):
        shell.state["window"] = "-2,2"
        config = shell.config_for("weights", [])
        assert config.options["window"] == [-2.0, 2.0]
        assert config.output_dir == Path("runs") / "weights"

    def test_scaling_uses_t_grid(self, shell):
        config = shell.config_for("scaling", [])
        assert len(config.t_grid) == 6

    def test_solve_uses_t(self, shell):
        shell.state["t"] = "0.05"
        assert shell.config_for("solve", []).t_grid == (0.05,)

    def test_verify_needs_file(self, shell, tmp_path):
        with pytest.raises(ValueError):
            shell.config_for("verify", [])
        with pytest.raises(ValueError):
            shell.config_for("verify", [str(tmp_path / "missing.json")])
        chart = write_chart(tmp_path, {"kind": "plane", "m": 3})
        assert shell.config_for("verify", [chart]).options["chart"] == chart

    def test_set(self, shell, capsys):
        shell._cmd_set(["m", "4"])
        assert shell.state["m"] == 4
        with pytest.raises(ValueError):
            shell._cmd_set(["t", "-1"])
        shell._cmd_set(["colour", "red"])
        assert "colour" not in shell.state
