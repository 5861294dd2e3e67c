# -*- coding: utf-8 -*-
"""
conifold-forge 命令行入口

子命令：
  weights   链环谱与例外权重集
  neck      γ_c 颈的辛 / SL 残差与端收敛率
  glue      构造平面对场景的连通和 L_t，输出缺陷表
  scaling   ‖F_t(0)‖ 对 t 的幂律拟合
  solve     不动点迭代，输出 SolveReport 与迭代日志
  verify    任意 JSON 图卡的残差检查（PASS / FAIL）
  replay    按 manifest.json 记录的输入重跑，产物逐字节相同
  shell     交互式 shell

用法：
  conifold-forge weights --m 3 --link sphere --window -3 3
  conifold-forge neck --m 3 --c 1 --samples 1000
  conifold-forge glue --scenario two-plane.json --t 0.1
  conifold-forge scaling --t-grid geom:0.02:0.2:6
  conifold-forge solve --t 0.1 --params params.json
  conifold-forge verify --chart gamma-neck.json --samples 200
  conifold-forge replay --manifest runs/solve/manifest.json

参数文件（--params）：
  {"params": {"tau": 0.8, "alpha": 2.55, ...}, "beta": -0.5}
  或 {"params": {...}, "weights": {"L": [...], "L_hat": [...]}}

退出码：0 成功；1 配置错误；2 迭代不收缩；3 迭代离开求解球；4 验证失败（含一致可逆性与扰动后残差）。
结果摘要以 JSON 打印到 stdout，进度信息打印到 stderr。
"""

import argparse
import json
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np

from conifold_forge.charts import harvey_lawson_torus_link, sphere_link
from conifold_forge.config import load_config, map_in_order, progress
from conifold_forge.conifold import verify_decay
from conifold_forge.connect_sum import (
    GlueParameters,
    GluedConifold,
    GlueWeights,
    build_connect_sum,
    neck_metric_defect,
    symplectic_defect,
)
from conifold_forge.errors import BallEscape, ConifoldForgeError, NoContraction, ResidualTooLarge
from conifold_forge.geometry import residual_table
from conifold_forge.glue_solver import choose_alpha, final_rate_report, probe_uniform_invertibility, solve_sl
from conifold_forge.model_zoo import (
    Scenario,
    chart_from_dict,
    make_gamma_neck,
    make_two_plane_scenario,
    plane_cone,
    scenario_from_dict,
)
from conifold_forge.reports import RunArtifacts, jsonable, read_json
from conifold_forge.sl_operator import initial_residual_scaling
from conifold_forge.spectral import covering_spectrum, exceptional_weights

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NO_CONTRACTION = 2
EXIT_BALL_ESCAPE = 3
EXIT_VERIFY = 4

COMMANDS = ("weights", "neck", "glue", "scaling", "solve", "verify")
RESIDUAL_TOL = 1e-10
SCALING_TOL = 0.15
# 改变数值结果、因而写进 manifest 的 .env 配置
NUMERIC_SETTINGS = ("neighbourhood", "points_per_decade", "ball_constant")


# ────────────────────────────────────────────
# 运行配置
# ────────────────────────────────────────────

@dataclass
class RunConfig:
    """
    一次命令运行的全部输入（路径在解析时已检查存在）。

    settings:  影响数值结果的 .env 配置（NUMERIC_SETTINGS），run() 时由 cfg 补全
    documents: 直接给出的输入文件内容（"scenario" / "params" / "chart"），优先于路径；
               从 manifest 重放时由它携带原始输入
    """
    command: str
    scenario: Optional[str] = None
    params: Optional[str] = None
    t_grid: Tuple[float, ...] = (0.1,)
    output_dir: Path = Path("runs")
    seed: int = 0
    options: Dict[str, Any] = field(default_factory=dict)
    settings: Dict[str, Any] = field(default_factory=dict)
    documents: Dict[str, Any] = field(default_factory=dict)

    def document(self, key: str) -> Optional[Any]:
        if key in self.documents:
            return self.documents[key]
        path = self.options.get("chart") if key == "chart" else getattr(self, key)
        return read_json(path) if path else None

    def resolved(self, cfg: Dict[str, Any]) -> "RunConfig":
        """补全 settings：已有的值优先，其余取自 cfg。"""
        settings = {k: self.settings.get(k, cfg.get(k)) for k in NUMERIC_SETTINGS}
        return replace(self, settings=settings)

    def inputs(self) -> Dict[str, Any]:
        """参与 manifest 哈希的输入：参数值、数值配置与输入文件内容。"""
        out: Dict[str, Any] = {"command": self.command, "t_grid": list(self.t_grid), "seed": self.seed,
                               "options": dict(self.options), "config": dict(self.settings)}
        for key in ("scenario", "params"):
            out[key] = self.document(key)
        if self.options.get("chart") or "chart" in self.documents:
            out["chart"] = self.document("chart")
        return out


def config_from_manifest(manifest: Dict[str, Any], output_dir: Path) -> RunConfig:
    """由 manifest.json 的 inputs 重建 RunConfig；输入文件内容取自 manifest 本身。"""
    inputs = manifest["inputs"]
    return RunConfig(
        command=inputs["command"],
        t_grid=tuple(float(t) for t in inputs["t_grid"]),
        output_dir=Path(output_dir),
        seed=int(inputs["seed"]),
        options=dict(inputs.get("options", {})),
        settings=dict(inputs.get("config", {})),
        documents={k: inputs[k] for k in ("scenario", "params", "chart") if inputs.get(k) is not None},
    )


def parse_t_grid(text: str) -> Tuple[float, ...]:
    """
    "0.1" / "0.02,0.05,0.1" / "geom:0.02:0.2:6"（几何间隔 6 个点）。

    Raises:
        ValueError: 格式错误或含非正值
    """
    text = text.strip()
    if text.startswith("geom:"):
        parts = text.split(":")
        if len(parts) != 4:
            raise ValueError(f"t 网格格式应为 geom:lo:hi:n，收到 {text!r}")
        lo, hi, n = float(parts[1]), float(parts[2]), int(parts[3])
        values = tuple(float(v) for v in np.geomspace(lo, hi, n))
    else:
        values = tuple(float(v) for v in text.split(",") if v.strip())
    if not values or any(not v > 0 for v in values):
        raise ValueError(f"t 网格必须是正数: {text!r}")
    return values


def _existing_file(path: str) -> str:
    if not Path(path).is_file():
        raise argparse.ArgumentTypeError(f"文件不存在: {path}")
    return path


def _t_grid_arg(text: str) -> Tuple[float, ...]:
    try:
        return parse_t_grid(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conifold-forge",
        description="特殊 Lagrangian conifold 的数值粘合工具",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=__doc__,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--output", default=None, help="产物目录（默认 CONIFOLD_FORGE_OUTPUT_DIR/<命令>）")
        p.add_argument("--seed", type=int, default=None, help="随机种子（默认 CONIFOLD_FORGE_SEED）")
        p.add_argument("--env", default="", help=".env 文件路径（默认项目根目录）")

    def glue_inputs(p: argparse.ArgumentParser, grid_default: str) -> None:
        p.add_argument("--scenario", type=_existing_file, default=None, help="场景 JSON（默认 two-plane, m=3）")
        p.add_argument("--params", type=_existing_file, default=None, help="粘合参数 JSON")
        p.add_argument("--t", "--t-grid", dest="t_grid", type=_t_grid_arg, default=parse_t_grid(grid_default),
                       help="t 或 t 网格（逗号分隔，或 geom:lo:hi:n）")

    p = sub.add_parser("weights", help="例外权重集")
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--link", choices=("sphere", "torus"), default="sphere")
    p.add_argument("--window", type=float, nargs=2, default=(-5.0, 5.0), metavar=("LO", "HI"))
    p.add_argument("--method", choices=("analytic", "discretized"), default="analytic")
    common(p)

    p = sub.add_parser("neck", help="γ_c 颈的残差与收敛率")
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=1000)
    common(p)

    p = sub.add_parser("glue", help="构造连通和 L_t")
    glue_inputs(p, "0.1")
    common(p)

    p = sub.add_parser("scaling", help="初始残差的幂律拟合")
    glue_inputs(p, "geom:0.02:0.2:6")
    common(p)

    p = sub.add_parser("solve", help="不动点迭代")
    glue_inputs(p, "0.1")
    common(p)

    p = sub.add_parser("verify", help="JSON 图卡的残差检查")
    p.add_argument("--chart", type=_existing_file, required=True)
    p.add_argument("--samples", type=int, default=200)
    common(p)

    p = sub.add_parser("replay", help="按 manifest.json 重跑一次运行")
    p.add_argument("--manifest", type=_existing_file, required=True)
    p.add_argument("--output", default=None, help="产物目录（默认 CONIFOLD_FORGE_OUTPUT_DIR/<命令>_replay）")
    p.add_argument("--env", default="", help=".env 文件路径（默认项目根目录）")

    sub.add_parser("shell", help="交互式 shell")
    return parser


def config_from_args(ns: argparse.Namespace, cfg: Dict[str, Any]) -> RunConfig:
    options = {k: v for k, v in vars(ns).items()
               if k not in ("command", "scenario", "params", "t_grid", "output", "seed", "env")}
    if "window" in options:
        options["window"] = list(options["window"])
    out = Path(ns.output) if ns.output else Path(cfg["output_dir"]) / ns.command
    return RunConfig(
        command=ns.command,
        scenario=getattr(ns, "scenario", None),
        params=getattr(ns, "params", None),
        t_grid=tuple(getattr(ns, "t_grid", (0.1,))),
        output_dir=out,
        seed=cfg["seed"] if ns.seed is None else ns.seed,
        options=options,
    )


# ────────────────────────────────────────────
# 输入装配
# ────────────────────────────────────────────

def load_scenario(config: RunConfig) -> Scenario:
    data = config.document("scenario")
    if data is None:
        return make_two_plane_scenario(3)
    return scenario_from_dict(data)


def load_glue_inputs(config: RunConfig, cfg: Dict[str, Any], t: float) -> Tuple[Scenario, GlueWeights, GlueParameters]:
    scenario = load_scenario(config)
    data = config.document("params") or {}
    overrides = {k: v for k, v in data.get("params", {}).items() if k != "t"}
    params = GlueParameters.from_config({**cfg, **config.settings}, t, len(scenario.pairing), **overrides)
    if "weights" in data:
        weights = GlueWeights.from_dict(data["weights"])
    else:
        weights = GlueWeights.uniform(scenario, float(data.get("beta", -0.5)))
    return scenario, weights, params


# ────────────────────────────────────────────
# 各子命令
# ────────────────────────────────────────────

Pipeline = Callable[[RunConfig, Dict[str, Any], RunArtifacts], Tuple[int, Dict[str, Any]]]


def run_weights(config: RunConfig, cfg: Dict[str, Any], run: RunArtifacts) -> Tuple[int, Dict[str, Any]]:
    opts = config.options
    m = int(opts.get("m", 3))
    lo, hi = (float(v) for v in opts.get("window", (-5.0, 5.0)))
    if opts.get("link", "sphere") == "torus":
        if m != 3:
            raise ValueError("环面链环只在 m = 3 时定义")
        link = harvey_lawson_torus_link()
    else:
        link = sphere_link(m)
    spec = covering_spectrum(link, m, (lo, hi), method=opts.get("method", "analytic"))
    ex = exceptional_weights(spec, m, (lo, hi))
    run.json("exceptional.json", {"spectrum": spec.to_dict(), "exceptional": ex.to_dict()})
    run.csv("exceptional.csv", [{"gamma": g, "multiplicity": k} for g, k in ex.entries], ["gamma", "multiplicity"])
    return EXIT_OK, {"gammas": ex.gammas, "partners_consistent": ex.partners_consistent()}


def run_neck(config: RunConfig, cfg: Dict[str, Any], run: RunArtifacts) -> Tuple[int, Dict[str, Any]]:
    opts = config.options
    m, c = int(opts.get("m", 3)), float(opts.get("c", 1.0))
    neck = make_gamma_neck(plane_cone(m), c)
    pts = neck.chart.sample(int(opts.get("samples", 1000)), np.random.default_rng(config.seed))
    table = residual_table(neck.chart, pts)
    r_grid = np.geomspace(4.0 * c, 400.0 * c, 16)
    rates = [verify_decay(end, r_grid, seed=config.seed) for end in neck.ends]
    summary = {
        "symplectic_defect": float(np.max(np.abs(table[:, 0]))),
        "sl_residual": float(np.max(np.abs(table[:, 1]))),
        "rates": [{"slope": d.slope, "expected": d.expected, "passed": d.passed} for d in rates],
    }
    run.json("neck.json", summary)
    run.csv("neck_samples.csv",
            [{"phi": p[-1], "symplectic": a, "sl": b} for p, (a, b) in zip(pts, table)],
            ["phi", "symplectic", "sl"])
    ok = (summary["symplectic_defect"] <= RESIDUAL_TOL and summary["sl_residual"] <= RESIDUAL_TOL
          and all(d.passed for d in rates))
    return (EXIT_OK if ok else EXIT_VERIFY), summary


def run_glue(config: RunConfig, cfg: Dict[str, Any], run: RunArtifacts) -> Tuple[int, Dict[str, Any]]:
    def one(t: float):
        scenario, weights, params = load_glue_inputs(config, cfg, t)
        glued = build_connect_sum(scenario, weights, params)
        return glued, symplectic_defect(glued, seed=config.seed), neck_metric_defect(glued)

    ok = True
    results = []
    for t, (glued, defects, neck) in zip(config.t_grid, map_in_order(one, config.t_grid, cfg.get("threads", 1))):
        body = glued.to_dict()
        body.update({"symplectic_defect": defects, "neck_metric_defect": list(neck.values),
                     "outside_defect": neck.outside})
        tag = f"t{t:g}"
        run.json(f"glued_{tag}.json", body)
        run.csv(f"defects_{tag}.csv", [{"region": k, "symplectic_defect": v} for k, v in sorted(defects.items())],
                ["region", "symplectic_defect"])
        ok = ok and max(defects.values()) <= RESIDUAL_TOL and glued.interface_defect <= RESIDUAL_TOL
        results.append({"t": t, "interface_defect": glued.interface_defect,
                        "symplectic_defect": max(defects.values())})
    return (EXIT_OK if ok else EXIT_VERIFY), {"runs": results}


def run_scaling(config: RunConfig, cfg: Dict[str, Any], run: RunArtifacts) -> Tuple[int, Dict[str, Any]]:
    scenario, weights, params = load_glue_inputs(config, cfg, config.t_grid[0])
    report = initial_residual_scaling(scenario, weights, params, config.t_grid, threads=cfg.get("threads", 1))
    run.json("scaling.json", report.to_dict())
    run.csv("scaling.csv", report.to_rows(), ["t", "norm"])
    ok = abs(report.fit.slope - report.predicted) <= SCALING_TOL and report.supported
    return (EXIT_OK if ok else EXIT_VERIFY), report.to_dict()


def run_solve(config: RunConfig, cfg: Dict[str, Any], run: RunArtifacts) -> Tuple[int, Dict[str, Any]]:
    """先检查权重假设并测量 t 网格上的一致可逆性，通过后再逐个 t 求解。"""
    threads = cfg.get("threads", 1)

    def build(t: float) -> GluedConifold:
        scenario, weights, params = load_glue_inputs(config, cfg, t)
        mu = [scenario.L.ends[i].rate for i, _ in scenario.pairing]
        lam = [scenario.L_hat.ends[j].rate for _, j in scenario.pairing]
        choose_alpha(mu, lam, [weights.L_hat[j] for _, j in scenario.pairing], params.tau, scenario.m)
        return build_connect_sum(scenario, weights, params)

    family = map_in_order(build, config.t_grid, threads)
    invertibility = probe_uniform_invertibility(family, seed=config.seed)
    run.json("invertibility.json", invertibility.to_dict())
    if not invertibility.passed:
        return EXIT_VERIFY, {"invertibility": invertibility.to_dict()}

    def solve(glued: GluedConifold):
        report, profile = solve_sl(glued)
        return report, profile, final_rate_report(profile, glued)

    summaries = []
    ok = True
    for t, (report, profile, rates) in zip(config.t_grid, map_in_order(solve, family, threads)):
        body = report.to_dict()
        body["rates"] = rates.to_dict()
        tag = f"t{t:g}"
        run.json(f"solve_{tag}.json", body)
        run.csv(f"iterations_{tag}.csv", [{"k": k, "residual": r, "step": s} for k, r, s in report.iterations],
                ["k", "residual", "step"])
        run.csv(f"profile_{tag}.csv", profile.rows(), ["s", "re", "im", "f"])
        ok = ok and rates.passed
        summaries.append({"t": t, "iterations": len(report.iterations) - 1, "final_norm": report.final_norm,
                          "residual": report.residual, "sl_residual": report.sl_residual,
                          "rates_passed": rates.passed})
    return (EXIT_OK if ok else EXIT_VERIFY), {"invertibility": invertibility.to_dict(), "runs": summaries}


def run_verify(config: RunConfig, cfg: Dict[str, Any], run: RunArtifacts) -> Tuple[int, Dict[str, Any]]:
    opts = config.options
    chart = chart_from_dict(config.document("chart"))
    pts = chart.sample(int(opts.get("samples", 200)), np.random.default_rng(config.seed))
    table = residual_table(chart, pts)
    summary = {
        "chart": chart.label,
        "symplectic_defect": float(np.max(np.abs(table[:, 0]))),
        "sl_residual": float(np.max(np.abs(table[:, 1]))),
    }
    ok = summary["symplectic_defect"] <= RESIDUAL_TOL and summary["sl_residual"] <= RESIDUAL_TOL
    summary["result"] = "PASS" if ok else "FAIL"
    run.json("verify.json", summary)
    return (EXIT_OK if ok else EXIT_VERIFY), summary


PIPELINES: Dict[str, Pipeline] = {
    "weights": run_weights,
    "neck": run_neck,
    "glue": run_glue,
    "scaling": run_scaling,
    "solve": run_solve,
    "verify": run_verify,
}


def run(config: RunConfig, cfg: Optional[Dict[str, Any]] = None) -> int:
    """执行一个子命令，写出产物与 manifest，并把摘要 JSON 打印到 stdout。"""
    cfg = cfg or load_config()
    try:
        if config.command not in PIPELINES:
            raise ValueError(f"未知命令: {config.command!r}")
        config = config.resolved(cfg)
        artifacts = RunArtifacts(config.output_dir, config.command, config.seed, config.inputs())
        code, summary = PIPELINES[config.command](config, cfg, artifacts)
        artifacts.finish()
    except NoContraction as e:
        code, summary = EXIT_NO_CONTRACTION, {"status": "error", "message": str(e)}
    except BallEscape as e:
        code, summary = EXIT_BALL_ESCAPE, {"status": "error", "message": str(e)}
    except ResidualTooLarge as e:
        code, summary = EXIT_VERIFY, {"status": "fail", "message": str(e)}
    except (ValueError, ConifoldForgeError, OSError) as e:
        code, summary = EXIT_CONFIG, {"status": "error", "message": str(e)}
    else:
        summary = {"status": "ok" if code == EXIT_OK else "fail", "output": str(config.output_dir), **summary}
        progress(f"[✓] {config.command} → {config.output_dir}" if code == EXIT_OK
                 else f"[!] {config.command}: verification failed")
    print(json.dumps(jsonable(summary), ensure_ascii=False))
    return code


def replay(manifest_path: str, output_dir: Optional[str], cfg: Dict[str, Any]) -> int:
    """
    按 manifest.json 记录的输入重跑同一条命令。

    输入文件内容与数值配置都取自 manifest，因此产物（manifest 本身的 wall_time 与版本号之外）逐字节相同。
    """
    try:
        manifest = read_json(manifest_path)
        command = manifest["inputs"]["command"]
    except (OSError, ValueError, KeyError) as e:
        print(json.dumps({"status": "error", "message": f"无法读取 manifest: {e}"}, ensure_ascii=False))
        return EXIT_CONFIG
    out = Path(output_dir) if output_dir else Path(cfg["output_dir"]) / f"{command}_replay"
    return run(config_from_manifest(manifest, out), cfg)


def main(argv=None) -> None:
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.command == "shell":
        from cli.shell import main as shell_main
        shell_main()
        return
    try:
        cfg = load_config(ns.env)
    except ValueError as e:
        print(json.dumps({"status": "error", "message": str(e)}, ensure_ascii=False))
        sys.exit(EXIT_CONFIG)
    if ns.command == "replay":
        sys.exit(replay(ns.manifest, ns.output, cfg))
    sys.exit(run(config_from_args(ns, cfg), cfg))


if __name__ == "__main__":
    main()
