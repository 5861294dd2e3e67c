# -*- coding: utf-8 -*-
"""
conifold-forge 交互式 shell
在同一个会话里反复调整参数并运行各条流水线，产物写到 output 目录。

依赖：numpy, scipy, python-dotenv, prompt_toolkit
安装：pip install -e .（项目根目录）
运行：conifold-forge shell  或  python -m cli.shell

流水线命令：
  weights             例外权重集（使用 m、link、window）
  neck                γ_c 颈的残差与收敛率（使用 m、c、samples）
  glue                构造连通和 L_t（使用 scenario、params、t）
  scaling             ‖F_t(0)‖ 的幂律拟合（使用 t_grid）
  solve               不动点迭代（使用 t）
  verify <chart.json> 图卡残差检查

会话命令：
  set <key> <value>   修改会话参数（Tab 补全参数名）
  show                显示当前会话参数
  help                显示帮助
  exit / q            退出
"""

import sys
from pathlib import Path
from typing import Any, Dict, List

from prompt_toolkit import PromptSession
from prompt_toolkit.completion import Completer, Completion
from prompt_toolkit.formatted_text import HTML
from prompt_toolkit.history import InMemoryHistory
from prompt_toolkit.styles import Style

from cli.commands import COMMANDS, EXIT_OK, RunConfig, parse_t_grid, run
from conifold_forge.config import load_config


# ────────────────────────────────────────────
# 颜色/样式
# ────────────────────────────────────────────

SHELL_STYLE = Style.from_dict({
    "prompt.bracket": "#888888",
    "prompt.path":    "#44aaff bold",
    "prompt.arrow":   "#ffffff",
})

COL_RESET  = "\033[0m"
COL_BOLD   = "\033[1m"
COL_CYAN   = "\033[96m"
COL_GREEN  = "\033[92m"
COL_YELLOW = "\033[93m"
COL_RED    = "\033[91m"
COL_GREY   = "\033[90m"


def _c(text: str, color: str) -> str:
    """包裹 ANSI 颜色（终端非 TTY 时自动跳过）。"""
    if not sys.stdout.isatty():
        return text
    return f"{color}{text}{COL_RESET}"


# 会话参数：名字 → (默认值, 解析函数)
SETTINGS = {
    "m":        (3, int),
    "c":        (1.0, float),
    "link":     ("sphere", str),
    "window":   ("-5,5", str),
    "samples":  (200, int),
    "t":        ("0.1", str),
    "t_grid":   ("geom:0.02:0.2:6", str),
    "scenario": ("", str),
    "params":   ("", str),
    "seed":     (0, int),
    "output":   ("", str),
}


# ────────────────────────────────────────────
# Tab 补全
# ────────────────────────────────────────────

class ConifoldCompleter(Completer):
    """补全命令名、set 的参数名与 verify 的 JSON 文件。"""

    def get_completions(self, document, complete_event):
        text = document.text_before_cursor.lstrip()
        words = text.split()
        if not words:
            return
        cmd = words[0].lower()
        if len(words) == 1 and not text.endswith(" "):
            for c in list(COMMANDS) + ["set", "show", "help", "exit", "q"]:
                if c.startswith(cmd):
                    yield Completion(c, start_position=-len(words[0]))
            return
        if cmd == "set" and len(words) == 2 and not text.endswith(" "):
            for key in SETTINGS:
                if key.startswith(words[1]):
                    yield Completion(key, start_position=-len(words[1]))
            return
        if cmd == "verify" and len(words) == 2 and not text.endswith(" "):
            for path in sorted(Path(".").glob("*.json")):
                if path.name.startswith(words[1]):
                    yield Completion(path.name, start_position=-len(words[1]))


# ────────────────────────────────────────────
# Shell 主体
# ────────────────────────────────────────────

class ConifoldShell:
    """
    state: 会话参数（见 SETTINGS），每次运行都由它组装一个 RunConfig。
    """

    def __init__(self):
        self.cfg = load_config()
        self.state: Dict[str, Any] = {k: v for k, (v, _) in SETTINGS.items()}
        self.state["seed"] = self.cfg["seed"]
        self._session = PromptSession(
            history=InMemoryHistory(),
            completer=ConifoldCompleter(),
            complete_while_typing=False,
            style=SHELL_STYLE,
        )

    def _prompt_message(self):
        return HTML(
            f'<prompt.bracket>[</prompt.bracket>'
            f'<prompt.path>m={self.state["m"]} t={self.state["t"]}</prompt.path>'
            f'<prompt.bracket>]</prompt.bracket>'
            f'<prompt.arrow> ❯ </prompt.arrow>'
        )

    def config_for(self, command: str, extra: List[str]) -> RunConfig:
        """由会话参数组装 RunConfig。"""
        s = self.state
        out = Path(s["output"]) if s["output"] else Path(self.cfg["output_dir"]) / command
        options: Dict[str, Any] = {}
        grid = (0.1,)
        if command == "weights":
            lo, hi = (float(v) for v in str(s["window"]).split(","))
            options = {"m": s["m"], "link": s["link"], "window": [lo, hi], "method": "analytic"}
        elif command == "neck":
            options = {"m": s["m"], "c": s["c"], "samples": s["samples"]}
        elif command == "verify":
            if not extra:
                raise ValueError("用法: verify <chart.json>")
            if not Path(extra[0]).is_file():
                raise ValueError(f"文件不存在: {extra[0]}")
            options = {"chart": extra[0], "samples": s["samples"]}
        else:
            grid = parse_t_grid(s["t_grid"] if command == "scaling" else s["t"])
        for key in ("scenario", "params"):
            if s[key] and not Path(s[key]).is_file():
                raise ValueError(f"文件不存在: {s[key]}")
        return RunConfig(command, s["scenario"] or None, s["params"] or None, grid, out, int(s["seed"]), options)

    # ──────────────────────────────────────────
    # 启动与主循环
    # ──────────────────────────────────────────

    def start(self) -> None:
        """进入 REPL 循环。"""
        print(_c("conifold-forge shell", COL_BOLD + COL_CYAN))
        print(_c('输入 "help" 查看命令，Tab 键补全，Ctrl-C / exit 退出\n', COL_GREY))
        while True:
            try:
                raw = self._session.prompt(self._prompt_message())
            except KeyboardInterrupt:
                print()
                continue
            except EOFError:
                break
            line = raw.strip()
            if not line:
                continue
            parts = line.split()
            cmd = parts[0].lower()
            try:
                if cmd in ("exit", "q"):
                    break
                elif cmd == "help":
                    self._cmd_help()
                elif cmd == "show":
                    self._cmd_show()
                elif cmd == "set":
                    self._cmd_set(parts[1:])
                elif cmd in COMMANDS:
                    self._cmd_run(cmd, parts[1:])
                else:
                    print(_c(f"未知命令: {cmd}（输入 help 查看帮助）", COL_YELLOW))
            except KeyboardInterrupt:
                print()
            except Exception as e:
                print(_c(f"错误: {e}", COL_RED))
        print(_c("再见！", COL_GREY))

    def _cmd_help(self) -> None:
        print(_c(__doc__.split("流水线命令：")[1], COL_GREY))

    def _cmd_show(self) -> None:
        for key in SETTINGS:
            print(f"  {_c(key, COL_CYAN):<20} {self.state[key]}")

    def _cmd_set(self, args: List[str]) -> None:
        if len(args) != 2:
            print(_c("用法: set <key> <value>", COL_YELLOW))
            return
        key, raw = args
        if key not in SETTINGS:
            print(_c(f"未知参数: {key}", COL_YELLOW))
            return
        value = SETTINGS[key][1](raw)
        if key in ("t", "t_grid"):
            parse_t_grid(value)
        self.state[key] = value
        print(_c(f"[✓] {key} = {value}", COL_GREEN))

    def _cmd_run(self, command: str, extra: List[str]) -> None:
        code = run(self.config_for(command, extra), self.cfg)
        if code == EXIT_OK:
            print(_c(f"[✓] {command} 完成", COL_GREEN))
        else:
            print(_c(f"[!] {command} 退出码 {code}", COL_YELLOW))


# ────────────────────────────────────────────
# 入口
# ────────────────────────────────────────────

def main() -> None:
    ConifoldShell().start()


if __name__ == "__main__":
    main()
