# -*- coding: utf-8 -*-
"""
conifold_forge 配置加载模块

优先级：
  1. 先查找项目根目录的 .env 文件（override=True，覆盖 shell 环境变量中的旧值）
  2. 再读取系统环境变量（作为兜底）

调用方式::

    from conifold_forge.config import load_config, get_env_path

    cfg = load_config()
    print(cfg["seed"], cfg["neighbourhood"])
"""

import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def get_env_path() -> Path:
    """
    返回项目根目录下的 .env 文件路径（conifold_forge/ 的上一级目录）。
    若文件不存在则返回路径对象（不报错）。
    """
    pkg_dir = Path(__file__).parent
    return pkg_dir.parent / ".env"


def _int_env(name: str, default: int, minimum: int) -> int:
    raw = os.environ.get(name, "")
    if raw == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{name}={raw!r} 不是整数")
    if value < minimum:
        raise ValueError(f"{name}={value} 小于下限 {minimum}")
    return value


def _float_env(name: str, default: float) -> float:
    raw = os.environ.get(name, "")
    if raw == "":
        return default
    try:
        value = float(raw)
    except ValueError:
        raise ValueError(f"{name}={raw!r} 不是数值")
    if not value > 0:
        raise ValueError(f"{name}={value} 必须为正数")
    return value


def load_config(env_path: str = "") -> Dict[str, Any]:
    """
    加载运行配置，自动读取 .env 文件。

    Args:
        env_path: 指定 .env 文件路径；留空则自动查找项目根目录的 .env。

    Returns:
        配置字典，包含以下键：
          - threads:           CONIFOLD_FORGE_THREADS（并行上限，默认 1）
          - seed:              CONIFOLD_FORGE_SEED（随机探针种子，默认 0）
          - output_dir:        CONIFOLD_FORGE_OUTPUT_DIR（产物目录，默认 runs）
          - neighbourhood:     CONIFOLD_FORGE_NEIGHBOURHOOD_C（图映射半径常数 C，默认 0.1）
          - points_per_decade: CONIFOLD_FORGE_POINTS_PER_DECADE（径向网格密度，默认 96）
          - ball_constant:     CONIFOLD_FORGE_BALL_CONSTANT（求解球半径系数 κ，默认 1）
          - quiet:             CONIFOLD_FORGE_QUIET（为 1/true 时不打印进度）

    Raises:
        ValueError: 某个变量无法解析或越界
    """
    try:
        from dotenv import load_dotenv
        target = env_path or str(get_env_path())
        if os.path.exists(target):
            load_dotenv(target, override=True)
    except ImportError:
        pass  # python-dotenv 未安装时直接使用环境变量

    cfg: Dict[str, Any] = {
        "threads":           _int_env("CONIFOLD_FORGE_THREADS", 1, 1),
        "seed":              _int_env("CONIFOLD_FORGE_SEED", 0, 0),
        "output_dir":        os.environ.get("CONIFOLD_FORGE_OUTPUT_DIR", "runs"),
        "neighbourhood":     _float_env("CONIFOLD_FORGE_NEIGHBOURHOOD_C", 0.1),
        "points_per_decade": _int_env("CONIFOLD_FORGE_POINTS_PER_DECADE", 96, 64),
        "ball_constant":     _float_env("CONIFOLD_FORGE_BALL_CONSTANT", 1.0),
        "quiet":             os.environ.get("CONIFOLD_FORGE_QUIET", "").lower() in ("1", "true", "yes"),
    }
    return cfg


def progress(msg: str) -> None:
    """长流程的单行进度输出（stderr）；CONIFOLD_FORGE_QUIET 打开时静默。"""
    if os.environ.get("CONIFOLD_FORGE_QUIET", "").lower() in ("1", "true", "yes"):
        return
    print(f"  {msg}", file=sys.stderr)


def map_in_order(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> List[R]:
    """
    对 items 逐个调用 fn，至多 threads 个并发；结果按 items 的顺序返回。

    threads <= 1 时在当前线程里顺序执行。任一调用抛出的异常原样向上传播。
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(int(threads), len(items))) as pool:
        return list(pool.map(fn, items))
