# -*- coding: utf-8 -*-
"""
产物输出：JSON / CSV 与运行清单 manifest.json

所有 JSON 都带 schema_version；CSV 中的浮点数以 17 位有效数字写出，
保证同一输入重跑得到逐字节相同的数值产物。

典型用法::

    from conifold_forge.reports import RunArtifacts

    run = RunArtifacts("runs/glue", command="glue", seed=0, inputs={"t": 0.1})
    run.json("glued.json", glued.to_dict())
    run.csv("defects.csv", rows, ["region", "symplectic_defect"])
    run.finish()
"""

import csv
import hashlib
import json
import time
from importlib import metadata
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np

SCHEMA_VERSION = 1
PACKAGES = ("conifold-forge", "numpy", "scipy", "python-dotenv", "prompt_toolkit")


def jsonable(obj: Any) -> Any:
    """numpy 标量/数组、tuple、非有限浮点数 → JSON 可序列化对象（inf/nan 写成字符串）。"""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, (complex, np.complexfloating)):
        return [jsonable(obj.real), jsonable(obj.imag)]
    return obj


def dumps(payload: Dict[str, Any]) -> str:
    body = {"schema_version": SCHEMA_VERSION}
    body.update(jsonable(payload))
    return json.dumps(body, ensure_ascii=False, indent=2, sort_keys=True)


def format_cell(v: Any) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_json(path: Union[str, Path], payload: Dict[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(payload) + "\n", encoding="utf-8")
    return path


def write_csv(path: Union[str, Path], rows: Iterable[Dict[str, Any]], columns: Sequence[str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_cell(row[c]) for c in columns])
    return path


def read_json(path: Union[str, Path]) -> Dict[str, Any]:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def inputs_hash(inputs: Dict[str, Any]) -> str:
    """输入（参数与输入文件内容）的 sha256。"""
    canon = json.dumps(jsonable(inputs), sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def package_versions() -> Dict[str, Optional[str]]:
    out: Dict[str, Optional[str]] = {}
    for name in PACKAGES:
        try:
            out[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            out[name] = None
    return out


class RunArtifacts:
    """
    一次命令运行的产物目录。

    Args:
        out_dir: 产物目录（不存在时创建）
        command: 子命令名
        seed:    随机种子（写入每个 JSON 与清单）
        inputs:  参与哈希的输入
    """

    def __init__(self, out_dir: Union[str, Path], command: str, seed: int, inputs: Dict[str, Any]):
        self.out_dir = Path(out_dir)
        self.command = command
        self.seed = int(seed)
        self.inputs = dict(inputs)
        self.files: List[str] = []
        self._started = time.perf_counter()

    def json(self, name: str, payload: Dict[str, Any]) -> Path:
        body = dict(payload)
        body.setdefault("seed", self.seed)
        path = write_json(self.out_dir / name, body)
        self.files.append(name)
        return path

    def csv(self, name: str, rows: Iterable[Dict[str, Any]], columns: Sequence[str]) -> Path:
        path = write_csv(self.out_dir / name, rows, columns)
        self.files.append(name)
        return path

    def manifest(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "inputs": self.inputs,
            "inputs_hash": inputs_hash(self.inputs),
            "versions": package_versions(),
            "seed": self.seed,
            "files": sorted(self.files),
            "wall_time": time.perf_counter() - self._started,
        }

    def finish(self) -> Path:
        return write_json(self.out_dir / "manifest.json", self.manifest())
