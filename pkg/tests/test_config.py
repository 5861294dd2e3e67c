# -*- coding: utf-8 -*-
"""
测试：conifold_forge.config 配置加载
验证：默认值、环境变量覆盖、.env 文件 override=True、非法取值报错。

运行方式：
  pytest tests/test_config.py -v -s
"""

import pytest

from conifold_forge.config import get_env_path, load_config, map_in_order, progress

VARS = (
    "CONIFOLD_FORGE_THREADS",
    "CONIFOLD_FORGE_SEED",
    "CONIFOLD_FORGE_OUTPUT_DIR",
    "CONIFOLD_FORGE_NEIGHBOURHOOD_C",
    "CONIFOLD_FORGE_POINTS_PER_DECADE",
    "CONIFOLD_FORGE_BALL_CONSTANT",
    "CONIFOLD_FORGE_QUIET",
)


@pytest.fixture
def clean_env(monkeypatch, tmp_path):
    """清空相关环境变量，返回一个不存在的 .env 路径。"""
    for name in VARS:
        monkeypatch.delenv(name, raising=False)
    return str(tmp_path / "absent.env")


def test_env_path_is_project_root():
    """get_env_path() 指向 conifold_forge/ 上一级目录的 .env。"""
    path = get_env_path()
    assert path.name == ".env"
    assert (path.parent / "conifold_forge").is_dir()


def test_defaults(clean_env):
    cfg = load_config(clean_env)
    assert cfg == {
        "threads": 1, "seed": 0, "output_dir": "runs", "neighbourhood": 0.1,
        "points_per_decade": 96, "ball_constant": 1.0, "quiet": False,
    }


def test_shell_override(clean_env, monkeypatch):
    monkeypatch.setenv("CONIFOLD_FORGE_SEED", "42")
    monkeypatch.setenv("CONIFOLD_FORGE_BALL_CONSTANT", "25")
    monkeypatch.setenv("CONIFOLD_FORGE_QUIET", "true")
    cfg = load_config(clean_env)
    assert cfg["seed"] == 42 and cfg["ball_constant"] == 25.0 and cfg["quiet"]


def test_env_file_overrides_shell(clean_env, monkeypatch, tmp_path):
    """override=True：.env 中的值覆盖 shell 环境变量中的旧值。"""
    env = tmp_path / "run.env"
    env.write_text("CONIFOLD_FORGE_POINTS_PER_DECADE=128\nCONIFOLD_FORGE_OUTPUT_DIR=out\n", encoding="utf-8")
    monkeypatch.setenv("CONIFOLD_FORGE_POINTS_PER_DECADE", "80")
    # load_dotenv 直接写 os.environ，交给 monkeypatch 在结束时还原
    monkeypatch.setenv("CONIFOLD_FORGE_OUTPUT_DIR", "runs")
    cfg = load_config(str(env))
    assert cfg["points_per_decade"] == 128
    assert cfg["output_dir"] == "out"


@pytest.mark.parametrize("name,value", [
    ("CONIFOLD_FORGE_THREADS", "0"),
    ("CONIFOLD_FORGE_SEED", "abc"),
    ("CONIFOLD_FORGE_POINTS_PER_DECADE", "32"),
    ("CONIFOLD_FORGE_NEIGHBOURHOOD_C", "-0.1"),
    ("CONIFOLD_FORGE_BALL_CONSTANT", "big"),
])
def test_invalid_values(clean_env, monkeypatch, name, value):
    monkeypatch.setenv(name, value)
    with pytest.raises(ValueError, match=name):
        load_config(clean_env)


def test_progress_quiet(monkeypatch, capsys):
    monkeypatch.setenv("CONIFOLD_FORGE_QUIET", "1")
    progress("hidden")
    monkeypatch.setenv("CONIFOLD_FORGE_QUIET", "")
    progress("shown")
    err = capsys.readouterr().err
    assert "hidden" not in err and "  shown" in err


def test_map_in_order_keeps_order():
    """多线程时结果仍按输入顺序排列。"""

    def square(x):
        return x * x

    items = list(range(12))
    assert map_in_order(square, items, threads=4) == [x * x for x in items]
    assert map_in_order(square, items, threads=1) == [x * x for x in items]
    assert map_in_order(square, [], threads=3) == []


def test_map_in_order_propagates_errors():
    def fail(x):
        if x == 2:
            raise ValueError("bad item")
        return x

    with pytest.raises(ValueError, match="bad item"):
        map_in_order(fail, [0, 1, 2, 3], threads=2)
