# -*- coding: utf-8 -*-
"""
conifold_forge — ℂᵐ 中特殊 Lagrangian conifold 的数值构造工具包

提供 Lagrangian 锥/端/conifold 的图卡表示、谱与例外权重、加权范数、
连通和 L_t 的构造、线性化算子以及 Picard 不动点求解，
支持命令行（conifold-forge）和脚本两种使用方式。

快速开始::

    from conifold_forge import (
        make_two_plane_scenario, GlueWeights, GlueParameters,
        build_connect_sum, solve_sl,
    )

    scenario = make_two_plane_scenario(m=3)
    weights = GlueWeights.uniform(scenario, beta=-0.5)
    params = GlueParameters.uniform(0.1, necks=len(scenario.pairing))
    glued = build_connect_sum(scenario, weights, params)
    report, profile = solve_sl(glued)
"""

from conifold_forge.config import load_config
from conifold_forge.conifold import Conifold, End, LagrangianCone, verify_decay
from conifold_forge.model_zoo import (
    make_gamma_neck,
    make_sl_plane_pair,
    make_two_plane_scenario,
    scenario_from_dict,
)
from conifold_forge.spectral import covering_spectrum, exceptional_weights, link_spectrum, stability_check
from conifold_forge.connect_sum import GlueParameters, GlueWeights, build_connect_sum
from conifold_forge.sl_operator import assemble_operator, initial_residual_scaling, linearize
from conifold_forge.glue_solver import choose_alpha, probe_uniform_invertibility, solve_sl
from conifold_forge.reports import RunArtifacts

__version__ = "0.1.0"
__author__ = "conifold-forge"

__all__ = [
    # 几何对象
    "LagrangianCone",
    "End",
    "Conifold",
    "verify_decay",
    # 模型库
    "make_sl_plane_pair",
    "make_gamma_neck",
    "make_two_plane_scenario",
    "scenario_from_dict",
    # 谱
    "link_spectrum",
    "covering_spectrum",
    "exceptional_weights",
    "stability_check",
    # 连通和
    "GlueWeights",
    "GlueParameters",
    "build_connect_sum",
    # 算子与求解
    "linearize",
    "assemble_operator",
    "initial_residual_scaling",
    "choose_alpha",
    "probe_uniform_invertibility",
    "solve_sl",
    # 产物与配置
    "RunArtifacts",
    "load_config",
]
