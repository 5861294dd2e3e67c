# -*- coding: utf-8 -*-
"""
conifold_forge 异常类型

所有领域错误都继承自 ConifoldForgeError（RuntimeError 的子类），
CLI 据此把错误映射为退出码；参数形状错误仍直接抛 ValueError / TypeError。

调用方式::

    from conifold_forge.errors import NoContraction, BallEscape

    try:
        report = solve_sl(glued, params)
    except NoContraction as e:
        print(e)
"""


class ConifoldForgeError(RuntimeError):
    """conifold_forge 所有领域错误的基类。"""


# ────────────────────────────────────────────
# 几何核心
# ────────────────────────────────────────────

class DomainError(ConifoldForgeError):
    """参数点落在图卡定义域之外。"""


class DerivativeUnavailable(ConifoldForgeError):
    """图卡没有一阶/二阶导数求值器。"""


class DegenerateFrame(ConifoldForgeError):
    """切标架退化：诱导度量行列式 < 1e-14。"""


class OutOfNeighbourhood(ConifoldForgeError):
    """1-形式超出 Lagrangian 邻域半径 C·r。"""


class InsufficientSpan(ConifoldForgeError):
    """回归网格点数不足 8 个或跨度不足一个数量级。"""


# ────────────────────────────────────────────
# 模型库
# ────────────────────────────────────────────

class AngleSumError(ConifoldForgeError):
    """平面对的角度之和不等于 π。"""


class NotTransverse(ConifoldForgeError):
    """两个平面不横截（存在 0 或 π 的特征角）。"""


class NonSLCone(ConifoldForgeError):
    """锥不是特殊 Lagrangian 的。"""


# ────────────────────────────────────────────
# 谱
# ────────────────────────────────────────────

class MeshTooCoarse(ConifoldForgeError):
    """两级网格的 Richardson 外推结果相差超过 1%。"""


class WindowError(ConifoldForgeError):
    """权重不在余核维数公式适用的窗口内。"""


class SpectrumTruncated(ConifoldForgeError):
    """所给谱没有覆盖查询所需的特征值范围。"""


# ────────────────────────────────────────────
# 加权空间
# ────────────────────────────────────────────

class MissingDerivatives(ConifoldForgeError):
    """采样场缺少所需阶数的导数数组。"""


class QuadratureDivergence(ConifoldForgeError):
    """加密网格后范数变化超过 5%。"""


class NotEquivalent(ConifoldForgeError):
    """两个度量在加密后不再 scaled-equivalent。"""


class HypothesisViolated(ConifoldForgeError):
    """换权比较的前提条件不成立。"""


# ────────────────────────────────────────────
# 连通和
# ────────────────────────────────────────────

class DivergentPrimitive(ConifoldForgeError):
    """CS 端原函数在 0 处不收敛。"""


class DivergentTail(ConifoldForgeError):
    """AC 端原函数的尾积分不收敛。"""


class WindowCollapse(ConifoldForgeError):
    """颈部区间顺序 tR̂ < t^τ < 2t^τ < ε 不成立。"""


class ExponentOrder(ConifoldForgeError):
    """截断指数不满足 0 < b < a < τ。"""


class InterfaceMismatch(ConifoldForgeError):
    """相邻区域图卡在公共边界上的取值或导数不一致（> 1e-10）。"""


# ────────────────────────────────────────────
# 算子与求解器
# ────────────────────────────────────────────

class DiscretizationTooCoarse(ConifoldForgeError):
    """线性化与有限差分方向导数不一致。"""


class DimensionMismatch(ConifoldForgeError):
    """增广列数或秩与 d 不符。"""


class EmptyWindow(ConifoldForgeError):
    """α 的可行窗口为空。"""


class SingularOperator(ConifoldForgeError):
    """离散算子的下界 c(t) < 1e-12。"""


class NoContraction(ConifoldForgeError):
    """Picard 迭代不收缩。"""


class BallEscape(ConifoldForgeError):
    """迭代离开了球 B_{κ t^α}。"""


class ResidualTooLarge(ConifoldForgeError):
    """扰动后的曲面辛拉回或 SL 残差超过容差。"""
