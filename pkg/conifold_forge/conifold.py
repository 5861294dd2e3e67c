# -*- coding: utf-8 -*-
"""
锥、端与 conifold 数据模型

  LagrangianCone  —— 链环 Σ 上的锥 ι(θ, r) = r·L(θ)，带对称群维数 dim G
  End             —— CS / AC 端：锥、收敛率、中心 p、端图卡 (θ…, r)、范围 ε / R
  Conifold        —— 紧部分图卡 + 端列表 + 标记 S* + 连通分支划分

rescale_immersion 实现 t·ι 及端图卡的重参数化 φ_t(θ, r) = φ(θ, r/t)；
verify_decay 用 log–log 回归检验 |ι∘φ − (ι_cone + p)| = O(r^{rate−1})。

典型用法::

    from conifold_forge.conifold import rescale_immersion, verify_decay

    L_half = rescale_immersion(L, 0.5)
    report = verify_decay(L.ends[1], np.geomspace(2.0, 200.0, 24))
    print(report.slope, report.passed)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from conifold_forge.charts import ImmersionChart, LinkChart, cone_chart
from conifold_forge.errors import InsufficientSpan
from conifold_forge.geometry import omega_matrix, sl_residual
from conifold_forge.regression import PowerLawFit, check_span, fit_power_law

# 衰减率判定容差
DECAY_TOL = 0.05


# ────────────────────────────────────────────
# 锥
# ────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class LagrangianCone:
    link: LinkChart
    symmetry_dim: int = 0
    label: str = ""

    def __post_init__(self):
        if self.symmetry_dim < 0:
            raise ValueError(f"symmetry_dim 必须非负: {self.symmetry_dim}")

    @property
    def m(self) -> int:
        return self.link.m

    @property
    def planar(self) -> bool:
        return self.link.planar

    def immersion(self, theta: Sequence[float], r: float) -> np.ndarray:
        return r * self.link.point(np.asarray(theta, dtype=float))

    def chart(self, r_lo: float, r_hi: float, center: Optional[Sequence[complex]] = None) -> ImmersionChart:
        return cone_chart(self.link, r_lo, r_hi, center=center, label=f"cone({self.label})")

    def transformed(self, U: np.ndarray, label: str) -> "LagrangianCone":
        return LagrangianCone(self.link.transformed(U, label), self.symmetry_dim, label)

    def audit(self, rng: np.random.Generator, samples: int = 50) -> Dict[str, float]:
        """
        在链环样本上检查：单位范数误差、辛拉回最大值、r=1 处的 SL 残差最大值。
        """
        chart = self.chart(0.5, 2.0)
        unit, sym, res = 0.0, 0.0, 0.0
        for th in self.link.sample(samples, rng):
            unit = max(unit, abs(np.linalg.norm(self.link.point(th)) - 1.0))
            p = np.concatenate([th, [1.0]])
            sym = max(sym, float(np.max(np.abs(omega_matrix(chart.jac(p))))))
            res = max(res, abs(sl_residual(chart, p)))
        return {"unit_norm_error": unit, "symplectic_defect": sym, "sl_residual": res}


def real_projector(frame: np.ndarray) -> np.ndarray:
    """平面 U·ℝᵐ 作为 ℝ^{2m} 子空间的正交投影。"""
    B = np.vstack([np.real(frame), np.imag(frame)])
    Q, _ = np.linalg.qr(B)
    return Q @ Q.T


def cones_match(a: LagrangianCone, b: LagrangianCone, tol: float = 1e-10) -> bool:
    """平面锥比较实子空间；其余锥比较标签与链环类型。"""
    if a.m != b.m:
        return False
    if a.planar and b.planar:
        return bool(np.max(np.abs(real_projector(a.link.frame) - real_projector(b.link.frame))) <= tol)
    return a.label == b.label and a.link.kind == b.link.kind


# ────────────────────────────────────────────
# 端与 conifold
# ────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class End:
    """
    kind = "CS"：图卡定义在 Σ × (0, ε]，要求 rate = μ > 2；
    kind = "AC"：图卡定义在 Σ × [R, ∞)，要求 rate = λ < 2。
    """
    kind: str
    cone: LagrangianCone
    rate: float
    center: np.ndarray
    chart: ImmersionChart
    extent: float
    label: str = ""

    def __post_init__(self):
        if self.kind not in ("CS", "AC"):
            raise ValueError(f"端类型必须是 CS 或 AC: {self.kind!r}")
        if self.kind == "CS" and not self.rate > 2:
            raise ValueError(f"CS 端要求 μ > 2，收到 {self.rate}")
        if self.kind == "AC" and not self.rate < 2:
            raise ValueError(f"AC 端要求 λ < 2，收到 {self.rate}")
        if not self.extent > 0:
            raise ValueError(f"端范围必须为正: {self.extent}")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=complex))

    def radial_window(self) -> Tuple[float, float]:
        return (0.0, self.extent) if self.kind == "CS" else (self.extent, np.inf)

    def deviation(self, theta: np.ndarray, r: float) -> float:
        """|ι∘φ(θ, r) − (r·L(θ) + p)|。"""
        z = self.chart.eval(np.concatenate([theta, [r]]))
        return float(np.linalg.norm(z - self.cone.immersion(theta, r) - self.center))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "cone": self.cone.label,
            "rate": self.rate,
            "center": [[float(z.real), float(z.imag)] for z in self.center],
            "extent": self.extent,
            "chart": self.chart.label,
            "params": self.chart.meta.get("params", {}),
        }


@dataclass(frozen=True, eq=False)
class Conifold:
    """
    Args:
        m:              环境复维数（≥ 3）
        compact_charts: 紧部分图卡
        ends:           端列表
        marking:        标记端下标 S*（全 CS 或全 AC）
        components:     按连通分支划分的端下标
        special:        是否声明为 ℂᵐ 中的 SL（要求每个分支至少一个 AC 端）
        recipe:         重建该 conifold 的构造参数（model_zoo 的 builder 写入；为空时不可序列化重建）
    """
    m: int
    compact_charts: Tuple[ImmersionChart, ...]
    ends: Tuple[End, ...]
    marking: Tuple[int, ...] = ()
    components: Tuple[Tuple[int, ...], ...] = ()
    special: bool = False
    label: str = ""
    recipe: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.m < 3:
            raise ValueError(f"要求 m ≥ 3，收到 m={self.m}")
        object.__setattr__(self, "compact_charts", tuple(self.compact_charts))
        object.__setattr__(self, "ends", tuple(self.ends))
        object.__setattr__(self, "marking", tuple(self.marking))
        comps = tuple(tuple(c) for c in self.components) or (tuple(range(len(self.ends))),)
        object.__setattr__(self, "components", comps)
        n = len(self.ends)
        for i in self.marking:
            if not 0 <= i < n:
                raise ValueError(f"标记下标越界: {i}")
        kinds = {self.ends[i].kind for i in self.marking}
        if len(kinds) > 1:
            raise ValueError("标记必须全为 CS 端或全为 AC 端")
        flat = sorted(i for c in comps for i in c)
        if flat != list(range(n)):
            raise ValueError(f"components 必须是端下标的划分: {comps}")
        if self.special:
            for c in comps:
                if not any(self.ends[i].kind == "AC" for i in c):
                    raise ValueError(f"声明为 SL 的 conifold 每个连通分支都需要 AC 端: {c}")

    @property
    def marked_kind(self) -> Optional[str]:
        return self.ends[self.marking[0]].kind if self.marking else None

    @property
    def d(self) -> int:
        return len(self.marking)

    def component_of(self, end_index: int) -> int:
        for k, c in enumerate(self.components):
            if end_index in c:
                return k
        raise KeyError(end_index)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "label": self.label,
            "m": self.m,
            "special": self.special,
            "marking": list(self.marking),
            "components": [list(c) for c in self.components],
            "compact_charts": [c.label for c in self.compact_charts],
            "ends": [e.to_dict() for e in self.ends],
            "recipe": dict(self.recipe),
        }


# ────────────────────────────────────────────
# 伸缩与衰减
# ────────────────────────────────────────────

def rescale_end(end: End, t: float) -> End:
    n = end.cone.link.dim
    return End(end.kind, end.cone, end.rate, t * end.center,
               end.chart.rescaled(t, radial_index=n), t * end.extent, end.label)


def rescale_immersion(conifold: Conifold, t: float) -> Conifold:
    """
    t·ι：紧图卡直接伸缩；端图卡 φ_t(θ, r) = φ(θ, r/t)，范围与中心乘以 t，收敛率不变。
    """
    if not t > 0:
        raise ValueError(f"伸缩因子必须为正: {t}")
    return Conifold(
        conifold.m,
        tuple(c.rescaled(t) for c in conifold.compact_charts),
        tuple(rescale_end(e, t) for e in conifold.ends),
        conifold.marking, conifold.components, conifold.special,
        conifold.label + f"*{t:g}",
    )


@dataclass(frozen=True)
class DecayReport:
    slope: float
    constant: float
    expected: float
    passed: bool
    fit: PowerLawFit

    @property
    def exact(self) -> bool:
        return self.fit.exact


def verify_decay(end: End, r_grid: Sequence[float], theta_samples: Optional[np.ndarray] = None,
                 seed: int = 0) -> DecayReport:
    """
    对每个 r 取 θ 样本上的最大偏差，拟合 log–log 斜率；|斜率 − (rate−1)| ≤ 0.05 判定通过。
    偏差全为 0（精确锥）时报告斜率 −∞ 并判定通过。

    Raises:
        InsufficientSpan: 点数 < 8 或跨度不足一个数量级
    """
    r_grid = np.asarray(r_grid, dtype=float)
    check_span(r_grid)
    lo, hi = end.radial_window()
    if np.any(r_grid <= lo) or np.any(r_grid > hi * (1 + 1e-12)):
        raise InsufficientSpan(f"r 网格超出端的范围 ({lo}, {hi})")
    if theta_samples is None:
        theta_samples = end.cone.link.sample(16, np.random.default_rng(seed))
    dev = np.array([max(end.deviation(th, r) for th in theta_samples) for r in r_grid])
    floor = 1e-13 * max(1.0, float(np.max(r_grid)))
    fit = fit_power_law(r_grid, dev, floor=floor)
    expected = end.rate - 1.0
    passed = fit.exact or abs(fit.slope - expected) <= DECAY_TOL
    return DecayReport(fit.slope, fit.constant, expected, bool(passed), fit)
