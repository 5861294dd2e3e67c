# -*- coding: utf-8 -*-
"""
SL 残差映射 F_t、线性化 P_t、二次余项 Q_t 与增广系统

所有算子都作用在约化剖面的节点值 f_k = f(s_k) 上（SO(m)-不变扇区）：

  perturbed_half     —— 半节点上的扰动曲线 z_F = z + a·n，a 由 a·b − ½ψ′a² = f′ 解出
  residual_vector    —— 守恒形式 F_k = (q_{k+½} − q_{k−½}) / (m h V_k)，q = Im(z_F^m)，
                        star="induced" 时再乘 V_k / V_F；两端为 Dirichlet 行 F = f
  linearize          —— 三对角 P_t：κ_{k±½} = Im(z^{m−1} n)/b，V·P 精确对称
  quadratic_remainder / lipschitz_scaling —— Q = F − F(0) − P 的 Lipschitz 比值
  initial_residual_scaling —— ‖F_t(0)‖_{W^p_{1,β−2}} 对 t 的幂律
  assemble_augmented —— 按角向模式分块的加边系统（E₀、平移、su(m) 旋转）

平坦 ℝᵐ 上的对照公式 planar_residual(H) = Im det(I + iH) / √det(I + H²)。

典型用法::

    from conifold_forge.sl_operator import linearize, residual_vector

    op = linearize(glued)
    F0 = residual_vector(glued.curve, np.zeros(glued.curve.size))
    step = op.solve(F0)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.linalg import eigh_tridiagonal, solve_banded
from scipy.sparse.linalg import eigsh

from conifold_forge.config import map_in_order, progress
from conifold_forge.connect_sum import (
    GlueParameters,
    GluedConifold,
    GlueWeights,
    build_connect_sum,
)
from conifold_forge.errors import (
    DegenerateFrame,
    DimensionMismatch,
    DiscretizationTooCoarse,
    HypothesisViolated,
    OutOfNeighbourhood,
)
from conifold_forge.geometry import DEGENERATE_DET, omega
from conifold_forge.model_zoo import Scenario
from conifold_forge.profile import ReducedCurve, smoothstep
from conifold_forge.regression import PowerLawFit, check_span, fit_power_law
from conifold_forge.spectral import StabilityReport, su_basis
from conifold_forge.weighted_spaces import (
    SampledField,
    WeightSystem,
    warped_jets,
    weighted_ck_norm,
    weighted_sobolev_norm,
)

STARS = ("base", "induced")
# 支撑检查：环带外（留一个模板宽度）|F_t(0)| 的上限
SUPPORT_TOL = 1e-10
SINGULAR_TOL = 1e-12


# ────────────────────────────────────────────
# 平坦图的对照公式
# ────────────────────────────────────────────

def planar_residual(hess: np.ndarray, star: str = "induced") -> float:
    """
    ℝᵐ 上 df 的图 x ↦ x + i∇f 的 SL 残差：Im det(I + iH)，induced 时除以 √det(I + H²)。
    """
    H = np.asarray(hess, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError(f"Hessian 必须是方阵: {H.shape}")
    if star not in STARS:
        raise ValueError(f"未知的 star: {star!r}")
    I = np.eye(H.shape[0])
    val = float(np.imag(np.linalg.det(I + 1j * H)))
    if star == "base":
        return val
    g = np.linalg.det(I + H @ H)
    if g < DEGENERATE_DET:
        raise DegenerateFrame(f"det g = {g:.3e}")
    return val / float(np.sqrt(g))


def planar_remainder(hess: np.ndarray, star: str = "induced") -> float:
    """Q = F − tr H（平坦 ℝᵐ 上 F(0) = 0，P = Δ）。"""
    return planar_residual(hess, star) - float(np.trace(np.asarray(hess, dtype=float)))


# ────────────────────────────────────────────
# 剖面上的场
# ────────────────────────────────────────────

def curve_field(curve: ReducedCurve, values: np.ndarray, k: int, refine=None, label: str = "") -> SampledField:
    """节点值 → SampledField（度量 |z′|²ds² + |z|²g_S，差分求 |∇^j f|）。"""
    values = np.asarray(values, dtype=float)
    if values.shape != curve.s.shape:
        raise ValueError(f"场长度 {values.shape} 与网格 {curve.s.shape} 不一致")
    jets, fr = warped_jets(values, curve.h, curve.radius, curve.dradius, curve.speed, curve.m, k)
    return SampledField(curve.s, curve.vol, jets, values, fr if k >= 1 else None, refine, label)


@dataclass(frozen=True, eq=False)
class PerturbationField:
    """粘合剖面节点上的扰动 f（两端取 0）。"""
    values: np.ndarray
    curve: ReducedCurve = field(repr=False)
    label: str = "f"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.curve.s.shape:
            raise ValueError(f"场长度 {v.shape} 与网格 {self.curve.s.shape} 不一致")
        object.__setattr__(self, "values", v)

    @classmethod
    def zero(cls, curve: ReducedCurve) -> "PerturbationField":
        return cls(np.zeros(curve.size), curve, "0")

    @classmethod
    def bump(cls, curve: ReducedCurve, center: float, width: float, amplitude: float = 1.0) -> "PerturbationField":
        v = amplitude * np.exp(-((curve.s - center) / width) ** 2)
        v[0] = v[-1] = 0.0
        return cls(v, curve, f"bump({center:.3g},{width:.3g})")

    def scaled(self, c: float) -> "PerturbationField":
        return PerturbationField(c * self.values, self.curve, self.label)

    def field(self, k: int = 3) -> SampledField:
        return curve_field(self.curve, self.values, k, label=self.label)

    def norm(self, ws: WeightSystem, p: float, k: int = 3) -> float:
        """‖f‖_{W^p_{k,β_t}}。"""
        return weighted_sobolev_norm(self.field(k), ws, k, p, check=False)

    def c22(self, ws: WeightSystem) -> float:
        """‖f‖_{C²₂}：权重 ρ^{−2}。"""
        w2 = WeightSystem(ws.rho, np.full_like(ws.rho, 2.0), ws.rho ** -2.0, ws.m)
        return weighted_ck_norm(self.field(2), w2, 2)


# ────────────────────────────────────────────
# 非线性残差
# ────────────────────────────────────────────

def perturbed_half(curve: ReducedCurve, values: np.ndarray, neighbourhood: float = 0.1) -> np.ndarray:
    """
    半节点上的 z_F = z + a·n，ξ = (f_{k+1} − f_k)/h，a = 2ξ / (b(1 + √(1 − 2ψ′ξ/b²)))。

    Raises:
        OutOfNeighbourhood: 判别式为负，或核心区 |a|/|z| > neighbourhood
    """
    values = np.asarray(values, dtype=float)
    xi = np.diff(values) / curve.h
    b = curve.b_half
    disc = 1.0 - 2.0 * curve.dpsi_half * xi / (b * b)
    if np.any(disc < 0):
        raise OutOfNeighbourhood("扰动超出 Lagrangian 邻域（判别式为负）")
    a = 2.0 * xi / (b * (1.0 + np.sqrt(disc)))
    core = curve.core_half
    if np.any(core):
        ratio = np.max(np.abs(a[core]) / np.abs(curve.z_half[core]))
        if ratio > neighbourhood:
            raise OutOfNeighbourhood(f"核心区 |a|/|z| = {ratio:.3g} 超过 C = {neighbourhood}")
    return curve.z_half + a * curve.normal_half


def residual_vector(curve: ReducedCurve, values: np.ndarray, star: str = "base",
                    neighbourhood: float = 0.1) -> np.ndarray:
    """F_t(f) 的节点值。"""
    if star not in STARS:
        raise ValueError(f"未知的 star: {star!r}")
    values = np.asarray(values, dtype=float)
    m, h = curve.m, curve.h
    zf = perturbed_half(curve, values, neighbourhood)
    q = np.imag(zf ** m)
    V = curve.density
    out = np.empty(curve.size)
    out[1:-1] = (q[1:] - q[:-1]) / (m * h * V[1:-1])
    if star == "induced":
        zc = 0.5 * (zf[1:] + zf[:-1])
        dz = (zf[1:] - zf[:-1]) / h
        VF = np.abs(zc) ** (m - 1) * np.abs(dz)
        if np.any(VF <= 0):
            raise DegenerateFrame("扰动后的体积密度退化")
        out[1:-1] *= V[1:-1] / VF
    out[0], out[-1] = values[0], values[-1]
    return out


def F_eval(glued: GluedConifold, f: PerturbationField, star: str = "base") -> SampledField:
    """F_t(f) 作为 SampledField（带一阶导数）。"""
    vals = residual_vector(glued.curve, f.values, star, glued.params.neighbourhood)
    return curve_field(glued.curve, vals, 1, label=f"F({f.label})")


def initial_residual_field(glued: GluedConifold, star: str = "base") -> SampledField:
    """F_t(0)，refine 在加密一倍的粘合 conifold 上重算。"""
    def refine():
        fine = glued.refined()
        return initial_residual_field(fine, star), fine.ws.shifted(-2.0)

    vals = residual_vector(glued.curve, np.zeros(glued.curve.size), star, glued.params.neighbourhood)
    return curve_field(glued.curve, vals, 1, refine=refine, label="F_t(0)")


# ────────────────────────────────────────────
# 线性化
# ────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    """
    三对角算子：(P f)_k = lower_k f_{k−1} + diag_k f_k + upper_k f_{k+1}，首末行为单位行。
    """
    curve: ReducedCurve = field(repr=False)
    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray
    ws: Optional[WeightSystem] = field(default=None, repr=False)
    label: str = "P_t"

    @property
    def size(self) -> int:
        return int(self.diag.size)

    def apply(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        out = self.diag * f
        out[1:] += self.lower[1:] * f[:-1]
        out[:-1] += self.upper[:-1] * f[1:]
        return out

    def banded(self) -> np.ndarray:
        ab = np.zeros((3, self.size))
        ab[0, 1:] = self.upper[:-1]
        ab[1] = self.diag
        ab[2, :-1] = self.lower[1:]
        return ab

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return solve_banded((1, 1), self.banded(), np.asarray(rhs, dtype=float))

    def dense(self) -> np.ndarray:
        n = self.size
        A = np.diag(self.diag)
        A[np.arange(1, n), np.arange(n - 1)] = self.lower[1:]
        A[np.arange(n - 1), np.arange(1, n)] = self.upper[:-1]
        return A

    def symmetrized(self) -> Tuple[np.ndarray, np.ndarray]:
        """内部块 V^{1/2} P V^{−1/2} 的 (对角, 次对角)。"""
        V = self.curve.density[1:-1]
        d = self.diag[1:-1]
        e = self.upper[1:-2] * np.sqrt(V[:-1] / V[1:])
        return d, e

    def asymmetry(self) -> float:
        """内部块上 max |(VP) − (VP)ᵀ| / max |VP|。"""
        V = self.curve.density[1:-1]
        up = V[:-1] * self.upper[1:-2]
        lo = V[1:] * self.lower[2:-1]
        scale = max(float(np.max(np.abs(V * self.diag[1:-1]))), 1e-300)
        return float(np.max(np.abs(up - lo))) / scale

    def smallest_modes(self, k: int = 4) -> Tuple[np.ndarray, List[np.ndarray]]:
        """绝对值最小的 k 个特征值及对应的场（两端补 0）。"""
        d, e = self.symmetrized()
        n = d.size
        k = min(k, n)
        vals, vecs = eigh_tridiagonal(d, e, select="i", select_range=(n - k, n - 1))
        V = self.curve.density[1:-1]
        fields = []
        for j in range(vecs.shape[1]):
            f = np.zeros(self.size)
            f[1:-1] = vecs[:, j] / np.sqrt(V)
            fields.append(f)
        return vals, fields

    def rows(self) -> List[Dict[str, float]]:
        """带状矩阵的 CSV 行。"""
        return [{"s": float(s), "lower": float(a), "diag": float(b), "upper": float(c)}
                for s, a, b, c in zip(self.curve.s, self.lower, self.diag, self.upper)]

    def to_dict(self) -> Dict[str, Any]:
        return {"label": self.label, "size": self.size, "h": self.curve.h, "t": self.curve.t,
                "asymmetry": self.asymmetry(),
                "end_betas": {} if self.ws is None else dict(self.ws.end_betas)}


def _tridiagonal(curve: ReducedCurve, kappa: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    n = curve.size
    V = curve.density
    h2 = curve.h ** 2
    lower, diag, upper = np.zeros(n), np.ones(n), np.zeros(n)
    lower[1:-1] = kappa[:-1] / (h2 * V[1:-1])
    upper[1:-1] = kappa[1:] / (h2 * V[1:-1])
    diag[1:-1] = -(kappa[:-1] + kappa[1:]) / (h2 * V[1:-1])
    return lower, diag, upper


def assemble_operator(curve: ReducedCurve, ws: Optional[WeightSystem] = None, label: str = "P_t") -> DiscreteOperator:
    """F_base 在 f = 0 处的精确雅可比：κ = Im(z^{m−1}n)/b（半节点）。"""
    m = curve.m
    kappa = np.imag(curve.z_half ** (m - 1) * curve.normal_half) / curve.b_half
    lower, diag, upper = _tridiagonal(curve, kappa)
    return DiscreteOperator(curve, lower, diag, upper, ws, label)


def laplace_beltrami_stencil(curve: ReducedCurve) -> DiscreteOperator:
    """σ²ds² + |z|²g_S 上不变函数的 Laplace–Beltrami 守恒模板，W = |z|^{m−1}/|z′|。"""
    W = np.abs(curve.z_half) ** (curve.m - 1) / np.abs(curve.dz_half)
    lower, diag, upper = _tridiagonal(curve, W)
    return DiscreteOperator(curve, lower, diag, upper, None, "Delta_g")


def linearize(glued: GluedConifold) -> DiscreteOperator:
    return assemble_operator(glued.curve, glued.ws, label=f"P_t(t={glued.t:g})")


@dataclass(frozen=True)
class LinearizationReport:
    steps: Tuple[float, ...]
    errors: Tuple[float, ...]      # 每个步长上各场相对误差的最大值

    @property
    def passed(self) -> bool:
        return all(e <= 10.0 * h for h, e in zip(self.steps, self.errors))


def _c22_unit(curve: ReducedCurve, ws: WeightSystem, values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    scale = PerturbationField(values, curve).c22(ws)
    if scale == 0.0:
        raise ValueError("零场不能归一化")
    return values / scale


def linearization_check(glued: GluedConifold, fields: Sequence[np.ndarray],
                        steps: Sequence[float] = (1e-3, 1e-4), star: str = "base") -> LinearizationReport:
    """
    ‖(F(hf̂) − F(0))/h − P f̂‖_∞ / ‖P f̂‖_∞，f̂ = f / ‖f‖_{C²₂}。

    归一化后 h 是与尺度无关的扰动幅度，误差 / h 在 h → 0 时趋于常数。

    Raises:
        DiscretizationTooCoarse: 某个步长的误差超过 3 × 10h
    """
    curve, nb = glued.curve, glued.params.neighbourhood
    op = linearize(glued)
    unit = [_c22_unit(curve, glued.ws, f) for f in fields]
    F0 = residual_vector(curve, np.zeros(curve.size), star, nb)
    errors = []
    for h in steps:
        worst = 0.0
        for f in unit:
            Pf = op.apply(f)
            fd = (residual_vector(curve, h * f, star, nb) - F0) / h
            worst = max(worst, float(np.max(np.abs(fd - Pf)) / np.max(np.abs(Pf))))
        if worst > 30.0 * h:
            raise DiscretizationTooCoarse(f"步长 {h:g}: 线性化相对误差 {worst:.3e} > {30 * h:.1e}")
        errors.append(worst)
    return LinearizationReport(tuple(float(h) for h in steps), tuple(errors))


# ────────────────────────────────────────────
# 二次余项
# ────────────────────────────────────────────

def remainder_vector(glued: GluedConifold, values: np.ndarray, star: str = "base",
                     op: Optional[DiscreteOperator] = None) -> np.ndarray:
    """Q_t(f) = F(f) − F(0) − P f。"""
    curve, nb = glued.curve, glued.params.neighbourhood
    op = op or linearize(glued)
    return (residual_vector(curve, values, star, nb) - residual_vector(curve, np.zeros(curve.size), star, nb)
            - op.apply(values))


def remainder_ratios(glued: GluedConifold, values: np.ndarray, amplitudes: Sequence[float] = (1e-2, 1e-3, 1e-4),
                     star: str = "base") -> Tuple[float, ...]:
    """max|Q(εf̂)| / ε²，f̂ = f / ‖f‖_{C²₂}；Q 为二次时随 ε → 0 收敛，只有三次项时按 ε 递减。"""
    op = linearize(glued)
    unit = _c22_unit(glued.curve, glued.ws, values)
    return tuple(float(np.max(np.abs(remainder_vector(glued, eps * unit, star, op)))) / eps ** 2
                 for eps in amplitudes)


@dataclass(frozen=True)
class RemainderReport:
    difference: float     # ‖Q(f) − Q(g)‖_{W^p_{1,β−2}}
    step: float           # ‖f − g‖_{W^p_{3,β}}
    c22: float            # ‖f‖_{C²₂} + ‖g‖_{C²₂}

    @property
    def ratio(self) -> float:
        return 0.0 if self.step == 0.0 else self.difference / self.step

    @property
    def normalized(self) -> float:
        return 0.0 if self.c22 == 0.0 else self.ratio / self.c22


def quadratic_remainder(glued: GluedConifold, f: PerturbationField, g: PerturbationField,
                        star: str = "base") -> RemainderReport:
    p = glued.params.p
    op = linearize(glued)
    dq = remainder_vector(glued, f.values, star, op) - remainder_vector(glued, g.values, star, op)
    diff = weighted_sobolev_norm(curve_field(glued.curve, dq, 1), glued.ws.shifted(-2.0), 1, p, check=False)
    step = PerturbationField(f.values - g.values, glued.curve).norm(glued.ws, p)
    return RemainderReport(diff, step, f.c22(glued.ws) + g.c22(glued.ws))


@dataclass(frozen=True)
class LipschitzReport:
    t: Tuple[float, ...]
    ratios: Tuple[float, ...]
    fit: PowerLawFit
    expected: float


def lipschitz_scaling(scenario: Scenario, weights: GlueWeights, params: GlueParameters,
                    t_grid: Sequence[float], delta: float = 0.02, width: float = 0.15,
                    star: str = "base") -> LipschitzReport:
    """
    自相似核心场 f = δ t^α φ/‖φ‖_{W^p_{3,β}}（φ 为 s = 0 处宽 width 的高斯），g = f/2；
    Lipschitz 比值随 t 的拟合指数应接近 α + min(β − 2)。
    """
    ratios = []
    beta = None
    for t in t_grid:
        glued = build_connect_sum(scenario, weights, params.with_t(t))
        phi = PerturbationField.bump(glued.curve, 0.0, width)
        scale = delta * t ** params.alpha / phi.norm(glued.ws, params.p)
        f = phi.scaled(scale)
        rep = quadratic_remainder(glued, f, f.scaled(0.5), star)
        ratios.append(rep.ratio)
        beta = min(v for k, v in glued.ws.end_betas.items() if k.startswith("neck"))
        progress(f"lipschitz: t={t:g}, ratio={rep.ratio:.4e}")
    fit = fit_power_law(t_grid, ratios)
    return LipschitzReport(tuple(float(t) for t in t_grid), tuple(ratios), fit, params.alpha + beta - 2.0)


# ────────────────────────────────────────────
# 初始残差的缩放
# ────────────────────────────────────────────

@dataclass(frozen=True)
class ScalingReport:
    t: Tuple[float, ...]
    norms: Tuple[float, ...]
    fit: PowerLawFit
    predicted: float
    support_defect: float
    threshold: Optional[float]         # ‖F_t(0)‖ < κ t^α / 2 对所有 t ≤ threshold 成立
    strict_threshold: Optional[float]  # 同上，κ = 1

    @property
    def supported(self) -> bool:
        return self.support_defect <= SUPPORT_TOL

    def to_rows(self) -> List[Dict[str, float]]:
        return [{"t": t, "norm": n} for t, n in zip(self.t, self.norms)]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "t": list(self.t), "norms": list(self.norms),
            "exponent": self.fit.slope, "constant": self.fit.constant, "rms": self.fit.rms,
            "predicted": self.predicted, "support_defect": self.support_defect,
            "threshold": self.threshold, "strict_threshold": self.strict_threshold,
        }


def predicted_exponent(scenario: Scenario, weights: GlueWeights, tau: float) -> float:
    """min over necks of τ(2−β) + min{τ(μ−2), (1−τ)(2−λ̂)}。"""
    out = np.inf
    for i, j in scenario.pairing:
        mu = scenario.L.ends[i].rate
        lam = scenario.L_hat.ends[j].rate
        beta = weights.L_hat[j]
        out = min(out, tau * (2 - beta) + min(tau * (mu - 2), (1 - tau) * (2 - lam)))
    return float(out)


def _threshold(ts: np.ndarray, ok: np.ndarray) -> Optional[float]:
    best = None
    for t, good in zip(ts, ok):
        if not good:
            break
        best = float(t)
    return best


def initial_residual_scaling(scenario: Scenario, weights: GlueWeights, params: GlueParameters,
                             t_grid: Sequence[float], star: str = "base", threads: int = 1) -> ScalingReport:
    """
    对每个 t 计算 ‖F_t(0)‖_{W^p_{1,β_t−2}}（加密一级校验），拟合 t 的幂律指数。

    至多 threads 个 t 同时构造；结果与 threads = 1 逐位相同。

    Raises:
        InsufficientSpan: 少于 5 个 t 或跨度不足一个数量级
    """
    ts = np.sort(np.asarray(t_grid, dtype=float))
    check_span(ts, min_points=5, decades=1.0)

    def one(t: float) -> Tuple[float, float]:
        glued = build_connect_sum(scenario, weights, params.with_t(t))
        F0 = initial_residual_field(glued, star)
        norm = weighted_sobolev_norm(F0, glued.ws.shifted(-2.0), 1, params.p)
        c = glued.curve
        a = np.abs(c.s)
        outside = (a < c.s_T - c.h) | (a > c.s_2T + c.h)
        progress(f"scaling: t={t:g}, |F_t(0)|={norm:.4e}")
        return norm, float(np.max(np.abs(F0.values[outside])))

    results = map_in_order(one, ts.tolist(), threads)
    norms = [n for n, _ in results]
    support = max(s for _, s in results)
    norms_arr = np.asarray(norms)
    fit = fit_power_law(ts, norms_arr)
    bound = ts ** params.alpha / 2.0
    return ScalingReport(
        tuple(ts.tolist()), tuple(norms), fit, predicted_exponent(scenario, weights, params.tau), support,
        _threshold(ts, norms_arr < params.ball_constant * bound), _threshold(ts, norms_arr < bound),
    )


# ────────────────────────────────────────────
# 矩映射与增广系统
# ────────────────────────────────────────────

def translation_hamiltonian(v: Sequence[complex]):
    """H_v(z) = ω̃(v, z)，dH_v = ι_v ω̃。"""
    v = np.asarray(v, dtype=complex)
    return lambda z: omega(v, z)


def rotation_hamiltonian(X: np.ndarray):
    """H_X(z) = ½ ω̃(Xz, z)，dH_X = ι_{Xz} ω̃。"""
    X = np.asarray(X, dtype=complex)
    return lambda z: 0.5 * omega(X @ z, z)


def hamiltonian_fd_check(m: int, samples: int = 100, seed: int = 0, step: float = 1e-5) -> float:
    """
    随机点 z、方向 Y 上 |dH(Y) − ω̃(V(z), Y)| 的最大值（中心差分），
    V 取随机平移 v 或随机 su(m) 生成元 X 的 Xz。
    """
    rng = np.random.default_rng(seed)
    gens = su_basis(m)
    worst = 0.0
    for _ in range(samples):
        z = rng.normal(size=m) + 1j * rng.normal(size=m)
        Y = rng.normal(size=m) + 1j * rng.normal(size=m)
        v = rng.normal(size=m) + 1j * rng.normal(size=m)
        X = sum(c * G for c, G in zip(rng.normal(size=len(gens)), gens))
        for H, V in ((translation_hamiltonian(v), v), (rotation_hamiltonian(X), X @ z)):
            fd = (H(z + step * Y) - H(z - step * Y)) / (2.0 * step)
            worst = max(worst, abs(fd - omega(V, Y)))
    return float(worst)


@dataclass(frozen=True)
class Generator:
    """
    增广列的生成元：mode 为角向模式，H 为对应的 Hamiltonian（E₀ 为 None），
    direction 为取剖面的单位方向 θ，沿射线 d·θ 求值得到径向剖面。
    """
    mode: int
    index: int
    name: str
    H: Any = field(default=None, repr=False)
    direction: Optional[np.ndarray] = field(default=None, repr=False)

    def profile(self, dist: np.ndarray) -> np.ndarray:
        if self.H is None:
            return np.ones_like(dist)
        return np.array([self.H(d * self.direction) for d in dist])


def retained_generators(m: int, symmetry_dim: int = 0) -> List[Generator]:
    """
    E₀ 的 v、2m 个平移 v ∈ {e_k, i e_k}（θ = iv/|v|，H_v(dθ) = |v| d）、
    su(m) 的前 m² − 1 − dim G 个基元 X（θ 取 iX 模最大特征值的特征向量，H_X(dθ) = ½λd²）。
    """
    gens = [Generator(0, 0, "v")]
    for k in range(2 * m):
        v = np.zeros(m, dtype=complex)
        v[k % m] = 1.0 if k < m else 1j
        gens.append(Generator(1, k, f"translation{k}", translation_hamiltonian(v), 1j * v / np.linalg.norm(v)))
    for k, X in enumerate(su_basis(m)[: m * m - 1 - symmetry_dim]):
        lam, vecs = np.linalg.eigh(1j * X)
        gens.append(Generator(2, k, f"rotation{k}", rotation_hamiltonian(X), vecs[:, int(np.argmax(np.abs(lam)))]))
    return gens


@dataclass(frozen=True)
class RetainedEnd:
    """
    保留下来的 CS 端（合成数据）：site 为剖面上奇点所在的 s 坐标，
    χ_t 在弧长距离 ≤ ε/4 内为 1，[ε/4, ε/2] 上 smoothstep 衰减到 0。
    """
    label: str
    site: float = 0.0
    symmetry_dim: int = 0
    t: float = 1.0
    beta: float = -0.5
    stability: Optional[StabilityReport] = None

    def generators(self, m: int) -> int:
        return 1 + 2 * m + m * m - 1 - self.symmetry_dim


@dataclass(frozen=True)
class AugmentedBlock:
    label: str
    mode: int                  # 角向模式 ℓ（0: E₀，1: 平移，2: 旋转）
    columns: Tuple[str, ...]
    matrix: sparse.csc_matrix = field(repr=False)
    profiles: Tuple[np.ndarray, ...] = field(default=(), repr=False)   # 每列的节点剖面 χ·H(dθ)

    def smallest_singular_value(self) -> float:
        """对称加边矩阵离 0 最近的特征值之模（shift-invert）；矩阵奇异时为 0。"""
        try:
            vals = eigsh(self.matrix, k=1, sigma=0.0, which="LM", return_eigenvectors=False)
        except RuntimeError:
            return 0.0
        return float(abs(vals[0]))


@dataclass(frozen=True)
class AugmentedSystem:
    base: DiscreteOperator = field(repr=False)
    blocks: Tuple[AugmentedBlock, ...]
    d: int

    @property
    def added_columns(self) -> int:
        return sum(len(b.columns) for b in self.blocks)

    def smallest_singular_value(self) -> float:
        """各块最小奇异值；没有保留端时退化为 P_t 的最小特征值模。"""
        if not self.blocks:
            return float(np.min(np.abs(self.base.smallest_modes(1)[0])))
        return float(min(b.smallest_singular_value() for b in self.blocks))


def _collar(curve: ReducedCurve, site: float, eps: float) -> Tuple[np.ndarray, np.ndarray]:
    """弧长距离 d(s) 与截断 χ(d)。"""
    arc = np.concatenate([[0.0], np.cumsum(0.5 * (curve.speed[1:] + curve.speed[:-1]) * curve.h)])
    d = np.abs(arc - np.interp(site, curve.s, arc))
    chi = 1.0 - smoothstep((d - 0.25 * eps) / (0.25 * eps))
    return d, chi


def _mode_operator(op: DiscreteOperator, mode: int) -> sparse.csc_matrix:
    """内部块 V^{1/2}(P − e_ℓ/|z|²)V^{−1/2}，e_ℓ = ℓ(ℓ + m − 2)。"""
    c = op.curve
    d, e = op.symmetrized()
    ev = mode * (mode + c.m - 2)
    return sparse.diags([e, d - ev / c.radius[1:-1] ** 2, e], [-1, 0, 1], format="csc")


def assemble_augmented(glued: GluedConifold, retained: Sequence[RetainedEnd]) -> AugmentedSystem:
    """
    P̃_t：对每个角向模式加入 χ_t(ẽ) 与 v_i 的像，并以 V-内积加边成方阵

        [[S_ℓ, C],[Cᵀ, 0]]，S_ℓ = V^{1/2}P_ℓV^{−1/2}，C 的列为 V^{1/2}P_ℓ(χ·H(dθ)) 归一后乘 t^{2−β}。

    列剖面直接由 translation_hamiltonian / rotation_hamiltonian 沿射线求值，
    E₀ 的 v_i 进入 ℓ = 0 块，2m 个平移各占一个 ℓ = 1 块，m² − 1 − dim G 个旋转各占一个 ℓ = 2 块。

    Raises:
        DimensionMismatch: 列数不等于 d，或某个块的列线性相关
        HypothesisViolated: 保留端带有不稳定的稳定性报告
    """
    op = linearize(glued)
    c = op.curve
    m = c.m
    V = np.sqrt(c.density[1:-1])
    for end in retained:
        if end.stability is not None and not end.stability.stable:
            raise HypothesisViolated(f"保留端 {end.label} 不稳定: {end.stability.status}")
    d_expected = sum(end.generators(m) for end in retained)
    if not retained:
        return AugmentedSystem(op, (), 0)

    operators = {mode: _mode_operator(op, mode) for mode in (0, 1, 2)}
    groups: Dict[Tuple[int, int], List[Tuple[str, np.ndarray, np.ndarray]]] = {}
    for end in retained:
        dist, chi = _collar(c, end.site, glued.params.eps)
        factor = end.t ** (2.0 - end.beta)
        for gen in retained_generators(m, end.symmetry_dim):
            prof = chi * gen.profile(dist)
            col = operators[gen.mode] @ (V * prof[1:-1])
            nrm = float(np.linalg.norm(col))
            if nrm == 0.0:
                raise DimensionMismatch(f"{end.label}/{gen.name} 的像为零")
            groups.setdefault((gen.mode, gen.index), []).append(
                (f"{end.label}/{gen.name}", factor * col / nrm, prof))

    blocks = []
    total = 0
    for (mode, k), cols in sorted(groups.items()):
        C = np.stack([col for _, col, _ in cols], axis=1)
        if np.linalg.matrix_rank(C, tol=1e-10 * np.max(np.abs(C))) < C.shape[1]:
            raise DimensionMismatch(f"模式 ℓ={mode} 第 {k} 块的增广列线性相关: {[n for n, _, _ in cols]}")
        Cs = sparse.csc_matrix(C)
        B = sparse.bmat([[operators[mode], Cs], [Cs.T, None]], format="csc")
        blocks.append(AugmentedBlock(f"l{mode}/{k}", mode, tuple(n for n, _, _ in cols), B,
                                     tuple(p for _, _, p in cols)))
        total += C.shape[1]
    if total != d_expected:
        raise DimensionMismatch(f"增广列数 {total} ≠ d = {d_expected}")
    return AugmentedSystem(op, tuple(blocks), d_expected)
