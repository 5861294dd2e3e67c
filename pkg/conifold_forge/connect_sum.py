# -*- coding: utf-8 -*-
"""
Lagrangian 连通和：相容性检查、生成函数原函数、插值 A_t、粘合 conifold L_t

  check_compatibility  —— 锥一致、R̂ ≤ ε、标记端 scaled-equivalent、中心一致、λ̂ < 0、权重匹配
  primitive_cs / primitive_ac / rescale_primitive / interpolate_primitive
                       —— A = ∫₀^r α₂，Â = −∫_r^∞ α̂₂，Â_t = t²Â(r/t)，A_t = G·A + (1−G)·Â_t
  build_connect_sum    —— 平面对场景的 L_t：约化剖面曲线、区域图卡、ρ_t / β_t / w_t
  neck_metric_defect   —— 插值环带上 |∇^j(g_t − g̃)|_{g̃} 的上确界
  make_cutoff_eta      —— η_t：r ≤ t^a 为 1，r ≥ t^b 为 0，中间关于 log r 线性

区域划分（两侧对称，第 i 侧对应第 i 个颈）：
  hat     —— 核心区 |s| ≤ s_a，ι_t = t·λ(s)·L(θ)
  neck:i  —— r ∈ [tR̂, ε]，ι_t = (r + i·A_t′(r))·L(θ)（第二侧取共轭并乘 e^{iπ/m}）
  L:i     —— r ≥ ε，ι_t ≡ ι

典型用法::

    from conifold_forge.model_zoo import make_two_plane_scenario
    from conifold_forge.connect_sum import GlueParameters, GlueWeights, build_connect_sum

    sc = make_two_plane_scenario(3)
    glued = build_connect_sum(sc, GlueWeights.uniform(sc, -0.5), GlueParameters.uniform(0.1, 2))
    print(glued.interface_defect)
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from conifold_forge.charts import ImmersionChart, cone_chart, profile_chart
from conifold_forge.config import progress
from conifold_forge.conifold import End, cones_match
from conifold_forge.errors import (
    DivergentPrimitive,
    DivergentTail,
    ExponentOrder,
    HypothesisViolated,
    InterfaceMismatch,
    NotEquivalent,
    WindowCollapse,
)
from conifold_forge.geometry import GraphOneForm, induced_metric, omega_matrix
from conifold_forge.model_zoo import GammaNeck, Scenario
from conifold_forge.profile import (
    GluedPotential,
    HatProfile,
    ReducedCurve,
    build_glued_curve,
    cutoff_G,
    glued_radius,
    smoothstep,
)
from conifold_forge.regression import fit_power_law
from conifold_forge.weighted_spaces import WeightSystem, scaled_equivalence_constants

INTERFACE_TOL = 1e-10
# 平面 L 上 β 从 CS 值过渡到 AC 值的区间 [ε, R_L]
PLANE_AC_RADIUS = 2.0

Primitive = Callable[[Sequence[float], float], float]


# ────────────────────────────────────────────
# 参数
# ────────────────────────────────────────────

@dataclass(frozen=True)
class GlueParameters:
    """
    t:     每个颈的尺度参数
    tau:   环带位置 t^τ
    alpha: 求解球 B_{t^α} 的指数
    p:     Sobolev 指数（> m）
    M:     扇形比例上界 max t / min t < M
    a, b:  η_t 的支撑指数，0 < b < a < τ
    ball_constant: 求解球半径 κ·t^α 中的 κ（默认 1，即 B_{t^α}）
    annulus_refine: 插值环带内网格相对远处的加密倍数（≥ 1）
    """
    t: Tuple[float, ...]
    tau: float = 0.8
    alpha: float = 2.55
    p: float = 4.0
    M: float = 4.0
    cutoff: str = "quintic"
    a: float = 0.6
    b: float = 0.3
    eps: float = 1.0
    R_hat: float = 1.0
    r_max: float = 100.0
    ball_constant: float = 1.0
    neighbourhood: float = 0.1
    points_per_decade: int = 96
    annulus_refine: float = 8.0

    def __post_init__(self):
        ts = tuple(float(x) for x in np.atleast_1d(self.t))
        object.__setattr__(self, "t", ts)
        if not ts or any(not x > 0 for x in ts):
            raise ValueError(f"t 必须是正数序列: {self.t}")
        if not 0.0 < self.tau < 1.0:
            raise ValueError(f"τ 必须在 (0,1) 内: {self.tau}")
        if self.M < 1.0:
            raise ValueError(f"M 必须 ≥ 1: {self.M}")
        if max(ts) / min(ts) >= self.M and len(ts) > 1:
            raise ValueError(f"t 不在扇形内: max/min = {max(ts) / min(ts):.3g} ≥ M = {self.M}")
        if self.cutoff != "quintic":
            raise ValueError(f"未知的截断函数: {self.cutoff!r}")
        if not self.R_hat <= self.eps:
            raise ValueError(f"要求 R̂ ≤ ε，收到 R̂={self.R_hat}, ε={self.eps}")
        if self.points_per_decade < 64:
            raise ValueError("points_per_decade 至少为 64")
        if self.annulus_refine < 1.0:
            raise ValueError(f"annulus_refine 必须 ≥ 1: {self.annulus_refine}")
        if not self.ball_constant > 0:
            raise ValueError(f"ball_constant 必须为正: {self.ball_constant}")

    @classmethod
    def uniform(cls, t: float, necks: int, **kw) -> "GlueParameters":
        return cls(tuple([float(t)] * necks), **kw)

    @classmethod
    def from_config(cls, cfg: Dict[str, Any], t: float, necks: int, **kw) -> "GlueParameters":
        """用 load_config() 的 neighbourhood / points_per_decade / ball_constant 作为默认值。"""
        base = {
            "neighbourhood": cfg.get("neighbourhood", 0.1),
            "points_per_decade": cfg.get("points_per_decade", 96),
            "ball_constant": cfg.get("ball_constant", 1.0),
        }
        base.update(kw)
        return cls.uniform(t, necks, **base)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GlueParameters":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in data.items() if k in known})

    def with_t(self, t: float) -> "GlueParameters":
        return replace(self, t=tuple([float(t)] * len(self.t)))

    def to_dict(self) -> Dict[str, Any]:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out["t"] = list(self.t)
        return out


@dataclass(frozen=True)
class GlueWeights:
    """L 与 L̂ 每个端的权重 β（按端下标）。"""
    L: Tuple[float, ...]
    L_hat: Tuple[float, ...]

    @classmethod
    def uniform(cls, scenario: Scenario, beta: float = -0.5) -> "GlueWeights":
        n_hat = 0 if scenario.L_hat is None else len(scenario.L_hat.ends)
        return cls(tuple([float(beta)] * len(scenario.L.ends)), tuple([float(beta)] * n_hat))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GlueWeights":
        return cls(tuple(float(b) for b in data["L"]), tuple(float(b) for b in data["L_hat"]))

    def to_dict(self) -> Dict[str, Any]:
        return {"L": list(self.L), "L_hat": list(self.L_hat)}


# ────────────────────────────────────────────
# 相容性
# ────────────────────────────────────────────

@dataclass(frozen=True)
class CompatibilityReport:
    conditions: Dict[str, bool]
    details: Dict[str, str] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.conditions.values())

    def failures(self) -> List[str]:
        return [k for k, ok in self.conditions.items() if not ok]

    def to_dict(self) -> Dict[str, Any]:
        return {"passed": self.passed, "conditions": dict(self.conditions), "details": dict(self.details)}


def _end_equivalent(end: End, samples: int = 24) -> bool:
    """端图卡与锥图卡的诱导度量在端的径向窗口内 scaled-equivalent。"""
    link = end.cone.link
    theta = list(0.5 * (link.lower + link.upper))
    if end.kind == "AC":
        rho = np.geomspace(end.extent * 1.01, 50.0 * end.extent, samples)
    else:
        rho = np.geomspace(end.extent / 100.0, end.extent * 0.99, samples)
    base = cone_chart(link, rho[0] / 2.0, np.inf)
    try:
        g1 = np.array([induced_metric(base, theta + [r]) for r in rho])
        g2 = np.array([induced_metric(end.chart, theta + [r]) for r in rho])
        rep = scaled_equivalence_constants(g1, g2, rho, j_max=1)
    except NotEquivalent:
        return False
    return bool(np.isfinite(rep.c0))


def check_compatibility(scenario: Scenario, weights: GlueWeights,
                        params: Optional[GlueParameters] = None) -> CompatibilityReport:
    """
    逐条检查标记的 (L, L̂) 是否可以粘合，失败写入报告而不抛错。

    条件：cones（配对端的锥一致）、radii（R̂ ≤ ε）、scaled_equivalence（标记端）、
    centers（同一 L̂ 分支的中心一致，L̂ 标记端中心为 0）、rates（λ̂ < 0）、
    weights（β_i = β̂_i，且同一 L̂ 分支内 β̂ 相同）。
    """
    names = ("cones", "radii", "scaled_equivalence", "centers", "rates", "weights")
    if scenario.L_hat is None:
        return CompatibilityReport({k: False for k in names}, {"L_hat": "场景没有 L̂"})
    L, Lh = scenario.L, scenario.L_hat
    if len(weights.L) != len(L.ends) or len(weights.L_hat) != len(Lh.ends):
        raise ValueError("权重个数与端数不一致")
    params = params or GlueParameters((1.0,))
    cond: Dict[str, bool] = {}
    details: Dict[str, str] = {}

    bad = [p for p in scenario.pairing if not cones_match(L.ends[p[0]].cone, Lh.ends[p[1]].cone)]
    cond["cones"] = not bad
    if bad:
        details["cones"] = f"锥不一致的配对: {bad}"

    cond["radii"] = params.R_hat <= params.eps
    if not cond["radii"]:
        details["radii"] = f"R̂ = {params.R_hat} > ε = {params.eps}"

    bad_eq = [f"L:{i}" for i, _ in scenario.pairing if not _end_equivalent(L.ends[i])]
    bad_eq += [f"L_hat:{j}" for _, j in scenario.pairing if not _end_equivalent(Lh.ends[j])]
    cond["scaled_equivalence"] = not bad_eq
    if bad_eq:
        details["scaled_equivalence"] = f"不等价的端: {bad_eq}"

    center_ok = all(np.allclose(Lh.ends[j].center, 0.0, atol=1e-12) for _, j in scenario.pairing)
    for comp in Lh.components:
        centers = [L.ends[i].center for i, j in scenario.pairing if j in comp]
        center_ok = center_ok and all(np.allclose(c, centers[0], atol=1e-12) for c in centers)
    cond["centers"] = bool(center_ok)
    if not center_ok:
        details["centers"] = "同一 L̂ 分支对应的 CS 中心不一致，或 L̂ 标记端中心不为 0"

    bad_rate = [j for _, j in scenario.pairing if not Lh.ends[j].rate < 0]
    cond["rates"] = not bad_rate
    if bad_rate:
        details["rates"] = f"λ̂ ≥ 0 的端: {bad_rate}"

    bad_w = [p for p in scenario.pairing if weights.L[p[0]] != weights.L_hat[p[1]]]
    for comp in Lh.components:
        vals = {weights.L_hat[j] for j in comp}
        if len(vals) > 1:
            bad_w.append(("component", tuple(comp)))
    cond["weights"] = not bad_w
    if bad_w:
        details["weights"] = f"权重不匹配: {bad_w}"
    return CompatibilityReport(cond, details)


# ────────────────────────────────────────────
# 原函数
# ────────────────────────────────────────────

def _alpha2(form: GraphOneForm, theta: Sequence[float]) -> Callable[[float], float]:
    th = np.asarray(theta, dtype=float)
    return lambda r: form.components(th, r)[1]


def _quad(fn: Callable[[float], float], lo: float, hi: float, error: type) -> float:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", IntegrationWarning)
        try:
            val, err = quad(fn, lo, hi, limit=200, epsabs=0.0, epsrel=1e-11)
        except (ZeroDivisionError, OverflowError) as e:
            raise error(f"数值积分不收敛: {e}") from e
    flagged = any(issubclass(w.category, IntegrationWarning) for w in caught)
    if not np.isfinite(val) or (flagged and err > 1e-8 * max(1.0, abs(val))):
        raise error(f"数值积分不收敛: {val} ± {err}")
    return float(val)


def primitive_cs(form: GraphOneForm, mu: float) -> Primitive:
    """
    CS 端：A(θ, r) = ∫₀^r α₂(θ, ρ) dρ。

    Raises:
        DivergentPrimitive: μ ≤ 2，或积分在 0 处不收敛
    """
    if not mu > 2:
        raise DivergentPrimitive(f"CS 端原函数要求 μ > 2，收到 μ={mu}")
    if form.is_zero:
        return lambda theta, r: 0.0

    def A(theta, r):
        if r <= 0:
            return 0.0
        return _quad(_alpha2(form, theta), 0.0, float(r), DivergentPrimitive)

    return A


def primitive_ac(form: GraphOneForm, lam_hat: float, tail_start: float = 1e3) -> Primitive:
    """
    AC 端：Â(θ, r) = −∫_r^∞ α̂₂(θ, ρ) dρ。

    [r, R] 上数值积分（R = max(tail_start, 10r)），[R, ∞) 上用最后一个十倍程拟合的
    幂律 α̂₂ ≈ C·ρ^k 解析积分。

    Raises:
        DivergentTail: λ̂ ≥ 0，或拟合斜率 k ≥ −1
    """
    if not lam_hat < 0:
        raise DivergentTail(f"AC 端原函数要求 λ̂ < 0，收到 λ̂={lam_hat}")
    if form.is_zero:
        return lambda theta, r: 0.0

    def A(theta, r):
        a2 = _alpha2(form, theta)
        R = max(tail_start, 10.0 * float(r))
        grid = np.geomspace(R / 10.0, R, 12)
        vals = np.array([a2(x) for x in grid])
        fit = fit_power_law(grid, vals, floor=1e-300)
        tail = 0.0
        if not fit.exact:
            if not fit.slope < -1.0:
                raise DivergentTail(f"尾部拟合斜率 {fit.slope:.3f} ≥ −1，积分发散")
            tail = np.sign(vals[-1]) * fit.constant * R ** (fit.slope + 1.0) / (-(fit.slope + 1.0))
        # 以 log ρ 为积分变量
        body = _quad(lambda u: a2(np.exp(u)) * np.exp(u), np.log(float(r)), np.log(R), DivergentTail)
        return -(body + tail)

    return A


def rescale_primitive(A_hat: Primitive, t: float) -> Primitive:
    """Â_t(θ, r) = t²·Â(θ, r/t)。"""
    if not t > 0:
        raise ValueError(f"t 必须为正: {t}")
    if t == 1.0:
        return A_hat
    return lambda theta, r: t * t * A_hat(theta, r / t)


def _window(params: GlueParameters, neck: int) -> Tuple[float, float]:
    t = params.t[neck]
    T = t ** params.tau
    if not (t * params.R_hat < T and 2.0 * T < params.eps):
        raise WindowCollapse(
            f"颈 {neck}: 需要 tR̂ < t^τ < 2t^τ < ε，收到 {t * params.R_hat:.4g}, {T:.4g}, {2 * T:.4g}, {params.eps}")
    return t, T


def interpolate_primitive(A: Primitive, A_hat_t: Primitive, params: GlueParameters, neck: int = 0) -> Primitive:
    """
    A_t(θ, r) = G(r/t^τ)·A + (1 − G(r/t^τ))·Â_t；r ≤ t^τ 时精确等于 Â_t，r ≥ 2t^τ 时精确等于 A。

    Raises:
        WindowCollapse: tR̂ < t^τ < 2t^τ < ε 不成立
    """
    _, T = _window(params, neck)

    def A_t(theta, r):
        g = float(cutoff_G(r / T))
        if g == 0.0:
            return A_hat_t(theta, r)
        if g == 1.0:
            return A(theta, r)
        return g * A(theta, r) + (1.0 - g) * A_hat_t(theta, r)

    return A_t


# ────────────────────────────────────────────
# 粘合 conifold
# ────────────────────────────────────────────

@lru_cache(maxsize=8)
def hat_profile(neck: GammaNeck) -> HatProfile:
    return HatProfile(neck)


def _side_betas(scenario: Scenario, weights: GlueWeights) -> List[Tuple[float, float, int, int]]:
    """每个配对：(β_CS = β̂, β_AC, CS 端下标, AC 端下标)。"""
    out = []
    L = scenario.L
    for i, j in scenario.pairing:
        comp = L.components[L.component_of(i)]
        ac = [k for k in comp if L.ends[k].kind == "AC"]
        if not ac:
            raise ValueError(f"L 的端 {i} 所在分支没有 AC 端")
        out.append((weights.L_hat[j], weights.L[ac[0]], i, ac[0]))
    return out


def glued_weight_system(hat: HatProfile, scenario: Scenario, weights: GlueWeights,
                        params: GlueParameters, s_a: float, nodes: np.ndarray) -> WeightSystem:
    """
    ρ_t、β_t、w_t = ρ_t^{−β_t}：颈与核心区 β 取 β̂，平面 L 上在 [ε, 2] 内
    由 β_CS 光滑过渡到 β_AC。第一侧（s ≥ 0）对应第一个配对。
    """
    t = params.t[0]
    sides = _side_betas(scenario, weights)
    s = np.asarray(nodes, dtype=float)
    rho = glued_radius(hat, t, s, s_a)
    beta = np.empty_like(rho)
    for k, mask in enumerate((s >= 0, s < 0)):
        b_cs, b_ac, _, _ = sides[min(k, len(sides) - 1)]
        ramp = smoothstep((rho[mask] - params.eps) / (PLANE_AC_RADIUS - params.eps))
        beta[mask] = b_cs + (b_ac - b_cs) * ramp
    end_betas = {}
    for k, (b_cs, b_ac, _, ac) in enumerate(sides):
        end_betas[f"AC:{ac}"] = b_ac
        end_betas[f"neck:{k}"] = b_cs
    end_betas["hat:0"] = sides[0][0]
    return WeightSystem(rho, beta, rho ** (-beta), hat.m, end_betas,
                        lambda new: glued_weight_system(hat, scenario, weights, params, s_a, new))


@dataclass(frozen=True, eq=False)
class GluedConifold:
    """
    平面对场景的连通和 L_t。

    curve:     约化剖面（所有算子与范数都在它的 s 网格上计算）
    ws:        ρ_t、β_t、w_t
    regions:   hat / neck:i / L:i 区域图卡
    potential: 第一侧的插值势函数 A_t
    """
    scenario: Scenario
    weights: GlueWeights
    params: GlueParameters
    hat: HatProfile
    curve: ReducedCurve
    ws: WeightSystem
    regions: Dict[str, ImmersionChart]
    potential: GluedPotential
    interface_defect: float
    compatibility: CompatibilityReport

    @property
    def m(self) -> int:
        return self.curve.m

    @property
    def t(self) -> float:
        return self.params.t[0]

    @property
    def T(self) -> float:
        return self.curve.T

    def refined(self) -> "GluedConifold":
        """网格加密一倍的同一连通和。"""
        fine = replace(self.params, points_per_decade=2 * self.params.points_per_decade)
        return build_connect_sum(self.scenario, self.weights, fine, check=False)

    def to_dict(self) -> Dict[str, Any]:
        c = self.curve
        return {
            "scenario": self.scenario.recipe,
            "params": self.params.to_dict(),
            "weights": self.weights.to_dict(),
            "grid": {"points": c.size, "h": c.h, "s_a": c.s_a, "s_T": c.s_T, "s_2T": c.s_2T,
                     "s_eps": c.s_eps},
            "regions": sorted(self.regions),
            "end_betas": dict(self.ws.end_betas),
            "interface_defect": self.interface_defect,
            "compatibility": self.compatibility.to_dict(),
        }


def _region_charts(hat: HatProfile, scenario: Scenario, pot: GluedPotential,
                   params: GlueParameters, s_a: float) -> Dict[str, ImmersionChart]:
    neck = scenario.neck
    link = neck.cone.link
    link2 = neck.ends[1].cone.link
    t, eps, lo = pot.t, params.eps, pot.t * params.R_hat

    def lam(s):
        return t * hat.lam(s)[0]

    def dlam(s):
        return t * hat.lam(s)[1]

    def d2lam(s):
        return t * hat.lam(s)[2]

    def jet(r):
        j = pot.at_r(r)
        return float(j.a1), float(j.a2), float(j.a3)

    return {
        "hat": profile_chart(link, lam, dlam, d2lam, -s_a, s_a, coord="s", label="L_t/hat"),
        "neck:0": profile_chart(link, lambda r: r + 1j * jet(r)[0], lambda r: 1.0 + 1j * jet(r)[1],
                                lambda r: 1j * jet(r)[2], lo, eps, label="L_t/neck:0"),
        "neck:1": profile_chart(link2, lambda r: r - 1j * jet(r)[0], lambda r: 1.0 - 1j * jet(r)[1],
                                lambda r: -1j * jet(r)[2], lo, eps, label="L_t/neck:1"),
        "L:0": cone_chart(link, eps, np.inf, label="L_t/L:0"),
        "L:1": cone_chart(link2, eps, np.inf, label="L_t/L:1"),
    }


def interface_defects(regions: Dict[str, ImmersionChart], hat: HatProfile, t: float, s_a: float,
                      R_hat: float, eps: float, samples: int = 8, seed: int = 0) -> float:
    """三类区域边界上的取值与一阶导数（按链式法则换算到同一参数）的最大差。"""
    n = regions["hat"].lower.size - 1
    rng = np.random.default_rng(seed)
    lo = np.asarray(regions["hat"].lower[:n])
    hi = np.asarray(regions["hat"].upper[:n])
    dr = float(t * hat.dX(s_a))
    worst = 0.0
    for _ in range(samples):
        th = list(lo + (0.05 + 0.9 * rng.random(n)) * (hi - lo))
        for side, s_edge, sign in ((0, s_a, 1.0), (1, -s_a, -1.0)):
            neck = regions[f"neck:{side}"]
            a, b = regions["hat"], neck
            pa, pb = th + [s_edge], th + [t * R_hat]
            worst = max(worst, float(np.max(np.abs(a.eval(pa) - b.eval(pb)))))
            worst = max(worst, float(np.max(np.abs(a.jac(pa)[:, -1] - sign * dr * b.jac(pb)[:, -1]))))
            outer = regions[f"L:{side}"]
            q = th + [eps]
            worst = max(worst, float(np.max(np.abs(neck.eval(q) - outer.eval(q)))))
            worst = max(worst, float(np.max(np.abs(neck.jac(q) - outer.jac(q)))))
    return worst


def build_connect_sum(scenario: Scenario, weights: GlueWeights, params: GlueParameters,
                      check: bool = True) -> GluedConifold:
    """
    构造平面对场景（L̂ 为 γ_c 颈）的连通和 L_t。

    Raises:
        HypothesisViolated: 相容性检查失败，或同一 L̂ 分支内的 t 不相等
        WindowCollapse:     颈部区间顺序不成立
        InterfaceMismatch:  区域图卡在边界上不一致
        ValueError:         场景不是 SO(m) 约化的平面对
    """
    if scenario.neck is None or scenario.recipe.get("builder") != "two-plane":
        raise ValueError("build_connect_sum 只支持 SO(m) 约化的平面对场景（two-plane）")
    if len(params.t) != len(scenario.pairing):
        raise ValueError(f"t 的个数 {len(params.t)} 与颈数 {len(scenario.pairing)} 不一致")
    for comp in scenario.L_hat.components:
        ts = {params.t[k] for k, (_, j) in enumerate(scenario.pairing) if j in comp}
        if len(ts) > 1:
            raise HypothesisViolated(f"同一 L̂ 分支内的颈必须使用相同的 t: {sorted(ts)}")
    compat = check_compatibility(scenario, weights, params) if check else CompatibilityReport({})
    if not compat.passed:
        raise HypothesisViolated(f"相容性检查失败: {compat.failures()} {compat.details}")
    for k in range(len(params.t)):
        _window(params, k)

    t = params.t[0]
    progress(f"connect sum: t={t:g}, τ={params.tau}, {params.points_per_decade} pts/decade")
    hat = hat_profile(scenario.neck)
    curve = build_glued_curve(hat, t, params.tau, params.R_hat, params.eps, params.r_max,
                              params.points_per_decade, params.annulus_refine)
    ws = glued_weight_system(hat, scenario, weights, params, curve.s_a, curve.s)
    pot = GluedPotential(hat, t, curve.T)
    regions = _region_charts(hat, scenario, pot, params, curve.s_a)
    defect = interface_defects(regions, hat, t, curve.s_a, params.R_hat, params.eps)
    progress(f"connect sum: {curve.size} nodes, interface defect {defect:.2e}")
    if defect > INTERFACE_TOL:
        raise InterfaceMismatch(f"区域边界不一致: defect {defect:.2e} > {INTERFACE_TOL:.0e}")
    return GluedConifold(scenario, weights, params, hat, curve, ws, regions, pot, defect, compat)


def symplectic_defect(glued: GluedConifold, samples: int = 200, seed: int = 0) -> Dict[str, float]:
    """每个区域图卡上 max |ι_t* ω̃|（无界区域在 [ε, 10ε] 内采样）。"""
    rng = np.random.default_rng(seed)
    out = {}
    for name, chart in glued.regions.items():
        hi = np.where(np.isfinite(chart.upper), chart.upper, 10.0 * glued.params.eps)
        pts = chart.sample(samples, rng, box=(chart.lower, hi))
        out[name] = max(float(np.max(np.abs(omega_matrix(chart.jac(p))))) for p in pts)
    return out


# ────────────────────────────────────────────
# 度量缺陷与截断
# ────────────────────────────────────────────

@dataclass(frozen=True)
class NeckDefect:
    t: float
    tau: float
    values: Tuple[float, ...]     # j = 0…j_max 的上确界
    outside: float                # r ∈ [2t^τ, ε] 上 j = 0 的上确界


def neck_metric_defect(glued: GluedConifold, neck: int = 0, j_max: int = 1, samples: int = 256) -> NeckDefect:
    """
    Σ × [t^τ, 2t^τ] 上 g_t 与锥度量 g̃ = dr² + r²g_S 之差：

      j = 0：|g_t − g̃|_{g̃} = sqrt((A″²)² + (m−1)(A′/r)⁴)
      j = 1：r·|∂_r(g_t − g̃)|_{g̃}（对伸缩不变）

    两侧由对称给出相同的值，neck 只用于记录。
    """
    if j_max not in (0, 1):
        raise ValueError("j_max 只支持 0 或 1")
    if not 0 <= neck < len(glued.params.t):
        raise ValueError(f"颈下标越界: {neck}")
    m, T = glued.m, glued.T

    def defects(r):
        j = glued.potential.at_r(r)
        q = j.a1 / r
        d0 = np.sqrt(j.a2 ** 4 + (m - 1) * q ** 4)
        d1 = r * np.sqrt((2.0 * j.a2 * j.a3) ** 2 + (m - 1) * (2.0 * q * (j.a2 - q) / r) ** 2)
        return d0, d1

    d0, d1 = defects(np.geomspace(T, 2.0 * T, samples))
    o0, _ = defects(np.geomspace(2.0 * T, glued.params.eps, samples))
    values = (float(np.max(d0)),) if j_max == 0 else (float(np.max(d0)), float(np.max(d1)))
    return NeckDefect(glued.t, glued.params.tau, values, float(np.max(o0)))


def make_cutoff_eta(params: GlueParameters, t: float) -> Callable[[np.ndarray], np.ndarray]:
    """
    η_t(r) = clip((log r − b log t) / ((a − b) log t), 0, 1)；|r ∂_r η_t| = 1/((a − b)|log t|)。

    Raises:
        ExponentOrder: 不满足 0 < b < a < τ
    """
    a, b = params.a, params.b
    if not 0.0 < b < a < params.tau:
        raise ExponentOrder(f"要求 0 < b < a < τ，收到 a={a}, b={b}, τ={params.tau}")
    if not 0.0 < t < 1.0:
        raise ValueError(f"η_t 要求 0 < t < 1: {t}")
    lt = np.log(t)

    def eta(r):
        x = (np.log(np.asarray(r, dtype=float)) - b * lt) / ((a - b) * lt)
        return np.clip(x, 0.0, 1.0)

    return eta
