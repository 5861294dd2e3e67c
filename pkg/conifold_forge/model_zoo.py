# -*- coding: utf-8 -*-
"""
显式例子库：SL 平面对、γ_c 颈、横截平面构型与粘合场景

  make_sl_plane_pair        Π ∪ −(M·Π)，M = Diag(e^{iθ_k})，Σθ_k = π
  make_gamma_neck           γ_c 颈：λ(φ) = c·(sin mφ)^{−1/m}·e^{iφ}，Im(λᵐ) = cᵐ
  make_two_plane_scenario   ℝᵐ ∪ −e^{iπ/m}ℝᵐ（原点标记为 CS，μ = 3）与 γ_c(ℝᵐ)，c 默认 GLUE_NECK_SCALE
  make_attach_plane_scenario 在已有 conifold 的光滑点处附加一个横截平面

γ_c 颈有两种参数：
  - φ ∈ (0, π/m)，图卡 (θ, φ) ↦ λ(φ)·L(θ)；
  - s ∈ ℝ，φ(s) = (π/2 − gd(ms))/m，|λ| = c·cosh(ms)^{1/m}，λ′/λ = tanh(ms) − i·sech(ms)，
    满足 λ(−s) = e^{iπ/m}·conj(λ(s))。s → +∞ 趋向 𝒞，s → −∞ 趋向 e^{iπ/m}𝒞。

第二个端作为点集是 e^{iπ/m}𝒞；颈诱导的定向与其自然定向相反，
即带定向的 −(e^{iπ/m}𝒞)，这是它被 Ω̃ 校准的那一侧。

典型用法::

    from conifold_forge.model_zoo import make_gamma_neck, make_two_plane_scenario
    from conifold_forge.conifold import LagrangianCone
    from conifold_forge.charts import sphere_link

    neck = make_gamma_neck(LagrangianCone(sphere_link(3), label="R3"), c=1.0)
    scenario = make_two_plane_scenario(3)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from conifold_forge.charts import (
    ImmersionChart,
    cone_chart,
    harvey_lawson_torus_link,
    profile_chart,
    sphere_link,
)
from conifold_forge.conifold import Conifold, End, LagrangianCone, cones_match
from conifold_forge.errors import AngleSumError, NonSLCone, NotTransverse
from conifold_forge.geometry import plane_chart

ANGLE_SUM_TOL = 1e-10
SL_TOL = 1e-10
# 光滑点标记为 CS 时统一使用 μ = 3
SMOOTH_POINT_RATE = 3.0
# 平面对场景中 γ_c 颈的默认尺度：t^τ 环带离颈口 ≥ 10 个颈半径，F_t(0) ≈ c³
# 乘以 c = 1 时的值
GLUE_NECK_SCALE = 0.1


def _orientation_fix(m: int) -> np.ndarray:
    # m 为偶数时 det(−M) = −e^{iΣθ}，翻转最后一个坐标使平面图卡相位为 +1
    R = np.eye(m)
    if m % 2 == 0:
        R[-1, -1] = -1.0
    return R


def plane_cone(m: int, frame: Optional[np.ndarray] = None, label: str = "R^m") -> LagrangianCone:
    return LagrangianCone(sphere_link(m, frame=frame, label=label), symmetry_dim=0, label=label)


# ────────────────────────────────────────────
# 平面对
# ────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class PlanePair:
    angles: Tuple[float, ...]
    planes: Tuple[LagrangianCone, LagrangianCone]
    M: np.ndarray

    @property
    def m(self) -> int:
        return len(self.angles)

    def charts(self, half_width: float = 10.0) -> Tuple[ImmersionChart, ImmersionChart]:
        return tuple(plane_chart(self.m, c.link.frame, half_width, label=c.label) for c in self.planes)


def _check_angles(angles: Sequence[float]) -> np.ndarray:
    theta = np.asarray(angles, dtype=float)
    if theta.ndim != 1 or theta.size < 3:
        raise ValueError(f"需要至少 3 个角度（m ≥ 3），收到 {list(theta)}")
    if np.any(theta <= 1e-12) or np.any(theta >= np.pi - 1e-12):
        raise NotTransverse(f"角度必须在 (0, π) 内，否则两平面有公共方向: {list(theta)}")
    if abs(theta.sum() - np.pi) > ANGLE_SUM_TOL:
        raise AngleSumError(f"角度之和 {theta.sum():.12f} ≠ π")
    return theta


def make_sl_plane_pair(angles: Sequence[float]) -> PlanePair:
    """
    构造 Π = ℝᵐ 与 −(M·Π)，M = Diag(e^{iθ_k})。

    Raises:
        AngleSumError: |Σθ_k − π| > 1e-10
        NotTransverse: 某个 θ_k 不在 (0, π) 内
    """
    theta = _check_angles(angles)
    m = theta.size
    M = np.diag(np.exp(1j * theta))
    first = plane_cone(m, label="R^m")
    second = plane_cone(m, frame=-M @ _orientation_fix(m), label="-M.R^m")
    return PlanePair(tuple(theta.tolist()), (first, second), M)


# ────────────────────────────────────────────
# γ_c 颈
# ────────────────────────────────────────────

def _gd(x):
    return np.arctan(np.sinh(x))


def _lam_phi(m: int, c: float, phi):
    """(λ, λ_φ, λ_φφ)：λ_φ = λ(−cot mφ + i)，λ_φφ = λ[(−cot mφ + i)² + m·csc²(mφ)]。"""
    lam = c * np.sin(m * phi) ** (-1.0 / m) * np.exp(1j * phi)
    k = -1.0 / np.tan(m * phi) + 1j
    return lam, lam * k, lam * (k * k + m / np.sin(m * phi) ** 2)


@dataclass(frozen=True, eq=False)
class GammaNeck:
    cone: LagrangianCone
    c: float
    chart: ImmersionChart
    ends: Tuple[End, End]
    compact_chart: ImmersionChart

    @property
    def m(self) -> int:
        return self.cone.m

    def lam(self, phi):
        return _lam_phi(self.m, self.c, phi)[0]

    def dlam(self, phi):
        return _lam_phi(self.m, self.c, phi)[1]

    def d2lam(self, phi):
        return _lam_phi(self.m, self.c, phi)[2]

    # s 参数
    def phi_of_s(self, s):
        return (0.5 * np.pi - _gd(self.m * np.asarray(s, dtype=float))) / self.m

    def lam_s(self, s) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """返回 (λ, λ′, λ″)，对 s 求导；数组输入逐点计算。"""
        m = self.m
        s = np.asarray(s, dtype=float)
        ms = m * s
        sech = 1.0 / np.cosh(ms)
        th = np.tanh(ms)
        lam = self.c * np.cosh(ms) ** (1.0 / m) * np.exp(1j * self.phi_of_s(s))
        kappa = th - 1j * sech
        dkappa = m * sech * sech + 1j * m * sech * th
        return lam, lam * kappa, lam * (kappa * kappa + dkappa)

    def s_of_radius(self, r, end: int = 0):
        """|λ| = r 的显式反解：s = ±arccosh((r/c)^m)/m（end 0 取正号）。"""
        s = np.arccosh((np.asarray(r, dtype=float) / self.c) ** self.m) / self.m
        return s if end == 0 else -s

    def conifold(self) -> Conifold:
        return Conifold(self.m, (self.compact_chart,), self.ends, (), ((0, 1),), True,
                        f"gamma_{self.c:g}({self.cone.label})")


def _end_phase(m: int, c: float, second: bool):
    # 端图卡 u(r) = r·e^{iφ(r)}，sin(mφ) = (c/r)^m
    sign = -1.0 if second else 1.0
    shift = np.pi / m if second else 0.0

    def phi1(r):
        return np.arcsin((c / r) ** m) / m

    def dphi1(r):
        return -np.tan(m * phi1(r)) / r

    def d2phi1(r):
        p = phi1(r)
        return -m * dphi1(r) / (r * np.cos(m * p) ** 2) + np.tan(m * p) / r ** 2

    def phi(r):
        return shift + sign * phi1(r)

    def u(r):
        # 第二端相对于链环 e^{iπ/m}L 表示，去掉常数相位
        return r * np.exp(1j * (phi(r) - shift))

    def du(r):
        d = sign * dphi1(r)
        return np.exp(1j * (phi(r) - shift)) * (1.0 + 1j * r * d)

    def d2u(r):
        d, dd = sign * dphi1(r), sign * d2phi1(r)
        return np.exp(1j * (phi(r) - shift)) * (2j * d + 1j * r * dd - r * d * d)

    return u, du, d2u


def make_gamma_neck(cone: LagrangianCone, c: float = 1.0, rng_seed: int = 0) -> GammaNeck:
    """
    γ_c 颈：(θ, φ) ↦ λ(φ)·L(θ)，λ(φ) = c·(sin mφ)^{−1/m}·e^{iφ}，φ ∈ (0, π/m)。

    两个 AC 端（收敛率 2−m，中心 0）以 r = |λ| 为径向坐标，范围 R = 2c，
    反函数 φ(r) = arcsin((c/r)^m)/m 为显式公式。

    Raises:
        ValueError: c ≤ 0
        NonSLCone:  锥的 SL 残差超过 1e-10
    """
    if not c > 0:
        raise ValueError(f"c 必须为正: {c}")
    audit = cone.audit(np.random.default_rng(rng_seed), samples=20)
    if audit["sl_residual"] > SL_TOL or audit["symplectic_defect"] > SL_TOL:
        raise NonSLCone(f"锥 {cone.label} 不是 SL 的: {audit}")
    m = cone.m
    link = cone.link

    def lam(phi):
        return _lam_phi(m, c, phi)[0]

    def dlam(phi):
        return _lam_phi(m, c, phi)[1]

    def d2lam(phi):
        return _lam_phi(m, c, phi)[2]

    params = {"builder": "gamma-neck", "c": c, "cone": cone.label}
    chart = profile_chart(link, lam, dlam, d2lam, 0.0, np.pi / m, coord="phi", closed=False,
                          label=f"gamma_{c:g}", meta={"params": params, "exact": True})
    R = 2.0 * c
    phi_R = np.arcsin((c / R) ** m) / m
    compact = profile_chart(link, lam, dlam, d2lam, phi_R, np.pi / m - phi_R, coord="phi",
                            label=f"gamma_{c:g}/core", meta={"params": params})

    cone2 = cone.transformed(np.exp(1j * np.pi / m) * np.eye(m), label=f"-e^(i.pi/m).{cone.label}")
    u1, du1, d2u1 = _end_phase(m, c, second=False)
    u2, du2, d2u2 = _end_phase(m, c, second=True)
    end1 = End("AC", cone, 2.0 - m, np.zeros(m), profile_chart(
        link, u1, du1, d2u1, R, np.inf, label=f"gamma_{c:g}/end0", meta={"params": params}), R, "end0")
    end2 = End("AC", cone2, 2.0 - m, np.zeros(m), profile_chart(
        cone2.link, u2, du2, d2u2, R, np.inf, label=f"gamma_{c:g}/end1", meta={"params": params}), R, "end1")
    return GammaNeck(cone, c, chart, (end1, end2), compact)


# ────────────────────────────────────────────
# 场景
# ────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class Scenario:
    """
    L:       CS 标记的 conifold
    L_hat:   AC 标记的 conifold（一般角度时为 None）
    pairing: (L 的标记端下标, L̂ 的标记端下标) 列表，构成 S* ↔ Ŝ* 的双射
    neck:    L̂ 为 γ_c 颈时保存其对象（剖面计算需要 s 参数）
    """
    L: Conifold
    L_hat: Optional[Conifold]
    pairing: Tuple[Tuple[int, int], ...]
    notes: Dict[str, Any] = field(default_factory=dict)
    neck: Optional[GammaNeck] = None
    recipe: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "pairing", tuple(tuple(p) for p in self.pairing))
        if self.L_hat is None:
            return
        left = sorted(i for i, _ in self.pairing)
        right = sorted(j for _, j in self.pairing)
        if left != sorted(self.L.marking) or right != sorted(self.L_hat.marking):
            raise ValueError(f"pairing 必须是 S* ↔ Ŝ* 的双射: {self.pairing}")

    @property
    def m(self) -> int:
        return self.L.m

    def to_dict(self) -> Dict[str, Any]:
        return {
            "recipe": dict(self.recipe),
            "pairing": [list(p) for p in self.pairing],
            "notes": dict(self.notes),
            "L": self.L.to_dict(),
            "L_hat": None if self.L_hat is None else self.L_hat.to_dict(),
        }


def _matrix_to_list(M: np.ndarray) -> Dict[str, Any]:
    M = np.asarray(M, dtype=complex)
    return {"re": M.real.tolist(), "im": M.imag.tolist()}


def _matrix_from_list(data: Optional[Dict[str, Any]]) -> Optional[np.ndarray]:
    if data is None:
        return None
    return np.asarray(data["re"], dtype=float) + 1j * np.asarray(data["im"], dtype=float)


def conifold_from_recipe(recipe: Dict[str, Any]) -> Conifold:
    """
    按 Conifold.recipe 重建 conifold。

    Raises:
        ValueError: recipe 为空或 builder 未知
    """
    if not recipe:
        raise ValueError("conifold 没有 recipe，无法从场景文件重建")
    builder = recipe.get("builder")
    if builder == "plane":
        return make_plane_conifold(int(recipe["m"]), _matrix_from_list(recipe.get("frame")),
                                   recipe.get("ac_rate"), float(recipe.get("half_width", 2.0)),
                                   recipe.get("label", "R^m"))
    if builder in ("two-plane", "plane-pair"):
        return scenario_from_dict(recipe).L
    raise ValueError(f"未知的 conifold builder: {builder!r}")


def scenario_from_dict(data: Dict[str, Any]) -> Scenario:
    """
    按 recipe 重建场景（JSON 场景文件只需 recipe 字段）。

    plane-pair 需要完整的 base recipe、附加点、分支、收敛率与颈尺度；
    缺少 base 的旧文件按 ℝᵐ 原点处附加处理。
    """
    recipe = dict(data.get("recipe", data))
    builder = recipe.get("builder", "two-plane")
    if builder == "two-plane":
        m = int(recipe.get("m", 3))
        return make_two_plane_scenario(m, float(recipe.get("c", GLUE_NECK_SCALE)),
                                       float(recipe.get("ac_rate", 2.0 - m)))
    if builder == "plane-pair":
        angles = [float(a) for a in recipe["angles"]]
        if "base" in recipe and recipe["base"] is None:
            raise ValueError("plane-pair 场景的 base 没有 recipe，无法重建")
        base = conifold_from_recipe(recipe.get("base") or {"builder": "plane", "m": len(angles)})
        k, point = recipe.get("point", [0, [0.0] * len(angles)])
        rate = recipe.get("ac_rate")
        return make_attach_plane_scenario(base, (int(k), np.asarray(point, dtype=float)), angles,
                                          int(recipe.get("component", 0)),
                                          None if rate is None else float(rate),
                                          float(recipe.get("c", GLUE_NECK_SCALE)))
    raise ValueError(f"未知的场景 builder: {builder!r}")


def _plane_component(m: int, frame: Optional[np.ndarray], label: str, ac_rate: float,
                     center: Optional[np.ndarray] = None, eps: float = 1.0,
                     R: float = 2.0) -> Tuple[ImmersionChart, End, End]:
    """平面 = CS 端（原点处光滑点，μ = 3，精确锥）+ 紧环带 + AC 端（精确锥）。"""
    cone = plane_cone(m, frame=frame, label=label)
    c = np.zeros(m, dtype=complex) if center is None else np.asarray(center, dtype=complex)
    cs = End("CS", cone, SMOOTH_POINT_RATE, c, cone.chart(0.0, eps, center=c), eps, f"{label}/cs")
    ac = End("AC", cone, ac_rate, c, cone.chart(R, np.inf, center=c), R, f"{label}/ac")
    annulus = cone_chart(cone.link, eps, R, center=c, label=f"{label}/annulus")
    return annulus, cs, ac


def make_plane_conifold(m: int, frame: Optional[np.ndarray] = None, ac_rate: Optional[float] = None,
                        half_width: float = 2.0, label: str = "R^m") -> Conifold:
    """单个平面作为 AC conifold：紧图卡为 [−w, w]ᵐ 上的线性图，AC 端为精确锥。"""
    rate = 2.0 - m if ac_rate is None else ac_rate
    cone = plane_cone(m, frame=frame, label=label)
    chart = plane_chart(m, cone.link.frame, half_width, label=f"{label}/box")
    R = half_width
    ac = End("AC", cone, rate, np.zeros(m), cone.chart(R, np.inf), R, f"{label}/ac")
    recipe = {"builder": "plane", "m": m, "ac_rate": rate, "half_width": half_width, "label": label,
              "frame": None if frame is None else _matrix_to_list(frame)}
    return Conifold(m, (chart,), (ac,), (), ((0,),), True, label, recipe)


def make_two_plane_scenario(m: int = 3, c: float = GLUE_NECK_SCALE, ac_rate: Optional[float] = None) -> Scenario:
    """
    L = ℝᵐ ⊔ −e^{iπ/m}ℝᵐ，两平面原点标记为 CS（μ = 3，A ≡ 0），各有一个 AC 端；
    L̂ = γ_c(ℝᵐ, c)，两个 AC 端都被标记；配对 {0 ↔ 0, 2 ↔ 1}。
    """
    if m < 3:
        raise ValueError(f"要求 m ≥ 3，收到 m={m}")
    rate = 2.0 - m if ac_rate is None else float(ac_rate)
    pair = make_sl_plane_pair([np.pi / m] * m)
    ann1, cs1, ac1 = _plane_component(m, None, "R^m", rate)
    ann2, cs2, ac2 = _plane_component(m, pair.planes[1].link.frame, "-e^(i.pi/m).R^m", rate)
    L = Conifold(m, (ann1, ann2), (cs1, ac1, cs2, ac2), (0, 2), ((0, 1), (2, 3)), True, "two-plane",
                 {"builder": "two-plane", "m": m, "ac_rate": rate})
    neck = make_gamma_neck(cs1.cone, c)
    nk = neck.conifold()
    L_hat = Conifold(m, nk.compact_charts, nk.ends, (0, 1), nk.components, True, nk.label)
    notes = {
        "L": "两个 SL 平面，原点作为光滑点标记为 CS（μ = 3）",
        "L_hat": f"γ_{c:g} 颈，两端收敛率 {2 - m}",
        "second_end": "作为点集为 e^{iπ/m}ℝᵐ，颈诱导定向为其反向（校准一侧）",
    }
    recipe = {"builder": "two-plane", "m": m, "c": c, "ac_rate": rate}
    return Scenario(L, L_hat, ((0, 0), (2, 1)), notes, neck, recipe)


def tangent_frame(chart: ImmersionChart, params: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """
    切平面的酉标架：[Re J; Im J] = Q·Rm 的 QR 分解给出 U = Q_top + i·Q_bottom，J = U·Rm。
    """
    J = chart.jac(params)
    m = J.shape[0]
    Q, Rm = np.linalg.qr(np.vstack([np.real(J), np.imag(J)]))
    return Q[:m] + 1j * Q[m:], Rm


def make_attach_plane_scenario(base: Conifold, x: Tuple[int, Sequence[float]], angles: Sequence[float],
                               component: int = 0, ac_rate: Optional[float] = None,
                               c: float = GLUE_NECK_SCALE) -> Scenario:
    """
    在 base 的光滑点 x = (紧图卡下标, 参数) 处附加平面 −(U·M·ℝᵐ)，U 为该点切平面标架。

    两个交点原像都标记为 CS（μ = 3）。base 侧的 CS 端图卡为
    (θ, r) ↦ ι(p + r·Rm⁻¹·s(θ))（差分导数），新平面为精确锥。
    角度全为 π/m 时 L̂ = γ_c(U·ℝᵐ)，否则 L̂ 为 None（一般角度的颈不在本库范围内）。
    base 带 recipe 时场景可经 to_dict / scenario_from_dict 无损重建。

    Raises:
        NotTransverse: 某个角度不在 (0, π) 内
        AngleSumError: 角度和不为 π
    """
    theta = _check_angles(angles)
    m = base.m
    if theta.size != m:
        raise ValueError(f"角度个数 {theta.size} 与 m={m} 不符")
    if base.marked_kind == "AC":
        raise ValueError("base 已有 AC 标记，不能再添加 CS 标记")
    k, p0 = x
    chart = base.compact_charts[k]
    p0 = np.asarray(p0, dtype=float)
    z0 = chart.eval(p0)
    U, Rm = tangent_frame(chart, p0)
    Rinv = np.linalg.inv(Rm)

    tangent_cone = plane_cone(m, frame=U, label="T_x")
    link = tangent_cone.link
    n = link.dim
    # CS 端半径：保持 p + r·Rm⁻¹·s(θ) 在图卡定义域内
    room = np.min(np.minimum(p0 - chart.lower, chart.upper - p0))
    eps = float(min(1.0, 0.5 * room / max(np.linalg.norm(Rinv, 2), 1e-300)))

    def cs_eval(q):
        s_dir = np.real(np.conj(U).T @ link.point(q[:n]))
        return chart.eval(p0 + q[n] * (Rinv @ s_dir))

    cs_chart = ImmersionChart(list(link.names) + ["r"], list(link.lower) + [0.0], list(link.upper) + [eps],
                              cs_eval, derivative_mode="finite-difference", label="x/cs")
    base_cs = End("CS", tangent_cone, SMOOTH_POINT_RATE, z0, cs_chart, eps, "x/cs")

    M = np.diag(np.exp(1j * theta))
    rate = 2.0 - m if ac_rate is None else float(ac_rate)
    ann, cs_new, ac_new = _plane_component(m, -U @ M @ _orientation_fix(m), "-U.M.R^m", rate, center=z0)

    n_base = len(base.ends)
    ends = tuple(base.ends) + (base_cs, cs_new, ac_new)
    comps = [list(comp) for comp in base.components]
    comps[component].append(n_base)
    comps.append([n_base + 1, n_base + 2])
    marking = tuple(base.marking) + (n_base, n_base + 1)
    recipe = {"builder": "plane-pair", "base": dict(base.recipe) or None,
              "point": [int(k), [float(v) for v in p0]], "angles": theta.tolist(),
              "component": int(component), "ac_rate": rate, "c": float(c)}
    L = Conifold(m, tuple(base.compact_charts) + (ann,), ends, marking,
                 tuple(tuple(comp) for comp in comps), base.special, base.label + "+plane", recipe)

    notes: Dict[str, Any] = {"attach_point": [[float(z.real), float(z.imag)] for z in z0],
                             "angles": theta.tolist()}
    if np.allclose(theta, np.pi / m, atol=ANGLE_SUM_TOL):
        neck = make_gamma_neck(tangent_cone, c)
        nk = neck.conifold()
        L_hat = Conifold(m, nk.compact_charts, nk.ends, (0, 1), nk.components, True, nk.label)
        if not cones_match(L_hat.ends[1].cone, cs_new.cone):
            raise NotTransverse("γ_c 第二端的锥与新平面不一致")
        return Scenario(L, L_hat, ((n_base, 0), (n_base + 1, 1)), notes, neck, recipe)
    notes["L_hat"] = "一般角度的 Lawlor 颈不在本库范围内，L_hat 留空"
    return Scenario(L, None, ((n_base, 0), (n_base + 1, 1)), notes, None, recipe)


# ────────────────────────────────────────────
# JSON 图卡
# ────────────────────────────────────────────

def chart_from_dict(data: Dict[str, Any]) -> ImmersionChart:
    """
    verify 子命令的图卡文件：

      {"kind": "gamma-neck", "m": 3, "c": 1.0}
      {"kind": "plane", "m": 3, "half_width": 10}
      {"kind": "cone", "link": "sphere" | "torus", "m": 3, "r_lo": 0.5, "r_hi": 10}
    """
    kind = data.get("kind", "gamma-neck")
    m = int(data.get("m", 3))
    if kind == "gamma-neck":
        return make_gamma_neck(plane_cone(m), float(data.get("c", 1.0))).chart
    if kind == "plane":
        return plane_chart(m, None, float(data.get("half_width", 10.0)), label=f"R^{m}")
    if kind == "cone":
        name = data.get("link", "sphere")
        if name == "sphere":
            link = sphere_link(m)
        elif name == "torus":
            link = harvey_lawson_torus_link()
        else:
            raise ValueError(f"未知的链环: {name!r}")
        return cone_chart(link, float(data.get("r_lo", 0.5)), float(data.get("r_hi", 10.0)))
    raise ValueError(f"未知的图卡类型: {kind!r}")
