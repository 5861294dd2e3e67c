# -*- coding: utf-8 -*-
"""
加权函数空间：半径函数、权重、加权 C^k / Sobolev 范数（数值求积）

所有场都按 SO(m) 约化后的一维网格采样：SampledField 保存求积节点、含链环面积的
体积权重、以及 |∇^j f|（j = 0…k）的模长数组。WeightSystem 在同一组节点上给出
ρ、β 与 w（w = ρ^{−β}，或粘合时的一般权重公式）。

  weighted_ck_norm             —— max Σ_j w ρ^j |∇^j f|
  weighted_sobolev_norm        —— (Σ_j ∫ |w ρ^j ∇^j f|^p ρ^{−m} vol)^{1/p}，加密一级校验
  scaled_equivalence_constants —— 两个度量的 C₀、C_j
  changing_weight_factor       —— 换权因子 max t_i^{β_i − β_i′} 及经验比值
  embedding_probe              —— ‖f‖_{C^k_β} / ‖f‖_{W^p_{k+l,β}}（要求 lp > m）
  product_bound_ratio          —— ‖uv‖_{β₁+β₂} / (‖u‖_{β₁}‖v‖_{β₂})

典型用法::

    from conifold_forge.weighted_spaces import radial_field, WeightSystem, weighted_sobolev_norm

    fld = radial_field(lambda r: r ** -0.5, 3, 1.0, 10.0)
    ws = WeightSystem.on_cone_piece(fld.nodes, -0.5, 3)
    print(weighted_sobolev_norm(fld, ws, 0, 2))
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gamma as gamma_fn

from conifold_forge.errors import (
    HypothesisViolated,
    MissingDerivatives,
    NotEquivalent,
    QuadratureDivergence,
)

# 加密前后 Sobolev 范数允许的相对变化
REFINE_TOL = 0.05
# 每个 Gauss–Legendre 面板的节点数
PANEL_ORDER = 4


def sphere_area(m: int) -> float:
    """单位球面 S^{m−1} 的面积 2π^{m/2}/Γ(m/2)。"""
    return float(2.0 * np.pi ** (m / 2.0) / gamma_fn(m / 2.0))


# ────────────────────────────────────────────
# 求积与差分
# ────────────────────────────────────────────

def radial_quadrature(r_lo: float, r_hi: float, per_decade: int = 64,
                      include_endpoints: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    """
    [r_lo, r_hi] 上 log r 等分面板的 Gauss–Legendre 求积，节点密度 ≥ per_decade / 十倍程。

    include_endpoints 时在两端补权重为 0 的节点（sup 范数需要端点值）。

    Returns:
        (nodes, weights)，满足 Σ weights·f(nodes) ≈ ∫ f dr
    """
    if not 0 < r_lo < r_hi:
        raise ValueError(f"要求 0 < r_lo < r_hi，收到 [{r_lo}, {r_hi}]")
    decades = np.log10(r_hi / r_lo)
    panels = max(1, int(np.ceil(decades * per_decade / PANEL_ORDER)))
    x, w = np.polynomial.legendre.leggauss(PANEL_ORDER)
    edges = np.linspace(np.log(r_lo), np.log(r_hi), panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    logs = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    nodes = np.exp(logs)
    weights = (half[:, None] * w[None, :]).ravel() * nodes
    if include_endpoints:
        nodes = np.concatenate([[r_lo], nodes, [r_hi]])
        weights = np.concatenate([[0.0], weights, [0.0]])
    return nodes, weights


def central_difference(values: np.ndarray, h: float) -> np.ndarray:
    """
    均匀网格上的一阶导数：内部四阶中心差分，靠边两点用二阶单侧差分。
    """
    values = np.asarray(values, dtype=float)
    out = np.gradient(values, h, edge_order=2)
    if values.size >= 5:
        out[2:-2] = (values[:-4] - 8.0 * values[1:-3] + 8.0 * values[3:-1] - values[4:]) / (12.0 * h)
    return out


# ────────────────────────────────────────────
# 采样场与权重
# ────────────────────────────────────────────

@dataclass(frozen=True)
class SampledField:
    """
    nodes:  一维网格坐标（径向 r 或剖面参数 s）
    vol:    求积权重（含链环面积，全部 ≥ 0）
    jets:   (|f|, |∇f|, |∇²f|, …) 模长数组
    values: 带符号的 f（乘积估计需要）
    d1:     带符号的单位径向导数（乘积估计 k = 1 需要）
    refine: 返回加密一级后的 (场, 权重系统)
    """
    nodes: np.ndarray
    vol: np.ndarray
    jets: Tuple[np.ndarray, ...]
    values: Optional[np.ndarray] = None
    d1: Optional[np.ndarray] = None
    refine: Optional[Callable[[], Tuple["SampledField", "WeightSystem"]]] = field(default=None, repr=False)
    label: str = ""

    def __post_init__(self):
        n = len(self.nodes)
        if len(self.vol) != n or any(len(j) != n for j in self.jets):
            raise ValueError("nodes / vol / jets 长度不一致")
        if np.any(np.asarray(self.vol) < 0):
            raise ValueError("求积权重必须非负")

    @property
    def order(self) -> int:
        return len(self.jets) - 1

    def scaled(self, c: float) -> "SampledField":
        refine = None
        if self.refine is not None:
            parent = self.refine

            def refine():
                fld, ws = parent()
                return fld.scaled(c), ws
        return replace(
            self,
            jets=tuple(abs(c) * j for j in self.jets),
            values=None if self.values is None else c * self.values,
            d1=None if self.d1 is None else c * self.d1,
            refine=refine,
        )


@dataclass(frozen=True)
class WeightSystem:
    """
    节点上的半径函数 ρ、权重指数 β 与权重 w。

    end_betas 以 "AC:i" / "CS:i" / "neck:i" / "hat:i" 为键记录每个端或颈部的常数 β；
    factory(nodes) 在加密后的节点上重建同一权重系统。
    """
    rho: np.ndarray
    beta: np.ndarray
    weight: np.ndarray
    m: int
    end_betas: Dict[str, float] = field(default_factory=dict)
    factory: Optional[Callable[[np.ndarray], "WeightSystem"]] = field(default=None, repr=False)

    def __post_init__(self):
        if np.any(np.asarray(self.rho) <= 0):
            raise ValueError("半径函数 ρ 必须处处为正")

    @classmethod
    def on_cone_piece(cls, r: np.ndarray, beta: float, m: int, end: str = "AC:0") -> "WeightSystem":
        r = np.asarray(r, dtype=float)
        return cls(r, np.full_like(r, beta), r ** (-beta), m, {end: float(beta)},
                   lambda nodes: cls.on_cone_piece(nodes, beta, m, end))

    def shifted(self, delta: float) -> "WeightSystem":
        """β ↦ β + delta，w ↦ w·ρ^{−delta}（W_{k−2,β−2} 取 delta = −2）。"""
        parent = self.factory
        return WeightSystem(
            self.rho, self.beta + delta, self.weight * self.rho ** (-delta), self.m,
            {k: v + delta for k, v in self.end_betas.items()},
            None if parent is None else (lambda nodes: parent(nodes).shifted(delta)),
        )

    def combined(self, other: "WeightSystem") -> "WeightSystem":
        """乘积空间的权重 β₁ + β₂，w = w₁·w₂。"""
        if not np.allclose(self.rho, other.rho):
            raise ValueError("两个权重系统的节点不一致")
        keys = set(self.end_betas) & set(other.end_betas)
        return WeightSystem(self.rho, self.beta + other.beta, self.weight * other.weight, self.m,
                            {k: self.end_betas[k] + other.end_betas[k] for k in keys})

    def at(self, nodes: np.ndarray) -> "WeightSystem":
        if self.factory is None:
            raise ValueError("该权重系统无法在新节点上重建")
        return self.factory(np.asarray(nodes, dtype=float))


def general_hat_weight(t: float, beta_component: float, rho_hat: np.ndarray, beta_hat: np.ndarray) -> np.ndarray:
    """L̂ 部分的一般权重 t^{−β̂_i} ρ̂^{−β̂}（β̂ 为常数时等于 (tρ̂)^{−β̂}）。"""
    return t ** (-beta_component) * np.asarray(rho_hat) ** (-np.asarray(beta_hat))


# ────────────────────────────────────────────
# 锥片上的径向场
# ────────────────────────────────────────────

def cone_jets(r: np.ndarray, derivs: Sequence[np.ndarray], m: int) -> Tuple[np.ndarray, ...]:
    """
    锥 dr² + r² g_S 上径向函数的 |∇^j f|（j ≤ 3），derivs = (f, f′, f″, f‴) 的前缀。

    |∇²f|² = f″² + (m−1)(f′/r)²；
    |∇³f|² = f‴² + (m−1)B′² + 2(m−1)((f″ − B)/r)²，B = f′/r。
    """
    f = derivs[0]
    jets = [np.abs(f)]
    if len(derivs) > 1:
        jets.append(np.abs(derivs[1]))
    if len(derivs) > 2:
        B = derivs[1] / r
        jets.append(np.sqrt(derivs[2] ** 2 + (m - 1) * B ** 2))
    if len(derivs) > 3:
        B = derivs[1] / r
        dB = derivs[2] / r - derivs[1] / r ** 2
        mixed = (derivs[2] - B) / r
        jets.append(np.sqrt(derivs[3] ** 2 + (m - 1) * dB ** 2 + 2 * (m - 1) * mixed ** 2))
    return tuple(jets)


def warped_jets(values: np.ndarray, h: float, radius: np.ndarray, dradius: np.ndarray,
                speed: np.ndarray, m: int, k: int) -> Tuple[Tuple[np.ndarray, ...], np.ndarray]:
    """
    翘曲积 σ(s)² ds² + R(s)² g_S 上不变函数的 |∇^j f|（j ≤ k ≤ 3），导数用差分。

    记 d/dr̃ = σ^{−1} d/ds，A = f_r̃r̃，B = (R_r̃/R) f_r̃：
      |∇²f|² = A² + (m−1)B²，
      |∇³f|² = A_r̃² + (m−1)B_r̃² + 2(m−1)((R_r̃/R)(A − B))²。

    Returns:
        (jets, f_r̃)
    """
    if k > 3:
        raise ValueError("最多支持三阶导数")
    d = lambda u: central_difference(u, h) / speed  # noqa: E731
    fr = d(values)
    jets = [np.abs(values)]
    if k >= 1:
        jets.append(np.abs(fr))
    if k >= 2:
        q = dradius / speed / radius
        A = d(fr)
        B = q * fr
        jets.append(np.sqrt(A ** 2 + (m - 1) * B ** 2))
        if k >= 3:
            jets.append(np.sqrt(d(A) ** 2 + (m - 1) * d(B) ** 2 + 2 * (m - 1) * (q * (A - B)) ** 2))
    return tuple(jets), fr


def radial_field(fn: Callable[[np.ndarray], np.ndarray], m: int, r_lo: float, r_hi: float,
                 derivs: Sequence[Callable[[np.ndarray], np.ndarray]] = (),
                 beta: Optional[float] = None, end: str = "AC:0",
                 per_decade: int = 64, area: Optional[float] = None, label: str = "") -> SampledField:
    """
    锥 C(S^{m−1}) 的 [r_lo, r_hi] 片上的径向场 f(r)，导数由解析函数给出。

    beta 给出时 refine 同时返回对应的 WeightSystem。
    """
    r, w = radial_quadrature(r_lo, r_hi, per_decade, include_endpoints=True)
    A = sphere_area(m) if area is None else area
    vals = np.asarray(fn(r), dtype=float)
    dvals = [vals] + [np.asarray(d(r), dtype=float) for d in derivs]

    def refine():
        fld = radial_field(fn, m, r_lo, r_hi, derivs, beta, end, 2 * per_decade, area, label)
        ws = WeightSystem.on_cone_piece(fld.nodes, 0.0 if beta is None else beta, m, end)
        return fld, ws

    return SampledField(r, A * r ** (m - 1) * w, cone_jets(r, dvals, m), vals,
                        dvals[1] if len(dvals) > 1 else None, refine, label)


# ────────────────────────────────────────────
# 范数
# ────────────────────────────────────────────

def _require(fld: SampledField, k: int) -> None:
    if fld.order < k:
        raise MissingDerivatives(f"场 {fld.label!r} 只有 {fld.order} 阶导数，需要 {k} 阶")


def weighted_ck_norm(fld: SampledField, ws: WeightSystem, k: int) -> float:
    """max over nodes Σ_{j≤k} w ρ^j |∇^j f|（网格最大值，是 sup 的下界）。"""
    _require(fld, k)
    total = np.zeros_like(ws.rho)
    for j in range(k + 1):
        total = total + ws.weight * ws.rho ** j * fld.jets[j]
    return float(np.max(total))


def _sobolev(fld: SampledField, ws: WeightSystem, k: int, p: float) -> float:
    integrand = np.zeros_like(ws.rho)
    for j in range(k + 1):
        integrand = integrand + np.abs(ws.weight * ws.rho ** j * fld.jets[j]) ** p
    return float(np.sum(fld.vol * integrand * ws.rho ** (-ws.m)) ** (1.0 / p))


def weighted_sobolev_norm(fld: SampledField, ws: WeightSystem, k: int, p: float = 2.0,
                          check: bool = True) -> float:
    """
    (Σ_{j≤k} ∫ |w ρ^j ∇^j f|^p ρ^{−m} vol)^{1/p}。

    check 为真且场带有 refine 时，在加密一级的网格上重算并比较。

    Raises:
        MissingDerivatives:   导数阶数不足
        QuadratureDivergence: 加密前后相对变化 > 5%
    """
    if p < 1:
        raise ValueError(f"要求 p ≥ 1，收到 {p}")
    _require(fld, k)
    value = _sobolev(fld, ws, k, p)
    if check and fld.refine is not None:
        delta = _refinement_delta(fld, ws, k, p, value)
        if delta > REFINE_TOL:
            raise QuadratureDivergence(f"加密后范数相对变化 {delta:.2%} > 5%（{fld.label}）")
    return value


def _refinement_delta(fld: SampledField, ws: WeightSystem, k: int, p: float, value: float) -> float:
    fine, fine_ws = fld.refine()
    if ws.factory is not None:
        fine_ws = ws.at(fine.nodes)
    other = _sobolev(fine, fine_ws, k, p)
    scale = max(abs(value), abs(other))
    return 0.0 if scale == 0.0 else abs(other - value) / scale


def norm_report(fld: SampledField, ws: WeightSystem, kind: str, k: int, p: float = 2.0) -> Dict[str, Any]:
    """{norm_kind, k, p, beta, value, refinement_delta}。"""
    if kind == "C":
        value, delta = weighted_ck_norm(fld, ws, k), None
    elif kind == "W":
        value = weighted_sobolev_norm(fld, ws, k, p, check=False)
        delta = None if fld.refine is None else _refinement_delta(fld, ws, k, p, value)
    else:
        raise ValueError(f"未知范数类型: {kind!r}")
    return {
        "norm_kind": kind,
        "k": k,
        "p": None if kind == "C" else p,
        "beta": {key: float(v) for key, v in ws.end_betas.items()},
        "value": value,
        "refinement_delta": delta,
    }


# ────────────────────────────────────────────
# 度量等价
# ────────────────────────────────────────────

@dataclass(frozen=True)
class EquivalenceReport:
    c0: float
    cj: Tuple[float, ...]
    dilation: Optional[float] = None   # g₂ ≈ c·g₁（c ≠ 1）时记录 c

    @property
    def constants(self) -> Tuple[float, ...]:
        return (self.c0,) + self.cj


def _relative_metric(g1: np.ndarray, g2: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    w, V = np.linalg.eigh(g1)
    if np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise NotEquivalent("g₁ 不是正定度量")
    inv_half = V @ (w[..., :, None] ** -0.5 * np.swapaxes(V, -1, -2))
    F = inv_half @ g2 @ inv_half
    lam = np.linalg.eigvalsh(F)
    return F, lam


def scaled_equivalence_constants(g1: np.ndarray, g2: np.ndarray, rho: np.ndarray, j_max: int = 2,
                                 refined: Optional[Tuple[np.ndarray, np.ndarray, np.ndarray]] = None,
                                 ) -> EquivalenceReport:
    """
    g₁、g₂ 形状 (N, n, n)，在同一径向网格 rho 上采样。

    F = g₁^{−1/2} g₂ g₁^{−1/2}；C₀ = sup max(λ_max(F), 1/λ_min(F))；
    C_j = sup |(ρ∂_ρ)^j F|（以 log ρ 为自变量的差分，作为 ρ^{−2}g⊗g 范数下 |∇^j g₂| 的代理）。

    Raises:
        NotEquivalent: 特征值非正 / 非有限，或加密后 C₀ 增大到 2 倍以上
    """
    g1 = np.asarray(g1, dtype=float)
    g2 = np.asarray(g2, dtype=float)
    F, lam = _relative_metric(g1, g2)
    if np.any(lam <= 0) or not np.all(np.isfinite(lam)):
        raise NotEquivalent("g₂ 相对 g₁ 出现非正或非有限特征值")
    c0 = float(np.max(np.maximum(lam[:, -1], 1.0 / lam[:, 0])))
    logr = np.log(np.asarray(rho, dtype=float))
    cj = []
    D = F
    for _ in range(j_max):
        D = np.gradient(D, logr, axis=0)
        cj.append(float(np.max(np.linalg.norm(D, axis=(1, 2)))))
    n = F.shape[-1]
    mean = float(np.mean(lam))
    dilation = None
    if abs(mean - 1.0) > 1e-9 and np.max(np.abs(F - mean * np.eye(n))) <= 1e-9 * max(1.0, mean):
        dilation = mean
    if refined is not None:
        fine = scaled_equivalence_constants(*refined, j_max=0)
        if fine.c0 > 2.0 * c0:
            raise NotEquivalent(f"加密后 C₀ 从 {c0:.3g} 增长到 {fine.c0:.3g}")
    return EquivalenceReport(c0, tuple(cj), dilation)


# ────────────────────────────────────────────
# 换权、嵌入、乘积
# ────────────────────────────────────────────

@dataclass(frozen=True)
class ChangingWeightReport:
    factor: float
    ratios: Tuple[float, ...] = ()
    constant: float = 2.0

    @property
    def within_bound(self) -> bool:
        return all(r <= self.constant * self.factor for r in self.ratios)


def changing_weight_factor(ws: WeightSystem, ws_prime: WeightSystem, t_vec,
                           fields: Sequence[SampledField] = (), k: int = 0,
                           constant: float = 2.0) -> ChangingWeightReport:
    """
    由 β 换到 β′ 时 C^k 范数的放大因子 max_i t_i^{β_i − β_i′}（取遍颈部）。

    前提：AC 端 β ≤ β′，CS 端 β ≥ β′，颈部 β_i ≤ β_i′。

    Raises:
        HypothesisViolated: 端标签不一致或不满足前提
    """
    if set(ws.end_betas) != set(ws_prime.end_betas):
        raise HypothesisViolated("两个权重系统的端标签不一致")
    necks: List[Tuple[int, float]] = []
    for key, b in ws.end_betas.items():
        kind, _, idx = key.partition(":")
        b2 = ws_prime.end_betas[key]
        if kind == "AC" and not b <= b2:
            raise HypothesisViolated(f"AC 端 {key} 要求 β ≤ β′，收到 {b} > {b2}")
        if kind == "CS" and not b >= b2:
            raise HypothesisViolated(f"CS 端 {key} 要求 β ≥ β′，收到 {b} < {b2}")
        if kind == "neck":
            if not b <= b2:
                raise HypothesisViolated(f"颈部 {key} 要求 β ≤ β′，收到 {b} > {b2}")
            necks.append((int(idx or 0), b - b2))
    ts = np.atleast_1d(np.asarray(t_vec, dtype=float))
    factor = 1.0
    for i, diff in necks:
        t = ts[i] if i < len(ts) else ts[-1]
        factor = max(factor, float(t ** diff))
    ratios = tuple(weighted_ck_norm(f, ws_prime, k) / weighted_ck_norm(f, ws, k) for f in fields)
    return ChangingWeightReport(factor, ratios, constant)


@dataclass(frozen=True)
class EmbeddingReport:
    max_ratio: float
    ratios: Tuple[float, ...]


def embedding_probe(fields: Sequence[SampledField], ws: WeightSystem, k: int, l: int, p: float,
                    wss: Optional[Sequence[WeightSystem]] = None) -> EmbeddingReport:
    """
    W^p_{k+l,β} ↪ C^k_β 的数值比值 max_f ‖f‖_{C^k_β} / ‖f‖_{W^p_{k+l,β}}。

    wss 给出时每个场使用各自的权重系统（跨 t 网格的场族）。
    """
    if not l * p > ws.m:
        raise ValueError(f"C^k 嵌入要求 lp > m，收到 l={l}, p={p}, m={ws.m}")
    ratios = []
    for i, f in enumerate(fields):
        w = ws if wss is None else wss[i]
        ratios.append(weighted_ck_norm(f, w, k) / weighted_sobolev_norm(f, w, k + l, p, check=False))
    return EmbeddingReport(float(max(ratios)), tuple(ratios))


def product_field(u: SampledField, v: SampledField, k: int) -> SampledField:
    """带符号数据的乘积场 uv（k ≤ 1）。"""
    if u.values is None or v.values is None:
        raise MissingDerivatives("乘积需要带符号的 values")
    jets = [np.abs(u.values * v.values)]
    if k >= 1:
        if u.d1 is None or v.d1 is None:
            raise MissingDerivatives("k = 1 的乘积需要 d1")
        jets.append(np.abs(u.d1 * v.values + u.values * v.d1))
    if k > 1:
        raise ValueError("乘积估计只支持 k ≤ 1")
    return SampledField(u.nodes, u.vol, tuple(jets), u.values * v.values, None, None, f"{u.label}*{v.label}")


def product_bound_ratio(pairs: Sequence[Tuple[SampledField, SampledField]], ws1: WeightSystem,
                        ws2: WeightSystem, k: int = 1) -> float:
    """max ‖uv‖_{C^k_{β₁+β₂}} / (‖u‖_{C^k_{β₁}} ‖v‖_{C^k_{β₂}})。"""
    ws = ws1.combined(ws2)
    worst = 0.0
    for u, v in pairs:
        num = weighted_ck_norm(product_field(u, v, k), ws, k)
        den = weighted_ck_norm(u, ws1, k) * weighted_ck_norm(v, ws2, k)
        worst = max(worst, num / den)
    return worst
