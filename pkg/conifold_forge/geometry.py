# -*- coding: utf-8 -*-
"""
ℂᵐ 上的标准 Calabi–Yau 结构与 Lagrangian 图卡的残差求值

约定：ω̃ = Σ dx_j∧dy_j，Ω̃ = dz¹∧…∧dzᵐ，标架按定义域坐标顺序排列。
于是 ω̃(u, v) = Im(uᴴv)，切标架 J 的辛拉回为 Im(JᴴJ)，诱导度量为 Re(JᴴJ)，
SL 残差 ★(ι* Im Ω̃) = Im det J / √det g。

图映射：
  - GraphOneForm 描述锥 𝒞 上的闭 1-形式 α = α₁ + α₂ dr（α₁ 为链环余向量）；
  - graph_map 对平面锥给出精确的辛图 x ↦ x + i α♯(x)，
    对非平面锥给出一阶映射 ι + J̃(α♯) 并在 meta 中标记 exact=False。

典型用法::

    from conifold_forge.geometry import symplectic_pullback, sl_residual, induced_metric

    W = symplectic_pullback(chart, p)     # 反对称 m×m
    res = sl_residual(chart, p)           # 实数
    g = induced_metric(chart, p)
"""

from __future__ import annotations

from typing import Callable, Optional, Sequence, Tuple, TYPE_CHECKING

import numpy as np

from conifold_forge.charts import ImmersionChart, cone_chart, fd_derivative, profile_chart
from conifold_forge.errors import DegenerateFrame, OutOfNeighbourhood

if TYPE_CHECKING:
    from conifold_forge.conifold import LagrangianCone

# 诱导度量行列式低于该值视为退化标架
DEGENERATE_DET = 1e-14
# Lagrangian 判定阈值（解析导数模式）
LAGRANGIAN_TOL = 1e-10


# ────────────────────────────────────────────
# 环境结构
# ────────────────────────────────────────────

def omega(u: Sequence[complex], v: Sequence[complex]) -> float:
    """ω̃(u, v) = Σ (x_u y_v − y_u x_v) = Im(uᴴv)。"""
    return float(np.imag(np.vdot(np.asarray(u, dtype=complex), np.asarray(v, dtype=complex))))


def omega_matrix(J: np.ndarray) -> np.ndarray:
    """标架列向量两两的 ω̃ 值，(j,k) = ω̃(J[:,j], J[:,k])。"""
    W = np.imag(J.conj().T @ J)
    return 0.5 * (W - W.T)


def metric_matrix(J: np.ndarray) -> np.ndarray:
    G = np.real(J.conj().T @ J)
    return 0.5 * (G + G.T)


def holomorphic_volume(J: np.ndarray) -> complex:
    """Ω̃ 在标架 J（m×m）上的值，即 det J。"""
    if J.shape[0] != J.shape[1]:
        raise ValueError(f"Ω̃ 需要 m 个切向量，收到 {J.shape[1]} 个")
    return complex(np.linalg.det(J))


# ────────────────────────────────────────────
# 图卡残差
# ────────────────────────────────────────────

def symplectic_pullback(chart: ImmersionChart, params: Sequence[float]) -> np.ndarray:
    """
    ι*ω̃ 在参数点处的反对称矩阵。

    Raises:
        DomainError:           参数点越界
        DerivativeUnavailable: 图卡没有一阶导数
    """
    return omega_matrix(chart.jac(params))


def is_lagrangian(chart: ImmersionChart, params: Sequence[float], tol: float = LAGRANGIAN_TOL) -> bool:
    return bool(np.max(np.abs(symplectic_pullback(chart, params))) <= tol)


def induced_metric(chart: ImmersionChart, params: Sequence[float]) -> np.ndarray:
    """
    诱导度量 g = ι*g̃（切标架的 Gram 矩阵）。

    Raises:
        DegenerateFrame: det g < 1e-14
    """
    g = metric_matrix(chart.jac(params))
    if np.linalg.det(g) < DEGENERATE_DET:
        raise DegenerateFrame(f"诱导度量退化: det g = {np.linalg.det(g):.3e}")
    return g


def sl_residual(chart: ImmersionChart, params: Sequence[float]) -> float:
    """
    ★(ι* Im Ω̃) = Im det J / √det g。

    Raises:
        DegenerateFrame: det g < 1e-14
    """
    J = chart.jac(params)
    det_g = np.linalg.det(metric_matrix(J))
    if det_g < DEGENERATE_DET:
        raise DegenerateFrame(f"诱导度量退化: det g = {det_g:.3e}")
    return float(np.imag(holomorphic_volume(J)) / np.sqrt(det_g))


def calibration_phase(chart: ImmersionChart, params: Sequence[float]) -> complex:
    """Ω̃ 在单位化标架上的相位 det J / |det J|（SL 且定向正确时为 +1）。"""
    d = holomorphic_volume(chart.jac(params))
    if abs(d) < np.sqrt(DEGENERATE_DET):
        raise DegenerateFrame("Ω̃ 在标架上接近 0")
    return d / abs(d)


def residual_table(chart: ImmersionChart, samples: np.ndarray) -> np.ndarray:
    """
    逐点计算 (辛缺陷, SL 残差)，返回形状 (N, 2)；
    辛缺陷为 ι*ω̃ 矩阵元素的最大绝对值。
    """
    out = np.empty((len(samples), 2))
    for i, p in enumerate(samples):
        out[i, 0] = np.max(np.abs(symplectic_pullback(chart, p)))
        out[i, 1] = sl_residual(chart, p)
    return out


def hodge_star_scale(k: int, t: float, m: int) -> float:
    """度量 g ↦ t²g 时 k-形式上 Hodge ★ 的倍数 t^{m−2k}。"""
    if not 0 <= k <= m:
        raise ValueError(f"要求 0 ≤ k ≤ m，收到 k={k}, m={m}")
    if not t > 0:
        raise ValueError(f"t 必须为正: {t}")
    return float(t ** (m - 2 * k))


# ────────────────────────────────────────────
# 欧氏图与平面
# ────────────────────────────────────────────

def plane_chart(m: int, frame: Optional[np.ndarray] = None, half_width: float = 10.0,
                label: str = "") -> ImmersionChart:
    """平面 U·ℝᵐ 的线性图卡 x ↦ Ux，定义域 [−w, w]ᵐ。"""
    U = np.eye(m, dtype=complex) if frame is None else np.asarray(frame, dtype=complex)
    return ImmersionChart(
        [f"x{j}" for j in range(m)], [-half_width] * m, [half_width] * m,
        lambda x: U @ x.astype(complex),
        lambda x: U.copy(),
        lambda x: np.zeros((m, m, m), dtype=complex),
        label=label or "plane",
    )


def euclidean_graph_chart(
    m: int,
    field: Callable[[np.ndarray], np.ndarray],
    dfield: Callable[[np.ndarray], np.ndarray],
    d2field: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    half_width: float = 10.0,
    label: str = "",
) -> ImmersionChart:
    """
    向量场图 x ↦ x + i v(x)。v = ∇f 时为闭 1-形式 df 的图，必为 Lagrangian。

    Args:
        field:   v(x)，长度 m
        dfield:  Dv(x)，(j,k) = ∂v_j/∂x_k
        d2field: D²v(x)，(j,k,l) = ∂²v_j/∂x_k∂x_l；缺省时 hess 用差分
    """
    eye = np.eye(m)
    hess = (lambda x: 1j * np.asarray(d2field(x), dtype=float)) if d2field is not None else None
    return ImmersionChart(
        [f"x{j}" for j in range(m)], [-half_width] * m, [half_width] * m,
        lambda x: x + 1j * np.asarray(field(x), dtype=float),
        lambda x: eye + 1j * np.asarray(dfield(x), dtype=float),
        hess,
        derivative_mode="analytic" if hess is not None else "finite-difference",
        label=label or "graph",
    )


# ────────────────────────────────────────────
# 锥上的图 1-形式
# ────────────────────────────────────────────

class GraphOneForm:
    """
    锥 𝒞 = Σ × (0,∞) 上的 1-形式 α = α₁(θ,r) + α₂(θ,r) dr。

    Args:
        cone:    底锥
        alpha1:  (θ, r) ↦ 链环余向量（长度 = 链环维数）；None 表示 α₁ ≡ 0
        alpha2:  (θ, r) ↦ dr 系数；None 表示 α₂ ≡ 0
        radial:  α₁ ≡ 0 且 α₂ 只依赖 r 时给出 (a, a′, a″) 三个 r 的函数，
                 graph_map 据此构造解析导数图卡
        rate_window: (μ−1, λ−1) 衰减阶
    """

    def __init__(
        self,
        cone: "LagrangianCone",
        alpha1: Optional[Callable[[np.ndarray, float], np.ndarray]] = None,
        alpha2: Optional[Callable[[np.ndarray, float], float]] = None,
        radial: Optional[Tuple[Callable[[float], float], Callable[[float], float], Callable[[float], float]]] = None,
        rate_window: Tuple[float, float] = (np.nan, np.nan),
    ):
        self.cone = cone
        self.alpha1 = alpha1
        self.alpha2 = alpha2
        self.radial = radial
        self.rate_window = rate_window
        if radial is not None and alpha2 is None:
            a = radial[0]
            self.alpha2 = lambda th, r: float(a(r))

    @classmethod
    def zero(cls, cone: "LagrangianCone") -> "GraphOneForm":
        return cls(cone)

    @classmethod
    def exact_radial(cls, cone: "LagrangianCone", a: Callable[[float], float],
                     da: Callable[[float], float], d2a: Callable[[float], float],
                     rate_window: Tuple[float, float] = (np.nan, np.nan)) -> "GraphOneForm":
        """α = dA，A = A(r)，a = A′。"""
        return cls(cone, radial=(a, da, d2a), rate_window=rate_window)

    @property
    def is_zero(self) -> bool:
        return self.alpha1 is None and self.alpha2 is None

    def components(self, theta: np.ndarray, r: float) -> Tuple[np.ndarray, float]:
        n = self.cone.link.dim
        a1 = np.zeros(n) if self.alpha1 is None else np.asarray(self.alpha1(theta, r), dtype=float)
        a2 = 0.0 if self.alpha2 is None else float(self.alpha2(theta, r))
        return a1, a2

    def __add__(self, other: "GraphOneForm") -> "GraphOneForm":
        """平移 τ_α：按分量相加。"""
        if other.cone is not self.cone:
            raise ValueError("只能把同一锥上的 1-形式相加")
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        radial = None
        if self.radial is not None and other.radial is not None:
            (a, da, d2a), (b, db, d2b) = self.radial, other.radial
            radial = (lambda r: a(r) + b(r), lambda r: da(r) + db(r), lambda r: d2a(r) + d2b(r))

        def alpha1(th, r):
            return self.components(th, r)[0] + other.components(th, r)[0]

        def alpha2(th, r):
            return self.components(th, r)[1] + other.components(th, r)[1]

        both_radial = radial is not None
        return GraphOneForm(self.cone, None if both_radial else alpha1, alpha2, radial)

    def dilated(self, t: float) -> "GraphOneForm":
        """
        锥伸缩的自然作用：(θ, r, α₁, α₂) ↦ (θ, tr, t²α₁, tα₂)，
        即新形式在 (θ, r) 处取值 (t²α₁(θ, r/t), tα₂(θ, r/t))。
        """
        a1 = None if self.alpha1 is None else (lambda th, r: t * t * np.asarray(self.alpha1(th, r / t)))
        if self.radial is not None:
            a, da, d2a = self.radial
            return GraphOneForm(self.cone, radial=(lambda r: t * a(r / t), lambda r: da(r / t),
                                                   lambda r: d2a(r / t) / t))
        a2 = None if self.alpha2 is None else (lambda th, r: t * self.alpha2(th, r / t))
        return GraphOneForm(self.cone, a1, a2)

    def norm(self, theta: np.ndarray, r: float) -> float:
        """|α|_g̃，g̃ = dr² + r²g′。"""
        a1, a2 = self.components(theta, r)
        if a1.size == 0 or not np.any(a1):
            return abs(a2)
        ginv = np.linalg.inv(self.cone.link.metric(theta))
        return float(np.sqrt(a2 * a2 + a1 @ ginv @ a1 / (r * r)))

    def closedness_defect(self, theta: np.ndarray, r: float, h: float = 1e-4) -> float:
        """
        dα 分量的最大绝对值（4 阶差分）：∂_r α₁_a − ∂_a α₂ 与 ∂_a α₁_b − ∂_b α₁_a。
        """
        n = self.cone.link.dim
        p = np.concatenate([np.asarray(theta, dtype=float), [r]])

        def packed(q):
            a1, a2 = self.components(q[:n], q[n])
            return np.concatenate([a1, [a2]])

        D = fd_derivative(packed, p, base=h)  # D[i, j] = ∂_j (α)_i
        return float(np.max(np.abs(D - D.T)))

    def sharp(self, theta: np.ndarray, r: float) -> np.ndarray:
        """α♯ 作为环境向量：α₂·L + r⁻¹ g′^{ab} α₁_b ∂_aL。"""
        link = self.cone.link
        a1, a2 = self.components(theta, r)
        L = link.point(theta)
        if a1.size == 0 or not np.any(a1):
            return a2 * L
        ginv = np.linalg.inv(link.metric(theta))
        return a2 * L + (link.tangent(theta) @ (ginv @ a1)) / r


def graph_map(
    cone: "LagrangianCone",
    form: GraphOneForm,
    base: Optional[GraphOneForm] = None,
    r_lo: float = 0.0,
    r_hi: float = np.inf,
    neighbourhood_c: float = 0.1,
    center: Optional[Sequence[complex]] = None,
    label: str = "",
) -> ImmersionChart:
    """
    Φ_C∘τ_base：锥 𝒞 上闭 1-形式 form+base 的图，坐标 (θ…, r)。

    - 形式为 0：返回锥图卡本身；
    - 径向形式 dA(r)：解析图卡 (r + i a(r))·L(θ)，对任意 Lagrangian 锥都是精确 Lagrangian；
    - 平面锥：精确图 x ↦ x + i α♯(x)（差分导数）；
    - 非平面锥：一阶映射 ι + J̃(α♯)，meta["exact"] = False，
      |α|/r 超过 neighbourhood_c 时求值抛 OutOfNeighbourhood。
    """
    total = form if base is None else base + form
    link = cone.link
    n = link.dim
    c = np.zeros(link.m, dtype=complex) if center is None else np.asarray(center, dtype=complex)
    lo = r_lo if r_lo > 0 else 1e-300

    if total.is_zero:
        chart = cone_chart(link, lo, r_hi, center=c, label=label or f"cone({cone.label})")
        chart.meta["exact"] = True
        return chart

    if total.radial is not None:
        a, da, d2a = total.radial
        return profile_chart(link, lambda r: r + 1j * a(r), lambda r: 1.0 + 1j * da(r),
                             lambda r: 1j * d2a(r), lo, r_hi, center=c,
                             label=label or f"graph({cone.label})", meta={"exact": True})

    exact = cone.planar

    def ev(p):
        th, r = p[:n], p[n]
        if not exact and total.norm(th, r) / r > neighbourhood_c:
            raise OutOfNeighbourhood(
                f"|α|/r = {total.norm(th, r) / r:.3g} 超过邻域半径常数 C = {neighbourhood_c}")
        return r * link.point(th) + 1j * total.sharp(th, r) + c

    chart = ImmersionChart(list(link.names) + ["r"], list(link.lower) + [lo], list(link.upper) + [r_hi],
                           ev, derivative_mode="finite-difference",
                           label=label or f"graph({cone.label})", meta={"exact": exact})
    if not exact:
        chart.meta["symplectic_defect"] = sampled_symplectic_defect(chart)
    return chart


def sampled_symplectic_defect(chart: ImmersionChart, samples: int = 8, seed: int = 0) -> float:
    """
    一阶图映射的 max |ι*ω̃|，在参数域内部（角向各留 10% 边距，r 取有限段上的对数均匀点）随机取样。

    落在邻域之外的样本跳过；全部落在邻域外时返回 nan。
    """
    n = len(chart.names) - 1
    r_lo = max(chart.lower[n], 1e-3)
    r_hi = min(chart.upper[n], 10.0 * max(r_lo, 1.0))
    lo, hi = chart.lower[:n], chart.upper[:n]
    margin = 0.1 * (hi - lo)
    rng = np.random.default_rng(seed)
    worst = np.nan
    for _ in range(samples):
        th = lo + margin + (hi - lo - 2.0 * margin) * rng.random(n)
        r = r_lo * (r_hi / r_lo) ** (0.1 + 0.8 * rng.random())
        try:
            W = symplectic_pullback(chart, np.append(th, r))
        except OutOfNeighbourhood:
            continue
        worst = np.nanmax([worst, float(np.max(np.abs(W)))])
    return float(worst)
