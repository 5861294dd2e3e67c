# -*- coding: utf-8 -*-
"""
SO(m) 约化的粘合剖面：γ_c 颈的图描述、插值势函数与 L_t 的剖面曲线

平面对场景中 L_t = {z(s)·θ : θ ∈ S^{m−1}}，一切几何量都由复曲线 z(s) 决定：

  HatProfile     —— 单位尺度的颈 λ(s) 作为锥上的图：x = Re λ，Â′(x) = Im λ，
                    Â(x) = −∫_x^∞ y dx 由分段 Gauss–Legendre 累积积分 + 解析尾项给出
  GluedPotential —— A_t = (1 − G(r/T))·Â_t（L 的 CS 端是精确锥，A ≡ 0），
                    Â_t(r) = t²Â(r/t)，T = t^τ，带三阶导数
  ReducedCurve   —— 均匀 σ 网格（步长 h = ln10 / points_per_decade，关于 0 对称）上的
                    z、dz/dσ，以及半节点上的 z、dz/dσ、法向角 ψ、dψ/dσ；
                    σ 是在插值环带 T ≤ r ≤ 2T 附近加密 annulus_refine 倍的拉伸坐标

s ≥ 0 一侧 z = r + i·A_t′(r)，r = t·X(s)；另一侧由对称 z(−s) = e^{iπ/m}·conj(z(s)) 给出。
法向 n = i·e^{iψ}：ψ 在 |s| ≥ s_a（X(s_a) = R̂）之外为常数（0 或 −(m−1)π/m），
在核心区 [−s_a, s_a] 上用 quintic smoothstep 过渡。

典型用法::

    from conifold_forge.model_zoo import make_two_plane_scenario
    from conifold_forge.profile import HatProfile, build_glued_curve

    sc = make_two_plane_scenario(3)
    hat = HatProfile(sc.neck)
    curve = build_glued_curve(hat, t=0.1, tau=0.8)
    print(curve.s.size, curve.s_T, curve.s_2T)
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from conifold_forge.errors import DegenerateFrame, WindowCollapse
from conifold_forge.geometry import GraphOneForm
from conifold_forge.model_zoo import GammaNeck
from conifold_forge.weighted_spaces import sphere_area

# Â 累积积分表的步长（s 参数）
TABLE_STEP = 1.0 / 64.0
# 超过 x_far·c 后用 y = c^m / (m x^{m−1}) 的解析尾项（相对误差 O(x^{−2m})）
X_FAR = 1e4

_GL_X, _GL_W = np.polynomial.legendre.leggauss(4)


# ────────────────────────────────────────────
# 截断函数
# ────────────────────────────────────────────

def smoothstep(v, deriv: int = 0):
    """[0,1] 上的 quintic smoothstep S(v) = 10v³ − 15v⁴ + 6v⁵ 及其前三阶导数，区间外取常数延拓。"""
    v = np.asarray(v, dtype=float)
    w = np.clip(v, 0.0, 1.0)
    if deriv == 0:
        return w ** 3 * (10.0 - 15.0 * w + 6.0 * w * w)
    inside = (v > 0.0) & (v < 1.0)
    if deriv == 1:
        out = 30.0 * w * w * (1.0 - w) ** 2
    elif deriv == 2:
        out = 60.0 * w * (1.0 - w) * (1.0 - 2.0 * w)
    elif deriv == 3:
        out = 60.0 * (1.0 - 6.0 * w + 6.0 * w * w)
    else:
        raise ValueError(f"只支持三阶以内的导数: {deriv}")
    return np.where(inside, out, 0.0)


def cutoff_G(x, deriv: int = 0):
    """G(x) = S(x − 1)：(0,1] 上恒为 0，[2,∞) 上恒为 1，G(1.5) = 0.5。"""
    return smoothstep(np.asarray(x, dtype=float) - 1.0, deriv)


def frame_angle(s, s_a: float, m: int) -> Tuple[np.ndarray, np.ndarray]:
    """法向角 ψ(s) 与 ψ′(s)：s ≥ s_a 为 0，s ≤ −s_a 为 −(m−1)π/m。"""
    s = np.asarray(s, dtype=float)
    u = (s_a - s) / (2.0 * s_a)
    total = (m - 1) * np.pi / m
    return -total * smoothstep(u), total * smoothstep(u, 1) / (2.0 * s_a)


# ────────────────────────────────────────────
# 颈作为锥上的图
# ────────────────────────────────────────────

class HatProfile:
    """
    单位尺度 γ_c 颈的 s ≥ 0 一半：x = X(s) = Re λ(s) 严格递增，Â′(x) = Y(s) = Im λ(s)。

    Args:
        neck: model_zoo.make_gamma_neck 的结果
    """

    def __init__(self, neck: GammaNeck):
        self.neck = neck
        self.m = neck.m
        self.c = float(neck.c)
        self.x0 = float(self.X(0.0))
        s_far = float(self.s_of_x(X_FAR * self.c))
        n = int(np.ceil(s_far / TABLE_STEP))
        self._nodes = np.arange(n + 1) * TABLE_STEP
        self._s_far = float(self._nodes[-1])
        pieces = self._integral(self._nodes[:-1], self._nodes[1:])
        tail = self._tail(self._s_far)
        # 表中存 Â(s_k) = −(∫_{s_k}^{s_far} Y X′ ds + 尾项)
        cum = np.concatenate([np.cumsum(pieces[::-1])[::-1], [0.0]])
        self._table = -(cum + tail)

    # 曲线量
    def lam(self, s) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.neck.lam_s(s)

    def X(self, s):
        return np.real(self.lam(s)[0])

    def dX(self, s):
        return np.real(self.lam(s)[1])

    def Y(self, s):
        return np.imag(self.lam(s)[0])

    def _g(self, s):
        lam, dlam, _ = self.lam(s)
        return np.imag(lam) * np.real(dlam)

    def _integral(self, a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        total = np.zeros(np.broadcast(a, b).shape)
        for xi, wi in zip(_GL_X, _GL_W):
            total = total + wi * self._g(mid + half * xi)
        return total * half

    def _tail(self, s):
        x = self.X(s)
        m = self.m
        return self.c ** m * x ** (2.0 - m) / (m * (m - 2.0))

    def s_of_x(self, x):
        """X(s) = x 的反解（s ≥ 0），x < X(0) 时报错。"""
        x = np.asarray(x, dtype=float)
        if np.any(x < self.x0 * (1.0 - 1e-15)):
            raise ValueError(f"x 必须 ≥ X(0) = {self.x0:.6g}")
        cos0 = np.cos(0.5 * np.pi / self.m)

        def one(xv):
            if xv <= self.x0:
                return 0.0
            hi = np.log(2.0 ** (1.0 / self.m) * xv / (self.c * cos0)) + 1.0
            return brentq(lambda s: float(self.X(s)) - xv, 0.0, hi, xtol=1e-15, rtol=1e-15)

        out = np.vectorize(one, otypes=[float])(x)
        return out if out.ndim else float(out)

    # 原函数
    def primitive(self, s):
        """Â(X(s))，s ≥ 0。"""
        s = np.asarray(s, dtype=float)
        if np.any(s < 0):
            raise ValueError("原函数只在 s ≥ 0 一侧定义")
        near = s < self._s_far
        k = np.minimum(np.floor(s / TABLE_STEP).astype(int), len(self._nodes) - 2)
        upper = self._nodes[k + 1]
        inner = self._table[k + 1] - self._integral(s, upper)
        out = np.where(near, inner, -self._tail(s))
        return out if out.ndim else float(out)

    def second(self, s):
        """Â″(x) = Y′/X′。"""
        dlam = self.lam(s)[1]
        return np.imag(dlam) / np.real(dlam)

    def third(self, s):
        """Â‴(x) = Im(conj(λ′)·λ″)/X′³。"""
        _, dlam, d2lam = self.lam(s)
        return np.imag(np.conj(dlam) * d2lam) / np.real(dlam) ** 3

    def end_form(self, cone) -> GraphOneForm:
        """颈的第一个 AC 端作为锥上的径向闭形式 dÂ（坐标为图坐标 x）。"""
        return GraphOneForm.exact_radial(
            cone,
            lambda x: float(self.Y(self.s_of_x(x))),
            lambda x: float(self.second(self.s_of_x(x))),
            lambda x: float(self.third(self.s_of_x(x))),
            rate_window=(1.0 - self.m, 1.0 - self.m),
        )


# ────────────────────────────────────────────
# 插值势函数
# ────────────────────────────────────────────

class PotentialJet(NamedTuple):
    r: np.ndarray
    a0: np.ndarray    # A_t
    a1: np.ndarray    # A_t′
    a2: np.ndarray    # A_t″
    a3: np.ndarray    # A_t‴


@dataclass(frozen=True)
class GluedPotential:
    """A_t(r) = (1 − G(r/T))·t²Â(r/t) 及其关于 r 的前三阶导数。"""
    hat: HatProfile
    t: float
    T: float

    def at_s(self, s) -> PotentialJet:
        s = np.asarray(s, dtype=float)
        t, T, hat = self.t, self.T, self.hat
        r = t * hat.X(s)
        u = r / T
        G = [cutoff_G(u, d) for d in range(4)]
        h0 = t * t * hat.primitive(s)
        h1 = t * hat.Y(s)
        h2 = hat.second(s)
        h3 = hat.third(s) / t
        keep = 1.0 - G[0]
        g1, g2, g3 = G[1] / T, G[2] / T ** 2, G[3] / T ** 3
        return PotentialJet(
            r,
            keep * h0,
            keep * h1 - g1 * h0,
            keep * h2 - 2.0 * g1 * h1 - g2 * h0,
            keep * h3 - 3.0 * g1 * h2 - 3.0 * g2 * h1 - g3 * h0,
        )

    def at_r(self, r) -> PotentialJet:
        return self.at_s(self.hat.s_of_x(np.asarray(r, dtype=float) / self.t))


def glued_radius(hat: HatProfile, t: float, s, s_a: float) -> np.ndarray:
    """
    ρ_t(s)：|s| ≥ s_a 时为 t·X(|s|)（L 上为 r，颈上为 t·ρ̂）；
    核心区用 smoothstep 在 X(s) 与 X(−s) 之间过渡，关于 s 对称，限制在 [t·X(0)/2, 2t·R̂]。
    """
    s = np.abs(np.asarray(s, dtype=float))
    out = t * hat.X(s)
    core = s < s_a
    if np.any(core):
        sc = s[core]
        u = smoothstep((s_a - sc) / (2.0 * s_a))
        mixed = t * ((1.0 - u) * hat.X(sc) + u * hat.X(-sc))
        out = np.array(out, dtype=float)
        out[core] = np.clip(mixed, 0.5 * t * hat.x0, 2.0 * t * float(hat.X(s_a)))
    return out


# ────────────────────────────────────────────
# 环带加密的拉伸坐标
# ────────────────────────────────────────────

def _smoothstep_integral(v):
    """∫_0^v S = v⁴(5/2 − 3v + v²)，v ∈ [0, 1]。"""
    return v ** 4 * (2.5 - 3.0 * v + v * v)


@dataclass(frozen=True)
class AnnulusStretch:
    """
    s ≥ 0 上的拉伸 σ(s) = s + (R − 1)·∫_0^s P，P 在 [s_T, s_2T] 上为 1，
    两侧各用宽 w 的 smoothstep 过渡到 0。dσ/ds = ν(s) = 1 + (R − 1)P(s)。
    """
    s_T: float
    s_2T: float
    refine: float

    @property
    def width(self) -> float:
        return min(0.25, 0.5 * self.s_T)

    def bump(self, s):
        s = np.abs(np.asarray(s, dtype=float))
        w = self.width
        return smoothstep((s - self.s_T + w) / w) - smoothstep((s - self.s_2T) / w)

    def density(self, s):
        return 1.0 + (self.refine - 1.0) * self.bump(s)

    def sigma(self, s):
        s = np.asarray(s, dtype=float)
        w = self.width
        lo = np.clip((s - self.s_T + w) / w, 0.0, 1.0)
        hi = np.clip((s - self.s_2T) / w, 0.0, 1.0)
        mass = (w * _smoothstep_integral(lo) + np.clip(s - self.s_T, 0.0, self.s_2T - self.s_T)
                + w * (hi - _smoothstep_integral(hi)))
        return s + (self.refine - 1.0) * mass

    def inverse(self, sigma, s_max: float) -> np.ndarray:
        """σ ↦ s（s ≥ 0）：查表插值后做 Newton 修正。"""
        sigma = np.asarray(sigma, dtype=float)
        table = np.linspace(0.0, s_max, 4096)
        s = np.interp(sigma, self.sigma(table), table)
        # σ 超出表尾时 ν = 1，线性外推
        tail = sigma > self.sigma(s_max)
        s = np.where(tail, s_max + sigma - self.sigma(s_max), s)
        for _ in range(6):
            s = s - (self.sigma(s) - sigma) / self.density(s)
        return np.where(sigma == 0.0, 0.0, s)


# ────────────────────────────────────────────
# 剖面曲线
# ────────────────────────────────────────────

@dataclass(frozen=True)
class ReducedCurve:
    """
    节点 σ_k = k·h（k = −K…K）上的 z、dz/dσ，半节点 σ_{k+½} 上的 z、dz/dσ、ψ、dψ/dσ。
    s 存几何参数 s(σ_k)（非均匀），stretch / stretch_half 存 ds/dσ。

    s_a:   核心区半宽（X(s_a) = R̂）
    s_T:   r = t^τ 处的 s；s_2T 同理
    s_eps: r = ε 处的 s（颈区外缘）
    """
    m: int
    h: float
    s: np.ndarray
    z: np.ndarray
    dz: np.ndarray
    s_half: np.ndarray
    z_half: np.ndarray
    dz_half: np.ndarray
    psi_half: np.ndarray
    dpsi_half: np.ndarray
    t: float
    T: float
    s_a: float
    s_T: float
    s_2T: float
    s_eps: float
    stretch: Optional[np.ndarray] = None
    stretch_half: Optional[np.ndarray] = None
    label: str = ""

    def __post_init__(self):
        if self.stretch is None:
            object.__setattr__(self, "stretch", np.ones(self.s.size))
        if self.stretch_half is None:
            object.__setattr__(self, "stretch_half", np.ones(self.s_half.size))

    @property
    def size(self) -> int:
        return int(self.s.size)

    @property
    def radius(self) -> np.ndarray:
        return np.abs(self.z)

    @property
    def speed(self) -> np.ndarray:
        return np.abs(self.dz)

    @property
    def dradius(self) -> np.ndarray:
        return np.real(np.conj(self.z) * self.dz) / np.abs(self.z)

    @property
    def density(self) -> np.ndarray:
        """V = |z|^{m−1}|z′|。"""
        return np.abs(self.z) ** (self.m - 1) * np.abs(self.dz)

    @property
    def simpson(self) -> np.ndarray:
        w = np.ones(self.size)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        return w * self.h / 3.0

    @property
    def vol(self) -> np.ndarray:
        return sphere_area(self.m) * self.density * self.simpson

    @property
    def normal_half(self) -> np.ndarray:
        return 1j * np.exp(1j * self.psi_half)

    @property
    def b_half(self) -> np.ndarray:
        """b = Re(conj(z′)·e^{iψ}) > 0。"""
        return np.real(np.conj(self.dz_half) * np.exp(1j * self.psi_half))

    @property
    def core(self) -> np.ndarray:
        return np.abs(self.s) < self.s_a

    @property
    def core_half(self) -> np.ndarray:
        return np.abs(self.s_half) < self.s_a

    @property
    def annulus(self) -> np.ndarray:
        """插值环带 T ≤ r ≤ 2T（两侧）。"""
        a = np.abs(self.s)
        return (a >= self.s_T) & (a <= self.s_2T)

    def scaled(self, lam: float) -> "ReducedCurve":
        """环境伸缩 z ↦ λz（网格不变）。"""
        return replace(self, z=lam * self.z, dz=lam * self.dz, z_half=lam * self.z_half,
                       dz_half=lam * self.dz_half, label=f"{self.label}*{lam:g}")


def build_glued_curve(hat: HatProfile, t: float, tau: float, R_hat: float = 1.0, eps: float = 1.0,
                      r_max: float = 100.0, points_per_decade: int = 96,
                      annulus_refine: float = 8.0) -> ReducedCurve:
    """
    在 s ∈ [−s(Kh), s(Kh)]（t·X(s(Kh)) ≥ r_max）上采样粘合剖面。

    网格在拉伸坐标 σ 上均匀：远离插值环带时 ds = h，环带 [s_T, s_2T] 内 ds = h / annulus_refine。

    Raises:
        WindowCollapse: tR̂ < t^τ < 2t^τ < ε < r_max 不成立
        DegenerateFrame: 某个半节点上 b ≤ 0
    """
    if not t > 0:
        raise ValueError(f"t 必须为正: {t}")
    if annulus_refine < 1.0:
        raise ValueError(f"annulus_refine 必须 ≥ 1: {annulus_refine}")
    T = t ** tau
    if not (t * R_hat < T and 2.0 * T < eps < r_max):
        raise WindowCollapse(f"颈部区间顺序不成立: tR̂={t * R_hat:.4g}, t^τ={T:.4g}, ε={eps}, r_max={r_max}")
    if R_hat < hat.x0:
        raise WindowCollapse(f"R̂ = {R_hat} 小于 X(0) = {hat.x0:.4g}")
    m = hat.m
    h = np.log(10.0) / points_per_decade
    s_T = float(hat.s_of_x(T / t))
    s_2T = float(hat.s_of_x(2.0 * T / t))
    stretch = AnnulusStretch(s_T, s_2T, float(annulus_refine))
    s_max = float(hat.s_of_x(r_max / t))
    K = int(np.ceil(float(stretch.sigma(s_max)) / h))
    fine = stretch.inverse(np.arange(2 * K + 1) * (0.5 * h), s_max + h)
    ds = 1.0 / stretch.density(fine)

    pot = GluedPotential(hat, t, T)
    jet = pot.at_s(fine)
    dr = t * hat.dX(fine) * ds
    z1 = jet.r + 1j * jet.a1
    dz1 = (1.0 + 1j * jet.a2) * dr

    rot = np.exp(1j * np.pi / m)
    s_all = np.concatenate([-fine[:0:-1], fine])
    z_all = np.concatenate([rot * np.conj(z1[:0:-1]), z1])
    dz_all = np.concatenate([-rot * np.conj(dz1[:0:-1]), dz1])
    ds_all = np.concatenate([ds[:0:-1], ds])

    s_a = float(hat.s_of_x(R_hat))
    s_half = s_all[1::2]
    psi_half, dpsi_half = frame_angle(s_half, s_a, m)
    curve = ReducedCurve(
        m, h, s_all[::2], z_all[::2], dz_all[::2], s_half, z_all[1::2], dz_all[1::2],
        psi_half, dpsi_half * ds_all[1::2], float(t), float(T), s_a,
        s_T, s_2T, float(hat.s_of_x(eps / t)),
        stretch=ds_all[::2], stretch_half=ds_all[1::2],
        label=f"L_t(t={t:g})",
    )
    if np.any(curve.b_half <= 0):
        raise DegenerateFrame("法向标架与切向量夹角超过 π/2（b ≤ 0）")
    return curve
