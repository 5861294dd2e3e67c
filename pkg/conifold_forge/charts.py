# -*- coding: utf-8 -*-
"""
浸入图卡与链环（link）参数化

ImmersionChart 是所有残差计算的基本单位：一个盒形定义域上的映射 ℂᵐ 值函数，
附带一阶（jac，m×n 复矩阵）和二阶（hess，m×n×n 复数组）求值器。
没有解析导数时使用 4 阶中心差分，步长 h = 1e-5·max(1, |p|)。

LinkChart 描述 Σ ⊂ S^{2m−1}：点、切向量、二阶导数；球面链环使用超球坐标，
平面锥记录酉标架 U（平面 = U·ℝᵐ），环面链环为 Harvey–Lawson T² 锥。

典型用法::

    from conifold_forge.charts import sphere_link, cone_chart

    link = sphere_link(3)
    chart = cone_chart(link, r_lo=0.5, r_hi=2.0)
    z = chart.eval([0.3, 1.2, 1.0])      # 坐标顺序 (θ…, r)
    J = chart.jac([0.3, 1.2, 1.0])       # 3×3 复矩阵
"""

from __future__ import annotations

from typing import Callable, Dict, List, Optional, Sequence, Tuple, Any

import numpy as np

from conifold_forge.errors import DomainError, DerivativeUnavailable

# 4 阶中心差分系数：(−f(x+2h) + 8f(x+h) − 8f(x−h) + f(x−2h)) / (12h)
_FD_OFFSETS = (2.0, 1.0, -1.0, -2.0)
_FD_COEFFS = (-1.0, 8.0, -8.0, 1.0)

# 二阶导数由差分后的 jac 再差分，步长放大以抑制舍入误差
_FD_HESS_STEP = 1e-3


def _fd_step(value: float, base: float) -> float:
    return base * max(1.0, abs(value))


def fd_derivative(fn: Callable[[np.ndarray], np.ndarray], p: np.ndarray, base: float = 1e-5) -> np.ndarray:
    """
    对向量值函数 fn 在点 p 处做 4 阶中心差分。

    Returns:
        数组，形状为 fn(p).shape + (len(p),)
    """
    p = np.asarray(p, dtype=float)
    cols = []
    for j in range(p.size):
        h = _fd_step(p[j], base)
        acc = 0.0
        for off, coef in zip(_FD_OFFSETS, _FD_COEFFS):
            q = p.copy()
            q[j] += off * h
            acc = acc + coef * np.asarray(fn(q))
        cols.append(acc / (12.0 * h))
    return np.stack(cols, axis=-1)


# ────────────────────────────────────────────
# 浸入图卡
# ────────────────────────────────────────────

class ImmersionChart:
    """
    盒形定义域上的参数化浸入 ι: D ⊂ ℝⁿ → ℂᵐ。

    Args:
        names:  坐标名列表，如 ["theta0", "theta1", "r"]
        lower:  各坐标下界
        upper:  各坐标上界（可为 np.inf）
        eval_fn: p ↦ ℂᵐ 点（复数组，长度 m）
        jac_fn:  p ↦ m×n 复矩阵；None 时按 derivative_mode 决定是否差分
        hess_fn: p ↦ m×n×n 复数组
        derivative_mode: "analytic" 或 "finite-difference"
        closed: 定义域是否为闭盒；False 时边界点视为越界
        label:  图卡标识
    """

    def __init__(
        self,
        names: Sequence[str],
        lower: Sequence[float],
        upper: Sequence[float],
        eval_fn: Callable[[np.ndarray], np.ndarray],
        jac_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None,
        hess_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None,
        derivative_mode: str = "analytic",
        closed: bool = True,
        label: str = "",
        meta: Optional[Dict[str, Any]] = None,
    ):
        if derivative_mode not in ("analytic", "finite-difference"):
            raise ValueError(f"未知的 derivative_mode: {derivative_mode!r}")
        self.names: Tuple[str, ...] = tuple(names)
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        if self.lower.shape != (len(self.names),) or self.upper.shape != (len(self.names),):
            raise ValueError("lower/upper 长度必须与坐标名一致")
        self._eval = eval_fn
        self._jac = jac_fn
        self._hess = hess_fn
        self.derivative_mode = derivative_mode
        self.closed = closed
        self.label = label
        self.meta: Dict[str, Any] = dict(meta or {})

    @property
    def dim(self) -> int:
        return len(self.names)

    def contains(self, p: Sequence[float], tol: float = 1e-12) -> bool:
        p = np.asarray(p, dtype=float)
        if p.shape != self.lower.shape or not np.all(np.isfinite(p)):
            return False
        if self.closed:
            return bool(np.all(p >= self.lower - tol) and np.all(p <= self.upper + tol))
        return bool(np.all(p > self.lower) and np.all(p < self.upper))

    def _check(self, p: Sequence[float]) -> np.ndarray:
        q = np.asarray(p, dtype=float)
        if not self.contains(q):
            raise DomainError(f"参数点 {q.tolist()} 不在图卡 {self.label or '?'} 的定义域内")
        return q

    def eval(self, p: Sequence[float]) -> np.ndarray:
        return np.asarray(self._eval(self._check(p)), dtype=complex)

    def jac(self, p: Sequence[float]) -> np.ndarray:
        q = self._check(p)
        if self._jac is not None:
            return np.asarray(self._jac(q), dtype=complex)
        if self.derivative_mode == "finite-difference":
            return fd_derivative(lambda x: np.asarray(self._eval(x), dtype=complex), q)
        raise DerivativeUnavailable(f"图卡 {self.label or '?'} 没有一阶导数求值器")

    def hess(self, p: Sequence[float]) -> np.ndarray:
        q = self._check(p)
        if self._hess is not None:
            return np.asarray(self._hess(q), dtype=complex)
        if self.derivative_mode == "finite-difference":
            if self._jac is not None:
                inner = lambda x: np.asarray(self._jac(x), dtype=complex)
            else:
                inner = lambda x: fd_derivative(lambda y: np.asarray(self._eval(y), dtype=complex), x)
            h = fd_derivative(inner, q, base=_FD_HESS_STEP)
            return 0.5 * (h + np.swapaxes(h, 1, 2))
        raise DerivativeUnavailable(f"图卡 {self.label or '?'} 没有二阶导数求值器")

    def sample(self, n: int, rng: np.random.Generator, margin: float = 1e-3,
               box: Optional[Tuple[Sequence[float], Sequence[float]]] = None) -> np.ndarray:
        """在定义域（或给定子盒）内部均匀取 n 个点；无穷上界需要显式 box。"""
        lo, hi = (self.lower, self.upper) if box is None else (np.asarray(box[0], float), np.asarray(box[1], float))
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("定义域无界，请通过 box 指定采样范围")
        width = hi - lo
        return lo + margin * width + rng.random((n, self.dim)) * (1.0 - 2.0 * margin) * width

    # ──────────────────────────────────────────
    # 变换
    # ──────────────────────────────────────────

    def with_mode(self, mode: str) -> "ImmersionChart":
        """返回同一映射但导数模式不同的图卡（finite-difference 时丢弃解析导数）。"""
        if mode == "analytic":
            return ImmersionChart(self.names, self.lower, self.upper, self._eval, self._jac,
                                  self._hess, "analytic", self.closed, self.label, self.meta)
        return ImmersionChart(self.names, self.lower, self.upper, self._eval, None, None,
                              "finite-difference", self.closed, self.label, self.meta)

    def translated(self, shift: Sequence[complex]) -> "ImmersionChart":
        c = np.asarray(shift, dtype=complex)
        return ImmersionChart(self.names, self.lower, self.upper,
                              lambda p: self._eval(p) + c, self._jac, self._hess,
                              self.derivative_mode, self.closed, self.label, self.meta)

    def transformed(self, U: np.ndarray) -> "ImmersionChart":
        """与环境线性映射 U（m×m 复矩阵）复合。"""
        U = np.asarray(U, dtype=complex)
        jac = (lambda p: U @ self._jac(p)) if self._jac is not None else None
        hess = (lambda p: np.einsum("ab,bjk->ajk", U, self._hess(p))) if self._hess is not None else None
        return ImmersionChart(self.names, self.lower, self.upper,
                              lambda p: U @ self._eval(p), jac, hess,
                              self.derivative_mode, self.closed, self.label, self.meta)

    def rescaled(self, t: float, radial_index: Optional[int] = None) -> "ImmersionChart":
        """
        环境伸缩 t。radial_index 给定时同时把该坐标重新参数化为 r/t：
        新图卡 ι_t(…, r) = t·ι(…, r/t)，定义域的该坐标整体乘以 t。
        """
        if not t > 0:
            raise ValueError(f"伸缩因子必须为正: {t}")
        n = self.dim
        scale = np.ones(n)
        if radial_index is not None:
            scale[radial_index] = t
        inv = 1.0 / scale

        def ev(p):
            return t * np.asarray(self._eval(p * inv), dtype=complex)

        jac = None
        hess = None
        if self._jac is not None:
            jac = lambda p: t * np.asarray(self._jac(p * inv), dtype=complex) * inv[None, :]
        if self._hess is not None:
            hess = lambda p: t * np.asarray(self._hess(p * inv), dtype=complex) * inv[None, :, None] * inv[None, None, :]
        return ImmersionChart(self.names, self.lower * scale, self.upper * scale, ev, jac, hess,
                              self.derivative_mode, self.closed, self.label, self.meta)


# ────────────────────────────────────────────
# 链环
# ────────────────────────────────────────────

class LinkChart:
    """
    链环 Σ ⊂ S^{2m−1} 的参数化。

    kind:       "sphere"（U·S^{m−1}）、"torus"（平坦环面，带 Gram 矩阵）或 "custom"
    components: 连通分支数（多个全同分支共用一个参数化，谱按分支数放大）
    frame:      平面锥的酉标架 U，非平面锥为 None
    """

    def __init__(
        self,
        m: int,
        names: Sequence[str],
        lower: Sequence[float],
        upper: Sequence[float],
        point: Callable[[np.ndarray], np.ndarray],
        tangent: Callable[[np.ndarray], np.ndarray],
        second: Callable[[np.ndarray], np.ndarray],
        kind: str = "custom",
        components: int = 1,
        frame: Optional[np.ndarray] = None,
        label: str = "",
        extra: Optional[Dict[str, Any]] = None,
    ):
        if m < 3:
            raise ValueError(f"要求 m ≥ 3，收到 m={m}")
        self.m = m
        self.names = tuple(names)
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        self.point = point
        self.tangent = tangent
        self.second = second
        self.kind = kind
        self.components = components
        self.frame = None if frame is None else np.asarray(frame, dtype=complex)
        self.label = label
        self.extra: Dict[str, Any] = dict(extra or {})

    @property
    def dim(self) -> int:
        return len(self.names)

    @property
    def planar(self) -> bool:
        return self.frame is not None

    def metric(self, theta: Sequence[float]) -> np.ndarray:
        T = self.tangent(np.asarray(theta, dtype=float))
        return np.real(T.conj().T @ T)

    def sample(self, n: int, rng: np.random.Generator, margin: float = 0.05) -> np.ndarray:
        width = self.upper - self.lower
        return self.lower + margin * width + rng.random((n, self.dim)) * (1.0 - 2.0 * margin) * width

    def transformed(self, U: np.ndarray, label: str = "") -> "LinkChart":
        """链环整体乘以酉矩阵 U（平面锥的标架随之更新）。"""
        U = np.asarray(U, dtype=complex)
        frame = None if self.frame is None else U @ self.frame
        return LinkChart(
            self.m, self.names, self.lower, self.upper,
            lambda th: U @ self.point(th),
            lambda th: U @ self.tangent(th),
            lambda th: np.einsum("ab,bjk->ajk", U, self.second(th)),
            kind=self.kind, components=self.components, frame=frame,
            label=label or self.label, extra=self.extra,
        )


def _sphere_factor(kind: str, theta: float, order: int) -> float:
    shift = order * np.pi / 2.0
    return np.sin(theta + shift) if kind == "s" else np.cos(theta + shift)


def _sphere_terms(n: int) -> List[List[Tuple[int, str]]]:
    # x_k = Π_{j<k} sin θ_j · cos θ_k；最后一个坐标为 Π sin θ_j
    terms = []
    for k in range(n + 1):
        factors = [(j, "s") for j in range(min(k, n))]
        if k < n:
            factors.append((k, "c"))
        terms.append(factors)
    return terms


def _sphere_derivative(terms, theta: np.ndarray, orders: Sequence[int]) -> np.ndarray:
    out = np.zeros(len(terms))
    for k, factors in enumerate(terms):
        used = {j for j, _ in factors}
        if any(orders[j] > 0 and j not in used for j in range(len(orders))):
            continue
        val = 1.0
        for j, kind in factors:
            val *= _sphere_factor(kind, theta[j], orders[j])
        out[k] = val
    return out


def sphere_link(m: int, frame: Optional[np.ndarray] = None, components: int = 1, label: str = "") -> LinkChart:
    """
    平面锥 U·ℝᵐ 的链环 U·S^{m−1}，超球坐标 θ_0…θ_{m−2}。

    θ_j ∈ [0, π]（j < m−2），θ_{m−2} ∈ [0, 2π]。
    """
    if m < 3:
        raise ValueError(f"要求 m ≥ 3，收到 m={m}")
    n = m - 1
    U = np.eye(m, dtype=complex) if frame is None else np.asarray(frame, dtype=complex)
    terms = _sphere_terms(n)

    def point(th):
        return U @ _sphere_derivative(terms, th, [0] * n).astype(complex)

    def tangent(th):
        cols = []
        for i in range(n):
            orders = [0] * n
            orders[i] = 1
            cols.append(_sphere_derivative(terms, th, orders))
        return U @ np.stack(cols, axis=1).astype(complex)

    def second(th):
        out = np.zeros((m, n, n))
        for i in range(n):
            for j in range(i, n):
                orders = [0] * n
                orders[i] += 1
                orders[j] += 1
                out[:, i, j] = _sphere_derivative(terms, th, orders)
                out[:, j, i] = out[:, i, j]
        return np.einsum("ab,bjk->ajk", U, out.astype(complex))

    upper = [np.pi] * (n - 1) + [2.0 * np.pi]
    return LinkChart(m, [f"theta{i}" for i in range(n)], [0.0] * n, upper,
                     point, tangent, second, kind="sphere", components=components,
                     frame=U, label=label or ("S^%d" % n))


def harvey_lawson_torus_link() -> LinkChart:
    """
    Harvey–Lawson T² 锥（m=3）的链环：(e^{ia}, e^{ib}, e^{−i(a+b)})/√3。

    诱导度量为平坦的 g′ = (1/3)[[2,1],[1,2]]，对称群为对角极大环面，dim G = 2。
    """
    s = 1.0 / np.sqrt(3.0)

    def point(th):
        a, b = th
        return s * np.array([np.exp(1j * a), np.exp(1j * b), np.exp(-1j * (a + b))])

    def tangent(th):
        a, b = th
        w = np.exp(-1j * (a + b))
        return s * np.array([[1j * np.exp(1j * a), 0.0],
                             [0.0, 1j * np.exp(1j * b)],
                             [-1j * w, -1j * w]])

    def second(th):
        a, b = th
        w = np.exp(-1j * (a + b))
        out = np.zeros((3, 2, 2), dtype=complex)
        out[0, 0, 0] = -np.exp(1j * a)
        out[1, 1, 1] = -np.exp(1j * b)
        out[2, :, :] = -w
        return s * out

    gram = np.array([[2.0, 1.0], [1.0, 2.0]]) / 3.0
    return LinkChart(3, ["a", "b"], [0.0, 0.0], [2.0 * np.pi, 2.0 * np.pi],
                     point, tangent, second, kind="torus", label="T2-HL",
                     extra={"gram": gram, "periods": [2.0 * np.pi, 2.0 * np.pi]})


# ────────────────────────────────────────────
# 锥图卡
# ────────────────────────────────────────────

def cone_chart(link: LinkChart, r_lo: float, r_hi: float,
               center: Optional[Sequence[complex]] = None, label: str = "") -> ImmersionChart:
    """
    锥浸入 ι(θ, r) = r·link(θ) + center，坐标顺序 (θ…, r)，解析导数。
    """
    return profile_chart(link, lambda r: r + 0j, lambda r: 1.0 + 0j, lambda r: 0j, r_lo, r_hi,
                         center=center, label=label or f"cone({link.label})")


def profile_chart(
    link: LinkChart,
    u: Callable[[float], complex],
    du: Callable[[float], complex],
    d2u: Callable[[float], complex],
    r_lo: float,
    r_hi: float,
    center: Optional[Sequence[complex]] = None,
    coord: str = "r",
    closed: bool = True,
    label: str = "",
    meta: Optional[Dict[str, Any]] = None,
) -> ImmersionChart:
    """
    SO(m)-型剖面图卡 ι(θ, s) = u(s)·L(θ) + c，解析导数。

    u(r) = r 为锥本身，u(r) = r + i·a(r) 为径向图，u = λ(φ) 为 γ_c 颈。
    对任意 Lagrangian 锥，这类图卡都是 Lagrangian 的。
    """
    n = link.dim
    c = np.zeros(link.m, dtype=complex) if center is None else np.asarray(center, dtype=complex)

    def ev(p):
        return u(p[n]) * link.point(p[:n]) + c

    def jac(p):
        J = np.empty((link.m, n + 1), dtype=complex)
        J[:, :n] = u(p[n]) * link.tangent(p[:n])
        J[:, n] = du(p[n]) * link.point(p[:n])
        return J

    def hess(p):
        H = np.zeros((link.m, n + 1, n + 1), dtype=complex)
        H[:, :n, :n] = u(p[n]) * link.second(p[:n])
        T = du(p[n]) * link.tangent(p[:n])
        H[:, :n, n] = T
        H[:, n, :n] = T
        H[:, n, n] = d2u(p[n]) * link.point(p[:n])
        return H

    return ImmersionChart(list(link.names) + [coord], list(link.lower) + [r_lo], list(link.upper) + [r_hi],
                          ev, jac, hess, closed=closed, label=label, meta=meta)
