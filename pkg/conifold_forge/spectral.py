# -*- coding: utf-8 -*-
"""
链环 Laplace 谱与例外权重

  link_spectrum        —— 圆球面 / 平坦环面的解析谱；S²（m=3）另有二十面体细分网格 +
                          余切 Laplacian 的离散谱，两级网格 Richardson 外推
  exceptional_weights  —— γ² + (m−2)γ − e = 0 的根及其重数（按端分解），检查谱覆盖与配对
  covering_spectrum    —— 自动加大 n_max 直到谱覆盖给定窗口
  is_fredholm_weight   —— β 与例外集的距离 > 1e−9
  cokernel_dimension   —— AC / CS / CS-AC 三种情形的余核维数
  stability_check      —— γ ∈ [0, 2] 内的例外权重计数判定锥的稳定性
  moment_map_ranks     —— 平移与 su(m) 矩映射限制到链环后的秩（推断 dim G）

典型用法::

    from conifold_forge.charts import sphere_link
    from conifold_forge.spectral import link_spectrum, exceptional_weights

    spec = link_spectrum(sphere_link(3), n_max=3)
    ex = exceptional_weights(spec, 3, (-3.0, 3.0))
    print(ex.entries)
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh
from scipy.special import comb

from conifold_forge.charts import LinkChart
from conifold_forge.conifold import LagrangianCone
from conifold_forge.errors import MeshTooCoarse, SpectrumTruncated, WindowError

# 离散特征值聚类的相对间隙
CLUSTER_GAP = 1e-3
# 例外权重距离阈值
FREDHOLM_TOL = 1e-9
# Richardson 外推与细网格之间允许的相对差
RICHARDSON_TOL = 0.01
# 二次方程残差上限
ROOT_TOL = 1e-9


# ────────────────────────────────────────────
# 谱对象
# ────────────────────────────────────────────

@dataclass(frozen=True)
class LinkSpectrum:
    """
    升序互异特征值 e_n 及其重数。

    source:  "analytic" / "discretized" / "synthetic"
    covered: 不超过该值的特征值全部列出（查询覆盖范围）
    """
    values: Tuple[float, ...]
    multiplicities: Tuple[int, ...]
    source: str = "analytic"
    covered: float = 0.0
    components: int = 1
    mesh_size: Optional[float] = None
    label: str = ""

    def __post_init__(self):
        if len(self.values) != len(self.multiplicities) or not self.values:
            raise ValueError("values 与 multiplicities 长度必须相同且非空")
        vals = np.asarray(self.values, dtype=float)
        if np.any(vals < -1e-9):
            raise ValueError(f"Laplace 特征值必须非负: {vals.min()}")
        if np.any(np.diff(vals) <= 0):
            raise ValueError("特征值必须严格递增（重复值请合并进重数）")
        if any(k < 1 for k in self.multiplicities):
            raise ValueError("重数必须为正整数")
        if abs(vals[0]) > 1e-9 or self.multiplicities[0] != self.components:
            raise ValueError(
                f"e₀ 必须为 0 且重数等于分支数 {self.components}，收到 ({vals[0]}, {self.multiplicities[0]})"
            )

    @property
    def total(self) -> int:
        return int(sum(self.multiplicities))

    def pairs(self) -> List[Tuple[float, int]]:
        return list(zip(self.values, self.multiplicities))

    def expanded(self) -> np.ndarray:
        return np.repeat(np.asarray(self.values, dtype=float), self.multiplicities)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "values": [float(v) for v in self.values],
            "multiplicities": [int(k) for k in self.multiplicities],
            "source": self.source,
            "covered": float(self.covered),
            "components": self.components,
            "mesh_size": self.mesh_size,
            "label": self.label,
        }


def synthetic_spectrum(values: Sequence[float], multiplicities: Sequence[int],
                       covered: Optional[float] = None, components: int = 1,
                       label: str = "synthetic") -> LinkSpectrum:
    """手工构造的谱（测试与稳定性判定用）；covered 缺省为最大列出值。"""
    order = np.argsort(values)
    vals = tuple(float(values[i]) for i in order)
    mult = tuple(int(multiplicities[i]) for i in order)
    return LinkSpectrum(vals, mult, "synthetic", vals[-1] if covered is None else float(covered),
                        components, None, label)


def spectrum_from_dict(data: Dict[str, Any]) -> LinkSpectrum:
    return LinkSpectrum(
        tuple(float(v) for v in data["values"]),
        tuple(int(k) for k in data["multiplicities"]),
        data.get("source", "synthetic"),
        float(data.get("covered", data["values"][-1])),
        int(data.get("components", 1)),
        data.get("mesh_size"),
        data.get("label", ""),
    )


# ────────────────────────────────────────────
# 解析谱
# ────────────────────────────────────────────

def _sphere_spectrum(m: int, n_max: int, components: int, label: str) -> LinkSpectrum:
    values, mult = [], []
    for n in range(n_max + 1):
        values.append(float(n * (n + m - 2)))
        # 次数 n 的球调和函数维数
        k = comb(n + m - 1, m - 1, exact=True) - (comb(n + m - 3, m - 1, exact=True) if n >= 2 else 0)
        mult.append(int(k) * components)
    return LinkSpectrum(tuple(values), tuple(mult), "analytic", values[-1], components, None, label)


def _torus_spectrum(link: LinkChart, n_max: int) -> LinkSpectrum:
    gram = np.asarray(link.extra["gram"], dtype=float)
    periods = np.asarray(link.extra.get("periods", [2.0 * np.pi] * gram.shape[0]), dtype=float)
    # 特征函数 exp(i k·θ)，k_j = 2π p_j / P_j，特征值 kᵀ G⁻¹ k
    scale = np.diag(2.0 * np.pi / periods)
    Q = scale @ np.linalg.inv(gram) @ scale
    lam_min = float(np.linalg.eigvalsh(Q)[0])
    dim = gram.shape[0]
    K = n_max + 2
    while True:
        bound = lam_min * (K + 1) ** 2
        counts: Dict[float, int] = {}
        for p in itertools.product(range(-K, K + 1), repeat=dim):
            v = np.asarray(p, dtype=float)
            e = float(v @ Q @ v)
            if e < bound:
                key = round(e, 9)
                counts[key] = counts.get(key, 0) + 1
        if len(counts) >= n_max + 1:
            break
        K *= 2
    keys = sorted(counts)[: n_max + 1]
    comp = link.components
    return LinkSpectrum(tuple(float(k) for k in keys), tuple(counts[k] * comp for k in keys),
                        "analytic", float(keys[-1]), comp, None, link.label)


# ────────────────────────────────────────────
# 离散谱：二十面体细分 + 余切 Laplacian
# ────────────────────────────────────────────

def icosahedron() -> Tuple[np.ndarray, np.ndarray]:
    """内接单位球的正二十面体：顶点 (12, 3)，三角形 (20, 3)。"""
    s, c = 2.0 / np.sqrt(5.0), 1.0 / np.sqrt(5.0)
    top = [(0.0, 0.0, 1.0)] + [(s * np.cos(i * 2 * np.pi / 5 - np.pi / 5),
                                s * np.sin(i * 2 * np.pi / 5 - np.pi / 5), c) for i in range(5)]
    bottom = [(0.0, 0.0, -1.0)] + [(s * np.cos(-i * 2 * np.pi / 5 + 4 * np.pi / 5),
                                    s * np.sin(-i * 2 * np.pi / 5 + 4 * np.pi / 5), -c) for i in range(5)]
    pts = np.array(top + bottom)
    tris = ([(0, i + 1, (i + 1) % 5 + 1) for i in range(5)]
            + [(6, i + 7, (i + 1) % 5 + 7) for i in range(5)]
            + [(i + 1, (i + 1) % 5 + 1, (7 - i) % 5 + 7) for i in range(5)]
            + [(i + 1, (7 - i) % 5 + 7, (8 - i) % 5 + 7) for i in range(5)])
    return pts, np.array(tris, dtype=np.int64)


def icosphere(level: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    二十面体做 level 次中点细分并投影到单位球。

    顶点数 10·4^level + 2（level 4 → 2562，level 5 → 10242）。
    """
    pts, tris = icosahedron()
    verts = [tuple(p) for p in pts]
    for _ in range(level):
        cache: Dict[Tuple[int, int], int] = {}

        def midpoint(a: int, b: int) -> int:
            key = (a, b) if a < b else (b, a)
            if key not in cache:
                p = np.add(verts[a], verts[b])
                verts.append(tuple(p / np.linalg.norm(p)))
                cache[key] = len(verts) - 1
            return cache[key]

        new = []
        for a, b, c in tris:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new.extend([(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)])
        tris = np.array(new, dtype=np.int64)
    return np.array(verts), tris


def cotangent_laplacian(verts: np.ndarray, tris: np.ndarray) -> Tuple[sp.csr_matrix, sp.csr_matrix]:
    """
    余切刚度矩阵 K（半正定）与集中质量矩阵 M（每个三角形面积均分给三个顶点）。

    −Δ 的广义特征问题为 K u = e M u。
    """
    n = len(verts)
    rows, cols, vals = [], [], []
    area = np.zeros(n)
    for k in range(3):
        i, j, o = tris[:, k], tris[:, (k + 1) % 3], tris[:, (k + 2) % 3]
        u = verts[i] - verts[o]
        v = verts[j] - verts[o]
        cross = np.linalg.norm(np.cross(u, v), axis=1)
        cot = np.einsum("ij,ij->i", u, v) / cross
        w = 0.5 * cot
        rows += [i, j, i, j]
        cols += [j, i, i, j]
        vals += [-w, -w, w, w]
        np.add.at(area, o, cross / 6.0)
    K = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n)).tocsr()
    return K, sp.diags(area).tocsr()


def _mesh_eigenvalues(level: int, count: int) -> Tuple[np.ndarray, float]:
    verts, tris = icosphere(level)
    K, M = cotangent_laplacian(verts, tris)
    vals = eigsh(K, k=count, M=M, sigma=-0.5, return_eigenvectors=False)
    edge = float(np.mean(np.linalg.norm(verts[tris[:, 0]] - verts[tris[:, 1]], axis=1)))
    return np.sort(vals), edge


def _cluster(values: np.ndarray) -> List[Tuple[float, int]]:
    groups: List[List[float]] = [[float(values[0])]]
    for v in values[1:]:
        prev = groups[-1][-1]
        if v - prev > CLUSTER_GAP * max(abs(v), 1.0):
            groups.append([float(v)])
        else:
            groups[-1].append(float(v))
    return [(float(np.mean(g)), len(g)) for g in groups]


def _discretized_sphere_spectrum(link: LinkChart, n_max: int, levels: Tuple[int, int]) -> LinkSpectrum:
    if link.m != 3:
        raise ValueError(f"离散谱只支持二维链环 S²（m=3），收到 m={link.m}")
    # 多取一圈，保证最后保留的簇完整
    count = (n_max + 2) ** 2 + 4
    coarse, _ = _mesh_eigenvalues(levels[0], count)
    fine, h = _mesh_eigenvalues(levels[1], count)
    extrap = (4.0 * fine - coarse) / 3.0
    extrap[np.abs(extrap) < 1e-8] = 0.0
    clusters = _cluster(extrap)[:-1]
    if len(clusters) < n_max + 1:
        raise MeshTooCoarse(f"只分辨出 {len(clusters)} 个特征值簇，需要 {n_max + 1} 个")
    clusters = clusters[: n_max + 1]
    kept = sum(k for _, k in clusters)
    scale = np.maximum(np.abs(extrap[:kept]), 1.0)
    worst = float(np.max(np.abs(extrap[:kept] - fine[:kept]) / scale))
    if worst > RICHARDSON_TOL:
        raise MeshTooCoarse(f"Richardson 外推与细网格相差 {worst:.3%} > 1%")
    comp = link.components
    values = tuple(v for v, _ in clusters)
    mult = tuple(k * comp for _, k in clusters)
    return LinkSpectrum(values, mult, "discretized", values[-1], comp, h, link.label)


def link_spectrum(link: LinkChart, n_max: int, method: str = "analytic",
                  levels: Tuple[int, int] = (4, 5)) -> LinkSpectrum:
    """
    计算链环 Laplace 谱的前 n_max+1 个互异特征值。

    Args:
        link:   链环图卡（kind 为 "sphere" 或 "torus"）
        n_max:  最高阶（≥ 1）
        method: "analytic" 或 "discretized"（仅 S²）
        levels: 离散路径的两级细分层数

    Raises:
        MeshTooCoarse: 两级网格外推不一致
        ValueError:    链环既无解析谱也无网格描述
    """
    if n_max < 1:
        raise ValueError(f"n_max 必须 ≥ 1，收到 {n_max}")
    if method == "discretized":
        if link.kind != "sphere":
            raise ValueError("离散谱只支持球面链环")
        return _discretized_sphere_spectrum(link, n_max, levels)
    if method != "analytic":
        raise ValueError(f"未知的 method: {method!r}")
    if link.kind == "sphere":
        return _sphere_spectrum(link.m, n_max, link.components, link.label)
    if link.kind == "torus" and "gram" in link.extra:
        return _torus_spectrum(link, n_max)
    raise ValueError(f"链环 {link.label!r}（kind={link.kind}）没有解析谱")


# ────────────────────────────────────────────
# 例外权重
# ────────────────────────────────────────────

def exceptional_roots(e: float, m: int) -> Tuple[float, float]:
    """γ(γ + m − 2) = e 的两个根 (较大, 较小)，二者之和为 2 − m。"""
    disc = np.sqrt((m - 2) ** 2 + 4.0 * e)
    return ((2 - m) + disc) / 2.0, ((2 - m) - disc) / 2.0


@dataclass(frozen=True)
class ExceptionalSet:
    """
    窗口内的例外权重。

    entries: (γ, m(γ)) 升序，m(γ) 为各端重数之和
    per_end: 每个端各自的 (γ, m^j(γ)) 列表
    roots:   (γ, e) 对，用于残差检查
    """
    m: int
    window: Tuple[float, float]
    entries: Tuple[Tuple[float, int], ...]
    per_end: Tuple[Tuple[Tuple[float, int], ...], ...] = ()
    roots: Tuple[Tuple[float, float], ...] = field(default=(), repr=False)

    @property
    def gammas(self) -> List[float]:
        return [g for g, _ in self.entries]

    def multiplicity(self, gamma: float, tol: float = FREDHOLM_TOL) -> int:
        return sum(k for g, k in self.entries if abs(g - gamma) <= tol)

    def distance(self, beta: float) -> float:
        if not self.entries:
            return float("inf")
        return float(min(abs(g - beta) for g in self.gammas))

    def max_residual(self) -> float:
        if not self.roots:
            return 0.0
        return float(max(abs(g * g + (self.m - 2) * g - e) for g, e in self.roots))

    def partners_consistent(self, tol: float = FREDHOLM_TOL) -> bool:
        """窗口内每个 γ 的配对 2−m−γ 若也在窗口内，则同样例外且重数相同。"""
        lo, hi = self.window
        for g, k in self.entries:
            partner = 2 - self.m - g
            if lo - tol <= partner <= hi + tol and self.multiplicity(partner, tol) != k:
                return False
        return True

    def to_dict(self) -> Dict[str, Any]:
        return {
            "m": self.m,
            "window": list(self.window),
            "entries": [[float(g), int(k)] for g, k in self.entries],
            "per_end": [[[float(g), int(k)] for g, k in end] for end in self.per_end],
        }


def _merge(items: List[Tuple[float, int]]) -> Tuple[Tuple[float, int], ...]:
    out: List[List[Any]] = []
    for g, k in sorted(items):
        if out and abs(g - out[-1][0]) <= FREDHOLM_TOL:
            out[-1][1] += k
        else:
            out.append([g, k])
    return tuple((float(g), int(k)) for g, k in out)


def required_eigenvalue(m: int, window: Sequence[float]) -> float:
    """窗口两端 γ 对应的 γ(γ + m − 2) 的较大者：谱必须覆盖到它，窗口内的例外权重才完整。"""
    return float(max(0.0, *(g * (g + m - 2) for g in (float(window[0]), float(window[1])))))


def covering_spectrum(link: LinkChart, m: int, window: Sequence[float], method: str = "analytic",
                      max_levels: int = 64) -> LinkSpectrum:
    """逐级加大 n_max，直到谱覆盖 required_eigenvalue(m, window)。"""
    need = required_eigenvalue(m, window)
    n_max = max(1, int(np.ceil(max(abs(float(window[0])), abs(float(window[1]))))) + 1)
    while True:
        spec = link_spectrum(link, n_max, method=method)
        if spec.covered >= need - ROOT_TOL:
            return spec
        if n_max >= max_levels:
            raise SpectrumTruncated(f"n_max = {n_max} 时谱只覆盖到 e ≤ {spec.covered}，需要 e ≥ {need}")
        n_max += 1


def exceptional_weights(spectra: Union[LinkSpectrum, Sequence[LinkSpectrum]], m: int,
                        window: Sequence[float]) -> ExceptionalSet:
    """
    给出窗口 [γ_lo, γ_hi]（闭区间，容差 1e−9）内的全部例外权重。

    每次都检查：(2 − m, 0) 内没有例外权重，窗口内的配对 2 − m − γ 重数一致。

    Args:
        spectra: 单个链环谱，或按端给出的谱列表（m(γ) = Σ_j m^j(γ)）
        m:       维数
        window:  (γ_lo, γ_hi)

    Raises:
        SpectrumTruncated: 某个谱的 covered 小于 required_eigenvalue(m, window)
        WindowError:       上述两条不变量之一不成立
    """
    if isinstance(spectra, LinkSpectrum):
        spectra = [spectra]
    lo, hi = float(window[0]), float(window[1])
    if lo > hi:
        raise ValueError(f"窗口下界大于上界: {window}")
    need = required_eigenvalue(m, (lo, hi))
    per_end, all_items, roots = [], [], []
    for spec in spectra:
        if spec.covered < need - ROOT_TOL:
            raise SpectrumTruncated(
                f"谱 {spec.label or spec.source} 只覆盖到 e ≤ {spec.covered}，窗口 [{lo}, {hi}] 需要 e ≥ {need}")
        items = []
        for e, k in spec.pairs():
            for g in exceptional_roots(e, m):
                if lo - FREDHOLM_TOL <= g <= hi + FREDHOLM_TOL:
                    items.append((float(g), int(k)))
                    roots.append((float(g), float(e)))
        merged = _merge(items)
        per_end.append(merged)
        all_items.extend(merged)
    ex = ExceptionalSet(m, (lo, hi), _merge(all_items), tuple(per_end), tuple(roots))
    inside = [g for g in ex.gammas if 2 - m + FREDHOLM_TOL < g < -FREDHOLM_TOL]
    if inside:
        raise WindowError(f"({2 - m}, 0) 内出现例外权重 {inside}")
    if not ex.partners_consistent():
        raise WindowError(f"窗口 [{lo}, {hi}] 内 γ 与 2−m−γ 的重数不一致: {ex.entries}")
    return ex


def is_fredholm_weight(betas: Sequence[float], sets: Sequence[ExceptionalSet]) -> bool:
    """每个端的 β_i 与该端例外集的距离都 > 1e−9 时为 Fredholm 权重。"""
    if len(betas) != len(sets):
        raise ValueError(f"β 个数 {len(betas)} 与例外集个数 {len(sets)} 不一致")
    return all(s.distance(b) > FREDHOLM_TOL for b, s in zip(betas, sets))


# ────────────────────────────────────────────
# 余核维数
# ────────────────────────────────────────────

@dataclass(frozen=True)
class CokernelReport:
    dimension: int
    isomorphism: bool
    injective: bool
    case: str
    contributions: Tuple[Tuple[float, int], ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dimension": self.dimension,
            "isomorphism": self.isomorphism,
            "injective": self.injective,
            "case": self.case,
            "contributions": [[float(g), int(k)] for g, k in self.contributions],
        }


def _between(ex: ExceptionalSet, beta: float) -> List[Tuple[float, int]]:
    lo, hi = ex.window
    if lo > FREDHOLM_TOL or hi < beta:
        raise WindowError(f"例外集窗口 {ex.window} 没有覆盖 [0, {beta}]")
    return [(g, k) for g, k in ex.entries if FREDHOLM_TOL < g < beta - FREDHOLM_TOL]


def cokernel_dimension(kind: str, m: int, ends: Sequence[Tuple[str, float, ExceptionalSet]]) -> CokernelReport:
    """
    Δ_g: W^p_{k,β} → W^p_{k−2,β−2} 的余核维数。

    Args:
        kind: "AC"、"CS" 或 "CS/AC"
        m:    维数
        ends: 每个端的 (端类型, β_i, 该端例外集)

    Raises:
        WindowError: β 为例外权重，或不在三种情形的适用窗口内
    """
    for end_kind, beta, ex in ends:
        if ex.distance(beta) <= FREDHOLM_TOL:
            raise WindowError(f"β={beta} 是 {end_kind} 端的例外权重")
    cs = [(b, ex) for k, b, ex in ends if k == "CS"]
    ac = [b for k, b, _ in ends if k == "AC"]
    in_window = lambda b: 2 - m < b < 0  # noqa: E731

    if kind == "AC":
        if cs or not all(in_window(b) for b in ac):
            raise WindowError(f"AC 情形要求全部 β ∈ ({2 - m}, 0)")
        return CokernelReport(0, True, True, "AC")

    if kind == "CS":
        if ac or not cs or not all(b > 0 for b, _ in cs):
            raise WindowError("CS 情形要求每个端 β_i > 0")
        contrib = _merge([item for b, ex in cs for item in _between(ex, b)])
        dim = len(cs) + sum(k for _, k in contrib)
        return CokernelReport(dim, False, True, "CS", contrib)

    if kind == "CS/AC":
        if not cs or not ac or not all(in_window(b) for b in ac):
            raise WindowError(f"CS/AC 情形要求 AC 端 β ∈ ({2 - m}, 0)")
        if all(in_window(b) for b, _ in cs):
            return CokernelReport(0, True, True, "CS/AC")
        if not all(b > 0 for b, _ in cs):
            raise WindowError("CS/AC 情形要求全部 CS 端 β_i > 0 或全部落在 (2−m, 0)")
        contrib = _merge([item for b, ex in cs for item in _between(ex, b)])
        dim = len(cs) + sum(k for _, k in contrib)
        return CokernelReport(dim, False, True, "CS/AC", contrib)

    raise ValueError(f"未知的 conifold 类型: {kind!r}")


# ────────────────────────────────────────────
# 矩映射与稳定性
# ────────────────────────────────────────────

def su_basis(m: int) -> List[np.ndarray]:
    """su(m) 的实基：反对称实矩阵、对称虚矩阵、无迹虚对角阵，共 m²−1 个。"""
    basis = []
    for j in range(m):
        for k in range(j + 1, m):
            A = np.zeros((m, m), dtype=complex)
            A[j, k], A[k, j] = 1.0, -1.0
            basis.append(A)
            B = np.zeros((m, m), dtype=complex)
            B[j, k], B[k, j] = 1j, 1j
            basis.append(B)
    for j in range(m - 1):
        D = np.zeros((m, m), dtype=complex)
        D[j, j], D[j + 1, j + 1] = 1j, -1j
        basis.append(D)
    return basis


def _rank(A: np.ndarray, rtol: float = 1e-8) -> int:
    s = np.linalg.svd(A, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


@dataclass(frozen=True)
class MomentMapRanks:
    linear: int
    quadratic: int
    inferred_symmetry_dim: int


def moment_map_ranks(cone: LagrangianCone, samples: int = 96, seed: int = 0) -> MomentMapRanks:
    """
    把 H_v(z) = ω̃(v, z)（dH_v = ι_v ω̃）与 H_X(z) = ½ω̃(Xz, z)（dH_X = ι_{Xz} ω̃）
    限制到链环样本点上，返回两族函数张成空间的维数。

    su(m) 族中在锥上恒为零的方向对应对称群 G 的 Lie 代数，故 dim G = m²−1 − 秩。
    """
    m = cone.m
    rng = np.random.default_rng(seed)
    pts = np.array([cone.link.point(th) for th in cone.link.sample(samples, rng)])
    lin_cols = []
    for k in range(m):
        for v in (np.eye(m)[k].astype(complex), 1j * np.eye(m)[k]):
            lin_cols.append(np.imag(pts @ v.conj()))
    quad_cols = []
    for X in su_basis(m):
        Xz = pts @ X.T
        quad_cols.append(0.5 * np.imag(np.einsum("ij,ij->i", Xz.conj(), pts)))
    linear = _rank(np.stack(lin_cols, axis=1))
    quadratic = _rank(np.stack(quad_cols, axis=1))
    return MomentMapRanks(linear, quadratic, m * m - 1 - quadratic)


@dataclass(frozen=True)
class StabilityReport:
    status: str                        # "stable" / "unstable" / "not_applicable"
    witness: Optional[float] = None
    dims: Tuple[Tuple[float, int], ...] = ()
    expected: Tuple[Tuple[float, int], ...] = ()
    moment_maps: Optional[MomentMapRanks] = None

    @property
    def stable(self) -> bool:
        return self.status == "stable"

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            "status": self.status,
            "witness": self.witness,
            "dims": [[float(g), int(k)] for g, k in self.dims],
            "expected": [[float(g), int(k)] for g, k in self.expected],
        }
        if self.moment_maps is not None:
            out["moment_maps"] = {
                "linear": self.moment_maps.linear,
                "quadratic": self.moment_maps.quadratic,
                "inferred_symmetry_dim": self.moment_maps.inferred_symmetry_dim,
            }
        return out


def stability_check(cone: LagrangianCone, spectrum: LinkSpectrum,
                    ranks: Optional[MomentMapRanks] = None) -> StabilityReport:
    """
    γ ∈ [0, 2] 内的例外权重计数：稳定 ⇔ dim V₀ = 1、dim V₁ = 2m、
    dim V₂ = m²−1−dim G，且 [0, 2] 内没有其他例外值。

    只比较维数，不识别具体的本征函数；ranks 给出时额外附上矩映射的秩作交叉核对。

    Raises:
        SpectrumTruncated: 谱没有覆盖 e ≤ 2m
    """
    if cone.link.kind == "sphere":
        return StabilityReport("not_applicable", moment_maps=ranks)
    m = cone.m
    if spectrum.covered < 2 * m - 1e-9:
        raise SpectrumTruncated(f"谱只覆盖到 e ≤ {spectrum.covered}，稳定性判定需要 e ≤ {2 * m}")
    ex = exceptional_weights(spectrum, m, (0.0, 2.0))
    expected = ((0.0, 1), (1.0, 2 * m), (2.0, m * m - 1 - cone.symmetry_dim))
    dims = ex.entries
    for g, k in dims:
        target = [want for gamma, want in expected if abs(gamma - g) <= FREDHOLM_TOL]
        if not target or target[0] != k:
            return StabilityReport("unstable", float(g), dims, expected, ranks)
    for gamma, want in expected:
        if want > 0 and ex.multiplicity(gamma) == 0:
            return StabilityReport("unstable", float(gamma), dims, expected, ranks)
    return StabilityReport("stable", None, dims, expected, ranks)
