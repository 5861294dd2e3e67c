# -*- coding: utf-8 -*-
"""
粘合求解：α 窗口、一致可逆性探针、不动点迭代与最终收敛率报告

  choose_alpha                 —— 由 (μ, λ̂, β, τ) 给出 α 的可行窗口并取中点
  probe_uniform_invertibility  —— ‖P_t f‖ / ‖f‖ 的下确界在 t 上是否一致
  solve_sl                     —— 弦 Picard 迭代 f ↦ f − P_t^{−1} F_t(f)，落在球 B_{κt^α} 内，
                                  再在扰动后剖面的图卡上复核辛缺陷与 SL 残差
  final_rate_report            —— 扰动后的两个外侧片相对平面的衰减率
  augmented_injectivity_check  —— 保留 CS 端时增广系统在 t 上的最小奇异值

典型用法::

    from conifold_forge.glue_solver import solve_sl, final_rate_report

    report, profile = solve_sl(glued)
    rates = final_rate_report(profile, glued)
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from conifold_forge.charts import ImmersionChart, profile_chart, sphere_link
from conifold_forge.config import progress
from conifold_forge.connect_sum import PLANE_AC_RADIUS, GluedConifold
from conifold_forge.errors import (
    BallEscape,
    EmptyWindow,
    HypothesisViolated,
    NoContraction,
    ResidualTooLarge,
    SingularOperator,
)
from conifold_forge.geometry import residual_table
from conifold_forge.profile import frame_angle
from conifold_forge.regression import PowerLawFit, fit_power_law
from conifold_forge.sl_operator import (
    SINGULAR_TOL,
    PerturbationField,
    RetainedEnd,
    assemble_augmented,
    curve_field,
    linearize,
    perturbed_half,
    remainder_vector,
    residual_vector,
)
from conifold_forge.spectral import covering_spectrum, exceptional_weights, is_fredholm_weight
from conifold_forge.weighted_spaces import central_difference, weighted_sobolev_norm

MAX_ITER = 50
RESIDUAL_TOL = 1e-9
# 扰动后图卡在内部节点上的上限
SYMPLECTIC_LIMIT = 1e-10
SL_RESIDUAL_LIMIT = 1e-8
STEP_TOL = 1e-10
# 步长比超过该值视为不收缩
CONTRACTION_LIMIT = 0.9
SPREAD_LIMIT = 4.0
LINK_DEFECT_TOL = 1e-3


# ────────────────────────────────────────────
# α 窗口
# ────────────────────────────────────────────

@dataclass(frozen=True)
class AlphaWindow:
    lo: float
    hi: float
    alpha: float

    def to_dict(self) -> Dict[str, float]:
        return {"lo": self.lo, "hi": self.hi, "alpha": self.alpha}


def _as_list(x: Union[float, Sequence[float]]) -> List[float]:
    return [float(v) for v in np.atleast_1d(np.asarray(x, dtype=float))]


def choose_alpha(mu: Union[float, Sequence[float]], lam_hat: Union[float, Sequence[float]],
                 beta: Union[float, Sequence[float]], tau: float, m: Optional[int] = None) -> AlphaWindow:
    """
    每个颈给出 (μ_i, λ̂_i, β_i)：

      τ > (2 − λ̂)/(μ − λ̂)，β̂ > λ̂（m 给出时还要求 β̂ ∈ (2 − m, 0)），
      max(2 − β_i) < α < min((1 − τ)(2 − λ̂_i) + τ(2 − β_i))。

    Raises:
        EmptyWindow: 条件不成立或窗口为空，消息中给出失败的条件
    """
    mus, lams, betas = _as_list(mu), _as_list(lam_hat), _as_list(beta)
    n = max(len(mus), len(lams), len(betas))
    if any(len(v) not in (1, n) for v in (mus, lams, betas)):
        raise ValueError("μ、λ̂、β 的个数不一致")
    mus, lams, betas = ([v[0]] * n if len(v) == 1 else v for v in (mus, lams, betas))
    for i, (mu_i, lam_i, b_i) in enumerate(zip(mus, lams, betas)):
        need = (2.0 - lam_i) / (mu_i - lam_i)
        if not tau > need:
            raise EmptyWindow(f"颈 {i}: τ = {tau} 不满足 τ > (2−λ̂)/(μ−λ̂) = {need:.4g}")
        if not b_i > lam_i:
            raise EmptyWindow(f"颈 {i}: 要求 β̂ > λ̂，收到 β̂={b_i}, λ̂={lam_i}")
        if m is not None and not 2 - m < b_i < 0:
            raise EmptyWindow(f"颈 {i}: 要求 β̂ ∈ ({2 - m}, 0)，收到 {b_i}")
    lo = max(2.0 - b for b in betas)
    hi = min((1.0 - tau) * (2.0 - lam) + tau * (2.0 - b) for lam, b in zip(lams, betas))
    if not lo < hi:
        raise EmptyWindow(f"α 窗口为空: max(2−β) = {lo:.4g} ≥ {hi:.4g}")
    return AlphaWindow(lo, hi, 0.5 * (lo + hi))


# ────────────────────────────────────────────
# 一致可逆性
# ────────────────────────────────────────────

@dataclass(frozen=True)
class InvertibilityReport:
    t: Tuple[float, ...]
    c: Tuple[float, ...]

    @property
    def spread(self) -> float:
        return max(self.c) / min(self.c)

    @property
    def passed(self) -> bool:
        return self.spread <= SPREAD_LIMIT

    def to_dict(self) -> Dict[str, Any]:
        return {"t": list(self.t), "c": list(self.c), "spread": self.spread, "passed": self.passed}


def check_invertibility_hypothesis(glued: GluedConifold) -> None:
    """
    L 与 L̂ 的每个端 β ∈ (2 − m, 0) 且为 Fredholm 权重。

    Raises:
        HypothesisViolated
    """
    sc, w, m = glued.scenario, glued.weights, glued.m
    for name, conifold, betas in (("L", sc.L, w.L), ("L_hat", sc.L_hat, w.L_hat)):
        for k, (end, beta) in enumerate(zip(conifold.ends, betas)):
            if not 2 - m < beta < 0:
                raise HypothesisViolated(f"{name} 端 {k} 的权重 β = {beta} 不在 ({2 - m}, 0) 内")
            ex = exceptional_weights(covering_spectrum(end.cone.link, m, (1.0 - m, 1.0)), m, (1.0 - m, 1.0))
            if not is_fredholm_weight([beta], [ex]):
                raise HypothesisViolated(f"{name} 端 {k} 的权重 β = {beta} 是例外权重")


def _trial_fields(glued: GluedConifold, rng: np.random.Generator, count: int, modes: int) -> List[np.ndarray]:
    c = glued.curve
    op = linearize(glued)
    out = list(op.smallest_modes(modes)[1])
    lim = 0.8 * float(c.s[-1])
    for _ in range(count):
        center = rng.uniform(-lim, lim)
        width = float(np.exp(rng.uniform(np.log(5.0 * c.h), np.log(1.5))))
        out.append(PerturbationField.bump(c, center, width).values)
    return out


def invertibility_constant(glued: GluedConifold, seed: int = 0, random_fields: int = 50, modes: int = 4) -> float:
    """min ‖P_t f‖_{W^p_{1,β−2}} / ‖f‖_{W^p_{3,β}}，f 取最小模与随机鼓包。"""
    p = glued.params.p
    op = linearize(glued)
    ws1 = glued.ws.shifted(-2.0)
    best = np.inf
    for f in _trial_fields(glued, np.random.default_rng(seed), random_fields, modes):
        top = weighted_sobolev_norm(curve_field(glued.curve, op.apply(f), 1), ws1, 1, p, check=False)
        bottom = PerturbationField(f, glued.curve).norm(glued.ws, p)
        if bottom > 0:
            best = min(best, top / bottom)
    return float(best)


def probe_uniform_invertibility(family: Sequence[GluedConifold], seed: int = 0,
                                random_fields: int = 50, modes: int = 4) -> InvertibilityReport:
    """
    Raises:
        HypothesisViolated: 权重不满足可逆性所需的假设（在探测之前检查）
        SingularOperator:   某个 t 上的常数 < 1e−12
    """
    if not family:
        raise ValueError("至少需要一个 t")
    for glued in family:
        check_invertibility_hypothesis(glued)
    ts, cs = [], []
    for glued in family:
        c = invertibility_constant(glued, seed, random_fields, modes)
        if c < SINGULAR_TOL:
            raise SingularOperator(f"t={glued.t:g}: ‖P_t f‖/‖f‖ 的下界 {c:.3e} < 1e-12")
        progress(f"invertibility: t={glued.t:g}, c={c:.4e}")
        ts.append(glued.t)
        cs.append(c)
    return InvertibilityReport(tuple(ts), tuple(cs))


# ────────────────────────────────────────────
# 不动点迭代
# ────────────────────────────────────────────

@dataclass(frozen=True)
class SideRate:
    side: int
    fit: PowerLawFit
    link_defect: float

    @property
    def rate(self) -> float:
        return self.fit.slope + 1.0

    def to_dict(self) -> Dict[str, Any]:
        return {"side": self.side, "slope": self.fit.slope, "rate": self.rate,
                "constant": self.fit.constant, "link_defect": self.link_defect}


@dataclass(frozen=True)
class RateReport:
    sides: Tuple[SideRate, ...]
    bound: float

    @property
    def passed(self) -> bool:
        return all((s.fit.exact or s.rate <= self.bound) and s.link_defect <= LINK_DEFECT_TOL
                   for s in self.sides)

    def to_dict(self) -> Dict[str, Any]:
        return {"bound": self.bound, "passed": self.passed, "sides": [s.to_dict() for s in self.sides]}


@dataclass(frozen=True)
class SolveReport:
    t: float
    alpha: float
    beta: float
    ball_radius: float
    initial_residual: float
    iterations: Tuple[Tuple[int, float, float], ...]
    contraction: float
    final_norm: float
    residual: float
    status: str
    fixed_point_defect: float = 0.0
    params: Dict[str, Any] = field(default_factory=dict)
    rates: Optional[RateReport] = None
    symplectic_defect: float = 0.0     # 扰动后图卡在内部节点上 max|ι*ω̃|
    sl_residual: float = 0.0           # 同上，max|SL 残差|

    @property
    def theoretical_contraction(self) -> float:
        """t^{α + β − 2}。"""
        return self.t ** (self.alpha + self.beta - 2.0)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "t": self.t, "alpha": self.alpha, "beta": self.beta, "ball_radius": self.ball_radius,
            "initial_residual": self.initial_residual,
            "iterations": [{"k": k, "residual": r, "step": s} for k, r, s in self.iterations],
            "contraction": self.contraction, "theoretical_contraction": self.theoretical_contraction,
            "final_norm": self.final_norm, "residual": self.residual, "status": self.status,
            "fixed_point_defect": self.fixed_point_defect,
            "symplectic_defect": self.symplectic_defect, "sl_residual": self.sl_residual,
            "params": dict(self.params),
            "rates": None if self.rates is None else self.rates.to_dict(),
        }


@dataclass(frozen=True, eq=False)
class PerturbedProfile:
    """
    扰动后的剖面曲线 z_F(s)（节点上），两侧共用一条曲线。

    dz 为节点切向 dz_F/ds：中心差分再沿 i·conj(z^{m−1}) 修正，使 Im(z^{m−1}·dz/dσ) 等于离散通量差 Δq/(mh)，
    于是节点上的 SL 残差就是离散残差 F_t(f*)。
    """
    s: np.ndarray
    z: np.ndarray
    values: np.ndarray
    m: int
    t: float
    dz: Optional[np.ndarray] = field(default=None, repr=False)

    def rows(self) -> List[Dict[str, float]]:
        return [{"s": float(s), "re": float(z.real), "im": float(z.imag), "f": float(f)}
                for s, z, f in zip(self.s, self.z, self.values)]

    def deviation(self, side: int) -> Tuple[np.ndarray, np.ndarray]:
        """(r, 到该侧平面的距离)：第一侧为 |Im z|，第二侧为 |Im(e^{−iπ/m} z)|。"""
        mask = self.s > 0 if side == 0 else self.s < 0
        z = self.z[mask]
        if side == 1:
            z = np.exp(-1j * np.pi / self.m) * z
        order = np.argsort(np.abs(z))
        return np.abs(z)[order], np.abs(np.imag(z))[order]

    def chart(self) -> ImmersionChart:
        """整条扰动曲线的 SO(m)-型图卡（坐标 s），节点值与节点切向上的三次 Hermite 插值。"""
        re = CubicHermiteSpline(self.s, self.z.real, self.dz.real)
        im = CubicHermiteSpline(self.s, self.z.imag, self.dz.imag)

        def jet(k):
            a, b = re.derivative(k) if k else re, im.derivative(k) if k else im
            return lambda s: complex(a(s)) + 1j * complex(b(s))

        return profile_chart(sphere_link(self.m), jet(0), jet(1), jet(2),
                             float(self.s[0]), float(self.s[-1]), coord="s", label=f"L_t*(t={self.t:g})")

    def residual_table(self) -> np.ndarray:
        """内部节点上的 (辛缺陷, SL 残差)；SO(m) 不变，链环坐标取参数域中点。"""
        link = sphere_link(self.m)
        theta = 0.5 * (np.asarray(link.lower, dtype=float) + np.asarray(link.upper, dtype=float))
        samples = np.array([np.concatenate([theta, [s]]) for s in self.s[1:-1]])
        return residual_table(self.chart(), samples)


def perturbed_profile(glued: GluedConifold, values: np.ndarray) -> PerturbedProfile:
    """节点上的 z_F = z + a·n，a 由节点导数 ξ 与 ψ 解出（对网格坐标 σ 求导）。"""
    c = glued.curve
    m, h = c.m, c.h
    values = np.asarray(values, dtype=float)
    psi, dpsi = frame_angle(c.s, c.s_a, m)
    dpsi = dpsi * c.stretch
    xi = central_difference(values, h)
    b = np.real(np.conj(c.dz) * np.exp(1j * psi))
    disc = np.clip(1.0 - 2.0 * dpsi * xi / (b * b), 0.0, None)
    a = 2.0 * xi / (b * (1.0 + np.sqrt(disc)))
    z = c.z + a * 1j * np.exp(1j * psi)

    d = central_difference(z.real, h) + 1j * central_difference(z.imag, h)
    q = np.imag(perturbed_half(c, values, glued.params.neighbourhood) ** m)
    w = z[1:-1] ** (m - 1)
    aw = np.abs(w)
    mu = ((q[1:] - q[:-1]) / (m * h) - np.imag(w * d[1:-1])) / aw
    d[1:-1] += mu * 1j * np.conj(w) / aw
    return PerturbedProfile(c.s, z, values, m, glued.t, d / c.stretch)


def picard(glued: GluedConifold, star: str = "base", max_iter: int = MAX_ITER,
           residual_tol: float = RESIDUAL_TOL, step_tol: float = STEP_TOL,
           ball_radius: Optional[float] = None) -> Tuple[np.ndarray, List[Tuple[int, float, float]], float]:
    """
    f_{k+1} = f_k − P_t^{−1} F_t(f_k)，P_t 固定在 f = 0 处。

    Returns:
        (f*, [(k, max|F(f_k)|, max|step_k|)], 最大步长比)

    Raises:
        NoContraction: 步长比 > 0.9、残差上升或迭代次数用尽
        BallEscape:    ‖f_k‖_{W^p_{3,β}} 超出 ball_radius
    """
    c, nb, p = glued.curve, glued.params.neighbourhood, glued.params.p
    op = linearize(glued)
    f = np.zeros(c.size)
    F = residual_vector(c, f, star, nb)
    log: List[Tuple[int, float, float]] = []
    prev_res, prev_step, ratio = np.inf, None, 0.0
    for k in range(max_iter):
        res = float(np.max(np.abs(F)))
        if k > 0 and res > prev_res and res > 1e-12:
            raise NoContraction(f"第 {k} 次迭代残差上升: {prev_res:.3e} → {res:.3e}")
        step = op.solve(F)
        size = float(np.max(np.abs(step)))
        progress(f"iter {k}: |F|={res:.3e}, |step|={size:.3e}")
        log.append((k, res, size))
        if prev_step is not None and prev_step > 1e-13:
            ratio = max(ratio, size / prev_step)
            if size / prev_step > CONTRACTION_LIMIT:
                raise NoContraction(f"第 {k} 次迭代步长比 {size / prev_step:.3f} > {CONTRACTION_LIMIT}")
        f = f - step
        if ball_radius is not None:
            norm = PerturbationField(f, c).norm(glued.ws, p)
            if norm > ball_radius:
                raise BallEscape(f"‖f_{k + 1}‖ = {norm:.3e} 超出球半径 {ball_radius:.3e}")
        F = residual_vector(c, f, star, nb)
        prev_res, prev_step = res, size
        if float(np.max(np.abs(F))) <= residual_tol and size <= step_tol:
            log.append((k + 1, float(np.max(np.abs(F))), 0.0))
            return f, log, ratio
    raise NoContraction(f"{max_iter} 次迭代后仍未收敛: |F| = {float(np.max(np.abs(F))):.3e}")


def solve_sl(glued: GluedConifold, star: str = "base", max_iter: int = MAX_ITER) -> Tuple[SolveReport, PerturbedProfile]:
    """
    在 B_{κt^α} 内求 F_t(f) = 0，再在扰动后剖面的 Hermite 图卡上逐节点复核辛拉回与 SL 残差。

    Raises:
        BallEscape:        ‖F_t(0)‖ ≥ κt^α/2（t 超出阈值），或迭代离开球
        NoContraction:     迭代不收缩
        ResidualTooLarge:  辛缺陷 > 1e−10 或 SL 残差 > 1e−8
    """
    params = glued.params
    t = glued.t
    beta = min(v for k, v in glued.ws.end_betas.items() if k.startswith("neck"))
    ball = params.ball_constant * t ** params.alpha
    F0 = residual_vector(glued.curve, np.zeros(glued.curve.size), star, params.neighbourhood)
    initial = weighted_sobolev_norm(curve_field(glued.curve, F0, 1), glued.ws.shifted(-2.0), 1, params.p,
                                    check=False)
    if initial >= 0.5 * ball:
        raise BallEscape(f"t={t:g}: ‖F_t(0)‖ = {initial:.3e} ≥ κt^α/2 = {0.5 * ball:.3e}")
    f, log, ratio = picard(glued, star, max_iter, ball_radius=ball)
    final = PerturbationField(f, glued.curve).norm(glued.ws, params.p)
    residual = float(np.max(np.abs(residual_vector(glued.curve, f, star, params.neighbourhood))))
    op = linearize(glued)
    parts = op.apply(f) + F0 + remainder_vector(glued, f, star, op)
    profile = perturbed_profile(glued, f)
    table = profile.residual_table()
    symplectic, sl = float(np.max(np.abs(table[:, 0]))), float(np.max(np.abs(table[:, 1])))
    if symplectic > SYMPLECTIC_LIMIT or sl > SL_RESIDUAL_LIMIT:
        raise ResidualTooLarge(f"t={t:g}: 扰动后辛缺陷 {symplectic:.3e}（上限 {SYMPLECTIC_LIMIT:g}），"
                               f"SL 残差 {sl:.3e}（上限 {SL_RESIDUAL_LIMIT:g}）")
    progress(f"[✓] solved: t={t:g}, {len(log) - 1} iterations, ‖f*‖={final:.3e}, sl={sl:.1e}")
    report = SolveReport(t, params.alpha, beta, ball, initial, tuple(log), ratio, final, residual,
                         "converged", params=params.to_dict(), fixed_point_defect=float(np.max(np.abs(parts))),
                         symplectic_defect=symplectic, sl_residual=sl)
    return report, profile


def final_rate_report(profile: PerturbedProfile, glued: GluedConifold) -> RateReport:
    """
    r ∈ [max(2, 4t^τ), r_max/4] 上拟合两侧外片到平面的距离，rate = 斜率 + 1；
    上界为 max(原 AC 收敛率, β_AC) + 0.1。
    """
    params = glued.params
    lo, hi = max(PLANE_AC_RADIUS, 4.0 * glued.T), params.r_max / 4.0
    sides = []
    for side in (0, 1):
        r, dev = profile.deviation(side)
        win = (r >= lo) & (r <= hi)
        fit = fit_power_law(r[win], dev[win], floor=1e-13 * hi)
        far = r >= params.r_max / 10.0
        sides.append(SideRate(side, fit, float(np.max(dev[far] / r[far]))))
    L = glued.scenario.L
    ac = [k for k, end in enumerate(L.ends) if end.kind == "AC"]
    bound = max(max(L.ends[k].rate for k in ac), max(glued.weights.L[k] for k in ac)) + 0.1
    return RateReport(tuple(sides), bound)


def attach_rates(report: SolveReport, rates: RateReport) -> SolveReport:
    return replace(report, rates=rates)


# ────────────────────────────────────────────
# 增广系统
# ────────────────────────────────────────────

@dataclass(frozen=True)
class AugmentedReport:
    t: Tuple[float, ...]
    sigma: Tuple[float, ...]
    d: int

    @property
    def spread(self) -> float:
        return max(self.sigma) / min(self.sigma)

    def to_dict(self) -> Dict[str, Any]:
        return {"t": list(self.t), "sigma": list(self.sigma), "d": self.d, "spread": self.spread}


def augmented_injectivity_check(family: Sequence[GluedConifold], retained: Sequence[RetainedEnd]) -> AugmentedReport:
    """
    没有保留端时退化为 probe_uniform_invertibility 的前提检查加 P_t 的最小特征值。

    Raises:
        SingularOperator:  某个 t 上的最小奇异值 < 1e−12
        DimensionMismatch: 增广列数或秩不对
    """
    ts, sig = [], []
    d = 0
    for glued in family:
        if not retained:
            check_invertibility_hypothesis(glued)
        system = assemble_augmented(glued, retained)
        s = system.smallest_singular_value()
        if s < SINGULAR_TOL:
            raise SingularOperator(f"t={glued.t:g}: 增广系统最小奇异值 {s:.3e} < 1e-12")
        progress(f"augmented: t={glued.t:g}, d={system.d}, σ_min={s:.4e}")
        ts.append(glued.t)
        sig.append(s)
        d = system.d
    return AugmentedReport(tuple(ts), tuple(sig), d)
