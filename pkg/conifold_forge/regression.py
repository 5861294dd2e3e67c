# -*- coding: utf-8 -*-
"""
幂律拟合：y ≈ C·x^k，在 log10 坐标下做最小二乘。

衰减率验证、缩放指数回归、伸缩常数比较都走这里。
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from conifold_forge.errors import InsufficientSpan

# 全部样本为 0（或低于下限）时的斜率哨兵
EXACT_SLOPE = -np.inf


@dataclass(frozen=True)
class PowerLawFit:
    slope: float
    constant: float
    rms: float       # log10 残差均方根
    points: int

    @property
    def exact(self) -> bool:
        return self.slope == EXACT_SLOPE

    def predict(self, x: np.ndarray) -> np.ndarray:
        if self.exact:
            return np.zeros_like(np.asarray(x, dtype=float))
        return self.constant * np.asarray(x, dtype=float) ** self.slope


def check_span(x: Sequence[float], min_points: int = 8, decades: float = 1.0) -> None:
    """
    Raises:
        InsufficientSpan: 点数不足或 max/min 跨度小于 decades 个数量级
    """
    x = np.asarray(x, dtype=float)
    if x.size < min_points:
        raise InsufficientSpan(f"回归需要至少 {min_points} 个点，只有 {x.size} 个")
    if np.any(x <= 0):
        raise InsufficientSpan("回归网格必须全部为正")
    span = np.log10(x.max() / x.min())
    if span < decades - 1e-12:
        raise InsufficientSpan(f"网格只跨越 {span:.3f} 个数量级，至少需要 {decades}")


def fit_power_law(x: Sequence[float], y: Sequence[float], floor: float = 0.0) -> PowerLawFit:
    """
    log10(y) = log10(C) + k·log10(x) 的最小二乘拟合。

    y ≤ floor 的点不参与拟合；全部低于 floor 时返回斜率 −∞ 的哨兵（差值恒为 0）。
    """
    x = np.asarray(x, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    keep = y > floor
    if not np.any(keep):
        return PowerLawFit(EXACT_SLOPE, 0.0, 0.0, 0)
    if keep.sum() < 2:
        raise InsufficientSpan("非零样本不足 2 个，无法拟合")
    lx, ly = np.log10(x[keep]), np.log10(y[keep])
    slope, intercept = np.polyfit(lx, ly, 1)
    rms = float(np.sqrt(np.mean((ly - (slope * lx + intercept)) ** 2)))
    return PowerLawFit(float(slope), float(10.0 ** intercept), rms, int(keep.sum()))
