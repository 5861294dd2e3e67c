# -*- coding: utf-8 -*-
"""
测试：conifold_forge.charts / conifold_forge.geometry 图卡与残差求值
验证：解析导数与差分一致、辛拉回与 SL 残差、图 1-形式的图映射。

运行方式：
  pytest tests/test_geometry.py -v -s
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conifold_forge.charts import (
    ImmersionChart,
    cone_chart,
    fd_derivative,
    harvey_lawson_torus_link,
    sphere_link,
)
from conifold_forge.conifold import LagrangianCone
from conifold_forge.errors import DegenerateFrame, DerivativeUnavailable, DomainError, OutOfNeighbourhood
from conifold_forge.geometry import (
    GraphOneForm,
    calibration_phase,
    euclidean_graph_chart,
    graph_map,
    hodge_star_scale,
    induced_metric,
    is_lagrangian,
    omega,
    plane_chart,
    residual_table,
    sl_residual,
    symplectic_pullback,
)
from conifold_forge.model_zoo import plane_cone


@pytest.fixture(scope="module")
def rng():
    return np.random.default_rng(7)


# ────────────────────────────────────────────
# 图卡
# ────────────────────────────────────────────

class TestCharts:
    def test_sphere_link_unit_norm(self, rng):
        """S^{m−1} 链环上的点都是单位向量。"""
        for m in (3, 4, 5):
            link = sphere_link(m)
            for th in link.sample(10, rng):
                assert abs(np.linalg.norm(link.point(th)) - 1.0) < 1e-14, f"m={m} 链环点不是单位向量"

    def test_sphere_tangent_matches_difference(self, rng):
        """链环切向量与 4 阶差分一致。"""
        link = sphere_link(4)
        for th in link.sample(5, rng):
            fd = fd_derivative(lambda x: link.point(x), th)
            assert np.max(np.abs(fd - link.tangent(th))) < 1e-8

    def test_torus_gram(self, rng):
        """Harvey–Lawson 环面链环的诱导度量为 (1/3)[[2,1],[1,2]]。"""
        link = harvey_lawson_torus_link()
        th = link.sample(1, rng)[0]
        assert np.allclose(link.metric(th), link.extra["gram"], atol=1e-14)

    def test_cone_chart_jac_vs_fd(self, rng):
        """锥图卡的解析 jac 与 finite-difference 模式一致。"""
        chart = cone_chart(sphere_link(3), 0.5, 2.0)
        fd = chart.with_mode("finite-difference")
        for p in chart.sample(5, rng):
            assert np.max(np.abs(chart.jac(p) - fd.jac(p))) < 1e-8

    def test_hess_fd_symmetric(self, rng):
        """差分 hess 关于两个参数下标对称，并接近解析值。"""
        chart = cone_chart(sphere_link(3), 0.5, 2.0)
        p = chart.sample(1, rng)[0]
        H = chart.with_mode("finite-difference").hess(p)
        assert np.allclose(H, np.swapaxes(H, 1, 2))
        assert np.max(np.abs(H - chart.hess(p))) < 1e-5

    def test_domain_error(self):
        chart = cone_chart(sphere_link(3), 0.5, 2.0)
        with pytest.raises(DomainError):
            chart.eval([0.1, 0.1, 3.0])

    def test_derivative_unavailable(self):
        """analytic 模式又没有 jac_fn 时报 DerivativeUnavailable。"""
        chart = ImmersionChart(["x"], [0.0], [1.0], lambda p: np.array([p[0], 0, 0], dtype=complex))
        with pytest.raises(DerivativeUnavailable):
            chart.jac([0.5])

    def test_rescaled_radial(self, rng):
        """ι_t(θ, r) = t·ι(θ, r/t)。"""
        chart = cone_chart(sphere_link(3), 0.5, 2.0)
        big = chart.rescaled(3.0, radial_index=2)
        th = sphere_link(3).sample(1, rng)[0]
        p = np.concatenate([th, [1.2]])
        q = np.concatenate([th, [3.6]])
        assert np.allclose(big.eval(q), 3.0 * chart.eval(p))
        assert np.allclose(big.jac(q)[:, 2], chart.jac(p)[:, 2])

    def test_sample_unbounded_needs_box(self, rng):
        chart = cone_chart(sphere_link(3), 1.0, np.inf)
        with pytest.raises(ValueError):
            chart.sample(3, rng)


# ────────────────────────────────────────────
# 辛结构与 SL 残差
# ────────────────────────────────────────────

class TestResiduals:
    def test_omega_convention(self):
        """ω̃(e₁, i·e₁) = 1。"""
        e = np.array([1.0, 0, 0], dtype=complex)
        assert omega(e, 1j * e) == pytest.approx(1.0)
        assert omega(e, e) == 0.0

    def test_real_plane_is_sl(self, rng):
        chart = plane_chart(3)
        for p in chart.sample(5, rng):
            assert is_lagrangian(chart, p)
            assert sl_residual(chart, p) == pytest.approx(0.0, abs=1e-14)
            assert calibration_phase(chart, p) == pytest.approx(1.0)

    def test_imaginary_plane_residual(self):
        """i·ℝ³：det J = −i，残差为 −1。"""
        chart = plane_chart(3, frame=1j * np.eye(3))
        assert sl_residual(chart, [0.1, 0.2, 0.3]) == pytest.approx(-1.0)

    @given(a=st.floats(min_value=-5.0, max_value=5.0))
    @settings(max_examples=30, deadline=None)
    def test_gradient_graph_residual(self, a):
        """f = a x₀²/2 的梯度图：Lagrangian，残差 a/√(1+a²)。"""
        chart = euclidean_graph_chart(
            3,
            lambda x: np.array([a * x[0], 0.0, 0.0]),
            lambda x: np.diag([a, 0.0, 0.0]),
            lambda x: np.zeros((3, 3, 3)),
        )
        p = np.array([0.3, -0.2, 0.1])
        assert np.max(np.abs(symplectic_pullback(chart, p))) < 1e-14
        assert sl_residual(chart, p) == pytest.approx(a / np.sqrt(1.0 + a * a), abs=1e-12)

    def test_rotational_graph_not_lagrangian(self):
        """v = (x₁, −x₀, 0) 不是梯度场，辛拉回非零。"""
        D = np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
        chart = euclidean_graph_chart(3, lambda x: D @ x, lambda x: D)
        assert not is_lagrangian(chart, [0.1, 0.1, 0.1])

    def test_shear_graph_pullback_sign(self):
        """v = (x₁, 0, 0)：∂₀ι = e₀，∂₁ι = e₁ + i e₀，ω̃ = Σ dx∧dy 给出 (0,1) 元 +1。"""
        D = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
        chart = euclidean_graph_chart(3, lambda x: D @ x, lambda x: D)
        W = symplectic_pullback(chart, [1.0, 0.0, 0.0])
        assert W[0, 1] == pytest.approx(1.0, abs=1e-14)
        assert W[1, 0] == pytest.approx(-1.0, abs=1e-14)
        assert np.count_nonzero(np.abs(W) > 1e-14) == 2

    def test_degenerate_frame(self):
        chart = ImmersionChart(
            ["x", "y", "z"], [0.0] * 3, [1.0] * 3,
            lambda p: np.zeros(3, dtype=complex),
            lambda p: np.zeros((3, 3), dtype=complex),
        )
        with pytest.raises(DegenerateFrame):
            induced_metric(chart, [0.5, 0.5, 0.5])
        with pytest.raises(DegenerateFrame):
            sl_residual(chart, [0.5, 0.5, 0.5])

    def test_residual_table_shape(self, rng):
        chart = cone_chart(sphere_link(3), 0.5, 2.0)
        table = residual_table(chart, chart.sample(12, rng))
        assert table.shape == (12, 2)
        assert np.max(np.abs(table)) < 1e-12, "平面锥应为精确 SL"

    def test_hodge_star_scale(self):
        assert hodge_star_scale(1, 2.0, 3) == pytest.approx(2.0)
        assert hodge_star_scale(0, 0.5, 4) == pytest.approx(0.0625)
        with pytest.raises(ValueError):
            hodge_star_scale(4, 1.0, 3)


# ────────────────────────────────────────────
# 图映射
# ────────────────────────────────────────────

class TestGraphMap:
    @pytest.fixture(scope="class")
    def radial_form(self):
        cone = plane_cone(3)
        return cone, GraphOneForm.exact_radial(
            cone, lambda r: r ** -2, lambda r: -2.0 * r ** -3, lambda r: 6.0 * r ** -4)

    def test_radial_graph_lagrangian(self, radial_form, rng):
        cone, form = radial_form
        chart = graph_map(cone, form, r_lo=0.5, r_hi=5.0)
        assert chart.meta["exact"]
        for p in chart.sample(8, rng):
            assert np.max(np.abs(symplectic_pullback(chart, p))) < 1e-12

    def test_radial_form_closed(self, radial_form):
        _, form = radial_form
        assert form.closedness_defect(np.array([0.7, 1.1]), 1.3) < 1e-8

    def test_zero_form_is_cone(self):
        cone = plane_cone(3)
        chart = graph_map(cone, GraphOneForm.zero(cone), r_lo=0.5, r_hi=2.0)
        p = [0.4, 0.9, 1.5]
        assert np.allclose(chart.eval(p), cone.immersion(p[:2], p[2]))

    def test_dilated_radial(self, radial_form):
        """伸缩后 a_t(r) = t·a(r/t)。"""
        _, form = radial_form
        d = form.dilated(2.0)
        assert d.radial[0](3.0) == pytest.approx(2.0 * (1.5) ** -2)

    def test_out_of_neighbourhood(self):
        """非平面锥上 |α|/r 过大时一阶映射拒绝求值。"""
        cone = LagrangianCone(harvey_lawson_torus_link(), symmetry_dim=2, label="T2-HL")
        form = GraphOneForm(cone, alpha2=lambda th, r: 5.0)
        chart = graph_map(cone, form, r_lo=0.5, r_hi=2.0)
        assert chart.meta["exact"] is False
        with pytest.raises(OutOfNeighbourhood):
            chart.eval([1.0, 1.0, 1.0])

    def test_first_order_map_records_defect(self):
        """非平面锥的一阶映射在 meta 里带取样的辛缺陷；径向常数形式的图仍是 Lagrangian。"""
        cone = LagrangianCone(harvey_lawson_torus_link(), symmetry_dim=2, label="T2-HL")
        chart = graph_map(cone, GraphOneForm(cone, alpha2=lambda th, r: 0.01), r_lo=0.5, r_hi=2.0)
        defect = chart.meta["symplectic_defect"]
        assert np.isfinite(defect) and 0.0 <= defect < 1e-6

    def test_defect_nan_outside_neighbourhood(self):
        cone = LagrangianCone(harvey_lawson_torus_link(), symmetry_dim=2, label="T2-HL")
        chart = graph_map(cone, GraphOneForm(cone, alpha2=lambda th, r: 5.0), r_lo=0.5, r_hi=2.0)
        assert np.isnan(chart.meta["symplectic_defect"])
