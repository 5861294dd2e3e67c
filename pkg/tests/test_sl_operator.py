# -*- coding: utf-8 -*-
"""
测试：conifold_forge.sl_operator 残差映射、线性化、二次余项与增广系统

初始残差的缩放拟合要构造 5 个不同 t 的连通和（每个再加密一次），耗时较长。

运行方式：
  pytest tests/test_sl_operator.py -v -s
"""

from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import sparse

from conifold_forge.connect_sum import GlueParameters, GlueWeights, build_connect_sum
from conifold_forge.errors import (
    DimensionMismatch,
    HypothesisViolated,
    InsufficientSpan,
    OutOfNeighbourhood,
)
from conifold_forge.model_zoo import make_two_plane_scenario
from conifold_forge.sl_operator import (
    PerturbationField,
    RetainedEnd,
    _collar,
    _mode_operator,
    assemble_augmented,
    assemble_operator,
    hamiltonian_fd_check,
    initial_residual_field,
    initial_residual_scaling,
    laplace_beltrami_stencil,
    linearization_check,
    linearize,
    lipschitz_scaling,
    planar_remainder,
    planar_residual,
    quadratic_remainder,
    remainder_ratios,
    remainder_vector,
    residual_vector,
    retained_generators,
)
from conifold_forge.spectral import StabilityReport


@pytest.fixture(scope="module")
def scenario():
    return make_two_plane_scenario(3)


@pytest.fixture(scope="module")
def weights(scenario):
    return GlueWeights.uniform(scenario, -0.5)


@pytest.fixture(scope="module")
def params():
    return GlueParameters.uniform(0.1, 2)


@pytest.fixture(scope="module")
def glued(scenario, weights, params):
    return build_connect_sum(scenario, weights, params)


@pytest.fixture(scope="module")
def op(glued):
    return linearize(glued)


def exact_neck_curve(glued):
    """整条剖面都取 t·λ(s)（精确的 SL 颈）；导数对网格坐标，乘 ds/dσ。"""
    c, hat, t = glued.curve, glued.hat, glued.t
    lam, dlam, _ = hat.lam(c.s)
    lam_h, dlam_h, _ = hat.lam(c.s_half)
    return replace(c, z=t * lam, dz=t * dlam * c.stretch, z_half=t * lam_h, dz_half=t * dlam_h * c.stretch_half)


# ────────────────────────────────────────────
# 平坦对照公式
# ────────────────────────────────────────────

class TestPlanar:
    @given(a=st.floats(min_value=-3.0, max_value=3.0))
    @settings(max_examples=30, deadline=None)
    def test_single_eigenvalue(self, a):
        H = np.diag([a, 0.0, 0.0])
        assert planar_residual(H, "base") == pytest.approx(a, abs=1e-14)
        assert planar_residual(H) == pytest.approx(a / np.sqrt(1 + a * a), abs=1e-14)

    def test_base_is_symmetric_function(self):
        """Im det(I + iH) = σ₁ − σ₃（m = 3）。"""
        a, b, c = 0.3, -0.7, 1.1
        H = np.diag([a, b, c])
        assert planar_residual(H, "base") == pytest.approx(a + b + c - a * b * c)

    def test_remainder_is_cubic(self):
        for a in (1e-2, 1e-3):
            H = np.diag([a, 0.0, 0.0])
            assert planar_remainder(H) == pytest.approx(-0.5 * a ** 3, rel=1e-3)

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            planar_residual(np.zeros((2, 3)))
        with pytest.raises(ValueError):
            planar_residual(np.eye(3), star="normal")


# ────────────────────────────────────────────
# 残差映射
# ────────────────────────────────────────────

class TestResidual:
    def test_exact_neck_has_zero_residual(self, glued):
        curve = exact_neck_curve(glued)
        F0 = residual_vector(curve, np.zeros(curve.size))
        assert np.max(np.abs(F0)) < 1e-9

    def test_initial_residual_supported_on_annulus(self, glued):
        c = glued.curve
        F0 = initial_residual_field(glued).values
        a = np.abs(c.s)
        outside = (a < c.s_T - c.h) | (a > c.s_2T + c.h)
        assert np.max(np.abs(F0[outside])) < 1e-10
        assert np.max(np.abs(F0[~outside])) > 0

    def test_dirichlet_rows(self, glued):
        f = np.zeros(glued.curve.size)
        f[0], f[-1] = 0.25, -0.5
        F = residual_vector(glued.curve, f)
        assert F[0] == 0.25 and F[-1] == -0.5

    def test_out_of_neighbourhood(self, glued):
        big = PerturbationField.bump(glued.curve, 0.0, 0.5, amplitude=10.0)
        with pytest.raises(OutOfNeighbourhood):
            residual_vector(glued.curve, big.values)

    def test_unknown_star(self, glued):
        with pytest.raises(ValueError):
            residual_vector(glued.curve, np.zeros(glued.curve.size), star="hodge")

    def test_bump_field(self, glued):
        f = PerturbationField.bump(glued.curve, 1.0, 0.3)
        assert f.values[0] == 0.0 and f.values[-1] == 0.0
        assert f.values.max() == pytest.approx(1.0, abs=0.01)
        with pytest.raises(ValueError):
            PerturbationField(np.zeros(3), glued.curve)


# ────────────────────────────────────────────
# 线性化
# ────────────────────────────────────────────

class TestLinearization:
    def test_symmetric_in_volume(self, op):
        assert op.asymmetry() < 1e-12

    def test_scaling(self, glued, op):
        """环境伸缩 λ：内部行按 λ^{−2} 缩放。"""
        big = assemble_operator(glued.curve.scaled(3.0))
        for a, b in ((big.lower, op.lower), (big.diag, op.diag), (big.upper, op.upper)):
            assert np.allclose(a[1:-1], b[1:-1] / 9.0, rtol=1e-10, atol=0.0)

    def test_laplacian_on_plane_region(self, glued, op):
        """平面区域上 P_t 与 Laplace–Beltrami 模板逐行一致。"""
        lb = laplace_beltrami_stencil(glued.curve)
        c = glued.curve
        rows = np.abs(c.s) > c.s_2T + 2 * c.h
        rows[0] = rows[-1] = False
        for a, b in ((lb.lower, op.lower), (lb.diag, op.diag), (lb.upper, op.upper)):
            assert np.allclose(a[rows], b[rows], rtol=1e-10, atol=0.0)

    def test_solve_inverts_apply(self, glued, op):
        f = PerturbationField.bump(glued.curve, 0.5, 0.4).values
        assert np.allclose(op.solve(op.apply(f)), f, atol=1e-9)

    def test_dense_matches_apply(self, glued, op):
        f = np.random.default_rng(0).normal(size=op.size)
        assert np.allclose(op.dense() @ f, op.apply(f))

    def test_smallest_modes_are_eigenvectors(self, op):
        """对称化基下 ‖Sv − λv‖_∞ 相对于对角元为舍入量级。"""
        vals, fields = op.smallest_modes(3)
        assert vals.shape == (3,) and np.all(vals < 0)
        d, e = op.symmetrized()
        S = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
        V = np.sqrt(op.curve.density[1:-1])
        for lam, f in zip(vals, fields):
            v = V * f[1:-1]
            assert np.max(np.abs(S @ v - lam * v)) <= 1e-9 * np.max(np.abs(d))

    def test_finite_difference_check(self, glued):
        fields = [
            0.01 * PerturbationField.bump(glued.curve, center, 0.5).values
            for center in (1.0, glued.curve.s_T, 4.0)
        ]
        rep = linearization_check(glued, fields)
        assert rep.passed, f"线性化误差 {rep.errors}"

    def test_to_dict(self, op):
        d = op.to_dict()
        assert d["size"] == op.size and d["end_betas"]["neck:0"] == -0.5


# ────────────────────────────────────────────
# 二次余项
# ────────────────────────────────────────────

class TestRemainder:
    def test_zero_at_origin(self, glued, op):
        assert np.max(np.abs(remainder_vector(glued, np.zeros(glued.curve.size), op=op))) < 1e-12

    def test_quadratic_scaling(self, glued, op):
        """核心处 |Q(εf)| ≈ ε²|Q(f)|（f 按 C²₂ 归一）。"""
        phi = PerturbationField.bump(glued.curve, 0.0, 0.5)
        f = phi.scaled(1e-3 / phi.c22(glued.ws)).values
        q1 = np.max(np.abs(remainder_vector(glued, f, op=op)))
        q2 = np.max(np.abs(remainder_vector(glued, 0.5 * f, op=op)))
        assert q2 / q1 == pytest.approx(0.25, rel=0.05)

    def test_core_ratios_converge(self, glued):
        """核心处 Q 为二次：三个数量级的 ε 上 max|Q(εf)|/ε² 变化不超过 2 倍。"""
        ratios = remainder_ratios(glued, PerturbationField.bump(glued.curve, 0.0, 0.5).values)
        assert len(ratios) == 3
        assert all(np.isfinite(r) and r > 0 for r in ratios)
        assert max(ratios) <= 2.0 * min(ratios), f"比值 {ratios}"

    def test_annulus_ratios_bounded(self, glued):
        """内环带处二次项几乎为零：比值随 ε 不增且有界。"""
        c = glued.curve
        ratios = remainder_ratios(glued, PerturbationField.bump(c, c.s_T, 0.5).values)
        assert all(np.isfinite(r) and r > 0 for r in ratios)
        assert max(ratios) <= 2.0 * ratios[0], f"比值 {ratios}"

    def test_report(self, glued):
        f = PerturbationField.bump(glued.curve, 1.0, 0.5).scaled(1e-3)
        rep = quadratic_remainder(glued, f, f.scaled(0.5))
        assert rep.difference > 0 and rep.step > 0 and rep.c22 > 0
        assert np.isfinite(rep.normalized)

    def test_lipschitz_ratios(self, scenario, weights, params):
        rep = lipschitz_scaling(scenario, weights, params, [0.05, 0.1])
        assert rep.expected == pytest.approx(0.05)
        assert all(r > 0 and np.isfinite(r) for r in rep.ratios)
        assert np.isfinite(rep.fit.slope)


# ────────────────────────────────────────────
# 初始残差的缩放
# ────────────────────────────────────────────

class TestScaling:
    @pytest.fixture(scope="class")
    def serial(self, scenario, weights, params):
        return initial_residual_scaling(scenario, weights, params, np.geomspace(0.01, 0.1, 5))

    def test_exponent(self, serial):
        rep = serial
        assert rep.predicted == pytest.approx(2.6)
        assert abs(rep.fit.slope - rep.predicted) < 0.2, f"拟合指数 {rep.fit.slope:.3f}"
        assert rep.supported, f"环带外残差 {rep.support_defect:.3e}"
        assert [r["t"] for r in rep.to_rows()] == list(rep.t)

    def test_threads_match_serial(self, scenario, weights, params, serial):
        """并行构造各 t 的结果与顺序构造逐位相同，顺序不变。"""
        rep = initial_residual_scaling(scenario, weights, params, np.geomspace(0.01, 0.1, 5), threads=3)
        assert rep.t == serial.t
        assert rep.norms == serial.norms
        assert rep.support_defect == serial.support_defect

    def test_needs_span(self, scenario, weights, params):
        with pytest.raises(InsufficientSpan):
            initial_residual_scaling(scenario, weights, params, [0.05, 0.1, 0.2])


# ────────────────────────────────────────────
# 矩映射与增广系统
# ────────────────────────────────────────────

class TestAugmented:
    def test_hamiltonians(self):
        for m in (3, 4):
            assert hamiltonian_fd_check(m, samples=50) <= 1e-8

    def test_generator_count(self):
        assert RetainedEnd("x").generators(3) == 15
        assert RetainedEnd("x", symmetry_dim=2).generators(3) == 13

    def test_single_end(self, glued):
        aug = assemble_augmented(glued, [RetainedEnd("x", site=0.0, t=0.1)])
        assert aug.d == 15 and aug.added_columns == 15
        assert len(aug.blocks) == 15
        assert aug.smallest_singular_value() > 0

    def test_two_ends(self, glued):
        ends = [RetainedEnd("x", site=0.0, t=0.1), RetainedEnd("y", site=3.0, t=0.1, symmetry_dim=2)]
        aug = assemble_augmented(glued, ends)
        assert aug.d == 28 and aug.added_columns == 28

    def test_duplicate_site(self, glued):
        ends = [RetainedEnd("x", site=0.0, t=0.1), RetainedEnd("y", site=0.0, t=0.1)]
        with pytest.raises(DimensionMismatch):
            assemble_augmented(glued, ends)

    def test_unstable_end(self, glued):
        bad = StabilityReport("unstable", witness=1.0)
        with pytest.raises(HypothesisViolated):
            assemble_augmented(glued, [RetainedEnd("x", stability=bad)])

    def test_no_retained_ends(self, glued):
        aug = assemble_augmented(glued, [])
        assert aug.d == 0 and aug.blocks == ()
        assert aug.smallest_singular_value() > 0

    def test_generators_follow_hamiltonians(self):
        """沿 dθ 的剖面：平移为 d，su(m) 基元旋转为 ±½d²。"""
        gens = retained_generators(3)
        assert len(gens) == 15
        assert [g.mode for g in gens].count(1) == 6 and [g.mode for g in gens].count(2) == 8
        dist = np.array([0.0, 0.5, 2.0])
        for g in gens:
            prof = g.profile(dist)
            if g.mode == 0:
                assert np.allclose(prof, 1.0)
            elif g.mode == 1:
                assert np.allclose(prof, dist, atol=1e-14)
            else:
                assert np.allclose(np.abs(prof), 0.5 * dist ** 2, atol=1e-14)
        assert len(retained_generators(3, symmetry_dim=2)) == 13

    def test_columns_are_hamiltonian_images(self, glued):
        """每列是 S_ℓ(V·χ·H(dθ)) 归一后乘 t^{2−β}，剖面与 Hamiltonian 沿射线的取值一致。"""
        end = RetainedEnd("x", site=0.0, t=0.1)
        aug = assemble_augmented(glued, [end])
        c = glued.curve
        dist, chi = _collar(c, end.site, glued.params.eps)
        V = np.sqrt(c.density[1:-1])
        gens = {(g.mode, g.index): g for g in retained_generators(c.m)}
        for block in aug.blocks:
            g = gens[(block.mode, int(block.label.split("/")[1]))]
            expected = chi * np.array([g.H(d * g.direction) for d in dist]) if g.H else chi
            assert np.allclose(block.profiles[0], expected, rtol=1e-12, atol=1e-15)
            B = block.matrix
            assert sparse.issparse(B) and abs(B - B.T).max() == 0.0
            n = B.shape[0] - 1
            col = B[:n, n].toarray().ravel()
            image = _mode_operator(aug.base, block.mode) @ (V * expected[1:-1])
            assert np.linalg.norm(col) == pytest.approx(0.1 ** 2.5, rel=1e-12)
            assert np.allclose(col, 0.1 ** 2.5 * image / np.linalg.norm(image), rtol=0, atol=1e-12 * 0.1 ** 2.5)
