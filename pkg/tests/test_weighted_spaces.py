# -*- coding: utf-8 -*-
"""
测试：conifold_forge.weighted_spaces 加权范数、度量等价与换权因子

运行方式：
  pytest tests/test_weighted_spaces.py -v -s
"""

import numpy as np
import pytest

from conifold_forge.charts import sphere_link
from conifold_forge.conifold import LagrangianCone
from conifold_forge.errors import (
    HypothesisViolated,
    MissingDerivatives,
    NotEquivalent,
    QuadratureDivergence,
)
from conifold_forge.geometry import induced_metric
from conifold_forge.model_zoo import make_gamma_neck
from conifold_forge.weighted_spaces import (
    SampledField,
    WeightSystem,
    changing_weight_factor,
    embedding_probe,
    general_hat_weight,
    product_bound_ratio,
    radial_field,
    radial_quadrature,
    scaled_equivalence_constants,
    weighted_ck_norm,
    weighted_sobolev_norm,
)


def _bump(center, width):
    def f(r):
        return np.exp(-(np.log(r / center) / width) ** 2)

    def df(r):
        return f(r) * (-2.0 * np.log(r / center) / width ** 2) / r
    return f, df


class TestQuadrature:
    def test_log_integral_exact(self):
        r, w = radial_quadrature(1.0, 100.0)
        assert np.sum(w / r) == pytest.approx(np.log(100.0), rel=1e-12)

    def test_density(self):
        r, _ = radial_quadrature(1.0, 10.0, per_decade=64)
        assert len(r) >= 64

    def test_endpoints(self):
        r, w = radial_quadrature(0.5, 2.0, include_endpoints=True)
        assert r[0] == 0.5 and r[-1] == 2.0
        assert w[0] == 0.0 and w[-1] == 0.0


class TestCkNorm:
    def test_power_is_one(self):
        """f = ρ^β，k = 0 → w·f ≡ 1。"""
        beta = -0.5
        fld = radial_field(lambda r: r ** beta, 3, 1.0, 10.0)
        ws = WeightSystem.on_cone_piece(fld.nodes, beta, 3)
        assert weighted_ck_norm(fld, ws, 0) == pytest.approx(1.0, abs=1e-12)

    def test_cs_end_sup(self):
        """CS 端截断在 ε：f = ρ^{β+1} 的 C⁰_β 范数为 ε。"""
        beta, eps = 0.5, 0.5
        fld = radial_field(lambda r: r ** (beta + 1), 3, 1e-3, eps)
        ws = WeightSystem.on_cone_piece(fld.nodes, beta, 3, end="CS:0")
        assert weighted_ck_norm(fld, ws, 0) == pytest.approx(eps, rel=1e-12)

    def test_exp_decay_against_dense_grid(self):
        """AC 端 exp(−ρ)，β = −0.5，k = 1：与 4 倍加密网格相差 < 1%。"""
        fn, dfn = (lambda r: np.exp(-r)), (lambda r: -np.exp(-r))
        coarse = radial_field(fn, 3, 1.0, 50.0, derivs=[dfn])
        dense = radial_field(fn, 3, 1.0, 50.0, derivs=[dfn], per_decade=256)
        a = weighted_ck_norm(coarse, WeightSystem.on_cone_piece(coarse.nodes, -0.5, 3), 1)
        b = weighted_ck_norm(dense, WeightSystem.on_cone_piece(dense.nodes, -0.5, 3), 1)
        assert abs(a - b) / b < 0.01

    def test_missing_derivatives(self):
        fld = radial_field(lambda r: r, 3, 1.0, 2.0)
        with pytest.raises(MissingDerivatives):
            weighted_ck_norm(fld, WeightSystem.on_cone_piece(fld.nodes, 0.0, 3), 2)


class TestSobolevNorm:
    def test_annulus_oracle(self):
        """f ≡ 1，r ∈ [1, 2]，β = 0，p = 2 → (4π ln 2)^{1/2}。"""
        fld = radial_field(lambda r: np.ones_like(r), 3, 1.0, 2.0, beta=0.0)
        ws = WeightSystem.on_cone_piece(fld.nodes, 0.0, 3)
        assert weighted_sobolev_norm(fld, ws, 0, 2) == pytest.approx(np.sqrt(4 * np.pi * np.log(2)), rel=1e-10)

    def test_zero_field(self):
        fld = radial_field(lambda r: np.zeros_like(r), 3, 1.0, 2.0, beta=0.0)
        ws = WeightSystem.on_cone_piece(fld.nodes, 0.0, 3)
        assert weighted_sobolev_norm(fld, ws, 0, 2) == 0.0

    def test_dilation_factor(self):
        """f_t(r) = f(r/t)：‖f_t‖_{W_{1,β}} = t^{−β}‖f‖。"""
        beta, t = -0.5, 0.1
        f, df = _bump(1.0, 0.7)
        base = radial_field(f, 3, 0.05, 20.0, derivs=[df], beta=beta)
        dil = radial_field(lambda r: f(r / t), 3, 0.05 * t, 20.0 * t,
                           derivs=[lambda r: df(r / t) / t], beta=beta)
        a = weighted_sobolev_norm(base, WeightSystem.on_cone_piece(base.nodes, beta, 3), 1, 4)
        b = weighted_sobolev_norm(dil, WeightSystem.on_cone_piece(dil.nodes, beta, 3), 1, 4)
        assert b == pytest.approx(t ** (-beta) * a, rel=1e-9)

    def test_homogeneity_and_triangle(self):
        f, df = _bump(2.0, 0.5)
        g, dg = _bump(5.0, 0.3)
        ff = radial_field(f, 3, 0.5, 20.0, derivs=[df])
        gg = radial_field(g, 3, 0.5, 20.0, derivs=[dg])
        fg = radial_field(lambda r: f(r) + g(r), 3, 0.5, 20.0, derivs=[lambda r: df(r) + dg(r)])
        ws = WeightSystem.on_cone_piece(ff.nodes, -0.5, 3)
        nf = weighted_sobolev_norm(ff, ws, 1, 2, check=False)
        ng = weighted_sobolev_norm(gg, ws, 1, 2, check=False)
        assert weighted_sobolev_norm(ff.scaled(-3.0), ws, 1, 2, check=False) == pytest.approx(3 * nf, rel=1e-12)
        assert weighted_sobolev_norm(fg, ws, 1, 2, check=False) <= nf + ng + 1e-12
        assert weighted_ck_norm(fg, ws, 1) <= weighted_ck_norm(ff, ws, 1) + weighted_ck_norm(gg, ws, 1) + 1e-12

    def test_divergence_detected(self):
        """加密后范数翻倍 → QuadratureDivergence。"""
        r, w = radial_quadrature(1.0, 2.0)
        ws = WeightSystem.on_cone_piece(r, 0.0, 3)
        doubled = SampledField(r, w, (2.0 * np.ones_like(r),))
        fld = SampledField(r, w, (np.ones_like(r),), refine=lambda: (doubled, ws))
        with pytest.raises(QuadratureDivergence):
            weighted_sobolev_norm(fld, ws, 0, 2)

    def test_shifted_weight(self):
        """β−2 权重等于 w·ρ²。"""
        r, _ = radial_quadrature(1.0, 10.0)
        ws = WeightSystem.on_cone_piece(r, -0.5, 3)
        assert np.allclose(ws.shifted(-2.0).weight, r ** 2.5)
        assert ws.shifted(-2.0).end_betas == {"AC:0": -2.5}

    def test_general_weight_matches_neck(self):
        """β̂ 为常数时 t^{−β̂}ρ̂^{−β̂} 与颈部权重 r^{−β}（r = tρ̂）一致。"""
        t, beta = 0.05, -0.5
        rho_hat = np.linspace(1.0, 3.0, 7)
        w_hat = general_hat_weight(t, beta, rho_hat, np.full_like(rho_hat, beta))
        assert np.allclose(w_hat, (t * rho_hat) ** (-beta), rtol=1e-12)


class TestScaledEquivalence:
    @pytest.fixture(scope="class")
    def grid(self):
        rho = np.geomspace(1.0, 10.0, 50)
        g = np.tile(np.diag([1.0, 2.0, 3.0]), (50, 1, 1)) * rho[:, None, None] ** 2
        return rho, g

    def test_identical(self, grid):
        rho, g = grid
        rep = scaled_equivalence_constants(g, g, rho, 2)
        assert rep.c0 == pytest.approx(1.0, abs=1e-12)
        assert max(rep.cj) <= 1e-8
        assert rep.dilation is None

    def test_constant_dilation(self, grid):
        rho, g = grid
        rep = scaled_equivalence_constants(g, 0.01 * g, rho, 1)
        assert rep.c0 == pytest.approx(100.0, rel=1e-10)
        assert rep.dilation == pytest.approx(0.01, rel=1e-10)

    def test_degenerate(self, grid):
        rho, g = grid
        bad = g.copy()
        bad[:, 0, 0] = 0.0
        with pytest.raises(NotEquivalent):
            scaled_equivalence_constants(g, bad, rho)

    def test_gamma_neck_end(self):
        """γ_c 颈的端度量与锥度量 scaled-equivalent，窗口外移时 C₀ → 1。"""
        cone = LagrangianCone(sphere_link(3), symmetry_dim=3, label="R3")
        neck = make_gamma_neck(cone, 1.0)
        end = neck.ends[0]
        cone_chart = cone.chart(0.5, 1000.0)
        theta = [1.0, 2.0]

        def c0(lo, hi):
            rho = np.geomspace(lo, hi, 20)
            g1 = np.array([induced_metric(cone_chart, theta + [r]) for r in rho])
            g2 = np.array([induced_metric(end.chart, theta + [r]) for r in rho])
            return scaled_equivalence_constants(g1, g2, rho, 1).c0

        inner, outer = c0(3.0, 6.0), c0(30.0, 60.0)
        print(f"\n  C0 inner={inner:.3e} outer={outer:.3e}")
        assert np.isfinite(inner) and inner < 1.1
        assert outer <= inner
        assert outer - 1.0 < 1e-6


class TestChangingWeight:
    @pytest.fixture(scope="class")
    def waist(self):
        f, df = _bump(0.1, 0.15)
        return radial_field(f, 3, 0.05, 0.2, derivs=[df])

    def test_factor(self, waist):
        ws = WeightSystem.on_cone_piece(waist.nodes, -0.5, 3, end="neck:0")
        ws2 = WeightSystem.on_cone_piece(waist.nodes, 0.0, 3, end="neck:0")
        rep = changing_weight_factor(ws, ws2, 0.1, [waist])
        assert rep.factor == pytest.approx(10 ** 0.5, rel=1e-12)
        print(f"\n  waist ratio: {rep.ratios[0]:.4f}")
        assert rep.factor / 2 <= rep.ratios[0] <= 2 * rep.factor
        assert rep.within_bound

    def test_equal_weights(self, waist):
        ws = WeightSystem.on_cone_piece(waist.nodes, -0.5, 3, end="neck:0")
        assert changing_weight_factor(ws, ws, 0.1).factor == 1.0

    def test_hypothesis(self, waist):
        ws = WeightSystem.on_cone_piece(waist.nodes, 0.0, 3, end="AC:0")
        ws2 = WeightSystem.on_cone_piece(waist.nodes, -0.5, 3, end="AC:0")
        with pytest.raises(HypothesisViolated):
            changing_weight_factor(ws, ws2, 0.1)


class TestEmbeddingAndProduct:
    def test_embedding_ratio_finite(self):
        beta = -0.5
        f, df = _bump(3.0, 0.5)
        fld = radial_field(lambda r: r ** beta * f(r), 3, 0.5, 30.0,
                           derivs=[lambda r: beta * r ** (beta - 1) * f(r) + r ** beta * df(r)])
        ws = WeightSystem.on_cone_piece(fld.nodes, beta, 3)
        rep = embedding_probe([fld], ws, 0, 1, 4)
        assert 0 < rep.max_ratio < np.inf

    def test_embedding_requires_lp(self):
        fld = radial_field(lambda r: r, 3, 1.0, 2.0, derivs=[lambda r: np.ones_like(r)])
        with pytest.raises(ValueError):
            embedding_probe([fld], WeightSystem.on_cone_piece(fld.nodes, 0.0, 3), 0, 1, 2)

    def test_product_bound(self):
        """20 组随机乘积：‖uv‖_{C¹_{β₁+β₂}} ≤ ‖u‖‖v‖。"""
        rng = np.random.default_rng(0)
        pairs = []
        for _ in range(20):
            fields = []
            for b in (-0.5, -1.0):
                a, k, ph = rng.uniform(0.5, 2.0), rng.uniform(0.5, 3.0), rng.uniform(0, 2 * np.pi)
                fields.append(radial_field(
                    lambda r, a=a, k=k, ph=ph, b=b: a * r ** b * (1.0 + 0.3 * np.sin(k * np.log(r) + ph)),
                    3, 1.0, 100.0,
                    derivs=[lambda r, a=a, k=k, ph=ph, b=b: a * r ** (b - 1) * (
                        b * (1.0 + 0.3 * np.sin(k * np.log(r) + ph)) + 0.3 * k * np.cos(k * np.log(r) + ph))]))
            pairs.append(tuple(fields))
        nodes = pairs[0][0].nodes
        ws1 = WeightSystem.on_cone_piece(nodes, -0.5, 3)
        ws2 = WeightSystem.on_cone_piece(nodes, -1.0, 3)
        assert product_bound_ratio(pairs, ws1, ws2, k=1) <= 1.0 + 1e-12
