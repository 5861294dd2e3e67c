# -*- coding: utf-8 -*-
"""
测试：conifold_forge.conifold 与 conifold_forge.regression
验证：端/conifold 的合法性检查、伸缩、端收敛率回归。

运行方式：
  pytest tests/test_conifold.py -v -s
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conifold_forge.conifold import (
    Conifold,
    End,
    cones_match,
    rescale_immersion,
    verify_decay,
)
from conifold_forge.errors import InsufficientSpan
from conifold_forge.model_zoo import make_gamma_neck, make_plane_conifold, make_two_plane_scenario, plane_cone
from conifold_forge.regression import check_span, fit_power_law


@pytest.fixture(scope="module")
def neck():
    return make_gamma_neck(plane_cone(3), c=1.0)


@pytest.fixture(scope="module")
def plane_L():
    return make_plane_conifold(3)


class TestDataModel:
    def test_cs_rate_must_exceed_two(self):
        cone = plane_cone(3)
        with pytest.raises(ValueError):
            End("CS", cone, 2.0, np.zeros(3), cone.chart(0.0, 1.0), 1.0)

    def test_ac_rate_must_be_below_two(self):
        cone = plane_cone(3)
        with pytest.raises(ValueError):
            End("AC", cone, 2.5, np.zeros(3), cone.chart(1.0, np.inf), 1.0)

    def test_special_needs_ac_end(self):
        cone = plane_cone(3)
        cs = End("CS", cone, 3.0, np.zeros(3), cone.chart(0.0, 1.0), 1.0)
        with pytest.raises(ValueError):
            Conifold(3, (), (cs,), (0,), ((0,),), special=True)

    def test_marking_same_kind(self, plane_L):
        cone = plane_cone(3)
        cs = End("CS", cone, 3.0, np.zeros(3), cone.chart(0.0, 1.0), 1.0)
        with pytest.raises(ValueError):
            Conifold(3, (), (cs, plane_L.ends[0]), (0, 1), ((0, 1),))

    def test_cone_audit(self):
        audit = plane_cone(4).audit(np.random.default_rng(0), samples=10)
        assert audit["unit_norm_error"] < 1e-14
        assert audit["sl_residual"] < 1e-12

    def test_neck_second_end_matches_plane(self):
        """颈的第二端锥与平面对的第二个平面是同一实子空间。"""
        sc = make_two_plane_scenario(3)
        assert cones_match(sc.L_hat.ends[1].cone, sc.L.ends[2].cone)
        assert not cones_match(sc.L_hat.ends[1].cone, sc.L.ends[0].cone)

    def test_to_dict(self, plane_L):
        d = plane_L.to_dict()
        assert d["m"] == 3 and d["ends"][0]["kind"] == "AC"


class TestRescale:
    def test_end_chart_reparametrized(self, neck):
        """φ_t(θ, r) = t·φ(θ, r/t)，范围乘以 t，收敛率不变。"""
        L = neck.conifold()
        half = rescale_immersion(L, 0.5)
        end, end_t = L.ends[0], half.ends[0]
        assert end_t.extent == pytest.approx(0.5 * end.extent)
        assert end_t.rate == end.rate
        th = np.array([0.8, 2.0])
        z = end.chart.eval(np.concatenate([th, [3.0]]))
        zt = end_t.chart.eval(np.concatenate([th, [1.5]]))
        assert np.allclose(zt, 0.5 * z)

    def test_rejects_nonpositive(self, neck):
        with pytest.raises(ValueError):
            rescale_immersion(neck.conifold(), 0.0)


class TestDecay:
    def test_neck_end_rate(self, neck):
        """γ_c 的 AC 端：偏差 ~ r^{1−m}。"""
        report = verify_decay(neck.ends[0], np.geomspace(4.0, 400.0, 16))
        assert report.passed, f"斜率 {report.slope:.4f} 与期望 {report.expected} 不符"
        assert report.expected == pytest.approx(-2.0)

    def test_second_end_rate(self, neck):
        report = verify_decay(neck.ends[1], np.geomspace(4.0, 400.0, 16))
        assert report.passed

    def test_exact_cone_end(self, plane_L):
        """精确锥端偏差恒为 0：斜率 −∞，判定通过。"""
        report = verify_decay(plane_L.ends[0], np.geomspace(3.0, 300.0, 10))
        assert report.exact and report.passed

    def test_insufficient_points(self, neck):
        with pytest.raises(InsufficientSpan):
            verify_decay(neck.ends[0], np.geomspace(4.0, 400.0, 5))

    def test_outside_window(self, neck):
        with pytest.raises(InsufficientSpan):
            verify_decay(neck.ends[0], np.geomspace(0.5, 50.0, 10))


class TestRegression:
    @given(k=st.floats(min_value=-4.0, max_value=4.0), c=st.floats(min_value=0.01, max_value=100.0))
    @settings(max_examples=40, deadline=None)
    def test_recovers_power_law(self, k, c):
        x = np.geomspace(1.0, 100.0, 12)
        fit = fit_power_law(x, c * x ** k)
        assert fit.slope == pytest.approx(k, abs=1e-9)
        assert fit.constant == pytest.approx(c, rel=1e-8)
        assert fit.rms < 1e-10

    def test_all_below_floor_is_exact(self):
        fit = fit_power_law(np.geomspace(1, 10, 8), np.zeros(8), floor=1e-13)
        assert fit.exact
        assert np.all(fit.predict(np.array([1.0, 2.0])) == 0.0)

    def test_check_span(self):
        check_span(np.geomspace(1, 10, 8))
        with pytest.raises(InsufficientSpan):
            check_span(np.geomspace(1, 5, 8))
        with pytest.raises(InsufficientSpan):
            check_span(np.geomspace(1, 10, 7))
        check_span(np.geomspace(1, 10, 5), min_points=5)
