# -*- coding: utf-8 -*-
"""
测试：conifold_forge.model_zoo 显式例子
验证：SL 平面对、γ_c 颈的解析性质、场景装配与 JSON 图卡。

运行方式：
  pytest tests/test_model_zoo.py -v -s
"""

import json

import numpy as np
import pytest

from conifold_forge.conifold import Conifold
from conifold_forge.errors import AngleSumError, NotTransverse
from conifold_forge.geometry import residual_table
from conifold_forge.model_zoo import (
    GLUE_NECK_SCALE,
    chart_from_dict,
    make_attach_plane_scenario,
    make_gamma_neck,
    make_plane_conifold,
    make_sl_plane_pair,
    make_two_plane_scenario,
    plane_cone,
    scenario_from_dict,
)


@pytest.fixture(scope="module")
def rng():
    return np.random.default_rng(11)


@pytest.fixture(scope="module")
def neck3():
    return make_gamma_neck(plane_cone(3), c=1.5)


class TestPlanePair:
    @pytest.mark.parametrize("angles", [[np.pi / 3] * 3, [0.5, 1.0, np.pi - 1.5], [np.pi / 4] * 4])
    def test_both_planes_sl(self, angles, rng):
        pair = make_sl_plane_pair(angles)
        for chart in pair.charts():
            table = residual_table(chart, chart.sample(5, rng))
            assert np.max(np.abs(table)) < 1e-12, f"{chart.label} 不是 SL"

    def test_angle_sum(self):
        with pytest.raises(AngleSumError):
            make_sl_plane_pair([1.0, 1.0, 1.0])

    def test_not_transverse(self):
        with pytest.raises(NotTransverse):
            make_sl_plane_pair([0.0, np.pi / 2, np.pi / 2])

    def test_too_few_angles(self):
        with pytest.raises(ValueError):
            make_sl_plane_pair([np.pi / 2, np.pi / 2])


class TestGammaNeck:
    def test_level_set(self, neck3):
        """Im(λᵐ) = cᵐ。"""
        phi = np.linspace(0.05, np.pi / 3 - 0.05, 9)
        assert np.allclose(np.imag(neck3.lam(phi) ** 3), 1.5 ** 3)

    def test_chart_is_sl(self, neck3, rng):
        table = residual_table(neck3.chart, neck3.chart.sample(30, rng))
        assert np.max(np.abs(table[:, 0])) < 1e-10
        assert np.max(np.abs(table[:, 1])) < 1e-10

    def test_s_symmetry(self, neck3):
        """λ(−s) = e^{iπ/m}·conj(λ(s))。"""
        s = np.linspace(0.1, 3.0, 7)
        lam_p = neck3.lam_s(s)[0]
        lam_m = neck3.lam_s(-s)[0]
        assert np.allclose(lam_m, np.exp(1j * np.pi / 3) * np.conj(lam_p))

    def test_s_derivatives(self, neck3):
        s, h = 0.7, 1e-5
        lam, dlam, d2lam = neck3.lam_s(s)
        fd1 = (neck3.lam_s(s + h)[0] - neck3.lam_s(s - h)[0]) / (2 * h)
        fd2 = (neck3.lam_s(s + h)[1] - neck3.lam_s(s - h)[1]) / (2 * h)
        assert abs(fd1 - dlam) < 1e-7
        assert abs(fd2 - d2lam) < 1e-7

    def test_radius_inverse(self, neck3):
        r = np.array([2.0, 5.0, 40.0])
        s = neck3.s_of_radius(r)
        assert np.allclose(np.abs(neck3.lam_s(s)[0]), r)
        assert np.all(neck3.s_of_radius(r, end=1) < 0)

    def test_ends_rates(self, neck3):
        assert all(e.kind == "AC" and e.rate == pytest.approx(-1.0) for e in neck3.ends)
        assert neck3.ends[0].extent == pytest.approx(3.0)

    def test_rejects_nonpositive_c(self):
        with pytest.raises(ValueError):
            make_gamma_neck(plane_cone(3), c=0.0)


class TestScenarios:
    def test_two_plane(self):
        sc = make_two_plane_scenario(3)
        assert sc.pairing == ((0, 0), (2, 1))
        assert sc.L.marked_kind == "CS" and sc.L_hat.marked_kind == "AC"
        assert sc.L.d == 2 and sc.L_hat.d == 2
        assert sc.recipe == {"builder": "two-plane", "m": 3, "c": GLUE_NECK_SCALE, "ac_rate": -1.0}
        assert sc.neck.c == pytest.approx(0.1)

    def test_two_plane_needs_m3(self):
        with pytest.raises(ValueError):
            make_two_plane_scenario(2)

    def test_from_dict(self):
        sc = scenario_from_dict({"recipe": {"builder": "two-plane", "m": 4}})
        assert sc.m == 4 and sc.neck.m == 4
        assert sc.neck.c == GLUE_NECK_SCALE
        with pytest.raises(ValueError):
            scenario_from_dict({"builder": "lawlor"})

    def test_attach_equal_angles(self):
        base = make_plane_conifold(3)
        sc = make_attach_plane_scenario(base, (0, np.zeros(3)), [np.pi / 3] * 3)
        assert sc.L_hat is not None
        assert len(sc.L.ends) == 4 and sc.L.marking == (1, 2)

    def test_attach_general_angles(self):
        base = make_plane_conifold(3)
        sc = make_attach_plane_scenario(base, (0, np.zeros(3)), [0.5, 1.0, np.pi - 1.5])
        assert sc.L_hat is None
        assert "L_hat" in sc.notes

    def test_plane_pair_round_trip(self):
        """plane-pair 场景经 JSON 往返后 base、附加点、分支、收敛率与颈尺度都不丢失。"""
        frame = np.diag(np.exp(1j * np.array([0.1, -0.3, 0.2])))
        base = make_plane_conifold(3, frame=frame, half_width=3.0, label="P")
        sc = make_attach_plane_scenario(base, (0, [0.5, -0.2, 0.1]), [np.pi / 3] * 3, ac_rate=-1.5, c=0.25)
        data = json.loads(json.dumps(sc.to_dict()))
        back = scenario_from_dict(data)
        assert back.recipe == sc.recipe
        assert back.neck.c == pytest.approx(0.25)
        assert back.L.ends[-1].rate == pytest.approx(-1.5)
        assert np.array_equal(back.L.ends[1].center, sc.L.ends[1].center)
        assert json.dumps(back.to_dict(), sort_keys=True) == json.dumps(sc.to_dict(), sort_keys=True)

    def test_nested_plane_pair_round_trip(self):
        """附加两次：内层场景的 L 作为外层 base 也能重建。"""
        inner = make_attach_plane_scenario(make_plane_conifold(3, half_width=3.0), (0, [1.0, 0.0, 0.0]),
                                           [0.5, 1.0, np.pi - 1.5])
        outer = make_attach_plane_scenario(inner.L, (0, [-1.0, 0.5, 0.0]), [0.5, 1.0, np.pi - 1.5])
        back = scenario_from_dict(json.loads(json.dumps(outer.to_dict())))
        assert len(back.L.ends) == len(outer.L.ends) == 7
        assert json.dumps(back.to_dict(), sort_keys=True) == json.dumps(outer.to_dict(), sort_keys=True)

    def test_plane_pair_without_base_recipe(self):
        base = make_plane_conifold(3)
        bare = Conifold(3, base.compact_charts, base.ends, (), base.components, True, "bare")
        sc = make_attach_plane_scenario(bare, (0, np.zeros(3)), [np.pi / 3] * 3)
        assert sc.recipe["base"] is None
        with pytest.raises(ValueError):
            scenario_from_dict(sc.to_dict())


class TestChartFromDict:
    @pytest.mark.parametrize("data", [
        {"kind": "gamma-neck", "m": 3, "c": 1.0},
        {"kind": "plane", "m": 4},
        {"kind": "cone", "link": "torus", "m": 3, "r_lo": 0.5, "r_hi": 2.0},
    ])
    def test_known_kinds_are_sl(self, data, rng):
        chart = chart_from_dict(data)
        table = residual_table(chart, chart.sample(10, rng))
        assert np.max(np.abs(table)) < 1e-10

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            chart_from_dict({"kind": "sphere"})
