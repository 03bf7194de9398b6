from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nilrect.carnot import CarnotGroup, ControlSignal
from nilrect.ccmetric import (bounded_across_scales, cc_distance_bounds, closed_loop_defect,
                              control_length, integrate_controls, loglog_slope,
                              transfer_controls, transfer_defect)
from nilrect.errors import DimensionMismatch, LoopNotClosed
from nilrect.gliso import heisenberg
from nilrect.library import bundled

H1 = CarnotGroup(heisenberg(1))
H2 = CarnotGroup(heisenberg(2))
EX5 = bundled("example5")
SQUARE = ControlSignal(np.ones(4), [[1, 0], [0, 1], [-1, 0], [0, -1]])


def test_zero_control_is_constant():
    u = ControlSignal(np.ones(3), np.zeros((3, 4)))
    c = integrate_controls(EX5, [0.5, 1, 2, 3, 4], u)
    assert np.allclose(c.trajectory, [0.5, 1, 2, 3, 4])
    assert control_length(u) == 0


def test_square_loop_holonomy():
    frame = H1.left_invariant_frame()
    c = integrate_controls(frame, [0, 0, 0], SQUARE)
    assert np.allclose(c.endpoint, [0, 0, 1], atol=1e-10)
    assert c.length == pytest.approx(4.0)
    # the exact group endpoint is an independent oracle
    assert np.allclose(H1.endpoint(SQUARE), c.endpoint, atol=1e-10)


def test_flow_of_first_field():
    c = integrate_controls(EX5, [0] * 5, ControlSignal([0.7], [[1, 0, 0, 0]]))
    assert np.allclose(c.endpoint, [0.7, 0, 0, 0, 0], atol=1e-12)


def test_transfer_square_into_example5():
    vals = np.zeros((4, 4))
    vals[:, 2:] = SQUARE.values
    c = transfer_controls(ControlSignal(np.ones(4), vals), EX5, [0] * 5)
    assert np.allclose(c.endpoint, [0, 0, 0, 0, 1], atol=1e-10)


@settings(max_examples=15, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=8, max_size=8), st.floats(0.1, 2))
def test_length_properties(v, dur):
    u = ControlSignal(np.full(2, dur), np.reshape(v, (2, 4)))
    c = transfer_controls(u, EX5, [0.1, 0, 0, 0, 0])
    assert c.length == pytest.approx(u.length())
    unit = u.values / np.maximum(1, np.linalg.norm(u.values, axis=1))[:, None]
    assert ControlSignal(u.durations, unit).length() <= u.total_duration + 1e-12


def test_dimension_checks():
    with pytest.raises(DimensionMismatch):
        integrate_controls(EX5, [0, 0], SQUARE)
    with pytest.raises(DimensionMismatch):
        integrate_controls(EX5, [0] * 5, SQUARE)


def test_distance_bounds_trivial_cases():
    frame = H1.left_invariant_frame()
    assert cc_distance_bounds(frame, [0, 0, 0], [0, 0, 0]) == (0.0, 0.0)
    lo, hi = cc_distance_bounds(frame, [0, 0, 0], [1, 0, 0])
    assert hi == pytest.approx(1.0, rel=1e-6) and lo <= hi


def test_vertical_scaling_example5():
    p = np.array([0.5, 0, 0, 0, 0])
    ratios = []
    for eps in (1e-2, 1e-3, 1e-4):
        lo, hi = cc_distance_bounds(EX5, p, p + [0, 0, 0, 0, eps],
                                    budget={"segments": 16, "restarts": 3})
        assert 0 <= lo <= hi
        ratios.append(hi / eps ** 0.5)
    assert max(ratios) <= 2 * min(ratios)


def test_loop_must_close_in_group():
    with pytest.raises(LoopNotClosed):
        closed_loop_defect(EX5, H2, [F(1, 2), 0, 0, 0, 0], loop=ControlSignal([1], [[1, 0, 0, 0]]))


def test_loop_closed_in_both_has_zero_defect():
    loop = ControlSignal([1, 1], [[1, 0, 0, 0], [-1, 0, 0, 0]])
    tab = closed_loop_defect(EX5, H2, [F(1, 2), 0, 0, 0, 0], loop=loop, scales=[0.5, 0.25])
    assert all(r["defect_hi"] == 0 for r in tab.rows)


def test_model_frame_against_itself():
    frame = H1.left_invariant_frame()
    tab = closed_loop_defect(frame, H1, [0, 0, 0], scales=[0.5, 0.25, 0.125])
    assert all(r["defect_hi"] == 0 for r in tab.rows)
    res = transfer_defect(frame, H1, [0, 0, 0], SQUARE.scaled(0.3),
                          ControlSignal([1], [[0.2, -0.1]]))
    # exact tangent model: only the transcription's suboptimality remains
    assert res["defect_lo"] == 0 and res["defect_hi"] < 0.01 * res["dY"][1]
    assert res["dX"][0] == pytest.approx(res["dY"][0], rel=1e-6)


def test_identical_controls_contain_zero():
    u = ControlSignal([0.5, 0.5], [[0.1, 0.2, 0, 0], [0, 0, 0.3, -0.1]])
    res = transfer_defect(EX5, H2, [F(1, 2), 0, 0, 0, 0], u, u)
    assert res["defect_lo"] == 0


def test_scale_helpers():
    assert loglog_slope([1, 2, 4], [1, 8, 64]) == pytest.approx(3.0)
    assert bounded_across_scales([9, 9, 1, 1.5, 1.9])
    assert not bounded_across_scales([1, 1, 1, 3])
    assert not bounded_across_scales([1, 1, float("nan")])
