import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from gcflab import flow as F
from gcflab.geometry import make_domain, soliton_speed
from gcflab.translator import exact_grim_reaper

pos = st.floats(0.3, 3.0)
SET = settings(max_examples=20, deadline=None)


@SET
@given(a=st.floats(-5, 5), w=st.floats(0.1, 10))
def test_interval_speed_times_length(a, w):
    d = make_domain({"kind": "interval", "a": a, "b": a + w})
    assert math.isclose(soliton_speed(d) * d.measure, math.pi, rel_tol=1e-12)


@SET
@given(a=pos, frac=st.floats(-0.95, 0.95))
def test_grim_reaper_family(a, frac):
    lam = 0.5 * math.pi / a
    x = frac * a
    u = exact_grim_reaper(a, x)
    assert u >= 0
    assert math.isclose(math.exp(lam * u) * math.cos(lam * x), 1.0, rel_tol=1e-12)


@SET
@given(a=pos, b=pos)
def test_ellipse_area(a, b):
    s = F.CurveFlowState.ellipse(a, b, 512)
    assert math.isclose(s.volume(), math.pi * a * b, rel_tol=2e-3 * max(a / b, b / a) ** 2)


@SET
@given(a=pos, b=pos, c=st.floats(0.5, 2.0))
def test_parabolic_scaling(a, b, c):
    # curve shortening commutes with x -> c x, t -> c^2 t
    e = F.CurveFlowState.ellipse(a, b, 64)
    t = 0.05 * min(a, b) ** 2
    one, _ = F.flow_curve(e, t)
    big, _ = F.flow_curve(F.CurveFlowState(c * e.h, 0.0, e.theta), c * c * t)
    assert np.max(np.abs(big.h - c * one.h)) <= 1e-9 * c * one.scale()


@SET
@given(a=pos, b=pos, px=st.floats(-2, 2), py=st.floats(-2, 2))
def test_translation_invariance(a, b, px, py):
    e = F.CurveFlowState.ellipse(a, b, 64)
    shift = px * np.cos(e.theta) + py * np.sin(e.theta)
    t = 0.05 * min(a, b) ** 2
    one, _ = F.flow_curve(e, t)
    moved, _ = F.flow_curve(F.CurveFlowState(e.h + shift, 0.0, e.theta), t)
    assert np.max(np.abs(moved.h - shift - one.h)) <= 1e-9 * (1 + abs(px) + abs(py))


@SET
@given(r=st.floats(0.2, 0.9), a=st.floats(1.0, 2.0))
def test_comparison_random_nested(r, a):
    inner = F.CurveFlowState.circle(r, 128)
    outer = F.CurveFlowState.ellipse(a, 1.0, 128)
    res = F.containment_check(inner, outer, 0.5 * r * r + 0.01)
    assert res.held and res.inner_extinct


@SET
@given(R=st.floats(0.5, 3.0), r=st.floats(0.05, 0.45))
def test_opening_keeps_round_bodies(R, r):
    th = F.uniform_angles(128)
    h = R + 0.3 * np.cos(th)
    assert np.allclose(F.open_support(h, th, r * R), h, atol=1e-12)


@SET
@given(eps=st.floats(0.01, 2.0))
def test_eps_t_inverts_scaling(eps):
    disk = make_domain("disk:1")
    small = make_domain({"kind": "disk", "R": (1 + eps) ** -0.5})
    assert math.isclose(F.measure_eps_t(small, disk), eps, rel_tol=1e-8, abs_tol=1e-9)
