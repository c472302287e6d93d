import math

import numpy as np
import pytest

from gcflab import flow as F
from gcflab.geometry import DomainError, make_domain


def test_circle_closed_form():
    st, rep = F.flow_curve(F.CurveFlowState.circle(2.0, 256), 1.0, record_every=50)
    assert np.max(np.abs(st.h - math.sqrt(2.0))) <= 1e-4
    assert rep.max_volume_law_error() <= 5e-3


def test_circle_extinction():
    _, rep = F.flow_curve(F.CurveFlowState.circle(2.0, 128), 4.0, record_every=200)
    assert rep.extinct
    assert rep.extinction_time == pytest.approx(2.0, rel=1e-2)


def test_sphere_closed_form():
    st, rep = F.flow_axisym(F.AxisymFlowState.sphere(2.0, 256), 1.0, record_every=50)
    assert np.max(np.abs(st.h - 5 ** (1 / 3))) <= 5e-4
    assert rep.max_volume_law_error() <= 1e-2


def test_sphere_stays_round():
    st, _ = F.flow_axisym(F.AxisymFlowState.sphere(1.0, 64), 0.1)
    assert np.ptp(st.h) <= 1e-12 * st.h.mean()


def test_shifted_sphere_translates_exactly():
    st, _ = F.flow_axisym(F.AxisymFlowState.sphere(2.0, 128, z0=0.5), 0.5)
    r = (8 - 1.5) ** (1 / 3)
    assert np.max(np.abs(st.h - r - 0.5 * np.sin(st.psi))) <= 5e-4


def test_ellipse_volume_law():
    _, rep = F.flow_curve(F.CurveFlowState.ellipse(2.0, 1.0, 256), 0.3, record_every=100)
    assert rep.max_volume_law_error() <= 5e-3


def test_semi_implicit_circle():
    st, _ = F.flow_curve(F.CurveFlowState.circle(1.0, 128), 0.2, dt=1e-3, scheme="semi-implicit")
    assert np.max(np.abs(st.h - math.sqrt(0.6))) <= 2e-3


def test_record_times_hit_exactly():
    _, rep = F.flow_curve(F.CurveFlowState.circle(1.0, 64), 0.3, record_every=1000, record_times=[0.1, 0.2])
    snaps = F.snapshots(rep)
    assert set(snaps) >= {0.1, 0.2}
    assert snaps[0.1].t == pytest.approx(0.1, abs=1e-14)


def test_curvature_loss_detected():
    h = np.ones(64)
    h[10] = 0.5          # a dent: negative radius at that node
    with pytest.raises(F.CurvatureError) as err:
        F.flow_curve(F.CurveFlowState(h), 0.1)
    assert err.value.node in (9, 10, 11)


def test_graph_translation(grim512):
    st, rep = F.flow_graph(grim512, t_end=1.0, boundary=1.0, record_every=200)
    m = st.mask
    assert np.max(np.abs(st.u[m] - grim512.u[m] - 1.0)) <= 1e-3
    assert F.harnack_residual(rep) <= 1e-8


def test_graph_translation_2d(disk64):
    st, _ = F.flow_graph(disk64, t_end=0.02, boundary=2.0, record_every=100)
    m = st.mask
    assert np.nanmax(np.abs(st.u[m] - disk64.u[m] - 0.04)) <= 1e-6


def test_bump_tip_speed_decreases_to_lambda(grim512):
    dip = lambda p: -0.05 * np.clip(1 - (p[:, 0] / 0.5) ** 2, 0, None) ** 4
    _, rep = F.flow_graph(grim512, t_end=1.0, boundary=1.0, record_every=200, bump=dip)
    s = rep.column("speed_minus")
    assert s[0] > 1.0
    assert s[-1] == pytest.approx(1.0, abs=1e-2)
    assert np.all(s >= 1.0 - 1e-3)


def test_containment_nested_circles():
    res = F.containment_check(F.CurveFlowState.circle(1.0, 128), F.CurveFlowState.circle(2.0, 128), 1.0)
    assert res.held and res.inner_extinct
    assert res.inner_report.extinction_time == pytest.approx(0.5, rel=1e-2)
    assert res.outer.h.mean() == pytest.approx(math.sqrt(4 - 2 * res.t_final), abs=1e-3)


def test_containment_in_ellipse():
    res = F.containment_check(F.CurveFlowState.circle(0.8, 256), F.CurveFlowState.ellipse(1.5, 0.8, 256), 1.0)
    assert res.held and res.inner_extinct


def test_identical_bodies_stay_identical():
    a = F.CurveFlowState.ellipse(2.0, 1.0, 128)
    res = F.containment_check(a, a.copy(), 0.2)
    assert F.hausdorff(res.inner, res.outer) <= 1e-10


def test_containment_rejects_unordered_start():
    with pytest.raises(ValueError):
        F.containment_check(F.CurveFlowState.circle(2.0, 64), F.CurveFlowState.circle(1.0, 64), 0.1)


def test_reflection_commutes_with_flow():
    st = F.CurveFlowState.ellipse(2.0, 1.0, 128)
    a, _ = F.flow_curve(st, 1e-2)
    b, _ = F.flow_curve(st.reflected(), 1e-2)
    assert np.max(np.abs(a.reflected().h - b.h)) <= 1e-12


def test_harnack_circle_closed_form():
    # speed (R^2 - 2t)^{-1/2} grows, so the time-weighted ratio bound holds for n = 1
    R = 1.5
    t = np.linspace(0.05, 1.0, 40)
    s = (R * R - 2 * t) ** -0.5
    assert np.all(s[1:] / s[0] >= (t[0] / t[1:]) ** 0.5)
    _, rep = F.flow_curve(F.CurveFlowState.circle(R, 128), 1.0, record_every=100)
    assert F.harnack_ratio_violation(rep, 0.0) <= 1e-12
    assert F.harnack_residual(rep, t0=0.0) <= 1e-8


def test_harnack_needs_samples():
    rep = F.FlowReport("curve", 8)
    rep.append(0, 1, 1, -1, 1, 1)
    with pytest.raises(ValueError):
        F.harnack_residual(rep)


def test_eps_t_examples():
    disk = make_domain("disk:1")
    assert F.measure_eps_t(disk, disk) == 0.0
    eps = 0.3
    small = make_domain({"kind": "disk", "R": (1 + eps) ** -0.5})
    assert F.measure_eps_t(small, disk) == pytest.approx(eps, abs=1e-6)
    # odd N puts a node on the equator, so the discrete slice is the round one
    sph = F.AxisymFlowState.sphere((1 + eps) ** -0.5, 65)
    assert F.measure_eps_t(sph, disk) == pytest.approx(eps, abs=1e-6)


def test_eps_t_empty_section():
    st = F.CurveFlowState.circle(1.0, 64)
    with pytest.raises(DomainError):
        F.measure_eps_t(st, make_domain("interval:-1,1"), level=2.0)


def test_graded_angles():
    th = F.graded_angles(64, 0.9)
    assert np.all(np.diff(th) > 0)
    assert th[16] == pytest.approx(0.5 * math.pi)
    with pytest.raises(ValueError):
        F.graded_angles(62)
    with pytest.raises(ValueError):
        F.graded_angles(64, 1.0)


def test_report_export(tmp_path):
    _, rep = F.flow_curve(F.CurveFlowState.circle(1.0, 64), 0.1, record_every=50)
    csv_path, json_path = rep.export(tmp_path, "circle")
    head = csv_path.read_text().splitlines()[0]
    assert head == "t,vol,h_plus,h_minus,speed_plus,speed_minus,harnack_residual,eps_t"
    assert json_path.exists()
