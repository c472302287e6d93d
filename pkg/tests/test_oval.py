import math

import numpy as np
import pytest

from gcflab import flow as F
from gcflab import oval as O
from gcflab.geometry import DomainError


@pytest.fixture(scope="module")
def small_oval(interval, grim512):
    return O.construct_oval(interval, [-4.0], [-5.0, -10.0], N=256, translator=grim512)


def test_seed_tip_to_tip(interval, grim512):
    seed = O.glued_seed(interval, -10.0, grim512, N=512, theta=F.graded_angles(512))
    hp, hm = seed.heights()
    assert hp - hm == pytest.approx(20.0, abs=1e-9)
    assert np.max(np.abs(seed.h - seed.reflected().h)) <= 1e-12


def test_seed_volume_gap_tends_to_limit(interval, grim512):
    # Vol - 2|s| = -2 int_{u<|s|} u - 2|s| |{u >= |s|}| lies above -2V and decreases toward it
    # past s = -10 the exact change (~4e-4) is below the polygon error, so only the first step is ordered
    th = F.graded_angles(512)
    gaps = [O.seed_volume_gap(interval, s, grim512, N=512, theta=th) for s in (-5.0, -10.0, -20.0)]
    limit = -2 * math.pi * math.log(2.0)
    assert gaps[0] > gaps[1]
    assert all(g > limit for g in gaps)
    assert gaps[2] == pytest.approx(limit, rel=2e-3)


def test_seed_rejects_small_s(interval, grim512):
    with pytest.raises(ValueError):
        O.glued_seed(interval, 1.0, grim512)
    with pytest.raises(DomainError):
        O.glued_seed(interval, -1e-9, grim512)


def test_construct_volume_and_symmetry(small_oval):
    st = small_oval.final
    assert st.volume() == pytest.approx(8 * math.pi - 2 * math.pi * math.log(2.0), rel=1e-2)
    assert st.symmetry_error() <= 1e-6
    assert len(small_oval.table) == 1


def test_construct_validation(interval, grim512):
    with pytest.raises(ValueError):
        O.construct_oval(interval, [-4.0], [-10.0, -5.0], translator=grim512)
    with pytest.raises(ValueError):
        O.construct_oval(interval, [-8.0], [-5.0], translator=grim512)
    with pytest.raises(ValueError):
        O.construct_oval(interval, [-0.1], [-5.0], translator=grim512)


def test_construct_export(small_oval, tmp_path):
    paths = small_oval.export(tmp_path)
    assert all(p.exists() for p in paths)
    head = (tmp_path / "oval_table.csv").read_text().splitlines()[0]
    assert head == "s_a,s_b,t,hausdorff,contained,min_gap"


def test_angenent_values():
    A = O.angenent_oracle(-math.log(2.0))
    assert A.y_at(0.0) == pytest.approx(math.acosh(2.0), rel=1e-14)
    assert A.height == pytest.approx(1.316958, abs=1e-6)
    near = O.angenent_oracle(-1e-8)
    assert near.height < 1e-3 and near.width < 1e-3
    far = O.angenent_oracle(-30.0)
    assert far.height - 30.0 == pytest.approx(math.log(2.0), abs=1e-12)
    with pytest.raises(DomainError):
        O.angenent_oracle(0.0)


def test_angenent_support_on_curve():
    A = O.angenent_oracle(-2.0)
    st = O.angenent_state(-2.0 - math.log(2.0), 512, F.graded_angles(512))
    P = st.points()
    assert np.max(np.abs(A.residual(P[:, 0], P[:, 1]))) <= 1e-4
    assert st.volume() == pytest.approx(A.volume(), rel=1e-4)
    assert A.height_excess() == pytest.approx(A.height - 2.0 - math.log(2.0), abs=1e-12)


def test_angenent_flows_to_itself():
    th = F.graded_angles(512)
    st = O.angenent_state(-3.0, 512, th)
    end, _ = F.flow_curve(st, -2.0)
    ref = O.angenent_state(-2.0, 512, th)
    assert F.hausdorff(end, ref) <= 2e-3


def test_angenent_asymptotics(interval):
    th = F.graded_angles(512)
    times = (-4.0, -8.0, -16.0)
    states = [O.OvalState(O.angenent_state(t, 512, th), t, t, 1.0, math.pi * math.log(2.0)) for t in times]
    exact = [O.angenent_oracle(t + math.log(2.0)).height_excess() for t in times]
    rep = O.oval_asymptotics(states, interval, height_offsets=exact)
    assert rep.height_negative and rep.height_increasing
    assert rep.t_eps_decreasing


def test_asymptotics_needs_three_states(small_oval, interval):
    with pytest.raises(ValueError):
        O.oval_asymptotics(small_oval.states, interval)


def test_extinction_by_extrapolation(interval, grim512):
    T, rep = O.extinction_time(interval, -5.0, grim512, N=256)
    assert T == pytest.approx(-math.log(2.0), rel=2e-2)
    assert rep.meta["extinction_fit"]["slope"] == pytest.approx(-2 * math.pi, rel=1e-3)
