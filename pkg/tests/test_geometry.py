import math

import numpy as np
import pytest

from gcflab.geometry import (DomainError, Mollifier, boundary_distance, make_domain, mollifier_value,
                             soliton_speed)


def test_interval_basics(interval):
    assert interval.dim == 1
    assert interval.measure == pytest.approx(math.pi)
    assert soliton_speed(interval) == pytest.approx(1.0)


def test_disk_basics():
    d = make_domain("disk:1")
    assert d.dim == 2
    assert d.measure == pytest.approx(math.pi)
    assert (d.r0, d.R0, d.lambda0) == (1.0, 1.0, 1.0)
    assert soliton_speed(d) == pytest.approx(2.0)


def test_square_basics():
    sq = make_domain("square:2")
    assert sq.measure == pytest.approx(4.0)
    assert sq.r0 == pytest.approx(1.0)
    assert sq.R0 == pytest.approx(math.sqrt(2.0))


@pytest.mark.parametrize("spec", ["interval:-1,2", "disk:0.7", "square:3", "ellipse:1.5,0.8"])
@pytest.mark.parametrize("c", [0.5, 2.0])
def test_speed_scaling(spec, c):
    d = make_domain(spec)
    assert soliton_speed(d.scaled(c)) == pytest.approx(c ** (-d.dim) * soliton_speed(d), rel=1e-9)


def test_ellipse_area():
    d = make_domain("ellipse:1.5,0.8")
    assert d.measure == pytest.approx(math.pi * 1.5 * 0.8, rel=1e-10)
    assert d.r0 == pytest.approx(0.8)
    assert d.lambda0 == pytest.approx(1.5 / 0.8 ** 2, rel=1e-8)


def test_radii_sandwich():
    for spec in ("square:2", "ellipse:1.5,0.8", "polygon:0,0;2,0;1,1.5"):
        d = make_domain(spec)
        r = np.linalg.norm(d.boundary_points(512) - d.center, axis=1)
        assert r.min() >= d.r0 - 1e-9
        assert r.max() <= d.R0 + 1e-9


def test_nonconvex_polygon_names_vertex():
    with pytest.raises(DomainError, match="vertex 2"):
        make_domain("polygon:0,0;2,0;0.5,0.5;0,2")


def test_degenerate_specs():
    with pytest.raises(DomainError):
        make_domain("interval:1,1")
    with pytest.raises(DomainError):
        make_domain("disk:0")
    with pytest.raises(DomainError):
        make_domain("polygon:0,0;1,1;2,2")


def test_boundary_distance_examples(interval):
    info = boundary_distance(interval, [0.0])
    assert info.d == pytest.approx(0.5 * math.pi)
    d = make_domain("disk:2")
    info = boundary_distance(d, [0.3, 0.4])
    assert info.d == pytest.approx(1.5)
    assert info.curvatures == (pytest.approx(0.5),)
    sq = make_domain("square:2")
    assert boundary_distance(sq, [0.9, 0.9]).d == pytest.approx(0.1)


def test_boundary_distance_rejects_outside():
    with pytest.raises(DomainError):
        boundary_distance(make_domain("disk:1"), [1.5, 0.0])


def test_mollifier():
    for n in (1, 2):
        eta = Mollifier(n)
        assert eta.integral() == pytest.approx(1.0, abs=1e-10)
        x0 = 0.0 if n == 1 else np.zeros(2)
        eps = 0.3
        v0 = mollifier_value(eta, x0, eps)
        assert v0 == pytest.approx(eps ** (1 + n) * eta(x0))
        assert v0 > 0
        far = 0.31 if n == 1 else np.array([0.2, 0.25])
        assert mollifier_value(eta, far, eps) == 0.0
