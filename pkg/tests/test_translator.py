import math

import numpy as np
import pytest

from gcflab.geometry import DomainError, make_domain
from gcflab.translator import (ConvexityError, exact_grim_reaper, gauss_map_gap, log_barrier_check,
                               solve_perturbed_translator, solve_translator, volume_under)


def test_grim_reaper_values():
    assert exact_grim_reaper(0.5 * math.pi, 0.0) == 0.0
    assert exact_grim_reaper(0.5 * math.pi, math.pi / 3) == pytest.approx(math.log(2.0), rel=1e-14)
    with pytest.raises(DomainError):
        exact_grim_reaper(1.0, 1.0)


def test_grim_reaper_ode_identity():
    rng = np.random.default_rng(0)
    for a in (0.5, 1.0, 3.0):
        lam = 0.5 * math.pi / a
        x = rng.uniform(-0.9 * a, 0.9 * a, 20)
        u = exact_grim_reaper(a, x)
        # u' = tan(lam x) and 1 + u'^2 = e^{2 lam u}, so u'' = lam (1 + u'^2)
        du = np.tan(lam * x)
        assert np.allclose(np.exp(2 * lam * u), 1 + du ** 2, rtol=1e-12)
        k = 1e-4
        d2u = (exact_grim_reaper(a, x + k) - 2 * u + exact_grim_reaper(a, x - k)) / k ** 2
        assert np.allclose(d2u, lam * (1 + du ** 2), rtol=1e-4)


def test_solution_postconditions(grim512):
    u = grim512.u[grim512.active]
    assert u.min() == 0.0
    assert grim512.residual <= 1e-10
    assert np.all(np.diff(u, 2) >= -1e-12)


def test_grim_reaper_match(grim512):
    x = grim512.grid[0]
    m = np.abs(x) <= 0.9 * 0.5 * math.pi
    err = np.max(np.abs(grim512.u[m] - exact_grim_reaper(0.5 * math.pi, x[m])))
    assert err <= 5e-4


def test_volume_interval(grim512):
    assert grim512.V == pytest.approx(math.pi * math.log(2.0), rel=1e-2)


def test_volume_scaling_follows_grim_reaper_family(interval):
    # the width-2a translator is (a/a0)^2 times the width-2a0 one, rescaled
    small = solve_translator(interval.scaled(0.5), 512)
    base = solve_translator(interval, 512)
    assert small.V / base.V == pytest.approx(0.25, rel=5e-3)


def test_disk_matches_radial(disk64, radial1):
    X, Y = np.meshgrid(*disk64.grid, indexing="ij")
    r = np.hypot(X, Y)
    m = disk64.active & (r <= 0.9)
    assert np.max(np.abs(disk64.u[m] - radial1(r[m]))) <= 2e-3


def test_radial_profile(radial1):
    assert radial1.beta == pytest.approx(2.0, rel=1e-3)
    assert radial1.u[0] == pytest.approx(0.0, abs=1e-14)
    assert radial1.p[0] == pytest.approx(0.0, abs=1e-14)
    assert np.all(np.diff(radial1.p) > 0)


def test_radial_volume_vs_grid(disk64, radial1):
    assert volume_under(disk64).V == pytest.approx(radial1.volume(), rel=1e-2)


def test_barrier_disk(disk64):
    rep = log_barrier_check(disk64.domain, 0.1, translator=disk64)
    assert rep.min_margin > 0
    assert rep.dominated


def test_barrier_rejects_polygon():
    with pytest.raises(DomainError):
        log_barrier_check(make_domain("square:2"), 0.1)


def test_gauss_map_gap(grim512):
    full = gauss_map_gap(grim512)
    assert full.beta_est == pytest.approx(1.0, rel=1e-2)
    x = grim512.grid[0]
    cut = gauss_map_gap(grim512, P=20.0, mask=np.abs(x) <= 0.9 * 0.5 * math.pi)
    assert cut.gap > 0
    assert gauss_map_gap(grim512, P=20.0).gap < cut.gap


def test_perturbed_measure_and_bound(interval, grim512):
    M = 1.0     # |u'| = tan|x| <= 1 on |x| <= pi/4
    gaps = []
    for eps in (0.2, 0.1, 0.05):
        sol = solve_perturbed_translator(interval, eps, 512)
        assert sol.domain.measure == pytest.approx(interval.measure / (1 + eps), rel=1e-12)
        pts = sol.grid[0][sol.active][:, None]
        assert np.min(sol.u[sol.active] + M * eps - grim512.evaluate(pts)) >= -1e-6
        gaps.append(abs(sol.V - grim512.V))
    assert gaps[0] > gaps[1] > gaps[2]


def test_perturbed_rejects_large_eps(interval):
    with pytest.raises(DomainError):
        solve_perturbed_translator(interval, 0.9, 128)


def test_resolution_floor(interval):
    with pytest.raises(ValueError):
        solve_translator(interval, 8)


def test_square_reports_convexity_loss():
    # the non-monotone 2-D scheme cannot resolve corners; it must fail loudly
    with pytest.raises((ConvexityError, RuntimeError)):
        solve_translator(make_domain("square:2"), 48)
