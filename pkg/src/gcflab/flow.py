"""Gauss curvature flow of convex bodies.

Three representations are evolved:

* planar curves by their support function ``h(theta)``, with normal speed
  equal to the curvature, ``h_t = -1/(h_thth + h)``;
* axisymmetric surfaces in R^3 by the support function of the profile
  over the normal angle ``psi``, ``h_t = -K``;
* graphical caps ``u(x, t)`` with vertical speed
  ``det D^2u / (1 + |Du|^2)^{(n+1)/2}``.

The curve stencil works on any increasing set of normal angles.  Each
node carries the edge of the polygon cut out by the support lines, whose
length ``l_i`` is exact, so area and perimeter are those of that polygon.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spl
from numba import njit

from ._gauss_image import GaussImage2D, arctan_flux
from .geometry import OMEGA_N, ConvexDomain, DomainError
from .translator import TranslatorSolution, _check_convex, _operator

TWO_PI = 2.0 * math.pi


class CurvatureError(RuntimeError):
    """Curvature positivity (or axis distance) lost during a flow."""

    def __init__(self, node, t, what="curvature radius"):
        super().__init__(f"{what} non-positive at node {node}, t={t:.6g}")
        self.node = node
        self.t = t


# ----------------------------------------------------------------------
# kernels

@njit(cache=True)
def _curve_rates(h, theta):
    """Speed ``h_t``, curvature radius, edge length and Jacobian diagonal."""
    N = h.size
    v = np.empty(N)
    rho = np.empty(N)
    ell = np.empty(N)
    dg = np.empty(N)
    for i in range(N):
        ip = i + 1 if i < N - 1 else 0
        im = i - 1 if i > 0 else N - 1
        dp = theta[ip] - theta[i]
        if i == N - 1:
            dp += TWO_PI
        dm = theta[i] - theta[im]
        if i == 0:
            dm += TWO_PI
        sp_, cp = math.sin(dp), math.cos(dp)
        sm, cm = math.sin(dm), math.cos(dm)
        l = (h[ip] - h[i] * cp) / sp_ + (h[im] - h[i] * cm) / sm
        T = math.tan(0.5 * dp) + math.tan(0.5 * dm)
        ell[i] = l
        rho[i] = l / T
        v[i] = -T / l
        dg[i] = T * (cp / sp_ + cm / sm) / (l * l)
    return v, rho, ell, dg


@njit(cache=True)
def _axisym_rates(h, dpsi):
    """Speed, meridian radius, axis distance and Jacobian diagonal on a psi grid.

    The grid is uniform on [-pi/2, pi/2] with both poles as nodes; the
    support function is reflected evenly across each pole.
    """
    N = h.size
    cD = math.cos(dpsi)
    sD = math.sin(dpsi)
    fac = 1.0 / (2.0 * (1.0 - cD))
    v = np.empty(N)
    rho = np.empty(N)
    r = np.empty(N)
    dg = np.empty(N)
    for j in range(N):
        hm = h[j - 1] if j > 0 else h[1]
        hp = h[j + 1] if j < N - 1 else h[N - 2]
        rho1 = (hp + hm - 2.0 * cD * h[j]) * fac
        rho[j] = rho1
        psi = -0.5 * math.pi + j * dpsi
        if j == 0 or j == N - 1:
            r[j] = 0.0
            k2 = 1.0 / rho1
            dg[j] = 2.0 * k2 / (rho1 * rho1) * 2.0 * cD * fac
        else:
            hpsi = (hp - hm) / (2.0 * sD)
            rj = h[j] * math.cos(psi) - hpsi * math.sin(psi)
            r[j] = rj
            k2 = math.cos(psi) / rj
            dg[j] = k2 / (rho1 * rho1) * 2.0 * cD * fac
        v[j] = -k2 / rho1
    return v, rho, r, dg


def _curve_vertices(h, theta):
    """Corners of the polygon cut out by consecutive support lines."""
    hn = np.roll(h, -1)
    tn = np.roll(theta, -1)
    s = np.sin(tn - theta)
    x = (h * np.sin(tn) - hn * np.sin(theta)) / s
    y = (hn * np.cos(theta) - h * np.cos(tn)) / s
    return np.stack([x, y], -1)


@njit(cache=True)
def _burst(h, geo, axisym, symmetric, t, t_stop, dt_cap, c_stab, nmax, vol_floor, rho_floor):
    """Up to ``nmax`` explicit steps toward ``t_stop``.

    ``geo`` is the angle array (curves) or ``[dpsi]`` (axisymmetric).
    Status: 0 reached t_stop, 1 step budget used, 2 extinct, 3 radius lost,
    4 axis distance lost.  Returns (h, t, steps, status, node, dt_min, dt_max).
    """
    steps = 0
    dt_min = np.inf
    dt_max = 0.0
    N = h.size
    while True:
        if axisym:
            v, rho, aux, dg = _axisym_rates(h, geo[0])
        else:
            v, rho, aux, dg = _curve_rates(h, geo)
        for i in range(N):
            if not rho[i] > 0.0:
                return h, t, steps, 3, i, dt_min, dt_max
        if axisym:
            for i in range(1, N - 1):
                if not aux[i] > 0.0:
                    return h, t, steps, 4, i, dt_min, dt_max
        if t >= t_stop:
            return h, t, steps, 0, -1, dt_min, dt_max
        if axisym:
            f = aux * aux * rho * np.cos(-0.5 * np.pi + np.arange(N) * geo[0])
            vol = np.pi * geo[0] * (f.sum() - 0.5 * (f[0] + f[-1]))
        else:
            vol = 0.5 * np.dot(h, aux)
        if vol < vol_floor or rho.min() < rho_floor:
            return h, t, steps, 2, -1, dt_min, dt_max
        if steps >= nmax:
            return h, t, steps, 1, -1, dt_min, dt_max
        step = min(2.0 * c_stab / dg.max(), dt_cap)
        last = t + step >= t_stop
        if last:
            step = t_stop - t
        h = h + step * v
        if symmetric:
            h = 0.5 * (h + h[::-1])
        t = t_stop if last else t + step
        dt_min = min(dt_min, step)
        dt_max = max(dt_max, step)
        steps += 1


def open_support(h, theta, r, max_sweeps=None):
    """Support of the opening ``(K - B_r) + B_r`` of the support-line polygon.

    Corners of the body (support nodes with no edge) become circular arcs
    of radius ``r``; parts whose curvature radius is at least ``r`` are
    unchanged.  The erosion is the intersection of the half-planes
    ``x . nu_i <= h_i - r``; redundant constraints are lowered onto the
    vertex of their neighbours until every edge length is non-negative.
    """
    g = np.asarray(h, float) - r
    th = np.asarray(theta, float)
    dp = (np.roll(th, -1) - th) % TWO_PI
    dm = np.roll(dp, 1)
    wp, wm = 1.0 / np.sin(dp), 1.0 / np.sin(dm)
    den = np.cos(dp) * wp + np.cos(dm) * wm
    for _ in range(max_sweeps or 10 * len(g)):
        bound = (np.roll(g, -1) * wp + np.roll(g, 1) * wm) / den
        over = g > bound + 1e-15 * np.max(np.abs(g))
        if not over.any():
            break
        g = np.where(over, bound, g)
    return g + r


def _nearest_angle(theta, target):
    d = np.abs((theta - target + math.pi) % TWO_PI - math.pi)
    return int(np.argmin(d))


# ----------------------------------------------------------------------
# states

@dataclass
class CurveFlowState:
    """Planar convex curve by support samples ``h`` at normal angles ``theta``.

    ``theta`` defaults to the uniform periodic grid ``2 pi i / N``.  Graded
    grids (any increasing angles in ``[0, 2 pi)``) are accepted; they keep
    the stencil exact on circles.
    """

    h: np.ndarray
    t: float = 0.0
    theta: np.ndarray | None = None

    def __post_init__(self):
        self.h = np.asarray(self.h, float).copy()
        if self.theta is None:
            self.theta = uniform_angles(len(self.h))
        self.theta = np.asarray(self.theta, float)
        if self.theta.shape != self.h.shape:
            raise ValueError("h and theta must have the same length")
        if np.any(np.diff(self.theta) <= 0) or self.theta[0] < 0 or self.theta[-1] >= TWO_PI:
            raise ValueError("theta must increase within [0, 2 pi)")

    dim = 1

    @property
    def N(self) -> int:
        return len(self.h)

    @classmethod
    def circle(cls, R, N=256, center=(0.0, 0.0), t=0.0, theta=None):
        th = uniform_angles(N) if theta is None else np.asarray(theta, float)
        return cls(R + center[0] * np.cos(th) + center[1] * np.sin(th), t, th)

    @classmethod
    def ellipse(cls, a, b, N=256, t=0.0, theta=None):
        th = uniform_angles(N) if theta is None else np.asarray(theta, float)
        return cls(np.sqrt((a * np.cos(th)) ** 2 + (b * np.sin(th)) ** 2), t, th)

    @classmethod
    def from_domain(cls, domain: ConvexDomain, N=256, t=0.0, theta=None):
        th = uniform_angles(N) if theta is None else np.asarray(theta, float)
        return cls(domain.support(th), t, th)

    @classmethod
    def from_points(cls, P, N=256, t=0.0, theta=None, chunk=64):
        """Support function of the convex hull of a point cloud ``(m, 2)``."""
        th = uniform_angles(N) if theta is None else np.asarray(theta, float)
        P = np.asarray(P, float)
        h = np.empty(len(th))
        for i in range(0, len(th), chunk):
            nu = np.stack([np.cos(th[i:i + chunk]), np.sin(th[i:i + chunk])], 0)
            h[i:i + chunk] = (P @ nu).max(axis=0)
        return cls(h, t, th)

    def copy(self):
        return CurveFlowState(self.h.copy(), self.t, self.theta.copy())

    def rates(self):
        return _curve_rates(self.h, self.theta)

    def radii(self) -> np.ndarray:
        """Discrete curvature radii ``h_thth + h`` at the nodes."""
        return self.rates()[1]

    def volume(self) -> float:
        """Enclosed area (exact for the support-line polygon)."""
        _, _, ell, _ = self.rates()
        return 0.5 * float(np.dot(self.h, ell))

    def perimeter(self) -> float:
        return float(self.rates()[2].sum())

    def points(self) -> np.ndarray:
        return _curve_vertices(self.h, self.theta)

    def heights(self):
        """``(h_plus, h_minus)``: max and min of the vertical coordinate."""
        y = self.points()[:, 1]
        return float(y.max()), float(y.min())

    def tip_nodes(self):
        return _nearest_angle(self.theta, 0.5 * math.pi), _nearest_angle(self.theta, 1.5 * math.pi)

    def scale(self) -> float:
        return float(np.max(np.abs(self.h)))

    def reflected(self) -> "CurveFlowState":
        """Mirror image across the horizontal axis (needs a symmetric grid)."""
        idx = (-np.arange(self.N)) % self.N
        if not np.allclose((TWO_PI - self.theta[idx]) % TWO_PI, self.theta, atol=1e-12):
            raise ValueError("angle grid is not symmetric under reflection")
        return CurveFlowState(self.h[idx], self.t, self.theta.copy())

    def check(self):
        _, rho, ell, _ = self.rates()
        bad = np.nonzero(~(rho > 0))[0]
        if len(bad):
            raise CurvatureError(int(bad[0]), self.t)
        if not self.volume() > 0:
            raise CurvatureError(-1, self.t, "enclosed area")

    def export(self, out_dir, stem="curve", meta=None):
        return _export_snapshot(out_dir, stem, "theta", self.theta, self.h, self._meta(meta))

    def _meta(self, meta):
        hp, hm = self.heights()
        d = {"t": self.t, "N": self.N, "volume": self.volume(), "h_plus": hp, "h_minus": hm}
        d.update(meta or {})
        return d


@dataclass
class AxisymFlowState:
    """Rotationally symmetric convex surface by its profile support function.

    ``h[j]`` is the support value in the direction ``(cos psi_j, sin psi_j)``
    of the meridian half-plane, with ``psi_j`` uniform on ``[-pi/2, pi/2]``
    (both poles included).
    """

    h: np.ndarray
    t: float = 0.0
    symmetric: bool = False

    dim = 2

    def __post_init__(self):
        self.h = np.asarray(self.h, float).copy()
        if len(self.h) < 5:
            raise ValueError("need at least 5 profile nodes")

    @property
    def N(self) -> int:
        return len(self.h)

    @property
    def psi(self) -> np.ndarray:
        return np.linspace(-0.5 * math.pi, 0.5 * math.pi, self.N)

    @property
    def dpsi(self) -> float:
        return math.pi / (self.N - 1)

    @classmethod
    def sphere(cls, R, N=256, z0=0.0, t=0.0):
        psi = np.linspace(-0.5 * math.pi, 0.5 * math.pi, N)
        return cls(R + z0 * np.sin(psi), t, symmetric=(z0 == 0.0))

    @classmethod
    def from_profile(cls, r, z, N=256, t=0.0, symmetric=False, chunk=64):
        """Support function of the solid of revolution of points ``(r, z)``, r >= 0."""
        psi = np.linspace(-0.5 * math.pi, 0.5 * math.pi, N)
        P = np.stack([np.asarray(r, float), np.asarray(z, float)], -1)
        h = np.empty(N)
        for i in range(0, N, chunk):
            nu = np.stack([np.cos(psi[i:i + chunk]), np.sin(psi[i:i + chunk])], 0)
            h[i:i + chunk] = (P @ nu).max(axis=0)
        return cls(h, t, symmetric)

    def copy(self):
        return AxisymFlowState(self.h.copy(), self.t, self.symmetric)

    def rates(self):
        return _axisym_rates(self.h, self.dpsi)

    def radii(self):
        return self.rates()[1]

    def profile(self):
        """Meridian points ``(r, z)`` at every node."""
        _, _, r, _ = self.rates()
        psi = self.psi
        hp = np.empty_like(self.h)
        hp[1:-1] = (self.h[2:] - self.h[:-2]) / (2.0 * math.sin(self.dpsi))
        hp[[0, -1]] = 0.0
        z = self.h * np.sin(psi) + hp * np.cos(psi)
        return r, z

    def volume(self) -> float:
        """Enclosed volume ``pi * int r^2 dz`` with ``dz = rho cos(psi) dpsi``."""
        _, rho, r, _ = self.rates()
        f = r * r * rho * np.cos(self.psi)
        return float(math.pi * self.dpsi * (f.sum() - 0.5 * (f[0] + f[-1])))

    def heights(self):
        return float(self.h[-1]), float(-self.h[0])

    def tip_nodes(self):
        return self.N - 1, 0

    def scale(self) -> float:
        return float(np.max(np.abs(self.h)))

    def reflected(self) -> "AxisymFlowState":
        return AxisymFlowState(self.h[::-1].copy(), self.t, self.symmetric)

    def check(self):
        _, rho, r, _ = self.rates()
        bad = np.nonzero(~(rho > 0))[0]
        if len(bad):
            raise CurvatureError(int(bad[0]), self.t)
        bad = np.nonzero(~(r[1:-1] > 0))[0]
        if len(bad):
            raise CurvatureError(int(bad[0] + 1), self.t, "axis distance")

    def export(self, out_dir, stem="axisym", meta=None):
        hp, hm = self.heights()
        d = {"t": self.t, "N": self.N, "volume": self.volume(), "h_plus": hp, "h_minus": hm}
        d.update(meta or {})
        return _export_snapshot(out_dir, stem, "psi", self.psi, self.h, d)


@dataclass
class GraphFlowState:
    """Lower cap ``u(x, t)`` on a grid.

    ``mask`` marks nodes that carry values, ``free`` the nodes that evolve;
    the rest of ``mask`` is the Dirichlet ring.
    """

    u: np.ndarray
    grid: tuple
    h: float
    mask: np.ndarray
    free: np.ndarray
    t: float = 0.0
    domain: ConvexDomain | None = None
    op: GaussImage2D | None = None
    lid: float = float("nan")

    @property
    def dim(self) -> int:
        return len(self.grid)

    @classmethod
    def from_solution(cls, sol: TranslatorSolution, margin: float = 0.0, t=0.0):
        """Cap taken from a translator solve.

        ``margin`` (length) trims nodes closer than it to the wall, so the
        evolved sub-grid sits strictly inside the domain.
        """
        d = sol.distances()
        mask = sol.active & (d > margin)
        u = np.where(mask, sol.u, np.nan)
        if sol.dim == 1:
            idx = np.nonzero(mask)[0]
            free = mask.copy()
            free[[idx[0], idx[-1]]] = False
            op = None
        else:
            interior = sol.interior & mask
            from ._gauss_image import interior_of
            interior &= interior_of(mask)
            op = _operator(sol, interior=interior)
            free = interior
        return cls(u, sol.grid, sol.h, mask, free, t, sol.domain, op)

    def __post_init__(self):
        self.u = np.asarray(self.u, float).copy()
        if self.dim == 2 and self.op is None:
            self.op = GaussImage2D(self.mask, self.h, interior=self.free)
        if not np.isfinite(self.lid):
            self.lid = float(np.nanmax(self.u[self.mask]))

    def copy(self):
        return GraphFlowState(self.u.copy(), self.grid, self.h, self.mask, self.free, self.t,
                              self.domain, self.op, self.lid)

    def points(self, which=None):
        which = self.free if which is None else which
        if self.dim == 1:
            return self.grid[0][which][:, None]
        X, Y = np.meshgrid(*self.grid, indexing="ij")
        return np.stack([X[which], Y[which]], -1)

    def rates(self):
        """Vertical speed at free nodes and the explicit-step diagonal."""
        if self.dim == 1:
            idx = np.nonzero(self.mask)[0]
            uu = self.u[idx]
            v = np.zeros_like(self.u)
            v[idx[1:-1]] = arctan_flux(uu, self.h)
            p = np.diff(uu) / self.h
            w = 1.0 / (1.0 + p * p)
            dg = np.zeros_like(self.u)
            dg[idx[1:-1]] = (w[1:] + w[:-1]) / self.h ** 2
            return v[self.free], dg[self.free]
        uu = np.where(self.mask, self.u, 0.0)
        return self.op.areas(uu) / self.h ** 2, np.abs(self.op.diagonal(uu))

    def volume(self) -> float:
        """Volume between the graph and the fixed lid over the evolving nodes."""
        return float(np.sum(self.lid - self.u[self.free]) * self.h ** self.dim)

    def heights(self):
        return float("nan"), float(np.nanmin(self.u[self.free]))

    def tip_node(self):
        vals = np.where(self.free, self.u, np.inf)
        return np.unravel_index(int(np.argmin(vals)), vals.shape)

    def scale(self) -> float:
        return float(np.nanmax(np.abs(self.u[self.mask])))

    def check(self):
        uu = np.where(self.mask, self.u, 0.0)
        if self.dim == 1:
            idx = np.nonzero(self.mask)[0]
            _check_convex(self.u[idx], None, self.scale())
        else:
            _check_convex(uu, self.free, self.scale())


def uniform_angles(N):
    return TWO_PI * np.arange(N) / N


def graded_angles(N, a=0.9):
    """Angles ``phi - (a/2) sin 2phi``: dense near 0 and pi, sparse near the tips.

    ``N`` must be a multiple of 4 so that the vertical directions are nodes.
    """
    if N % 4:
        raise ValueError("graded grids need N divisible by 4")
    if not -1 < a < 1:
        raise ValueError("grading parameter must lie in (-1, 1)")
    phi = uniform_angles(N)
    return phi - 0.5 * a * np.sin(2 * phi)


# ----------------------------------------------------------------------
# reports

_REPORT_COLUMNS = ("t", "volume", "h_plus", "h_minus", "speed_plus", "speed_minus",
                   "harnack_residual", "eps_t")


@dataclass
class FlowReport:
    """Append-only time series of flow diagnostics.

    ``speed_plus``/``speed_minus`` are the magnitudes ``|d h+/dt|`` and
    ``|d h-/dt|`` at the tip nodes.
    """

    kind: str
    N: int
    c_stab: float = 0.25
    dt_cap: float | None = None
    rows: dict = field(default_factory=lambda: {k: [] for k in _REPORT_COLUMNS})
    dt_min: float = math.inf
    dt_max: float = 0.0
    steps: int = 0
    extinction_time: float | None = None
    extinct: bool = False
    dim: int = 1
    meta: dict = field(default_factory=dict)

    def append(self, t, volume, hp, hm, sp_, sm, harnack=float("nan"), eps_t=float("nan")):
        for k, v in zip(_REPORT_COLUMNS, (t, volume, hp, hm, sp_, sm, harnack, eps_t)):
            self.rows[k].append(float(v))

    def __len__(self):
        return len(self.rows["t"])

    def note_dt(self, lo, hi, n=1):
        self.dt_min = min(self.dt_min, float(lo))
        self.dt_max = max(self.dt_max, float(hi))
        self.steps += int(n)

    def column(self, name) -> np.ndarray:
        return np.asarray(self.rows[name], float)

    @property
    def t(self):
        return self.column("t")

    def volume_rates(self) -> np.ndarray:
        """Finite-difference ``dVol/dt`` between consecutive records."""
        return np.diff(self.column("volume")) / np.diff(self.t)

    def max_volume_law_error(self) -> float:
        """Worst relative deviation of the volume rate from ``-omega_n``."""
        if len(self) < 2:
            return float("nan")
        w = OMEGA_N[self.dim]
        return float(np.max(np.abs(self.volume_rates() + w)) / w)

    def summary(self) -> dict:
        hr = self.column("harnack_residual")
        return {
            "kind": self.kind,
            "N": self.N,
            "steps": self.steps,
            "records": len(self),
            "dt_min": self.dt_min if self.steps else None,
            "dt_max": self.dt_max if self.steps else None,
            "c_stab": self.c_stab,
            "t_final": float(self.t[-1]) if len(self) else None,
            "extinction_time": self.extinction_time,
            "max_violations": {
                "volume_law": self.max_volume_law_error() if self.kind != "graph" else None,
                "harnack": float(np.nanmax(hr)) if np.isfinite(hr).any() else None,
            },
            **self.meta,
        }

    def export(self, out_dir, stem="flow"):
        """CSV time series plus a JSON summary."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / f"{stem}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "vol", "h_plus", "h_minus", "speed_plus", "speed_minus",
                        "harnack_residual", "eps_t"])
            for i in range(len(self)):
                w.writerow([_fmt(self.rows[k][i]) for k in _REPORT_COLUMNS])
        with open(out / f"{stem}.json", "w") as fh:
            json.dump(_jsonable(self.summary()), fh, indent=2)
            fh.write("\n")
        return out / f"{stem}.csv", out / f"{stem}.json"


def _fmt(x):
    return "nan" if not np.isfinite(x) else f"{x:.12g}"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return None if not np.isfinite(obj) else float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _export_snapshot(out_dir, stem, name, ang, h, meta):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / f"{stem}.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([name, "h"])
        for a, v in zip(ang, h):
            w.writerow([f"{a:.15g}", f"{v:.15g}"])
    with open(out / f"{stem}.json", "w") as fh:
        json.dump(_jsonable(meta), fh, indent=2)
        fh.write("\n")
    return out / f"{stem}.csv", out / f"{stem}.json"


# ----------------------------------------------------------------------
# steppers

class _Stepper:
    """Explicit Euler on a compact support-function state."""

    def __init__(self, state, c_stab=0.25, scheme="explicit"):
        self.s = state
        self.c = c_stab
        self.scheme = scheme
        self.V0 = state.volume()
        self.scale0 = state.scale()
        self._cache = None
        if scheme not in ("explicit", "semi-implicit"):
            raise ValueError(f"unknown scheme {scheme!r}")
        if scheme == "semi-implicit" and not isinstance(state, CurveFlowState):
            raise ValueError("semi-implicit stepping is implemented for curves only")

    def rates(self):
        if self._cache is None:
            self._cache = self.s.rates()
        return self._cache

    def stable_dt(self):
        v, rho, _, dg = self.rates()
        lim = 2.0 * self.c / float(np.max(dg))
        if self.scheme == "semi-implicit":
            # accuracy, not stability: a node may lose at most 5% of its radius
            lim = 0.05 * float(np.min(rho / np.abs(v)))
        return lim

    def check(self):
        v, rho, x, _ = self.rates()
        t = self.s.t
        bad = np.nonzero(~(rho > 0))[0]
        if len(bad):
            raise CurvatureError(int(bad[0]), t)
        if isinstance(self.s, AxisymFlowState):
            bad = np.nonzero(~(x[1:-1] > 0))[0]
            if len(bad):
                raise CurvatureError(int(bad[0] + 1), t, "axis distance")

    def extinct(self):
        _, rho, _, _ = self.rates()
        return self.s.volume() < 1e-6 * self.V0 or float(np.min(rho)) < 1e-4 * self.scale0

    def advance(self, dt):
        v = self.rates()[0]
        if self.scheme == "semi-implicit":
            dh = self._implicit_increment(dt)
        else:
            dh = dt * v
        self.s.h = self.s.h + dh
        if getattr(self.s, "symmetric", False):
            self.s.h = 0.5 * (self.s.h + self.s.h[::-1])
        self.s.t = self.s.t + dt
        self._cache = None

    def _implicit_increment(self, dt):
        # linearly implicit Euler: (I - dt J) dh = dt v
        h, th = self.s.h, self.s.theta
        N = len(h)
        v, rho, ell, dg = self.rates()
        d_next = (np.roll(th, -1) - th) % TWO_PI
        d_prev = np.roll(d_next, 1)
        T = np.tan(0.5 * d_next) + np.tan(0.5 * d_prev)
        up = T / (ell ** 2 * np.sin(d_next))
        lo = T / (ell ** 2 * np.sin(d_prev))
        i = np.arange(N)
        J = sp.csr_matrix((np.concatenate([-dg, up, lo]),
                           (np.concatenate([i, i, i]), np.concatenate([i, (i + 1) % N, (i - 1) % N]))),
                          shape=(N, N))
        A = sp.identity(N, format="csc") - dt * J.tocsc()
        return spl.spsolve(A, dt * v)

    def record(self, rep):
        v = self.rates()[0]
        hp, hm = self.s.heights()
        ip, im = self.s.tip_nodes()
        rep.append(self.s.t, self.s.volume(), hp, hm, -v[ip], -v[im])


def _run_compact(state, t_end, dt, kind, c_stab=0.25, scheme="explicit", record_every=1,
                 record_times=None):
    """Shared driver for curve and axisymmetric flows."""
    st = _Stepper(state.copy(), c_stab, scheme)
    st.check()
    if not t_end >= st.s.t:
        raise ValueError("t_end precedes the state's time")
    rep = FlowReport(kind, st.s.N, c_stab, dt, dim=st.s.dim)
    rep.meta["scheme"] = scheme
    st.record(rep)
    stops = sorted(set(float(x) for x in (record_times or []) if st.s.t < x <= t_end))
    if not stops or stops[-1] != t_end:
        stops.append(float(t_end))
    snaps = {}
    axisym = isinstance(st.s, AxisymFlowState)
    geo = np.array([st.s.dpsi]) if axisym else st.s.theta
    sym = bool(getattr(st.s, "symmetric", False))
    cap = math.inf if dt is None else float(dt)
    floors = (1e-6 * st.V0, 1e-4 * st.scale0)
    wanted = set(stops[:-1]) if record_times is None else set(stops) & set(float(x) for x in record_times)
    for stop in stops:
        while st.s.t < stop:
            if scheme == "explicit":
                h, t, n, status, node, lo, hi = _burst(st.s.h, geo, axisym, sym, st.s.t, stop, cap, c_stab,
                                                      record_every, *floors)
                st.s.h, st.s.t = h, t
                st._cache = None
                if n:
                    rep.note_dt(lo, hi, n)
                if status in (3, 4):
                    raise CurvatureError(int(node), t, "curvature radius" if status == 3 else "axis distance")
            else:
                status = 1
                for _ in range(record_every):
                    if st.extinct():
                        status = 2
                        break
                    step = min(st.stable_dt(), cap, stop - st.s.t)
                    if st.s.t + step >= stop:
                        step = stop - st.s.t
                    st.advance(step)
                    if abs(stop - st.s.t) <= 1e-14 * max(1.0, abs(stop)):
                        st.s.t = stop
                    st.check()
                    rep.note_dt(step, step, 1)
                    if st.s.t >= stop:
                        status = 0
                        break
            if status == 2:
                rep.extinct = True
                rep.extinction_time = st.s.t + st.s.volume() / OMEGA_N[st.s.dim]
                st.record(rep)
                rep.meta["snapshots"] = sorted(snaps)
                return st.s, rep, snaps
            st.record(rep)
        if stop in wanted:
            snaps[stop] = st.s.copy()
    rep.meta["snapshots"] = sorted(snaps)
    return st.s, rep, snaps


def flow_curve(state: CurveFlowState, t_end: float, dt: float | None = None, *, c_stab=0.25,
               scheme="explicit", record_every=1, record_times=None):
    """Evolve a planar convex curve by curvature.

    Parameters
    ----------
    dt : float, optional
        Cap on the step; the step actually used is
        ``min(dt, 2 c_stab / max_i |dv_i/dh_i|)``, which on a uniform grid
        is ``c_stab * min(rho)^2 * dtheta^2``.
    scheme : {"explicit", "semi-implicit"}
    record_every : int
        Report stride in steps (the final state is always recorded).
    record_times : sequence of float, optional
        Times hit exactly and recorded; the states there are returned by
        :func:`snapshots`.

    Returns
    -------
    state, report
        ``report.extinction_time`` is set when the curve vanishes first.
    """
    s, rep, snaps = _run_compact(state, t_end, dt, "curve", c_stab, scheme, record_every, record_times)
    rep.meta["_snaps"] = snaps
    return s, rep


def flow_axisym(state: AxisymFlowState, t_end: float, dt: float | None = None, *, c_stab=0.25,
                record_every=1, record_times=None):
    """Evolve an axisymmetric convex surface by Gauss curvature."""
    s, rep, snaps = _run_compact(state, t_end, dt, "axisym", c_stab, "explicit", record_every, record_times)
    rep.meta["_snaps"] = snaps
    return s, rep


def snapshots(report: FlowReport) -> dict:
    """States captured at ``record_times``, keyed by time."""
    return report.meta.get("_snaps", {})


# ----------------------------------------------------------------------
def flow_graph(u0, domain: ConvexDomain | None = None, t_end: float = 1.0, dt: float | None = None, *,
               c_stab=0.25, boundary=None, margin=0.0, record_every=1, check_every=None, bump=None):
    """Evolve a lower graphical cap by ``u_t = det D^2u / (1+|Du|^2)^{(n+1)/2}``.

    Parameters
    ----------
    u0 : TranslatorSolution or GraphFlowState
    boundary : None, float or callable
        Dirichlet ring treatment: ``None`` freezes it, a float moves it
        rigidly at that vertical speed, a callable ``f(t, points)`` gives
        values directly.
    bump : callable, optional
        Added to the initial heights: ``u0 + bump(points)`` on all carrying nodes.
    """
    if isinstance(u0, TranslatorSolution):
        st = GraphFlowState.from_solution(u0, margin)
    elif isinstance(u0, GraphFlowState):
        st = u0.copy()
    else:
        raise TypeError("u0 must be a TranslatorSolution or GraphFlowState")
    if domain is not None and st.domain is None:
        st.domain = domain
    if bump is not None:
        pts = st.points(st.mask)
        st.u[st.mask] = st.u[st.mask] + bump(pts)
        st.lid = float(np.nanmax(st.u[st.mask]))
    st.check()
    t0 = st.t
    ring = st.mask & ~st.free
    ring_pts = st.points(ring)
    ring0 = st.u[ring].copy()
    rep = FlowReport("graph", int(st.mask.sum()), c_stab, dt, dim=st.dim)
    check_every = max(1, record_every) if check_every is None else check_every

    def record(v):
        tip = st.tip_node()
        idx = np.flatnonzero(st.free.ravel() == 1)
        pos = int(np.searchsorted(idx, np.ravel_multi_index(tip, st.u.shape)))
        rep.append(st.t, st.volume(), *st.heights(), float("nan"), float(v[pos]))

    v, dg = st.rates()
    record(v)
    k = 0
    while st.t < t_end - 1e-15 * max(1.0, abs(t_end)):
        step = 2.0 * c_stab / float(np.max(dg))
        if dt is not None:
            step = min(step, dt)
        step = min(step, t_end - st.t)
        st.u[st.free] = st.u[st.free] + step * v
        st.t += step
        if boundary is None:
            pass
        elif callable(boundary):
            st.u[ring] = boundary(st.t, ring_pts)
        else:
            st.u[ring] = ring0 + float(boundary) * (st.t - t0)
        rep.note_dt(step, step, 1)
        k += 1
        if rep.steps % check_every == 0:
            st.check()
        v, dg = st.rates()
        if k >= record_every or st.t >= t_end - 1e-15 * max(1.0, abs(t_end)):
            record(v)
            k = 0
    st.check()
    return st, rep


# ----------------------------------------------------------------------
def harnack_residual(report: FlowReport, window=None, *, t0=None, series="both"):
    """Worst negative part of the scalar Harnack expression over a window.

    The tip heights give ``g(t) = -h_plus(t)`` and ``g(t) = h_minus(t)``;
    both increase while the body shrinks (or the cap rises) and ``g_t`` is
    the tip speed.  With ``t0`` (start time of a flow begun from smooth
    data) the expression is ``g_tt + n/(n+1) g_t/(t - t0)``; without it the
    ancient form ``g_tt`` is used.  Derivatives are centered differences on
    the recorded times.

    Returns
    -------
    float
        ``max(0, -min(expression))`` over interior records in the window.
    """
    t = report.t
    if len(t) < 3:
        raise ValueError("Harnack residual needs at least 3 recorded times")
    cols = []
    if series in ("both", "plus"):
        hp = report.column("h_plus")
        if np.isfinite(hp).all():
            cols.append(-hp)
    if series in ("both", "minus"):
        cols.append(report.column("h_minus"))
    n = report.dim
    worst = 0.0
    res = np.full(len(t), np.nan)
    for g in cols:
        t0_, t1, t2 = t[:-2], t[1:-1], t[2:]
        g0, g1, g2 = g[:-2], g[1:-1], g[2:]
        a, b = t1 - t0_, t2 - t1
        gt = (g2 - g0) / (a + b)
        gtt = 2.0 * (b * (g0 - g1) + a * (g2 - g1)) / (a * b * (a + b))
        expr = gtt if t0 is None else gtt + n / (n + 1.0) * gt / (t1 - t0)
        m = np.ones(len(t1), bool)
        if window is not None:
            m = (t1 >= window[0]) & (t1 <= window[1])
        if m.any():
            worst = max(worst, float(np.max(np.maximum(-expr[m], 0.0))))
        r = res[1:-1]
        r[:] = np.fmax(r, np.where(m, np.maximum(-expr, 0.0), np.nan))
    report.rows["harnack_residual"] = list(res)
    return worst


def harnack_ratio_violation(report: FlowReport, t0: float, window=None, series="both"):
    """Worst violation of ``g_t(t2) >= ((t1 - t0)/(t2 - t0))^{n/(n+1)} g_t(t1)``.

    Uses the recorded tip speeds, so no time differencing enters; returns
    ``max(0, max over t1 < t2 of (ratio_bound * g_t(t1) - g_t(t2)))``.
    """
    t = report.t - t0
    n = report.dim
    q = n / (n + 1.0)
    m = t > 0
    if window is not None:
        m &= (report.t >= window[0]) & (report.t <= window[1])
    names = {"both": ("speed_plus", "speed_minus"), "plus": ("speed_plus",), "minus": ("speed_minus",)}[series]
    worst = 0.0
    for name in names:
        s = report.column(name)[m]
        if not np.isfinite(s).all():
            continue
        tt = t[m]
        # bound(t2) = max_{t1 <= t2} s(t1) t1^q / t2^q; running max is exact
        scaled = np.maximum.accumulate(s * tt ** q)
        worst = max(worst, float(np.max(scaled / tt ** q - s)))
    return max(worst, 0.0)


# ----------------------------------------------------------------------
@dataclass
class ContainmentResult:
    held: bool
    first_violation: dict | None
    min_gap: float
    t_final: float
    inner_extinct: bool
    steps: int
    inner: object
    outer: object
    inner_report: FlowReport
    outer_report: FlowReport


def _gap(inner, outer):
    """``min(outer - inner)`` in the ordering sense, with the node index."""
    if isinstance(inner, GraphFlowState):
        m = inner.mask & outer.mask
        g = np.where(m, inner.u - outer.u, np.inf)   # inner cap lies above
    else:
        g = outer.h - inner.h
    k = int(np.argmin(g))
    return float(np.ravel(g)[k]), np.unravel_index(k, np.shape(g))


def containment_check(inner, outer, t_end: float, dt: float | None = None, *, c_stab=0.25,
                      tol_rel=1e-8, record_every=1):
    """Flow two bodies with a shared step and test that the order persists.

    Support-function states must share their angle grids; ``inner`` is
    contained when ``h_in <= h_out``.  For graphical caps the inner body
    is the one whose cap lies higher, ``u_in >= u_out``.

    Raises
    ------
    ValueError
        If the bodies are not ordered at the start.
    """
    if type(inner) is not type(outer):
        raise TypeError("inner and outer must use the same representation")
    graph = isinstance(inner, GraphFlowState)
    if not graph:
        if inner.N != outer.N or (isinstance(inner, CurveFlowState)
                                  and not np.array_equal(inner.theta, outer.theta)):
            raise ValueError("support grids differ")
    scale = (outer.scale() if not graph else max(1.0, outer.scale()))
    tol = tol_rel * scale
    g0, node = _gap(inner, outer)
    if g0 < -tol:
        raise ValueError(f"initial containment fails at node {node} (gap {g0:.3e})")
    if graph:
        return _graph_order(inner, outer, t_end, dt, c_stab, tol, record_every)
    kind = "curve" if isinstance(inner, CurveFlowState) else "axisym"
    a = _Stepper(inner.copy(), c_stab)
    b = _Stepper(outer.copy(), c_stab)
    ra = FlowReport(kind, inner.N, c_stab, dt, dim=inner.dim)
    rb = FlowReport(kind, outer.N, c_stab, dt, dim=outer.dim)
    a.record(ra)
    b.record(rb)
    first = None
    worst = g0
    steps = 0
    k = 0
    while a.s.t < t_end:
        if a.extinct():
            ra.extinct = True
            ra.extinction_time = a.s.t + a.s.volume() / OMEGA_N[a.s.dim]
            break
        step = min(a.stable_dt(), b.stable_dt())
        if dt is not None:
            step = min(step, dt)
        step = min(step, t_end - a.s.t)
        a.advance(step)
        b.advance(step)
        a.check()
        b.check()
        steps += 1
        ra.note_dt(step, step, 1)
        rb.note_dt(step, step, 1)
        g, node = _gap(a.s, b.s)
        worst = min(worst, g)
        if g < -tol and first is None:
            first = {"t": a.s.t, "node": [int(i) for i in node], "gap": g}
        k += 1
        if k >= record_every:
            a.record(ra)
            b.record(rb)
            k = 0
    if ra.t[-1] != a.s.t:
        a.record(ra)
        b.record(rb)
    return ContainmentResult(first is None, first, worst, a.s.t, ra.extinct, steps, a.s, b.s, ra, rb)


def _graph_order(inner, outer, t_end, dt, c_stab, tol, record_every):
    a, b = inner.copy(), outer.copy()
    first = None
    worst, _ = _gap(a, b)
    steps = 0
    while a.t < t_end - 1e-15 * max(1.0, abs(t_end)):
        va, da = a.rates()
        vb, db = b.rates()
        step = 2.0 * c_stab / max(float(np.max(da)), float(np.max(db)))
        if dt is not None:
            step = min(step, dt)
        step = min(step, t_end - a.t)
        a.u[a.free] += step * va
        b.u[b.free] += step * vb
        a.t += step
        b.t += step
        steps += 1
        g, node = _gap(a, b)
        worst = min(worst, g)
        if g < -tol and first is None:
            first = {"t": a.t, "node": [int(i) for i in node], "gap": g}
    ra = FlowReport("graph", int(a.mask.sum()), c_stab, dt, dim=a.dim)
    rb = FlowReport("graph", int(b.mask.sum()), c_stab, dt, dim=b.dim)
    return ContainmentResult(first is None, first, worst, a.t, False, steps, a, b, ra, rb)


# ----------------------------------------------------------------------
def cross_section(state, level: float = 0.0):
    """Horizontal slice of a compact body at height ``level``.

    Returns ``(lo, hi)`` for curves and the slice radius for axisymmetric
    bodies.  The slice is that of the intersection of the support
    half-planes, so it is exact for the discrete body.
    """
    c = float(level)
    if isinstance(state, CurveFlowState):
        cs, sn = np.cos(state.theta), np.sin(state.theta)
        b = state.h - c * sn
        pos, neg = cs > 1e-14, cs < -1e-14
        flat = ~(pos | neg)
        if np.any(b[flat] < 0):
            raise DomainError(f"empty cross-section at height {c}")
        hi = float(np.min(b[pos] / cs[pos]))
        lo = float(np.max(b[neg] / cs[neg]))
        if not hi > lo:
            raise DomainError(f"empty cross-section at height {c}")
        return lo, hi
    if isinstance(state, AxisymFlowState):
        psi = state.psi
        cs, sn = np.cos(psi), np.sin(psi)
        b = state.h - c * sn
        if b[0] < 0 or b[-1] < 0:
            raise DomainError(f"empty cross-section at height {c}")
        r = float(np.min(b[1:-1] / cs[1:-1]))
        if not r > 0:
            raise DomainError(f"empty cross-section at height {c}")
        return r
    raise TypeError("cross sections need a curve or axisymmetric state")


def _contains_scaled(domain, section, s, m=2048):
    if domain.dim == 1:
        lo, hi = section
        return s * domain.params["a"] >= lo and s * domain.params["b"] <= hi
    th = uniform_angles(m)
    return bool(np.all(s * domain.support(th) <= section(th)))


def measure_eps_t(state, domain: ConvexDomain, level: float = 0.0, tol: float = 1e-13) -> float:
    """``inf {eps > 0 : (1+eps)^{-1/n} Omega  inside  Omega_t}`` by bisection.

    ``state`` is a compact flow state (its slice at ``level`` is taken)
    or a :class:`ConvexDomain` standing for the slice itself.  Scaling is
    about the origin.
    """
    n = domain.dim
    if isinstance(state, ConvexDomain):
        if state.dim != n:
            raise ValueError("dimension mismatch")
        section = (state.params["a"], state.params["b"]) if n == 1 else state.support
    else:
        sec = cross_section(state, level)
        if n == 1:
            section = sec
        else:
            if isinstance(state, AxisymFlowState):
                section = (lambda th, r=sec: np.full(np.shape(th), r))
            else:
                raise TypeError("planar domains need an axisymmetric state")
    if _contains_scaled(domain, section, 1.0):
        return 0.0
    lo, hi = 0.0, 1.0
    if not _contains_scaled(domain, section, 1e-12):
        raise DomainError("cross-section does not contain the origin")
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if _contains_scaled(domain, section, mid):
            lo = mid
        else:
            hi = mid
    return float(lo ** (-n) - 1.0)


def hausdorff(a, b) -> float:
    """Hausdorff distance of two convex bodies on a common support grid."""
    ha = a.h if hasattr(a, "h") else np.asarray(a, float)
    hb = b.h if hasattr(b, "h") else np.asarray(b, float)
    return float(np.max(np.abs(ha - hb)))
