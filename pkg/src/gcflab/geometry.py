"""Convex cross-section domains, boundary distance and the cut-off bump.

Domains are immutable.  Interval domains live in one dimension, the others
(disk, convex polygon, radial support samples) in the plane.  Everything a
solver needs is exposed vectorized: ``distance`` works on arrays of points
and returns the distance to the boundary together with the nearest normal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

OMEGA_N = {1: 2.0 * math.pi, 2: 4.0 * math.pi}   # |S^n|


class DomainError(ValueError):
    """Invalid domain specification or point outside a domain."""


@dataclass(frozen=True)
class BoundaryInfo:
    """Result of :func:`boundary_distance` for a single point."""

    d: float
    nearest: np.ndarray
    curvatures: tuple | None      # None when the nearest point is a corner
    corner: bool = False


@dataclass(frozen=True, eq=False)
class ConvexDomain:
    """Bounded convex domain in R^1 or R^2.

    Parameters are validated by :func:`make_domain`; construct through it.

    Attributes
    ----------
    kind : str
        ``interval``, ``disk``, ``polygon`` or ``radial``.
    dim : int
    measure : float
        Length or area.
    r0, R0 : float
        Radii with ``B_r0(center) c Omega c B_R0(center)``.
    lambda0 : float
        Largest boundary curvature; 0 for intervals and polygons.
    """

    kind: str
    dim: int
    center: np.ndarray
    measure: float
    r0: float
    R0: float
    lambda0: float
    params: dict = field(default_factory=dict)

    # ------------------------------------------------------------------
    @property
    def bounds(self):
        """Axis-aligned bounding box as ``(lo, hi)`` arrays."""
        if self.kind == "interval":
            return np.array([self.params["a"]]), np.array([self.params["b"]])
        if self.kind == "disk":
            R = self.params["R"]
            return self.center - R, self.center + R
        pts = self.boundary_points(2048)
        return pts.min(axis=0), pts.max(axis=0)

    @property
    def diameter(self) -> float:
        if self.kind == "interval":
            return self.measure
        if self.kind == "disk":
            return 2.0 * self.params["R"]
        if self.kind == "polygon":
            v = self.params["vertices"]
            return float(np.max(np.linalg.norm(v[:, None] - v[None], axis=-1)))
        # width in direction theta is h(theta) + h(theta + pi)
        th, h = self._dense_support()
        m = len(h) // 2
        return float(np.max(h + np.roll(h, m)))

    def support(self, theta) -> np.ndarray:
        """Support function h(theta) = max <x, (cos, sin)> (dim 2 only)."""
        if self.dim != 2:
            raise DomainError("support function is defined for planar domains")
        theta = np.asarray(theta, float)
        c = self.center
        base = c[0] * np.cos(theta) + c[1] * np.sin(theta)
        if self.kind == "disk":
            return base + self.params["R"]
        if self.kind == "polygon":
            v = self.params["vertices"]
            nu = np.stack([np.cos(theta), np.sin(theta)], -1)
            return (nu @ v.T).max(axis=-1)
        coef = self.params["fourier"]
        m = np.arange(len(coef))
        # real Fourier series of the support samples about the center
        val = (np.exp(1j * np.multiply.outer(theta, m)) @ coef).real
        return base + val

    def _dense_support(self, m=4096):
        th = 2.0 * np.pi * np.arange(m) / m
        return th, self.support(th)

    def boundary_points(self, m=512) -> np.ndarray:
        """Points on the boundary (``(m, 2)``), or the two endpoints in 1-D."""
        if self.kind == "interval":
            return np.array([[self.params["a"]], [self.params["b"]]])
        if self.kind == "disk":
            th = 2.0 * np.pi * np.arange(m) / m
            return self.center + self.params["R"] * np.stack([np.cos(th), np.sin(th)], -1)
        if self.kind == "polygon":
            v = self.params["vertices"]
            k = max(1, m // len(v))
            s = np.arange(k) / k
            nxt = np.roll(v, -1, axis=0)
            pts = v[:, None, :] + s[None, :, None] * (nxt - v)[:, None, :]
            return pts.reshape(-1, 2)
        th = 2.0 * np.pi * np.arange(m) / m
        h, hp = self._radial_h(th)
        nu = np.stack([np.cos(th), np.sin(th)], -1)
        tau = np.stack([-np.sin(th), np.cos(th)], -1)
        return self.center + h[:, None] * nu + hp[:, None] * tau

    def _radial_h(self, th, deriv=1):
        coef = self.params["fourier"]
        m = np.arange(len(coef))
        e = np.exp(1j * np.multiply.outer(th, m)) * coef
        h = e.sum(-1).real
        if deriv == 1:
            return h, (e * (1j * m)).sum(-1).real
        return h, (e * (1j * m)).sum(-1).real, (e * (-(m * m))).sum(-1).real

    def contains(self, x, strict=True) -> np.ndarray:
        d = self.signed_distance(x)
        return d > 0 if strict else d >= 0

    def signed_distance(self, x) -> np.ndarray:
        """Distance to the boundary, negative outside (exact for interior points)."""
        x = np.asarray(x, float)
        if self.kind == "interval":
            a, b = self.params["a"], self.params["b"]
            x = x[..., 0] if x.ndim and x.shape[-1:] == (1,) else x
            return np.minimum(x - a, b - x)
        if self.kind == "disk":
            return self.params["R"] - np.linalg.norm(x - self.center, axis=-1)
        d, _ = self._support_distance(x)
        return d

    def _support_distance(self, x, m=None):
        """min over normals of h(nu) - <x, nu>: the boundary distance for x inside."""
        pts = np.asarray(x, float).reshape(-1, 2)
        if self.kind == "polygon":
            v = self.params["vertices"]
            e = np.roll(v, -1, axis=0) - v
            nrm = np.stack([e[:, 1], -e[:, 0]], -1) / np.linalg.norm(e, axis=1)[:, None]
            hv = (nrm * v).sum(-1)
            gap = hv[None, :] - pts @ nrm.T
            k = gap.argmin(axis=1)
            ang = np.arctan2(nrm[k, 1], nrm[k, 0])
            return gap[np.arange(len(pts)), k].reshape(np.shape(x)[:-1]), ang.reshape(np.shape(x)[:-1])
        m = m or 2048
        th = 2.0 * np.pi * np.arange(m) / m
        h = self.support(th)
        nu = np.stack([np.cos(th), np.sin(th)], 0)
        out = np.empty(len(pts))
        ang = np.empty(len(pts))
        step = max(1, 2_000_000 // m)
        for i0 in range(0, len(pts), step):
            g = h[None, :] - pts[i0:i0 + step] @ nu
            k = g.argmin(axis=1)
            r = np.arange(len(k))
            gm, g0, gp = g[r, k - 1], g[r, k], g[r, (k + 1) % m]
            den = gm - 2 * g0 + gp
            off = np.where(den > 0, 0.5 * (gm - gp) / np.where(den > 0, den, 1.0), 0.0)
            out[i0:i0 + step] = g0 - 0.25 * (gm - gp) * off
            ang[i0:i0 + step] = th[k] + off * (2 * np.pi / m)
        shp = np.shape(x)[:-1]
        return out.reshape(shp), ang.reshape(shp)

    def distance(self, x):
        """Vectorized boundary distance and outward normal of the nearest point.

        Returns
        -------
        d : ndarray
        normal : ndarray of shape ``x.shape``
        curvature : ndarray, boundary curvature at the nearest point
            (``nan`` at polygon corners; 0 in one dimension).
        """
        x = np.asarray(x, float)
        if self.kind == "interval":
            xx = x[..., 0] if x.shape[-1:] == (1,) else x
            a, b = self.params["a"], self.params["b"]
            d = np.minimum(xx - a, b - xx)
            nrm = np.where(xx - a < b - xx, -1.0, 1.0)
            return d, nrm[..., None], np.zeros_like(d)
        if self.kind == "disk":
            rel = x - self.center
            r = np.linalg.norm(rel, axis=-1)
            safe = np.where(r > 0, r, 1.0)[..., None]
            nrm = np.where(r[..., None] > 0, rel / safe, np.array([1.0, 0.0]))
            return self.params["R"] - r, nrm, np.full(r.shape, 1.0 / self.params["R"])
        d, ang = self._support_distance(x)
        nrm = np.stack([np.cos(ang), np.sin(ang)], -1)
        if self.kind == "polygon":
            near = x + d[..., None] * nrm
            kap = np.where(self._at_corner(near), np.nan, 0.0)
            return d, nrm, kap
        h, hp, hpp = self._radial_h(np.ravel(ang), deriv=2)
        kap = (1.0 / (h + hpp)).reshape(d.shape)
        return d, nrm, kap

    def _at_corner(self, pts, tol=1e-12):
        v = self.params["vertices"]
        dist = np.linalg.norm(np.asarray(pts)[..., None, :] - v, axis=-1)
        return dist.min(axis=-1) <= tol * max(1.0, self.R0)

    def scaled(self, c: float) -> "ConvexDomain":
        """The dilate ``c * Omega`` about the origin."""
        if c <= 0:
            raise DomainError("scale factor must be positive")
        if self.kind == "interval":
            return make_domain({"kind": "interval", "a": c * self.params["a"], "b": c * self.params["b"]})
        if self.kind == "disk":
            return make_domain({"kind": "disk", "center": c * self.center, "R": c * self.params["R"]})
        if self.kind == "polygon":
            return make_domain({"kind": "polygon", "vertices": c * self.params["vertices"]})
        th = 2.0 * np.pi * np.arange(self.params["m"]) / self.params["m"]
        h = self.support(th) - (self.center[0] * np.cos(th) + self.center[1] * np.sin(th))
        return make_domain({"kind": "radial", "support": c * h, "center": c * self.center})

    def __repr__(self):
        return (f"ConvexDomain({self.kind}, dim={self.dim}, |Omega|={self.measure:.6g}, "
                f"r0={self.r0:.6g}, R0={self.R0:.6g})")


# ----------------------------------------------------------------------
def _parse_string_spec(spec: str) -> dict:
    kind, _, rest = spec.partition(":")
    kind = kind.strip().lower()
    if kind == "interval":
        a, b = (float(v) for v in rest.split(","))
        return {"kind": "interval", "a": a, "b": b}
    if kind == "disk":
        vals = [float(v) for v in rest.split(",")]
        if len(vals) == 1:
            return {"kind": "disk", "R": vals[0]}
        return {"kind": "disk", "center": vals[:2], "R": vals[2]}
    if kind == "square":
        s = float(rest)
        return {"kind": "polygon", "vertices": [[-s / 2, -s / 2], [s / 2, -s / 2], [s / 2, s / 2], [-s / 2, s / 2]]}
    if kind == "polygon":
        verts = [[float(c) for c in p.split(",")] for p in rest.split(";") if p.strip()]
        return {"kind": "polygon", "vertices": verts}
    if kind == "ellipse":
        a, b = (float(v) for v in rest.split(","))
        return {"kind": "ellipse", "a": a, "b": b}
    raise DomainError(f"unknown domain kind {kind!r}")


def make_domain(spec) -> ConvexDomain:
    """Build a validated :class:`ConvexDomain`.

    ``spec`` is a dict with a ``kind`` key or a compact string such as
    ``"interval:-1.5,1.5"``, ``"disk:1"``, ``"disk:cx,cy,R"``,
    ``"square:2"``, ``"polygon:x,y;x,y;..."`` or ``"ellipse:a,b"``.
    """
    if isinstance(spec, str):
        spec = _parse_string_spec(spec)
    spec = dict(spec)
    kind = spec.get("kind")
    if kind == "interval":
        a, b = float(spec["a"]), float(spec["b"])
        if not b > a:
            raise DomainError("interval needs b > a")
        half = 0.5 * (b - a)
        return ConvexDomain("interval", 1, np.array([0.5 * (a + b)]), b - a, half, half, 0.0,
                            {"a": a, "b": b})
    if kind == "disk":
        R = float(spec["R"])
        if not R > 0:
            raise DomainError("disk radius must be positive")
        c = np.asarray(spec.get("center", (0.0, 0.0)), float)
        return ConvexDomain("disk", 2, c, math.pi * R * R, R, R, 1.0 / R, {"R": R})
    if kind == "polygon":
        return _make_polygon(np.asarray(spec["vertices"], float))
    if kind == "ellipse":
        a, b = float(spec["a"]), float(spec["b"])
        if not (a > 0 and b > 0):
            raise DomainError("ellipse semi-axes must be positive")
        m = int(spec.get("m", 256))
        th = 2.0 * np.pi * np.arange(m) / m
        h = np.sqrt((a * np.cos(th)) ** 2 + (b * np.sin(th)) ** 2)
        return make_domain({"kind": "radial", "support": h, "center": spec.get("center", (0.0, 0.0))})
    if kind == "radial":
        return _make_radial(np.asarray(spec["support"], float), np.asarray(spec.get("center", (0.0, 0.0)), float))
    raise DomainError(f"unknown domain kind {kind!r}")


def _make_polygon(v: np.ndarray) -> ConvexDomain:
    if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
        raise DomainError("polygon needs at least 3 planar vertices")
    e = np.roll(v, -1, axis=0) - v
    cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
    bad = np.nonzero(cross < 0)[0]
    if len(bad):
        raise DomainError(f"polygon is not convex counterclockwise at vertex {(bad[0] + 1) % len(v)}")
    x, y = v[:, 0], v[:, 1]
    area = 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))
    if not area > 0:
        raise DomainError("polygon has zero measure")
    cx = float(np.sum((x + np.roll(x, -1)) * (x * np.roll(y, -1) - np.roll(x, -1) * y))) / (6 * area)
    cy = float(np.sum((y + np.roll(y, -1)) * (x * np.roll(y, -1) - np.roll(x, -1) * y))) / (6 * area)
    c = np.array([cx, cy])
    nrm = np.stack([e[:, 1], -e[:, 0]], -1) / np.linalg.norm(e, axis=1)[:, None]
    r0 = float(np.min(((v - c) * nrm).sum(-1)))
    R0 = float(np.max(np.linalg.norm(v - c, axis=1)))
    return ConvexDomain("polygon", 2, c, area, r0, R0, 0.0, {"vertices": v.copy()})


def _make_radial(h: np.ndarray, c: np.ndarray) -> ConvexDomain:
    m = len(h)
    if m < 256:
        raise DomainError("radial domains need at least 256 support samples")
    if np.any(h <= 0):
        raise DomainError("center must lie strictly inside a radial domain")
    coef = np.fft.rfft(h) / m
    coef[1:] *= 2.0
    if m % 2 == 0:
        coef[-1] /= 2.0
    dom = ConvexDomain("radial", 2, c, 1.0, 1.0, 1.0, 0.0, {"fourier": coef, "m": m})
    th = 2.0 * np.pi * np.arange(4 * m) / (4 * m)
    hh, hp, hpp = dom._radial_h(th, deriv=2)
    rho = hh + hpp
    if np.any(rho <= 0):
        k = int(np.argmin(rho)) // 4
        raise DomainError(f"support samples are not strictly convex near sample {k}")
    # area = 1/2 int h (h + h'') dtheta, spectrally exact on the samples
    area = float(0.5 * np.mean(hh * rho) * 2 * np.pi)
    pts = np.stack([hh * np.cos(th) - hp * np.sin(th), hh * np.sin(th) + hp * np.cos(th)], -1)
    object.__setattr__(dom, "measure", area)
    object.__setattr__(dom, "r0", float(hh.min()))
    object.__setattr__(dom, "R0", float(np.linalg.norm(pts, axis=1).max()))
    object.__setattr__(dom, "lambda0", float(1.0 / rho.min()))
    return dom


def soliton_speed(domain: ConvexDomain) -> float:
    """Speed of the translator asymptotic to ``domain x R``: omega_n / (2 |Omega|)."""
    return OMEGA_N[domain.dim] / (2.0 * domain.measure)


def boundary_distance(domain: ConvexDomain, x) -> BoundaryInfo:
    """Distance from an interior point to the boundary, with the nearest point.

    Curvatures are the principal curvatures of the boundary at the nearest
    point: an empty tuple in one dimension, ``(kappa,)`` in the plane and
    ``None`` when the nearest point is a polygon corner.
    """
    x = np.atleast_1d(np.asarray(x, float))
    if x.shape != (domain.dim,):
        raise DomainError(f"expected a point in R^{domain.dim}")
    if not domain.signed_distance(x[None] if domain.dim == 2 else x)[()] > 0:
        raise DomainError("point is not inside the domain")
    d, nrm, kap = domain.distance(x[None])
    d, nrm, kap = float(d[0]), nrm[0], float(kap[0])
    nearest = x + d * nrm
    if domain.dim == 1:
        return BoundaryInfo(d, nearest, ())
    if domain.kind == "polygon":
        corner = bool(domain._at_corner(nearest[None], tol=1e-9)[0])
        return BoundaryInfo(d, nearest, None if corner else (0.0,), corner)
    return BoundaryInfo(d, nearest, (kap,))


# ----------------------------------------------------------------------
def _bump(r2):
    out = np.zeros_like(r2)
    m = r2 < 1.0
    out[m] = np.exp(-1.0 / (1.0 - r2[m]))
    return out


@dataclass(frozen=True)
class Mollifier:
    """Radial bump c*exp(-1/(1-|x|^2)) on the unit ball with unit integral."""

    dim: int
    c: float = field(init=False)

    def __post_init__(self):
        if self.dim == 1:
            val, _ = integrate.quad(lambda t: math.exp(-1.0 / (1.0 - t * t)), -1, 1,
                                    epsabs=1e-15, epsrel=1e-13, limit=200)
        elif self.dim == 2:
            val, _ = integrate.quad(lambda r: 2 * math.pi * r * math.exp(-1.0 / (1.0 - r * r)), 0, 1,
                                    epsabs=1e-15, epsrel=1e-13, limit=200)
        else:
            raise DomainError("mollifier supports dim 1 and 2")
        object.__setattr__(self, "c", 1.0 / val)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        r2 = x * x if self.dim == 1 else (x * x).sum(-1)
        return self.c * _bump(np.asarray(r2, float))

    def integral(self) -> float:
        """Quadrature check of the normalization."""
        if self.dim == 1:
            return integrate.quad(lambda t: float(self(t)), -1, 1, epsabs=1e-15, epsrel=1e-13, limit=200)[0]
        return integrate.quad(lambda r: 2 * math.pi * r * float(self(np.array([r, 0.0]))), 0, 1,
                              epsabs=1e-15, epsrel=1e-13, limit=200)[0]

    def scaled(self, x, eps: float) -> np.ndarray:
        """Unit-mass rescaling eps^{-n} eta(x/eps)."""
        return eps ** (-self.dim) * self(np.asarray(x, float) / eps)


def mollifier_value(eta: Mollifier, x, eps: float):
    """eps^{1+n} * eta(x / eps); zero for |x| >= eps."""
    if not eps > 0:
        raise DomainError("eps must be positive")
    return eps ** (1 + eta.dim) * eta(np.asarray(x, float) / eps)
