"""Translating solitons of Gauss curvature flow.

The translator over a convex domain solves

    det D^2 u = beta (1 + |Du|^2)^{(n+1)/2},   u -> +inf at the boundary,

with beta equal to the soliton speed.  The discretization here is the
conservative Gauss-image form: the spherical area of every cell's
gradient image equals ``beta * h^n``.  In one dimension this reduces to a
scalar equation for the slope at the left wall, in two dimensions it is
solved by damped Newton on a cell-centered grid with Dirichlet log-ramp
data on the outermost ring of active nodes.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse.linalg as spl
from scipy import integrate, optimize
from scipy.interpolate import PchipInterpolator, RegularGridInterpolator

from ._gauss_image import GaussImage2D, arctan_flux, interior_of, pole_triangle_area
from .geometry import OMEGA_N, ConvexDomain, DomainError, Mollifier, soliton_speed


class ConvergenceError(RuntimeError):
    """Newton (or shooting) iteration did not reach the requested tolerance."""

    def __init__(self, msg, last_residual=float("nan")):
        super().__init__(f"{msg} (last residual {last_residual:.3e})")
        self.last_residual = last_residual


class ConvexityError(RuntimeError):
    """A produced height field is not discretely convex."""

    def __init__(self, node, value):
        super().__init__(f"discrete convexity lost at node {node} (second difference {value:.3e})")
        self.node = node
        self.value = value


# ----------------------------------------------------------------------
@dataclass
class TranslatorSolution:
    """Discrete translator on a cell-centered grid.

    Attributes
    ----------
    grid : tuple of ndarray
        Node coordinates per axis.
    u : ndarray
        Heights, ``nan`` at nodes outside the active set; ``min u = 0``.
    active, interior : ndarray of bool
        Nodes carrying values / nodes where the equation is imposed.
    beta : float
        Speed used on the right-hand side (the soliton speed).
    residual : float
        Max relative defect ``|W/h^n - rhs| / rhs`` over interior nodes.
    gradient_range : ndarray, shape (n, 2)
        Bounding box of centered-difference gradients on interior nodes.
    """

    domain: ConvexDomain
    grid: tuple
    h: float
    u: np.ndarray
    active: np.ndarray
    interior: np.ndarray
    beta: float
    residual: float
    gradient_range: np.ndarray
    resolution: int
    rhs: np.ndarray | None = None
    V: float = float("nan")
    iterations: int = 0
    info: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.domain.dim

    def points(self, mask=None):
        mask = self.active if mask is None else mask
        if self.dim == 1:
            return self.grid[0][mask][:, None]
        X, Y = np.meshgrid(*self.grid, indexing="ij")
        return np.stack([X[mask], Y[mask]], -1)

    def distances(self):
        if self.dim == 1:
            return self.domain.signed_distance(self.grid[0])
        X, Y = np.meshgrid(*self.grid, indexing="ij")
        return self.domain.signed_distance(np.stack([X, Y], -1))

    # -- continuous evaluation ------------------------------------------
    def evaluate(self, x):
        """Heights at arbitrary interior points.

        Inside the node hull the grid data is interpolated (monotone cubic in
        1-D, bilinear in 2-D); closer to the wall a log tail ``A + B ln d``
        fitted along the boundary normal is used.
        """
        x = np.asarray(x, float)
        if self.dim == 1:
            return self._evaluate_1d(x[..., 0] if x.shape[-1:] == (1,) else x)
        return self._evaluate_2d(x)

    def _evaluate_1d(self, x):
        xs, u = self.grid[0], self.u
        a, b = self.domain.params["a"], self.domain.params["b"]
        if np.any((x <= a) | (x >= b)):
            raise DomainError("evaluation point outside the domain")
        f = PchipInterpolator(xs, u, extrapolate=False)
        out = np.asarray(f(np.clip(x, xs[0], xs[-1])))
        h = self.h
        # log tail past the end nodes, matched to the last slope
        for side, x0, u0, p in ((-1, xs[0], u[0], (u[1] - u[0]) / h), (1, xs[-1], u[-1], (u[-1] - u[-2]) / h)):
            d0 = x0 - a if side < 0 else b - x0
            c = abs(p) * (d0 + 0.5 * h)
            m = (x < x0) if side < 0 else (x > x0)
            d = (x[m] - a) if side < 0 else (b - x[m])
            out[m] = u0 + c * np.log(d0 / d)
        return out

    def _interp_2d(self):
        fill = np.where(self.active, self.u, np.nan)
        return RegularGridInterpolator(self.grid, fill, bounds_error=False, fill_value=np.nan)

    def _tail_fit(self, y, nrm, delta):
        f = self._interp_2d()
        u1 = f(y - delta * nrm)
        u2 = f(y - 2 * delta * nrm)
        B = (u2 - u1) / math.log(2.0)
        A = u1 - B * math.log(delta)
        return A, B

    def _evaluate_2d(self, x):
        pts = x.reshape(-1, 2)
        d, nrm, _ = self.domain.distance(pts)
        if np.any(d <= 0):
            raise DomainError("evaluation point outside the domain")
        delta = (self.info.get("ring_offset", 0.0) + 3.0) * self.h
        out = self._interp_2d()(pts)
        tail = (d < delta) | np.isnan(out)
        if np.any(tail):
            y = pts[tail] + d[tail, None] * nrm[tail]
            A, B = self._tail_fit(y, nrm[tail], delta)
            out[tail] = A + B * np.log(d[tail])
        return out.reshape(x.shape[:-1])

    # -- export ---------------------------------------------------------
    def summary(self) -> dict:
        return {"beta": float(self.beta), "V": float(self.V), "residual": float(self.residual),
                "resolution": int(self.resolution)}

    def export(self, out_dir, stem="translator"):
        """Write ``<stem>.csv`` (node coordinates, u) and ``<stem>.json``."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        pts = self.points()
        vals = self.u[self.active]
        with open(out / f"{stem}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "u"] if self.dim == 1 else ["x", "y", "u"])
            for p, v in zip(pts, vals):
                w.writerow([f"{c:.12g}" for c in p] + [f"{v:.12g}"])
        with open(out / f"{stem}.json", "w") as fh:
            json.dump(self.summary(), fh, indent=2)
            fh.write("\n")
        return out / f"{stem}.csv", out / f"{stem}.json"


# ----------------------------------------------------------------------
def _node_axes(domain, N):
    if domain.dim == 1:
        a, b = domain.params["a"], domain.params["b"]
        h = (b - a) / N
        return (a + (np.arange(N) + 0.5) * h,), h
    lo, hi = domain.bounds
    side = float(np.max(hi - lo))
    mid = 0.5 * (lo + hi)
    h = side / N
    ax = [mid[k] - 0.5 * side + (np.arange(N) + 0.5) * h for k in range(2)]
    return tuple(ax), h


def _ramp_coefficient(domain, beta, kappa):
    """Leading log coefficient kappa^{n-1}/beta of the translator at the wall."""
    if domain.dim == 1:
        return np.full(np.shape(kappa), 1.0 / beta)
    k = np.where(np.isfinite(kappa) & (kappa > 0), kappa, 1.0 / domain.R0)
    return k / beta


def _operator(sol, interior=None):
    """Gauss-image operator matching the one a 2-D solution was solved with."""
    op = GaussImage2D(sol.active, sol.h, interior=interior)
    if sol.info.get("fit", True):
        X, Y = np.meshgrid(*sol.grid, indexing="ij")
        d, _, kappa = sol.domain.distance(np.stack([X[op.I, op.J], Y[op.I, op.J]], -1))
        op.fit = _ramp_coefficient(sol.domain, sol.beta, kappa)
    return op


def _check_convex(u, mask, scale):
    tol = -1e-9 * max(1.0, scale)
    if u.ndim == 1:
        dd = u[2:] - 2 * u[1:-1] + u[:-2]
        bad = np.nonzero(dd < tol)[0]
        if len(bad):
            raise ConvexityError(int(bad[0] + 1), float(dd[bad[0]]))
        return
    for di, dj in ((1, 0), (0, 1), (1, 1), (1, -1)):
        up = np.roll(np.roll(u, -di, 0), -dj, 1)
        dn = np.roll(np.roll(u, di, 0), dj, 1)
        dd = np.where(mask, up + dn - 2 * u, 0.0)
        bad = np.argwhere(dd < tol)
        if len(bad):
            i, j = bad[0]
            raise ConvexityError((int(i), int(j)), float(dd[i, j]))


def _solve_1d(domain, N, beta, rhs_fn, tol):
    (xs,), h = _node_axes(domain, N)
    d = np.minimum(xs - domain.params["a"], domain.params["b"] - xs)
    rhs = np.full(N, beta) if rhs_fn is None else rhs_fn(xs[:, None])
    c = 1.0 / beta
    uL, uR = -c * math.log(d[0]), -c * math.log(d[-1])
    # W_i = beta_i h fixes every slope angle up to the one at the left wall:
    # arctan p_{j+1/2} = theta0 + h * sum_{k<=j} rhs_k, j = 0..N-2
    cum = np.concatenate([[0.0], np.cumsum(rhs[1:-1] * h)])
    span = cum[-1]
    if not span < math.pi:
        raise ConvergenceError("right-hand side exceeds the total Gauss-image mass", span - math.pi)

    def mismatch(theta0):
        return h * np.tan(theta0 + cum).sum() - (uR - uL)

    eps = 1e-14
    lo, hi = -0.5 * math.pi + eps, 0.5 * math.pi - span - eps
    theta0 = optimize.brentq(mismatch, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    slopes = np.tan(theta0 + cum)
    u = uL + np.concatenate([[0.0], np.cumsum(slopes * h)])
    F = arctan_flux(u, h) - rhs[1:-1]
    res = float(np.max(np.abs(F) / rhs[1:-1]))
    if not res <= max(tol, 1e-11):
        raise ConvergenceError("1-D translator defect above tolerance", res)
    u -= u.min()
    _check_convex(u, None, float(u.max()))
    interior = np.ones(N, bool)
    interior[[0, -1]] = False
    g = (u[2:] - u[:-2]) / (2 * h)
    return TranslatorSolution(domain, (xs,), h, u, np.ones(N, bool), interior, beta, res,
                              np.array([[g.min(), g.max()]]), N, rhs=rhs, iterations=1,
                              info={"ring_offset": 0.0, "theta0": theta0})


def _initial_guess(domain, X, Y, d, active, beta, kappa, coarse=None):
    c = _ramp_coefficient(domain, beta, kappa)
    u = np.where(active, -c * np.log(np.maximum(d, 1e-300)), 0.0)
    if coarse is not None:
        f = coarse._interp_2d()
        val = f(np.stack([X[active], Y[active]], -1)) + coarse.info.get("shift", 0.0)
        ok = np.isfinite(val)
        tmp = u[active]
        tmp[ok] = val[ok]
        u[active] = tmp
    return u


def _solve_2d(domain, N, beta, rhs_fn, tol, ring_offset, ring_scale, max_iter, u_init, verbose, fit=True):
    (xa, ya), h = _node_axes(domain, N)
    X, Y = np.meshgrid(xa, ya, indexing="ij")
    P = np.stack([X, Y], -1)
    d, _, kappa = domain.distance(P)
    active = d > max(ring_offset, 1e-6) * h
    op = GaussImage2D(active, h)
    if fit:
        op.fit = _ramp_coefficient(domain, beta, kappa)[op.I, op.J]
    if op.n == 0:
        raise DomainError("resolution too coarse: no interior nodes")
    ring = active & ~op.interior
    rhs_full = np.full(d.shape, beta) if rhs_fn is None else rhs_fn(P)
    rhs = rhs_full[op.I, op.J]

    u = _initial_guess(domain, X, Y, d, active, beta, kappa, u_init)
    c = _ramp_coefficient(domain, beta, kappa)
    u[ring] = -ring_scale * c[ring] * np.log(d[ring])
    u[~active] = 0.0

    res = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        F, Jm = op.residual_jacobian(u, rhs)
        res = float(np.max(np.abs(F) / rhs))
        if verbose:
            print(f"  N={N} newton {it}: residual {res:.3e}")
        if res < tol:
            break
        du = spl.spsolve(Jm.tocsc(), -F, permc_spec="MMD_AT_PLUS_A")
        step = 1.0
        while True:
            un = u.copy()
            un[op.I, op.J] += step * du
            Fn = op.residual(un, rhs)
            rn = float(np.max(np.abs(Fn) / rhs))
            if np.isfinite(rn) and rn < (1 - 1e-4 * step) * res:
                break
            step *= 0.5
            if step < 1e-10:
                raise ConvergenceError(f"line search stalled at N={N}", res)
        u = un
    else:
        F = op.residual(u, rhs)
        res = float(np.max(np.abs(F) / rhs))
        if not res < tol:
            raise ConvergenceError(f"Newton did not converge at N={N}", res)
    shift = float(u[active].min())
    u = u - shift
    _check_convex(u, op.interior, float(u[active].max()))
    um = np.where(active, u, np.nan)
    gx = (np.roll(u, -1, 0) - np.roll(u, 1, 0)) / (2 * h)
    gy = (np.roll(u, -1, 1) - np.roll(u, 1, 1)) / (2 * h)
    m = op.interior
    gr = np.array([[gx[m].min(), gx[m].max()], [gy[m].min(), gy[m].max()]])
    return TranslatorSolution(domain, (xa, ya), h, um, active, op.interior, beta, res, gr, N,
                              rhs=np.where(active, rhs_full, np.nan), iterations=it,
                              info={"ring_offset": ring_offset, "ring_scale": ring_scale, "shift": shift,
                                    "fit": bool(fit)})


def solve_translator(domain: ConvexDomain, resolution: int = 128, tol: float = 1e-10, *,
                     beta=None, rhs=None, ring_offset: float = 0.0, ring_scale: float = 1.0,
                     max_iter: int = 40, initial=None, with_volume: bool = True,
                     fit: bool = True, verbose: bool = False) -> TranslatorSolution:
    """Solve the translator equation on ``domain``.

    Parameters
    ----------
    resolution : int
        Nodes per axis (>= 32).
    tol : float
        Bound on the relative Monge-Ampere defect at interior nodes.
    beta : float, optional
        Speed; defaults to :func:`soliton_speed`.
    rhs : callable, optional
        ``rhs(points) -> beta_i`` overriding the constant right-hand side.
    ring_offset : float
        2-D only.  Nodes closer than ``ring_offset * h`` to the wall are
        dropped; the outermost remaining ring carries Dirichlet data.
    ring_scale : float
        Multiplier of the log ramp on the ring (insensitivity studies).
    initial : TranslatorSolution, optional
        2-D only: interior starting values interpolated from another solve.
        The log-distance guess is usually the safer start; an interpolated
        start can lead Newton to a folded (non-convex) root, which the
        convexity check then rejects.
    fit : bool
        2-D only.  Exponentially fitted gradients (exact on log ramps).
        Plain differences are kept for comparison.

    Notes
    -----
    The 2-D scheme is not monotone.  On domains whose boundary curvature
    radius spans only a few cells (ellipse tips, polygon corners) it can
    produce odd-even oscillations; these surface as ``ConvexityError`` or
    ``ConvergenceError`` rather than as a silently wrong field.
    """
    if resolution < 32:
        raise ValueError("resolution must be at least 32")
    beta = soliton_speed(domain) if beta is None else float(beta)
    if domain.dim == 1:
        sol = _solve_1d(domain, int(resolution), beta, rhs, tol)
    else:
        sol = _solve_2d(domain, int(resolution), beta, rhs, tol, ring_offset, ring_scale,
                        max_iter, initial, verbose, fit=fit)
    if with_volume:
        sol.V = volume_under(sol).V
    return sol


def ring_sensitivity(domain, resolution, tol=1e-10, core=0.9, **kw):
    """Max core change when the boundary ramp is doubled."""
    a = solve_translator(domain, resolution, tol, with_volume=False, **kw)
    b = solve_translator(domain, resolution, tol, ring_scale=2.0, with_volume=False, **kw)
    dist = a.distances()
    m = a.active & (dist >= (1 - core) * domain.r0)
    return float(np.nanmax(np.abs(a.u - b.u)[m]))


# ----------------------------------------------------------------------
def exact_grim_reaper(a: float, x):
    """Speed-pi/(2a) translator of width 2a: -(1/lam) ln cos(lam x)."""
    x = np.asarray(x, float)
    if np.any(np.abs(x) >= a):
        raise DomainError("grim reaper evaluated outside (-a, a)")
    lam = math.pi / (2 * a)
    return -np.log(np.cos(lam * x)) / lam


@dataclass
class RadialProfile:
    """Radial translator over a disk: heights u(r) and slopes u'(r)."""

    R: float
    beta: float
    r: np.ndarray
    u: np.ndarray
    p: np.ndarray
    blowup_radius: float

    def __call__(self, r):
        r = np.abs(np.asarray(r, float))
        if np.any(r >= self.R):
            raise DomainError("radial profile evaluated outside the disk")
        out = np.asarray(PchipInterpolator(self.r, self.u, extrapolate=False)(np.minimum(r, self.r[-1])))
        m = r > self.r[-1]
        if np.any(m):
            d0 = self.R - self.r[-1]
            c = self.p[-1] * d0
            out[m] = self.u[-1] + c * np.log(d0 / (self.R - r[m]))
        return out

    def volume(self) -> float:
        """2 pi int_0^R u r dr, with the log tail integrated in closed form."""
        body = integrate.simpson(self.u * self.r, x=self.r)
        d0 = self.R - self.r[-1]
        c = self.p[-1] * d0
        # int_0^d0 (u0 + c ln(d0/t)) (R - t) dt
        u0 = self.u[-1]
        tail = (u0 + c) * self.R * d0 - (u0 + 0.5 * c) * 0.5 * d0 * d0
        return 2 * math.pi * (body + tail)

    def to_solution(self, resolution: int, center=(0.0, 0.0)) -> TranslatorSolution:
        """Sample the profile on the 2-D cell-centered grid (every inside node)."""
        from .geometry import make_domain
        dom = make_domain({"kind": "disk", "R": self.R, "center": center})
        (xa, ya), h = _node_axes(dom, resolution)
        X, Y = np.meshgrid(xa, ya, indexing="ij")
        r = np.hypot(X - center[0], Y - center[1])
        active = r < self.R
        u = np.full(r.shape, np.nan)
        u[active] = self(r[active])
        u -= np.nanmin(u)
        op = GaussImage2D(active, h)
        op.fit = 1.0 / (self.R * self.beta)
        uz = np.where(active, u, 0.0)
        W = op.areas(uz) / h ** 2
        dist = self.R - r[op.I, op.J]
        deep = dist >= 2 * h
        res = float(np.max(np.abs(W[deep] - self.beta) / self.beta))
        gx = (np.roll(uz, -1, 0) - np.roll(uz, 1, 0)) / (2 * h)
        gy = (np.roll(uz, -1, 1) - np.roll(uz, 1, 1)) / (2 * h)
        m = op.interior
        gr = np.array([[gx[m].min(), gx[m].max()], [gy[m].min(), gy[m].max()]])
        sol = TranslatorSolution(dom, (xa, ya), h, u, active, op.interior, self.beta, res, gr,
                                 resolution, info={"ring_offset": 0.0, "source": "radial profile"})
        sol.V = self.volume()
        return sol


def radial_translator_ode(R: float, samples: int = 2000, rtol: float = 1e-12) -> RadialProfile:
    """Shoot for the speed of the radial translator over the disk of radius R.

    With u' = tan(a) the radial equation u'' u'/r = beta (1+u'^2)^{3/2}
    becomes ``dr/da = sin(a) / (beta r)``.  For a trial beta the profile is
    integrated from the tip (a ~ sqrt(beta) r) to the blow-up a = pi/2; beta
    is adjusted until the blow-up radius equals R.
    """
    if not R > 0:
        raise DomainError("radius must be positive")
    a0 = 1e-6

    def blowup(beta, tol):
        r0 = a0 / math.sqrt(beta)
        sol = integrate.solve_ivp(lambda a, r: np.sin(a) / (beta * r), (a0, 0.5 * math.pi), [r0],
                                  rtol=tol, atol=tol * R, method="DOP853")
        return float(sol.y[0, -1])

    for tol in (rtol, rtol * 1e-2):
        beta = optimize.brentq(lambda b: blowup(b, tol) - R, 0.5 / R ** 2, 8.0 / R ** 2,
                               xtol=1e-15, rtol=1e-14)
        rstar = blowup(beta, tol)
        if abs(rstar - R) <= 5e-3 * R:
            break
    else:
        raise ConvergenceError("shooting missed the disk radius", abs(rstar - R) / R)

    # profile on an angle grid clustered toward the wall; u from du/da
    a_end = 0.5 * math.pi - 1e-6
    s = np.linspace(0.0, 1.0, samples)
    agrid = a0 + (a_end - a0) * np.sin(0.5 * math.pi * s)
    r0 = a0 / math.sqrt(beta)

    def rhs(a, y):
        r = y[0]
        dr = math.sin(a) / (beta * r)
        return [dr, math.tan(a) * dr]

    sol = integrate.solve_ivp(rhs, (a0, a_end), [r0, 0.5 * math.sqrt(beta) * r0 * r0],
                              t_eval=agrid, rtol=rtol, atol=1e-14, method="DOP853")
    rr = np.concatenate([[0.0], sol.y[0]])
    uu = np.concatenate([[0.0], sol.y[1]])
    pp = np.concatenate([[0.0], np.tan(agrid)])
    uu -= uu[0]
    return RadialProfile(R, beta, rr, uu, pp, rstar)


# ----------------------------------------------------------------------
@dataclass
class VolumeEstimate:
    V: float
    error: float = float("nan")
    V_coarse: float = float("nan")


def _volume_1d(sol):
    xs, u, h = sol.grid[0], sol.u, sol.h
    N = len(xs)
    k = 2
    core = h * u[k:N - k].sum()
    band = 0.0
    for i1, i2 in ((k, k + 1), (N - 1 - k, N - 2 - k)):
        # nodes at distance (k+1/2)h and (k+3/2)h from the wall
        d1, d2 = (k + 0.5) * h, (k + 1.5) * h
        B = (u[i2] - u[i1]) / math.log(d2 / d1)
        A = u[i1] - B * math.log(d1)
        dl = k * h
        band += A * dl + B * (dl * math.log(dl) - dl)
    return core + band


def _boundary_samples(domain, m):
    """Boundary points, outward normals, arclength weights and curvature."""
    if domain.kind == "polygon":
        v = domain.params["vertices"]
        e = np.roll(v, -1, axis=0) - v
        L = np.linalg.norm(e, axis=1)
        per = L.sum()
        ys, ns, ws = [], [], []
        for k in range(len(v)):
            cnt = max(4, int(round(m * L[k] / per)))
            s = (np.arange(cnt) + 0.5) / cnt
            ys.append(v[k] + s[:, None] * e[k])
            nrm = np.array([e[k, 1], -e[k, 0]]) / L[k]
            ns.append(np.tile(nrm, (cnt, 1)))
            ws.append(np.full(cnt, L[k] / cnt))
        y = np.concatenate(ys)
        return y, np.concatenate(ns), np.concatenate(ws), np.zeros(len(y))
    th = 2 * math.pi * np.arange(m) / m
    nrm = np.stack([np.cos(th), np.sin(th)], -1)
    if domain.kind == "disk":
        R = domain.params["R"]
        return domain.center + R * nrm, nrm, np.full(m, R * 2 * math.pi / m), np.full(m, 1.0 / R)
    h, hp, hpp = domain._radial_h(th, deriv=2)
    tau = np.stack([-np.sin(th), np.cos(th)], -1)
    y = domain.center + h[:, None] * nrm + hp[:, None] * tau
    rho = h + hpp
    return y, nrm, rho * 2 * math.pi / m, 1.0 / rho


def _log_band_integral(A, B, kappa, delta):
    """int_0^delta (A + B ln t)(1 - kappa t) dt."""
    i0 = A * delta + B * (delta * math.log(delta) - delta)
    i1 = A * delta ** 2 / 2 + B * (0.5 * delta ** 2 * math.log(delta) - 0.25 * delta ** 2)
    return i0 - kappa * i1


def _volume_2d(sol):
    h = sol.h
    delta = (sol.info.get("ring_offset", 0.0) + 3.0) * h
    X, Y = np.meshgrid(*sol.grid, indexing="ij")
    d, nrm, _ = sol.domain.distance(np.stack([X, Y], -1))
    act = sol.active
    slope = h * (np.abs(nrm[..., 0]) + np.abs(nrm[..., 1]))
    frac = np.clip(0.5 + (d - delta) / slope, 0.0, 1.0)
    core = h * h * float(np.sum(np.where(act, sol.u, 0.0) * frac))
    y, n, w, kap = _boundary_samples(sol.domain, 8 * sol.resolution)
    A, B = sol._tail_fit(y, n, delta)
    band = float(np.sum(w * _log_band_integral(A, B, kap, delta)))
    return core + band


def volume_under(sol: TranslatorSolution, richardson: bool = False) -> VolumeEstimate:
    """Volume between the translator graph and its domain.

    Cells away from the wall use the midpoint rule; the band of width
    ``delta`` (a few cells) at the wall is integrated from a log fit
    ``A + B ln d`` along each boundary normal.  With ``richardson=True`` the
    same problem is re-solved at half resolution and ``|V_h - V_2h|`` is
    reported as the error estimate.
    """
    V = _volume_1d(sol) if sol.dim == 1 else _volume_2d(sol)
    if not richardson:
        return VolumeEstimate(V)
    if sol.info.get("source") == "radial profile":
        raise ValueError("Richardson estimate needs a grid solve")
    coarse = _resolve_like(sol, sol.resolution // 2)
    Vc = _volume_1d(coarse) if sol.dim == 1 else _volume_2d(coarse)
    return VolumeEstimate(V, abs(V - Vc), Vc)


def _resolve_like(sol, N):
    kw = dict(sol.info.get("solve_kw", {}))
    kw.setdefault("ring_offset", sol.info.get("ring_offset", 0.0))
    if sol.rhs is not None and "rhs_fn" in sol.info:
        kw["rhs"] = sol.info["rhs_fn"]
    return solve_translator(sol.domain, max(32, N), beta=sol.beta, with_volume=False, **kw)


# ----------------------------------------------------------------------
@dataclass
class BarrierReport:
    """Pointwise supersolution margin of the log-distance barrier."""

    delta: float
    k: float
    M: float
    min_margin: float
    samples: int
    band_integral: float
    min_gap: float | None = None    # min (phi - u) over grid nodes in the band
    dominated: bool | None = None

    @property
    def passed(self):
        return self.min_margin > 0 and self.dominated is not False


def _barrier_terms(d, kappa, k, n):
    """det D^2 phi and |D phi| for phi = -k log d + const."""
    grad = k / d
    if n == 1:
        det = k / d ** 2
    else:
        det = (k / d ** 2) * (k * kappa / (d * (1.0 - kappa * d)))
    return det, grad


def log_barrier_check(domain: ConvexDomain, delta: float, samples: int = 64,
                      translator: TranslatorSolution | None = None, tol: float = 1e-9) -> BarrierReport:
    """Check that phi = -((4 lam0)^{n-1}/lam) log(d/diam) + M is a supersolution.

    The margin ``lam - det D^2 phi / (1+|D phi|^2)^{(n+1)/2}`` is evaluated at
    ``samples`` boundary positions times ``samples`` depths in ``(0, delta)``.
    With a translator, M is chosen so that phi >= u on the inner edge
    ``d = delta`` and the domination phi >= u is then checked at every grid
    node of the band.
    """
    if domain.kind == "polygon":
        raise DomainError("barrier check needs a smooth boundary (polygon corners have no curvature)")
    n = domain.dim
    lam = soliton_speed(domain)
    lam0 = domain.lambda0
    if n == 2 and not (lam0 > 0 and delta < 1.0 / (4 * lam0)):
        raise DomainError("band width must satisfy delta < 1/(4 lambda0)")
    k = (4 * lam0) ** (n - 1) / lam
    D = domain.diameter
    depth = delta * np.geomspace(1e-6, 1.0, samples, endpoint=False)
    if n == 1:
        a, b = domain.params["a"], domain.params["b"]
        pts = np.concatenate([a + depth, b - depth])[:, None]
        y = np.array([[a], [b]])
        nrm = np.array([[-1.0], [1.0]])
        w = np.ones(2)
        kb = np.zeros(2)
    else:
        y, nrm, w, kb = _boundary_samples(domain, samples)
        pts = (y[:, None, :] - depth[None, :, None] * nrm[:, None, :]).reshape(-1, 2)
    d, _, kap = domain.distance(pts)
    det, grad = _barrier_terms(d, kap, k, n)
    margin = lam - det / (1.0 + grad ** 2) ** (0.5 * (n + 1))

    M = 0.0
    gap = dominated = None
    if translator is not None:
        edge = y - delta * nrm
        u_edge = translator.evaluate(edge)
        phi0_edge = -k * np.log(delta / D)
        M = float(np.max(u_edge - phi0_edge))
        dist = translator.distances()
        band = translator.active & (dist < delta)
        if np.any(band):
            phi = -k * np.log(dist[band] / D) + M
            gap = float(np.min(phi - translator.u[band]))
            dominated = gap >= -tol
    # int over band of phi, boundary-normal coordinates
    A, B = M + k * math.log(D), -k
    bi = float(sum(wi * _log_band_integral(A, B, ki, delta) for wi, ki in zip(w, kb)))
    return BarrierReport(delta, k, M, float(margin.min()), len(d), bi, gap, dominated)


# ----------------------------------------------------------------------
def perturbed_rhs(domain, eps, eta: Mollifier | None = None):
    """Forcing lam (1 + A eta(x/eps)) with A balancing the Gauss-image mass.

    On ``(1+eps)^{-1/n} Omega`` the total weighted image must stay
    ``omega_n / 2``; this fixes ``A eps^n = |Omega| eps / (1+eps)``.
    """
    n = domain.dim
    lam = soliton_speed(domain)
    eta = eta or Mollifier(n)
    amp = domain.measure * eps / (1.0 + eps) * eps ** (-n)

    def rhs(points):
        p = np.asarray(points, float)
        x = p[..., 0] if n == 1 else p
        return lam * (1.0 + amp * eta(np.asarray(x) / eps))

    return rhs, amp


def solve_perturbed_translator(domain: ConvexDomain, eps: float, resolution: int = 256,
                               tol: float = 1e-10, **kw) -> TranslatorSolution:
    """Translator of speed lam(Omega) on the shrunk domain with a central bump."""
    eps0 = min(0.5 * domain.r0, 1.0)
    if not 0 < eps < eps0:
        raise DomainError(f"eps must lie in (0, {eps0:.6g})")
    n = domain.dim
    small = domain.scaled((1.0 + eps) ** (-1.0 / n))
    rhs, amp = perturbed_rhs(domain, eps)
    sol = solve_translator(small, resolution, tol, beta=soliton_speed(domain), rhs=rhs, **kw)
    sol.info.update({"eps": eps, "amplitude": amp, "rhs_fn": rhs, "parent_measure": domain.measure})
    return sol


# ----------------------------------------------------------------------
@dataclass
class GaussMapGap:
    P: float
    gap: float
    covered: float
    speed_integral: float
    beta_est: float


def _ball_measure(n, P):
    return 2 * P if n == 1 else math.pi * P * P


def _weighted_ball(n, P):
    if n == 1:
        return 2 * math.atan(P)
    return 2 * math.pi * (1 - 1 / math.sqrt(1 + P * P))


def gauss_map_gap(sol: TranslatorSolution, P: float = math.inf, mask=None) -> GaussMapGap:
    """Uncovered part of the gradient ball B_P and the weighted image.

    ``gap`` is the Lebesgue measure of ``B_P \\ Du(Omega)``; the speed
    integral is ``int_{Du(Omega) & B_P} (1+|p|^2)^{-(n+1)/2} dp`` and
    ``beta_est`` is that integral over ``|Omega|``.  ``mask`` restricts the
    cells taken into account (for truncated solutions).
    """
    n = sol.dim
    if n == 1:
        u = sol.u
        sel = sol.active if mask is None else (sol.active & mask)
        idx = np.nonzero(sel)[0]
        if len(idx) < 2:
            raise ValueError("need at least two nodes")
        uu = u[idx[0]:idx[-1] + 1]
        p = np.diff(uu) / sol.h
        lo, hi = max(p.min(), -P), min(p.max(), P)
        covered = max(0.0, hi - lo)
        speed = max(0.0, math.atan(hi) - math.atan(lo)) if hi > lo else 0.0
    else:
        op = _operator(sol, None if mask is None else interior_of(sol.active & mask))
        uz = np.where(sol.active, sol.u, 0.0)
        G = op.vertex_gradients(uz)
        E = pole_triangle_area(G, np.roll(G, -1, axis=1)).sum(axis=1)
        A = op.euclidean_areas(uz)
        inside = (np.linalg.norm(G, axis=-1) <= P).mean(axis=1)   # corner-inclusion weight
        covered = float(np.sum(A * inside))
        speed = float(np.sum(E * inside))
    ball = _ball_measure(n, P) if math.isfinite(P) else math.inf
    gap = max(0.0, ball - covered) if math.isfinite(ball) else math.inf
    return GaussMapGap(P, gap, covered, speed, speed / sol.domain.measure)


__all__ = [
    "TranslatorSolution", "RadialProfile", "VolumeEstimate", "BarrierReport", "GaussMapGap",
    "ConvergenceError", "ConvexityError", "solve_translator", "exact_grim_reaper",
    "radial_translator_ode", "volume_under", "log_barrier_check", "solve_perturbed_translator",
    "gauss_map_gap", "perturbed_rhs", "ring_sensitivity", "OMEGA_N",
]
