"""Compact ancient ovals built from two translators.

A seed is the region between ``x_{n+1} = u(x) - lam*|s|`` and its mirror
image, where ``u`` is the translator over the cross-section.  Flowing the
seed from time ``s`` to ``t`` and letting ``s -> -inf`` gives the ancient
oval; its volume is ``-omega_n t - 2 V``, so it vanishes at
``T = -2 V / omega_n``.  For the width-``pi`` interval this is the
Angenent oval ``cos x = e^tau cosh y`` with ``tau = t + ln 2``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import flow as F
from .geometry import OMEGA_N, ConvexDomain, DomainError, soliton_speed
from .translator import (RadialProfile, TranslatorSolution, radial_translator_ode,
                         solve_translator, volume_under)


class OvalDiagnostic(UserWarning):
    """The s-sequence failed a monotonicity check (discretization too coarse)."""


@dataclass
class OvalState:
    """Snapshot of an oval.

    ``t`` is on the clock named by ``clock``: ``"nominal"`` counts flow time
    from the seed time ``s``; ``"calibrated"`` reads time off the volume,
    ``t = -(Vol + 2 V) / omega_n``.
    """

    body: F.CurveFlowState | F.AxisymFlowState
    t: float
    s: float
    lam: float
    V_omega: float
    clock: str = "nominal"
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.body.dim

    def volume(self) -> float:
        return self.body.volume()

    def calibrated_time(self) -> float:
        return -(self.volume() + 2.0 * self.V_omega) / OMEGA_N[self.dim]

    def heights(self):
        return self.body.heights()

    def height_offset(self) -> float:
        """``h(t) - lam |t|`` with ``h`` the top height."""
        return self.heights()[0] - self.lam * abs(self.t)

    def symmetry_error(self) -> float:
        """Sup difference between the body and its mirror image."""
        return float(np.max(np.abs(self.body.h - self.body.reflected().h)))

    def volume_defect(self) -> float:
        """``Vol - (-omega_n t - 2 V)`` on this state's clock."""
        return self.volume() - (-OMEGA_N[self.dim] * self.t - 2.0 * self.V_omega)

    def eps_t(self, domain, level=0.0) -> float:
        return F.measure_eps_t(self.body, domain, level)

    def summary(self) -> dict:
        hp, hm = self.heights()
        return {"t": self.t, "clock": self.clock, "s": self.s, "volume": self.volume(),
                "h_plus": hp, "h_minus": hm, "N": self.body.N, "lam": self.lam,
                "V_omega": self.V_omega, **self.meta}

    def export(self, out_dir, stem="oval"):
        """Point cloud CSV (angle, support value) and JSON metadata."""
        return self.body.export(out_dir, stem, meta=self.summary())


# ----------------------------------------------------------------------
def _default_translator(domain, resolution=512):
    if domain.dim == 1:
        return solve_translator(domain, resolution)
    if domain.kind != "disk":
        raise DomainError("n=2 ovals are built over disks only")
    return radial_translator_ode(domain.params["R"])


def _cap_heights_1d(translator, domain, lam_s, m):
    """Abscissae and heights ``lam|s| - u`` of the upper cap (where positive)."""
    a, b = domain.params["a"], domain.params["b"]
    u = translator.evaluate if isinstance(translator, TranslatorSolution) else translator
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    # wall distance where u reaches lam|s|, by bisection on a log scale
    # closest representable wall distance
    lo0 = math.log(8 * np.finfo(float).eps * max(abs(a), abs(b), half))

    def reach(side):
        lo, hi = lo0, math.log(half)
        f = lambda q: float(np.ravel(u(np.array([[mid + side * (half - math.exp(q))]])))[0]) - lam_s
        if f(hi) >= 0:
            raise DomainError("seed is empty: lam*|s| does not exceed the translator minimum")
        if f(lo) <= 0:
            raise DomainError("lam*|s| too large: the cap reaches the wall at machine precision")
        for _ in range(200):
            q = 0.5 * (lo + hi)
            if f(q) > 0:
                lo = q
            else:
                hi = q
        return math.exp(hi)
    d_left, d_right = reach(-1.0), reach(1.0)
    dl = np.geomspace(d_left, half, m // 2)
    dr = np.geomspace(d_right, half, m // 2)
    x = np.unique(np.concatenate([a + dl, b - dr]))
    y = lam_s - u(x[:, None])
    keep = y >= 0
    return x[keep], y[keep]


def _cap_heights_radial(profile, R, lam_s, m):
    u = profile

    def f(q):
        return float(u(np.array([R - math.exp(q)]))[0]) - lam_s

    lo, hi = -60.0, math.log(R)
    if f(hi) >= 0:
        raise DomainError("seed is empty: lam*|s| does not exceed the translator minimum")
    for _ in range(200):
        q = 0.5 * (lo + hi)
        if f(q) > 0:
            lo = q
        else:
            hi = q
    d = np.geomspace(math.exp(hi), R, m)
    r = np.unique(np.clip(R - d, 0.0, None))
    z = lam_s - u(r)
    keep = z >= 0
    return r[keep], z[keep]


def _rounding_radius(domain):
    # translator curvatures stay below lam^{1/n}, so radius lam^{-1/n}/2 only touches the equator
    return 0.5 * soliton_speed(domain) ** (-1.0 / domain.dim)


def glued_seed(domain: ConvexDomain, s: float, translator=None, N: int = 512, theta=None,
               samples: int = 200_000, rounding=None):
    """Seed body bounded by ``x_{n+1} = +-(lam|s| - u(x))``.

    Parameters
    ----------
    translator : TranslatorSolution, RadialProfile or callable, optional
        Heights ``u`` over the cross-section, minimum 0.  Defaults to a
        grid solve (interval) or the radial profile (disk).
    N : int
        Support samples; ``theta`` overrides the angle grid for curves.
    rounding : float, optional
        Radius of the opening that rounds the corner where the caps meet
        (default ``lam^{-1/n} / 2``; 0 keeps the raw corner, which has
        zero curvature radius and cannot be flowed).

    Returns
    -------
    CurveFlowState (n=1) or AxisymFlowState (n=2), stamped with time ``s``.

    Raises
    ------
    DomainError
        When ``lam |s|`` does not exceed the rounding radius (the seed is
        too thin to round) or the caps reach the wall at machine precision.
    """
    if not s < 0:
        raise ValueError("seed time s must be negative")
    lam = soliton_speed(domain)
    lam_s = lam * abs(s)
    r_open = _rounding_radius(domain) if rounding is None else float(rounding)
    if not lam_s > r_open:
        raise DomainError(f"seed half-height {lam_s:.3g} does not exceed the rounding radius {r_open:.3g}")
    translator = _default_translator(domain) if translator is None else translator
    if domain.dim == 1:
        x, y = _cap_heights_1d(translator, domain, lam_s, samples)
        P = np.concatenate([np.stack([x, y], -1), np.stack([x, -y], -1)])
        st = F.CurveFlowState.from_points(P, N, t=s, theta=theta)
        if r_open > 0:
            st.h = F.open_support(st.h, st.theta, r_open)
        return st
    if domain.kind != "disk":
        raise DomainError("n=2 ovals are built over disks only")
    R = domain.params["R"]
    if np.any(np.abs(domain.center) > 0):
        raise DomainError("n=2 ovals need a disk centered at the origin")
    if isinstance(translator, TranslatorSolution):
        prof = lambda r: translator.evaluate(np.stack([np.asarray(r), np.zeros_like(r)], -1))
    else:
        prof = translator
    r, z = _cap_heights_radial(prof, R, lam_s, samples)
    st = F.AxisymFlowState.from_profile(np.concatenate([r, r]), np.concatenate([z, -z]), N, t=s,
                                        symmetric=True)
    if r_open > 0:
        # the meridian section is planar: open it on the mirrored full circle of angles
        psi = st.psi
        ang = np.concatenate([psi, math.pi - psi[1:-1]]) % (2 * math.pi)
        hh = np.concatenate([st.h, st.h[1:-1]])
        k = np.argsort(ang)
        opened = np.empty_like(hh)
        opened[k] = F.open_support(hh[k], ang[k], r_open)
        st.h = opened[:N]
    return st


def seed_volume_gap(domain, s, translator=None, **kw):
    """``Vol(seed) - omega_n |s|``; tends to ``-2 V`` as ``s -> -inf``."""
    seed = glued_seed(domain, s, translator, **kw)
    return seed.volume() - OMEGA_N[domain.dim] * abs(s)


# ----------------------------------------------------------------------
@dataclass
class OvalConstruction:
    """Result of :func:`construct_oval`."""

    states: list          # one OvalState per target time, from the last s
    table: list           # rows {s_a, s_b, t, hausdorff, contained, min_gap}
    snapshots: dict       # {s: {t: OvalState}}
    reports: dict         # {s: FlowReport}
    monotone: bool

    @property
    def final(self) -> OvalState:
        return self.states[-1]

    def hausdorff_gaps(self, t=None):
        rows = [r for r in self.table if t is None or r["t"] == t]
        return [r["hausdorff"] for r in rows]

    def export(self, out_dir, stem="oval"):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = list(self.final.export(out, stem))
        with open(out / f"{stem}_table.csv", "w") as fh:
            fh.write("s_a,s_b,t,hausdorff,contained,min_gap\n")
            for r in self.table:
                fh.write(f"{r['s_a']:.12g},{r['s_b']:.12g},{r['t']:.12g},{r['hausdorff']:.12g},"
                         f"{int(r['contained'])},{r['min_gap']:.12g}\n")
        return paths + [out / f"{stem}_table.csv"]


def construct_oval(domain: ConvexDomain, t_target, s_list, *, N: int = 512, grading: float = 0.9,
                   translator=None, V_omega=None, clock: str = "nominal", dt=None, c_stab=0.25,
                   tol_rel=1e-8, record_every=50) -> OvalConstruction:
    """Flow glued seeds at each ``s`` to ``t_target`` and tabulate the s-limit.

    Parameters
    ----------
    t_target : float or sequence of float
        Target time(s), each on ``clock``; later targets reuse the same flow.
    s_list : sequence of float
        Strictly decreasing negative seed times, all ``<= min(t_target)``.
    grading : float
        Curve angle grading (0 = uniform); n=2 uses the uniform psi grid.
    clock : {"nominal", "calibrated"}
        How ``t_target`` is read.  On the calibrated clock the flow stops
        when the volume reaches ``-omega_n t - 2 V``.
    V_omega : float, optional
        Volume under the translator; defaults to the translator's own
        quadrature (``volume_under``), or the radial quadrature for disks.

    Notes
    -----
    The table compares successive seeds at every target: the Hausdorff
    distance (sup of the support difference) and whether the earlier seed's
    body lies inside the later one's within ``tol_rel * scale``.  Failures
    of either monotonicity raise an :class:`OvalDiagnostic` warning.
    """
    targets = sorted(np.atleast_1d(np.asarray(t_target, float)).tolist())
    s_list = [float(s) for s in s_list]
    if len(s_list) < 1:
        raise ValueError("s_list is empty")
    if any(b >= a for a, b in zip(s_list, s_list[1:])) or s_list[0] >= 0:
        raise ValueError("s_list must be strictly decreasing negatives")
    if clock not in ("nominal", "calibrated"):
        raise ValueError(f"unknown clock {clock!r}")
    n = domain.dim
    lam = soliton_speed(domain)
    translator = _default_translator(domain) if translator is None else translator
    if V_omega is None:
        if isinstance(translator, TranslatorSolution):
            V_omega = translator.V if np.isfinite(translator.V) else volume_under(translator).V
        elif isinstance(translator, RadialProfile):
            V_omega = translator.volume()
        else:
            raise ValueError("V_omega is required for a callable translator")
    T = -2.0 * V_omega / OMEGA_N[n]
    if not targets[-1] < T:
        raise ValueError(f"targets must precede the extinction time {T:.6g}")
    if not s_list[0] <= targets[0]:
        raise ValueError("every s must satisfy s <= t_target")
    theta = F.graded_angles(N, grading) if (n == 1 and grading) else None

    snaps, reports = {}, {}
    for s in s_list:
        seed = glued_seed(domain, s, translator, N=N, theta=theta)
        offset = 0.0
        if clock == "calibrated":
            # volume decreases at omega_n, so (calibrated - nominal) is fixed by the seed
            offset = -(seed.volume() + 2.0 * V_omega) / OMEGA_N[n] - s
        stops = [t - offset for t in targets]
        run = F.flow_curve if n == 1 else F.flow_axisym
        _, rep = run(seed, stops[-1], dt, c_stab=c_stab, record_every=record_every, record_times=stops)
        got = F.snapshots(rep)
        snaps[s] = {}
        for t, tn in zip(targets, stops):
            body = got[tn] if tn in got else None
            if body is None:
                raise RuntimeError(f"flow from s={s} did not reach t={t}")
            snaps[s][t] = OvalState(body, t, s, lam, V_omega, clock, {"nominal_time": tn})
        rep.meta.pop("_snaps", None)
        reports[s] = rep

    table = []
    monotone = True
    for t in targets:
        prev = None
        for a, b in zip(s_list, s_list[1:]):
            A, B = snaps[a][t].body, snaps[b][t].body
            gap = float(np.min(A.h - B.h))      # later s (more negative) lies inside
            scale = max(A.scale(), B.scale())
            dist = F.hausdorff(A, B)
            row = {"s_a": a, "s_b": b, "t": t, "hausdorff": dist,
                   "contained": bool(gap >= -tol_rel * scale), "min_gap": gap}
            table.append(row)
            if prev is not None and not dist < prev:
                monotone = False
            prev = dist
    if not monotone:
        warnings.warn("Hausdorff gaps do not shrink along s_list", OvalDiagnostic)
    if not all(r["contained"] for r in table):
        warnings.warn("successive seeds are not nested within tolerance", OvalDiagnostic)
    states = [snaps[s_list[-1]][t] for t in targets]
    return OvalConstruction(states, table, snaps, reports, monotone)


def extinction_time(domain, s, translator=None, *, N=512, grading=0.9, remaining=0.1,
                    record_every=200):
    """Extinction time of the seed flown from ``s``, by volume extrapolation.

    The flow stops once the volume predicted by the volume law has dropped
    to ``remaining`` times the seed volume; a straight-line fit of the
    recorded volumes over the second half of the run is then continued to
    zero.  ``remaining=0`` flows to the actual extinction instead.

    Returns
    -------
    T : float
    report : FlowReport
    """
    if not 0 <= remaining < 1:
        raise ValueError("remaining must lie in [0, 1)")
    n = domain.dim
    theta = F.graded_angles(N, grading) if (n == 1 and grading) else None
    seed = glued_seed(domain, s, translator, N=N, theta=theta)
    run = F.flow_curve if n == 1 else F.flow_axisym
    life = seed.volume() / OMEGA_N[n]
    if remaining == 0:
        _, rep = run(seed, s + 2.0 * life + 1.0, record_every=record_every)
        if rep.extinction_time is None:
            raise RuntimeError("no extinction detected")
        return rep.extinction_time, rep
    stop = s + (1.0 - remaining) * life
    _, rep = run(seed, stop, record_every=record_every)
    t, vol = rep.t, rep.column("volume")
    m = t >= 0.5 * (t[0] + t[-1])
    if m.sum() < 2:
        m[-2:] = True
    slope, icpt = np.polyfit(t[m], vol[m], 1)
    T = -icpt / slope
    rep.extinction_time = float(T)
    rep.meta["extinction_fit"] = {"slope": float(slope), "records": int(m.sum()), "stop": float(stop)}
    return float(T), rep


# ----------------------------------------------------------------------
@dataclass(frozen=True)
class AngenentOval:
    """The curve ``cos x = e^tau cosh y`` at time ``tau < 0``."""

    tau: float

    @property
    def height(self) -> float:
        return float(np.arccosh(np.exp(-self.tau)))

    @property
    def width(self) -> float:
        return float(2.0 * np.arccos(np.exp(self.tau)))

    def height_excess(self) -> float:
        """``h - (|tau| + ln 2)``, evaluated without cancellation."""
        q = math.exp(2.0 * self.tau)
        return math.log1p(-q / (2.0 * (1.0 + math.sqrt(1.0 - q))))

    def residual(self, x, y):
        return np.cos(x) - np.exp(self.tau) * np.cosh(y)

    def on_curve(self, x, y, tol=1e-10):
        return np.abs(self.residual(x, y)) <= tol

    def contains(self, x, y):
        return (np.abs(x) < 0.5 * math.pi) & (self.residual(x, y) > 0)

    def y_at(self, x):
        """Upper branch ``y(x) = arccosh(cos x / e^tau)``."""
        return np.arccosh(np.cos(x) * np.exp(-self.tau))

    def support(self, theta):
        """Exact support function.

        At the point with outer normal angle theta one has
        ``sinh y = |sin theta| sqrt(e^{-2 tau} - 1)``.
        """
        th = np.asarray(theta, float)
        c, s = np.abs(np.cos(th)), np.abs(np.sin(th))
        y = np.arcsinh(s * math.sqrt(math.expm1(-2.0 * self.tau)))
        x = np.arccos(np.clip(np.exp(self.tau) * np.cosh(y), -1.0, 1.0))
        return x * c + y * s

    def volume(self) -> float:
        """Enclosed area, ``-2 pi tau``."""
        return -2.0 * math.pi * self.tau


def angenent_oracle(t: float) -> AngenentOval:
    """Angenent oval at its own time ``t < 0`` (extinct at 0)."""
    if not t < 0:
        raise DomainError("the Angenent oval is extinct for t >= 0")
    return AngenentOval(float(t))


def angenent_state(t: float, N=512, theta=None, shift=math.log(2.0)):
    """Angenent oval as a curve state at oval time ``t`` (its own time ``t + shift``)."""
    th = F.uniform_angles(N) if theta is None else theta
    orc = angenent_oracle(t + shift)
    return F.CurveFlowState(orc.support(th), t, th)


# ----------------------------------------------------------------------
@dataclass
class AsymptoticsReport:
    t: np.ndarray
    height_offset: np.ndarray      # h(t) - lam |t|
    eps_t: np.ndarray
    t_eps: np.ndarray              # |t| eps_t
    tip_speed_min: np.ndarray
    lam: float
    height_negative: bool
    height_increasing: bool        # toward 0 as t decreases
    t_eps_decreasing: bool         # toward 0 as t decreases
    tip_speed_ok: bool

    def summary(self):
        return {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in self.__dict__.items()}


def oval_asymptotics(states, domain: ConvexDomain, *, level=0.0, speed_tol=1e-3,
                     height_offsets=None) -> AsymptoticsReport:
    """Asymptotic diagnostics over ``states`` (at least three distinct times).

    Sequences are ordered by increasing |t|.  ``height_increasing`` asks
    ``h - lam|t|`` to grow toward 0 as ``t -> -inf``; ``t_eps_decreasing``
    asks ``|t| eps_t`` to shrink.  Tip speeds are the curvatures at the two
    tip nodes of each snapshot.  ``height_offsets`` replaces the measured
    heights (used for oracle states whose offset needs extra precision).
    """
    if len(states) < 3 or len({s.t for s in states}) < 3:
        raise ValueError("need at least three states at distinct times")
    order = sorted(range(len(states)), key=lambda i: abs(states[i].t))
    st = [states[i] for i in order]
    t = np.array([s.t for s in st])
    lam = st[0].lam
    if height_offsets is None:
        ho = np.array([s.height_offset() for s in st])
    else:
        ho = np.asarray(height_offsets, float)[order]
    eps = np.array([s.eps_t(domain, level) for s in st])
    te = np.abs(t) * eps
    speeds = []
    for s in st:
        v = s.body.rates()[0]
        ip, im = s.body.tip_nodes()
        speeds.append(min(-v[ip], -v[im]))
    speeds = np.array(speeds)
    return AsymptoticsReport(
        t, ho, eps, te, speeds, lam,
        height_negative=bool(np.all(ho < 0)),
        height_increasing=bool(np.all(np.diff(ho) > 0)),
        t_eps_decreasing=bool(np.all(np.diff(te) < 0)),
        tip_speed_ok=bool(np.all(speeds >= lam - speed_tol)),
    )
