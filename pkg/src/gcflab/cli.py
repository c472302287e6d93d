"""Command-line entry point: ``gcflab {translator,flow,oval,verify}``.

Every subcommand reads defaults from an optional INI file (``--config``,
one section per subcommand, keys named like the long flags) and lets the
flags override them.  ``GCFLAB_OUT`` overrides the output directory.
"""

from __future__ import annotations

import argparse
import configparser
import math
import os
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import flow as F
from . import oval as O
from . import report as R
from .geometry import OMEGA_N, DomainError, make_domain
from .translator import (ConvergenceError, ConvexityError, exact_grim_reaper, radial_translator_ode,
                         solve_translator)

DEFAULTS = {
    "translator": {"domain": R.INTERVAL, "res": 128, "tol": 1e-10},
    "flow": {"domain": "disk:2", "res": 256, "t": 1.0, "dt": None},
    "oval": {"domain": R.INTERVAL, "res": 512, "t": "-4", "s": "-5,-10,-20", "dt": None},
    "verify": {"suite": "core", "tol": ""},
}


class ConfigError(ValueError):
    """Malformed configuration or flag value."""


@dataclass
class ExperimentConfig:
    """Resolved parameters of one subcommand."""

    command: str
    out: Path
    domain: str | None = None
    res: int | None = None
    dt: float | None = None
    t: list = field(default_factory=list)
    s: list = field(default_factory=list)
    tol: object = None
    suite: str | None = None

    def validate(self):
        if self.res is not None and self.res <= 0:
            raise ConfigError("--res must be positive")
        if self.dt is not None and not self.dt > 0:
            raise ConfigError("--dt must be positive")
        if self.command == "flow" and not (self.t and self.t[0] > 0):
            raise ConfigError("--t must be a positive end time")
        if self.command == "oval":
            if not self.s or any(v >= 0 for v in self.s) or any(b >= a for a, b in zip(self.s, self.s[1:])):
                raise ConfigError("--s must be strictly decreasing negatives")
            if not self.t:
                raise ConfigError("--t needs at least one target time")
        if self.command == "translator" and not (self.tol and self.tol > 0):
            raise ConfigError("--tol must be positive")
        return self


def _floats(text):
    if text is None or text == "":
        return []
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"not a number list: {text!r}") from exc


def _tolerances(text):
    out = {}
    for item in filter(None, (v.strip() for v in str(text or "").split(","))):
        name, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"--tol for verify takes name=value pairs, got {item!r}")
        try:
            out[name.strip()] = float(val)
        except ValueError as exc:
            raise ConfigError(f"bad tolerance {item!r}") from exc
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gcflab", description="Translators, Gauss curvature flow and ancient ovals.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="INI file; section named after the subcommand")
        sp.add_argument("--out", help="output directory (GCFLAB_OUT overrides)")

    sp = sub.add_parser("translator", help="solve the translator equation and compare with oracles")
    common(sp)
    sp.add_argument("--domain", help="e.g. interval:-1.5707963,1.5707963 or disk:1")
    sp.add_argument("--res", type=int, help="nodes per axis")
    sp.add_argument("--tol", type=float, help="bound on the relative equation defect")

    sp = sub.add_parser("flow", help="flow a circle, sphere or ellipse")
    common(sp)
    sp.add_argument("--domain", help="disk:R (circle), sphere:R or ellipse:a,b")
    sp.add_argument("--res", type=int, help="support samples")
    sp.add_argument("--t", help="end time")
    sp.add_argument("--dt", type=float, help="cap on the time step")

    sp = sub.add_parser("oval", help="construct an ancient oval from glued translators")
    common(sp)
    sp.add_argument("--domain", help="interval:a,b or disk:R")
    sp.add_argument("--res", type=int, help="support samples")
    sp.add_argument("--t", help="target time(s), comma separated")
    sp.add_argument("--s", help="seed times, strictly decreasing negatives")
    sp.add_argument("--dt", type=float, help="cap on the time step")

    sp = sub.add_parser("verify", help="run the verification suite")
    common(sp)
    sp.add_argument("--suite", help="suite name (" + ", ".join(R.SUITES) + ") or one check name")
    sp.add_argument("--tol", help="per-check tolerance overrides, name=value[,name=value]")
    return p


def resolve_config(args) -> ExperimentConfig:
    """Merge defaults, the INI section and flags (in that order)."""
    cmd = args.command
    vals = dict(DEFAULTS[cmd])
    if args.config:
        cp = configparser.ConfigParser()
        if not cp.read(args.config):
            raise ConfigError(f"cannot read config file {args.config}")
        if cp.has_section(cmd):
            for k, v in cp.items(cmd):
                if k not in vals and k != "out":
                    raise ConfigError(f"unknown key {k!r} in [{cmd}]")
                vals[k] = v
    for k in list(vals) + ["out"]:
        v = getattr(args, k, None)
        if v is not None:
            vals[k] = v
    out = os.environ.get("GCFLAB_OUT") or vals.get("out") or "out"
    try:
        cfg = ExperimentConfig(cmd, Path(out), domain=vals.get("domain"),
                               res=int(vals["res"]) if vals.get("res") not in (None, "") else None,
                               dt=float(vals["dt"]) if vals.get("dt") not in (None, "") else None,
                               t=_floats(vals.get("t")), s=_floats(vals.get("s")),
                               suite=vals.get("suite"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if cmd == "verify":
        cfg.tol = _tolerances(vals.get("tol"))
    elif "tol" in vals:
        cfg.tol = float(vals["tol"])
    return cfg.validate()


# ----------------------------------------------------------------------
def _run_translator(cfg) -> int:
    dom = make_domain(cfg.domain)
    sol = solve_translator(dom, cfg.res, cfg.tol)
    paths = sol.export(cfg.out, "translator")
    print(f"translator: beta={sol.beta:.6g} V={sol.V:.6g} residual={sol.residual:.3g} N={sol.resolution}")
    if dom.kind == "interval":
        a, b = dom.params["a"], dom.params["b"]
        half, c = 0.5 * (b - a), 0.5 * (a + b)
        x = sol.grid[0]
        m = sol.active & (np.abs(x - c) <= 0.9 * half)
        err = float(np.max(np.abs(sol.u[m] - exact_grim_reaper(half, x[m] - c))))
        print(f"oracle grim reaper: sup error on the 90% core = {err:.3e}")
    elif dom.kind == "disk":
        prof = radial_translator_ode(dom.params["R"])
        X, Y = np.meshgrid(*sol.grid, indexing="ij")
        r = np.hypot(X - dom.center[0], Y - dom.center[1])
        m = sol.active & (r <= 0.9 * dom.params["R"])
        err = float(np.max(np.abs(sol.u[m] - prof(r[m]))))
        print(f"oracle radial profile: beta={prof.beta:.8g}, sup error on the 90% core = {err:.3e}")
    print("wrote " + ", ".join(str(p) for p in paths))
    return 0


def _flow_state(spec, N):
    kind, _, rest = spec.partition(":")
    vals = _floats(rest)
    if kind == "disk" and len(vals) == 1:
        return F.CurveFlowState.circle(vals[0], N), ("circle", vals[0])
    if kind == "sphere" and len(vals) == 1:
        return F.AxisymFlowState.sphere(vals[0], N), ("sphere", vals[0])
    if kind == "ellipse" and len(vals) == 2:
        return F.CurveFlowState.ellipse(vals[0], vals[1], N), ("ellipse", None)
    raise ConfigError(f"flow --domain takes disk:R, sphere:R or ellipse:a,b, got {spec!r}")


def _run_flow(cfg) -> int:
    st, (kind, R0) = _flow_state(cfg.domain, cfg.res)
    t_end = cfg.t[0]
    run = F.flow_axisym if st.dim == 2 else F.flow_curve
    final, rep = run(st, t_end, cfg.dt, record_every=max(1, cfg.res // 4))
    paths = rep.export(cfg.out, "flow")
    print(f"flow: {kind} N={cfg.res} t_final={rep.t[-1]:.6g} steps={rep.steps} "
          f"volume-law error={rep.max_volume_law_error():.3e}")
    if rep.extinction_time is not None:
        print(f"extinct at {rep.extinction_time:.6g}")
    if kind == "circle":
        print(f"exact extinction R^2/2 = {0.5 * R0 * R0:.6g}")
        if rep.extinction_time is None:
            print(f"sup error vs sqrt(R^2-2t): {np.max(np.abs(final.h - math.sqrt(R0 * R0 - 2 * final.t))):.3e}")
    elif kind == "sphere":
        print(f"exact extinction R^3/3 = {R0 ** 3 / 3:.6g}")
        if rep.extinction_time is None:
            print(f"sup error vs (R^3-3t)^(1/3): {np.max(np.abs(final.h - (R0 ** 3 - 3 * final.t) ** (1 / 3))):.3e}")
    print("wrote " + ", ".join(str(p) for p in paths))
    return 0


def _run_oval(cfg) -> int:
    dom = make_domain(cfg.domain)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", O.OvalDiagnostic)
        res = O.construct_oval(dom, sorted(cfg.t), cfg.s, N=cfg.res, dt=cfg.dt)
    for st in res.states:
        print(f"oval t={st.t:g} (s={st.s:g}): volume={st.volume():.6g} "
              f"expected={-OMEGA_N[dom.dim] * st.t - 2 * st.V_omega:.6g} h-lam|t|={st.height_offset():.3e} "
              f"symmetry={st.symmetry_error():.2e}")
    for r in res.table:
        print(f"  s {r['s_a']:g} -> {r['s_b']:g} at t={r['t']:g}: hausdorff={r['hausdorff']:.3e} "
              f"nested={r['contained']} min_gap={r['min_gap']:.2e}")
    for w in caught:
        if issubclass(w.category, O.OvalDiagnostic):
            print(f"warning: {w.message}")
    paths = res.export(cfg.out, "oval")
    print("wrote " + ", ".join(str(p) for p in paths))
    return 0


def _run_verify(cfg) -> int:
    config = {"checks": R.resolve_checks(cfg.suite), "tolerance": cfg.tol}
    results = R.run_suite(config, progress=lambda r: print(r.line(), flush=True))
    status = R.emit(results, cfg.out)
    n_ok = sum(r.passed for r in results)
    print(f"{n_ok}/{len(results)} checks passed; summary in {cfg.out / 'summary.json'}")
    return status


RUNNERS = {"translator": _run_translator, "flow": _run_flow, "oval": _run_oval, "verify": _run_verify}


def _join_negative(argv):
    """``--s -5,-10`` -> ``--s=-5,-10`` (argparse reads ``-5,...`` as a flag)."""
    out, it = [], iter(argv)
    for a in it:
        if a in ("--t", "--s"):
            nxt = next(it, None)
            if nxt is not None and nxt[:1] == "-" and (nxt[1:2].isdigit() or nxt[1:2] == "."):
                out.append(f"{a}={nxt}")
                continue
            out.append(a)
            if nxt is not None:
                out.append(nxt)
        else:
            out.append(a)
    return out


def dispatch(argv=None) -> int:
    """Parse ``argv`` and run one subcommand; returns the exit status."""
    parser = build_parser()
    argv = _join_negative(sys.argv[1:] if argv is None else list(argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve_config(args)
        return RUNNERS[cfg.command](cfg)
    except (ConfigError, DomainError, KeyError) as exc:
        parser.print_usage(sys.stderr)
        print(f"gcflab {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (ConvergenceError, ConvexityError, F.CurvatureError, RuntimeError) as exc:
        print(f"gcflab {args.command}: failed: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
