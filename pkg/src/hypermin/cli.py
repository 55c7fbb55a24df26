"""Command-line front end: sampling, geometry checks, stability sweeps.

Subcommands: sample, check, lambda1, sweep, critical, conjugacy, profile.
Configuration precedence is flags > config file (flat JSON) > defaults.
All progress goes to stderr; stdout carries machine-parseable output only.
Exit codes: 0 success, 1 check failure, 2 configuration error,
3 solver non-convergence.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import diffgeo, lorentz, stability, surfaces
from .lorentz import GeometryError, Model
from .stability import Domain, JacobiProblem, SolverError

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3


class ConfigError(ValueError):
    pass


def _fmt(x):
    """12-significant-digit decimal formatting for CSV cells."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{x:.12g}"
    return str(x)


def _progress(msg):
    print(msg, file=sys.stderr, flush=True)


class CsvWriter:
    """CSV with a fixed header; flushes a trailer row on error."""

    def __init__(self, path, header):
        self.path = path
        self._fh = open(path, "w") if path else sys.stdout
        self._fh.write(",".join(header) + "\n")

    def row(self, *cells):
        self._fh.write(",".join(_fmt(c) for c in cells) + "\n")
        self._fh.flush()

    def trailer(self, message):
        self._fh.write(f"# error: {message}\n")
        self._fh.flush()

    def close(self):
        if self._fh is not sys.stdout:
            self._fh.close()


def _svg_line_plot(path, xs, ys, xlabel, ylabel, marker_x=None):
    """Self-contained SVG line plot with a zero line and optional marker."""
    W, H, M = 640, 440, 60
    xs = np.asarray(xs, float)
    ys = np.asarray(ys, float)
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(min(ys.min(), 0.0)), float(max(ys.max(), 0.0))
    if x1 == x0:
        x1 = x0 + 1.0
    pad = 0.05 * (y1 - y0 or 1.0)
    y0, y1 = y0 - pad, y1 + pad

    def sx(x):
        return M + (x - x0) / (x1 - x0) * (W - 2 * M)

    def sy(y):
        return H - M - (y - y0) / (y1 - y0) * (H - 2 * M)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}">',
             f'<rect width="{W}" height="{H}" fill="white"/>',
             f'<line x1="{M}" y1="{H-M}" x2="{W-M}" y2="{H-M}" stroke="black"/>',
             f'<line x1="{M}" y1="{M}" x2="{M}" y2="{H-M}" stroke="black"/>']
    zy = sy(0.0)
    parts.append(f'<line x1="{M}" y1="{zy:.2f}" x2="{W-M}" y2="{zy:.2f}" '
                 'stroke="gray" stroke-dasharray="4 4"/>')
    pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys))
    parts.append(f'<polyline points="{pts}" fill="none" stroke="steelblue" '
                 'stroke-width="1.5"/>')
    for x, y in zip(xs, ys):
        parts.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="2.5" '
                     'fill="steelblue"/>')
    if marker_x is not None:
        mx = sx(marker_x)
        parts.append(f'<line x1="{mx:.2f}" y1="{M}" x2="{mx:.2f}" y2="{H-M}" '
                     'stroke="crimson"/>')
        parts.append(f'<text x="{mx+4:.2f}" y="{M+14}" fill="crimson" '
                     f'font-size="12">zero crossing {marker_x:.5g}</text>')
    parts.append(f'<text x="{W/2}" y="{H-16}" text-anchor="middle" '
                 f'font-size="13">{xlabel}</text>')
    parts.append(f'<text x="18" y="{H/2}" font-size="13" '
                 f'transform="rotate(-90 18 {H/2})" text-anchor="middle">{ylabel}</text>')
    for t in np.linspace(x0, x1, 5):
        parts.append(f'<text x="{sx(t):.1f}" y="{H-M+16}" text-anchor="middle" '
                     f'font-size="11">{t:.3g}</text>')
    for t in np.linspace(y0, y1, 5):
        parts.append(f'<text x="{M-6}" y="{sy(t):.1f}" text-anchor="end" '
                     f'font-size="11">{t:.3g}</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")


# -- configuration ---------------------------------------------------------

DEFAULTS = {
    "surface": "helicoid",
    "a": 1.0,
    "atilde": 1.0,
    "abar": 0.5,
    "model": "ball",
    "domain": None,
    "grid": None,
    "spacing": None,
    "tol": 1e-10,
    "out": None,
    "format": None,
    "svg": None,
    "bracket": (1.0, 4.0),
    "bisect_tol": 1e-3,
    "a_values": None,
    "ks": list(stability.DEFAULT_SCHEDULE_KS),
    "rulings": 0,
    "samples": 10000,
}

MODELS = {"hyperboloid": Model.HYPERBOLOID, "ball": Model.BALL,
          "upper-half": Model.UPPER_HALF}


def _parse_floats(text, n=None):
    vals = [float(t) for t in str(text).split(",") if t.strip() != ""]
    if n is not None and len(vals) != n:
        raise ConfigError(f"expected {n} comma-separated numbers, got {text!r}")
    return vals


def merge_config(args) -> dict:
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        if not isinstance(file_cfg, dict):
            raise ConfigError("config file must hold a flat JSON object")
        for key, val in file_cfg.items():
            if key not in cfg:
                raise ConfigError(f"unknown config key {key!r}")
            cfg[key] = val
    for key in cfg:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    cfg["command"] = args.command
    return cfg


def build_chart(cfg):
    kind = cfg["surface"]
    tol = float(cfg["tol"])
    if kind == "helicoid":
        return surfaces.Helicoid(float(cfg["a"]))
    if kind == "cat-spherical":
        return surfaces.SphericalCatenoid(float(cfg["atilde"]), tol=tol)
    if kind == "cat-hyperbolic":
        return surfaces.HyperbolicCatenoid(float(cfg["atilde"]), tol=tol)
    if kind == "cat-parabolic":
        return surfaces.ParabolicCatenoid(tol=tol)
    if kind == "cat-ball":
        return surfaces.BallCatenoid(float(cfg["abar"]), tol=tol)
    raise ConfigError(f"unknown surface {kind!r}")


def _domain(cfg, default):
    if cfg["domain"] is None:
        return default
    vals = _parse_floats(cfg["domain"], 4) if isinstance(cfg["domain"], str) \
        else list(cfg["domain"])
    return Domain(*vals)


def _grid(cfg, default):
    if cfg["grid"] is None:
        return default
    if isinstance(cfg["grid"], str):
        nu, nv = (int(v) for v in cfg["grid"].split(","))
    else:
        nu, nv = (int(v) for v in cfg["grid"])
    if nu < 1 or nv < 1:
        raise ConfigError("grid sizes must be positive")
    return nu, nv


def _threads():
    raw = os.environ.get("HYPERMIN_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


# -- subcommands -----------------------------------------------------------

def cmd_sample(cfg) -> int:
    chart = build_chart(cfg)
    dom = _domain(cfg, Domain(-2.0, 2.0, -3.0, 3.0))
    nu, nv = _grid(cfg, (80, 120))
    model = MODELS.get(cfg["model"])
    if model is None:
        raise ConfigError(f"unknown model {cfg['model']!r}")
    fmt = cfg["format"] or "obj"
    u = np.linspace(dom.u0, dom.u1, nu)
    v = np.linspace(dom.v0, dom.v1, nv)
    U, V = np.meshgrid(u, v, indexing="ij")
    _progress(f"sampling {cfg['surface']} on {nu}x{nv} grid -> {cfg['model']}")
    pts = lorentz.convert(chart.point(U, V), Model.HYPERBOLOID, model)
    out = cfg["out"]
    if fmt == "obj":
        fh = open(out, "w") if out else sys.stdout
        dim = pts.shape[-1]
        for p in pts.reshape(-1, dim):
            coords = " ".join(_fmt(c) for c in p[:3]) if dim == 3 else \
                " ".join(_fmt(c) for c in p)
            fh.write(f"v {coords}\n")
        for i in range(nu - 1):
            for j in range(nv - 1):
                n00 = i * nv + j + 1
                n01, n10, n11 = n00 + 1, n00 + nv, n00 + nv + 1
                fh.write(f"f {n00} {n10} {n11}\n")
                fh.write(f"f {n00} {n11} {n01}\n")
        nrul = int(cfg["rulings"])
        if nrul > 0:
            base = nu * nv
            for v0 in np.linspace(dom.v0, dom.v1, nrul):
                line = lorentz.convert(chart.point(u, np.full_like(u, v0)),
                                       Model.HYPERBOLOID, model)
                for p in line:
                    fh.write("v " + " ".join(_fmt(c) for c in p[:3]) + "\n")
                ids = " ".join(str(base + i + 1) for i in range(nu))
                fh.write(f"l {ids}\n")
                base += nu
        if out:
            fh.close()
    elif fmt == "csv":
        w = CsvWriter(out, ["u", "v"] + [f"c{i}" for i in range(pts.shape[-1])])
        for uu, vv, p in zip(U.ravel(), V.ravel(), pts.reshape(-1, pts.shape[-1])):
            w.row(uu, vv, *p)
        w.close()
    elif fmt == "json":
        doc = {"surface": cfg["surface"], "model": cfg["model"],
               "grid": [nu, nv], "vertices": pts.reshape(-1, pts.shape[-1]).tolist()}
        fh = open(out, "w") if out else sys.stdout
        json.dump(doc, fh)
        fh.write("\n")
        if out:
            fh.close()
    else:
        raise ConfigError(f"sample cannot write format {fmt!r}")
    return EXIT_OK


def _roundtrip_error(x):
    ball = lorentz.to_ball(x)
    if os.environ.get("HYPERMIN_FAULT") == "roundtrip":
        ball = ball + 1e-6          # test hook: corrupt the transform
    back = lorentz.from_ball(np.clip(ball, -0.999999999, 0.999999999))
    e1 = np.max(np.abs(back - x) / np.maximum(1.0, np.abs(x)))
    uh = lorentz.to_upper_half(x)
    back = lorentz.from_upper_half(uh)
    e2 = np.max(np.abs(back - x) / np.maximum(1.0, np.abs(x)))
    return max(float(e1), float(e2))


def cmd_check(cfg) -> int:
    chart = build_chart(cfg)
    dom = _domain(cfg, Domain(-2.0, 2.0, -2.0, 2.0))
    n = max(10, int(math.sqrt(cfg["samples"])))
    u = np.linspace(dom.u0, dom.u1, n)
    v = np.linspace(dom.v0, dom.v1, n)
    U, V = np.meshgrid(u, v, indexing="ij")
    analytic = isinstance(chart, surfaces.Helicoid)
    checks = []

    def add(name, measured, tolerance):
        checks.append({"check": name, "measured": float(measured),
                       "tolerance": float(tolerance),
                       "pass": bool(measured < tolerance)})

    x = chart.point(U, V)
    constraint = np.max(np.abs(lorentz.minkowski_dot(x, x) + 1.0))
    add("hyperboloid_constraint", constraint, 1e-12 if analytic else 1e-8)
    f = diffgeo.fundamental_forms(chart, U, V)
    add("mean_curvature", np.max(np.abs(f.mean_curvature)),
        diffgeo.MINIMAL_TOL_ANALYTIC if analytic else diffgeo.MINIMAL_TOL_FD)
    add("model_round_trip", _roundtrip_error(x), 1e-12)
    if analytic:
        G_exact = chart.metric_G(U)
        err = max(np.max(np.abs(f.E - 1.0)), np.max(np.abs(f.F)),
                  np.max(np.abs(f.G - G_exact) / G_exact))
        add("helicoid_first_form", err, 1e-9)
    if isinstance(chart, surfaces.SphericalCatenoid):
        s = np.linspace(-chart.s_max, chart.s_max, 500)
        x1, x3, x4, *_ = chart._curve(s)
        add("profile_identity", np.max(np.abs(x4 ** 2 - x3 ** 2 - x1 ** 2 - 1.0)), 1e-10)
    if isinstance(chart, surfaces.HyperbolicCatenoid):
        s = np.linspace(-chart.s_max, chart.s_max, 500)
        x1, x3, x4, *_ = chart._curve(s)
        add("profile_identity", np.max(np.abs(x3 ** 2 + x4 ** 2 - x1 ** 2 + 1.0)), 1e-10)

    ok = all(c["pass"] for c in checks)
    doc = {"surface": cfg["surface"], "passed": ok, "checks": checks}
    fh = open(cfg["out"], "w") if cfg["out"] else sys.stdout
    json.dump(doc, fh, indent=2)
    fh.write("\n")
    if cfg["out"]:
        fh.close()
    return EXIT_OK if ok else EXIT_CHECK_FAILED


SWEEP_HEADER = ["a", "k", "lambda1", "index", "residual"]


def _solve_one(a, k, spacing):
    prob = JacobiProblem.from_spacing(surfaces.Helicoid(a), Domain.square(float(k)),
                                      spacing)
    rep = stability.lambda1(prob)
    idx = stability.morse_index(prob) if rep.lambda1 < 0 else 0
    return rep, idx


def cmd_lambda1(cfg) -> int:
    chart = build_chart(cfg)
    periodic = cfg["surface"] in ("cat-spherical", "cat-ball")
    default_dom = Domain(-2.0, 2.0, 0.0, 2.0 * math.pi) if periodic \
        else Domain.square(4.0)
    dom = _domain(cfg, default_dom)
    spacing = cfg["spacing"] or stability.DEFAULT_SCHEDULE_SPACING
    if cfg["grid"] is not None:
        nu, nv = _grid(cfg, None)
        prob = JacobiProblem.from_chart(chart, dom, nu, nv, v_periodic=periodic)
    else:
        prob = JacobiProblem.from_spacing(chart, dom, spacing, v_periodic=periodic)
    _progress(f"lambda1 on {dom} grid {prob.nu}x{prob.nv}")
    w = CsvWriter(cfg["out"], ["surface", "param", "u0", "u1", "v0", "v1",
                               "nu", "nv", "lambda1", "index", "residual",
                               "classification"])
    try:
        rep = stability.lambda1(prob)
        idx = stability.morse_index(prob) if rep.lambda1 < 0 else 0
        param = {"helicoid": cfg["a"], "cat-spherical": cfg["atilde"],
                 "cat-hyperbolic": cfg["atilde"], "cat-parabolic": 1.0,
                 "cat-ball": cfg["abar"]}[cfg["surface"]]
        w.row(cfg["surface"], float(param), dom.u0, dom.u1, dom.v0, dom.v1,
              prob.nu, prob.nv, rep.lambda1, idx, rep.residual,
              rep.classification)
    except SolverError as exc:
        w.trailer(str(exc))
        w.close()
        return EXIT_SOLVER
    w.close()
    return EXIT_OK


def cmd_sweep(cfg) -> int:
    if cfg["a_values"] is None:
        raise ConfigError("sweep needs --a-values")
    a_values = _parse_floats(cfg["a_values"])
    ks = [float(k) for k in cfg["ks"]]
    spacing = cfg["spacing"] or stability.DEFAULT_SCHEDULE_SPACING
    w = CsvWriter(cfg["out"], SWEEP_HEADER)
    tasks = [(a, k) for a in a_values for k in ks]
    _progress(f"sweep: {len(tasks)} solves on {_threads()} thread(s)")
    final = {}
    try:
        with ThreadPoolExecutor(max_workers=_threads()) as pool:
            results = list(pool.map(lambda t: _solve_one(t[0], t[1], spacing), tasks))
        for (a, k), (rep, idx) in zip(tasks, results):
            w.row(a, k, rep.lambda1, idx, rep.residual)
            final[a] = rep.lambda1
    except SolverError as exc:
        w.trailer(str(exc))
        w.close()
        return EXIT_SOLVER
    w.close()
    if cfg["svg"]:
        a_sorted = sorted(final)
        lams = [final[a] for a in a_sorted]
        marker = None
        for x0, x1, y0, y1 in zip(a_sorted, a_sorted[1:], lams, lams[1:]):
            if y0 > 0 >= y1:
                marker = x0 + (x1 - x0) * y0 / (y0 - y1)
        _svg_line_plot(cfg["svg"], a_sorted, lams, "pitch a",
                       "lambda1 (largest domain)", marker_x=marker)
    return EXIT_OK


def cmd_critical(cfg) -> int:
    dom = _domain(cfg, Domain(*stability.DEFAULT_CRITICAL_DOMAIN))
    spacing = cfg["spacing"] or stability.DEFAULT_CRITICAL_SPACING
    bracket = cfg["bracket"]
    if isinstance(bracket, str):
        bracket = tuple(_parse_floats(bracket, 2))
    _progress(f"critical search on {dom}, bracket {bracket}")
    w = CsvWriter(cfg["out"], ["step", "a", "lambda1"])
    try:
        res = stability.critical_pitch(domain=dom, spacing=spacing,
                                       bracket=tuple(bracket),
                                       tol=float(cfg["bisect_tol"]))
    except SolverError as exc:
        w.trailer(str(exc))
        w.close()
        return EXIT_SOLVER
    except GeometryError as exc:
        w.trailer(str(exc))
        w.close()
        raise ConfigError(str(exc)) from exc
    for i, (a, lam) in enumerate(res.trace):
        w.row(i, a, lam)
    w.row("final", res.value, 0.0)
    w.close()
    if cfg["svg"]:
        pts = sorted(res.trace)
        _svg_line_plot(cfg["svg"], [p[0] for p in pts], [p[1] for p in pts],
                       "pitch a", "lambda1", marker_x=res.value)
    return EXIT_OK


def cmd_conjugacy(cfg) -> int:
    values = _parse_floats(cfg["a_values"] or "1.5,2.5")
    w = CsvWriter(cfg["out"], ["a", "abar", "helicoid_lambda1", "catenoid_lambda1",
                               "helicoid_class", "catenoid_class", "agree"])
    try:
        for a in values:
            _progress(f"conjugacy cross-check at a = {a}")
            rep = stability.conjugacy_crosscheck(a)
            w.row(a, rep.abar, rep.helicoid.reports[-1].lambda1,
                  rep.catenoid.reports[-1].lambda1,
                  rep.helicoid.classification, rep.catenoid.classification,
                  rep.agree)
    except SolverError as exc:
        w.trailer(str(exc))
        w.close()
        return EXIT_SOLVER
    w.close()
    return EXIT_OK


def cmd_profile(cfg) -> int:
    chart = build_chart(cfg)
    if isinstance(chart, surfaces.BallCatenoid):
        w = CsvWriter(cfg["out"], ["t", "x_plus", "x_minus"])
        for t, xp, xm in chart.generating_curve():
            w.row(t, xp, xm)
        w.close()
        return EXIT_OK
    if isinstance(chart, (surfaces.SphericalCatenoid, surfaces.HyperbolicCatenoid,
                          surfaces.ParabolicCatenoid)):
        s = np.linspace(-chart.s_max, chart.s_max, 401)
        x1, x3, x4, *_ = chart._curve(s)
        if isinstance(chart, surfaces.ParabolicCatenoid):
            w = CsvWriter(cfg["out"], ["s", "x1", "x4", "x3"])
            for row in zip(s, x1, x4, x3):
                w.row(*row)
        else:
            phi = chart.profile(s)
            w = CsvWriter(cfg["out"], ["s", "x1", "phi", "x3", "x4"])
            for row in zip(s, x1, phi, x3, x4):
                w.row(*row)
        w.close()
        return EXIT_OK
    raise ConfigError("profile needs a catenoid surface")


COMMANDS = {
    "sample": cmd_sample,
    "check": cmd_check,
    "lambda1": cmd_lambda1,
    "sweep": cmd_sweep,
    "critical": cmd_critical,
    "conjugacy": cmd_conjugacy,
    "profile": cmd_profile,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hypermin",
        description="Minimal helicoids and catenoids in hyperbolic 3-space: "
                    "geometry export and Jacobi-operator stability analysis.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--surface", choices=["helicoid", "cat-spherical",
                                             "cat-hyperbolic", "cat-parabolic",
                                             "cat-ball"])
        p.add_argument("--a", type=float)
        p.add_argument("--atilde", type=float)
        p.add_argument("--abar", type=float)
        p.add_argument("--model", choices=list(MODELS))
        p.add_argument("--domain", help="u0,u1,v0,v1")
        p.add_argument("--grid", help="Nu,Nv")
        p.add_argument("--spacing", type=float)
        p.add_argument("--tol", type=float)
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--format", choices=["obj", "csv", "svg", "json"])
        p.add_argument("--svg", help="write an SVG plot here")
        p.add_argument("--bracket", help="lo,hi")
        p.add_argument("--bisect-tol", dest="bisect_tol", type=float)
        p.add_argument("--a-values", dest="a_values", help="comma list of pitches")
        p.add_argument("--ks", type=lambda s: _parse_floats(s),
                       help="comma list of domain half-widths")
        p.add_argument("--rulings", type=int)
        p.add_argument("--samples", type=int)
        p.add_argument("--config", help="flat JSON config file")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = merge_config(args)
        return COMMANDS[args.command](cfg)
    except (ConfigError, GeometryError) as exc:
        _progress(f"error: {exc}")
        return EXIT_CONFIG
    except SolverError as exc:
        _progress(f"solver error: {exc}")
        return EXIT_SOLVER


def run():
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())
