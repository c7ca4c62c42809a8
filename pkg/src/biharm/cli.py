"""Command-line front end: single solves, convergence studies and
mesh-quality certification.

Studies are parameterized by a JSON config file and/or flags (flags
win).  Artifacts are CSV files in the analysis schema, OBJ meshes and a
hand-rolled SVG loglog plot; identical inputs produce byte-identical
outputs.  Exit codes: 0 ok, 2 usage or config error, 3 numerical
failure, 4 acceptance-gate failure in ``converge --check``.
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from .analysis import (certify_quality, fit_quality_rates, run_study,
                       write_quality_csv, write_rates_csv, write_report_csv,
                       lantern_highres_reference, ErrorRecord)
from .biharmonic import (solve_mixed_closed, solve_mixed_dirichlet,
                         solve_mixed_lumped_schur)
from .fem import interpolate
from .linalg import NotConvergedError, SingularError
from .mesh import MeshError, max_edge_length, read_obj, write_obj
from .surfaces import (cap_case, cap_family, cylinder_case, sphere_case,
                       gen_cap_mesh, gen_icosphere, gen_schwarz_lantern,
                       lantern_family, real_harmonic, sphere_family)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_GATE = 4


class ConfigError(Exception):
    """Invalid configuration, flags or input files."""


_COMMON_FIELDS = {"case", "mass_mode", "tol", "quad_order", "out"}
_CASE_FIELDS = {
    "cap": {"theta0", "ring_levels", "R"},
    "sphere": {"l", "m", "subdiv_levels", "R"},
    "lantern": {"coupling", "n_levels", "R", "H", "reference"},
}
_LEVEL_FIELD = {"cap": "ring_levels", "sphere": "subdiv_levels",
                "lantern": "n_levels"}

_DEFAULTS = {
    "theta0": math.pi / 3.0,
    "ring_levels": [8, 16, 32, 64],
    "l": 2,
    "m": 0,
    "subdiv_levels": [2, 3, 4, 5],
    "coupling": "linear",
    "n_levels": [8, 16, 32, 64],
    "R": 1.0,
    "H": 2.0,
    "mass_mode": "consistent",
    "tol": 1e-10,
    "quad_order": 4,
    "out": "out",
    "reference": "manufactured",
}

# Slope gates mirroring the convergence acceptance bands; checked by
# `converge --check`.
_GATES = {
    "cap": [("l2_u1", ">=", 0.85), ("h1_u1", ">=", 0.60),
            ("l2_u2", ">=", 0.40)],
    "sphere": [("l2_u1", ">=", 1.8), ("l2_u2", ">=", 1.8),
               ("h1_u1", ">=", 0.9)],
    "lantern-linear": [("l2_u2", ">=", 0.4), ("l2_u1", ">=", 0.85)],
    "lantern-quadratic": [("l2_u2", "<=", 0.25), ("epsilon", "<=", 0.3)],
}


class StudyConfig:
    """Validated study parameters merged from defaults, JSON and flags."""

    def __init__(self, values):
        self.values = values

    def __getitem__(self, key):
        return self.values[key]

    @property
    def case_kind(self):
        return self.values.get("case")

    def levels(self):
        return self.values[_LEVEL_FIELD[self.case_kind]]

    def family(self):
        kind = self.case_kind
        v = self.values
        if kind == "cap":
            return cap_family(v["theta0"], v["ring_levels"], v["R"])
        if kind == "sphere":
            return sphere_family(v["l"], v["m"], v["subdiv_levels"], v["R"])
        if kind == "lantern":
            return lantern_family(v["coupling"], v["n_levels"], v["R"],
                                  v["H"])
        raise ConfigError(f"unknown case kind {kind!r}")

    def single_case(self):
        kind = self.case_kind
        v = self.values
        if kind == "cap":
            return cap_case(v["R"], v["theta0"])
        if kind == "sphere":
            return sphere_case(v["R"], v["l"], v["m"])
        if kind == "lantern":
            return cylinder_case(v["R"], v["H"])
        raise ConfigError(f"unknown case kind {kind!r}")

    def build_single(self, n):
        kind = self.case_kind
        v = self.values
        if kind == "cap":
            return gen_cap_mesh(v["theta0"], n, v["R"])
        if kind == "sphere":
            return gen_icosphere(n, v["R"])
        if kind == "lantern":
            m = 2 * n if v["coupling"] == "linear" else n * n
            return gen_schwarz_lantern(m, n, v["R"], v["H"])
        raise ConfigError(f"unknown case kind {kind!r}")


def _load_config(args):
    """Merge defaults, JSON config file and explicit flags."""
    provided = {}
    if getattr(args, "config", None):
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {args.config}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {args.config}: {exc}")
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        known = (_COMMON_FIELDS | {"reference"}
                 | set().union(*_CASE_FIELDS.values())
                 | set(_LEVEL_FIELD.values()))
        for key in data:
            if key not in known:
                raise ConfigError(f"unknown config field {key!r}")
        provided.update(data)

    flag_map = {
        "case": "case", "theta0": "theta0", "l": "l", "m": "m",
        "coupling": "coupling", "R": "R", "H": "H", "mass": "mass_mode",
        "tol": "tol", "quad": "quad_order", "out": "out",
        "reference": "reference",
    }
    for flag, field in flag_map.items():
        value = getattr(args, flag, None)
        if value is not None:
            provided[field] = value
    if getattr(args, "levels", None) is not None:
        case = provided.get("case")
        if case not in _LEVEL_FIELD:
            raise ConfigError("--levels requires --case")
        provided[_LEVEL_FIELD[case]] = args.levels

    case = provided.get("case")
    if case is not None:
        if case not in _CASE_FIELDS:
            raise ConfigError(f"unknown case {case!r}")
        allowed = _COMMON_FIELDS | _CASE_FIELDS[case]
        for key in provided:
            if key not in allowed:
                raise ConfigError(
                    f"field {key!r} does not apply to case {case!r}")

    values = dict(_DEFAULTS)
    values["case"] = None
    values.update(provided)
    _validate(values)
    return StudyConfig(values)


def _validate(values):
    tol = values["tol"]
    if not 0.0 < tol <= 1e-4:
        raise ConfigError(f"tol must lie in (0, 1e-4], got {tol}")
    if values["quad_order"] not in (2, 4):
        raise ConfigError(f"quad_order must be 2 or 4, "
                          f"got {values['quad_order']}")
    if values["mass_mode"] not in ("consistent", "lumped"):
        raise ConfigError(f"mass_mode must be consistent or lumped, "
                          f"got {values['mass_mode']!r}")
    if values["coupling"] not in ("linear", "quadratic"):
        raise ConfigError(f"coupling must be linear or quadratic, "
                          f"got {values['coupling']!r}")
    if values["reference"] not in ("manufactured", "highres"):
        raise ConfigError(f"reference must be manufactured or highres, "
                          f"got {values['reference']!r}")
    for field in _LEVEL_FIELD.values():
        levels = values[field]
        if (not isinstance(levels, (list, tuple)) or
                not all(isinstance(v, int) and v >= 0 for v in levels)):
            raise ConfigError(f"{field} must be a list of nonnegative "
                              f"integers, got {levels!r}")


def _require_levels(cfg):
    levels = cfg.levels()
    if len(levels) < 3:
        raise ConfigError(
            f"converge needs at least 3 levels, got {list(levels)}")
    return levels


def _parse_levels(text):
    try:
        return [int(tok) for tok in text.split(",") if tok]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"levels must be comma-separated integers, got {text!r}")


def _thread_count(n_levels):
    raw = os.environ.get("BIHARM_THREADS", "1")
    try:
        threads = max(1, int(raw))
    except ValueError:
        raise ConfigError(f"BIHARM_THREADS must be an integer, got {raw!r}")
    return min(threads, n_levels)


def _rhs_field(text, mesh):
    kind, _, rest = text.partition(":")
    if kind == "const":
        try:
            return np.full(mesh.n_vertices, float(rest))
        except ValueError:
            raise ConfigError(f"bad constant right-hand side {text!r}")
    if kind == "harmonic":
        try:
            l_str, m_str = rest.split(",")
            degree, order = int(l_str), int(m_str)
        except ValueError:
            raise ConfigError(
                f"harmonic right-hand side must be harmonic:l,m, "
                f"got {text!r}")
        return interpolate(mesh, real_harmonic(degree, order))
    raise ConfigError(
        f"right-hand side must be const:VALUE or harmonic:l,m, got {text!r}")


def _fmt(x):
    return f"{x:.12g}"


def _write_solution_csv(path, u1, u2):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("vertex,u1,u2\n")
        for i in range(u1.shape[0]):
            fh.write(f"{i},{_fmt(u1[i])},{_fmt(u2[i])}\n")


def read_solution_csv(path):
    """Parse a solution CSV back into (u1, u2) arrays."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "vertex,u1,u2":
            raise ValueError(f"unexpected solution header {header!r}")
        for line in fh:
            _, a, b = line.split(",")
            rows.append((float(a), float(b)))
    arr = np.asarray(rows)
    return arr[:, 0], arr[:, 1]


# ---------------------------------------------------------------------------
# SVG loglog plot

_SERIES_STYLE = [("l2_u1", "#1f77b4"), ("h1_u1", "#2ca02c"),
                 ("l2_u2", "#d62728")]


def _svg_loglog(path, report, guide_slopes):
    """Hand-rolled SVG 1.1 loglog plot: error vs h, one polyline per
    norm, dashed reference-slope guide lines."""
    width, height = 640, 480
    left, right, top, bottom = 70, 150, 20, 50
    hs = [r.h for r in report.records]
    series = {name: [getattr(r, name) for r in report.records]
              for name, _ in _SERIES_STYLE}
    all_vals = [v for vals in series.values() for v in vals if v > 0]
    lx = [math.log10(h) for h in hs]
    ly = [math.log10(v) for v in all_vals]
    x0, x1 = min(lx), max(lx)
    y0, y1 = min(ly), max(ly)
    x0 -= 0.05 * (x1 - x0 + 1e-9)
    x1 += 0.05 * (x1 - x0 + 1e-9)
    y0 -= 0.6
    y1 += 0.3

    def sx(logh):
        return left + (logh - x0) / (x1 - x0) * (width - left - right)

    def sy(logv):
        return height - bottom - (logv - y0) / (y1 - y0) * (
            height - top - bottom)

    parts = []
    parts.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">')
    parts.append(f'<rect x="0" y="0" width="{width}" height="{height}" '
                 f'fill="white"/>')
    parts.append(f'<rect x="{left}" y="{top}" '
                 f'width="{width - left - right}" '
                 f'height="{height - top - bottom}" fill="none" '
                 f'stroke="black" stroke-width="1"/>')

    for p in range(math.floor(x0), math.ceil(x1) + 1):
        if x0 <= p <= x1:
            x = sx(p)
            parts.append(f'<line x1="{x:.2f}" y1="{top}" x2="{x:.2f}" '
                         f'y2="{height - bottom}" stroke="#dddddd" '
                         f'stroke-width="1"/>')
            parts.append(f'<text x="{x:.2f}" y="{height - bottom + 18}" '
                         f'font-size="12" text-anchor="middle" '
                         f'font-family="sans-serif">1e{p}</text>')
    for p in range(math.floor(y0), math.ceil(y1) + 1):
        if y0 <= p <= y1:
            y = sy(p)
            parts.append(f'<line x1="{left}" y1="{y:.2f}" '
                         f'x2="{width - right}" y2="{y:.2f}" '
                         f'stroke="#dddddd" stroke-width="1"/>')
            parts.append(f'<text x="{left - 8}" y="{y + 4:.2f}" '
                         f'font-size="12" text-anchor="end" '
                         f'font-family="sans-serif">1e{p}</text>')
    parts.append(f'<text x="{(left + width - right) / 2:.2f}" '
                 f'y="{height - 12}" font-size="13" text-anchor="middle" '
                 f'font-family="sans-serif">mesh size h</text>')

    # Guide lines anchored below the smallest finest-level error.
    lh_min, lh_max = min(lx), max(lx)
    finest = min(range(len(hs)), key=lambda i: hs[i])
    anchor_v = min(series[name][finest] for name, _ in _SERIES_STYLE
                   if series[name][finest] > 0)
    anchor = math.log10(anchor_v) - 0.4
    for slope in guide_slopes:
        ya = anchor
        yb = anchor + slope * (lh_max - lh_min)
        parts.append(f'<line x1="{sx(lh_min):.2f}" y1="{sy(ya):.2f}" '
                     f'x2="{sx(lh_max):.2f}" y2="{sy(yb):.2f}" '
                     f'stroke="#888888" stroke-width="1" '
                     f'stroke-dasharray="6,4"/>')
        parts.append(f'<text x="{sx(lh_max) + 4:.2f}" y="{sy(yb):.2f}" '
                     f'font-size="11" fill="#666666" '
                     f'font-family="sans-serif">slope {slope:g}</text>')

    for idx, (name, color) in enumerate(_SERIES_STYLE):
        vals = series[name]
        pts = " ".join(f"{sx(math.log10(h)):.2f},{sy(math.log10(v)):.2f}"
                       for h, v in zip(hs, vals) if v > 0)
        parts.append(f'<polyline points="{pts}" fill="none" '
                     f'stroke="{color}" stroke-width="2"/>')
        for h, v in zip(hs, vals):
            if v > 0:
                parts.append(f'<circle cx="{sx(math.log10(h)):.2f}" '
                             f'cy="{sy(math.log10(v)):.2f}" r="3" '
                             f'fill="{color}"/>')
        lyy = top + 16 + 18 * idx
        lxx = width - right + 14
        parts.append(f'<line x1="{lxx}" y1="{lyy - 4}" x2="{lxx + 24}" '
                     f'y2="{lyy - 4}" stroke="{color}" stroke-width="2"/>')
        slope = report.rates[name].slope
        parts.append(f'<text x="{lxx + 30}" y="{lyy}" font-size="12" '
                     f'font-family="sans-serif">{name} '
                     f'(slope {slope:.2f})</text>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(parts) + "\n")


# ---------------------------------------------------------------------------
# Subcommands

def cmd_solve(args):
    cfg = _load_config(args)
    if args.mesh is not None:
        if not os.path.exists(args.mesh):
            raise ConfigError(f"mesh file not found: {args.mesh}")
        mesh = read_obj(args.mesh)
        case = None
    elif cfg.case_kind is not None:
        n = args.n if args.n is not None else {"cap": 16, "sphere": 3,
                                               "lantern": 16}[cfg.case_kind]
        mesh = cfg.build_single(n)
        case = cfg.single_case()
    else:
        raise ConfigError("solve needs --mesh FILE or --case KIND")

    if args.rhs is not None:
        f = _rhs_field(args.rhs, mesh)
    elif case is not None:
        f = interpolate(mesh, case.exact_f)
    else:
        raise ConfigError("solve with --mesh needs --rhs const:VALUE or "
                          "harmonic:l,m")

    if mesh.is_closed:
        if cfg["mass_mode"] == "lumped":
            raise ConfigError(
                "the lumped elimination path needs a bounded mesh")
        sol = solve_mixed_closed(mesh, f, tol=cfg["tol"])
    elif cfg["mass_mode"] == "lumped":
        sol = solve_mixed_lumped_schur(mesh, f, tol=cfg["tol"])
    else:
        sol = solve_mixed_dirichlet(mesh, f, tol=cfg["tol"])

    out = cfg["out"]
    os.makedirs(out, exist_ok=True)
    _write_solution_csv(os.path.join(out, "solution.csv"), sol.u1, sol.u2)
    if args.write_mesh:
        write_obj(mesh, os.path.join(out, "mesh.obj"))
    print(f"solved {mesh.n_vertices} dofs "
          f"(residual {sol.solve_report.relative_residual:.2e}); "
          f"max|u1| = {np.abs(sol.u1).max():.6g}, "
          f"max|u2| = {np.abs(sol.u2).max():.6g}")
    print(f"wrote {os.path.join(out, 'solution.csv')}")
    return EXIT_OK


def cmd_converge(args):
    cfg = _load_config(args)
    if cfg.case_kind is None:
        raise ConfigError("converge needs --case KIND (or a config file)")
    levels = _require_levels(cfg)
    family = cfg.family()
    if cfg.case_kind == "lantern" and cfg["reference"] == "highres":
        ref = lantern_highres_reference(cfg["R"], cfg["H"],
                                        n_ref=2 * max(levels),
                                        tol=cfg["tol"])
        family = family.with_case(ref, label=family.label + "-highres")
    report = run_study(family, tol=cfg["tol"], quad_order=cfg["quad_order"],
                       mass_mode=cfg["mass_mode"],
                       threads=_thread_count(len(levels)))

    out = cfg["out"]
    os.makedirs(out, exist_ok=True)
    write_report_csv(os.path.join(out, "report.csv"), report.records)
    write_rates_csv(os.path.join(out, "rates.csv"), report)
    guides = [2.0] if cfg.case_kind == "sphere" else [1.0, 0.75, 0.5]
    _svg_loglog(os.path.join(out, "plot.svg"), report, guides)

    print(f"case {report.case}: {len(report.records)} levels, "
          f"dofs {report.records[0].dofs}..{report.records[-1].dofs}")
    for name in ("l2_u1", "h1_u1", "l2_u2", "gamma", "epsilon"):
        fit = report.rates[name]
        print(f"  {name:8s} slope {fit.slope:6.3f}  "
              f"(fit residual {fit.residual:.3f})")
    print(f"  sigma estimate {report.sigma_estimate:.3f}")
    print(f"wrote report.csv, rates.csv, plot.svg in {out}")

    if args.check:
        gate_key = report.case
        if gate_key.endswith("-highres"):
            gate_key = gate_key[:-len("-highres")]
        gates = _GATES.get(gate_key)
        if gates is None:
            raise ConfigError(f"no acceptance gate defined for "
                              f"case {report.case!r}")
        failures = []
        for name, op, bound in gates:
            slope = report.rates[name].slope
            ok = slope >= bound if op == ">=" else slope <= bound
            if not ok:
                failures.append(f"{name} slope {slope:.3f} not {op} {bound}")
        if failures:
            for msg in failures:
                print(f"gate failure: {msg}", file=sys.stderr)
            return EXIT_GATE
        print("acceptance gate passed")
    return EXIT_OK


def cmd_quality(args):
    cfg = _load_config(args)
    quad = cfg["quad_order"]
    out = cfg["out"]
    if args.mesh is not None:
        if not os.path.exists(args.mesh):
            raise ConfigError(f"mesh file not found: {args.mesh}")
        if cfg.case_kind is None:
            raise ConfigError("quality on an OBJ mesh needs --case KIND")
        mesh = read_obj(args.mesh)
        case = cfg.single_case()
        q = certify_quality(mesh, case, quad)
        records = [ErrorRecord(cfg.case_kind, 0, max_edge_length(mesh),
                               mesh.n_vertices, 0.0, 0.0, 0.0, q)]
    elif cfg.case_kind is not None:
        family = cfg.family()
        records = []
        for level, mesh in family.meshes():
            q = certify_quality(mesh, family.case, quad)
            records.append(ErrorRecord(family.label, level,
                                       max_edge_length(mesh),
                                       mesh.n_vertices, 0.0, 0.0, 0.0, q))
    else:
        raise ConfigError("quality needs --mesh FILE or --case KIND")

    os.makedirs(out, exist_ok=True)
    write_quality_csv(os.path.join(out, "quality.csv"), records)
    for r in records:
        q = r.quality
        print(f"level {r.level}: h = {r.h:.4g}, kappa_min = "
              f"{q.kappa_min:.4f}, K_max = {q.K_max:.4f}, max_dist = "
              f"{q.max_distance:.3e}, max_normal_angle = "
              f"{q.max_normal_angle:.3e}")
    if len(records) >= 3:
        fits = fit_quality_rates([r.h for r in records],
                                 [r.quality for r in records])
        print(f"  gamma estimate {fits['gamma'].slope:.3f}, "
              f"epsilon estimate {fits['epsilon'].slope:.3f}, "
              f"sigma estimate {fits['sigma']:.3f}")
        if fits["sigma"] < 1.5:
            print(f"warning: sigma estimate {fits['sigma']:.3f} below 3/2; "
                  f"surface approximation conditions fail", file=sys.stderr)
    print(f"wrote quality.csv in {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------

def _build_parser():
    parser = argparse.ArgumentParser(
        prog="biharm",
        description="Mixed finite elements for the biharmonic equation "
                    "on triangulated surfaces")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_levels):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--case", choices=["cap", "sphere", "lantern"])
        if with_levels:
            p.add_argument("--levels", type=_parse_levels,
                           help="comma-separated generator parameters, "
                                "e.g. 8,16,32,64")
        p.add_argument("--theta0", type=float,
                       help="cap opening angle (radians)")
        p.add_argument("--l", type=int, help="harmonic degree (sphere)")
        p.add_argument("--m", type=int, help="harmonic order (sphere)")
        p.add_argument("--coupling", choices=["linear", "quadratic"],
                       help="lantern equatorial count: m = 2n or m = n^2")
        p.add_argument("--R", type=float, help="radius")
        p.add_argument("--H", type=float, help="cylinder height (lantern)")
        p.add_argument("--mass", choices=["consistent", "lumped"])
        p.add_argument("--tol", type=float)
        p.add_argument("--quad", type=int, choices=[2, 4])
        p.add_argument("--out", help="output directory")

    p_solve = sub.add_parser("solve", help="solve one problem instance")
    add_common(p_solve, with_levels=False)
    p_solve.add_argument("--mesh", help="input OBJ mesh")
    p_solve.add_argument("--n", type=int,
                         help="generator resolution (rings, subdivisions "
                              "or axial count)")
    p_solve.add_argument("--rhs",
                         help="right-hand side const:VALUE or harmonic:l,m")
    p_solve.add_argument("--write-mesh", action="store_true",
                         help="also write the mesh as mesh.obj")
    p_solve.set_defaults(func=cmd_solve)

    p_conv = sub.add_parser("converge", help="run a convergence study")
    add_common(p_conv, with_levels=True)
    p_conv.add_argument("--reference", choices=["manufactured", "highres"],
                        help="lantern error reference (default "
                             "manufactured)")
    p_conv.add_argument("--check", action="store_true",
                        help="exit 4 unless fitted slopes pass the "
                             "acceptance gate")
    p_conv.set_defaults(func=cmd_converge)

    p_qual = sub.add_parser("quality",
                            help="certify mesh quality across levels")
    add_common(p_qual, with_levels=True)
    p_qual.add_argument("--mesh", help="certify a single OBJ mesh")
    p_qual.set_defaults(func=cmd_quality)
    return parser


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (MeshError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NotConvergedError, SingularError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
