"""Error norms, mesh-quality certification and convergence-rate fits.

Errors are computed in the mesh metric against the pulled-back exact
solution u composed with the closest-point map, using symmetric triangle
quadrature of order 2 or 4 (order 4 by default: order 2 under-reports
the u2 error on coarse meshes because the discrete u2 is close to an L2
projection, which order-2 points cannot distinguish from the exact
field).

Quality certification covers the shape-regularity ratios kappa and K,
the maximal distance of quadrature points to the surface, and the
maximal angle between face normals and surface normals; rate fits
additionally estimate the decay exponents gamma (distance) and epsilon
(normals) with sigma = min(gamma, 2 epsilon).
"""

import csv
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .biharmonic import (solve_mixed_closed, solve_mixed_dirichlet,
                         solve_mixed_lumped_schur)
from .fem import interpolate, p1_gradients
from .mesh import circumradius_ratios, inradius_ratios, max_edge_length
from .surfaces import SurfaceCase, cylinder_case, gen_schwarz_lantern


class InsufficientLevelsError(ValueError):
    """Rate fitting needs at least three refinement levels."""


# Symmetric quadrature rules on the reference triangle in barycentric
# coordinates; weights sum to 1 (multiply by the triangle area).
_QUAD_RULES = {
    2: (np.array([[0.5, 0.5, 0.0],
                  [0.0, 0.5, 0.5],
                  [0.5, 0.0, 0.5]]),
        np.array([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0])),
    4: (np.array([[0.108103018168070, 0.445948490915965, 0.445948490915965],
                  [0.445948490915965, 0.108103018168070, 0.445948490915965],
                  [0.445948490915965, 0.445948490915965, 0.108103018168070],
                  [0.816847572980459, 0.091576213509771, 0.091576213509771],
                  [0.091576213509771, 0.816847572980459, 0.091576213509771],
                  [0.091576213509771, 0.091576213509771, 0.816847572980459]]),
        np.array([0.223381589678011, 0.223381589678011, 0.223381589678011,
                  0.109951743655322, 0.109951743655322, 0.109951743655322])),
}


def triangle_quadrature(order):
    """Barycentric points and weights of a symmetric triangle rule.

    Parameters
    ----------
    order : {2, 4}
        Highest polynomial degree integrated exactly.

    Returns
    -------
    points : ndarray, shape (q, 3)
    weights : ndarray, shape (q,)
        Weights sum to 1; scale by the triangle area to integrate.
    """
    if order not in _QUAD_RULES:
        raise ValueError(f"quadrature order must be 2 or 4, got {order}")
    pts, w = _QUAD_RULES[order]
    return pts.copy(), w.copy()


def _quad_points(mesh, order):
    """Ambient quadrature points per face, shape (F, q, 3), and weights."""
    bary, w = _QUAD_RULES[order]
    corners = mesh.vertices[mesh.faces]          # (F, 3, 3)
    pts = np.einsum("qk,fkd->fqd", bary, corners)
    return pts, w


class QualityRecord:
    """Mesh-quality summary for one mesh against its surface.

    Attributes
    ----------
    kappa_min : float
        Minimum of inradius / longest edge over faces (shape
        regularity; equilateral triangles attain 1/(2 sqrt 3)).
    K_max : float
        Maximum of circumradius / longest edge over faces.
    max_distance : float
        Largest distance of a quadrature point to the surface.
    max_normal_angle : float
        Largest angle (radians) between a face normal and the surface
        normal at the projected face centroid.
    sigma_estimate : float or None
        Family-level min(gamma, 2 epsilon); filled by rate fitting.
    """

    def __init__(self, kappa_min, K_max, max_distance, max_normal_angle,
                 sigma_estimate=None):
        self.kappa_min = float(kappa_min)
        self.K_max = float(K_max)
        self.max_distance = float(max_distance)
        self.max_normal_angle = float(max_normal_angle)
        self.sigma_estimate = sigma_estimate


class ErrorRecord:
    """Errors and quality of one refinement level."""

    def __init__(self, case, level, h, dofs, l2_u1, h1_u1, l2_u2, quality):
        self.case = str(case)
        self.level = int(level)
        self.h = float(h)
        self.dofs = int(dofs)
        self.l2_u1 = float(l2_u1)
        self.h1_u1 = float(h1_u1)
        self.l2_u2 = float(l2_u2)
        self.quality = quality


class RateFit:
    """Least-squares slope of log(value) against log(h)."""

    def __init__(self, slope, residual):
        self.slope = float(slope)
        self.residual = float(residual)

    def __repr__(self):
        return f"RateFit(slope={self.slope:.3f}, residual={self.residual:.3f})"


class ConvergenceReport:
    """Per-level records plus fitted convergence rates.

    ``rates`` maps "l2_u1", "h1_u1", "l2_u2", "gamma" and "epsilon" to
    :class:`RateFit`; ``sigma_estimate`` is min(gamma, 2 epsilon).
    """

    def __init__(self, case, records, rates, sigma_estimate):
        self.case = case
        self.records = list(records)
        self.rates = rates
        self.sigma_estimate = sigma_estimate


def l2_error(mesh, u_h, case, quad_order=4, reference="u"):
    """L2 distance between a nodal field and the pulled-back exact field.

    Integrates (u_h - u_exact(closest_point(x)))^2 over the mesh with
    symmetric triangle quadrature.

    Parameters
    ----------
    mesh : TriMesh
    u_h : ndarray, shape (n,)
    case : SurfaceCase
    quad_order : {2, 4}
    reference : {"u", "lap_u"}
        Compare against exact_u (default) or exact_lap_u.

    Returns
    -------
    float
    """
    if quad_order not in _QUAD_RULES:
        raise ValueError(f"quadrature order must be 2 or 4, got {quad_order}")
    u_h = np.asarray(u_h, dtype=float)
    if u_h.shape != (mesh.n_vertices,):
        raise ValueError(
            f"field shape {u_h.shape} does not match vertex count "
            f"{mesh.n_vertices}")
    exact = {"u": case.exact_u, "lap_u": case.exact_lap_u}[reference]
    bary, w = _QUAD_RULES[quad_order]
    pts, _ = _quad_points(mesh, quad_order)
    flat = pts.reshape(-1, 3)
    vals_exact = np.asarray(exact(case.closest_point(flat)))
    vals_exact = vals_exact.reshape(pts.shape[0], -1)
    vals_h = np.einsum("qk,fk->fq", bary, u_h[mesh.faces])
    sq = np.sum((vals_h - vals_exact) ** 2 * w[None, :], axis=1)
    return float(np.sqrt(np.sum(mesh.face_areas * sq)))


def h1_error(mesh, u_h, case, quad_order=4):
    """L2 distance between the mesh gradient and the exact gradient.

    The per-face constant gradient of u_h is compared against the exact
    surface gradient at the projected quadrature points, with the exact
    gradient projected onto the face plane.
    """
    if quad_order not in _QUAD_RULES:
        raise ValueError(f"quadrature order must be 2 or 4, got {quad_order}")
    grads = p1_gradients(mesh, u_h)                   # (F, 3)
    pts, w = _quad_points(mesh, quad_order)
    flat = pts.reshape(-1, 3)
    g_exact = np.asarray(case.exact_grad_u(case.closest_point(flat)))
    g_exact = g_exact.reshape(pts.shape[0], -1, 3)    # (F, q, 3)
    normals = mesh.face_normals
    g_tan = g_exact - np.einsum("fqd,fd->fq", g_exact,
                                normals)[:, :, None] * normals[:, None, :]
    diff = grads[:, None, :] - g_tan
    sq = np.sum(np.sum(diff**2, axis=2) * w[None, :], axis=1)
    return float(np.sqrt(np.sum(mesh.face_areas * sq)))


def certify_quality(mesh, case, quad_order=4):
    """Shape-regularity and surface-approximation quality of one mesh.

    Returns
    -------
    QualityRecord
        kappa/K extrema over faces, the maximal quadrature-point
        distance to the surface, and the maximal face-normal deviation
        from the surface normal at the projected centroid.
    """
    if quad_order not in _QUAD_RULES:
        raise ValueError(f"quadrature order must be 2 or 4, got {quad_order}")
    kappa_min = float(inradius_ratios(mesh).min())
    k_max = float(circumradius_ratios(mesh).max())
    pts, _ = _quad_points(mesh, quad_order)
    flat = pts.reshape(-1, 3)
    dist = np.linalg.norm(flat - case.closest_point(flat), axis=1)
    centroids = mesh.vertices[mesh.faces].mean(axis=1)
    surf_normals = case.normal_at(case.closest_point(centroids))
    dots = np.clip(np.einsum("fd,fd->f", mesh.face_normals, surf_normals),
                   -1.0, 1.0)
    angle = float(np.arccos(dots).max())
    return QualityRecord(kappa_min, k_max, float(dist.max()), angle)


def _fit_loglog(h, values, n_fit):
    """Slope and RMS residual of log(values) vs log(h), finest n_fit."""
    h = np.asarray(h, dtype=float)[-n_fit:]
    v = np.maximum(np.asarray(values, dtype=float)[-n_fit:], 1e-300)
    logs_h = np.log(h)
    logs_v = np.log(v)
    coeffs = np.polyfit(logs_h, logs_v, 1)
    fitted = np.polyval(coeffs, logs_h)
    rms = float(np.sqrt(np.mean((logs_v - fitted) ** 2)))
    return RateFit(float(coeffs[0]), rms)


def fit_rates(records, case=""):
    """Fit convergence rates across a refinement family.

    The fit uses the finest ceil(levels/2) + 1 records (coarse
    preasymptotic levels pollute the slope).  Besides the three error
    norms, the decay exponents gamma of max_distance and epsilon of
    max_normal_angle are fitted, and sigma = min(gamma, 2 epsilon)
    summarizes the surface-approximation quality.

    Parameters
    ----------
    records : sequence of ErrorRecord
        At least three, with distinct mesh sizes.
    case : str
        Case descriptor for the report.

    Returns
    -------
    ConvergenceReport
    """
    records = sorted(records, key=lambda r: -r.h)
    n = len(records)
    if n < 3:
        raise InsufficientLevelsError(
            f"rate fitting needs >= 3 levels, got {n}")
    hs = [r.h for r in records]
    if len(set(hs)) != n:
        raise InsufficientLevelsError("mesh sizes h must be distinct")
    n_fit = min(n, math.ceil(n / 2) + 1)
    rates = {
        "l2_u1": _fit_loglog(hs, [r.l2_u1 for r in records], n_fit),
        "h1_u1": _fit_loglog(hs, [r.h1_u1 for r in records], n_fit),
        "l2_u2": _fit_loglog(hs, [r.l2_u2 for r in records], n_fit),
        "gamma": _fit_loglog(hs, [r.quality.max_distance for r in records],
                             n_fit),
        "epsilon": _fit_loglog(
            hs, [r.quality.max_normal_angle for r in records], n_fit),
    }
    sigma = min(rates["gamma"].slope, 2.0 * rates["epsilon"].slope)
    if not case and records:
        case = records[0].case
    return ConvergenceReport(case, records, rates, sigma)


def fit_quality_rates(hs, qualities):
    """Fit gamma/epsilon decay exponents from quality records alone.

    Same finest-subset rule as :func:`fit_rates`.  Returns a dict with
    RateFit entries "gamma" and "epsilon" plus the scalar
    sigma = min(gamma, 2 epsilon).
    """
    n = len(hs)
    if n < 3:
        raise InsufficientLevelsError(
            f"rate fitting needs >= 3 levels, got {n}")
    order = np.argsort(hs)[::-1]
    hs = [hs[i] for i in order]
    qualities = [qualities[i] for i in order]
    n_fit = min(n, math.ceil(n / 2) + 1)
    gamma = _fit_loglog(hs, [q.max_distance for q in qualities], n_fit)
    epsilon = _fit_loglog(hs, [q.max_normal_angle for q in qualities], n_fit)
    sigma = min(gamma.slope, 2.0 * epsilon.slope)
    return {"gamma": gamma, "epsilon": epsilon, "sigma": sigma}


def _solve_for_study(mesh, case, tol, mass_mode):
    f = interpolate(mesh, case.exact_f)
    if mesh.is_closed:
        return solve_mixed_closed(mesh, f, tol=tol)
    if mass_mode == "lumped":
        return solve_mixed_lumped_schur(mesh, f, tol=tol)
    return solve_mixed_dirichlet(mesh, f, tol=tol)


def run_level(family, level, tol=1e-10, quad_order=4,
              mass_mode="consistent"):
    """Solve one refinement level and collect its ErrorRecord."""
    mesh = family.build(level)
    case = family.case
    sol = _solve_for_study(mesh, case, tol, mass_mode)
    quality = certify_quality(mesh, case, quad_order)
    return ErrorRecord(
        family.label, level, max_edge_length(mesh), mesh.n_vertices,
        l2_error(mesh, sol.u1, case, quad_order),
        h1_error(mesh, sol.u1, case, quad_order),
        l2_error(mesh, sol.u2, case, quad_order, reference="lap_u"),
        quality)


def run_study(family, tol=1e-10, quad_order=4, mass_mode="consistent",
              threads=1):
    """Run a full convergence study over a refinement family.

    Levels may be solved concurrently (``threads`` > 1); records are
    always assembled in level order, so results are deterministic.

    Returns
    -------
    ConvergenceReport
    """
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(run_level, family, lv, tol, quad_order,
                                   mass_mode)
                       for lv in family.levels]
            records = [fut.result() for fut in futures]
    else:
        records = [run_level(family, lv, tol, quad_order, mass_mode)
                   for lv in family.levels]
    hs = [r.h for r in records]
    if any(b >= a for a, b in zip(hs, hs[1:])):
        raise ValueError(
            f"refinement family h values not strictly decreasing: {hs}")
    return fit_rates(records, family.label)


# ---------------------------------------------------------------------------
# CSV serialization (12 significant digits, stable layout)

REPORT_HEADER = ("case,level,h,dofs,l2_u1,h1_u1,l2_u2,"
                 "kappa_min,K_max,max_dist,max_normal_angle")
QUALITY_HEADER = "case,level,h,dofs,kappa_min,K_max,max_dist,max_normal_angle"
RATES_HEADER = "norm,slope,residual,flag"

# Fitted slopes at or below this value are flagged non-convergent.
NONCONVERGENT_SLOPE = 0.25


def _fmt(x):
    return f"{x:.12g}"


def write_report_csv(path, records):
    """Write per-level error records in the report schema."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(REPORT_HEADER + "\n")
        for r in records:
            q = r.quality
            fields = [r.case, str(r.level), _fmt(r.h), str(r.dofs),
                      _fmt(r.l2_u1), _fmt(r.h1_u1), _fmt(r.l2_u2),
                      _fmt(q.kappa_min), _fmt(q.K_max),
                      _fmt(q.max_distance), _fmt(q.max_normal_angle)]
            fh.write(",".join(fields) + "\n")


def read_report_csv(path):
    """Parse a report CSV back into ErrorRecord objects."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        records = []
        for row in reader:
            quality = QualityRecord(
                float(row["kappa_min"]), float(row["K_max"]),
                float(row["max_dist"]), float(row["max_normal_angle"]))
            records.append(ErrorRecord(
                row["case"], int(row["level"]), float(row["h"]),
                int(row["dofs"]), float(row["l2_u1"]), float(row["h1_u1"]),
                float(row["l2_u2"]), quality))
    return records


def write_quality_csv(path, records):
    """Write per-level quality fields only."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(QUALITY_HEADER + "\n")
        for r in records:
            q = r.quality
            fields = [r.case, str(r.level), _fmt(r.h), str(r.dofs),
                      _fmt(q.kappa_min), _fmt(q.K_max),
                      _fmt(q.max_distance), _fmt(q.max_normal_angle)]
            fh.write(",".join(fields) + "\n")


def read_quality_csv(path):
    """Parse a quality CSV into (case, level, h, dofs, QualityRecord)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        rows = []
        for row in reader:
            quality = QualityRecord(
                float(row["kappa_min"]), float(row["K_max"]),
                float(row["max_dist"]), float(row["max_normal_angle"]))
            rows.append((row["case"], int(row["level"]), float(row["h"]),
                         int(row["dofs"]), quality))
    return rows


def write_rates_csv(path, report):
    """Write fitted rates with a convergence flag per norm.

    Error-norm slopes at or below 0.25 are flagged "non-convergent"; a
    sigma estimate below 3/2 is flagged "warning" (condition on the
    surface-approximation quality fails).
    """
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(RATES_HEADER + "\n")
        for name in ("l2_u1", "h1_u1", "l2_u2"):
            fit = report.rates[name]
            flag = ("non-convergent" if fit.slope <= NONCONVERGENT_SLOPE
                    else "ok")
            fh.write(f"{name},{_fmt(fit.slope)},{_fmt(fit.residual)},"
                     f"{flag}\n")
        for name in ("gamma", "epsilon"):
            fit = report.rates[name]
            fh.write(f"{name},{_fmt(fit.slope)},{_fmt(fit.residual)},ok\n")
        flag = "ok" if report.sigma_estimate >= 1.5 else "warning"
        fh.write(f"sigma,{_fmt(report.sigma_estimate)},,{flag}\n")


def read_rates_csv(path):
    """Parse a rates CSV into {norm: (slope, residual or None, flag)}."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        out = {}
        for row in reader:
            residual = float(row["residual"]) if row["residual"] else None
            out[row["norm"]] = (float(row["slope"]), residual, row["flag"])
    return out


# ---------------------------------------------------------------------------
# High-resolution discrete reference for the lantern experiment

def lantern_highres_reference(radius=1.0, height=2.0, n_ref=128,
                              rhs_value=24.0, tol=1e-10):
    """Cylinder case whose reference fields come from a fine solve.

    Solves the clamped problem with constant right-hand side on a fine
    shape-regular lantern (m = 2 n_ref) and exposes the discrete
    solution, its chart gradient and the discrete u2 as the "exact"
    fields of a new SurfaceCase, interpolated in the unrolled (R phi, z)
    chart.  This mirrors measuring errors against a numerically
    computed high-resolution solution instead of the manufactured one.

    Returns
    -------
    SurfaceCase
        kind "cylinder-highres"; closest-point map and normals are the
        cylinder's.
    """
    base = cylinder_case(radius, height)
    m_ref = 2 * int(n_ref)
    fine = gen_schwarz_lantern(m_ref, n_ref, radius, height)
    f = np.full(fine.n_vertices, float(rhs_value))
    sol = solve_mixed_dirichlet(fine, f, tol=tol)
    a = 0.5 * height

    # Chart coordinates (R*phi, z) of fine-mesh triangles, each face
    # unwrapped so its vertices stay within half a turn of each other.
    phi = np.arctan2(fine.vertices[:, 1], fine.vertices[:, 0])
    tri_phi = phi[fine.faces]                            # (F, 3)
    ref = tri_phi[:, :1]
    tri_phi = tri_phi - np.round((tri_phi - ref) / (2 * np.pi)) * 2 * np.pi
    tri_xy = np.stack([radius * tri_phi, fine.vertices[fine.faces][:, :, 2]],
                      axis=2)                            # (F, 3, 2)
    band_of_face = np.minimum(
        ((tri_xy[:, :, 1].mean(axis=1) + a) / (height / n_ref)).astype(int),
        n_ref - 1)
    faces_by_band = [np.flatnonzero(band_of_face == j) for j in range(n_ref)]

    # Per-face chart gradients of the fine u1, and of u2 for the lap
    # field.  grad = (uB-uA) gB + (uC-uA) gC with gB, gC rows of the
    # inverse edge matrix.
    e1 = tri_xy[:, 1] - tri_xy[:, 0]
    e2 = tri_xy[:, 2] - tri_xy[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    inv = np.empty((tri_xy.shape[0], 2, 2))
    inv[:, 0, 0] = e2[:, 1] / det
    inv[:, 0, 1] = -e2[:, 0] / det
    inv[:, 1, 0] = -e1[:, 1] / det
    inv[:, 1, 1] = e1[:, 0] / det
    du1 = sol.u1[fine.faces]
    grad_u1 = np.einsum("fij,fi->fj", inv,
                        np.stack([du1[:, 1] - du1[:, 0],
                                  du1[:, 2] - du1[:, 0]], axis=1))

    def _locate(points):
        """Barycentric location of chart points in the fine mesh."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        on_surf = base.closest_point(pts)
        q_phi = np.arctan2(on_surf[:, 1], on_surf[:, 0])
        q_xy = np.stack([radius * q_phi, on_surf[:, 2]], axis=1)
        band = np.clip(((q_xy[:, 1] + a) / (height / n_ref)).astype(int),
                       0, n_ref - 1)
        face_idx = np.empty(pts.shape[0], dtype=np.int64)
        bary = np.empty((pts.shape[0], 3))
        shifts = np.array([-2 * np.pi * radius, 0.0, 2 * np.pi * radius])
        for j in np.unique(band):
            sel = np.flatnonzero(band == j)
            cand = faces_by_band[j]
            A = tri_xy[cand, 0]                      # (C, 2)
            B = tri_xy[cand, 1]
            C = tri_xy[cand, 2]
            dets = det[cand]
            px = q_xy[sel, 0][:, None, None] + shifts[None, :, None]
            py = q_xy[sel, 1][:, None, None]
            vx = px - A[None, None, :, 0]
            vy = py - A[None, None, :, 1]
            wb = (vx * (C[:, 1] - A[:, 1]) - vy * (C[:, 0] - A[:, 0])) / dets
            wc = ((B[:, 0] - A[:, 0]) * vy - (B[:, 1] - A[:, 1]) * vx) / dets
            wa = 1.0 - wb - wc
            score = np.minimum(np.minimum(wa, wb), wc)   # (S, 3, C)
            flat = score.reshape(sel.size, -1)
            best = np.argmax(flat, axis=1)
            ci = best % cand.size
            si = best // cand.size
            face_idx[sel] = cand[ci]
            rows = np.arange(sel.size)
            bary[sel, 0] = wa[rows, si, ci]
            bary[sel, 1] = wb[rows, si, ci]
            bary[sel, 2] = wc[rows, si, ci]
        return face_idx, bary, q_phi

    def _interp(values):
        def field(p):
            pts = np.atleast_2d(np.asarray(p, dtype=float))
            single = np.asarray(p).ndim == 1
            fi, bary, _ = _locate(pts)
            out = np.sum(values[fine.faces[fi]] * bary, axis=1)
            return out[0] if single else out
        return field

    def grad_field(p):
        pts = np.atleast_2d(np.asarray(p, dtype=float))
        single = np.asarray(p).ndim == 1
        fi, _, q_phi = _locate(pts)
        g2 = grad_u1[fi]                              # (Q, 2)
        phi_hat = np.stack([-np.sin(q_phi), np.cos(q_phi),
                            np.zeros_like(q_phi)], axis=1)
        ez = np.zeros((pts.shape[0], 3))
        ez[:, 2] = 1.0
        out = g2[:, :1] * phi_hat + g2[:, 1:] * ez
        return out[0] if single else out

    def exact_f(p):
        pts = np.atleast_2d(np.asarray(p, dtype=float))
        single = np.asarray(p).ndim == 1
        out = np.full(pts.shape[0], float(rhs_value))
        return out[0] if single else out

    return SurfaceCase(
        "cylinder-highres",
        {"radius": radius, "height": height, "n_ref": n_ref},
        True, base.closest_point, base.normal_at,
        _interp(sol.u1), grad_field, _interp(sol.u2), exact_f)
