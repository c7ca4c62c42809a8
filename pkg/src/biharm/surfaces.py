"""Analytic reference surfaces, manufactured solutions and mesh
generators for the three experiment families: spherical cap with
boundary, closed sphere, and Schwarz lantern (inscribed cylinder).

Each surface comes as a :class:`SurfaceCase` bundling the closest-point
map onto the surface, the outward surface normal, and a manufactured
exact solution u with its surface gradient, Laplacian and bi-Laplacian.
The Laplacian follows the positive semidefinite sign convention
(Delta = -div grad), so ``exact_f`` is Delta(Delta u) in that sign.

All case functions are pure and vectorized: they accept a single point
of shape (3,) or a batch of shape (n, 3).
"""

import numpy as np
from scipy.special import lpmv

from .mesh import build_mesh


class OutsideReachError(ValueError):
    """Point has no well-defined closest surface point (center/axis)."""


class InvalidAngleError(ValueError):
    """Cap opening angle outside (0, pi)."""


class InvalidDimensionError(ValueError):
    """Nonpositive cylinder radius or height."""


class InvalidDegreeError(ValueError):
    """Spherical harmonic degree/order outside l >= 1, |m| <= l."""


class TooFewRingsError(ValueError):
    """Cap mesh needs at least two concentric rings."""


class InvalidCountsError(ValueError):
    """Lantern needs at least 3 equatorial and 2 axial vertices."""


class SurfaceCase:
    """Analytic surface with a manufactured biharmonic solution.

    Attributes
    ----------
    kind : str
        "sphere", "cap" or "cylinder".
    params : dict
        Defining parameters (radius, opening angle, ...).
    has_boundary : bool
    closest_point : callable
        Maps ambient points onto the surface.
    normal_at : callable
        Outward unit normal of the surface at (the projection of) a
        point.
    exact_u, exact_lap_u, exact_f : callable
        Manufactured solution, its Laplacian (positive semidefinite
        convention) and its bi-Laplacian, as scalar fields on the
        surface.
    exact_grad_u : callable
        Surface gradient of the solution as ambient 3-vectors tangent
        to the surface.
    """

    def __init__(self, kind, params, has_boundary, closest_point, normal_at,
                 exact_u, exact_grad_u, exact_lap_u, exact_f):
        self.kind = kind
        self.params = dict(params)
        self.has_boundary = bool(has_boundary)
        self.closest_point = closest_point
        self.normal_at = normal_at
        self.exact_u = exact_u
        self.exact_grad_u = exact_grad_u
        self.exact_lap_u = exact_lap_u
        self.exact_f = exact_f

    def __repr__(self):
        inner = ", ".join(f"{k}={v}" for k, v in self.params.items())
        return f"SurfaceCase({self.kind}, {inner})"


def closest_point(case, p):
    """Project a point (or batch of points) onto the surface of a case."""
    return case.closest_point(p)


def normal_at(case, p):
    """Outward unit surface normal at (the projection of) a point."""
    return case.normal_at(p)


def _as_batch(p):
    pts = np.asarray(p, dtype=float)
    single = pts.ndim == 1
    return np.atleast_2d(pts), single


def _unbatch(values, single):
    return values[0] if single else values


def _sphere_project(radius):
    def project(p):
        pts, single = _as_batch(p)
        norms = np.linalg.norm(pts, axis=1)
        if np.any(norms == 0.0):
            raise OutsideReachError(
                "closest point on the sphere undefined at the center")
        return _unbatch(pts * (radius / norms)[:, None], single)
    return project


def _sphere_normal():
    def normal(p):
        pts, single = _as_batch(p)
        norms = np.linalg.norm(pts, axis=1)
        if np.any(norms == 0.0):
            raise OutsideReachError(
                "surface normal undefined at the sphere center")
        return _unbatch(pts / norms[:, None], single)
    return normal


def cap_case(radius, theta0):
    """Spherical cap 0 <= theta <= theta0 with a clamped manufactured
    solution.

    With x = cos(theta) and c = cos(theta0) the solution is
    u = (x - c)^2, which satisfies u = du/dtheta = 0 on the boundary
    circle.  Through the Legendre form of the axisymmetric Laplacian,
    Delta u = (6x^2 - 4cx - 2) / R^2 and
    Delta^2 u = (36x^2 - 8cx - 12) / R^4.

    Parameters
    ----------
    radius : float
        Sphere radius R > 0.
    theta0 : float
        Polar opening angle, 0 < theta0 < pi.

    Returns
    -------
    SurfaceCase
    """
    radius = float(radius)
    theta0 = float(theta0)
    if not 0.0 < theta0 < np.pi:
        raise InvalidAngleError(
            f"opening angle must lie in (0, pi), got {theta0}")
    if radius <= 0.0:
        raise InvalidDimensionError(f"radius must be positive, got {radius}")
    c = np.cos(theta0)

    def costheta(pts):
        return pts[:, 2] / np.linalg.norm(pts, axis=1)

    def exact_u(p):
        pts, single = _as_batch(p)
        x = costheta(pts)
        return _unbatch((x - c) ** 2, single)

    def exact_grad_u(p):
        pts, single = _as_batch(p)
        norms = np.linalg.norm(pts, axis=1)
        unit = pts / norms[:, None]
        x = unit[:, 2]
        ez = np.zeros_like(pts)
        ez[:, 2] = 1.0
        grad = (2.0 / radius) * (x - c)[:, None] * (ez - x[:, None] * unit)
        return _unbatch(grad, single)

    def exact_lap_u(p):
        pts, single = _as_batch(p)
        x = costheta(pts)
        return _unbatch((6.0 * x**2 - 4.0 * c * x - 2.0) / radius**2, single)

    def exact_f(p):
        pts, single = _as_batch(p)
        x = costheta(pts)
        return _unbatch((36.0 * x**2 - 8.0 * c * x - 12.0) / radius**4,
                        single)

    return SurfaceCase("cap", {"radius": radius, "theta0": theta0}, True,
                       _sphere_project(radius), _sphere_normal(),
                       exact_u, exact_grad_u, exact_lap_u, exact_f)


def cylinder_case(radius, height):
    """Open cylinder of radius R and height H, clamped at both rims.

    The cylinder is intrinsically flat, so with axial coordinate z and
    a = H/2 the 1D profile u = (z^2 - a^2)^2 solves the clamped
    biharmonic problem with the constant right-hand side f = 24
    (independent of R), and Delta u = 4a^2 - 12z^2 in the positive
    semidefinite convention.

    Returns
    -------
    SurfaceCase
    """
    radius = float(radius)
    height = float(height)
    if radius <= 0.0 or height <= 0.0:
        raise InvalidDimensionError(
            f"cylinder needs positive radius and height, got "
            f"R={radius}, H={height}")
    a = 0.5 * height

    def project(p):
        pts, single = _as_batch(p)
        rho = np.hypot(pts[:, 0], pts[:, 1])
        if np.any(rho == 0.0):
            raise OutsideReachError(
                "closest point on the cylinder undefined on the axis")
        out = np.empty_like(pts)
        out[:, 0] = pts[:, 0] * (radius / rho)
        out[:, 1] = pts[:, 1] * (radius / rho)
        out[:, 2] = np.clip(pts[:, 2], -a, a)
        return _unbatch(out, single)

    def normal(p):
        pts, single = _as_batch(p)
        rho = np.hypot(pts[:, 0], pts[:, 1])
        if np.any(rho == 0.0):
            raise OutsideReachError(
                "surface normal undefined on the cylinder axis")
        out = np.zeros_like(pts)
        out[:, 0] = pts[:, 0] / rho
        out[:, 1] = pts[:, 1] / rho
        return _unbatch(out, single)

    def exact_u(p):
        pts, single = _as_batch(p)
        z = pts[:, 2]
        return _unbatch((z**2 - a**2) ** 2, single)

    def exact_grad_u(p):
        pts, single = _as_batch(p)
        z = pts[:, 2]
        grad = np.zeros_like(pts)
        grad[:, 2] = 4.0 * z * (z**2 - a**2)
        return _unbatch(grad, single)

    def exact_lap_u(p):
        pts, single = _as_batch(p)
        z = pts[:, 2]
        return _unbatch(4.0 * a**2 - 12.0 * z**2, single)

    def exact_f(p):
        pts, single = _as_batch(p)
        return _unbatch(np.full(pts.shape[0], 24.0), single)

    return SurfaceCase("cylinder", {"radius": radius, "height": height},
                       True, project, normal,
                       exact_u, exact_grad_u, exact_lap_u, exact_f)


def real_harmonic(degree, order):
    """Real spherical harmonic Y_l^m as a function of ambient points.

    Uses the unnormalized associated Legendre convention:
    Y = P_l^m(cos theta) cos(m phi) for m >= 0 and
    Y = P_l^|m|(cos theta) sin(|m| phi) for m < 0, evaluated on the
    radial projection of the input, so Y_2^0(p) = (3 z^2 - 1)/2 on the
    unit sphere.
    """
    l, m = int(degree), int(order)
    ma = abs(m)

    def harmonic(p):
        pts, single = _as_batch(p)
        unit = pts / np.linalg.norm(pts, axis=1)[:, None]
        ct = np.clip(unit[:, 2], -1.0, 1.0)
        phi = np.arctan2(unit[:, 1], unit[:, 0])
        legendre = lpmv(ma, l, ct)
        trig = np.cos(m * phi) if m >= 0 else np.sin(ma * phi)
        return _unbatch(legendre * trig, single)

    return harmonic


def _harmonic_surface_gradient(degree, order, radius):
    """Surface gradient of the real harmonic on the sphere of a radius.

    Uses the derivative recurrence
    d P_l^m(cos t)/dt = (l cos t P_l^m - (l+m) P_{l-1}^m) / sin t,
    assembled in the local (theta_hat, phi_hat) frame.  Contributions
    are zeroed at the poles, where the frame degenerates (the quadrature
    points used by the error norms never hit the poles).
    """
    l, m = int(degree), int(order)
    ma = abs(m)

    def gradient(p):
        pts, single = _as_batch(p)
        unit = pts / np.linalg.norm(pts, axis=1)[:, None]
        ct = np.clip(unit[:, 2], -1.0, 1.0)
        st = np.sqrt(np.maximum(0.0, 1.0 - ct**2))
        phi = np.arctan2(unit[:, 1], unit[:, 0])
        cp, sp = np.cos(phi), np.sin(phi)
        ok = st > 1e-14
        st_safe = np.where(ok, st, 1.0)

        legendre = lpmv(ma, l, ct)
        legendre_lower = lpmv(ma, l - 1, ct) if l >= 1 else np.zeros_like(ct)
        dp_dtheta = np.where(
            ok, (l * ct * legendre - (l + ma) * legendre_lower) / st_safe,
            0.0)
        if m >= 0:
            trig = np.cos(m * phi)
            dtrig = -m * np.sin(m * phi)
        else:
            trig = np.sin(ma * phi)
            dtrig = ma * np.cos(ma * phi)

        theta_hat = np.stack([ct * cp, ct * sp, -st], axis=1)
        phi_hat = np.stack([-sp, cp, np.zeros_like(sp)], axis=1)
        comp_theta = dp_dtheta * trig
        comp_phi = np.where(ok, legendre * dtrig / st_safe, 0.0)
        grad = (comp_theta[:, None] * theta_hat
                + comp_phi[:, None] * phi_hat) / radius
        return _unbatch(grad, single)

    return gradient


def sphere_case(radius, degree, order):
    """Closed sphere with a spherical-harmonic manufactured solution.

    Y_l^m is an eigenfunction of the positive semidefinite Laplacian
    with eigenvalue l(l+1)/R^2, so with f = Y_l^m the biharmonic
    solution is u = R^4/(l(l+1))^2 Y_l^m and
    Delta u = R^2/(l(l+1)) Y_l^m.  All three fields have zero surface
    mean for l >= 1.

    Parameters
    ----------
    radius : float
    degree, order : int
        Harmonic degree l >= 1 and order m with |m| <= l.

    Returns
    -------
    SurfaceCase
    """
    radius = float(radius)
    l, m = int(degree), int(order)
    if l < 1 or abs(m) > l:
        raise InvalidDegreeError(
            f"need degree l >= 1 and |m| <= l, got l={l}, m={m}")
    if radius <= 0.0:
        raise InvalidDimensionError(f"radius must be positive, got {radius}")
    eig = l * (l + 1)
    harmonic = real_harmonic(l, m)
    harmonic_grad = _harmonic_surface_gradient(l, m, radius)

    def exact_u(p):
        return (radius**4 / eig**2) * harmonic(p)

    def exact_grad_u(p):
        return (radius**4 / eig**2) * harmonic_grad(p)

    def exact_lap_u(p):
        return (radius**2 / eig) * harmonic(p)

    def exact_f(p):
        return harmonic(p)

    return SurfaceCase("sphere", {"radius": radius, "l": l, "m": m}, False,
                       _sphere_project(radius), _sphere_normal(),
                       exact_u, exact_grad_u, exact_lap_u, exact_f)


def gen_cap_mesh(theta0, rings, radius=1.0):
    """Concentric-ring triangulation of the spherical cap.

    Ring j (1 <= j <= rings) lies at polar angle theta0 * j / rings and
    carries 6j vertices; consecutive rings are stitched by merging the
    two angle sequences, and the innermost ring closes with a fan
    around the pole vertex.  All vertices lie exactly on the sphere and
    the outermost ring exactly on the boundary circle.

    Parameters
    ----------
    theta0 : float
        Polar opening angle, 0 < theta0 < pi.
    rings : int
        Number of concentric rings, at least 2.
    radius : float
        Sphere radius.

    Returns
    -------
    TriMesh
        1 + 3 rings (rings+1) vertices and 6 rings^2 faces.
    """
    rings = int(rings)
    if rings < 2:
        raise TooFewRingsError(f"need at least 2 rings, got {rings}")
    if not 0.0 < float(theta0) < np.pi:
        raise InvalidAngleError(
            f"opening angle must lie in (0, pi), got {theta0}")

    vertices = [np.array([0.0, 0.0, radius])]
    ring_start = [None]
    ring_phis = [None]
    for j in range(1, rings + 1):
        theta = theta0 * j / rings
        count = 6 * j
        phis = 2.0 * np.pi * np.arange(count) / count
        ring_start.append(len(vertices))
        ring_phis.append(phis)
        st, ct = np.sin(theta), np.cos(theta)
        ring = np.stack([radius * st * np.cos(phis),
                         radius * st * np.sin(phis),
                         np.full(count, radius * ct)], axis=1)
        vertices.extend(ring)

    faces = []
    first = ring_start[1]
    for k in range(6):
        faces.append([0, first + k, first + (k + 1) % 6])
    for j in range(1, rings):
        inner_phis, outer_phis = ring_phis[j], ring_phis[j + 1]
        n_in, n_out = len(inner_phis), len(outer_phis)
        s_in, s_out = ring_start[j], ring_start[j + 1]
        i = k = 0
        while i < n_in or k < n_out:
            next_in = inner_phis[i + 1] if i + 1 < n_in else 2.0 * np.pi
            next_out = outer_phis[k + 1] if k + 1 < n_out else 2.0 * np.pi
            if k < n_out and (i == n_in or next_out <= next_in):
                faces.append([s_out + k, s_out + (k + 1) % n_out, s_in +
                              i % n_in])
                k += 1
            else:
                faces.append([s_in + i, s_out + k % n_out,
                              s_in + (i + 1) % n_in])
                i += 1

    return build_mesh(np.asarray(vertices), np.asarray(faces))


_ICO_T = (1.0 + np.sqrt(5.0)) / 2.0
_ICO_VERTS = np.array([
    [-1.0, _ICO_T, 0.0], [1.0, _ICO_T, 0.0],
    [-1.0, -_ICO_T, 0.0], [1.0, -_ICO_T, 0.0],
    [0.0, -1.0, _ICO_T], [0.0, 1.0, _ICO_T],
    [0.0, -1.0, -_ICO_T], [0.0, 1.0, -_ICO_T],
    [_ICO_T, 0.0, -1.0], [_ICO_T, 0.0, 1.0],
    [-_ICO_T, 0.0, -1.0], [-_ICO_T, 0.0, 1.0]])
_ICO_FACES = np.array([
    [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
    [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
    [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
    [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1]])


def gen_icosphere(subdivisions, radius=1.0):
    """Icosahedron subdivided by edge midpoints and reprojected.

    Each subdivision splits every face into four and pushes the new
    midpoint vertices back onto the sphere, giving 10*4^k + 2 vertices
    and 20*4^k faces at level k, all exactly at distance ``radius``
    from the origin.

    Returns
    -------
    TriMesh
        Closed, consistently outward oriented.
    """
    k = int(subdivisions)
    if k < 0:
        raise ValueError(f"subdivisions must be >= 0, got {k}")
    verts = [v * (radius / np.linalg.norm(v)) for v in _ICO_VERTS]
    faces = [tuple(face) for face in _ICO_FACES]
    for _ in range(k):
        midpoint = {}

        def mid(a, b):
            key = (a, b) if a < b else (b, a)
            if key not in midpoint:
                p = 0.5 * (verts[a] + verts[b])
                verts.append(p * (radius / np.linalg.norm(p)))
                midpoint[key] = len(verts) - 1
            return midpoint[key]

        refined = []
        for v0, v1, v2 in faces:
            a, b, c = mid(v0, v1), mid(v1, v2), mid(v2, v0)
            refined.extend([(v0, a, c), (a, v1, b), (c, b, v2), (a, b, c)])
        faces = refined
    return build_mesh(np.asarray(verts), np.asarray(faces))


def gen_schwarz_lantern(m, n, radius=1.0, height=2.0):
    """Classical Schwarz lantern inscribed in a cylinder.

    n+1 evenly spaced vertex rings of m vertices each, with every other
    ring rotated by pi/m, connected as antiprism strips of 2m triangles
    per band.  All vertices lie exactly on the cylinder; the boundary
    consists of the top and bottom rings.

    Parameters
    ----------
    m : int
        Vertices per ring (equatorial count), at least 3.
    n : int
        Number of bands (axial count), at least 2.
    radius, height : float
        Cylinder dimensions.

    Returns
    -------
    TriMesh
        (n+1) m vertices and 2 m n faces.
    """
    m, n = int(m), int(n)
    if m < 3 or n < 2:
        raise InvalidCountsError(
            f"lantern needs m >= 3 and n >= 2, got m={m}, n={n}")
    if radius <= 0.0 or height <= 0.0:
        raise InvalidDimensionError(
            f"cylinder needs positive radius and height, got "
            f"R={radius}, H={height}")
    a = 0.5 * height
    verts = np.empty(((n + 1) * m, 3))
    for j in range(n + 1):
        phis = (2.0 * np.pi * np.arange(m) + np.pi * (j % 2)) / m
        verts[j * m:(j + 1) * m, 0] = radius * np.cos(phis)
        verts[j * m:(j + 1) * m, 1] = radius * np.sin(phis)
        verts[j * m:(j + 1) * m, 2] = -a + height * j / n

    faces = []
    for j in range(n):
        lo, hi = j * m, (j + 1) * m
        for k in range(m):
            k1 = (k + 1) % m
            if j % 2 == 0:
                faces.append([lo + k, lo + k1, hi + k])
                faces.append([hi + k, lo + k1, hi + k1])
            else:
                faces.append([lo + k, lo + k1, hi + k1])
                faces.append([lo + k, hi + k1, hi + k])
    return build_mesh(verts, np.asarray(faces))


class RefinementFamily:
    """A surface case bundled with a sequence of refinement levels.

    ``levels`` stores the generator parameter per level (rings,
    subdivisions or axial count); :meth:`build` realizes one level as a
    mesh.  Generated mesh sizes h decrease strictly across levels.
    """

    def __init__(self, label, case, levels, builder, coupling=None):
        self.label = label
        self.case = case
        self.levels = tuple(int(v) for v in levels)
        self.coupling = coupling
        self._builder = builder

    def build(self, level):
        """Mesh for one entry of ``levels``."""
        return self._builder(level)

    def meshes(self):
        """Yield (level, mesh) pairs in order."""
        for level in self.levels:
            yield level, self.build(level)

    def with_case(self, case, label=None):
        """Same meshes, different reference case (and optional label)."""
        return RefinementFamily(label or self.label, case, self.levels,
                                self._builder, coupling=self.coupling)


def cap_family(theta0, ring_levels, radius=1.0):
    """Cap case with rings doubling per level (h halves)."""
    case = cap_case(radius, theta0)
    return RefinementFamily(
        "cap", case, ring_levels,
        lambda rings: gen_cap_mesh(theta0, rings, radius))


def sphere_family(degree, order, subdiv_levels, radius=1.0):
    """Closed-sphere case over icosphere subdivision levels."""
    case = sphere_case(radius, degree, order)
    return RefinementFamily(
        "sphere", case, subdiv_levels,
        lambda k: gen_icosphere(k, radius))


def lantern_family(coupling, n_levels, radius=1.0, height=2.0):
    """Lantern cases: equatorial count m = 2n (linear) or m = n^2.

    The linear coupling keeps triangles shape regular; the quadratic
    coupling produces progressively thinner triangles.
    """
    if coupling not in ("linear", "quadratic"):
        raise ValueError(f"coupling must be linear or quadratic, "
                         f"got {coupling!r}")
    case = cylinder_case(radius, height)

    def builder(n):
        m = 2 * n if coupling == "linear" else n * n
        return gen_schwarz_lantern(m, n, radius, height)

    return RefinementFamily(f"lantern-{coupling}", case, n_levels, builder,
                            coupling=coupling)
