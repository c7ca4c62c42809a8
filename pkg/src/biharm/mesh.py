"""Triangle surface meshes: validation, per-face geometry, boundary
extraction and OBJ round-trip I/O.

A mesh is a pair of arrays, ``vertices`` with shape (n, 3) and ``faces``
with shape (F, 3).  Faces store vertex indices counterclockwise as seen
from the outward side of the surface.  Construction goes through
:func:`build_mesh`, which rejects degenerate faces, non-manifold edges
and inconsistent orientation, and caches the per-face geometry that the
finite element assembly needs.
"""

import numpy as np


class MeshError(ValueError):
    """Base class for mesh construction failures."""


class DegenerateFaceError(MeshError):
    """A face has repeated vertex indices or (numerically) zero area."""


class NonManifoldEdgeError(MeshError):
    """An undirected edge is shared by more than two faces."""


class InconsistentOrientationError(MeshError):
    """Two adjacent faces traverse their shared edge in the same direction."""


# Relative area threshold below which a triangle counts as degenerate.
# Scale invariant: area is compared against the squared longest edge.
_DEGENERATE_REL_AREA = 1e-14


class TriangleGeometry:
    """Geometric data of a single triangle.

    Attributes
    ----------
    area : float
        Triangle area.
    edge_lengths : ndarray, shape (3,)
        Length of the edge opposite each corner.
    corner_cotangents : ndarray, shape (3,)
        Cotangent of the interior angle at each corner.
    inradius : float
        Radius of the inscribed circle.
    circumradius : float
        Radius of the circumscribed circle.
    unit_normal : ndarray, shape (3,)
        Unit normal following the counterclockwise vertex order.
    """

    def __init__(self, area, edge_lengths, corner_cotangents, inradius,
                 circumradius, unit_normal):
        self.area = float(area)
        self.edge_lengths = np.asarray(edge_lengths, dtype=float)
        self.corner_cotangents = np.asarray(corner_cotangents, dtype=float)
        self.inradius = float(inradius)
        self.circumradius = float(circumradius)
        self.unit_normal = np.asarray(unit_normal, dtype=float)


class TriMesh:
    """Validated triangle mesh with cached per-face geometry.

    Use :func:`build_mesh` to construct one; the constructor assumes the
    input already passed validation.

    Attributes
    ----------
    vertices : ndarray, shape (n, 3)
        Vertex positions (read-only).
    faces : ndarray, shape (F, 3)
        Vertex indices per face, counterclockwise (read-only).
    edges : ndarray, shape (E, 2)
        Unique undirected edges, each row sorted ascending.
    boundary_edges : ndarray, shape (Eb, 2)
        Edges incident to exactly one face, ordered as traversed by that
        face (so boundary loops run counterclockwise around the surface).
    boundary_vertices : ndarray, shape (nb,)
        Sorted indices of vertices lying on the boundary.
    face_areas : ndarray, shape (F,)
    face_normals : ndarray, shape (F, 3)
        Unit normals per face.
    face_edge_lengths : ndarray, shape (F, 3)
        Edge opposite corner k of face i at ``[i, k]``.
    face_cotangents : ndarray, shape (F, 3)
        Cotangent of the interior angle at corner k of face i.
    """

    def __init__(self, vertices, faces, edges, boundary_edges,
                 boundary_vertices, face_areas, face_normals,
                 face_edge_lengths, face_cotangents):
        self.vertices = vertices
        self.faces = faces
        self.edges = edges
        self.boundary_edges = boundary_edges
        self.boundary_vertices = boundary_vertices
        self.face_areas = face_areas
        self.face_normals = face_normals
        self.face_edge_lengths = face_edge_lengths
        self.face_cotangents = face_cotangents
        for arr in (vertices, faces, edges, boundary_edges, boundary_vertices,
                    face_areas, face_normals, face_edge_lengths,
                    face_cotangents):
            arr.setflags(write=False)

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_faces(self):
        return self.faces.shape[0]

    @property
    def is_closed(self):
        """True when the mesh has no boundary edges."""
        return self.boundary_edges.shape[0] == 0

    def __repr__(self):
        kind = "closed" if self.is_closed else "bounded"
        return (f"TriMesh({self.n_vertices} vertices, {self.n_faces} faces, "
                f"{kind})")


def _face_geometry(vertices, faces):
    """Vectorized per-face areas, normals, edge lengths and cotangents.

    Edge k of a face is the edge opposite corner k.  Returns
    (areas, unit_normals, edge_lengths, cotangents); raises
    DegenerateFaceError when any face area is numerically zero relative
    to its longest edge.
    """
    p = vertices[faces]                 # (F, 3, 3)
    # Edge vector opposite corner k points from corner k+1 to corner k+2.
    e = p[:, [2, 0, 1], :] - p[:, [1, 2, 0], :]    # (F, 3, 3)
    lengths = np.linalg.norm(e, axis=2)            # (F, 3)
    cross = np.cross(e[:, 1, :], e[:, 2, :])       # = (p0-p2) x (p1-p0)
    doubled = np.linalg.norm(cross, axis=1)
    longest_sq = np.max(lengths, axis=1) ** 2
    bad = doubled <= 2.0 * _DEGENERATE_REL_AREA * longest_sq
    if np.any(bad):
        idx = int(np.flatnonzero(bad)[0])
        raise DegenerateFaceError(
            f"face {idx} has (numerically) zero area")
    areas = 0.5 * doubled
    normals = cross / doubled[:, None]
    # Angle at corner k: the edge vectors leaving corner k are e_{k+2}
    # and -e_{k+1}, hence cot_k = -(e_{k+1} . e_{k+2}) / (2 area).
    dots = -np.sum(e[:, [1, 2, 0], :] * e[:, [2, 0, 1], :], axis=2)
    cots = dots / doubled[:, None]
    return areas, normals, lengths, cots


def build_mesh(vertices, faces):
    """Validate raw arrays and assemble a :class:`TriMesh`.

    Parameters
    ----------
    vertices : array_like, shape (n, 3)
        Vertex positions.
    faces : array_like, shape (F, 3)
        Vertex indices per face, counterclockwise seen from outside.

    Returns
    -------
    TriMesh

    Raises
    ------
    DegenerateFaceError
        If a face repeats a vertex index or has numerically zero area.
    NonManifoldEdgeError
        If an undirected edge is shared by more than two faces.
    InconsistentOrientationError
        If two faces traverse a shared edge in the same direction.
    ValueError
        On malformed shapes, non-finite coordinates or indices out of
        range.
    """
    vertices = np.ascontiguousarray(vertices, dtype=float)
    faces = np.ascontiguousarray(faces, dtype=np.int64)
    if vertices.ndim != 2 or vertices.shape[1] != 3:
        raise ValueError("vertices must have shape (n, 3)")
    if faces.ndim != 2 or faces.shape[1] != 3:
        raise ValueError("faces must have shape (F, 3)")
    if not np.all(np.isfinite(vertices)):
        raise ValueError("vertex coordinates must be finite")
    n = vertices.shape[0]
    if faces.size and (faces.min() < 0 or faces.max() >= n):
        raise ValueError("face indices out of range")
    if np.any((faces[:, 0] == faces[:, 1]) | (faces[:, 1] == faces[:, 2])
              | (faces[:, 2] == faces[:, 0])):
        raise DegenerateFaceError("face with repeated vertex indices")

    areas, normals, lengths, cots = _face_geometry(vertices, faces)

    # Directed edges in traversal order, one triple per face.
    directed = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]],
                               faces[:, [2, 0]]], axis=0)
    lo = np.minimum(directed[:, 0], directed[:, 1])
    hi = np.maximum(directed[:, 0], directed[:, 1])
    keys = lo * np.int64(n) + hi
    order = np.argsort(keys, kind="stable")
    sorted_keys = keys[order]
    uniq_keys, start, counts = np.unique(sorted_keys, return_index=True,
                                         return_counts=True)
    if np.any(counts > 2):
        k = uniq_keys[np.argmax(counts > 2)]
        raise NonManifoldEdgeError(
            f"edge ({k // n}, {k % n}) shared by more than two faces")
    # A manifold interior edge appears once in each direction.  Two
    # identical directed copies mean the incident faces disagree on
    # orientation.
    interior = counts == 2
    if np.any(interior):
        first = order[start[interior]]
        second = order[start[interior] + 1]
        same = np.all(directed[first] == directed[second], axis=1)
        if np.any(same):
            a, b = directed[first[np.argmax(same)]]
            raise InconsistentOrientationError(
                f"faces disagree on orientation across edge ({a}, {b})")

    edges = np.stack([uniq_keys // n, uniq_keys % n], axis=1)
    boundary_mask = counts == 1
    boundary_edges = directed[order[start[boundary_mask]]]
    if boundary_edges.size:
        boundary_vertices = np.unique(boundary_edges)
    else:
        boundary_vertices = np.empty(0, dtype=np.int64)

    return TriMesh(vertices, faces, edges, boundary_edges,
                   boundary_vertices, areas, normals, lengths, cots)


def triangle_geometry(mesh, face_index):
    """Geometry of one triangle of a mesh.

    Parameters
    ----------
    mesh : TriMesh
    face_index : int

    Returns
    -------
    TriangleGeometry
    """
    i = int(face_index)
    if not 0 <= i < mesh.n_faces:
        raise IndexError(f"face index {i} out of range")
    lengths = mesh.face_edge_lengths[i]
    area = mesh.face_areas[i]
    s = 0.5 * lengths.sum()
    inradius = area / s
    circumradius = lengths.prod() / (4.0 * area)
    return TriangleGeometry(area, lengths, mesh.face_cotangents[i], inradius,
                            circumradius, mesh.face_normals[i])


def max_edge_length(mesh):
    """Longest edge of the mesh; the mesh size h of a refinement level."""
    return float(mesh.face_edge_lengths.max())


def inradius_ratios(mesh):
    """Per-face shape regularity ratio inradius / longest edge.

    Equilateral triangles attain the maximum 1/(2*sqrt(3)); the ratio
    tends to zero for needle and cap shaped triangles.
    """
    s = 0.5 * mesh.face_edge_lengths.sum(axis=1)
    return (mesh.face_areas / s) / mesh.face_edge_lengths.max(axis=1)


def circumradius_ratios(mesh):
    """Per-face ratio circumradius / longest edge (large for slivers)."""
    circum = (mesh.face_edge_lengths.prod(axis=1)
              / (4.0 * mesh.face_areas))
    return circum / mesh.face_edge_lengths.max(axis=1)


def read_obj(path):
    """Read a triangle mesh from a Wavefront OBJ file.

    Only ``v`` and ``f`` records are interpreted; all other record types
    are ignored.  Face entries may carry texture or normal references
    (``i/t/n``); only the leading vertex index is used and it must be
    positive (1-based).

    Parameters
    ----------
    path : str or pathlib.Path

    Returns
    -------
    TriMesh
    """
    vertices = []
    faces = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                if len(parts) < 4:
                    raise ValueError(
                        f"{path}:{lineno}: vertex record needs 3 coordinates")
                vertices.append([float(parts[1]), float(parts[2]),
                                 float(parts[3])])
            elif parts[0] == "f":
                if len(parts) != 4:
                    raise ValueError(
                        f"{path}:{lineno}: only triangular faces supported")
                idx = []
                for token in parts[1:]:
                    head = token.split("/")[0]
                    i = int(head)
                    if i <= 0:
                        raise ValueError(
                            f"{path}:{lineno}: face indices must be positive")
                    idx.append(i - 1)
                faces.append(idx)
    if not vertices:
        raise ValueError(f"{path}: no vertices found")
    return build_mesh(np.asarray(vertices, dtype=float),
                      np.asarray(faces, dtype=np.int64))


def write_obj(mesh, path):
    """Write a mesh as Wavefront OBJ with full float precision.

    Coordinates are printed with 17 significant digits so that a
    read/write round trip reproduces the vertex array bit for bit.
    """
    with open(path, "w", encoding="utf-8") as fh:
        for x, y, z in mesh.vertices:
            fh.write(f"v {x:.17g} {y:.17g} {z:.17g}\n")
        for i, j, k in mesh.faces:
            fh.write(f"f {i + 1} {j + 1} {k + 1}\n")
