import numpy as np
import pytest

from biharm.mesh import (DegenerateFaceError, InconsistentOrientationError,
                         NonManifoldEdgeError, build_mesh, max_edge_length,
                         read_obj, triangle_geometry, write_obj)

from conftest import grid_mesh, single_triangle, tetrahedron


class TestBuildMesh:
    def test_single_triangle_boundary(self):
        mesh = single_triangle()
        assert mesh.n_vertices == 3
        assert mesh.n_faces == 1
        assert sorted(mesh.boundary_vertices) == [0, 1, 2]
        assert mesh.boundary_edges.shape == (3, 2)
        assert not mesh.is_closed

    def test_tetrahedron_closed(self):
        mesh = tetrahedron()
        assert mesh.is_closed
        assert mesh.boundary_vertices.size == 0
        assert mesh.boundary_edges.size == 0
        assert mesh.edges.shape == (6, 2)

    def test_same_winding_rejected(self):
        verts = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0],
                          [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]])
        faces = np.array([[0, 1, 2], [0, 1, 3]])
        with pytest.raises(InconsistentOrientationError):
            build_mesh(verts, faces)

    def test_zero_area_rejected(self):
        verts = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0],
                          [2.0, 0.0, 0.0]])
        with pytest.raises(DegenerateFaceError):
            build_mesh(verts, np.array([[0, 1, 2]]))

    def test_repeated_index_rejected(self):
        verts = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0],
                          [0.0, 1.0, 0.0]])
        with pytest.raises(DegenerateFaceError):
            build_mesh(verts, np.array([[0, 1, 1]]))

    def test_nonmanifold_rejected(self):
        verts = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0],
                          [0.0, 1.0, 0.0], [0.0, 0.0, 1.0],
                          [0.0, -1.0, 0.0]])
        faces = np.array([[0, 1, 2], [0, 3, 1], [0, 1, 4]])
        with pytest.raises(NonManifoldEdgeError):
            build_mesh(verts, faces)

    def test_index_out_of_range(self):
        verts = np.zeros((3, 3))
        with pytest.raises(ValueError):
            build_mesh(verts, np.array([[0, 1, 5]]))

    def test_interior_edges_opposite_order(self):
        mesh = grid_mesh(3)
        directed = {}
        for face in mesh.faces:
            for k in range(3):
                a, b = int(face[k]), int(face[(k + 1) % 3])
                directed[(a, b)] = directed.get((a, b), 0) + 1
        boundary = set(map(tuple, mesh.boundary_edges))
        for (a, b), count in directed.items():
            assert count == 1
            if (a, b) not in boundary:
                assert (b, a) in directed

    def test_immutable(self):
        mesh = single_triangle()
        with pytest.raises(ValueError):
            mesh.vertices[0, 0] = 5.0


class TestTriangleGeometry:
    def test_right_triangle(self):
        geo = triangle_geometry(single_triangle(), 0)
        assert geo.area == pytest.approx(0.5)
        assert geo.corner_cotangents == pytest.approx([0.0, 1.0, 1.0])
        assert geo.unit_normal == pytest.approx([0.0, 0.0, 1.0])

    def test_equilateral_radii(self):
        mesh = single_triangle((0, 0, 0), (1, 0, 0),
                               (0.5, np.sqrt(3.0) / 2.0, 0))
        geo = triangle_geometry(mesh, 0)
        assert geo.inradius == pytest.approx(1.0 / (2.0 * np.sqrt(3.0)))
        assert geo.circumradius == pytest.approx(1.0 / np.sqrt(3.0))

    def test_cotangent_identity(self, rng):
        for _ in range(50):
            pts = rng.normal(size=(3, 3))
            try:
                mesh = build_mesh(pts, np.array([[0, 1, 2]]))
            except DegenerateFaceError:
                continue
            c = triangle_geometry(mesh, 0).corner_cotangents
            total = c[0] * c[1] + c[1] * c[2] + c[2] * c[0]
            assert total == pytest.approx(1.0, abs=1e-10)

    def test_bad_index(self):
        with pytest.raises(IndexError):
            triangle_geometry(single_triangle(), 3)


class TestMaxEdgeLength:
    def test_right_triangle_hypotenuse(self):
        assert max_edge_length(single_triangle()) == pytest.approx(
            np.sqrt(2.0))

    def test_scaling_exact(self):
        mesh = grid_mesh(3)
        scaled = build_mesh(2.0 * mesh.vertices, mesh.faces)
        assert max_edge_length(scaled) == 2.0 * max_edge_length(mesh)

    def test_area_rigid_motion_invariant(self, rng):
        mesh = grid_mesh(4)
        total = mesh.face_areas.sum()
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        if np.linalg.det(q) < 0:
            q[:, 0] = -q[:, 0]
        moved = build_mesh(mesh.vertices @ q.T + np.array([0.3, -1.2, 2.0]),
                           mesh.faces)
        assert moved.face_areas.sum() == pytest.approx(total, rel=1e-12)


class TestObjIO:
    def test_round_trip_bit_exact(self, tmp_path, rng):
        mesh = grid_mesh(3)
        jittered = build_mesh(
            mesh.vertices + 1e-3 * rng.normal(size=mesh.vertices.shape),
            mesh.faces)
        path = tmp_path / "mesh.obj"
        write_obj(jittered, path)
        back = read_obj(path)
        assert np.array_equal(back.vertices, jittered.vertices)
        assert np.array_equal(back.faces, jittered.faces)

    def test_reader_ignores_other_records(self, tmp_path):
        path = tmp_path / "mixed.obj"
        path.write_text("# comment\nvn 0 0 1\nv 0 0 0\nv 1 0 0\nv 0 1 0\n"
                        "vt 0 0\nf 1/1/1 2/2/1 3/3/1\n")
        mesh = read_obj(path)
        assert mesh.n_vertices == 3
        assert mesh.n_faces == 1

    def test_reader_rejects_quad(self, tmp_path):
        path = tmp_path / "quad.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
        with pytest.raises(ValueError):
            read_obj(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_obj(tmp_path / "nope.obj")
