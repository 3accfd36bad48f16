"""Mesh generators, invariants, geometry and file I/O."""

import numpy as np
import pytest

from barrierfem.errors import InvalidGeometry, ParseError, ValidationError
from barrierfem.mesh import (
    Marker,
    SimplicialMesh,
    generate_annulus_mesh,
    generate_interval_mesh,
    generate_shell_mesh,
    load_mesh,
    save_mesh,
    validate,
)


def shoelace(tri):
    (x0, y0), (x1, y1), (x2, y2) = tri
    return 0.5 * abs((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0))


def tet_volume(pts):
    return abs(np.linalg.det(pts[1:] - pts[0])) / 6.0


class TestInterval:
    def test_paper_domain(self):
        mesh = generate_interval_mesh(0.1, 10, 99)
        assert mesh.num_vertices == 100
        assert mesh.vertices.min() == 0.1 and mesh.vertices.max() == 10.0

    def test_unit_interval(self):
        mesh = generate_interval_mesh(0, 1, 1)
        assert mesh.num_vertices == 2 and mesh.num_cells == 1
        assert mesh.cell_volumes[0] == 1.0

    def test_partition_of_measure(self):
        mesh = generate_interval_mesh(0, 1, 4)
        assert abs(mesh.cell_volumes.sum() - 1.0) < 1e-15

    def test_invalid(self):
        with pytest.raises(InvalidGeometry):
            generate_interval_mesh(1.0, 1.0, 4)
        with pytest.raises(InvalidGeometry):
            generate_interval_mesh(2.0, 1.0, 4)

    def test_markers(self):
        mesh = generate_interval_mesh(0, 1, 3, left=Marker.ROBIN, right=Marker.DIRICHLET)
        markers = {facet: marker for marker, facet in mesh.boundary_facets}
        assert markers == {(0,): Marker.ROBIN, (3,): Marker.DIRICHLET}


class TestAnnulus:
    def test_small_counts_and_area(self):
        mesh = generate_annulus_mesh(1, 2, 1, 4)
        assert mesh.num_vertices == 8 and mesh.num_cells == 8
        # oracle: shoelace sum over the emitted triangles
        total = sum(shoelace(mesh.vertices[list(c)]) for c in mesh.cells)
        assert np.isclose(mesh.cell_volumes.sum(), total, rtol=1e-14)
        # inscribed polygonal annulus area: n/2 sin(2 pi/n) (R^2 - r^2)
        poly = 0.5 * 4 * np.sin(2 * np.pi / 4) * (4 - 1)
        assert np.isclose(total, poly, rtol=1e-13)

    def test_area_converges_to_annulus(self):
        mesh = generate_annulus_mesh(1, 2, 2, 64)
        analytic = np.pi * (4 - 1)
        assert abs(mesh.cell_volumes.sum() - analytic) / analytic < 0.01

    def test_invalid(self):
        with pytest.raises(InvalidGeometry):
            generate_annulus_mesh(2, 1, 1, 4)
        with pytest.raises(InvalidGeometry):
            generate_annulus_mesh(-1, 1, 1, 4)
        with pytest.raises(InvalidGeometry):
            generate_annulus_mesh(1, 2, 1, 2)

    def test_valid_and_positive(self):
        mesh = generate_annulus_mesh(0.5, 3, 3, 10)
        assert validate(mesh) == []
        assert np.all(mesh.cell_volumes > 0)


class TestShell:
    @pytest.mark.parametrize("r_in,r_out,refinement", [(1, 100, 2), (50, 100, 1), (10, 100, 0)])
    def test_generator_emits_valid_meshes(self, r_in, r_out, refinement):
        mesh = generate_shell_mesh(r_in, r_out, refinement)
        assert validate(mesh) == []
        assert np.all(mesh.cell_volumes > 0)

    def test_volume_matches_polyhedral_oracle(self):
        # radial extrusion of the icosphere fills exactly the region between
        # the scaled polyhedra, so total volume = V_poly(1) * (R^3 - r^3)
        # with V_poly(1) recovered from the inner boundary facets
        mesh = generate_shell_mesh(2, 5, 1)
        markers, fidx = mesh.facet_arrays
        inner = [f for m, f in mesh.boundary_facets if np.linalg.norm(mesh.vertices[f[0]]) < 3]
        v_inner = sum(
            abs(np.linalg.det(mesh.vertices[list(f)])) / 6.0 for f in inner
        )
        v_unit = v_inner / 2.0**3
        expected = v_unit * (5.0**3 - 2.0**3)
        assert np.isclose(mesh.cell_volumes.sum(), expected, rtol=1e-10)

    def test_volume_near_analytic(self):
        mesh = generate_shell_mesh(1, 100, 2)
        analytic = 4.0 / 3.0 * np.pi * (100**3 - 1)
        ratio = mesh.cell_volumes.sum() / analytic
        assert 0.95 < ratio < 1.0  # level-2 icosphere volume deficit ~3.4%

    def test_layers_control_vertex_count(self):
        mesh = generate_shell_mesh(1, 100, 2, n_layers=8)
        assert mesh.num_vertices == 162 * 9

    def test_invalid(self):
        with pytest.raises(InvalidGeometry):
            generate_shell_mesh(100, 1, 1)
        with pytest.raises(InvalidGeometry):
            generate_shell_mesh(1, 100, -1)


class TestValidate:
    def test_duplicate_facet_markers(self):
        mesh = generate_interval_mesh(0, 1, 2)
        bad = SimplicialMesh(
            1,
            mesh.vertices,
            mesh.cells,
            [(Marker.DIRICHLET, (0,)), (Marker.ROBIN, (0,)), (Marker.DIRICHLET, (2,))],
        )
        assert any("more than once" in v for v in validate(bad))

    def test_inverted_cell(self):
        bad = SimplicialMesh(
            1, [[0.0], [1.0]], [[1, 0]], [(Marker.DIRICHLET, (0,))], fix_orientation=False
        )
        assert any("nonpositive measure" in v for v in validate(bad))

    def test_orientation_fix(self):
        fixed = SimplicialMesh(1, [[0.0], [1.0]], [[1, 0]], [])
        assert fixed.cell_volumes[0] > 0

    def test_interior_facet_rejected(self):
        mesh = generate_interval_mesh(0, 1, 2)
        bad = SimplicialMesh(
            1, mesh.vertices, mesh.cells, [(Marker.DIRICHLET, (1,))]
        )  # vertex 1 is shared by both cells
        assert any("expected exactly 1" in v for v in validate(bad))

    def test_index_out_of_range(self):
        bad = SimplicialMesh(1, [[0.0], [1.0]], [[0, 5]], [], fix_orientation=False)
        assert any("out of range" in v for v in validate(bad))


@pytest.mark.parametrize(
    "mesh",
    [
        generate_interval_mesh(0, 2, 5),
        generate_annulus_mesh(1, 2, 2, 8),
        generate_shell_mesh(1, 3, 1),
    ],
    ids=["interval", "annulus", "shell"],
)
def test_outward_normals(mesh):
    """Facet normals point away from the parent cell centroid."""
    normals = mesh.facet_normals()
    parents = mesh.facet_parent_cells()
    _, fidx = mesh.facet_arrays
    for k in range(len(fidx)):
        facet_centroid = mesh.vertices[list(fidx[k])].mean(axis=0)
        cell_centroid = mesh.vertices[mesh.cells[parents[k]]].mean(axis=0)
        assert np.dot(normals[k], facet_centroid - cell_centroid) > 0


class TestMeshIO:
    @pytest.mark.parametrize(
        "mesh",
        [
            generate_interval_mesh(0, 1, 4),
            generate_annulus_mesh(1, 2, 1, 5, inner=Marker.DIRICHLET),
            generate_shell_mesh(1, 2, 0),
        ],
        ids=["interval", "annulus", "shell"],
    )
    def test_round_trip(self, mesh, tmp_path):
        path = tmp_path / "m.mesh"
        save_mesh(mesh, path)
        assert load_mesh(path) == mesh

    def test_cell_index_out_of_range(self, tmp_path):
        path = tmp_path / "bad.mesh"
        path.write_text("dim 1\nvertices 2\n0.0\n1.0\ncells 1\n0 7\nboundary_facets 0\n")
        with pytest.raises(ValidationError):
            load_mesh(path)

    def test_unsupported_dimension(self, tmp_path):
        path = tmp_path / "bad.mesh"
        path.write_text("dim 4\nvertices 0\ncells 0\nboundary_facets 0\n")
        with pytest.raises(ParseError) as err:
            load_mesh(path)
        assert err.value.line == 1

    def test_bad_marker(self, tmp_path):
        path = tmp_path / "bad.mesh"
        path.write_text(
            "dim 1\nvertices 2\n0.0\n1.0\ncells 1\n0 1\nboundary_facets 1\nperiodic 0\n"
        )
        with pytest.raises(ParseError) as err:
            load_mesh(path)
        assert err.value.line == 8

    def test_truncated_file(self, tmp_path):
        path = tmp_path / "bad.mesh"
        path.write_text("dim 1\nvertices 2\n0.0\n")
        with pytest.raises(ParseError):
            load_mesh(path)

    def test_comments_and_blank_lines(self, tmp_path):
        path = tmp_path / "ok.mesh"
        path.write_text(
            "# a comment\ndim 1\n\nvertices 2\n0.0\n1.0 # inline\ncells 1\n0 1\n"
            "boundary_facets 2\ndirichlet 0\nrobin 1\n"
        )
        mesh = load_mesh(path)
        assert mesh.num_cells == 1
        assert mesh.boundary_facets[1][0] == Marker.ROBIN
