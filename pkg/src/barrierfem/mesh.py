"""Simplicial meshes: representation, generators, file I/O, geometry.

Meshes are treated as immutable once constructed; cell orientation is
fixed at construction time (a transposition of two vertices whenever the
signed measure is negative), so downstream gradient formulas can rely on
positive signed volumes.
"""

import math
from enum import Enum
from functools import cached_property

import numpy as np

from .errors import InvalidGeometry, ParseError, ValidationError


class Marker(str, Enum):
    """Boundary facet marker (Dirichlet or Robin condition)."""

    DIRICHLET = "dirichlet"
    ROBIN = "robin"


def _signed_measures(dim, vertices, cells):
    v0 = vertices[cells[:, 0]]
    edges = vertices[cells[:, 1:]] - v0[:, None, :]
    if dim == 1:
        det = edges[:, 0, 0]
    elif dim == 2:
        det = edges[:, 0, 0] * edges[:, 1, 1] - edges[:, 0, 1] * edges[:, 1, 0]
    else:
        det = np.linalg.det(edges)
    return det / math.factorial(dim)


class SimplicialMesh:
    """Conforming simplicial mesh in 1, 2 or 3 dimensions.

    Parameters
    ----------
    dim : int
        Spatial dimension, 1, 2 or 3.
    vertices : (N, dim) array of vertex coordinates.
    cells : (M, dim+1) integer array of vertex indices per cell.
    boundary_facets : sequence of (Marker, index-tuple)
        Each facet is a (dim-1)-simplex given by `dim` vertex indices
        (a single vertex in 1D).
    fix_orientation : bool
        When True (default), cells with negative signed measure get two
        vertices swapped so every cell measure is positive.
    """

    def __init__(self, dim, vertices, cells, boundary_facets, fix_orientation=True):
        if dim not in (1, 2, 3):
            raise InvalidGeometry(f"dimension must be 1, 2 or 3, got {dim}")
        self.dim = int(dim)
        self.vertices = np.atleast_2d(np.asarray(vertices, dtype=float))
        if self.vertices.shape[1] != self.dim:
            raise InvalidGeometry(
                f"vertex coordinates have {self.vertices.shape[1]} components, expected {dim}"
            )
        self.cells = np.asarray(cells, dtype=np.int64).reshape(-1, self.dim + 1)
        if fix_orientation and len(self.cells):
            signed = _signed_measures(self.dim, self.vertices, self.cells)
            flip = signed < 0
            if np.any(flip):
                cells = self.cells.copy()
                cells[flip, -2], cells[flip, -1] = (
                    self.cells[flip, -1],
                    self.cells[flip, -2],
                )
                self.cells = cells
        self.cells.setflags(write=False)
        self.vertices.setflags(write=False)
        facets = []
        for marker, idx in boundary_facets:
            marker = Marker(marker)
            idx = tuple(int(i) for i in (idx if hasattr(idx, "__len__") else (idx,)))
            if len(idx) != self.dim:
                raise InvalidGeometry(
                    f"boundary facet {idx} has {len(idx)} vertices, expected {self.dim}"
                )
            facets.append((marker, idx))
        self.boundary_facets = tuple(facets)

    @property
    def num_vertices(self):
        return len(self.vertices)

    @property
    def num_cells(self):
        return len(self.cells)

    @cached_property
    def cell_volumes(self):
        """Positive measure (length/area/volume) of every cell."""
        return _signed_measures(self.dim, self.vertices, self.cells)

    @cached_property
    def facet_arrays(self):
        """(markers, indices) with indices shaped (B, dim)."""
        if not self.boundary_facets:
            return np.array([], dtype=object), np.zeros((0, self.dim), dtype=np.int64)
        markers = np.array([m for m, _ in self.boundary_facets], dtype=object)
        idx = np.array([f for _, f in self.boundary_facets], dtype=np.int64)
        return markers, idx

    @cached_property
    def facet_measures(self):
        """Length/area of each boundary facet (1.0 for 1D point facets)."""
        _, idx = self.facet_arrays
        if self.dim == 1:
            return np.ones(len(idx))
        pts = self.vertices[idx]
        if self.dim == 2:
            return np.linalg.norm(pts[:, 1] - pts[:, 0], axis=1)
        cross = np.cross(pts[:, 1] - pts[:, 0], pts[:, 2] - pts[:, 0])
        return 0.5 * np.linalg.norm(cross, axis=1)

    @cached_property
    def _face_to_cells(self):
        face_map = {}
        for c, cell in enumerate(self.cells):
            for drop in range(self.dim + 1):
                face = tuple(sorted(np.delete(cell, drop)))
                face_map.setdefault(face, []).append((c, drop))
        return face_map

    def facet_parent_cells(self):
        """Cell index owning each boundary facet (-1 if none or ambiguous)."""
        _, idx = self.facet_arrays
        parents = np.full(len(idx), -1, dtype=np.int64)
        for k, facet in enumerate(idx):
            owners = self._face_to_cells.get(tuple(sorted(facet)), [])
            if len(owners) == 1:
                parents[k] = owners[0][0]
        return parents

    def facet_normals(self):
        """Unit outward normal of every boundary facet.

        Oriented away from the opposite vertex of the parent cell; raises
        ValidationError when a facet has no unique parent.
        """
        _, idx = self.facet_arrays
        parents = self.facet_parent_cells()
        if np.any(parents < 0):
            raise ValidationError("facet without a unique parent cell")
        normals = np.zeros((len(idx), self.dim))
        for k, facet in enumerate(idx):
            cell = self.cells[parents[k]]
            opposite = self.vertices[[v for v in cell if v not in facet][0]]
            pts = self.vertices[list(facet)]
            if self.dim == 1:
                n = np.array([1.0])
            elif self.dim == 2:
                t = pts[1] - pts[0]
                n = np.array([t[1], -t[0]])
            else:
                n = np.cross(pts[1] - pts[0], pts[2] - pts[0])
            n = n / np.linalg.norm(n)
            if np.dot(n, pts.mean(axis=0) - opposite) < 0:
                n = -n
            normals[k] = n
        return normals

    def dirichlet_vertices(self):
        """Sorted indices of vertices lying on Dirichlet-marked facets."""
        markers, idx = self.facet_arrays
        if len(idx) == 0:
            return np.zeros(0, dtype=np.int64)
        sel = np.array([m == Marker.DIRICHLET for m in markers], dtype=bool)
        return np.unique(idx[sel].ravel()) if sel.any() else np.zeros(0, dtype=np.int64)

    def __eq__(self, other):
        if not isinstance(other, SimplicialMesh):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.vertices.shape == other.vertices.shape
            and np.array_equal(self.vertices, other.vertices)
            and np.array_equal(self.cells, other.cells)
            and self.boundary_facets == other.boundary_facets
        )

    __hash__ = object.__hash__  # identity hashing; meshes are cache keys

    def __repr__(self):
        return (
            f"SimplicialMesh(dim={self.dim}, vertices={self.num_vertices}, "
            f"cells={self.num_cells}, facets={len(self.boundary_facets)})"
        )


def validate(mesh):
    """Check every mesh invariant; returns a list of violations (empty = ok)."""
    violations = []
    n = mesh.num_vertices
    if mesh.cells.size and (mesh.cells.min() < 0 or mesh.cells.max() >= n):
        violations.append("cell vertex index out of range")
    _, fidx = mesh.facet_arrays
    if fidx.size and (fidx.min() < 0 or fidx.max() >= n):
        violations.append("facet vertex index out of range")
    if violations:
        return violations

    measures = _signed_measures(mesh.dim, mesh.vertices, mesh.cells)
    bad = np.flatnonzero(measures <= 0)
    for c in bad:
        violations.append(f"cell {c} has nonpositive measure {measures[c]:.3e}")

    seen = {}
    for k, (marker, facet) in enumerate(mesh.boundary_facets):
        key = tuple(sorted(facet))
        if key in seen:
            violations.append(
                f"facet {facet} listed more than once (markers {seen[key].value}, {marker.value})"
            )
        else:
            seen[key] = marker
        owners = mesh._face_to_cells.get(key, [])
        if len(owners) != 1:
            violations.append(
                f"facet {facet} is a face of {len(owners)} cells, expected exactly 1"
            )
    return violations


def _require_valid(mesh):
    violations = validate(mesh)
    if violations:
        raise ValidationError(violations)
    return mesh


def generate_interval_mesh(a, b, n_cells, left=Marker.DIRICHLET, right=Marker.DIRICHLET):
    """Uniform 1D mesh of [a, b] with `n_cells` cells.

    Endpoint markers default to Dirichlet on both sides.
    """
    if not a < b:
        raise InvalidGeometry(f"need a < b, got a={a}, b={b}")
    if n_cells < 1:
        raise InvalidGeometry("n_cells must be >= 1")
    x = np.linspace(a, b, n_cells + 1)
    cells = np.column_stack([np.arange(n_cells), np.arange(1, n_cells + 1)])
    facets = [(Marker(left), (0,)), (Marker(right), (n_cells,))]
    return _require_valid(SimplicialMesh(1, x[:, None], cells, facets))


def generate_annulus_mesh(
    r_in, r_out, n_radial, n_angular, inner=Marker.ROBIN, outer=Marker.ROBIN
):
    """Structured triangulation of the annulus r_in <= |x| <= r_out.

    `n_radial` rings of quads, each split into two triangles, with
    `n_angular` vertices per ring.  The circles are approximated by the
    inscribed regular polygons on `n_angular` vertices.
    """
    if not (0 < r_in < r_out):
        raise InvalidGeometry(f"need 0 < r_in < r_out, got {r_in}, {r_out}")
    if n_radial < 1 or n_angular < 3:
        raise InvalidGeometry("need n_radial >= 1 and n_angular >= 3")
    radii = np.linspace(r_in, r_out, n_radial + 1)
    theta = 2.0 * np.pi * np.arange(n_angular) / n_angular
    verts = np.empty((len(radii) * n_angular, 2))
    for i, r in enumerate(radii):
        verts[i * n_angular : (i + 1) * n_angular, 0] = r * np.cos(theta)
        verts[i * n_angular : (i + 1) * n_angular, 1] = r * np.sin(theta)

    cells = []
    for i in range(n_radial):
        base, top = i * n_angular, (i + 1) * n_angular
        for j in range(n_angular):
            jn = (j + 1) % n_angular
            cells.append((base + j, base + jn, top + j))
            cells.append((base + jn, top + jn, top + j))
    facets = []
    last = n_radial * n_angular
    for j in range(n_angular):
        jn = (j + 1) % n_angular
        facets.append((Marker(inner), (j, jn)))
        facets.append((Marker(outer), (last + j, last + jn)))
    return _require_valid(SimplicialMesh(2, verts, np.array(cells), facets))


def _icosphere(subdivisions):
    """Unit icosphere: (vertices, triangles) after `subdivisions` splits."""
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    raw = [
        (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
        (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
        (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
    ]
    verts = [np.array(v, dtype=float) / np.linalg.norm(v) for v in raw]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    for _ in range(subdivisions):
        midpoint = {}

        def mid(i, j):
            key = (min(i, j), max(i, j))
            if key not in midpoint:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                midpoint[key] = len(verts) - 1
            return midpoint[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    return np.array(verts), np.array(faces, dtype=np.int64)


def generate_shell_mesh(
    r_in,
    r_out,
    refinement,
    inner=Marker.ROBIN,
    outer=Marker.ROBIN,
    n_layers=None,
):
    """Tetrahedral spherical shell r_in <= |x| <= r_out.

    The sphere is an icosphere subdivided `refinement` times, extruded
    radially through `n_layers` layers (default refinement + 1).  Radii
    are geometrically graded, which keeps cell aspect ratios reasonable
    for large r_out/r_in; each triangular prism is split into three
    tetrahedra with globally consistent quad-face diagonals.
    """
    if not (0 < r_in < r_out):
        raise InvalidGeometry(f"need 0 < r_in < r_out, got {r_in}, {r_out}")
    if refinement < 0:
        raise InvalidGeometry("refinement must be >= 0")
    layers = (refinement + 1) if n_layers is None else int(n_layers)
    if layers < 1:
        raise InvalidGeometry("n_layers must be >= 1")

    surf_v, surf_f = _icosphere(refinement)
    ns = len(surf_v)
    radii = r_in * (r_out / r_in) ** (np.arange(layers + 1) / layers)
    verts = np.concatenate([r * surf_v for r in radii], axis=0)

    cells = []
    for layer in range(layers):
        lo, hi = layer * ns, (layer + 1) * ns
        for tri in surf_f:
            g = sorted(tri)  # global surface ids fix the diagonal pattern
            p = [lo + v for v in g]
            q = [hi + v for v in g]
            cells.append((p[0], p[1], p[2], q[2]))
            cells.append((p[0], p[1], q[2], q[1]))
            cells.append((p[0], q[1], q[2], q[0]))

    facets = []
    last = layers * ns
    for tri in surf_f:
        facets.append((Marker(inner), tuple(int(v) for v in tri)))
        facets.append((Marker(outer), tuple(int(last + v) for v in tri)))
    return _require_valid(SimplicialMesh(3, verts, np.array(cells), facets))


def save_mesh(mesh, path):
    """Write a mesh to the whitespace-separated ASCII format."""
    lines = [f"dim {mesh.dim}", f"vertices {mesh.num_vertices}"]
    for v in mesh.vertices:
        lines.append(" ".join(repr(float(c)) for c in v))
    lines.append(f"cells {mesh.num_cells}")
    for cell in mesh.cells:
        lines.append(" ".join(str(int(i)) for i in cell))
    lines.append(f"boundary_facets {len(mesh.boundary_facets)}")
    for marker, facet in mesh.boundary_facets:
        lines.append(marker.value + " " + " ".join(str(int(i)) for i in facet))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


class _LineReader:
    def __init__(self, path):
        with open(path) as fh:
            self.raw = fh.readlines()
        self.pos = 0

    def next_fields(self):
        while self.pos < len(self.raw):
            self.pos += 1
            text = self.raw[self.pos - 1].split("#", 1)[0].strip()
            if text:
                return text.split(), self.pos
        raise ParseError("unexpected end of file", line=len(self.raw))


def load_mesh(path):
    """Read a mesh written by save_mesh; validates before returning."""
    reader = _LineReader(path)

    def expect_header(keyword):
        fields, line = reader.next_fields()
        if len(fields) != 2 or fields[0] != keyword:
            raise ParseError(f"expected '{keyword} <count>'", line=line)
        try:
            return int(fields[1]), line
        except ValueError:
            raise ParseError(f"bad count {fields[1]!r}", line=line) from None

    dim, line = expect_header("dim")
    if dim not in (1, 2, 3):
        raise ParseError(f"unsupported dimension {dim}", line=line)

    nv, _ = expect_header("vertices")
    verts = np.empty((nv, dim))
    for i in range(nv):
        fields, line = reader.next_fields()
        if len(fields) != dim:
            raise ParseError(f"expected {dim} coordinates", line=line)
        try:
            verts[i] = [float(f) for f in fields]
        except ValueError:
            raise ParseError("bad coordinate", line=line) from None

    nc, _ = expect_header("cells")
    cells = np.empty((nc, dim + 1), dtype=np.int64)
    for i in range(nc):
        fields, line = reader.next_fields()
        if len(fields) != dim + 1:
            raise ParseError(f"expected {dim + 1} vertex indices", line=line)
        try:
            cells[i] = [int(f) for f in fields]
        except ValueError:
            raise ParseError("bad vertex index", line=line) from None

    nb, _ = expect_header("boundary_facets")
    facets = []
    for _ in range(nb):
        fields, line = reader.next_fields()
        if len(fields) != dim + 1:
            raise ParseError(f"expected marker plus {dim} indices", line=line)
        try:
            marker = Marker(fields[0])
        except ValueError:
            raise ParseError(f"unknown marker {fields[0]!r}", line=line) from None
        try:
            facets.append((marker, tuple(int(f) for f in fields[1:])))
        except ValueError:
            raise ParseError("bad facet index", line=line) from None

    mesh = SimplicialMesh(dim, verts, cells, facets, fix_orientation=False)
    return _require_valid(mesh)
