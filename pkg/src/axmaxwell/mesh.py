"""Triangulations of the meridian half-plane.

Vertices live in the (r, z) plane with r >= 0.  The boundary is split into
the axis part (edges lying exactly on r = 0) and the wall part (everything
else); wall vertices whose interior angle exceeds pi are reported as
reentrant corners together with the data needed to build the local singular
frame (opening exponent alpha, frame offset phi0, cutoff scale a).
"""

import math
from dataclasses import dataclass

import numpy as np

AXIS = 0
WALL = 1

_TAG_NAMES = {AXIS: "axis", WALL: "wall"}
_TAG_VALUES = {"axis": AXIS, "wall": WALL}

# generated coordinates below this magnitude snap to exactly r = 0
_AXIS_SNAP = 1e-14
# reentrancy threshold guard: generated polygons have exact right angles
ANGLE_TOL = 1e-6


class MeshError(ValueError):
    """Invalid mesh data (geometry, conformity or file format)."""


@dataclass(frozen=True)
class CornerDescriptor:
    """A reentrant corner of the meridian domain.

    alpha = pi / interior_angle lies in (1/2, 1) for a reentrant corner.
    phi0 is the global (r,z)-plane angle of the wall edge from which the
    local polar angle phi is measured; sweeping counterclockwise by the
    interior angle from that edge crosses the interior of the domain and
    lands on the other incident wall edge.  a is the length scale of the
    r/a cutoff carried by the principal parts.
    """

    corner_vertex: int
    position: tuple
    interior_angle: float
    alpha: float
    phi0: float
    a: float

    @property
    def reentrant(self):
        return self.interior_angle > math.pi + ANGLE_TOL

    def local_coords(self, points):
        """Map (r, z) points to local polar (rho, phi) around the corner.

        phi is measured counterclockwise from the phi0 ray and wrapped to
        [0, 2*pi); interior points land in [0, interior_angle].
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        dr = pts[:, 0] - self.position[0]
        dz = pts[:, 1] - self.position[1]
        rho = np.hypot(dr, dz)
        phi = np.mod(np.arctan2(dz, dr) - self.phi0, 2.0 * math.pi)
        return rho, phi


@dataclass(frozen=True)
class ConicalDescriptor:
    """A conical vertex on the axis: position (0, z) and aperture in (0, pi)."""

    z: float
    aperture: float

    def __post_init__(self):
        if not 0.0 < self.aperture < math.pi:
            raise MeshError(f"conical aperture must lie in (0, pi), got {self.aperture}")

    @property
    def position(self):
        return (0.0, self.z)


class TriangleMesh:
    """Conforming triangulation of the meridian domain.

    Arrays are frozen after construction; meshes may be shared freely.
    """

    def __init__(self, vertices, triangles, boundary_edges, boundary_tags, h):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        self.boundary_edges = np.ascontiguousarray(boundary_edges, dtype=np.int64)
        self.boundary_tags = np.ascontiguousarray(boundary_tags, dtype=np.int64)
        self.h = float(h)
        self._validate()
        for arr in (self.vertices, self.triangles, self.boundary_edges, self.boundary_tags):
            arr.setflags(write=False)

    # -- basic queries ----------------------------------------------------

    @property
    def num_vertices(self):
        return self.vertices.shape[0]

    @property
    def num_triangles(self):
        return self.triangles.shape[0]

    def triangle_areas(self):
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def axis_vertices(self):
        """Vertices lying on axis-tagged edges."""
        if len(self.boundary_edges) == 0:
            return np.zeros(0, dtype=np.int64)
        on_axis = self.boundary_edges[self.boundary_tags == AXIS]
        return np.unique(on_axis)

    def wall_vertices(self):
        if len(self.boundary_edges) == 0:
            return np.zeros(0, dtype=np.int64)
        on_wall = self.boundary_edges[self.boundary_tags == WALL]
        return np.unique(on_wall)

    def diameter(self):
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return float(np.hypot(*(hi - lo)))

    def __eq__(self, other):
        if not isinstance(other, TriangleMesh):
            return NotImplemented
        return (
            np.array_equal(self.vertices, other.vertices)
            and np.array_equal(self.triangles, other.triangles)
            and np.array_equal(self.boundary_edges, other.boundary_edges)
            and np.array_equal(self.boundary_tags, other.boundary_tags)
        )

    def __repr__(self):
        return (
            f"TriangleMesh(nv={self.num_vertices}, nt={self.num_triangles}, "
            f"nb={len(self.boundary_edges)}, h={self.h})"
        )

    # -- validation --------------------------------------------------------

    def _validate(self):
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 2:
            raise MeshError("vertices must be an (n, 2) array")
        if np.any(self.vertices[:, 0] < 0.0):
            raise MeshError("vertex with negative r coordinate")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise MeshError("triangles must be an (m, 3) array")
        nv = self.num_vertices
        if self.num_triangles == 0:
            raise MeshError("mesh has no triangles")
        if self.triangles.min() < 0 or self.triangles.max() >= nv:
            raise MeshError("triangle vertex index out of range")
        areas = self.triangle_areas()
        if np.any(areas <= 0.0):
            bad = int(np.argmax(areas <= 0.0))
            raise MeshError(f"triangle {bad} is degenerate or not counterclockwise")
        key = np.sort(self.triangles, axis=1)
        uniq = np.unique(key, axis=0)
        if uniq.shape[0] != self.num_triangles:
            raise MeshError("duplicated triangle")
        # conformity: every edge shared by at most two triangles, and the
        # declared boundary must coincide with the once-used edges
        edges = _triangle_edges(self.triangles)
        order = np.lexsort((edges[:, 1], edges[:, 0]))
        se = edges[order]
        uniq_e, counts = np.unique(se, axis=0, return_counts=True)
        if np.any(counts > 2):
            raise MeshError("non-conforming triangulation: edge used more than twice")
        boundary = uniq_e[counts == 1]
        declared = np.sort(self.boundary_edges, axis=1)
        if boundary.shape[0] != declared.shape[0] or not np.array_equal(
            boundary, declared[np.lexsort((declared[:, 1], declared[:, 0]))]
        ):
            raise MeshError("declared boundary does not match triangulation boundary")
        # closed loop: every boundary vertex has exactly two incident edges
        counts_v = np.bincount(boundary.ravel(), minlength=nv)
        if np.any((counts_v != 0) & (counts_v != 2)):
            raise MeshError("boundary is not a single closed loop")
        axis_edges = self.boundary_edges[self.boundary_tags == AXIS]
        if axis_edges.size and np.any(self.vertices[np.unique(axis_edges), 0] != 0.0):
            raise MeshError("axis-tagged edge off the axis r = 0")


def _triangle_edges(triangles):
    e = np.concatenate(
        [triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]], axis=0
    )
    return np.sort(e, axis=1)


# -- generators -------------------------------------------------------------


def _snap_axis(coords):
    out = np.asarray(coords, dtype=float).copy()
    out[np.abs(out) < _AXIS_SNAP] = 0.0
    return out


def _grid_lines(lo, hi, h, anchors=()):
    """Split [lo, hi] into near-uniform cells of size about h, forcing the
    anchor coordinates onto grid lines."""
    stops = sorted({lo, hi, *anchors})
    lines = [lo]
    for a, b in zip(stops[:-1], stops[1:]):
        n = max(1, round((b - a) / h))
        lines.extend(a + (b - a) * (i + 1) / n for i in range(n))
    return np.array(lines)


def _structured_mesh(rlines, zlines, h, keep=None):
    nr, nz = len(rlines), len(zlines)
    rr, zz = np.meshgrid(rlines, zlines, indexing="ij")
    verts = np.column_stack([_snap_axis(rr.ravel()), zz.ravel()])
    vid = np.arange(nr * nz).reshape(nr, nz)
    tris = []
    for i in range(nr - 1):
        for j in range(nz - 1):
            if keep is not None and not keep(
                0.5 * (rlines[i] + rlines[i + 1]), 0.5 * (zlines[j] + zlines[j + 1])
            ):
                continue
            v00, v10 = vid[i, j], vid[i + 1, j]
            v01, v11 = vid[i, j + 1], vid[i + 1, j + 1]
            tris.append((v00, v10, v11))
            tris.append((v00, v11, v01))
    if not tris:
        raise MeshError("h too large: no cells generated")
    tris = np.array(tris, dtype=np.int64)
    used = np.unique(tris)
    remap = -np.ones(nr * nz, dtype=np.int64)
    remap[used] = np.arange(len(used))
    verts = verts[used]
    tris = remap[tris]
    edges, tags = _boundary_from_triangles(verts, tris)
    return TriangleMesh(verts, tris, edges, tags, h)


def _boundary_from_triangles(verts, tris):
    edges = _triangle_edges(tris)
    uniq, counts = np.unique(edges, axis=0, return_counts=True)
    bnd = uniq[counts == 1]
    on_axis = (verts[bnd[:, 0], 0] == 0.0) & (verts[bnd[:, 1], 0] == 0.0)
    tags = np.where(on_axis, AXIS, WALL)
    return bnd, tags


def gen_rectangle(rmin, rmax, zmin, zmax, h):
    """Structured triangulation of the rectangle [rmin, rmax] x [zmin, zmax].

    Edges on r = rmin are tagged as axis exactly when rmin = 0.
    """
    if h <= 0.0:
        raise MeshError("mesh size h must be positive")
    if not (0.0 <= rmin < rmax) or not zmin < zmax:
        raise MeshError("need 0 <= rmin < rmax and zmin < zmax")
    rlines = _grid_lines(rmin, rmax, h)
    zlines = _grid_lines(zmin, zmax, h)
    return _structured_mesh(rlines, zlines, h)


def gen_lshape(r_c, z_c, rmax=1.0, zmin=0.0, zmax=1.0, h=0.1):
    """L-shaped meridian domain with one reentrant corner at (r_c, z_c).

    The domain is [0, rmax] x [zmin, zmax] with the block r > r_c, z < z_c
    removed; rotating it around r = 0 gives a top-hat shape whose reentrant
    circular edge passes through the corner.  Returns the mesh together with
    the corner descriptor (interior angle 3*pi/2, alpha = 2/3, a = r_c).
    """
    if h <= 0.0:
        raise MeshError("mesh size h must be positive")
    if not (0.0 < r_c < rmax and zmin < z_c < zmax):
        raise MeshError("corner must lie strictly inside the bounding box, off the axis")
    if h > min(r_c, rmax - r_c, z_c - zmin, zmax - z_c):
        raise MeshError("h too large to resolve the corner")
    rlines = _grid_lines(0.0, rmax, h, anchors=(r_c,))
    zlines = _grid_lines(zmin, zmax, h, anchors=(z_c,))
    mesh = _structured_mesh(
        rlines, zlines, h, keep=lambda r, z: not (r > r_c and z < z_c)
    )
    corners = classify_boundary(mesh)
    if len(corners) != 1:
        raise MeshError(f"expected exactly one reentrant corner, found {len(corners)}")
    return mesh, corners[0]


# -- classification ----------------------------------------------------------


def classify_boundary(mesh):
    """Detect reentrant corners of a mesh; returns a list of descriptors.

    The boundary tags themselves are recomputed from the geometry (edges
    with both endpoints at r = 0 are axis), so the operation is idempotent.
    Wall vertices with interior angle > pi + ANGLE_TOL become corners; the
    interior angle is the sum of the incident triangle angles, which is
    robust for conforming meshes.
    """
    verts = mesh.vertices
    angle_sum = np.zeros(mesh.num_vertices)
    for loc in range(3):
        a = mesh.triangles[:, loc]
        b = mesh.triangles[:, (loc + 1) % 3]
        c = mesh.triangles[:, (loc + 2) % 3]
        u = verts[b] - verts[a]
        v = verts[c] - verts[a]
        cross = u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]
        dot = (u * v).sum(axis=1)
        np.add.at(angle_sum, a, np.arctan2(np.abs(cross), dot))
    corners = []
    incident = {}
    for (i, j), tag in zip(mesh.boundary_edges, mesh.boundary_tags):
        for v in (int(i), int(j)):
            incident.setdefault(v, []).append((int(i) + int(j) - v, tag))
    for v in sorted(incident):
        theta = angle_sum[v]
        if theta <= math.pi + ANGLE_TOL:
            continue
        if abs(theta - math.pi) <= 10 * ANGLE_TOL and theta > math.pi:
            raise MeshError(f"ambiguous interior angle at vertex {v}")
        nbrs = incident[v]
        if any(tag == AXIS for _, tag in nbrs):
            raise MeshError("reentrant corner on the axis is not supported")
        d = [verts[w] - verts[v] for w, _ in nbrs]
        psi = [math.atan2(dv[1], dv[0]) for dv in d]
        # the phi0 ray is the incident wall edge whose counterclockwise sweep
        # by the interior angle crosses the domain and reaches the other edge
        if math.isclose((psi[1] - psi[0]) % (2 * math.pi), theta, abs_tol=1e-9):
            phi0 = psi[0]
        elif math.isclose((psi[0] - psi[1]) % (2 * math.pi), theta, abs_tol=1e-9):
            phi0 = psi[1]
        else:
            raise MeshError(f"incident wall edges at vertex {v} do not bound the corner")
        r_c = float(verts[v, 0])
        corners.append(
            CornerDescriptor(
                corner_vertex=v,
                position=(r_c, float(verts[v, 1])),
                interior_angle=float(theta),
                alpha=math.pi / float(theta),
                phi0=float(phi0),
                a=r_c,
            )
        )
    return corners


# -- file format --------------------------------------------------------------
#
# axmesh 1
# vertices N          followed by N lines  "r z"
# triangles M         followed by M lines  "i j k"
# boundary B          followed by B lines  "i j tag"     tag in {axis, wall}


def save_mesh(mesh, path):
    with open(path, "w") as fp:
        fp.write("axmesh 1\n")
        fp.write(f"vertices {mesh.num_vertices}\n")
        for r, z in mesh.vertices:
            fp.write("%.17g %.17g\n" % (r, z))
        fp.write(f"triangles {mesh.num_triangles}\n")
        for i, j, k in mesh.triangles:
            fp.write(f"{i} {j} {k}\n")
        fp.write(f"boundary {len(mesh.boundary_edges)}\n")
        for (i, j), tag in zip(mesh.boundary_edges, mesh.boundary_tags):
            fp.write(f"{i} {j} {_TAG_NAMES[int(tag)]}\n")


def load_mesh(path, h=None):
    with open(path) as fp:
        lines = [ln.strip() for ln in fp if ln.strip()]
    pos = 0

    def take():
        nonlocal pos
        if pos >= len(lines):
            raise MeshError(f"{path}: truncated mesh file")
        ln = lines[pos]
        pos += 1
        return ln

    header = take().split()
    if header != ["axmesh", "1"]:
        raise MeshError(f"{path}: bad header, expected 'axmesh 1'")

    def block(name, width, conv):
        head = take().split()
        if len(head) != 2 or head[0] != name:
            raise MeshError(f"{path}: expected '{name} N' block header")
        try:
            n = int(head[1])
        except ValueError as exc:
            raise MeshError(f"{path}: bad {name} count") from exc
        rows = []
        for _ in range(n):
            parts = take().split()
            if len(parts) != width:
                raise MeshError(f"{path}: malformed {name} line")
            rows.append([conv(p) for p in parts])
        return rows

    try:
        verts = np.array(block("vertices", 2, float), dtype=float).reshape(-1, 2)
        tris = np.array(block("triangles", 3, int), dtype=np.int64).reshape(-1, 3)
        bnd_rows = block("boundary", 3, str)
    except ValueError as exc:
        raise MeshError(f"{path}: {exc}") from exc
    edges = []
    tags = []
    for i, j, tag in bnd_rows:
        if tag not in _TAG_VALUES:
            raise MeshError(f"{path}: unknown boundary tag {tag!r}")
        edges.append((int(i), int(j)))
        tags.append(_TAG_VALUES[tag])
    if pos != len(lines):
        raise MeshError(f"{path}: trailing data after boundary block")
    edges = np.array(edges, dtype=np.int64).reshape(-1, 2)
    tags = np.array(tags, dtype=np.int64)
    if h is None:
        p = verts[tris]
        lengths = [np.hypot(*(p[:, a] - p[:, b]).T) for a, b in ((0, 1), (1, 2), (2, 0))]
        h = float(np.median(np.concatenate(lengths))) if len(tris) else 1.0
    return TriangleMesh(verts, tris, edges, tags, h)
