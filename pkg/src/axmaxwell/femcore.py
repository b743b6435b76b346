"""P1 nodal elements on the meridian triangulation.

Fields for mode k are complex with three components (u_r, u_theta, u_z) per
vertex.  Integration uses a degree-5 rule with strictly interior points so
that the weight r and the 1/r factors of the mode-k operators are always
evaluable; elements close to a reentrant corner are integrated on a 4-way
midpoint subdivision to control the rho^(alpha-1) integrands.

Essential constraints encode the trace conditions of the per-mode electric
(X) and magnetic (Y) spaces together with the axis regularity of Fourier
coefficients:

  wall, space X:   u_theta = 0 and meridian tangential component = 0
  wall, space Y:   meridian normal component = 0
  axis, k = 0:     u_r = 0, u_theta = 0
  axis, |k| = 1:   u_z = 0 and the tie u_theta = i*sign(k)*u_r
  axis, |k| >= 2:  u_r = u_theta = u_z = 0

Wall edges must be axis-aligned (the generators only produce such meshes).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .mesh import AXIS, WALL, MeshError

SPACE_X = "X"  # electric: tangential trace clamped on the wall
SPACE_Y = "Y"  # magnetic: normal trace clamped on the wall

FREE, ZERO, TIE = 0, 1, 2

_GEOM_TOL = 1e-12


# -- quadrature ---------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureRule:
    """Barycentric points/weights on the reference triangle (weights sum to 1)."""

    points: np.ndarray
    weights: np.ndarray


def default_rule():
    """Degree-5, 7-point rule; all points strictly interior."""
    s15 = math.sqrt(15.0)
    a = (6.0 - s15) / 21.0
    b = (6.0 + s15) / 21.0
    pts = [(1 / 3, 1 / 3, 1 / 3)]
    wts = [9.0 / 40.0]
    for c, w in ((a, (155.0 - s15) / 1200.0), (b, (155.0 + s15) / 1200.0)):
        pts += [(1 - 2 * c, c, c), (c, 1 - 2 * c, c), (c, c, 1 - 2 * c)]
        wts += [w, w, w]
    return QuadratureRule(np.array(pts), np.array(wts))


_SUB_CORNERS = [
    # midpoint subdivision of the reference triangle, rows = barycentric
    # coordinates of the sub-triangle corners
    np.array([[1.0, 0.0, 0.0], [0.5, 0.5, 0.0], [0.5, 0.0, 0.5]]),
    np.array([[0.5, 0.5, 0.0], [0.0, 1.0, 0.0], [0.0, 0.5, 0.5]]),
    np.array([[0.5, 0.0, 0.5], [0.0, 0.5, 0.5], [0.0, 0.0, 1.0]]),
    np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]]),
]


class MeshQuadrature:
    """Flattened quadrature data over all elements of a mesh.

    Attributes (Q = total number of points):
      tri    (Q,)   owning triangle index
      bary   (Q,3)  barycentric coordinates within the owning triangle
      xy     (Q,2)  physical (r, z) coordinates
      w      (Q,)   weight including the element area (but not the r factor)
      r      (Q,)   radial coordinate, strictly positive
    """

    def __init__(self, mesh, corner=None, rule=None, refine_radius=None):
        rule = rule or default_rule()
        areas = mesh.triangle_areas()
        nt = mesh.num_triangles
        refined = np.zeros(nt, dtype=bool)
        if corner is not None:
            radius = mesh.h if refine_radius is None else refine_radius
            pos = np.asarray(corner.position)
            d = np.linalg.norm(mesh.vertices[mesh.triangles] - pos, axis=2).min(axis=1)
            refined = d <= radius + _GEOM_TOL
        tri_idx = []
        bary = []
        wts = []
        plain = np.where(~refined)[0]
        if plain.size:
            nq = len(rule.weights)
            tri_idx.append(np.repeat(plain, nq))
            bary.append(np.tile(rule.points, (plain.size, 1)))
            wts.append(np.outer(areas[plain], rule.weights).ravel())
        for t in np.where(refined)[0]:
            for sub in _SUB_CORNERS:
                pts = rule.points @ sub  # rule points in parent barycentric coords
                tri_idx.append(np.full(len(rule.weights), t))
                bary.append(pts)
                wts.append(0.25 * areas[t] * rule.weights)
        self.mesh = mesh
        self.tri = np.concatenate(tri_idx)
        self.bary = np.concatenate(bary, axis=0)
        self.w = np.concatenate(wts)
        corners = mesh.vertices[mesh.triangles[self.tri]]
        self.xy = np.einsum("qi,qij->qj", self.bary, corners)
        self.r = self.xy[:, 0]
        if np.any(self.r <= 0.0):
            raise MeshError("quadrature point on or beyond the axis")

    def integrate(self, values):
        """Integral of point values against the weighted measure r dr dz."""
        return np.sum(values * self.w * self.r, axis=-1)

    def integrate_plain(self, values):
        """Integral against the unweighted measure dr dz."""
        return np.sum(values * self.w, axis=-1)


def gradients(mesh):
    """Constant P1 shape gradients per triangle, shape (nt, 3, 2)."""
    p = mesh.vertices[mesh.triangles]
    g = np.empty((mesh.num_triangles, 3, 2))
    det = 2.0 * mesh.triangle_areas()
    for loc in range(3):
        a = p[:, (loc + 1) % 3]
        b = p[:, (loc + 2) % 3]
        g[:, loc, 0] = (a[:, 1] - b[:, 1]) / det
        g[:, loc, 1] = (b[:, 0] - a[:, 0]) / det
    return g


# -- fields --------------------------------------------------------------------


class ModeField:
    """Complex nodal field (u_r, u_theta, u_z) attached to a Fourier mode."""

    def __init__(self, mesh, k, values=None):
        self.mesh = mesh
        self.k = int(k)
        if values is None:
            values = np.zeros((mesh.num_vertices, 3), dtype=complex)
        self.values = np.asarray(values, dtype=complex).reshape(mesh.num_vertices, 3)

    def copy(self):
        return ModeField(self.mesh, self.k, self.values.copy())

    def __add__(self, other):
        if self.mesh is not other.mesh:
            raise ValueError("fields live on different meshes")
        return ModeField(self.mesh, self.k, self.values + other.values)

    def __mul__(self, scalar):
        return ModeField(self.mesh, self.k, self.values * scalar)

    __rmul__ = __mul__

    def conj(self):
        return ModeField(self.mesh, -self.k, np.conj(self.values))


def _locate(mesh, point, tol=1e-12):
    """Triangle index and barycentric coordinates containing the point."""
    p = np.asarray(point, dtype=float)
    verts = mesh.vertices[mesh.triangles]
    v0 = verts[:, 0]
    d1 = verts[:, 1] - v0
    d2 = verts[:, 2] - v0
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    dp = p - v0
    l1 = (dp[:, 0] * d2[:, 1] - dp[:, 1] * d2[:, 0]) / det
    l2 = (d1[:, 0] * dp[:, 1] - d1[:, 1] * dp[:, 0]) / det
    l0 = 1.0 - l1 - l2
    inside = (l0 >= -tol) & (l1 >= -tol) & (l2 >= -tol)
    idx = np.where(inside)[0]
    if idx.size == 0:
        raise ValueError(f"point {tuple(p)} lies outside the mesh")
    t = int(idx[0])
    return t, np.array([l0[t], l1[t], l2[t]])


def interpolate(field, point):
    """Barycentric P1 interpolation of a ModeField at a meridian point."""
    t, lam = _locate(field.mesh, point)
    return lam @ field.values[field.mesh.triangles[t]]


def interpolate_scalar(mesh, nodal, point):
    t, lam = _locate(mesh, point)
    return lam @ np.asarray(nodal)[mesh.triangles[t]]


# -- constraints ---------------------------------------------------------------


def _dof(vertex, comp):
    return 3 * vertex + comp


@dataclass
class ConstraintSet:
    """Essential constraints for one (mode, space) pair.

    kind[dof] is FREE, ZERO or TIE; tied dofs satisfy
    value[dof] = coeff[dof] * value[master[dof]] with a free master.
    """

    mesh: object
    k: int
    space: str
    kind: np.ndarray
    master: np.ndarray
    coeff: np.ndarray
    free_index: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.free_index is None:
            self.free_index = -np.ones(len(self.kind), dtype=np.int64)
            free = np.where(self.kind == FREE)[0]
            self.free_index[free] = np.arange(free.size)

    @property
    def n_dofs(self):
        return len(self.kind)

    @property
    def n_free(self):
        return int((self.kind == FREE).sum())

    def targets(self):
        """Per dof: (free index it maps to, mapping coefficient).

        Zero-constrained dofs map to index -1 with coefficient 0.
        """
        tgt = np.where(self.kind == TIE, self.master, np.arange(self.n_dofs))
        fidx = self.free_index[tgt]
        coeff = np.where(self.kind == TIE, self.coeff, 1.0 + 0.0j)
        coeff = np.where(self.kind == ZERO, 0.0, coeff)
        fidx = np.where(self.kind == ZERO, -1, fidx)
        return fidx, coeff

    def expand(self, xfree):
        """Nodal values of the field represented by free-dof coefficients."""
        fidx, coeff = self.targets()
        vals = np.zeros(self.n_dofs, dtype=complex)
        ok = fidx >= 0
        vals[ok] = coeff[ok] * np.asarray(xfree)[fidx[ok]]
        return ModeField(self.mesh, self.k, vals.reshape(-1, 3))

    def restrict(self, full):
        """Adjoint of expand: maps a full-dof functional to free dofs."""
        fidx, coeff = self.targets()
        out = np.zeros(self.n_free, dtype=complex)
        ok = fidx >= 0
        np.add.at(out, fidx[ok], np.conj(coeff[ok]) * np.asarray(full).ravel()[ok])
        return out

    def free_values(self, fld):
        """Free-dof coefficients read off a nodal field."""
        vals = np.asarray(fld.values, dtype=complex).ravel()
        return vals[self.kind == FREE]

    def apply(self, fld):
        """Project a nodal field onto the constrained space (idempotent)."""
        vals = np.asarray(fld.values, dtype=complex).ravel().copy()
        vals[self.kind == ZERO] = 0.0
        tied = np.where(self.kind == TIE)[0]
        vals[tied] = self.coeff[tied] * vals[self.master[tied]]
        return ModeField(self.mesh, self.k, vals.reshape(-1, 3))

    def satisfies(self, fld, tol=1e-12):
        diff = fld.values - self.apply(fld).values
        return float(np.abs(diff).max()) <= tol


def _wall_components(mesh):
    """Constrained component sets per wall vertex: (tangential, normal).

    For axis-aligned edges the meridian tangential/normal components are
    single coordinates; a vertex incident to both a horizontal and a
    vertical wall edge collects both.
    """
    tang = {}
    norm = {}
    for (i, j), tag in zip(mesh.boundary_edges, mesh.boundary_tags):
        if tag != WALL:
            continue
        d = mesh.vertices[j] - mesh.vertices[i]
        if abs(d[1]) <= _GEOM_TOL * max(1.0, abs(d[0])):
            t_comp, n_comp = 0, 2  # horizontal edge: tangent e_r, normal e_z
        elif abs(d[0]) <= _GEOM_TOL * max(1.0, abs(d[1])):
            t_comp, n_comp = 2, 0  # vertical edge: tangent e_z, normal e_r
        else:
            raise MeshError("wall edges must be axis-aligned")
        for v in (int(i), int(j)):
            tang.setdefault(v, set()).add(t_comp)
            norm.setdefault(v, set()).add(n_comp)
    return tang, norm


def build_constraints(mesh, k, space):
    """Essential constraints of the discrete X_(k) or Y_(k) space."""
    if space not in (SPACE_X, SPACE_Y):
        raise ValueError(f"space must be '{SPACE_X}' or '{SPACE_Y}'")
    n = 3 * mesh.num_vertices
    kind = np.zeros(n, dtype=np.int8)
    master = np.arange(n, dtype=np.int64)
    coeff = np.ones(n, dtype=complex)

    tang, norm = _wall_components(mesh)
    for v, comps in (tang if space == SPACE_X else norm).items():
        for c in comps:
            kind[_dof(v, c)] = ZERO
        if space == SPACE_X:
            kind[_dof(v, 1)] = ZERO

    for v in mesh.axis_vertices():
        v = int(v)
        if k == 0:
            kind[_dof(v, 0)] = ZERO
            kind[_dof(v, 1)] = ZERO
        elif abs(k) == 1:
            kind[_dof(v, 2)] = ZERO
            if kind[_dof(v, 1)] == ZERO or kind[_dof(v, 0)] == ZERO:
                # a wall condition already pins one side of the tie
                kind[_dof(v, 0)] = ZERO
                kind[_dof(v, 1)] = ZERO
            else:
                kind[_dof(v, 1)] = TIE
                master[_dof(v, 1)] = _dof(v, 0)
                coeff[_dof(v, 1)] = 1j * np.sign(k)
        else:
            for c in range(3):
                kind[_dof(v, c)] = ZERO

    return ConstraintSet(mesh, int(k), space, kind, master, coeff)


def lift_boundary(mesh, k, space, g, constraints=None):
    """Nodal lifting of an inhomogeneous essential trace.

    g maps a boundary point (r, z) to a complex component triple; the
    returned field carries g's constrained components at zero-constrained
    boundary dofs and is zero elsewhere (tie slaves stay with their master).
    """
    cs = constraints if constraints is not None else build_constraints(mesh, k, space)
    out = np.zeros((mesh.num_vertices, 3), dtype=complex)
    boundary = np.unique(mesh.boundary_edges)
    for v in boundary:
        vals = np.asarray(g(mesh.vertices[int(v)]), dtype=complex)
        if not np.all(np.isfinite(vals)):
            raise ValueError(f"boundary trace not finite at vertex {int(v)}")
        for c in range(3):
            if cs.kind[_dof(int(v), c)] == ZERO:
                out[int(v), c] = vals[c]
    return ModeField(mesh, int(k), out)
