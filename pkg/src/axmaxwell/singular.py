"""Analytic principal parts of the geometric singularities and computation
of the per-mode singular complement bases.

Near a reentrant corner of opening pi/alpha the electric and magnetic
singular fields behave like rho^(alpha-1); their principal parts carry the
r/a cutoff that enforces the axis conditions:

  S_e = -(r/a) alpha rho^(alpha-1) (sin T, 0, cos T)        T = (alpha-1) phi - phi0
  S   = -(r/a) alpha rho^(alpha-1) (cos T, 0, -sin T)

with mode-k curls and divergences available in closed form.  The conical
principal part S_c (electric, mode 0 only) is evaluated through the real
degree Legendre functions; only its evaluation and the aperture threshold
bookkeeping are provided.

A singular complement basis is the sum of a principal part and a regular
nodal correction solving the lifted homogeneous problem

  a_k(x_reg, v) = -a_k(S, v)  for all regular test fields v,

with the essential trace of x_reg prescribed to cancel the principal trace
on the wall.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import femcore, modal_ops
from .femcore import MeshQuadrature, ModeField
from .linalg import solve_hpd
from .special import find_beta, find_nu, legendre_p, legendre_p1

EDGE_ELECTRIC = "edge_electric"
EDGE_MAGNETIC = "edge_magnetic"
CONICAL = "conical"

_CORNER_GUARD = 1e-12


@dataclass(frozen=True)
class PrincipalPart:
    """Analytic principal part of one singularity."""

    kind: str
    corner: object = None
    cone: object = None
    nu: float = None

    def __post_init__(self):
        if self.kind in (EDGE_ELECTRIC, EDGE_MAGNETIC):
            if self.corner is None:
                raise ValueError("edge principal parts need a corner descriptor")
            if not 0.5 < self.corner.alpha < 1.0:
                raise ValueError("edge principal parts require a reentrant corner")
        elif self.kind == CONICAL:
            if self.cone is None or self.nu is None:
                raise ValueError("conical principal parts need a cone and an exponent")
            if not 0.0 < self.nu < 0.5:
                raise ValueError(f"conical exponent must lie in (0, 1/2), got {self.nu}")
        else:
            raise ValueError(f"unknown principal part kind {self.kind!r}")

    def values(self, points):
        """Component triples (u_r, u_theta, u_z) at (r, z) points, (P, 3)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind == CONICAL:
            return self._conical_values(pts)
        c = self.corner
        rho, phi = c.local_coords(pts)
        if np.any(rho == 0.0):
            raise ValueError("principal part evaluated at the corner")
        theta = (c.alpha - 1.0) * phi - c.phi0
        amp = -(pts[:, 0] / c.a) * c.alpha * rho ** (c.alpha - 1.0)
        out = np.zeros((len(pts), 3))
        if self.kind == EDGE_ELECTRIC:
            out[:, 0] = amp * np.sin(theta)
            out[:, 2] = amp * np.cos(theta)
        else:
            out[:, 0] = amp * np.cos(theta)
            out[:, 2] = -amp * np.sin(theta)
        return out

    def _conical_values(self, pts):
        cone = self.cone
        dr = pts[:, 0]
        dz = pts[:, 1] - cone.z
        rho = np.hypot(dr, dz)
        if np.any(rho == 0.0):
            raise ValueError("principal part evaluated at the conical vertex")
        phi = np.arctan2(dr, dz)  # measured from the +z axis
        x = np.cos(phi)
        p = np.array([legendre_p(self.nu, xi) for xi in x])
        p1 = np.array([legendre_p1(self.nu, xi) if abs(xi) < 1.0 else 0.0 for xi in x])
        amp = self.nu * rho ** (self.nu - 1.0)
        out = np.zeros((len(pts), 3))
        out[:, 0] = amp * (p * np.cos(phi) - p1 * np.sin(phi))
        out[:, 2] = amp * (p * np.sin(phi) + p1 * np.cos(phi))
        return out

    def curl_div(self, points, k):
        """Closed-form (curl_k, div_k) of an edge principal part.

        Returns (curl (P, 3) complex, div (P,) complex).  Not available for
        the conical kind.
        """
        if self.kind == CONICAL:
            raise NotImplementedError("no closed-form curl/div for the conical part")
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        c = self.corner
        rho, phi = c.local_coords(pts)
        if np.any(rho == 0.0):
            raise ValueError("principal part evaluated at the corner")
        theta = (c.alpha - 1.0) * phi - c.phi0
        amp = (c.alpha / c.a) * rho ** (c.alpha - 1.0)
        ik = 1j * k
        curl = np.zeros((len(pts), 3), dtype=complex)
        if self.kind == EDGE_ELECTRIC:
            curl[:, 0] = -ik * amp * np.cos(theta)
            curl[:, 1] = amp * np.cos(theta)
            curl[:, 2] = ik * amp * np.sin(theta)
            div = -2.0 * amp * np.sin(theta)
        else:
            curl[:, 0] = ik * amp * np.sin(theta)
            curl[:, 1] = -amp * np.sin(theta)
            curl[:, 2] = ik * amp * np.cos(theta)
            div = -2.0 * amp * np.cos(theta)
        return curl, div.astype(complex)


def eval_principal(pp, point):
    """Principal part components at a single meridian point."""
    return pp.values(np.asarray(point, dtype=float).reshape(1, 2))[0]


def eval_principal_curl_div(pp, k, point):
    """Closed-form (curl_k, div_k) of an edge principal part at a point."""
    curl, div = pp.curl_div(np.asarray(point, dtype=float).reshape(1, 2), k)
    return curl[0], div[0]


def principal_for(space, corner):
    kind = EDGE_ELECTRIC if space == femcore.SPACE_X else EDGE_MAGNETIC
    return PrincipalPart(kind, corner=corner)


@dataclass
class SingularBasis:
    """One singular complement function: analytic principal part plus the
    computed regular nodal correction."""

    k: int
    space: str
    principal: PrincipalPart
    regular: ModeField
    diagnostics: dict = field(default_factory=dict)

    @property
    def mesh(self):
        return self.regular.mesh

    def guard_radius(self):
        return _CORNER_GUARD * self.mesh.diameter()

    def principal_nodal(self):
        """Principal part sampled at the vertices, zeroed at the corner."""
        pts = self.mesh.vertices
        corner = self.principal.corner
        rho, _ = corner.local_coords(pts)
        safe = rho > self.guard_radius()
        vals = np.zeros((len(pts), 3), dtype=complex)
        vals[safe] = self.principal.values(pts[safe])
        return vals

    def total_nodal(self):
        """Nodal values of principal + regular; the corner vertex carries
        only the regular value (the principal part diverges there)."""
        return self.regular.values + self.principal_nodal()

    def total_field(self):
        return ModeField(self.mesh, self.k, self.total_nodal())

    def op_arrays(self, ops):
        """(curl, div) of the total basis at the quadrature points of ops,
        evaluated at the mode ops.k (regular part discrete, principal part
        analytic)."""
        reg = ops.op_values(self.regular.values)
        curl, div = self.principal.curl_div(ops.quad.xy, ops.k)
        out = reg.copy()
        out[:, :3] += curl
        out[:, 3] += div
        return out

    def point_arrays(self, ops):
        """Total basis values at the quadrature points of ops, (Q, 3)."""
        return ops.point_values(self.regular.values) + self.principal.values(ops.quad.xy)

    def energy(self, ops):
        """a_k(basis, basis) at the mode of ops; real and positive."""
        bop = self.op_arrays(ops)
        return float(np.sum(ops.wr[:, None] * np.abs(bop) ** 2))

    def conjugate(self):
        """Basis of the opposite mode for conjugate-symmetric data; the
        principal part is real-valued, so only the regular part conjugates."""
        reg = ModeField(self.mesh, -self.k, np.conj(self.regular.values))
        diag = dict(self.diagnostics)
        return SingularBasis(-self.k, self.space, self.principal, reg, diag)


def compute_basis(mesh, corner, k, space, tol=1e-10, maxit=None, allow_high_mode=False):
    """Compute the singular complement basis for one (mode, space) pair.

    Modes beyond |k| = 2 are redundant (the singular subspaces coincide for
    all |k| >= 2) and are rejected unless allow_high_mode is set, which is
    used to cross-check the reuse of the mode-2 basis at higher modes.
    """
    if abs(k) > 2 and not allow_high_mode:
        raise ValueError(
            f"|k| <= 2 suffices for the singular bases (got k={k}); "
            "pass allow_high_mode=True to force a direct computation"
        )
    pp = principal_for(space, corner)
    quad = MeshQuadrature(mesh, corner)
    system = modal_ops.assemble_a_k(mesh, k, space, quad=quad)
    curl_s, div_s = pp.curl_div(quad.xy, k)
    rhs = -system.load_from(f=curl_s, g=div_s)
    guard = _CORNER_GUARD * mesh.diameter()

    def trace(pt):
        rho, _ = corner.local_coords(pt.reshape(1, 2))
        if rho[0] <= guard:
            return np.zeros(3)
        return -pp.values(pt.reshape(1, 2))[0]

    lift = femcore.lift_boundary(mesh, k, space, trace, system.constraints)
    rhs = rhs - system.apply_to_field(lift.values)
    x, info = solve_hpd(system.matrix, rhs, tol=tol, maxit=maxit)
    regular = system.constraints.expand(x) + lift
    basis = SingularBasis(
        int(k),
        space,
        pp,
        regular,
        {"iterations": info.iterations, "residual": info.residual},
    )
    basis.diagnostics["energy"] = basis.energy(system.ops)
    curl_norm = float(np.sum(system.ops.wr[:, None] * np.abs(basis.op_arrays(system.ops)[:, :3]) ** 2))
    basis.diagnostics["curl_norm_sq"] = curl_norm
    return basis


def singular_dimensions(corners, cones=(), k=0, space=femcore.SPACE_X, beta=None):
    """Dimension of the singular subspace for one mode and field kind.

    Every reentrant edge contributes one basis function for all modes and
    both kinds; conical vertices contribute only to the electric mode 0,
    and only when their aperture exceeds pi/beta.
    """
    n_edges = sum(1 for c in corners if c.reentrant)
    if space == femcore.SPACE_X and k == 0:
        if beta is None:
            beta = find_beta()
        threshold = math.pi / beta
        n_edges += sum(1 for cone in cones if cone.aperture > threshold)
    return n_edges
