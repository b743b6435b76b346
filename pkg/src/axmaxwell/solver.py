"""Per-mode solution of the electric and magnetic div-curl problems with
regular/singular splitting, Fourier analysis of 3D data, and synthesis of
the 3D field from the solved modes.

Each azimuthal mode k yields a coercive problem on the constrained P1
space.  On a domain with a reentrant edge the solution carries a singular
component: for |k| <= 2 the dedicated basis of that mode decouples the
scalar coefficient C^k from the regular part,

  C^k = [(f, curl_k s) + (g, div_k s)] / [(curl_k s, curl_k s) + (div_k s, div_k s)]

with s the total basis (discrete regular curl plus analytic principal
curl), after which the regular part solves the plain constrained system.
For |k| > 2 the singular subspace of mode sign(k)*2 is reused; the lost
orthogonality couples C^k to the regular unknowns through a rank-one border
which is eliminated by a Schur complement.  The mode-k matrix is produced
from the mode-2 assembly through the shift identity
a_k = a_2 + (k^2-4)(u/r, v/r) + i(k-2) C(u, v).
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import femcore, modal_ops, singular
from .femcore import MeshQuadrature, ModeField
from .linalg import BorderedSystem, solve_bordered, solve_hpd

_TWO_PI = 2.0 * math.pi
_NORM = 1.0 / math.sqrt(_TWO_PI)


@dataclass
class ModeProblem:
    """Right-hand side of one mode: find u with curl_k u = f, div_k u = g.

    f maps meridian points to complex triples, g to complex scalars (or
    arrays at quadrature points; None means zero).  The compatibility flags
    trigger quadrature checks of the conditions the strong problem imposes
    on its data.
    """

    k: int
    space: str
    f: object = None
    g: object = None
    require_mean_zero_g: bool = False
    require_div_free_f: bool = False

    def validate(self, system):
        if self.require_mean_zero_g and self.g is not None and self.k == 0:
            gv = system.sample(g=self.g)[:, 3]
            mean = abs(np.sum(system.ops.wr * gv))
            scale = np.sum(system.ops.wr * np.abs(gv))
            if scale > 0.0 and mean > 1e-8 * scale:
                raise ValueError(
                    f"mode-0 divergence data must have zero weighted mean "
                    f"(relative mean {mean / scale:.2e})"
                )


@dataclass
class ModeRecord:
    """Solution of one mode: regular field, singular coefficient, basis."""

    field: ModeField
    coeff: complex = 0.0
    basis: object = None
    diagnostics: dict = None

    def total_nodal(self):
        vals = self.field.values.copy()
        if self.basis is not None and self.coeff != 0.0:
            vals = vals + self.coeff * self.basis.total_nodal()
        return vals

    def point_values(self, ops):
        out = ops.point_values(self.field.values)
        if self.basis is not None and self.coeff != 0.0:
            out = out + self.coeff * self.basis.point_arrays(ops)
        return out

    def op_values(self, ops):
        out = ops.op_values(self.field.values)
        if self.basis is not None and self.coeff != 0.0:
            out = out + self.coeff * self.basis.op_arrays(ops)
        return out


@dataclass
class FourierSolution:
    """Solved modes k in [-N, N] of one field kind."""

    mesh: object
    space: str
    N: int
    records: dict
    real_data: bool = False

    def __post_init__(self):
        expected = set(range(-self.N, self.N + 1))
        if set(self.records) != expected:
            missing = sorted(expected - set(self.records))
            raise ValueError(f"missing modes {missing}")

    def coefficients(self):
        return {k: rec.coeff for k, rec in self.records.items()}


# -- Fourier analysis ------------------------------------------------------------


def _theta_grid(N, samples):
    M = 4 * N + 1 if samples is None else int(samples)
    if M < 4 * N + 1:
        raise ValueError(f"need at least 4N+1 = {4 * N + 1} theta samples, got {M}")
    return np.arange(M) * (_TWO_PI / M)


def analyze_samples(values, N):
    """Mode coefficients of values sampled on the uniform theta grid.

    values has shape (M, ...); returns {k: (...)} with the 1/sqrt(2 pi)
    convention.  Negative modes use the exact conjugate phases of their
    positive partners so that real samples give conjugate-symmetric
    coefficients to the last bit.
    """
    values = np.asarray(values)
    M = values.shape[0]
    if M < 4 * N + 1:
        raise ValueError(f"need at least 4N+1 = {4 * N + 1} theta samples, got {M}")
    theta = np.arange(M) * (_TWO_PI / M)
    out = {}
    scale = math.sqrt(_TWO_PI) / M
    shape = (M,) + (1,) * (values.ndim - 1)
    for k in range(0, N + 1):
        phase = np.exp(-1j * k * theta).reshape(shape)
        out[k] = scale * np.sum(values * phase, axis=0)
        if k > 0:
            out[-k] = scale * np.sum(values * phase.conj(), axis=0)
    return out


def analyze_rhs(f, N, points, samples=None):
    """Fourier coefficients of vector data f(r, theta, z) at meridian points.

    Returns {k: (P, 3) complex array}; the sample count must satisfy the
    anti-aliasing bound M >= 4N + 1 (default exactly that).
    """
    theta = _theta_grid(N, samples)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    vals = np.empty((len(theta), len(pts), 3), dtype=complex)
    for j, th in enumerate(theta):
        for i, (r, z) in enumerate(pts):
            vals[j, i] = f(r, th, z)
    return analyze_samples(vals, N)


def analyze_scalar_rhs(g, N, points, samples=None):
    theta = _theta_grid(N, samples)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    vals = np.empty((len(theta), len(pts)), dtype=complex)
    for j, th in enumerate(theta):
        for i, (r, z) in enumerate(pts):
            vals[j, i] = g(r, th, z)
    return analyze_samples(vals, N)


def synthesize(solution, theta):
    """Field on the meridian plane at azimuth theta, nodal values (nv, 3).

    For real 3D data the conjugate mode symmetry makes the result real; the
    imaginary residue is asserted tiny and dropped.
    """
    acc = np.zeros((solution.mesh.num_vertices, 3), dtype=complex)
    for k in range(0, solution.N + 1):
        phase = np.exp(1j * k * theta)
        acc += solution.records[k].total_nodal() * (_NORM * phase)
        if k > 0:
            acc += solution.records[-k].total_nodal() * (_NORM * np.conj(phase))
    if solution.real_data:
        scale = np.abs(acc).max()
        if scale > 0.0 and np.abs(acc.imag).max() > 1e-10 * scale:
            raise AssertionError("synthesized field of real data is not real")
        return acc.real
    return acc


def sample_3d(solution, n_theta):
    """Volumetric samples on the revolved mesh: cartesian points plus the
    cylindrical field components per vertex and azimuth."""
    thetas = np.arange(n_theta) * (_TWO_PI / n_theta)
    verts = solution.mesh.vertices
    points = np.empty((n_theta, len(verts), 3))
    fields = np.empty((n_theta, len(verts), 3), dtype=complex)
    for j, th in enumerate(thetas):
        points[j, :, 0] = verts[:, 0] * math.cos(th)
        points[j, :, 1] = verts[:, 0] * math.sin(th)
        points[j, :, 2] = verts[:, 1]
        fields[j] = synthesize(solution, th)
    return thetas, points, fields


# -- single-mode solvers ----------------------------------------------------------


def solve_mode_orthogonal(mesh, problem, basis=None, system=None, tol=1e-10):
    """Mode solve for |k| <= 2 (or any mode without a singular basis).

    The singular coefficient comes from pairing the data against the basis
    operators; the regular part solves the constrained system with the full
    (f, g) load.  Returns a ModeRecord.
    """
    if system is None:
        corner = basis.principal.corner if basis is not None else None
        quad = MeshQuadrature(mesh, corner)
        system = modal_ops.assemble_a_k(mesh, problem.k, problem.space, quad=quad)
    problem.validate(system)
    vec = system.sample(problem.f, problem.g)
    load = system.functional(vec)
    diag = {}
    coeff = 0.0
    if basis is not None:
        if basis.space != problem.space:
            raise ValueError("basis space does not match the problem")
        bop = basis.op_arrays(system.ops)
        denom = float(np.sum(system.ops.wr[:, None] * np.abs(bop) ** 2))
        if denom <= 0.0 or not np.isfinite(denom):
            raise ArithmeticError("singular basis has no energy; basis is broken")
        numer = complex(np.einsum("q,qa,qa->", system.ops.wr, vec, bop.conj()))
        coeff = numer / denom
        diag["coefficient_denominator"] = denom
    x, info = solve_hpd(system.matrix, load, tol=tol)
    diag.update(iterations=info.iterations, residual=info.residual)
    return ModeRecord(system.constraints.expand(x), coeff, basis, diag)


def solve_mode_bordered(mesh, problem, basis2, system2=None, tol=1e-10):
    """Mode solve for |k| > 2 reusing the mode sign(k)*2 singular basis.

    The regular stiffness matrix is shifted from the mode-2 assembly; the
    non-orthogonal coupling of the reused basis enters as a rank-one border
    solved by a Schur complement.
    """
    k = problem.k
    if abs(k) <= 2:
        raise ValueError("bordered solves serve |k| > 2")
    base_k = 2 if k > 0 else -2
    if basis2.k != base_k:
        raise ValueError(f"expected the mode {base_k} basis, got mode {basis2.k}")
    corner = basis2.principal.corner
    if system2 is None:
        quad = MeshQuadrature(mesh, corner)
        system2 = modal_ops.assemble_a_k(mesh, base_k, problem.space, quad=quad)
    sysk = modal_ops.ModeSystem(
        mesh, k, problem.space, quad=system2.quad, assemble=False
    )
    if not np.array_equal(sysk.constraints.kind, system2.constraints.kind):
        raise ValueError("mode constraints do not match the stabilized space")
    sysk.matrix = modal_ops.shifted_system(system2, k)
    problem.validate(sysk)
    vec = sysk.sample(problem.f, problem.g)
    F = sysk.functional(vec)
    # coupling of the reused basis at mode k: discrete regular part plus the
    # analytic principal part, both evaluated with the mode-k operators
    coupling = sysk.apply_to_field(basis2.regular.values)
    curl_s, div_s = basis2.principal.curl_div(sysk.quad.xy, k)
    svec = np.concatenate([curl_s, div_s[:, None]], axis=1)
    coupling = coupling + sysk.functional(svec)
    bop = basis2.op_arrays(sysk.ops)
    alpha = complex(np.sum(sysk.ops.wr[:, None] * np.abs(bop) ** 2))
    f_s = complex(np.einsum("q,qa,qa->", sysk.ops.wr, vec, bop.conj()))
    x, coeff = solve_bordered(
        BorderedSystem(sysk.matrix, coupling, alpha, F, f_s), tol=tol
    )
    diag = {"alpha": alpha.real, "mode_base": base_k}
    return ModeRecord(sysk.constraints.expand(x), coeff, basis2, diag)


# -- full solve --------------------------------------------------------------------


def compute_bases(mesh, corner, space, tol=1e-10, real_data=False):
    """Singular bases for |k| <= 2; negative modes mirror by conjugation
    when the data is real."""
    bases = {}
    for k in (0, 1, 2):
        bases[k] = singular.compute_basis(mesh, corner, k, space, tol=tol)
    for k in (1, 2):
        bases[-k] = (
            bases[k].conjugate()
            if real_data
            else singular.compute_basis(mesh, corner, -k, space, tol=tol)
        )
    return bases


def solve_axisymmetric(
    mesh,
    space,
    f,
    g=None,
    N=5,
    corner=None,
    bases=None,
    tol=1e-10,
    real_data=False,
    samples=None,
    threads=1,
):
    """Solve the 3D problem by modes: analyze the data, solve each mode,
    and collect a FourierSolution.

    f is the 3D vector data f(r, theta, z) -> 3 reals/complexes, g the
    optional scalar divergence data.  With real_data=True only modes
    k >= 0 are solved and the negatives are filled by conjugation.
    """
    quad = MeshQuadrature(mesh, corner)
    pts = quad.xy
    fmodes = analyze_rhs(f, N, pts, samples)
    gmodes = analyze_scalar_rhs(g, N, pts, samples) if g is not None else {}
    if corner is not None and bases is None:
        bases = compute_bases(mesh, corner, space, tol=tol, real_data=real_data)
    systems = {}
    for k in range(-min(N, 2), min(N, 2) + 1):
        if real_data and k < 0:
            continue
        systems[k] = modal_ops.assemble_a_k(mesh, k, space, quad=quad)

    def solve_one(k):
        problem = ModeProblem(k, space, fmodes[k], gmodes.get(k))
        if abs(k) <= 2:
            basis = bases.get(k) if bases else None
            return solve_mode_orthogonal(mesh, problem, basis, systems[k], tol=tol)
        if corner is not None:
            base_k = 2 if k > 0 else -2
            return solve_mode_bordered(mesh, problem, bases[base_k], systems[base_k], tol=tol)
        system = modal_ops.assemble_a_k(mesh, k, space, quad=quad)
        return solve_mode_orthogonal(mesh, problem, None, system, tol=tol)

    modes = list(range(0, N + 1)) if real_data else list(range(-N, N + 1))
    records = {}
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for k, rec in zip(modes, pool.map(solve_one, modes)):
                records[k] = rec
    else:
        for k in modes:
            records[k] = solve_one(k)
    if real_data:
        for k in range(1, N + 1):
            rec = records[k]
            basis = rec.basis.conjugate() if rec.basis is not None else None
            records[-k] = ModeRecord(
                rec.field.conj(), np.conj(rec.coeff), basis, rec.diagnostics
            )
    return FourierSolution(mesh, space, N, records, real_data)


# -- error measurement ---------------------------------------------------------------


def error_norms(fld, exact, exact_curl=None, exact_div=None, quad=None, k=None):
    """Weighted L2 and a_k-energy distance of a nodal field to an exact one.

    exact maps points to component triples; exact_curl/exact_div are the
    exact mode-k operator values (zero when omitted, so passing exact=0
    measures the field's own norms).  Returns (l2, energy).
    """
    mesh = fld.mesh
    k = fld.k if k is None else k
    ops = modal_ops.ElementOps(mesh, k, quad)
    pv = ops.point_values(fld.values)
    ev = _sample3(exact, ops.quad)
    l2 = math.sqrt(abs(np.sum(ops.wr[:, None] * np.abs(pv - ev) ** 2)))
    opv = ops.op_values(fld.values)
    target = np.zeros_like(opv)
    if exact_curl is not None:
        target[:, :3] = _sample3(exact_curl, ops.quad)
    if exact_div is not None:
        target[:, 3] = _sample1(exact_div, ops.quad)
    energy = math.sqrt(abs(np.sum(ops.wr[:, None] * np.abs(opv - target) ** 2)))
    return l2, energy


def _sample3(fn, quad):
    if fn is None or (np.isscalar(fn) and fn == 0):
        return np.zeros((len(quad.tri), 3), dtype=complex)
    if isinstance(fn, np.ndarray):
        return np.asarray(fn, dtype=complex).reshape(len(quad.tri), 3)
    return np.array([fn(p) for p in quad.xy], dtype=complex)


def _sample1(fn, quad):
    if fn is None or (np.isscalar(fn) and fn == 0):
        return np.zeros(len(quad.tri), dtype=complex)
    if isinstance(fn, np.ndarray):
        return np.asarray(fn, dtype=complex).reshape(len(quad.tri))
    return np.array([fn(p) for p in quad.xy], dtype=complex)
