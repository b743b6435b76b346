import math

import numpy as np
import pytest

from axmaxwell import femcore, mesh, modal_ops, singular, special
from axmaxwell.femcore import SPACE_X, SPACE_Y, MeshQuadrature, ModeField
from axmaxwell.mesh import ConicalDescriptor, CornerDescriptor
from axmaxwell.singular import (
    CONICAL,
    EDGE_ELECTRIC,
    EDGE_MAGNETIC,
    PrincipalPart,
    compute_basis,
    eval_principal,
    eval_principal_curl_div,
    singular_dimensions,
)


def _reference_corner(phi0=0.0, position=(1.0, 0.0)):
    return CornerDescriptor(
        corner_vertex=-1,
        position=position,
        interior_angle=1.5 * math.pi,
        alpha=2.0 / 3.0,
        phi0=phi0,
        a=position[0],
    )


def test_electric_principal_reference_point():
    pp = PrincipalPart(EDGE_ELECTRIC, corner=_reference_corner())
    # rho = 1, phi = 0 along the phi0 ray; r/a = 2 at that point
    got = eval_principal(pp, (2.0, 0.0))
    assert got == pytest.approx([0.0, 0.0, -2.0 * 2.0 / 3.0], abs=1e-14)


def test_magnetic_principal_reference_point():
    pp = PrincipalPart(EDGE_MAGNETIC, corner=_reference_corner())
    got = eval_principal(pp, (2.0, 0.0))
    assert got == pytest.approx([-2.0 * 2.0 / 3.0, 0.0, 0.0], abs=1e-14)


def test_conical_closed_form_identity():
    # with nu = 1 the Legendre factors collapse to the double angle formulas
    cone = ConicalDescriptor(z=0.0, aperture=2.5)
    pp = PrincipalPart(CONICAL, cone=cone, nu=0.25)
    object.__setattr__(pp, "nu", 1.0)
    for phi in (0.2, 0.9, 1.7, 2.6):
        pt = (math.sin(phi), math.cos(phi))
        got = pp.values(np.array(pt).reshape(1, 2))[0]
        assert got[0] == pytest.approx(math.cos(2 * phi), abs=1e-12)
        assert got[2] == pytest.approx(math.sin(2 * phi), abs=1e-12)


def test_closed_form_divergences_at_reference_angles():
    corner = _reference_corner(position=(1.0, 0.5))
    ppe = PrincipalPart(EDGE_ELECTRIC, corner=corner)
    ppm = PrincipalPart(EDGE_MAGNETIC, corner=corner)
    pt = (2.0, 0.5)  # rho = 1, phi = 0
    _, div_e = eval_principal_curl_div(ppe, 1, pt)
    assert div_e == pytest.approx(0.0, abs=1e-14)
    _, div_m = eval_principal_curl_div(ppm, 1, pt)
    assert div_m == pytest.approx(-4.0 / 3.0, abs=1e-13)


@pytest.mark.parametrize("kind", [EDGE_ELECTRIC, EDGE_MAGNETIC])
def test_principal_curl_div_against_finite_differences(kind, rng):
    corner = _reference_corner(phi0=-0.5 * math.pi, position=(1.0, 0.5))
    pp = PrincipalPart(kind, corner=corner)
    h = 1e-6
    checked = 0
    for _ in range(200):
        if checked >= 100:
            break
        rho = rng.uniform(0.05, 0.45)
        phi = rng.uniform(0.05, 1.45 * math.pi)
        psi = corner.phi0 + phi
        pt = np.array([1.0 + rho * math.cos(psi), 0.5 + rho * math.sin(psi)])
        if pt[0] < 0.05:
            continue
        checked += 1
        k = int(rng.integers(-2, 3))
        curl_an, div_an = eval_principal_curl_div(pp, k, pt)

        def val(p):
            return pp.values(np.asarray(p).reshape(1, 2))[0]

        d_r = (val(pt + [h, 0]) - val(pt - [h, 0])) / (2 * h)
        d_z = (val(pt + [0, h]) - val(pt - [0, h])) / (2 * h)
        v = val(pt)
        r, ik = pt[0], 1j * k
        div_fd = d_r[0] + v[0] / r + ik * v[1] / r + d_z[2]
        curl_fd = np.array(
            [ik * v[2] / r - d_z[1], d_z[0] - d_r[2], d_r[1] + v[1] / r - ik * v[0] / r]
        )
        scale = max(np.abs(curl_an).max(), abs(div_an))
        assert np.abs(curl_fd - curl_an).max() <= 1e-5 * scale
        assert abs(div_fd - div_an) <= 1e-5 * scale
    assert checked == 100


def test_principal_blowup_rate_along_ray():
    corner = _reference_corner()
    pp = PrincipalPart(EDGE_MAGNETIC, corner=corner)
    diam = 2.0
    expected = 2.0 ** (1.0 - corner.alpha)
    psi = corner.phi0 + 0.7
    for rho in (1e-3 * diam, 1e-4 * diam):
        p1 = corner.position + rho * np.array([math.cos(psi), math.sin(psi)])
        p2 = corner.position + 0.5 * rho * np.array([math.cos(psi), math.sin(psi)])
        v1 = np.linalg.norm(eval_principal(pp, p1))
        v2 = np.linalg.norm(eval_principal(pp, p2))
        assert v2 / v1 == pytest.approx(expected, rel=0.01)


def test_principal_traces_vanish_on_incident_walls(lshape):
    """Tangential trace of the electric part and normal trace of the
    magnetic part are zero along the two wall edges meeting at the corner;
    this pins the phi0 convention to the geometry."""
    _, corner = lshape
    ppe = PrincipalPart(EDGE_ELECTRIC, corner=corner)
    ppm = PrincipalPart(EDGE_MAGNETIC, corner=corner)
    r_c, z_c = corner.position
    for s in np.linspace(0.05, 0.45, 5):
        horizontal = (r_c + s, z_c)  # wall along +r: tangent e_r, normal -e_z
        vertical = (r_c, z_c - s)  # wall along -z: tangent e_z, normal +e_r
        ve = eval_principal(ppe, horizontal)
        assert abs(ve[0]) <= 1e-13 and abs(ve[1]) <= 1e-13
        ve = eval_principal(ppe, vertical)
        assert abs(ve[2]) <= 1e-13 and abs(ve[1]) <= 1e-13
        vm = eval_principal(ppm, horizontal)
        assert abs(vm[2]) <= 1e-13
        vm = eval_principal(ppm, vertical)
        assert abs(vm[0]) <= 1e-13


def test_conical_curl_div_unsupported():
    cone = ConicalDescriptor(z=0.0, aperture=2.5)
    pp = PrincipalPart(CONICAL, cone=cone, nu=0.3)
    with pytest.raises(NotImplementedError):
        eval_principal_curl_div(pp, 0, (0.5, 0.5))


def test_eval_at_corner_raises():
    corner = _reference_corner()
    pp = PrincipalPart(EDGE_ELECTRIC, corner=corner)
    with pytest.raises(ValueError):
        eval_principal(pp, corner.position)


def test_high_mode_needs_override(lshape):
    msh, corner = lshape
    with pytest.raises(ValueError):
        compute_basis(msh, corner, 3, SPACE_Y)


@pytest.mark.parametrize("space", [SPACE_X, SPACE_Y])
@pytest.mark.parametrize("k", [0, 1, -2])
def test_basis_homogeneous_formulation(lshape, lshape_quad, space, k, rng):
    msh, corner = lshape
    basis = compute_basis(msh, corner, k, space)
    system = modal_ops.assemble_a_k(msh, k, space, quad=lshape_quad)
    resid = system.apply_to_field(basis.regular.values)
    curl_s, div_s = basis.principal.curl_div(system.quad.xy, k)
    resid = resid + system.functional(np.concatenate([curl_s, div_s[:, None]], axis=1))
    bnorm = math.sqrt(basis.diagnostics["energy"])
    for _ in range(20):
        raw = ModeField(
            msh, k,
            rng.normal(size=(msh.num_vertices, 3)) + 1j * rng.normal(size=(msh.num_vertices, 3)),
        )
        v = system.constraints.apply(raw)
        vnorm = math.sqrt(abs(system.form_value(v.values, v.values)))
        val = abs(np.vdot(system.constraints.free_values(v), resid))
        assert val <= 1e-6 * bnorm * vnorm


def test_mode_zero_basis_is_real(lshape):
    msh, corner = lshape
    for space in (SPACE_X, SPACE_Y):
        basis = compute_basis(msh, corner, 0, space)
        scale = np.abs(basis.regular.values).max()
        assert np.abs(basis.regular.values.imag).max() <= 1e-10 * scale


def test_basis_trace_cancels_principal(lshape):
    msh, corner = lshape
    basis = compute_basis(msh, corner, 0, SPACE_Y)
    cs = femcore.build_constraints(msh, 0, SPACE_Y)
    guard = 1e-6
    for v in msh.wall_vertices():
        v = int(v)
        pt = msh.vertices[v]
        rho, _ = corner.local_coords(pt.reshape(1, 2))
        if rho[0] <= guard:
            continue
        pv = basis.principal.values(pt.reshape(1, 2))[0]
        for c in range(3):
            if cs.kind[3 * v + c] == femcore.ZERO:
                total = basis.regular.values[v, c] + pv[c]
                assert abs(total) <= 1e-12


def test_total_basis_leaves_h1(lshape):
    """Discrete H1 seminorm of the interpolated total basis grows without
    bound under refinement, while a smooth field's stabilizes."""

    def h1_seminorm(msh, values):
        grads = femcore.gradients(msh)
        tri = msh.triangles
        areas = msh.triangle_areas()
        rbar = msh.vertices[tri, 0].mean(axis=1)
        total = 0.0
        for c in range(3):
            g = np.einsum("ti,tij->tj", values[tri, c], grads)
            total += np.sum(np.abs(g) ** 2 * (areas * rbar)[:, None])
        return math.sqrt(total)

    seminorms = []
    smooth = []
    for h in (0.4, 0.2, 0.1, 0.05):
        msh, corner = mesh.gen_lshape(0.5, 0.5, 1.0, 0.0, 1.0, h)
        basis = compute_basis(msh, corner, 0, SPACE_Y)
        seminorms.append(h1_seminorm(msh, basis.total_nodal()))
        vals = np.zeros((msh.num_vertices, 3), dtype=complex)
        vals[:, 0] = msh.vertices[:, 0] * msh.vertices[:, 1]
        smooth.append(h1_seminorm(msh, vals))
    for a, b in zip(seminorms[:-1], seminorms[1:]):
        assert b >= 1.2 * a
    assert smooth[-1] <= 1.05 * smooth[-2]


def test_dimension_bookkeeping(lshape):
    _, corner = lshape
    beta = special.find_beta()
    for space in (SPACE_X, SPACE_Y):
        for k in (-2, 0, 1):
            assert singular_dimensions([corner], [], k, space, beta) == 1
    cone = ConicalDescriptor(z=0.0, aperture=2.5)
    assert singular_dimensions([corner], [cone], 0, SPACE_X, beta) == 2
    assert singular_dimensions([corner], [cone], 0, SPACE_Y, beta) == 1
    assert singular_dimensions([corner], [cone], 1, SPACE_X, beta) == 1
    below = ConicalDescriptor(z=0.0, aperture=2.0)
    assert singular_dimensions([corner], [below], 0, SPACE_X, beta) == 1


def test_conjugate_basis(lshape):
    msh, corner = lshape
    b = compute_basis(msh, corner, 1, SPACE_Y)
    bc = b.conjugate()
    assert bc.k == -1
    assert np.array_equal(bc.regular.values, np.conj(b.regular.values))
