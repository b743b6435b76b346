import math

import numpy as np
import pytest

from axmaxwell import mesh
from axmaxwell.mesh import AXIS, WALL, MeshError


def test_rectangle_coarse_combinatorics():
    m = mesh.gen_rectangle(0, 1, 0, 1, 0.5)
    assert m.num_vertices == 9
    assert m.num_triangles == 8
    assert (m.boundary_tags == AXIS).sum() == 2


def test_rectangle_fine_combinatorics():
    m = mesh.gen_rectangle(0, 1, 0, 1, 0.25)
    assert m.num_vertices == 25
    assert m.num_triangles == 32


def test_rectangle_off_axis_has_no_axis_edges():
    m = mesh.gen_rectangle(0.5, 1, 0, 1, 0.5)
    assert (m.boundary_tags == AXIS).sum() == 0
    assert mesh.classify_boundary(m) == []


def test_area_sums():
    m = mesh.gen_rectangle(0, 2, -1, 1, 0.21)
    assert abs(m.triangle_areas().sum() - 4.0) <= 1e-12 * 4.0
    lm, _ = mesh.gen_lshape(0.5, 0.5, 1.0, 0.0, 1.0, 0.13)
    assert abs(lm.triangle_areas().sum() - 0.75) <= 1e-12


def test_axis_vertices_exactly_on_axis():
    m = mesh.gen_rectangle(0, 1, 0, 1, 0.17)
    assert np.all(m.vertices[m.axis_vertices(), 0] == 0.0)


def test_lshape_corner_descriptor():
    lm, c = mesh.gen_lshape(0.5, 0.5, 1.0, 0.0, 1.0, 0.1)
    assert c.alpha == pytest.approx(2.0 / 3.0, abs=1e-12)
    assert c.a == 0.5
    assert c.interior_angle == pytest.approx(1.5 * math.pi, abs=1e-12)
    # independent angle check from the generated incident wall edge vectors
    nbr_dirs = []
    for (i, j), tag in zip(lm.boundary_edges, lm.boundary_tags):
        if c.corner_vertex in (i, j):
            assert tag == WALL
            other = int(i) + int(j) - c.corner_vertex
            d = lm.vertices[other] - lm.vertices[c.corner_vertex]
            nbr_dirs.append(math.atan2(d[1], d[0]))
    assert len(nbr_dirs) == 2
    spread = (max(nbr_dirs) - min(nbr_dirs)) % (2 * math.pi)
    wedge = min(spread, 2 * math.pi - spread)
    assert min(wedge, 2 * math.pi - wedge) == pytest.approx(0.5 * math.pi, abs=1e-12)
    # phi0 points along the horizontal wall going right
    assert c.phi0 == pytest.approx(0.0, abs=1e-12)


def test_lshape_exactly_one_corner():
    lm, _ = mesh.gen_lshape(0.5, 0.5, 1.0, 0.0, 1.0, 0.1)
    corners = mesh.classify_boundary(lm)
    assert len(corners) == 1


def test_classify_is_idempotent():
    lm, _ = mesh.gen_lshape(0.5, 0.5, 1.0, 0.0, 1.0, 0.2)
    first = mesh.classify_boundary(lm)
    second = mesh.classify_boundary(lm)
    assert first == second


def test_rectangle_with_axis_has_no_corners():
    m = mesh.gen_rectangle(0, 1, 0, 1, 0.25)
    assert mesh.classify_boundary(m) == []
    assert (m.boundary_tags == AXIS).sum() >= 1


def test_save_load_round_trip(tmp_path):
    lm, _ = mesh.gen_lshape(0.5, 0.5, 1.0, 0.0, 1.0, 0.17)
    path = tmp_path / "m.txt"
    mesh.save_mesh(lm, path)
    back = mesh.load_mesh(path)
    assert back == lm
    assert np.array_equal(back.vertices, lm.vertices)


def test_load_rejects_negative_r(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text(
        "axmesh 1\nvertices 3\n-0.1 0\n1 0\n1 1\ntriangles 1\n0 1 2\n"
        "boundary 3\n0 1 wall\n1 2 wall\n2 0 wall\n"
    )
    with pytest.raises(MeshError):
        mesh.load_mesh(path)


def test_load_rejects_duplicate_triangle(tmp_path):
    path = tmp_path / "dup.txt"
    path.write_text(
        "axmesh 1\nvertices 4\n0.5 0\n1 0\n1 1\n0.5 1\ntriangles 3\n"
        "0 1 2\n0 2 3\n0 2 3\nboundary 4\n0 1 wall\n1 2 wall\n2 3 wall\n3 0 wall\n"
    )
    with pytest.raises(MeshError):
        mesh.load_mesh(path)


def test_load_rejects_malformed(tmp_path):
    path = tmp_path / "broken.txt"
    path.write_text("axmesh 2\n")
    with pytest.raises(MeshError):
        mesh.load_mesh(path)
    path.write_text("axmesh 1\nvertices 2\n0 0\n")
    with pytest.raises(MeshError):
        mesh.load_mesh(path)


def test_generator_errors():
    with pytest.raises(MeshError):
        mesh.gen_rectangle(0, 1, 0, 1, -0.5)
    with pytest.raises(MeshError):
        mesh.gen_rectangle(1, 0, 0, 1, 0.5)
    with pytest.raises(MeshError):
        mesh.gen_lshape(0.0, 0.5, 1.0, 0.0, 1.0, 0.1)  # corner on the axis
    with pytest.raises(MeshError):
        mesh.gen_lshape(0.5, 0.5, 1.0, 0.0, 1.0, 0.9)  # h cannot resolve corner


def test_conical_descriptor_validation():
    mesh.ConicalDescriptor(z=0.3, aperture=2.5)
    with pytest.raises(MeshError):
        mesh.ConicalDescriptor(z=0.0, aperture=3.5)
