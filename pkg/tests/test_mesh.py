import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multifreq.errors import EmptyRegionError
from multifreq.mesh import (Mesh, generate_disk, generate_polygon, generate_rectangle,
                            interior_region, submesh)


def test_rectangle_single_cell():
    m = generate_rectangle(1, 1)
    assert m.n_vertices == 4 and m.n_triangles == 2
    assert m.total_area == pytest.approx(1.0, rel=1e-12)


def test_rectangle_ten_by_ten():
    m = generate_rectangle(10, 10)
    assert (m.n_vertices, m.n_triangles) == (121, 200)
    assert abs(m.total_area - 1.0) < 1e-12


def test_rectangle_h_at_64():
    m = generate_rectangle(64, 64)
    assert abs(m.h - math.sqrt(2) / 64) < 1e-12


@pytest.mark.parametrize("nx,ny,w,h", [(0, 1, 1.0, 1.0), (1, 1, 0.0, 1.0), (2, 2, 1.0, -1.0)])
def test_rectangle_rejects_bad_dimensions(nx, ny, w, h):
    with pytest.raises(ValueError):
        generate_rectangle(nx, ny, w, h)


@given(nx=st.integers(1, 12), ny=st.integers(1, 12),
       w=st.floats(0.1, 5.0), h=st.floats(0.1, 5.0))
@settings(max_examples=30, deadline=None)
def test_rectangle_counts_and_area(nx, ny, w, h):
    m = generate_rectangle(nx, ny, w, h)
    assert m.n_vertices == (nx + 1) * (ny + 1)
    assert m.n_triangles == 2 * nx * ny
    assert m.total_area == pytest.approx(w * h, rel=1e-12)
    assert np.all(m.signed_areas > 0)
    on_edge = (np.isclose(m.vertices[:, 0], 0) | np.isclose(m.vertices[:, 0], w)
               | np.isclose(m.vertices[:, 1], 0) | np.isclose(m.vertices[:, 1], h))
    assert set(np.flatnonzero(on_edge)) == set(m.boundary.tolist())


@pytest.mark.parametrize("n", [2, 4, 8, 16])
def test_refinement_halves_h(n):
    a, b = generate_rectangle(n, n), generate_rectangle(2 * n, 2 * n)
    assert b.h == pytest.approx(a.h / 2, rel=1e-12)


def test_disk_coarse_area():
    m = generate_disk(0)
    assert abs(m.total_area - math.pi) / math.pi < 0.20


def test_disk_refinement_5_area():
    m = generate_disk(5)
    assert abs(m.total_area - math.pi) / math.pi < 1e-3


def test_disk_dilation():
    a, b = generate_disk(3, 1.0), generate_disk(3, 2.0)
    assert b.total_area / a.total_area == pytest.approx(4.0, rel=1e-12)


def test_disk_boundary_on_circle():
    m = generate_disk(4, radius=1.5, center=(0.2, -0.1))
    r = np.hypot(*(m.vertices[m.boundary] - [0.2, -0.1]).T)
    assert np.allclose(r, 1.5, rtol=0, atol=1e-14)


@pytest.mark.parametrize("bad", [0.0, -1.0])
def test_disk_rejects_radius(bad):
    with pytest.raises(ValueError):
        generate_disk(1, bad)


def test_disk_rejects_deep_refinement():
    with pytest.raises(ValueError):
        generate_disk(10)


def test_polygon_area_exact():
    corners = [(0, 0), (2, 0), (1.5, 1), (0.25, 1)]
    m = generate_polygon(corners, refinement=3)
    x, y = np.array(corners, float).T
    shoelace = 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))
    assert shoelace == 1.625
    assert m.total_area == pytest.approx(shoelace, rel=1e-12)


def test_polygon_rejects_nonconvex():
    with pytest.raises(ValueError):
        generate_polygon([(0, 0), (2, 0), (1, 0.2), (1, 2)])


def test_interior_region_square():
    m = generate_rectangle(20, 20)
    reg = interior_region(m, 0.2)
    v = m.vertices[reg.vertices]
    assert np.all((v >= 0.2 - 1e-12) & (v <= 0.8 + 1e-12))
    assert len(reg) == 13 * 13


def test_interior_region_disk():
    m = generate_disk(4)
    reg = interior_region(m, 0.3)
    assert np.all(np.hypot(*m.vertices[reg.vertices].T) <= 0.7 + 1e-12)


def test_interior_region_too_large():
    with pytest.raises(EmptyRegionError):
        interior_region(generate_rectangle(10, 10), 0.6)


@given(m1=st.floats(0.01, 0.45), m2=st.floats(0.01, 0.45))
@settings(max_examples=25, deadline=None)
def test_interior_region_monotone(m1, m2):
    m = generate_rectangle(12, 12)
    lo, hi = sorted((m1, m2))
    assert set(interior_region(m, hi).vertices) <= set(interior_region(m, lo).vertices)


def test_invalid_orientation_rejected():
    m = generate_rectangle(2, 2)
    tri = m.triangles.copy()
    tri[0] = tri[0][::-1]
    with pytest.raises(ValueError):
        Mesh(m.vertices, tri, m.boundary, "rectangle", m.geometry)


def test_hanging_vertex_rejected():
    # unit square cut along its diagonal; one half is split again at the diagonal
    # midpoint, which then hangs on the edge of the other half
    v = np.array([[0, 0], [1, 0], [0, 1], [1, 1], [0.5, 0.5]], float)
    geom = {"width": 1.0, "height": 1.0, "origin": [0.0, 0.0], "nx": 1, "ny": 1}
    ok = Mesh(v[:4], np.array([[0, 1, 3], [0, 3, 2]]), np.arange(4), "rectangle", geom)
    assert ok.n_triangles == 2
    hanging = np.array([[0, 1, 4], [4, 1, 3], [0, 3, 2]])
    with pytest.raises(ValueError):
        Mesh(v, hanging, np.arange(4), "rectangle", geom)
    with pytest.raises(ValueError, match="non-conforming"):
        Mesh(v, hanging, np.arange(5), "rectangle", geom)


def test_json_round_trip(tmp_path):
    m = generate_disk(2)
    path = tmp_path / "m.json"
    m.to_json(path)
    back = Mesh.from_json(path)
    assert np.array_equal(back.vertices, m.vertices)
    assert np.array_equal(back.triangles, m.triangles)
    assert np.array_equal(np.sort(back.boundary), np.sort(m.boundary))
    data = json.loads(path.read_text())
    assert {"vertices", "triangles", "boundary"} <= set(data)


def test_submesh_parent_index():
    m = generate_rectangle(10, 10)
    reg = interior_region(m, 0.2)
    sub, parent = submesh(m, reg.vertices)
    assert np.array_equal(sub.vertices, m.vertices[parent])
    assert sub.total_area == pytest.approx(0.36, rel=1e-12)
