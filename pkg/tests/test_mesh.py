import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stochac.errors import GeometryError, InvalidArgument
from stochac.mesh import edges, element_geometry, generate_uniform, triangle_geometry, write_off


@pytest.mark.parametrize("n, nv, nt", [(1, 4, 2), (2, 9, 8), (64, 4225, 8192)])
def test_counts(n, nv, nt):
    m = generate_uniform(n)
    assert m.num_vertices == nv
    assert m.num_triangles == nt
    assert m.h == pytest.approx(np.sqrt(2) / n, abs=1e-15)


def test_n_zero_rejected():
    with pytest.raises(InvalidArgument):
        generate_uniform(0)


def test_reference_triangle_geometry():
    area, grads = triangle_geometry(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))
    assert area == pytest.approx(0.5)
    np.testing.assert_allclose(grads, [[-1, -1], [1, 0], [0, 1]], atol=1e-15)


def test_degenerate_triangle():
    with pytest.raises(GeometryError):
        triangle_geometry(np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]))


def test_uniform_element_area():
    m = generate_uniform(2)
    for t in range(m.num_triangles):
        area, _ = element_geometry(m, t)
        assert area == pytest.approx(1 / 8, abs=1e-15)


def test_lexicographic_numbering_and_diagonal():
    m = generate_uniform(2)
    np.testing.assert_allclose(m.points[:3], [[-0.5, -0.5], [0.0, -0.5], [0.5, -0.5]])
    np.testing.assert_allclose(m.points[3], [-0.5, 0.0])
    # first square split along lower-left to upper-right diagonal
    assert set(m.triangles[0]) | set(m.triangles[1]) == {0, 1, 3, 4}
    assert {0, 4} <= set(m.triangles[0]) and {0, 4} <= set(m.triangles[1])


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=1, max_value=40))
def test_area_partition_and_gradients(n):
    m = generate_uniform(n)
    assert abs(m.areas.sum() - 1.0) <= 1e-12
    assert np.abs(m.grads.sum(axis=1)).max() <= 1e-15 * n
    # counterclockwise orientation
    p = m.points[m.triangles]
    signed = 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))
    assert np.all(signed > 0)
    # congruent triangles: identical diameters
    d = np.max(np.linalg.norm(p - np.roll(p, 1, axis=1), axis=2), axis=1)
    assert d.max() / d.min() == pytest.approx(1.0, abs=1e-12)
    assert d.max() == pytest.approx(m.h, abs=1e-14)


@settings(max_examples=10, deadline=None)
@given(st.integers(min_value=1, max_value=20))
def test_interior_edges_shared_twice(n):
    m = generate_uniform(n)
    uniq, counts = edges(m)
    p = m.points[uniq]  # (edges, 2 endpoints, 2)
    on_boundary = np.zeros(len(uniq), dtype=bool)
    for d in (0, 1):
        for side in (-0.5, 0.5):
            on_boundary |= np.all(p[:, :, d] == side, axis=1)
    assert np.all(counts[~on_boundary] == 2)
    assert np.all(counts[on_boundary] == 1)
    assert on_boundary.sum() == 4 * n


def test_interpolate_and_physical_points():
    m = generate_uniform(3)
    u = m.interpolate(lambda x, y: 2 * x - y)
    np.testing.assert_allclose(u, 2 * m.points[:, 0] - m.points[:, 1])
    xq = m.barycentric_to_physical(np.array([[1 / 3, 1 / 3, 1 / 3]]))
    np.testing.assert_allclose(xq[:, 0], m.points[m.triangles].mean(axis=1))


def test_readonly_geometry():
    m = generate_uniform(2)
    with pytest.raises(ValueError):
        m.areas[0] = 1.0


def test_off_dump(tmp_path):
    m = generate_uniform(2)
    path = tmp_path / "mesh.off"
    write_off(m, path)
    lines = path.read_text().split("\n")
    assert lines[0].startswith("OFF")
    assert "9 8" in lines[1]
