import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import eval_legendre, gamma

from swfkit.errors import BoundsError, ConfigurationError
from swfkit.geometry import (
    LAYOUT_ORDER,
    Direction,
    angular_distance,
    barycentric_weights,
    build_octahedron_hierarchy,
    cart_to_sph,
    direction_from_table,
    fibonacci_sphere,
    layout_from_directions,
    load_layout,
    locate_triangle,
    quadrature_weights,
    sph_to_cart,
    evaluation_directions,
    triangle_solid_angles,
)

azimuths = st.floats(-179.0, 359.0, allow_nan=False)
elevations = st.floats(-89.0, 89.0, allow_nan=False)


@given(azimuths, elevations)
def test_direction_vector_is_unit(az, el):
    assert abs(np.linalg.norm(Direction(az, el).vector) - 1.0) < 1e-12


@given(azimuths, elevations)
def test_direction_round_trip(az, el):
    back = Direction.from_vector(Direction(az, el).vector)
    assert abs((back.azimuth - az + 180.0) % 360.0 - 180.0) < 1e-9
    assert abs(back.elevation - el) < 1e-9


def test_direction_convention():
    np.testing.assert_allclose(Direction(0, 0).vector, [1, 0, 0], atol=1e-15)
    np.testing.assert_allclose(Direction(90, 0).vector, [0, 1, 0], atol=1e-15)
    np.testing.assert_allclose(Direction(0, 90).vector, [0, 0, 1], atol=1e-15)


@pytest.mark.parametrize("az,el", [(-181, 0), (360, 0), (0, 90.5), (0, -91)])
def test_direction_rejects_out_of_range(az, el):
    with pytest.raises(ValueError):
        Direction(az, el)


def test_over_the_top_table_entry():
    d = direction_from_table(0, 135)
    assert (d.azimuth, d.elevation) == (180.0, 45.0)
    assert len(evaluation_directions()) == 10


def test_hierarchy_level0_is_octahedron():
    h = build_octahedron_hierarchy(0)
    assert h.vertex_counts() == [6]
    assert len(h.levels[0].triangles) == 8
    np.testing.assert_array_equal(np.abs(h.levels[0].vertices).sum(axis=1), 1.0)


def test_hierarchy_vertex_counts():
    h = build_octahedron_hierarchy(3)
    assert h.vertex_counts() == [6, 18, 66, 258]
    for k in range(h.max_level):
        mesh = h.levels[k]
        assert h.levels[k + 1].n_vertices == mesh.n_vertices + len(mesh.edges())


@pytest.mark.parametrize("level", range(0, 4))
def test_hierarchy_invariants(level):
    h = build_octahedron_hierarchy(level)
    for k, mesh in enumerate(h.levels):
        np.testing.assert_allclose(np.linalg.norm(mesh.vertices, axis=1), 1.0, atol=1e-12)
        assert mesh.euler_characteristic() == 2
        assert abs(triangle_solid_angles(mesh.vertices, mesh.triangles).sum() - 4 * np.pi) < 1e-9
        if k > 0:
            prev = h.levels[k - 1]
            np.testing.assert_array_equal(mesh.vertices[: prev.n_vertices], prev.vertices)
            mid = prev.vertices[mesh.parents[:, 0]] + prev.vertices[mesh.parents[:, 1]]
            mid /= np.linalg.norm(mid, axis=1, keepdims=True)
            np.testing.assert_allclose(mesh.vertices[prev.n_vertices:], mid, atol=1e-15)
            # every parent pair is an edge of the coarser mesh, used once
            edges = {tuple(e) for e in prev.edges().tolist()}
            assert {tuple(p) for p in mesh.parents.tolist()} == edges
            assert len(mesh.parents) == len(edges)


@pytest.mark.parametrize("bad", [-1, 7, 2.5])
def test_hierarchy_bounds(bad):
    with pytest.raises(BoundsError):
        build_octahedron_hierarchy(bad)


@pytest.mark.parametrize("name,size", [("octahedron", 6), ("tdesign24", 24), ("lebedev50", 50)])
def test_layout_sizes_and_coverage(name, size):
    lay = load_layout(name)
    assert len(lay) == size
    assert abs(triangle_solid_angles(lay.vectors, lay.triangles).sum() - 4 * np.pi) < 1e-6
    sep = angular_distance(lay.vectors[:, None], lay.vectors[None, :])
    np.fill_diagonal(sep, 180.0)
    assert sep.min() > 0.1


def test_octahedron_layout_has_poles():
    lay = load_layout("octahedron")
    els = sorted(lay.elevations())
    assert els[0] == -90.0 and els[-1] == 90.0


def test_unknown_layout():
    with pytest.raises(ConfigurationError):
        load_layout("cube")


def test_duplicate_directions_rejected():
    with pytest.raises(ConfigurationError):
        layout_from_directions("dup", [[0, 0], [0.05, 0], [90, 0], [180, 0], [270, 0], [0, 90], [0, -90]])


def _design_residual(vectors, degree):
    """Sum over point pairs of P_k(u.v); zero for every k <= t exactly on a t-design."""
    g = np.clip(vectors @ vectors.T, -1, 1)
    return max(abs(eval_legendre(k, g).sum()) / len(vectors) ** 2 for k in range(1, degree + 1))


def test_tdesign24_is_spherical_design():
    lay = load_layout("tdesign24")
    assert _design_residual(lay.vectors, 7) < 1e-12
    # and no better: degree 8 fails
    assert _design_residual(lay.vectors, 8) > 1e-3


def _sphere_monomial_mean(a, b, c):
    """Mean of x^a y^b z^c over the unit sphere (closed form via Gamma functions)."""
    if a % 2 or b % 2 or c % 2:
        return 0.0
    al, be, ga = (a + 1) / 2, (b + 1) / 2, (c + 1) / 2
    return 2 * gamma(al) * gamma(be) * gamma(ga) / gamma(al + be + ga) / (4 * np.pi)


@pytest.mark.parametrize("name,degree", [("octahedron", 3), ("tdesign24", 7), ("lebedev50", 11)])
def test_quadrature_exact_on_monomials(name, degree):
    lay = load_layout(name)
    w = quadrature_weights(lay)
    assert abs(w.sum() - 1) < 1e-14
    x, y, z = lay.vectors.T
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            for c in range(degree + 1 - a - b):
                approx = np.sum(w * x**a * y**b * z**c)
                assert abs(approx - _sphere_monomial_mean(a, b, c)) < 1e-13, (a, b, c)


def test_locate_at_vertex(hierarchy2):
    mesh = hierarchy2.finest
    for i, v in enumerate(mesh.vertices):
        tri, w = locate_triangle(mesh, v)
        k = list(mesh.triangles[tri]).index(i)
        assert abs(w[k] - 1) < 1e-9
        assert np.all(np.abs(np.delete(w, k)) < 1e-9)


def test_locate_at_centroid(hierarchy2):
    mesh = hierarchy2.finest
    for t, tri_v in enumerate(mesh.triangles):
        c = mesh.vertices[tri_v].sum(axis=0)
        tri, w = locate_triangle(mesh, c / np.linalg.norm(c))
        assert tri == t
        np.testing.assert_allclose(w, 1 / 3, atol=1e-6)


def test_locate_total_on_fibonacci_grid(hierarchy2):
    mesh = hierarchy2.finest
    pts = fibonacci_sphere(10000)
    tri, w = barycentric_weights(mesh.vertices, mesh.triangles, pts)
    assert np.all(w >= 0)
    np.testing.assert_allclose(w.sum(axis=1), 1.0, atol=1e-12)
    # the weighted corners reproduce the direction after central projection
    rec = np.einsum("pk,pkj->pj", w, mesh.vertices[mesh.triangles[tri]])
    rec /= np.linalg.norm(rec, axis=1, keepdims=True)
    assert np.max(angular_distance(rec, pts)) < 1e-9


def test_edge_ties_pick_lowest_triangle(hierarchy2):
    mesh = hierarchy2.finest
    a, b = mesh.edges()[0]
    mid = mesh.vertices[a] + mesh.vertices[b]
    tri, _ = locate_triangle(mesh, mid / np.linalg.norm(mid))
    sharing = [t for t, tv in enumerate(mesh.triangles) if a in tv and b in tv]
    assert tri == min(sharing)


@given(azimuths, elevations)
def test_locate_partition_of_unity(az, el):
    mesh = build_octahedron_hierarchy(2).finest
    _, w = locate_triangle(mesh, Direction(az, el))
    assert np.all(w >= 0) and abs(w.sum() - 1) < 1e-12


def test_sph_cart_broadcast():
    az, el = cart_to_sph(sph_to_cart([10.0, 20.0], [5.0, -5.0]))
    np.testing.assert_allclose(az, [10, 20])
    np.testing.assert_allclose(el, [5, -5])


def test_layout_orders():
    assert LAYOUT_ORDER == {"octahedron": 1, "tdesign24": 3, "lebedev50": 5}
    assert math.isclose(load_layout("lebedev50").order, 5)
