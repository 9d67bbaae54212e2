import csv

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from swfkit.errors import BoundsError, ConfigurationError, ShapeError
from swfkit.geometry import (
    Direction,
    angular_distance,
    build_octahedron_hierarchy,
    layout_from_directions,
    load_layout,
)
from swfkit.swf import (
    LIFTING_FILTERS,
    SwfRenderer,
    SwfTransform,
    WaveletCoeffs,
    encode_gains,
    remap_matrix,
    swf_analysis,
    swf_encode,
    swf_render,
    swf_synthesis,
    swf_truncate,
)

FILTERS = sorted(LIFTING_FILTERS)
directions = st.builds(Direction, st.floats(-179, 359), st.floats(-89, 89))


def _db(x):
    return 20 * np.log10(np.maximum(np.abs(x), 1e-300))


@pytest.mark.parametrize("level", range(4))
def test_coefficient_counts(level):
    h = build_octahedron_hierarchy(level)
    c = swf_analysis(h, np.zeros(h.finest.n_vertices))
    assert c.count() == h.finest.n_vertices
    counts = h.vertex_counts()
    assert len(c.scaling) == 6
    assert [len(d) for d in c.details] == [counts[k] - counts[k - 1] for k in range(1, level + 1)]


@pytest.mark.parametrize("lifting", FILTERS)
def test_constant_input(lifting, hierarchy2):
    c = swf_analysis(hierarchy2, np.full(66, 2.5), lifting)
    np.testing.assert_allclose(c.scaling, 2.5, atol=1e-12)
    for d in c.details:
        np.testing.assert_allclose(d, 0, atol=1e-12)
    np.testing.assert_allclose(swf_synthesis(hierarchy2, c, 0, lifting=lifting), 2.5, atol=1e-12)


def test_single_vertex_impulse_by_hand():
    h = build_octahedron_hierarchy(1)
    x = np.zeros(18)
    x[0] = 1.0  # the +x vertex, four incident new vertices
    incident = [j for j, p in enumerate(h.levels[1].parents) if 0 in p]
    assert len(incident) == 4

    c = swf_analysis(h, x, "averaging")
    # coarse = (1 + 0) / (1 + 4/2); detail = 0 - (1/3 + 0)/2
    np.testing.assert_allclose(c.scaling, [1 / 3, 0, 0, 0, 0, 0], atol=1e-15)
    expected = np.zeros(12)
    expected[incident] = -1 / 6
    np.testing.assert_allclose(c.details[0], expected, atol=1e-15)

    c = swf_analysis(h, x, "predict-update")
    # detail = 0 - (1 + 0)/2; coarse[0] = 1 + 4 * (-1/2) / 8; neighbours get -1/16 per shared edge
    expected = np.zeros(12)
    expected[incident] = -0.5
    np.testing.assert_allclose(c.details[0], expected, atol=1e-15)
    assert c.scaling[0] == pytest.approx(0.75)
    neighbours = {int(v) for j in incident for v in h.levels[1].parents[j] if v != 0}
    for v in neighbours:
        assert c.scaling[v] == pytest.approx(-1 / 16)
    assert c.scaling[1] == 0.0  # the antipode is untouched


@pytest.mark.parametrize("lifting", FILTERS)
@pytest.mark.parametrize("level", range(4))
def test_perfect_reconstruction(lifting, level, rng):
    h = build_octahedron_hierarchy(level)
    T = SwfTransform(h, lifting)
    x = rng.standard_normal((h.finest.n_vertices, 100))
    y = T.synthesis(T.analysis(x), level)
    assert np.linalg.norm(y - x) / np.linalg.norm(x) < 1e-12


@given(st.lists(st.floats(-1e3, 1e3), min_size=66, max_size=66), st.sampled_from(FILTERS))
def test_perfect_reconstruction_property(values, lifting):
    h = build_octahedron_hierarchy(2)
    x = np.array(values)
    y = swf_synthesis(h, swf_analysis(h, x, lifting), 2, lifting=lifting)
    assert np.allclose(y, x, rtol=0, atol=1e-12 * max(1.0, np.abs(x).max()))


def test_truncated_energy_never_exceeds_full(hierarchy2):
    T = SwfTransform(hierarchy2)
    for i in range(66):
        x = np.zeros(66)
        x[i] = 1.0
        c = T.analysis(x)
        full = np.sum(T.synthesis(c, 2) ** 2)
        for k in (0, 1):
            assert np.sum(T.synthesis(c, k) ** 2) <= full + 1e-9
            assert np.sum(T.synthesis(swf_truncate(c, k), 2) ** 2) <= full + 1e-9


def test_truncate(hierarchy2, rng):
    c = swf_analysis(hierarchy2, rng.standard_normal(66))
    same = swf_truncate(c, 2)
    assert all(np.array_equal(a, b) for a, b in zip(same.details, c.details))
    zero = swf_truncate(c, 0)
    assert all(not np.any(d) for d in zero.details) and zero.count() == c.count()
    once = swf_truncate(c, 1)
    twice = swf_truncate(once, 1)
    assert all(np.array_equal(a, b) for a, b in zip(once.details, twice.details))
    with pytest.raises(BoundsError):
        swf_truncate(c, 3)


def test_synthesis_bounds(hierarchy2):
    c = swf_analysis(hierarchy2, np.zeros(66))
    with pytest.raises(BoundsError):
        swf_synthesis(hierarchy2, c, 3)
    with pytest.raises(BoundsError):
        swf_synthesis(hierarchy2, c, -1)


def test_analysis_shape_error(hierarchy2):
    with pytest.raises(ShapeError):
        swf_analysis(hierarchy2, np.zeros(18))


def test_unknown_filter(hierarchy2):
    with pytest.raises(ConfigurationError):
        SwfTransform(hierarchy2, "haar")


def test_encode_at_vertex(hierarchy2):
    s = np.linspace(-1, 1, 8)
    for v in hierarchy2.finest.vertices[::7]:
        x = swf_encode(hierarchy2, v, s)
        assert np.count_nonzero(np.any(x.data != 0, axis=1)) == 1


def test_encode_at_centroid(hierarchy2):
    tri = hierarchy2.finest.triangles[10]
    c = hierarchy2.finest.vertices[tri].sum(axis=0)
    g = encode_gains(hierarchy2, c / np.linalg.norm(c))
    np.testing.assert_allclose(g[tri], 1 / 3, atol=1e-6)
    assert np.count_nonzero(g) == 3


@given(directions)
def test_encode_partition_of_unity(d):
    g = encode_gains(build_octahedron_hierarchy(2), d)
    assert abs(g.sum() - 1) < 1e-12 and np.all(g >= 0)


def test_octahedron_zenith_single_loudspeaker(hierarchy2, layouts):
    feeds = swf_render(hierarchy2, Direction(0, 90), np.ones(16), layouts["octahedron"])
    peak = np.max(np.abs(feeds.data))
    assert np.count_nonzero(np.any(feeds.data != 0, axis=1)) == 1
    assert np.sum(_db(feeds.data[:, 0] / peak) > -60) == 1


def test_spec_literal_update_leaks_into_neighbours(hierarchy2, layouts):
    # the predict-then-update filter activates the zenith's neighbours as well
    feeds = swf_render(hierarchy2, Direction(0, 90), np.ones(4), layouts["octahedron"], lifting="predict-update")
    assert np.sum(_db(feeds.data[:, 0] / np.max(np.abs(feeds.data))) > -60) > 1


@pytest.mark.parametrize("name", ["octahedron", "tdesign24", "lebedev50"])
def test_render_silence(name, hierarchy2, layouts):
    assert not np.any(swf_render(hierarchy2, Direction(10, 10), np.zeros(32), layouts[name]).data)


@given(directions, st.floats(-5, 5), st.floats(-5, 5))
def test_render_linear(d, a, b):
    r = SwfRenderer(load_layout("tdesign24"))
    s1 = np.sin(np.arange(64) * 0.3)
    s2 = np.cos(np.arange(64) * 0.11)
    lhs = r.render(d, a * s1 + b * s2).data
    rhs = a * r.render(d, s1).data + b * r.render(d, s2).data
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


@given(directions)
def test_locality_on_octahedron(d):
    r = SwfRenderer(load_layout("octahedron"))
    g = r.gains(d)
    far = angular_distance(r.layout.vectors, d.vector) > 120
    assert np.all(_db(g[far] / np.max(np.abs(g))) < -40)


def test_lebedev_active_count_at_30deg(layouts):
    g = SwfRenderer(layouts["lebedev50"]).gains(Direction(30, 0))
    active = np.sum(_db(g / np.max(np.abs(g))) > -60)
    assert 1 <= active <= 16


def test_lebedev_node_on_mesh_vertex_dominates(layouts):
    lay = layouts["lebedev50"]
    r = SwfRenderer(lay)
    for d in (Direction(0, 0), Direction(90, 0), Direction(0, 90), Direction(45, 0)):
        g = r.gains(d)
        nearest = np.argmin(angular_distance(lay.vectors, d.vector))
        assert np.argmax(np.abs(g)) == nearest


def test_remap_columns_sum_to_one(hierarchy2, layouts):
    for name in ("tdesign24", "lebedev50"):
        r = remap_matrix(hierarchy2.finest.vertices, layouts[name])
        np.testing.assert_allclose(r.sum(axis=0), 1.0, atol=1e-12)
        assert np.all(r >= 0)


def test_unsupported_layout():
    cube = layout_from_directions("cube", [[45, 35.26], [135, 35.26], [225, 35.26], [315, 35.26],
                                           [45, -35.26], [135, -35.26], [225, -35.26], [315, -35.26]])
    with pytest.raises(ConfigurationError):
        SwfRenderer(cube)


def test_coefficients_csv(tmp_path, hierarchy2):
    c = swf_analysis(hierarchy2, encode_gains(hierarchy2, Direction(20, 20)))
    path = tmp_path / "c.csv"
    c.write_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["level", "vertex", "value"] and len(rows) == 67
    assert {r[0] for r in rows[1:]} == {"0", "1", "2"}
    with pytest.raises(ShapeError):
        WaveletCoeffs(np.zeros((6, 2)), ()).to_rows()
