import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from curvedkakeya.errors import ZeroVector
from curvedkakeya.family import FamilySpec
from curvedkakeya.tubes import (
    CurveEvaluator,
    Grid3,
    Label,
    Tube,
    brute_force_cells,
    grid_size,
    jittered_grid,
    phi,
    rasterize_tube,
    select_separated_labels,
    tangent,
    tube_contains,
    unravel,
    wedge,
    wedge_many,
)

finite = st.floats(-10, 10, allow_nan=False)
vec3 = arrays(float, 3, elements=finite)


def test_phi_constant_and_moment_columns(example):
    for t in (0.0, 0.3, 1.0):
        np.testing.assert_allclose(phi(example, (1, 0, 0, 0), t), [1, 0])
        np.testing.assert_allclose(phi(example, (0, 0, 1, 0), t), [t, t**2])


def test_phi_wisewell_collapse(wisewell):
    x1, x4 = 0.3, 0.7
    for t in np.linspace(0, 1, 7):
        np.testing.assert_allclose(phi(wisewell, (x1, 0, 0, x4), t), [x1 - 2 * t * x4, 0], atol=1e-15)


def test_tangent_examples(example, wisewell):
    np.testing.assert_allclose(tangent(example, (0, 0, 1, 0), 0.4), [1, 1, 0.8])
    np.testing.assert_allclose(tangent(example, (1, 0, 0, 0), 0.4), [1, 0, 0])
    np.testing.assert_allclose(tangent(wisewell, (0, 0, 0, 0), 0.9), [1, 0, 0])


@settings(max_examples=200, deadline=None)
@given(arrays(float, 4, elements=st.floats(-2, 2)), st.floats(0, 1))
def test_tangent_first_coordinate_is_one(z, t):
    from curvedkakeya.family import example_family

    assert tangent(example_family(), z, t)[0] == 1.0


def test_wedge_examples():
    assert wedge([1, 2, 3], [1, 2, 3]) == 0
    assert wedge([1, 0, 0], [0, 1, 0]) == 1
    assert wedge([1, 1, 0], [1, 0, 0]) == pytest.approx(1 / math.sqrt(2))
    with pytest.raises(ZeroVector):
        wedge([0, 0, 0], [1, 0, 0])


@settings(max_examples=300)
@given(vec3, vec3, st.floats(0.1, 5) | st.floats(-5, -0.1))
def test_wedge_symmetry_and_range(u, w, c):
    if np.linalg.norm(u) < 1e-3 or np.linalg.norm(w) < 1e-3:
        return
    a, b = wedge(u, w), wedge(w, u)
    assert a == pytest.approx(b, abs=1e-12)
    assert 0 <= a <= 1
    assert wedge(u, c * u) == pytest.approx(0, abs=1e-7)


def test_wedge_many_matches_scalar():
    rng = np.random.default_rng(0)
    u = np.column_stack([np.ones(50), rng.normal(size=(50, 2))])
    w = np.column_stack([np.ones(50), rng.normal(size=(50, 2))])
    np.testing.assert_allclose(wedge_many(u, w), [wedge(a, b) for a, b in zip(u, w)])


def test_tube_contains(example):
    z = (0.2, 0.4, 0.5, 0.1)
    T = Tube(Label.from_z(z), 0.25, 0.5, 1 / 32)
    c = phi(example, z, 0.25)
    assert tube_contains(example, T, (0.25, *c))
    assert not tube_contains(example, T, (0.9, *phi(example, z, 0.9)))
    assert not tube_contains(example, T, (0.5, *(phi(example, z, 0.5) + [T.delta * 1.01, 0])))


def test_tube_validation():
    with pytest.raises(ValueError):
        Tube(Label.from_z((0, 0, 0, 0)), 0.5, 0.6, 0.1)
    with pytest.raises(ValueError):
        Tube(Label.from_z((0, 0, 0, 0)), 0.0, 0.01, 0.1)


def test_label_flags():
    assert Label.from_z((0, 0.5, 1, 0.2)).in_unit_cube()
    assert not Label.from_z((0, -0.5, 1, 0.2)).in_unit_cube()


def test_grid_axis_order():
    n = 8
    flat = np.array([(3 * n + 5) * n + 6])
    np.testing.assert_array_equal(unravel(flat, n), [[3, 5, 6]])
    g = Grid3.zeros(1 / n)
    assert g.dims == (n, n, n)
    g.add_cells(flat)
    assert g.counts[3, 5, 6] == 1 and g.support_cells == 1


def test_straight_tube_matches_line_raster():
    # a family with t-independent frame: curves are horizontal lines y = const
    f = FamilySpec.from_coeffs([[1], [0], [0], [0]], [[0], [1], [0], [0]])
    d = 1 / 16
    T = Tube(Label.from_z((0.5, 0.5, 0, 0)), 0.0, 1.0, d)
    cells = unravel(rasterize_tube(f, T, d, mode="center"), 16)
    # centers within d of (0.5, 0.5): the four cells around the point
    per_column = {tuple(c[1:]) for c in cells}
    assert per_column == {(7, 7), (7, 8), (8, 7), (8, 8)}
    assert len(cells) == 16 * 4


@pytest.mark.parametrize("k", [4, 5])
def test_cover_raster_superset_of_brute_force(example, wisewell, k):
    d = 2.0**-k
    rng = np.random.default_rng(k)
    for f in (example, wisewell):
        ev = CurveEvaluator(f)
        cover_total = brute_total = 0
        for _ in range(60):
            z = rng.uniform(0, 1, 4)
            a0 = rng.uniform(0, 0.5)
            T = Tube(Label.from_z(z), a0, rng.uniform(d, 1 - a0), d)
            cover = rasterize_tube(f, T, d)
            brute = brute_force_cells(f, T, d)
            assert np.isin(brute, cover).all()
            np.testing.assert_array_equal(rasterize_tube(f, T, d, mode="center"), brute)
            # size ratio: tubes clear of the grid boundary and at least 1/4 long
            y = ev.phi(z, np.linspace(*T.t_range, 200))
            if y.min() >= d and y.max() <= 1 - d:
                cover_total += len(cover)
                brute_total += len(brute)
                if T.lam >= 0.25:
                    assert len(cover) <= 8 * len(brute)
        assert cover_total <= 8 * brute_total


def test_full_tube_cell_count(example):
    d = 2.0**-5
    T = Tube(Label.from_z((0.3, 0.2, 0.4, 0.1)), 0.0, 1.0, d)
    baseline = d**-1 * (2 * math.ceil(d / d) + 1) ** 2
    assert 1 <= len(rasterize_tube(example, T, d)) / baseline <= 8


def test_short_tube_cell_count(example):
    d = 2.0**-5
    T = Tube(Label.from_z((0.3, 0.2, 0.4, 0.1)), 0.4, d, d)
    cover = rasterize_tube(example, T, d)
    assert np.isin(brute_force_cells(example, T, d), cover).all()
    assert len(cover) <= 64


def test_select_separated_half_grid():
    d = 0.1
    g = np.arange(0, 1, d / 2)
    v = np.array([(a, b) for a in g for b in g])
    z = np.column_stack([np.zeros((len(v), 2)), v])
    kept = select_separated_labels(z, d)
    kv = v[kept]
    dist = np.linalg.norm(kv[:, None] - kv[None], axis=-1) + np.eye(len(kv)) * 9
    assert dist.min() >= d - 1e-12
    assert 0.2 * len(v) <= len(kept) <= 0.3 * len(v)


def test_select_single_candidate():
    assert select_separated_labels([(0.1, 0.2, 0.3, 0.4)], 0.1) == [0]


def test_select_packing_count():
    d = 2.0**-5
    rng = np.random.default_rng(0)
    z = rng.uniform(0, 1, (10**4, 4))
    kept = select_separated_labels(z, d)
    assert 0.25 * d**-2 <= len(kept) <= 4 * d**-2


def test_select_projected_mode():
    plane = [(1, 0, 0, 0), (0, 0, 0, 1)]
    z = np.array([[0, 0, 0, 0], [0, 5, 5, 0.05], [0.2, 0, 0, 0]])
    assert select_separated_labels(z, 0.1, mode="projected", plane=plane) == [0, 2]


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 30), st.floats(0.005, 0.2), st.integers(0, 10**6))
def test_jittered_grid_separation(m, d, seed):
    if (m - 1) * d > 1:
        return
    pts = jittered_grid(m, d, np.random.default_rng(seed))
    assert pts.shape == (m * m, 2)
    assert pts.min() >= -1e-12 and pts.max() <= 1 + 1e-12
    if m > 1:
        dist = np.linalg.norm(pts[:, None] - pts[None], axis=-1) + np.eye(m * m) * 9
        assert dist.min() >= d * (1 - 1e-9)


def test_transversality_lower_bound(example):
    """Nearby curves at time t have tangents separated in proportion to |z - z'|."""
    rng = np.random.default_rng(1)
    ev = CurveEvaluator(example)
    d = 2.0**-6
    ratios = []
    while len(ratios) < 1000:
        t = rng.uniform(0, 1)
        z = rng.uniform(0, 1, 4)
        # move along ker M(t), so the curves meet at time t, plus a little noise
        _, _, vt = np.linalg.svd(ev.matrix(t).reshape(2, 4))
        w = vt[2:].T @ rng.normal(size=2)
        z2 = z + rng.uniform(0.05, 0.5) * w / np.linalg.norm(w) + rng.normal(scale=d / 4, size=4)
        if np.linalg.norm(ev.phi(z, t)[0] - ev.phi(z2, t)[0]) > 2 * d:
            continue
        ratios.append(wedge(tangent(example, z, t), tangent(example, z2, t)) / np.linalg.norm(z - z2))
    c = float(np.min(ratios))
    assert c > 0


def test_grid_size_rounding():
    assert grid_size(1 / 32) == 32
    assert grid_size(0.3) == 4
