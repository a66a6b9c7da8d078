"""Partition statistics, map evaluation and expansion profiles."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jablab.errors import (
    EmptyAxis,
    EndpointNotZeroOne,
    NotStrictlyIncreasing,
    PointOutsideCube,
)
from jablab.geometry import (
    JablonskiMap,
    RectPartition,
    compose_maps,
    evaluate_map,
    interior_crossing_points,
    min_expansion,
    partition_stats,
    refining_grid,
    validate_partition,
)

from conftest import (
    affine_axis,
    doubling_axis,
    mod_axis,
    product_map,
    tent_axis,
    tripling_axis,
)


# -- validate_partition ---------------------------------------------------------


def test_five_by_five_square_count():
    breaks = np.linspace(0.0, 1.0, 6)
    summary = validate_partition([breaks, breaks])
    assert summary.q == 25


def test_single_cell_partition():
    summary = validate_partition([[0.0, 1.0], [0.0, 1.0]])
    assert (summary.q, summary.c_t, summary.M) == (1, 0, 1)


def test_rejects_non_increasing_breaks():
    with pytest.raises(NotStrictlyIncreasing):
        validate_partition([[0.0, 0.5, 0.4, 1.0]])


def test_rejects_bad_endpoints_and_empty_axis():
    with pytest.raises(EndpointNotZeroOne):
        validate_partition([[0.1, 1.0]])
    with pytest.raises(EmptyAxis):
        validate_partition([[0.0]])


# -- partition_stats -----------------------------------------------------------


def test_stats_five_by_five():
    p = RectPartition.uniform(2, 5)
    s = partition_stats(p)
    assert (s.q, s.c_t, s.M) == (25, 16, 5)


def test_stats_one_by_one():
    s = partition_stats(RectPartition.uniform(2, 1))
    assert (s.q, s.c_t, s.M) == (1, 0, 1)


def _brute_force_stats(p: RectPartition):
    """Independent enumeration: all vertices, all midline hyperplane probes."""
    interior = 0
    for vertex in itertools.product(*p.breaks):
        if all(0.0 < v < 1.0 for v in vertex):
            interior += 1
    M = 0
    cells = list(itertools.product(*(range(c) for c in p.cells_per_axis)))
    for d in range(p.n):
        for z in p.midpoints(d):
            count = 0
            for idx in cells:
                lo, hi = p.cell_box(idx)
                if lo[d] < z < hi[d]:
                    count += 1
            M = max(M, count)
    return interior, M


def test_stats_two_by_three_matches_brute_force():
    p = RectPartition(
        (np.array([0.0, 0.4, 1.0]), np.array([0.0, 0.3, 0.7, 1.0]))
    )
    s = partition_stats(p)
    assert (s.q, s.c_t, s.M) == (6, 2, 3)
    assert (s.c_t, s.M) == _brute_force_stats(p)


@settings(max_examples=40, deadline=None)
@given(
    st.lists(
        st.lists(
            st.floats(min_value=0.01, max_value=0.99), min_size=0, max_size=3, unique=True
        ),
        min_size=1,
        max_size=3,
    )
)
def test_stats_closed_forms(per_axis_interior):
    breaks = [np.array([0.0] + sorted(pts) + [1.0]) for pts in per_axis_interior]
    p = RectPartition(tuple(breaks))
    s = partition_stats(p)
    r = p.cells_per_axis
    assert s.c_t == int(np.prod([ri - 1 for ri in r]))
    assert s.M == max(p.q // ri for ri in r)
    assert (s.c_t, s.M) == _brute_force_stats(p)
    if all(ri >= 2 for ri in r) and p.n >= 1:
        assert 1 <= s.M < s.q or s.q == s.M == 1


def test_cells_tile_cube():
    p = RectPartition((np.array([0.0, 0.3, 1.0]), np.array([0.0, 0.5, 0.6, 1.0])))
    assert abs(p.cell_volumes().sum() - 1.0) < 1e-15
    rng = np.random.default_rng(7)
    for x in rng.random((50, 2)):
        hits = 0
        for idx in itertools.product(*(range(c) for c in p.cells_per_axis)):
            lo, hi = p.cell_box(idx)
            inside = all(
                (lo[d] <= x[d] < hi[d]) or (x[d] == hi[d] == 1.0) for d in range(2)
            )
            hits += inside
        assert hits == 1
        assert p.locate(x) is not None


# -- evaluate_map ----------------------------------------------------------------


def test_doubling_squared_evaluation(doubling2):
    y, d = evaluate_map(doubling2, [0.3, 0.7])
    assert np.allclose(y, [0.6, 0.4], atol=1e-15)
    assert np.allclose(d, [2.0, 2.0])


def test_half_open_convention_at_midpoint():
    m = product_map(doubling_axis(), doubling_axis())
    y, _ = evaluate_map(m, [0.5, 0.5])
    # branch of [.5, 1)^2 applies: 2x - 1
    assert np.allclose(y, [0.0, 0.0], atol=1e-15)


def test_three_by_two_evaluation():
    m = product_map(tripling_axis(), doubling_axis())
    y, d = evaluate_map(m, [0.5, 0.9])
    assert np.allclose(y, [0.5, 0.8])
    assert np.allclose(d, [3.0, 2.0])


def test_point_outside_cube_rejected(doubling2):
    with pytest.raises(PointOutsideCube):
        evaluate_map(doubling2, [1.2, 0.5])


def test_jablonski_structure_commutes_with_per_axis():
    m = product_map(tripling_axis(), tent_axis())
    rng = np.random.default_rng(3)
    for x in rng.random((25, 2)):
        y, _ = evaluate_map(m, x)
        y1 = m.axes[0](x[0])
        y2 = m.axes[1](x[1])
        assert np.allclose(y, [y1, y2], atol=1e-15)


# -- min_expansion ------------------------------------------------------------------


def test_expansion_three_two():
    m = product_map(tripling_axis(), doubling_axis())
    prof = min_expansion(m)
    assert np.allclose(prof.per_axis, [3.0, 2.0])
    assert prof.gamma == pytest.approx(6.0)


def test_expansion_identity_slopes():
    m = product_map(
        affine_axis([0.0, 1.0], [(1.0, 0.0)]), affine_axis([0.0, 1.0], [(1.0, 0.0)])
    )
    prof = min_expansion(m)
    assert np.allclose(prof.per_axis, [1.0, 1.0])
    assert prof.gamma == 1.0


def test_expansion_min_and_product():
    # axis-1 slopes {2, 4}, axis-2 slopes all 3
    ax1 = affine_axis(
        [0.0, 0.5, 0.75, 1.0], [(2.0, 0.0), (4.0, -2.0), (2.0, -1.5)]
    )
    ax2 = tripling_axis()
    prof = min_expansion(product_map(ax1, ax2))
    assert np.allclose(prof.per_axis, [2.0, 3.0])
    assert prof.gamma == pytest.approx(6.0)


def test_expansion_multiplicative_over_products():
    ax1 = tent_axis()
    ax2 = tripling_axis()
    p1 = min_expansion(JablonskiMap((ax1,)))
    p2 = min_expansion(JablonskiMap((ax2,)))
    both = min_expansion(product_map(ax1, ax2))
    assert both.gamma == pytest.approx(p1.gamma * p2.gamma)
    assert np.allclose(both.per_axis, [p1.per_axis[0], p2.per_axis[0]])


# -- composition and grids -------------------------------------------------------


def test_compose_doubling_twice_is_mod_four():
    d = JablonskiMap((doubling_axis(),))
    comp = compose_maps(d, d)
    quad = mod_axis(4)
    xs = np.linspace(0.013, 0.987, 41)
    for x in xs:
        assert comp.axes[0](x) == pytest.approx(quad(x), abs=1e-12)
    assert np.allclose(np.abs(comp.axes[0].slopes), 4.0)


def test_refining_grid_refines_and_hits_target():
    p = RectPartition((np.array([0.0, 1 / 3, 0.5, 2 / 3, 1.0]),) * 2)
    g = grid = refining_grid(p, 64)
    assert grid.is_refinement_of(p)
    assert all(c >= 64 for c in g.cells_per_axis)


def test_interior_crossing_points_count():
    p = RectPartition.uniform(2, 5)
    pts = interior_crossing_points(p)
    assert pts.shape == (16, 2)
    assert np.all((pts > 0) & (pts < 1))
