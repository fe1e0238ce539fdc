import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaugeset.convex_sets import (
    CANON_TOL,
    DirectionGrid,
    ExactIntervalMap,
    Primitive,
    SupportSet,
    canonical_values,
    contains_point,
    from_points,
    from_values,
    hausdorff,
    is_canonical,
    make_ball,
    make_interval,
    make_point,
    minkowski_add,
    norm,
    scale,
    steiner_point,
    translate,
)
from gaugeset.errors import EmptySupportSet, GridMismatch

LINE = DirectionGrid.line()
CIRCLE = DirectionGrid.circle(64)


def dyadic(k, scale_pow=26):
    return float(k) / float(2**scale_pow)


def test_line_grid_is_cached_and_fixed():
    assert DirectionGrid.line() is LINE
    np.testing.assert_array_equal(LINE.dirs, [[-1.0], [1.0]])
    assert CIRCLE.m == 64 and CIRCLE.d == 2


def test_circle_grid_rejects_odd_m():
    with pytest.raises(ValueError):
        DirectionGrid.circle(7)


def test_interval_support_values():
    A = make_interval(0.25, 0.75)
    np.testing.assert_array_equal(A.values, [-0.25, 0.75])


def test_interval_rejects_reversed_endpoints():
    with pytest.raises(ValueError):
        make_interval(1.0, 0.0)


def test_interval_add_is_endpoint_add():
    A = make_interval(0.0, 1.0)
    B = make_interval(2.0, 3.0)
    C = minkowski_add(A, B)
    np.testing.assert_array_equal(C.values, [-2.0, 4.0])


def test_hausdorff_of_intervals_is_max_endpoint_gap():
    A = make_interval(0.0, 1.0)
    B = make_interval(0.25, 1.5)
    assert hausdorff(A, B) == 0.5


def test_grid_mismatch_raises():
    A = make_interval(0.0, 1.0)
    B = make_ball(CIRCLE, [0.0, 0.0], 1.0)
    with pytest.raises(GridMismatch):
        minkowski_add(A, B)


def test_negative_scale_rejected():
    with pytest.raises(ValueError):
        scale(make_interval(0.0, 1.0), -1.0)


def test_empty_intersection_rejected():
    with pytest.raises(EmptySupportSet):
        canonical_values(LINE, np.array([-1.0, 0.5]))  # [1, 0.5] reversed


def test_square_minkowski_sum_vertices():
    """Sum of two axis-aligned squares is the square of summed extents."""
    S1 = from_points(CIRCLE, [[0, 0], [1, 0], [1, 1], [0, 1]])
    S2 = from_points(CIRCLE, [[0, 0], [2, 0], [2, 2], [0, 2]])
    S = minkowski_add(S1, S2)
    expected = from_points(CIRCLE, [[0, 0], [3, 0], [3, 3], [0, 3]])
    assert hausdorff(S, expected) <= 1e-15  # trig grid: one ulp of slack


def test_ball_support_and_steiner():
    B = make_ball(CIRCLE, [0.25, -0.5], 0.75)
    u0 = B.grid.dirs[0]
    assert B.values[0] == pytest.approx(u0 @ [0.25, -0.5] + 0.75)
    np.testing.assert_allclose(steiner_point(B), [0.25, -0.5], atol=1e-15)


def test_disk_steiner_quadrature_oracle():
    # midpoint-rule quadrature of (1/pi) int u h(u) du at m=1024 against m=64
    g = DirectionGrid.circle(1024)
    B = make_ball(g, [0.3, 0.4], 0.2)
    s_fine = (2.0 / g.m) * (B.values @ g.dirs)
    B64 = make_ball(CIRCLE, [0.3, 0.4], 0.2)
    np.testing.assert_allclose(steiner_point(B64), s_fine, atol=1e-12)


def test_steiner_of_interval_is_midpoint():
    A = make_interval(0.2, 0.8)
    np.testing.assert_allclose(steiner_point(A), [0.5])


def test_point_set_is_canonical_singleton():
    P = make_point(CIRCLE, [0.1, 0.2])
    assert is_canonical(P)
    # grid norm of an off-grid point undershoots |x| by at most 1 - cos(pi/m)
    r = math.hypot(0.1, 0.2)
    assert r * math.cos(math.pi / CIRCLE.m) <= norm(P) <= r + 1e-15


def test_norm_exact_for_grid_aligned_point():
    P = make_point(CIRCLE, [0.5, 0.0])  # direction 0 is on the grid
    assert norm(P) == 0.5


def test_canonicalization_shrinks_loose_values():
    # inflating one halfplane grows the square into a sliver capped by its
    # neighbors; re-evaluation pulls the loose value down to the sliver apex
    sq = from_points(CIRCLE, [[0, 0], [1, 0], [1, 1], [0, 1]])
    loose = sq.values.copy()
    loose[0] += 0.5
    A = from_values(CIRCLE, loose)
    assert A.values[0] < loose[0] - 0.3
    assert np.all(A.values <= loose + 1e-9)
    assert np.all(A.values >= sq.values - 1e-9)  # still contains the square
    assert is_canonical(A)


def test_canonicalization_is_idempotent_on_hulls():
    rng = np.random.default_rng(42)
    for _ in range(25):
        pts = rng.normal(size=(6, 2))
        A = from_points(CIRCLE, pts)
        assert is_canonical(A, tol=1e-9)


def test_contains_point_steiner_inside():
    rng = np.random.default_rng(7)
    for _ in range(25):
        pts = rng.normal(size=(5, 2))
        A = from_points(CIRCLE, pts)
        assert contains_point(A, steiner_point(A), slack=1e-9)
    assert not contains_point(make_interval(0.0, 1.0), [2.0])


def test_translation_moves_support_exactly():
    A = from_points(CIRCLE, [[0, 0], [1, 0], [0, 1]])
    x = np.array([0.5, -0.25])
    T = translate(A, x)
    np.testing.assert_array_equal(T.values, A.values + CIRCLE.dirs @ x)


# -- hypothesis invariants -----------------------------------------------------

dyadic_k = st.integers(min_value=-(2**26), max_value=2**26)


@st.composite
def dyadic_intervals(draw):
    k1 = draw(dyadic_k)
    k2 = draw(dyadic_k)
    lo, hi = min(k1, k2), max(k1, k2)
    return make_interval(dyadic(lo), dyadic(hi))


@given(dyadic_intervals(), dyadic_intervals(), dyadic_intervals())
@settings(max_examples=200)
def test_interval_add_associative_exact(A, B, C):
    left = minkowski_add(minkowski_add(A, B), C)
    right = minkowski_add(A, minkowski_add(B, C))
    assert hausdorff(left, right) == 0.0


@given(dyadic_intervals(), dyadic_intervals())
@settings(max_examples=200)
def test_interval_hausdorff_is_sup_norm_exact(A, B):
    dh = hausdorff(A, B)
    assert dh == float(np.max(np.abs(A.values - B.values)))
    assert dh >= 0.0
    assert hausdorff(A, B) == hausdorff(B, A)


@given(dyadic_intervals(), dyadic_intervals(), dyadic_k)
@settings(max_examples=200)
def test_interval_translation_invariance_exact(A, B, k):
    x = np.array([dyadic(k)])
    assert hausdorff(translate(A, x), translate(B, x)) == hausdorff(A, B)


@given(dyadic_intervals(), dyadic_intervals())
@settings(max_examples=200)
def test_interval_steiner_additive(A, B):
    s = steiner_point(minkowski_add(A, B))
    np.testing.assert_allclose(s, steiner_point(A) + steiner_point(B), atol=1e-9)
    assert contains_point(A, steiner_point(A), slack=1e-9)


@given(st.lists(st.tuples(st.floats(-10, 10), st.floats(-10, 10)),
                min_size=1, max_size=8))
@settings(max_examples=100)
def test_hull_triangle_inequality(pts):
    A = from_points(CIRCLE, pts)
    B = make_ball(CIRCLE, [0.0, 0.0], 1.0)
    C = make_point(CIRCLE, [2.0, 0.0])
    assert hausdorff(A, C) <= hausdorff(A, B) + hausdorff(B, C) + 1e-12


@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)),
                min_size=1, max_size=6),
       st.floats(0.0, 3.0))
@settings(max_examples=100)
def test_scale_distributes_over_add(pts, lam):
    A = from_points(CIRCLE, pts)
    B = from_points(CIRCLE, [[1, 1], [2, 0]])
    left = scale(minkowski_add(A, B), lam)
    right = minkowski_add(scale(A, lam), scale(B, lam))
    assert hausdorff(left, right) <= 1e-12 * max(1.0, lam)


# -- primitives ----------------------------------------------------------------

def uniform_primitive(depth, fn):
    n = 2**depth
    starts = np.arange(n) / n
    widths = np.full(n, 1.0 / n)
    a, b = starts, starts + widths
    return Primitive(LINE, starts, widths, fn(a, b))


def interval_growth(a, b):
    return np.column_stack([np.zeros_like(a), (b * b - a * a) / 2.0])


def test_primitive_nodes_are_bit_exact_sums():
    phi = uniform_primitive(6, interval_growth)
    for depth in range(6):
        for idx in range(2**depth):
            parent = phi.node_value(depth, idx)
            left = phi.node_value(depth + 1, 2 * idx)
            right = phi.node_value(depth + 1, 2 * idx + 1)
            np.testing.assert_array_equal(parent, left + right)


def test_primitive_query_additive_on_dyadic_splits():
    phi = uniform_primitive(6, interval_growth)
    whole = phi.query(0.0, 1.0).values
    halves = phi.query(0.0, 0.5).values + phi.query(0.5, 1.0).values
    np.testing.assert_array_equal(whole, halves)


def test_primitive_query_matches_closed_form():
    phi = uniform_primitive(8, interval_growth)
    got = phi.query(0.25, 0.75).values
    np.testing.assert_allclose(got, [0.0, (0.75**2 - 0.25**2) / 2.0], atol=1e-12)


def test_primitive_partial_leaf_is_proportional():
    phi = uniform_primitive(2, interval_growth)
    # [0, 1/8] is half of the leaf [0, 1/4]
    np.testing.assert_array_equal(
        phi.query(0.0, 0.125).values, 0.5 * phi.node_value(2, 0)
    )


def test_primitive_query_batch_matches_query():
    phi = uniform_primitive(7, interval_growth)
    rng = np.random.default_rng(3)
    a = np.sort(rng.uniform(0, 1, 50))
    b = np.clip(a + rng.uniform(0, 0.2, 50), 0, 1)
    batch = phi.query_batch(a, b)
    single = np.stack([phi.query(ai, bi).values for ai, bi in zip(a, b)])
    np.testing.assert_allclose(batch, single, atol=1e-14)


def test_primitive_degenerate_query_is_zero():
    phi = uniform_primitive(4, interval_growth)
    np.testing.assert_array_equal(phi.query(0.5, 0.5).values, [0.0, 0.0])


def test_primitive_mixed_depth_tiling():
    # [0, 1/2] at depth 1 plus [1/2, 3/4], [3/4, 1] at depth 2
    starts = np.array([0.0, 0.5, 0.75])
    widths = np.array([0.5, 0.25, 0.25])
    V = interval_growth(starts, starts + widths)
    phi = Primitive(LINE, starts, widths, V)
    np.testing.assert_array_equal(
        phi.node_value(0, 0), V[0] + (V[1] + V[2])
    )
    assert phi.is_leaf(1, 0) and not phi.is_leaf(1, 1)


def test_primitive_rejects_non_dyadic_cells():
    with pytest.raises(ValueError):
        Primitive(LINE, np.array([0.0, 0.3]), np.array([0.3, 0.7]),
                  np.zeros((2, 2)))


def test_exact_interval_map_zeroes_degenerate_rows():
    phi = ExactIntervalMap(LINE, interval_growth)
    out = phi.query_batch(np.array([0.2, 0.5]), np.array([0.4, 0.5]))
    np.testing.assert_allclose(out[0], [0.0, (0.16 - 0.04) / 2.0])
    np.testing.assert_array_equal(out[1], [0.0, 0.0])


def test_support_set_rejects_nonfinite():
    with pytest.raises(ValueError):
        SupportSet(LINE, np.array([np.nan, 1.0]))
