"""Exact arithmetic for convex compact subsets of R^d via support functions.

A convex compact set A is encoded by its support values on a fixed grid of
unit directions U = {u_1, ..., u_m}:

    h_A(u) = sup { <u, x> : x in A },        values[k] = h_A(u_k).

On a shared grid this embedding is linear and isometric:

    h_{aA + bB} = a h_A + b h_B   (a, b >= 0),
    d_H(A, B)   = max_k |h_A(u_k) - h_B(u_k)|,

so Minkowski sums, nonnegative scaling and translation are exact vector
operations, and the Hausdorff metric is the sup norm of the value vectors.
For d = 1 the grid is {-1, +1} and every interval is represented exactly.
For d = 2 the grid has m equally spaced directions (m even, default 64);
values are grid-exact: distances and norms are exact for grid polytopes and
grid evaluations of balls, and lower bounds for other bodies.

A raw value vector need not be a support function.  Canonical form is
restored by re-evaluating the halfplane intersection

    P = cap_k { x : <u_k, x> <= values[k] }

on the grid; re-evaluation can only shrink values, and a vector already of
the form h_A is a fixed point.  Empty intersections are rejected.

The Steiner point is computed from the same data:

    d = 1:  s(A) = (h(+1) - h(-1)) / 2                (interval midpoint)
    d = 2:  s(A) = (2/m) sum_k u_k h_A(u_k)           (grid quadrature)

The d = 2 formula is the quadrature of (1/pi) int_{S^1} u h_A(u) du over the
symmetric grid; it is exact for singletons, balls and segments, additive and
translation-equivariant for everything, and lands inside A up to quadrature
error for general grid polytopes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import EmptySupportSet, GridMismatch

CANON_TOL = 1e-9          # absolute feasibility / membership tolerance
CANON_TOL_RELAXED = 1e-6  # second-chance feasibility before declaring empty
_PAIR_DET_MIN = 1e-12     # constraint pairs more parallel than this are skipped


class DirectionGrid:
    """Fixed grid of unit directions shared by all sets in one computation.

    d = 1 uses exactly (-1, +1); d = 2 uses m equally spaced angles with m
    even, so the grid is symmetric under negation.  Instances are cached by
    (d, m); equality and hashing follow (d, m).
    """

    __slots__ = ("d", "m", "dirs")

    def __init__(self, d, dirs):
        self.d = d
        self.m = dirs.shape[0]
        dirs = np.ascontiguousarray(dirs, dtype=np.float64)
        dirs.flags.writeable = False
        self.dirs = dirs

    @staticmethod
    @lru_cache(maxsize=None)
    def line():
        return DirectionGrid(1, np.array([[-1.0], [1.0]]))

    @staticmethod
    @lru_cache(maxsize=None)
    def circle(m=64):
        if m < 4 or m % 2 != 0:
            raise ValueError(f"circle grid needs even m >= 4, got {m}")
        ang = 2.0 * np.pi * np.arange(m) / m
        return DirectionGrid(2, np.stack([np.cos(ang), np.sin(ang)], axis=1))

    @property
    def negation_index(self):
        """Index map nk with dirs[nk[k]] == -dirs[k]."""
        if self.d == 1:
            return np.array([1, 0])
        return (np.arange(self.m) + self.m // 2) % self.m

    def compatible(self, other):
        return self is other or (self.d == other.d and self.m == other.m)

    def __eq__(self, other):
        return isinstance(other, DirectionGrid) and self.d == other.d and self.m == other.m

    def __hash__(self):
        return hash((self.d, self.m))

    def __repr__(self):
        return f"DirectionGrid(d={self.d}, m={self.m})"


def _check_grids(a, b):
    if not a.grid.compatible(b.grid):
        raise GridMismatch(f"grids differ: {a.grid!r} vs {b.grid!r}")


@dataclass(frozen=True)
class SupportSet:
    """Convex compact set as a support-value vector on a direction grid.

    Direct construction trusts ``values`` to already be support evaluations
    (everything produced by this module's operations is).  Raw vectors from
    outside go through :func:`from_values`, which canonicalizes.
    """

    grid: DirectionGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if v.shape != (self.grid.m,):
            raise ValueError(f"expected {self.grid.m} support values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("support values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def to_json_dict(self):
        return {"d": self.grid.d, "m": self.grid.m, "values": self.values.tolist()}

    def __repr__(self):
        if self.grid.d == 1:
            return f"SupportSet[{-self.values[0]:.6g}, {self.values[1]:.6g}]"
        return f"SupportSet(d=2, m={self.grid.m}, |A|={norm(self):.6g})"


def canonical_values(grid, values):
    """Support values of the halfplane intersection defined by ``values``.

    Raises EmptySupportSet when the intersection is empty beyond tolerance.
    """
    v = np.asarray(values, dtype=np.float64)
    if grid.d == 1:
        s = v[0] + v[1]
        if s >= 0.0:
            return v.copy()
        if s < -CANON_TOL:
            raise EmptySupportSet(f"interval [-{v[0]}, {v[1]}] has negative width {s}")
        mid = (v[1] - v[0]) / 2.0  # within tolerance of a point: snap to it
        return np.array([-mid, mid])
    verts = _feasible_vertices(grid, v, CANON_TOL)
    if verts.size == 0:
        verts = _feasible_vertices(grid, v, CANON_TOL_RELAXED)
    if verts.size == 0:
        raise EmptySupportSet("halfplane intersection is empty on the grid")
    return (verts @ grid.dirs.T).max(axis=0)


def _feasible_vertices(grid, v, tol):
    U = grid.dirs
    i, j = np.triu_indices(grid.m, k=1)
    det = U[i, 0] * U[j, 1] - U[i, 1] * U[j, 0]
    ok = np.abs(det) > _PAIR_DET_MIN
    i, j, det = i[ok], j[ok], det[ok]
    x = (v[i] * U[j, 1] - v[j] * U[i, 1]) / det
    y = (U[i, 0] * v[j] - U[j, 0] * v[i]) / det
    pts = np.stack([x, y], axis=1)
    feas = ((pts @ U.T) <= v[None, :] + tol).all(axis=1)
    return pts[feas]


def from_values(grid, values):
    """Build a canonical SupportSet from a raw value vector."""
    return SupportSet(grid, canonical_values(grid, values))


def is_canonical(A, tol=CANON_TOL):
    """True when grid re-evaluation moves no support value by more than tol."""
    return float(np.max(np.abs(canonical_values(A.grid, A.values) - A.values))) <= tol


# -- constructors ------------------------------------------------------------

def make_interval(a, b, grid=None):
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("interval endpoints must be finite")
    if a > b:
        raise ValueError(f"interval endpoints out of order: {a} > {b}")
    grid = grid or DirectionGrid.line()
    if grid.d != 1:
        raise GridMismatch("make_interval needs a d=1 grid")
    return SupportSet(grid, np.array([-a, b], dtype=np.float64))


def make_point(grid, x):
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if x.shape != (grid.d,):
        raise GridMismatch(f"point has dimension {x.shape}, grid has d={grid.d}")
    return SupportSet(grid, grid.dirs @ x)


def make_ball(grid, center, radius):
    if radius < 0:
        raise ValueError("ball radius must be nonnegative")
    c = np.atleast_1d(np.asarray(center, dtype=np.float64))
    if c.shape != (grid.d,):
        raise GridMismatch(f"center has dimension {c.shape}, grid has d={grid.d}")
    return SupportSet(grid, grid.dirs @ c + radius)


def from_points(grid, points):
    """Convex hull of finitely many points, evaluated on the grid."""
    P = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if P.shape[1] != grid.d:
        raise GridMismatch(f"points have dimension {P.shape[1]}, grid has d={grid.d}")
    return SupportSet(grid, (P @ grid.dirs.T).max(axis=0))


# -- arithmetic and metric ---------------------------------------------------

def minkowski_add(A, B):
    _check_grids(A, B)
    return SupportSet(A.grid, A.values + B.values)


def scale(A, lam):
    if lam < 0:
        raise ValueError(
            f"scale factor must be >= 0 (got {lam}); support values are not "
            "pointwise under negative scaling"
        )
    return SupportSet(A.grid, A.values * lam)


def translate(A, x):
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if x.shape != (A.grid.d,):
        raise GridMismatch(f"translation has dimension {x.shape}, set has d={A.grid.d}")
    return SupportSet(A.grid, A.values + A.grid.dirs @ x)


def hausdorff(A, B):
    _check_grids(A, B)
    return float(np.max(np.abs(A.values - B.values)))


def norm(A):
    """Radstrom norm max_k |h_A(u_k)|; equals d_H(A, {0}) on the grid."""
    return float(np.max(np.abs(A.values)))


def steiner_point(A):
    if A.grid.d == 1:
        return np.array([(A.values[1] - A.values[0]) / 2.0])
    return (2.0 / A.grid.m) * (A.values @ A.grid.dirs)


def contains_point(A, x, slack=CANON_TOL):
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    return bool(np.all(A.grid.dirs @ x <= A.values + slack))


# -- primitives: additive interval maps --------------------------------------

class Primitive:
    """Additive interval map I -> SupportSet on a variable-depth dyadic tiling.

    Built from a full partition of [0,1] into dyadic cells (each width 2^-k,
    dyadically aligned, depths may differ across cells) with one value vector
    per cell; cell values are typically w * h_{Gamma(t)}.  All ancestor sums
    are materialized once, so for every tree node

        node value == left child value + right child value   (bit exact),

    which makes query additive with zero grid error across canonical dyadic
    splits.  Queries not aligned to the tiling split boundary cells
    proportionally.  A degenerate interval queries to the singleton {0}.
    """

    def __init__(self, grid, starts, widths, cell_values):
        starts = np.asarray(starts, dtype=np.float64)
        widths = np.asarray(widths, dtype=np.float64)
        V = np.asarray(cell_values, dtype=np.float64)
        order = np.argsort(starts)
        starts, widths, V = starts[order], widths[order], V[order]
        if V.ndim != 2 or V.shape != (len(starts), grid.m):
            raise ValueError("cell_values must be (n_cells, m)")
        depths = np.round(-np.log2(widths)).astype(int)
        if np.max(np.abs(widths - 2.0 ** (-depths.astype(float)))) > 1e-12:
            raise ValueError("cell widths must be dyadic (2^-k)")
        idx = np.round(starts * 2.0 ** depths.astype(float)).astype(np.int64)
        if np.max(np.abs(starts - idx * 2.0 ** (-depths.astype(float)))) > 1e-12:
            raise ValueError("cells must be dyadically aligned")
        if abs(widths.sum() - 1.0) > 1e-12 or starts[0] != 0.0:
            raise ValueError("cells must tile [0, 1]")
        self.grid = grid
        self.level = int(depths.max())
        # nodes keyed by (depth, index); leaves first, then ancestors
        nodes = {(int(d), int(i)): V[k] for k, (d, i) in enumerate(zip(depths, idx))}
        self._leaf_keys = set(nodes)
        by_depth = {}
        for (d, i) in nodes:
            by_depth.setdefault(d, []).append(i)
        for d in range(self.level, 0, -1):
            done = set()
            for ii in sorted(by_depth.get(d, ())):
                if ii in done:
                    continue
                sib = ii ^ 1
                if (d, sib) not in nodes:
                    raise ValueError("cells do not form a dyadic tiling")
                parent = (d - 1, ii >> 1)
                nodes[parent] = nodes[(d, min(ii, sib))] + nodes[(d, max(ii, sib))]
                by_depth.setdefault(d - 1, []).append(ii >> 1)
                done.add(sib)
        self._nodes = nodes
        self._starts = starts
        self._widths = widths
        self._prefix = np.vstack([np.zeros((1, grid.m)), np.cumsum(V, axis=0)])
        self._cellV = V

    @property
    def cells(self):
        """(starts, widths) of the underlying tiling, sorted."""
        return self._starts, self._widths

    def node_value(self, depth, index):
        return self._nodes[(depth, index)]

    def has_node(self, depth, index):
        return (depth, index) in self._nodes

    def is_leaf(self, depth, index):
        return (depth, index) in self._leaf_keys

    def query(self, a, b):
        """Value on [a, b] by exact tree descent; {0} when b <= a."""
        a = max(0.0, min(1.0, a))
        b = max(0.0, min(1.0, b))
        if b <= a:
            return SupportSet(self.grid, np.zeros(self.grid.m))
        acc = np.zeros(self.grid.m)
        stack = [(0, 0)]
        while stack:
            depth, idx = stack.pop()
            w = 2.0 ** (-depth)
            lo, hi = idx * w, (idx + 1) * w
            if hi <= a or lo >= b:
                continue
            if a <= lo and hi <= b:
                acc = acc + self._nodes[(depth, idx)]
                continue
            if (depth, idx) in self._leaf_keys:
                frac = (min(hi, b) - max(lo, a)) / w
                acc = acc + self._nodes[(depth, idx)] * frac
                continue
            stack.append((depth + 1, 2 * idx + 1))
            stack.append((depth + 1, 2 * idx))
        return SupportSet(self.grid, acc)

    def query_batch(self, a, b):
        """Value matrix (n, m) for interval batches, via prefix sums.

        Fast path for variational sums; agrees with query to ~1e-15 per value.
        """
        a = np.clip(np.asarray(a, dtype=np.float64), 0.0, 1.0)
        b = np.clip(np.asarray(b, dtype=np.float64), 0.0, 1.0)
        return self._prefix_at(b) - self._prefix_at(a)

    def _prefix_at(self, t):
        j = np.searchsorted(self._starts, t, side="right") - 1
        j = np.clip(j, 0, len(self._starts) - 1)
        frac = (t - self._starts[j]) / self._widths[j]
        frac = np.clip(frac, 0.0, 1.0)
        return self._prefix[j] + self._cellV[j] * frac[:, None]


class ExactIntervalMap:
    """Additive interval map with a closed-form value function.

    ``fn(a, b)`` must accept numpy arrays and return support-value rows; it
    must be additive across abutting intervals up to roundoff.  Used for
    corpus entries whose primitive has a closed form.
    """

    def __init__(self, grid, fn, name=""):
        self.grid = grid
        self.fn = fn
        self.name = name
        self.level = None

    def query(self, a, b):
        if b <= a:
            return SupportSet(self.grid, np.zeros(self.grid.m))
        row = self.fn(np.asarray([a]), np.asarray([b]))[0]
        return SupportSet(self.grid, row)

    def query_batch(self, a, b):
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        out = self.fn(a, b)
        out[b <= a] = 0.0
        return out
