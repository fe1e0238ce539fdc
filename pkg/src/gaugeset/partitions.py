"""Gauges, delta-fine tagged partitions, and partition builders.

A gauge is a strictly positive width function delta on [0, 1].  A tagged
partition {(I_i, t_i)} is delta-fine when I_i is inside the open window
(t_i - delta(t_i), t_i + delta(t_i)) for every i; Perron partitions keep
t_i inside I_i, free partitions do not.  cousin_build realizes Cousin's
lemma constructively: bisect [0, 1] until each dyadic cell admits a valid
tag from a fixed finite probe set, accepting a cell of width w at tag t
when w < delta(t) (which implies fineness for in-cell tags).

Positivity is probed, not proved: gauges are sampled at 10^4 quasi-random
points plus a dyadic mesh at construction, and every evaluation during a
build re-checks the sampled values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .convex_sets import norm as set_norm
from .errors import DepthExceeded, GaugeNotPositive, RepairFailed

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_WEYL8 = tuple((j * _GOLDEN) % 1.0 for j in range(1, 9))
_POSITIVITY_PROBES = 10_000
_MESH_DEPTH = 12  # refinement mesh 2^-12 for measurable gauges


def _probe_points():
    k = np.arange(1, _POSITIVITY_PROBES + 1)
    weyl = (k * _GOLDEN) % 1.0
    dyadic = np.arange(2 ** _MESH_DEPTH + 1) / 2.0 ** _MESH_DEPTH
    return np.unique(np.concatenate([weyl, dyadic, [0.0, 0.5, 1.0]]))


class Gauge:
    """Positive width function on [0, 1]; callable or piecewise-constant.

    Callable gauges wrap a vectorized ndarray -> ndarray function.  Piecewise
    gauges are constant on a finite mesh of cells, each cell belonging to one
    measurable piece (a finite union of intervals).
    """

    __slots__ = ("kind", "_fn", "_breaks", "_values", "name", "meta")

    def __init__(self, kind, fn=None, breaks=None, values=None, name="", meta=None):
        self.kind = kind
        self._fn = fn
        self._breaks = breaks
        self._values = values
        self.name = name
        self.meta = dict(meta or {})
        probes = _probe_points()
        sampled = self(probes)
        if not np.all(np.isfinite(sampled)) or np.min(sampled) <= 0.0:
            bad = probes[int(np.argmin(sampled))]
            raise GaugeNotPositive(f"gauge {name or kind} is not positive at t={bad!r}")

    @staticmethod
    def from_callable(fn, vectorized=True, name="", meta=None):
        if not vectorized:
            raw = fn
            fn = lambda ts: np.asarray([raw(float(t)) for t in np.atleast_1d(ts)])
        return Gauge("callable", fn=fn, name=name, meta=meta)

    @staticmethod
    def constant(c, name=None):
        c = float(c)
        return Gauge("callable", fn=lambda ts: np.full_like(np.asarray(ts, dtype=float), c),
                     name=name or f"const({c:g})")

    @staticmethod
    def step(breaks, values, name="", meta=None):
        """Piecewise-constant gauge on contiguous cells [b_k, b_{k+1})."""
        breaks = np.asarray(breaks, dtype=np.float64)
        values = np.asarray(values, dtype=np.float64)
        if len(breaks) != len(values) + 1:
            raise ValueError("need len(breaks) == len(values) + 1")
        if breaks[0] != 0.0 or breaks[-1] != 1.0 or np.any(np.diff(breaks) <= 0):
            raise ValueError("breaks must increase from 0 to 1")
        return Gauge("piecewise", breaks=breaks, values=values, name=name, meta=meta)

    @staticmethod
    def piecewise(pieces, name="", meta=None):
        """Gauge from [(intervals, delta)] with disjoint pieces covering [0,1].

        Each piece is a list of (lo, hi) intervals sharing one constant width.
        """
        if not pieces:
            raise ValueError("piecewise gauge needs at least one piece")
        cells = []
        for intervals, val in pieces:
            for lo, hi in intervals:
                if hi <= lo:
                    raise ValueError(f"bad piece interval ({lo}, {hi})")
                cells.append((float(lo), float(hi), float(val)))
        cells.sort()
        breaks = [0.0]
        values = []
        for lo, hi, val in cells:
            if abs(lo - breaks[-1]) > 1e-12:
                raise ValueError("pieces overlap or leave a gap")
            breaks.append(hi)
            values.append(val)
        if abs(breaks[-1] - 1.0) > 1e-12:
            raise ValueError("pieces do not cover [0, 1]")
        breaks[-1] = 1.0
        return Gauge.step(np.asarray(breaks), np.asarray(values), name=name, meta=meta)

    def __call__(self, ts):
        ts = np.asarray(ts, dtype=np.float64)
        scalar = ts.ndim == 0
        ts1 = np.atleast_1d(ts)
        if self.kind == "callable":
            out = np.asarray(self._fn(ts1), dtype=np.float64)
        else:
            j = np.searchsorted(self._breaks, ts1, side="right") - 1
            j = np.clip(j, 0, len(self._values) - 1)
            out = self._values[j]
        return float(out[0]) if scalar else out

    def describe(self):
        d = {"kind": self.kind, "name": self.name}
        if self.kind == "piecewise":
            d["cells"] = len(self._values)
        d.update(self.meta)
        return d


@dataclass(frozen=True)
class TaggedPartition:
    """Finite list of (interval, tag) pairs, sorted by left endpoint.

    Flags are recomputed from the data, never trusted from the caller:
    perron (tags inside their own intervals), interior (tags strictly inside
    except at domain endpoints 0 and 1), full (intervals tile [0, 1]).
    """

    a: np.ndarray
    b: np.ndarray
    t: np.ndarray
    perron: bool = field(init=False)
    interior: bool = field(init=False)
    full: bool = field(init=False)

    def __post_init__(self):
        a = np.asarray(self.a, dtype=np.float64)
        b = np.asarray(self.b, dtype=np.float64)
        t = np.asarray(self.t, dtype=np.float64)
        if not (a.shape == b.shape == t.shape) or a.ndim != 1 or len(a) == 0:
            raise ValueError("need matching nonempty 1-d arrays a, b, t")
        order = np.argsort(a, kind="stable")
        a, b, t = a[order].copy(), b[order].copy(), t[order].copy()
        if np.any(b <= a):
            raise ValueError("intervals must have positive width")
        if np.any(b[:-1] > a[1:] + 1e-12):
            raise ValueError("interval interiors overlap")
        for arr in (a, b, t):
            arr.flags.writeable = False
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "perron", bool(np.all((a <= t) & (t <= b))))
        inner = (a < t) & (t < b)
        at_zero = (a == 0.0) & (t == 0.0)
        at_one = (b == 1.0) & (t == 1.0)
        object.__setattr__(self, "interior", bool(np.all(inner | at_zero | at_one)))
        covers = (
            abs(a[0]) <= 1e-12
            and abs(b[-1] - 1.0) <= 1e-12
            and np.all(np.abs(a[1:] - b[:-1]) <= 1e-12)
            and abs(float(np.sum(b - a)) - 1.0) <= 1e-12
        )
        object.__setattr__(self, "full", bool(covers))

    @property
    def widths(self):
        return self.b - self.a

    def __len__(self):
        return len(self.a)

    def to_json_list(self):
        return [
            {"a": float(x), "b": float(y), "t": float(z)}
            for x, y, z in zip(self.a, self.b, self.t)
        ]


def is_delta_fine(P, g, require_perron=False):
    """True when every item satisfies I_i inside (t_i - delta, t_i + delta)."""
    d = g(P.t)
    fine = bool(np.all((P.a > P.t - d) & (P.b < P.t + d)))
    if require_perron:
        fine = fine and P.perron
    return fine


def cousin_build(g, max_depth=40, tag_order="mid", cell_budget=1 << 22):
    """Full delta-fine Perron partition of [0, 1] by bisection.

    A dyadic cell of width w is accepted at the first candidate tag t (in
    preference order: midpoint/left/right endpoints, then 8 quasi-random
    interior probes; ``tag_order="left"`` tries the left endpoint first)
    with w < delta(t); otherwise the cell is bisected.  Raises DepthExceeded
    past ``max_depth`` or when the active cell count would exceed the
    budget, signalling a gauge too irregular for the probe set.
    """
    if tag_order not in ("mid", "left"):
        raise ValueError(f"unknown tag_order {tag_order!r}")
    starts, widths, tags = [], [], []
    idx = np.zeros(1, dtype=np.int64)
    depth = 0
    while len(idx) > 0:
        if depth > max_depth:
            raise DepthExceeded(
                f"no acceptance after depth {max_depth} ({len(idx)} cells active)",
                depth=max_depth, active_cells=len(idx))
        if len(idx) > cell_budget:
            raise DepthExceeded(
                f"active cell count {len(idx)} exceeds budget at depth {depth}",
                depth=depth, active_cells=len(idx))
        w = 2.0 ** (-depth)
        a = idx * w
        base = [a + w / 2.0, a, a + w] if tag_order == "mid" else [a, a + w / 2.0, a + w]
        cands = base + [a + w * c for c in _WEYL8]
        chosen = np.empty(len(idx))
        have = np.zeros(len(idx), dtype=bool)
        for cand in cands:
            need = ~have
            if not need.any():
                break
            d = np.atleast_1d(g(cand[need]))
            if np.min(d) <= 0.0:
                bad = cand[need][int(np.argmin(d))]
                raise GaugeNotPositive(f"gauge evaluated to {np.min(d)} at t={bad}")
            ok = w < d
            sel = np.flatnonzero(need)[ok]
            chosen[sel] = cand[sel]
            have[sel] = True
        if have.any():
            starts.append(a[have])
            widths.append(np.full(int(have.sum()), w))
            tags.append(chosen[have])
        rest = idx[~have]
        idx = np.concatenate([rest * 2, rest * 2 + 1]) if len(rest) else rest
        depth += 1
    a = np.concatenate(starts)
    w = np.concatenate(widths)
    t = np.concatenate(tags)
    return TaggedPartition(a, a + w, t)


def free_partition(n, tag_rule="midpoint", seed=None, tags=None):
    """Uniform n-cell partition with tags anywhere in [0, 1] per rule."""
    if n < 1:
        raise ValueError("need n >= 1")
    a = np.arange(n) / n
    b = np.arange(1, n + 1) / n
    if tag_rule == "midpoint":
        t = (a + b) / 2.0
    elif tag_rule == "left":
        t = a.copy()
    elif tag_rule == "seeded-random":
        rng = np.random.default_rng(0 if seed is None else seed)
        t = rng.uniform(0.0, 1.0, size=n)
    elif tag_rule == "supplied":
        t = np.asarray(tags, dtype=np.float64)
        if t.shape != (n,):
            raise ValueError("supplied tags must have length n")
    else:
        raise ValueError(f"unknown tag rule {tag_rule!r}")
    return TaggedPartition(a, b, t)


def _merge_duplicate_tags(a, b, t):
    """Merge adjacent cells sharing one tag at their common endpoint.

    The merged cell [a_i, b_{i+1}] keeps the tag and stays fine for any gauge
    both halves were fine for: each half was inside the tag's window, so the
    union is.  Sums against the merged cell double nothing: f(t) (w1 + w2).
    """
    keep_a, keep_b, keep_t = [a[0]], [b[0]], [t[0]]
    for i in range(1, len(a)):
        if t[i] == keep_t[-1]:
            if abs(keep_b[-1] - a[i]) > 1e-12:
                raise ValueError("duplicate tags in non-adjacent cells")
            keep_b[-1] = b[i]
        else:
            keep_a.append(a[i])
            keep_b.append(b[i])
            keep_t.append(t[i])
    return np.asarray(keep_a), np.asarray(keep_b), np.asarray(keep_t)


def interior_repair(P, f, phi=None, eps=1e-6, gauge=None):
    """Move tag-carrying boundaries so every non-domain-endpoint tag is interior.

    Tags are preserved.  A tag sitting on a shared cell endpoint has its cell
    extended into the neighbor by a shift eta small enough that

        sum_k ||f(t_k)|| * | |I_k| - |I'_k| |  <  eps,

    and, when an additive interval map ``phi`` is given, the summed value-gap
    of phi over changed cells stays below eps (the shift is halved until the
    probed modulus allows it).  Duplicate tags are merged first; the merged
    cell is dominated by twice either half, so no bound degrades.  When
    ``gauge`` is given, shifts are also capped by the tag's gauge slack and
    the output is verified delta-fine.
    """
    if not P.perron:
        raise ValueError("interior_repair needs a Perron partition")
    a, b, t = _merge_duplicate_tags(P.a.copy(), P.b.copy(), P.t.copy())
    a0, b0 = a.copy(), b.copy()
    K = len(a)
    fnorm = lambda x: float(np.linalg.norm(np.atleast_1d(np.asarray(f(x), dtype=float))))
    budget = eps / (2.0 * K)

    for i in range(K):
        if a[i] < t[i] < b[i]:
            continue
        if t[i] == a[i] and a[i] == 0.0:
            continue
        if t[i] == b[i] and b[i] == 1.0:
            continue
        # the tag sits on a shared endpoint; only one side can claim it
        # (equal tags on both sides were merged above)
        if t[i] == b[i]:
            j = i + 1
            room = min((t[j] - b[i]) / 2.0, (b[j] - a[j]) / 4.0)
        elif t[i] == a[i]:
            j = i - 1
            room = min((a[i] - t[j]) / 2.0, (b[j] - a[j]) / 4.0)
        else:
            raise ValueError("tag outside its interval in a Perron partition")
        eta = min(room, budget / (fnorm(t[i]) + 1.0), budget / (fnorm(t[j]) + 1.0))
        if gauge is not None:
            eta = min(eta, 0.5 * float(gauge(t[i])))
        if eta <= 0.0:
            raise RepairFailed(f"no slack at shared endpoint t={t[i]}")
        if phi is not None:
            bd = t[i]
            for _ in range(60):
                lo, hi = (bd, bd + eta) if j > i else (bd - eta, bd)
                if set_norm(phi.query(lo, hi)) <= eps / (4.0 * K):
                    break
                eta /= 2.0
            else:
                raise RepairFailed("interval-map modulus never admitted a shift")
        if j > i:
            b[i] += eta
            a[j] += eta
        else:
            a[i] -= eta
            b[j] -= eta

    out = TaggedPartition(a, b, t)
    if not out.interior:
        raise RepairFailed("repair left a non-interior tag")
    # recompute the advertised bounds directly rather than trusting the caps
    drift = sum(
        fnorm(t[k]) * abs((b[k] - a[k]) - (b0[k] - a0[k]))
        for k in range(K)
        if (a[k], b[k]) != (a0[k], b0[k])
    )
    if drift >= eps:
        raise RepairFailed(f"length drift bound violated: {drift} >= {eps}")
    if phi is not None:
        from .convex_sets import hausdorff
        gap = sum(
            hausdorff(phi.query(a0[k], b0[k]), phi.query(a[k], b[k]))
            for k in range(K)
            if (a[k], b[k]) != (a0[k], b0[k])
        )
        if gap > eps:
            raise RepairFailed(f"interval-map gap bound violated: {gap} > {eps}")
    if gauge is not None and not is_delta_fine(out, gauge, require_perron=True):
        raise RepairFailed("repair broke delta-fineness")
    return out


@dataclass(frozen=True)
class MeasurablePartition:
    """Finite measurable partition of [0, 1] into unions of dyadic cells."""

    pieces: tuple  # tuple of tuples of (lo, hi)
    tags: np.ndarray
    measures: np.ndarray
    depth: int
    seed: int = 0

    def __post_init__(self):
        lam = np.asarray(self.measures, dtype=np.float64)
        if abs(float(lam.sum()) - 1.0) > 1e-12:
            raise ValueError("piece measures must sum to 1")
        ivs = sorted((lo, hi) for piece in self.pieces for (lo, hi) in piece)
        for (l1, h1), (l2, h2) in zip(ivs, ivs[1:]):
            if h1 > l2 + 1e-12:
                raise ValueError("pieces overlap")

    @property
    def n_pieces(self):
        return len(self.pieces)

    def refines(self, coarser):
        """True when every piece of self lies inside one piece of coarser."""
        lows, highs, owners = [], [], []
        for r, cp in enumerate(coarser.pieces):
            for lo, hi in cp:
                lows.append(lo)
                highs.append(hi)
                owners.append(r)
        order = np.argsort(lows)
        lows = np.asarray(lows)[order]
        highs = np.asarray(highs)[order]
        owners = np.asarray(owners)[order]
        for piece in self.pieces:
            mids = np.array([(lo + hi) / 2.0 for lo, hi in piece])
            j = np.searchsorted(lows, mids, side="right") - 1
            if np.any(j < 0) or np.any(mids >= highs[j]):
                return False
            if np.unique(owners[j]).size != 1:
                return False
        return True


def measurable_partition(n_pieces, interleave_depth=0, tag_rule="seeded-random", seed=0):
    """Partition into 2^l residue classes of dyadic cells at depth max(l, d).

    With interleave_depth d > l the pieces are honest non-interval measurable
    sets (interleaved unions of width-2^-d cells); with d <= l they are plain
    intervals.  Piece r collects the cells with index j = r (mod n_pieces).
    """
    if n_pieces < 1 or (n_pieces & (n_pieces - 1)) != 0:
        raise ValueError("n_pieces must be a power of two")
    ell = n_pieces.bit_length() - 1
    depth = max(ell, int(interleave_depth))
    ncells = 1 << depth
    w = 1.0 / ncells
    pieces = []
    for r in range(n_pieces):
        cells = np.arange(r, ncells, n_pieces)
        ivs = []
        for j in cells:  # merge runs of adjacent cells
            lo, hi = j * w, (j + 1) * w
            if ivs and abs(ivs[-1][1] - lo) < 1e-15:
                ivs[-1] = (ivs[-1][0], hi)
            else:
                ivs.append((lo, hi))
        pieces.append(tuple(ivs))
    rng = np.random.default_rng(seed)
    tags = np.empty(n_pieces)
    for r, piece in enumerate(pieces):
        if tag_rule == "seeded-random":
            lo, hi = piece[int(rng.integers(len(piece)))]
            tags[r] = rng.uniform(lo, hi)
        elif tag_rule == "midpoint":
            lo, hi = piece[0]
            tags[r] = (lo + hi) / 2.0
        else:
            raise ValueError(f"unknown tag rule {tag_rule!r}")
    measures = np.full(n_pieces, 1.0 / n_pieces)
    return MeasurablePartition(tuple(pieces), tags, measures, depth, seed)


def build_measurable_gauge(delta0, filtration):
    """Piecewise gauge from a base gauge and a filtration [(F_n, delta_n)].

    On F_n the width is min(delta_n, max(delta0(t), local sup of delta0 over
    F_n near t) / 2); off every F_n it is delta0(t).  The local sup stands in
    for a limsup and is sampled at 32 points of F_n within 1/256 of t; the
    surrogate is recorded in the gauge metadata, not claimed exact.  The
    output is piecewise-constant on the 2^-12 mesh.
    """
    if not filtration:
        raise ValueError("filtration must be nonempty")
    deltas = [float(dn) for _, dn in filtration]
    if any(d <= 0 for d in deltas):
        raise GaugeNotPositive("filtration widths must be positive")
    if any(d2 > d1 for d1, d2 in zip(deltas, deltas[1:])):
        raise ValueError("filtration widths must be nonincreasing")
    spans = [iv for piece, _ in filtration for iv in piece]
    spans.sort()
    for (l1, h1), (l2, h2) in zip(spans, spans[1:]):
        if h1 > l2 + 1e-12:
            raise ValueError("filtration pieces must be pairwise disjoint")

    mesh = 1 << _MESH_DEPTH
    centers = (np.arange(mesh) + 0.5) / mesh
    values = np.asarray(delta0(centers), dtype=np.float64).copy()
    for piece, dn in filtration:
        member = np.zeros(mesh, dtype=bool)
        for lo, hi in piece:
            member |= (centers >= lo) & (centers <= hi)
        if not member.any():
            continue
        idxs = np.flatnonzero(member)
        for i in idxs:
            tc = centers[i]
            span = np.linspace(tc - 1.0 / 256.0, tc + 1.0 / 256.0, 32)
            inside = np.zeros(32, dtype=bool)
            for lo, hi in piece:
                inside |= (span >= lo) & (span <= hi)
            pts = span[inside]
            local = float(np.max(delta0(pts))) if pts.size else float(delta0(tc))
            values[i] = min(dn, 0.5 * max(float(delta0(tc)), local))
    breaks = np.arange(mesh + 1) / mesh
    return Gauge.step(breaks, values, name="measurable",
                      meta={"limsup_surrogate": True, "mesh_depth": _MESH_DEPTH})
