"""Adversarial constructions (grid, trimming, zig-zag) and ratio measurements."""

from __future__ import annotations

import enum
import heapq
import json
import math
from collections import deque
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath

from .geom import CANONICAL, Frame, Point, properly_intersects, squared_distance
from .instance import InputError, Instance, validate
from .visibility import VisibilityGraph, build_visibility_graph


class NoPath(RuntimeError):
    """The two vertices are not connected."""


class ConstructionError(RuntimeError):
    """A construction could not be brought into general position."""


class Metric(str, enum.Enum):
    HOPS = "hops"
    EUCLIDEAN = "euclidean"


# --------------------------------------------------------------------------
# exact sums of square roots


def _coefficients(terms: Iterable[tuple[int, int]]) -> dict[int, Fraction]:
    """Write sum(sign * sqrt(k)) as sum(q * sqrt(rep)) with pairwise independent reps.

    sqrt(a) and sqrt(b) are rationally dependent iff a*b is a perfect square,
    so grouping by that relation needs integers only.
    """
    out: dict[int, Fraction] = {}
    for sign, k in terms:
        if k == 0:
            continue
        for rep in out:
            prod = k * rep
            r = math.isqrt(prod)
            if r * r == prod:
                out[rep] += sign * Fraction(r, rep)
                break
        else:
            out[k] = Fraction(sign)
    return {k: q for k, q in out.items() if q}


class Length:
    """A path length kept as the multiset of squared edge lengths."""

    __slots__ = ("terms", "approx", "_err")

    def __init__(self, terms: Sequence[int] = ()):
        self.terms = tuple(terms)
        self.approx = math.fsum(math.sqrt(k) for k in self.terms)
        # generous bound on the float error of ``approx``
        self._err = (self.approx + 1.0) * (len(self.terms) + 4) * 2.0 ** -48

    def plus(self, sq: int) -> "Length":
        return Length(self.terms + (sq,))

    def __float__(self) -> float:
        return self.approx

    def compare(self, other: "Length") -> int:
        diff = self.approx - other.approx
        if abs(diff) > self._err + other._err:
            return 1 if diff > 0 else -1
        return compare_sqrt_sums(self.terms, other.terms)

    def __lt__(self, other: "Length") -> bool:
        return self.compare(other) < 0

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Length) and self.compare(other) == 0

    def __hash__(self) -> int:
        return hash(tuple(sorted(self.terms)))

    def __repr__(self) -> str:
        return f"Length({self.approx:.6g}, {len(self.terms)} terms)"


def compare_sqrt_sums(a: Sequence[int], b: Sequence[int]) -> int:
    """Exact sign of sum(sqrt(a)) - sum(sqrt(b)) for non-negative integers."""
    coef = _coefficients([(1, k) for k in a] + [(-1, k) for k in b])
    if not coef:
        return 0
    if len(coef) == 1:
        return 1 if next(iter(coef.values())) > 0 else -1
    # nonzero by linear independence, so refinement terminates
    iv = mpmath.iv
    saved = iv.prec
    prec = 128
    try:
        while True:
            iv.prec = prec
            total = iv.mpf(0)
            for rep, q in coef.items():
                total += iv.mpf(q.numerator) / q.denominator * iv.sqrt(rep)
            if total.a > 0:
                return 1
            if total.b < 0:
                return -1
            prec *= 2
    finally:
        iv.prec = saved


# --------------------------------------------------------------------------
# shortest paths


@dataclass(frozen=True)
class PathResult:
    path: list[int]
    hops: int
    length: Length

    @property
    def value(self) -> float:
        return float(self.length)


def _path_length(points: Sequence[Point], path: Sequence[int]) -> Length:
    return Length([squared_distance(points[a], points[b]) for a, b in zip(path, path[1:])])


def shortest_path(g: VisibilityGraph, s: int, t: int, metric: Metric | str = Metric.HOPS,
                  vertices: Iterable[int] | None = None) -> PathResult:
    """Exact shortest ``s``-``t`` path, optionally inside the subgraph induced by ``vertices``."""
    metric = Metric(metric)
    pts = g.instance.points
    allowed = None if vertices is None else set(vertices)
    if allowed is not None and (s not in allowed or t not in allowed):
        raise NoPath(f"{s} or {t} is outside the subgraph")

    def nbrs(u: int):
        for v in g.neighbors(u):
            if allowed is None or v in allowed:
                yield v

    prev: dict[int, int] = {s: s}
    if metric is Metric.HOPS:
        q = deque([s])
        while q:
            u = q.popleft()
            if u == t:
                break
            for v in sorted(nbrs(u)):
                if v not in prev:
                    prev[v] = u
                    q.append(v)
    else:
        best: dict[int, Length] = {s: Length()}
        done: set[int] = set()
        heap: list[tuple[Length, int]] = [(best[s], s)]
        while heap:
            d, u = heapq.heappop(heap)
            if u in done:
                continue
            done.add(u)
            if u == t:
                break
            for v in sorted(nbrs(u)):
                if v in done:
                    continue
                nd = d.plus(squared_distance(pts[u], pts[v]))
                if v not in best or nd < best[v]:
                    best[v] = nd
                    prev[v] = u
                    heapq.heappush(heap, (nd, v))
    if t not in prev:
        raise NoPath(f"no path from {s} to {t}")
    path = [t]
    while path[-1] != s:
        path.append(prev[path[-1]])
    path.reverse()
    return PathResult(path, len(path) - 1, _path_length(pts, path))


def crossing_vertices(g: VisibilityGraph, s: int, t: int) -> set[int]:
    """``{s, t}`` plus the endpoints of every edge that properly crosses segment ``st``."""
    if s == t:
        raise ValueError("s and t must differ")
    pts = g.instance.points
    seg = (pts[s], pts[t])
    keep = {s, t}
    for u, v, _ in g.edges():
        if properly_intersects((pts[u], pts[v]), seg):
            keep.update((u, v))
    return keep


def induced_crossing_subgraph(g: VisibilityGraph, s: int, t: int) -> tuple[VisibilityGraph, list[int]]:
    """The subgraph induced by :func:`crossing_vertices`, relabelled ``0..k-1``.

    Returns the graph and the list mapping new ids to old ids.
    """
    keep = sorted(crossing_vertices(g, s, t))
    index = {v: i for i, v in enumerate(keep)}
    pts = g.instance.points
    cons = [(index[a], index[b]) for a, b in g.instance.constraints if a in index and b in index]
    sub_inst = Instance(tuple(pts[v] for v in keep), tuple(cons))
    adj = [[(index[v], c) for v, c in g.adj[u] if v in index] for u in keep]
    return VisibilityGraph(sub_inst, adj), keep


# --------------------------------------------------------------------------
# constructions


@dataclass(frozen=True)
class Construction:
    """A generated instance plus its designated endpoints and parameters."""

    kind: str
    instance: Instance
    s: int
    t: int
    params: dict = field(default_factory=dict)
    scale: int = 1


def _triangulate(points: Sequence[Point], forced: Sequence[tuple[int, int]],
                 among: Sequence[int] | None = None) -> list[tuple[int, int]]:
    """Complete ``forced`` (non-crossing) to a maximal plane graph, shortest edges first.

    When ``among`` is given only pairs inside it are tried; the caller
    guarantees that every other vertex is already enclosed by triangles.
    """
    import numpy as np

    edges = {(min(a, b), max(a, b)) for a, b in forced}
    segs = [(points[a], points[b]) for a, b in edges]
    pool = range(len(points)) if among is None else sorted(set(among))
    cands = sorted((squared_distance(points[a], points[b]), a, b)
                   for a in pool for b in pool if a < b and (a, b) not in edges)
    # bounding boxes of accepted segments, grown in place
    box = np.zeros((len(segs) + len(cands), 4), dtype=object)
    for k, (p, q) in enumerate(segs):
        box[k] = (min(p[0], q[0]), max(p[0], q[0]), min(p[1], q[1]), max(p[1], q[1]))
    used = len(segs)
    for _, a, b in cands:
        s = (points[a], points[b])
        lo_x, hi_x = min(s[0][0], s[1][0]), max(s[0][0], s[1][0])
        lo_y, hi_y = min(s[0][1], s[1][1]), max(s[0][1], s[1][1])
        bx = box[:used]
        near = np.nonzero((bx[:, 0] <= hi_x) & (bx[:, 1] >= lo_x) & (bx[:, 2] <= hi_y) & (bx[:, 3] >= lo_y))[0]
        if any(properly_intersects(s, segs[k]) for k in near.tolist()):
            continue
        edges.add((a, b))
        segs.append(s)
        box[used] = (lo_x, hi_x, lo_y, hi_y)
        used += 1
    return sorted(edges)


def gen_grid(rows: int) -> Construction:
    """``rows`` x ``rows`` grid, odd columns raised by half a row, x stretched by ``rows``;
    triangulated and every edge made a constraint. ``s`` sits below, ``t`` above.

    Coordinates are doubled for the half-row shift and then multiplied by a
    unit that leaves room for a small perturbation restoring general position.
    The perturbation bends the outer columns and rows outward so the
    triangulation adds no shortcut chords along the boundary.
    """
    n = rows
    if n < 2:
        raise InputError("the grid needs at least 2 rows")
    unit = 64 * n ** 3
    for salt in range(1, 50):
        pts: list[Point] = []
        idx: dict[tuple[int, int], int] = {}
        for i in range(n):
            for j in range(n):
                bend = j * (n - 1 - j)
                dx = -salt * bend if i == 0 else (salt * bend if i == n - 1 else salt * j * j)
                dy = salt * i * (n - 1 - i) * (2 * j - (n - 1)) + i + 1
                idx[i, j] = len(pts)
                pts.append(Point(2 * n * i * unit + dx, (2 * j + i % 2) * unit + dy))
        mid = (n - 1) * n * unit
        s_id, t_id = len(pts), len(pts) + 1
        pts.append(Point(mid + 1, -2 * unit))
        pts.append(Point(mid + 3, 2 * n * unit + 3))
        if not validate(Instance(tuple(pts), ()), limit=None):
            break
    else:
        raise ConstructionError(f"grid {n}: no perturbation restores general position")
    forced = []
    for i in range(n):
        for j in range(n - 1):
            forced.append((idx[i, j], idx[i, j + 1]))
    for i in range(n - 1):
        for j in range(n):
            forced.append((idx[i, j], idx[i + 1, j]))
        # split each quad between columns i and i+1 along its short diagonal
        for j in range(n - 1):
            if i % 2 == 0:
                forced.append((idx[i, j + 1], idx[i + 1, j]))
            else:
                forced.append((idx[i, j], idx[i + 1, j + 1]))
    rim = {idx[i, j] for i in range(n) for j in range(n) if i in (0, n - 1) or j in (0, n - 1)}
    inst = Instance(tuple(pts), tuple(_triangulate(pts, forced, sorted(rim | {s_id, t_id}))))
    bad = validate(inst, limit=None)
    if bad:
        raise ConstructionError(f"grid {n}: {bad[0]}")
    return Construction("grid", inst, s_id, t_id, {"rows": n}, 2 * unit)


def gen_zigzag(n: int, rho: int, eps_num: int = 1, eps_den: int = 2**20) -> Construction:
    """Three columns of ``n/3`` rows with the zig-zag constraints, odd rows shifted
    right by ``1/2 + eps``, stretched horizontally by ``2*rho``.

    Rows are numbered from 1 at the bottom. ``s`` is centred under the first
    two vertices of the bottom row and ``t`` sits one row over the top, one
    x-step right of ``s``, so segment ``st`` is near-vertical for every row count.
    """
    if n < 6 or n % 3:
        raise InputError("n must be a multiple of 3 and at least 6")
    if rho < 1:
        raise InputError("rho must be positive")
    eps = Fraction(eps_num, eps_den)
    if not 0 < eps < Fraction(1, 2):
        raise InputError("eps must lie strictly between 0 and 1/2")
    k = n // 3
    # one grid unit vertically; x is measured in units of 1/(2*den)
    den = 2 * eps.denominator
    unit = 64 * den
    shift = (Fraction(1, 2) + eps) * den

    def xs(c: int, row: int) -> Fraction:
        return Fraction(c * den) + (shift if row % 2 == 1 else 0)

    pts: list[Point] = []
    idx: dict[tuple[int, int], int] = {}
    for row in range(1, k + 1):
        # bottom row: middle vertex dips under its neighbours; top row: rises above
        if row == 1:
            dy = (2, 0, 1)
        elif row == k:
            dy = (0, 2, 1)
        else:
            dy = (0, 1, 3)
        for c in range(3):
            x = xs(c, row) * 2 * rho * unit / den
            assert x.denominator == 1
            idx[c, row] = len(pts)
            pts.append(Point(int(x) + row * row, (row - 1) * unit + dy[c]))
    sx = (xs(0, 1) + xs(1, 1)) / 2 * 2 * rho * unit / den
    assert sx.denominator == 1
    s_id, t_id = len(pts), len(pts) + 1
    pts.append(Point(int(sx), -unit + 3))
    pts.append(Point(int(sx) + 1, k * unit + 3))

    cons: list[tuple[int, int]] = []
    for row in range(1, k + 1):
        cons += [(idx[0, row], idx[1, row]), (idx[1, row], idx[2, row])]
        if row % 2 == 1:
            for c in (0, 1):
                for r2 in (row - 1, row + 1):
                    if 1 <= r2 <= k:
                        cons.append((idx[c, row], idx[c + 1, r2]))
    inst = Instance(tuple(pts), tuple(cons))
    bad = validate(inst, limit=None)
    if bad:
        raise ConstructionError(f"zigzag n={n}: {bad[0]}")
    params = {"rho": rho, "eps": [eps.numerator, eps.denominator], "rows": k}
    return Construction("zigzag", inst, s_id, t_id, params, unit)


def zigzag_bounds(n: int, rho: int, eps: Fraction) -> dict[str, float]:
    """The two path-length bounds for the zig-zag family, plus the eps-dependent
    part of the free path (its first and last hop each grow by ``2*rho*eps``)."""
    free = 4 * rho + n / 3 + 4
    return {
        "free_upper": free,
        "free_eps_correction": float(4 * rho * eps),
        "restricted_lower": rho * n / 3,
        "ratio_target": (rho * n / 3) / free,
    }


# --------------------------------------------------------------------------
# trimming


def trim(c: Construction, g: VisibilityGraph, pi: Sequence[int]) -> tuple[Construction, list[int]]:
    """Keep the vertices of ``pi``, their neighbours, ``t`` and its neighbours, and
    every constraint between kept vertices. Returns the trimmed construction and
    the list mapping new ids to old ids."""
    marked = set(pi)
    for v in pi:
        marked.update(g.neighbors(v))
    marked.add(c.t)
    marked.update(g.neighbors(c.t))
    marked.add(c.s)
    keep = sorted(marked)
    index = {v: i for i, v in enumerate(keep)}
    inst = c.instance
    cons = tuple((index[a], index[b]) for a, b in inst.constraints if a in index and b in index)
    sub = Instance(tuple(inst.points[v] for v in keep), cons)
    out = Construction(c.kind + "-trimmed", sub, index[c.s], index[c.t], dict(c.params), c.scale)
    return out, keep


# --------------------------------------------------------------------------
# reports


@dataclass
class RatioReport:
    construction: str
    n: int
    params: dict
    scale: int
    mode: str
    outcome: str
    routed_hops: int
    routed_length: float
    shortest_hops: int
    shortest_length: float
    induced_hops: int | None
    induced_length: float | None
    hop_ratio: float
    length_ratio: float
    induced_length_ratio: float | None

    def to_json(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def ratio_report(c: Construction, mode: str = "vis", f: Frame = CANONICAL,
                 g: VisibilityGraph | None = None, step_cap: int | None = None) -> RatioReport:
    """Route ``s -> t`` and compare against exact shortest paths (lengths in grid units)."""
    from .router import Mode, Router
    from .theta6 import build_theta6

    inst = c.instance
    vis = g if g is not None else build_visibility_graph(inst)
    mode = Mode(mode)
    graph = build_theta6(inst, vis, f) if mode is Mode.THETA6 else vis
    trace = Router(inst, graph, mode, f).route(c.s, c.t, step_cap)
    path = trace.vertices
    routed = _path_length(inst.points, path)
    hops = shortest_path(vis, c.s, c.t, Metric.HOPS)
    eu = shortest_path(vis, c.s, c.t, Metric.EUCLIDEAN)
    keep = crossing_vertices(vis, c.s, c.t)
    try:
        ind = shortest_path(vis, c.s, c.t, Metric.EUCLIDEAN, keep)
        ind_hops: int | None = shortest_path(vis, c.s, c.t, Metric.HOPS, keep).hops
        ind_len: float | None = float(ind.length) / c.scale
    except NoPath:
        ind_hops = ind_len = None
    sc = c.scale
    return RatioReport(
        construction=c.kind, n=inst.n, params=dict(c.params), scale=sc, mode=mode.value,
        outcome=trace.outcome.value, routed_hops=trace.step_count, routed_length=float(routed) / sc,
        shortest_hops=hops.hops, shortest_length=float(eu.length) / sc,
        induced_hops=ind_hops, induced_length=ind_len,
        hop_ratio=trace.step_count / hops.hops,
        length_ratio=float(routed) / float(eu.length),
        induced_length_ratio=None if ind_len is None else ind_len * sc / float(eu.length),
    )



# --------------------------------------------------------------------------
# family evaluations


def _below(length: Length, bound: Fraction) -> bool:
    """Exact test ``length < bound`` for a rational ``bound``."""
    d = bound.denominator
    return compare_sqrt_sums([k * d * d for k in length.terms], [bound.numerator ** 2]) < 0


@dataclass
class ZigzagCheck:
    n: int
    rho: int
    eps: list[int]
    free: float
    free_bound: float
    restricted: float
    restricted_bound: float
    ratio: float
    ratio_target: float
    free_ok: bool
    free_ok_without_eps: bool
    restricted_ok: bool
    ratio_ok: bool

    @property
    def ok(self) -> bool:
        return self.free_ok and self.restricted_ok and self.ratio_ok

    def to_json(self) -> dict:
        return asdict(self) | {"ok": self.ok}


def zigzag_check(n: int, rho: int, eps_num: int = 1, eps_den: int = 2**20, tol: float = 0.05) -> ZigzagCheck:
    """Exact shortest paths on the zig-zag instance against the two length
    bounds; lengths are reported in grid units."""
    c = gen_zigzag(n, rho, eps_num, eps_den)
    g = build_visibility_graph(c.instance)
    free = shortest_path(g, c.s, c.t, Metric.EUCLIDEAN)
    res = shortest_path(g, c.s, c.t, Metric.EUCLIDEAN, crossing_vertices(g, c.s, c.t))
    eps = Fraction(eps_num, eps_den)
    target = zigzag_bounds(n, rho, eps)["ratio_target"]
    free_bound = 4 * rho + Fraction(n, 3) + 4 + 4 * rho * eps
    res_bound = rho * Fraction(n, 3)
    f, r = float(free.length) / c.scale, float(res.length) / c.scale
    ratio = r / f
    return ZigzagCheck(
        n=n, rho=rho, eps=[eps_num, eps_den], free=f, free_bound=float(free_bound), restricted=r,
        restricted_bound=float(res_bound), ratio=ratio, ratio_target=target,
        free_ok=_below(free.length, free_bound * c.scale),
        free_ok_without_eps=_below(free.length, (4 * rho + Fraction(n, 3) + 4) * c.scale),
        restricted_ok=not _below(res.length, res_bound * c.scale),
        ratio_ok=abs(ratio / target - 1) <= tol,
    )


@dataclass
class GridCheck:
    rows: int
    vertices: int
    shortest_hops: int
    routed_hops: int
    outcome: str
    prefix: list[int]
    trimmed_vertices: int
    trim_factor: float
    replay_ok: bool
    views_ok: bool
    trimmed_hops: int

    @property
    def ok(self) -> bool:
        return self.replay_ok and self.views_ok and self.outcome == "REACHED"

    def to_json(self) -> dict:
        return asdict(self) | {"ok": self.ok}


def grid_check(rows: int, mode: str = "vis", f: Frame = CANONICAL) -> GridCheck:
    """Route on the grid, trim around the first ``rows/2`` steps and replay."""
    from .router import Mode, Router
    from .theta6 import build_theta6

    c = gen_grid(rows)
    g = build_visibility_graph(c.instance)
    mode = Mode(mode)

    def graph(inst: Instance, vis: VisibilityGraph) -> VisibilityGraph:
        return build_theta6(inst, vis, f) if mode is Mode.THETA6 else vis

    full = graph(c.instance, g)
    trace = Router(c.instance, full, mode, f).route(c.s, c.t)
    pi = trace.vertices[:rows // 2 + 1]
    tc, keep = trim(c, g, pi)
    tg = build_visibility_graph(tc.instance)
    tfull = graph(tc.instance, tg)
    index = {v: i for i, v in enumerate(keep)}
    replay = Router(tc.instance, tfull, mode, f).route(tc.s, tc.t, step_cap=len(pi) - 1)
    replay_ok = [keep[v] for v in replay.vertices[:len(pi)]] == pi
    views_ok = all(full.view(v).signature() == tfull.view(index[v]).signature() for v in pi[:-1])
    return GridCheck(
        rows=rows, vertices=c.instance.n, shortest_hops=shortest_path(g, c.s, c.t).hops,
        routed_hops=trace.step_count, outcome=trace.outcome.value, prefix=pi,
        trimmed_vertices=tc.instance.n, trim_factor=tc.instance.n / rows,
        replay_ok=replay_ok, views_ok=views_ok, trimmed_hops=shortest_path(tg, tc.s, tc.t).hops,
    )

__all__ = [
    "Construction", "ConstructionError", "GridCheck", "Length", "Metric", "NoPath", "PathResult", "RatioReport",
    "compare_sqrt_sums", "crossing_vertices", "gen_grid", "gen_zigzag", "induced_crossing_subgraph",
    "ratio_report", "shortest_path", "trim", "zigzag_bounds", "ZigzagCheck", "grid_check", "zigzag_check",
]
