"""Visibility graphs among point-anchored segment constraints and 1-local views."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cmp_to_key
from typing import Iterator, NamedTuple, Sequence

from .geom import (CANONICAL, Frame, GeneralPositionViolation, Point, bisector_projection, cone_index_local,
                   orientation, projection_local, properly_intersects)
from .instance import Instance


class Neighbor(NamedTuple):
    pt: Point
    id: int
    is_constraint: bool


class Site(NamedTuple):
    id: int
    pt: Point


class VisibilityGraph:
    """Adjacency of Vis(P, S); ``adj[u]`` is a sorted tuple of ``(v, is_constraint)``."""

    kind = "vis"

    def __init__(self, inst: Instance, adj: Sequence[Sequence[tuple[int, bool]]]):
        self.instance = inst
        self.adj: tuple[tuple[tuple[int, bool], ...], ...] = tuple(tuple(sorted(a)) for a in adj)
        self._nbr_sets = [frozenset(v for v, _ in a) for a in self.adj]
        self._incident = inst.incident()
        self._views: dict[int, LocalView] = {}

    @property
    def n(self) -> int:
        return self.instance.n

    def neighbors(self, u: int) -> frozenset[int]:
        return self._nbr_sets[u]

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._nbr_sets[u]

    def edges(self) -> Iterator[tuple[int, int, bool]]:
        for u, a in enumerate(self.adj):
            for v, c in a:
                if u < v:
                    yield (u, v, c)

    def edge_set(self) -> frozenset[tuple[int, int]]:
        return frozenset((u, v) for u, v, _ in self.edges())

    def edge_count(self) -> int:
        return sum(len(a) for a in self.adj) // 2

    def incident_constraints(self, u: int) -> list[int]:
        return self._incident[u]

    def view(self, u: int) -> "LocalView":
        v = self._views.get(u)
        if v is None:
            v = local_view(self, u)
            self._views[u] = v
        return v

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "n": self.n,
            "edges": [[u, v, bool(c)] for u, v, c in self.edges()],
        }


# --------------------------------------------------------------------------
# local views


class LocalView:
    """Everything a routing step may look at: the current vertex, its neighbors
    and the constraints incident to it.

    Frame-dependent classification of the neighbors is computed lazily and
    cached per frame.
    """

    __slots__ = ("current", "neighbors", "incident", "_frames", "_nbr_ids")

    def __init__(self, current: Site, neighbors: Sequence[Neighbor], incident: Sequence[Site]):
        self.current = current
        self.neighbors: tuple[Neighbor, ...] = tuple(neighbors)
        self.incident: tuple[Site, ...] = tuple(incident)
        self._frames: dict[tuple[int, int], FrameData] = {}
        self._nbr_ids = {nb.id: nb for nb in self.neighbors}

    @property
    def incident_constraints(self) -> list[tuple[Point, Point]]:
        return [(self.current.pt, s.pt) for s in self.incident]

    def neighbor(self, vid: int) -> Neighbor | None:
        return self._nbr_ids.get(vid)

    def is_neighbor(self, vid: int) -> bool:
        return vid in self._nbr_ids

    def frame_data(self, f: Frame) -> "FrameData":
        key = f.as_tuple()
        fd = self._frames.get(key)
        if fd is None:
            fd = FrameData(self, f)
            self._frames[key] = fd
        return fd

    def signature(self) -> tuple:
        """Id-free description, equal for views that carry the same geometry."""
        return (
            tuple(self.current.pt),
            tuple(sorted((tuple(nb.pt), nb.is_constraint) for nb in self.neighbors)),
            tuple(sorted(tuple(s.pt) for s in self.incident)),
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LocalView):
            return NotImplemented
        return (self.current == other.current and sorted(self.neighbors) == sorted(other.neighbors)
                and sorted(self.incident) == sorted(other.incident))

    def __hash__(self) -> int:
        return hash(self.signature())

    def __repr__(self) -> str:
        return f"LocalView(current={self.current.id}, deg={len(self.neighbors)}, incident={len(self.incident)})"


class FrameData:
    """Per-frame classification of a view's neighbors and splitting constraints."""

    __slots__ = ("frame", "local", "cone", "subcones", "proj", "splitters", "best")

    def __init__(self, view: LocalView, f: Frame):
        self.frame = f
        ux, uy = view.current.pt
        # splitting constraints per cone, as local coordinates of the far endpoint
        self.splitters: list[list[tuple[int, int, int]]] = [[] for _ in range(6)]
        for s in view.incident:
            lx, ly = f.local(s.pt[0] - ux, s.pt[1] - uy)
            self.splitters[cone_index_local(lx, ly)].append((lx, ly, s.id))
        self.local: dict[int, tuple[int, int]] = {}
        self.cone: dict[int, int] = {}
        self.subcones: dict[int, tuple[int, ...]] = {}
        self.proj: dict[int, tuple[int, int]] = {}
        # (cone, subcone) -> (neighbor id, projection)
        self.best: dict[tuple[int, int], tuple[int, tuple[int, int]]] = {}
        from .geom import rt3_sign
        for nb in view.neighbors:
            lx, ly = f.local(nb.pt[0] - ux, nb.pt[1] - uy)
            c = cone_index_local(lx, ly)
            subs = self.subcones_local(c, lx, ly, nb.id)
            pr = projection_local(c, lx, ly)
            self.local[nb.id] = (lx, ly)
            self.cone[nb.id] = c
            self.subcones[nb.id] = subs
            self.proj[nb.id] = pr
            for j in subs:
                cur = self.best.get((c, j))
                if cur is None:
                    self.best[(c, j)] = (nb.id, pr)
                else:
                    s = rt3_sign(pr[0] - cur[1][0], pr[1] - cur[1][1])
                    if s == 0:
                        raise GeneralPositionViolation("equal bisector projections around a vertex")
                    if s < 0:
                        self.best[(c, j)] = (nb.id, pr)

    def subcones_local(self, c: int, lx: int, ly: int, vid: int | None = None) -> tuple[int, ...]:
        k = 0
        on = False
        for sx, sy, sid in self.splitters[c]:
            if (sx, sy) == (lx, ly):
                on = True
                continue
            o = sx * ly - sy * lx  # orientation(apex, far, q) in local coordinates
            if o == 0:
                raise GeneralPositionViolation("point collinear with a splitting constraint")
            if o < 0:
                k += 1
        return (k, k + 1) if on else (k,)

    def subcone_count(self, c: int) -> int:
        return len(self.splitters[c]) + 1

    def min_in(self, c: int, j: int) -> int | None:
        b = self.best.get((c, j))
        return None if b is None else b[0]


def local_view(g: "VisibilityGraph", u: int) -> LocalView:
    """The 1-local view of ``u`` in ``g`` (a visibility or Theta-6 graph)."""
    inst = g.instance
    pts = inst.points
    nbrs = [Neighbor(pts[v], v, c) for v, c in g.adj[u]]
    inc = [Site(v, pts[v]) for v in g.incident_constraints(u)]
    return LocalView(Site(u, pts[u]), nbrs, inc)


# --------------------------------------------------------------------------
# builders


def is_visible(inst: Instance, u: int, v: int) -> bool:
    """Direct pair test: ``uv`` is a constraint or crosses none."""
    if u == v:
        raise ValueError("is_visible needs two distinct vertices")
    a, b = min(u, v), max(u, v)
    if (a, b) in inst.constraint_set():
        return True
    s = (inst.points[u], inst.points[v])
    for c in inst.constraints:
        if properly_intersects(s, inst.segment(c)):
            return False
    return True


def _adj_from_pairs(inst: Instance, pairs: Sequence[tuple[int, int]]) -> list[list[tuple[int, bool]]]:
    cons = inst.constraint_set()
    adj: list[list[tuple[int, bool]]] = [[] for _ in range(inst.n)]
    for u, v in pairs:
        c = (min(u, v), max(u, v)) in cons
        adj[u].append((v, c))
        adj[v].append((u, c))
    return adj


def build_visibility_graph_naive(inst: Instance) -> VisibilityGraph:
    """Reference builder: every pair against every constraint."""
    n = inst.n
    pts = inst.points
    if inst.m == 0:
        pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
        return VisibilityGraph(inst, _adj_from_pairs(inst, pairs))
    bound = max(max(abs(p.x), abs(p.y)) for p in pts)
    if bound < 2**29:
        pairs = _naive_pairs_numpy(inst)
    else:
        pairs = [(u, v) for u in range(n) for v in range(u + 1, n) if is_visible(inst, u, v)]
    return VisibilityGraph(inst, _adj_from_pairs(inst, pairs))


def _naive_pairs_numpy(inst: Instance) -> list[tuple[int, int]]:
    import numpy as np

    n = inst.n
    P = np.asarray(inst.points, dtype=np.int64)
    C = np.asarray(inst.constraints, dtype=np.int64)
    A, B = P[C[:, 0]], P[C[:, 1]]
    iu, ju = np.triu_indices(n, k=1)
    cons = inst.constraint_set()
    out = []
    chunk = max(1, 200_000 // max(1, len(C)))
    for s in range(0, len(iu), chunk):
        I, J = iu[s:s + chunk], ju[s:s + chunk]
        p, q = P[I][:, None, :], P[J][:, None, :]
        a, b = A[None, :, :], B[None, :, :]

        def orient(o, x, y):
            return np.sign((x[..., 0] - o[..., 0]) * (y[..., 1] - o[..., 1])
                           - (x[..., 1] - o[..., 1]) * (y[..., 0] - o[..., 0]))

        o1, o2 = orient(p, q, a), orient(p, q, b)
        o3, o4 = orient(a, b, p), orient(a, b, q)
        crossing = (o1 * o2 < 0) & (o3 * o4 < 0)
        # collinear overlaps are impossible under general position; fall back if present
        degenerate = (o1 == 0) & (o2 == 0)
        blocked = crossing.any(axis=1)
        for k in np.nonzero(degenerate.any(axis=1))[0].tolist():
            blocked[k] = not is_visible(inst, int(I[k]), int(J[k]))
        for k in np.nonzero(~blocked)[0].tolist():
            out.append((int(I[k]), int(J[k])))
        for k in np.nonzero(blocked)[0].tolist():
            pair = (int(I[k]), int(J[k]))
            if pair in cons:
                out.append(pair)
    return out


def _half(dx: int, dy: int) -> int:
    return 0 if (dy > 0 or (dy == 0 and dx > 0)) else 1


def _in_front(p: Point, A: tuple[Point, Point], B: tuple[Point, Point]) -> bool:
    """For non-crossing segments both stabbed by one ray from ``p``: is A nearer."""
    a1, a2 = A
    op = orientation(a1, a2, p)
    o1, o2 = orientation(a1, a2, B[0]), orientation(a1, a2, B[1])
    if o1 != op and o2 != op:
        return True  # B lies behind line A (touching allowed)
    if o1 != -op and o2 != -op:
        return False  # B on p's side of line A
    b1, b2 = B
    opb = orientation(b1, b2, p)
    q1, q2 = orientation(b1, b2, a1), orientation(b1, b2, a2)
    return q1 != -opb and q2 != -opb


def _sweep_vertex(inst: Instance, p_id: int, segs: Sequence[tuple[int, int]]) -> list[int]:
    """Ids visible from ``p_id`` by a rotational sweep (ray starts pointing +x)."""
    pts = inst.points
    p = pts[p_id]
    px, py = p

    def cmp(i: int, j: int) -> int:
        ax, ay = pts[i][0] - px, pts[i][1] - py
        bx, by = pts[j][0] - px, pts[j][1] - py
        ha, hb = _half(ax, ay), _half(bx, by)
        if ha != hb:
            return ha - hb
        c = ax * by - ay * bx
        return -1 if c > 0 else (1 if c < 0 else 0)

    order = sorted((i for i in range(inst.n) if i != p_id), key=cmp_to_key(cmp))
    rank = {v: k for k, v in enumerate(order)}

    starts: dict[int, list[int]] = {}
    ends: dict[int, list[int]] = {}
    seg_pts: list[tuple[Point, Point]] = []
    seg_ends: list[tuple[int, int]] = []
    initial: list[int] = []
    for a, b in segs:
        if a == p_id or b == p_id:
            continue
        if orientation(p, pts[a], pts[b]) < 0:
            a, b = b, a  # make the angular interval run counterclockwise a -> b
        k = len(seg_pts)
        seg_pts.append((pts[a], pts[b]))
        seg_ends.append((a, b))
        starts.setdefault(a, []).append(k)
        ends.setdefault(b, []).append(k)
        if rank[a] > rank[b]:
            initial.append(k)

    active: list[int] = []

    def insert(k: int) -> None:
        lo, hi = 0, len(active)
        s = seg_pts[k]
        while lo < hi:
            mid = (lo + hi) // 2
            if _in_front(p, seg_pts[active[mid]], s):
                lo = mid + 1
            else:
                hi = mid
        active.insert(lo, k)

    for k in initial:
        insert(k)

    visible: list[int] = []
    for q in order:
        qpt = pts[q]
        blocked = False
        for k in active:
            a, b = seg_ends[k]
            if a == q or b == q:
                continue
            blocked = properly_intersects((p, qpt), seg_pts[k])
            break
        if not blocked:
            visible.append(q)
        for k in ends.get(q, ()):
            active.remove(k)
        for k in starts.get(q, ()):
            insert(k)
    return visible


def build_visibility_graph(inst: Instance, *, method: str = "auto") -> VisibilityGraph:
    """Exact Vis(P, S).

    ``method`` is ``"sweep"``, ``"naive"`` or ``"auto"``. The vectorised naive
    builder wins at the sizes used here, so ``auto`` picks it whenever the
    coordinates fit its int64 fast path and falls back to the sweep otherwise.
    """
    if method == "auto":
        small = all(abs(p.x) < 2**29 and abs(p.y) < 2**29 for p in inst.points)
        method = "naive" if small else "sweep"
    if method == "naive":
        return build_visibility_graph_naive(inst)
    if method != "sweep":
        raise ValueError(f"unknown method {method!r}")
    cons = inst.constraint_set()
    segs = list(inst.constraints)
    pairs = []
    for u in range(inst.n):
        for v in _sweep_vertex(inst, u, segs):
            if u < v:
                pairs.append((u, v))
    # constraints are visible by definition even if the sweep skipped them
    got = set(pairs)
    for c in cons:
        if c not in got:
            pairs.append(c)
    return VisibilityGraph(inst, _adj_from_pairs(inst, pairs))


def neighbors_in_cone(view: LocalView, cone: int, f: Frame = CANONICAL) -> list[Neighbor]:
    fd = view.frame_data(f)
    return [nb for nb in view.neighbors if fd.cone[nb.id] == cone]


def projection_of(view: LocalView, q: Sequence[int], cone: int, f: Frame = CANONICAL):
    return bisector_projection(view.current.pt, q, cone, f)
