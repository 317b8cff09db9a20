"""Convex chains of visibility edges: a global oracle and the 1-local step rule."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cmp_to_key
from typing import Callable, Sequence

from .geom import CCW, CW, Point, orientation, properly_intersects
from .visibility import LocalView, VisibilityGraph


class OracleError(RuntimeError):
    """Preconditions of the chain oracle do not hold, or its output failed a check."""


class ChainStuck(RuntimeError):
    """No neighbor lies on the turn side of the chain."""


@dataclass(frozen=True)
class ChainState:
    pred: int
    turn: int  # CW or CCW


def angular_cmp(origin: Sequence[int], ref: tuple[int, int], rot: int) -> Callable[[Sequence[int], Sequence[int]], int]:
    """Comparator on points by the angle swept from ``ref`` around ``origin`` in direction ``rot``.

    Angles lie in [0, 360); the reference direction itself has angle 0.
    """
    ox, oy = origin
    rx, ry = ref

    def half(p: Sequence[int]) -> int:
        dx, dy = p[0] - ox, p[1] - oy
        c = (rx * dy - ry * dx) * rot
        if c > 0:
            return 0
        if c < 0:
            return 1
        return 0 if rx * dx + ry * dy > 0 else 1

    def cmp(a: Sequence[int], b: Sequence[int]) -> int:
        ha, hb = half(a), half(b)
        if ha != hb:
            return ha - hb
        o = orientation(origin, a, b) * rot
        return -1 if o > 0 else (1 if o < 0 else 0)

    return cmp


def first_by_rotation(origin: Sequence[int], ref: tuple[int, int], rot: int,
                      candidates: Sequence[tuple[Sequence[int], int]]) -> int | None:
    """Id of the candidate met first when rotating ``ref`` about ``origin`` in direction ``rot``."""
    if not candidates:
        return None
    cmp = angular_cmp(origin, ref, rot)
    return min(candidates, key=cmp_to_key(lambda a, b: cmp(a[0], b[0])))[1]


def chain_step(view: LocalView, st: ChainState) -> int:
    """Next chain vertex: the neighbor on the turn side of the extended line
    ``pred -> current`` that makes the smallest angle with that line."""
    cur = view.current.pt
    pred = view.neighbor(st.pred)
    if pred is None:
        raise ChainStuck(f"predecessor {st.pred} is not a neighbor of {view.current.id}")
    p = pred.pt
    best: tuple[Point, int] | None = None
    for nb in view.neighbors:
        if nb.id == st.pred or orientation(p, cur, nb.pt) != st.turn:
            continue
        if best is None or orientation(cur, best[0], nb.pt) != st.turn:
            best = (nb.pt, nb.id)
    if best is None:
        raise ChainStuck(f"no neighbor of {view.current.id} on the turn side")
    return best[1]


def chain_start(view: LocalView, toward: Sequence[int], turn: int, exclude: int | None = None) -> int:
    """First chain vertex: the neighbor met first when rotating the ray ``current -> toward`` by ``turn``."""
    cur = view.current.pt
    ref = (toward[0] - cur[0], toward[1] - cur[1])
    cands = [(nb.pt, nb.id) for nb in view.neighbors if nb.id != exclude]
    nid = first_by_rotation(cur, ref, turn, cands)
    if nid is None:
        raise ChainStuck(f"vertex {view.current.id} has no neighbors")
    return nid


# --------------------------------------------------------------------------
# global oracle


def strictly_inside_triangle(a: Sequence[int], b: Sequence[int], c: Sequence[int], x: Sequence[int]) -> bool:
    o = orientation(a, b, c)
    return (orientation(a, b, x) == o and orientation(b, c, x) == o and orientation(c, a, x) == o)


def _on_segment(a: Sequence[int], b: Sequence[int], x: Sequence[int]) -> bool:
    if orientation(a, b, x) != 0:
        return False
    return min(a[0], b[0]) <= x[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= x[1] <= max(a[1], b[1])


def strictly_inside_polygon(poly: Sequence[Sequence[int]], x: Sequence[int]) -> bool:
    """Exact crossing-number test; boundary points count as outside."""
    k = len(poly)
    inside = False
    for i in range(k):
        a, b = poly[i], poly[(i + 1) % k]
        if _on_segment(a, b, x):
            return False
        if (a[1] > x[1]) != (b[1] > x[1]):
            # does the edge cross the horizontal ray to +x?
            o = orientation(a, b, x)
            if (o > 0) == (b[1] > a[1]):
                inside = not inside
    return inside


def chain_turn(u: Sequence[int], v: Sequence[int], w: Sequence[int]) -> int:
    """Turn direction of a chain from ``u`` to ``v`` that bulges toward ``w``."""
    return -orientation(u, v, w)


def convex_chain_oracle(g: VisibilityGraph, u: int, v: int, w: int) -> list[int]:
    """Convex chain of visibility edges from ``u`` to ``v`` inside triangle ``uvw``,
    built with global knowledge and verified before it is returned."""
    inst = g.instance
    pts = inst.points
    if len({u, v, w}) != 3:
        raise OracleError("u, v, w must be distinct")
    U, V, W = pts[u], pts[v], pts[w]
    side = orientation(U, V, W)
    if side == 0:
        raise OracleError("u, v, w are collinear")
    if not g.has_edge(u, w) or not g.has_edge(v, w):
        raise OracleError("uw and vw must be visibility edges")
    for z in g.incident_constraints(w):
        Z = pts[z]
        if z in (u, v):
            continue
        if orientation(W, U, Z) == orientation(W, U, V) and orientation(W, V, Z) == orientation(W, V, U):
            raise OracleError("w is an endpoint of a constraint entering triangle uvw")
    if g.has_edge(u, v):
        return [u, v]

    turn = chain_turn(U, V, W)
    inner = [k for k in range(inst.n) if k not in (u, v, w) and strictly_inside_triangle(U, V, W, pts[k])]
    path = [u]
    used = {u}
    cur = u
    while cur != v:
        C = pts[cur]
        cands = [(pts[k], k) for k in inner + [v] if k not in used and g.has_edge(cur, k)]
        nxt = first_by_rotation(C, (W[0] - C[0], W[1] - C[1]), turn, cands)
        if nxt is None:
            raise OracleError(f"chain stalls at {cur}")
        path.append(nxt)
        used.add(nxt)
        cur = nxt
        if len(path) > inst.n:
            raise OracleError("chain does not terminate")
    check_chain(g, path, w)
    return path


def check_chain(g: VisibilityGraph, path: Sequence[int], w: int) -> None:
    """Raise OracleError unless ``path`` is a convex visibility chain with an empty pocket toward ``w``."""
    inst = g.instance
    pts = inst.points
    for a, b in zip(path, path[1:]):
        if not g.has_edge(a, b):
            raise OracleError(f"chain edge {a}-{b} is not a visibility edge")
    turns = {orientation(pts[a], pts[b], pts[c]) for a, b, c in zip(path, path[1:], path[2:])}
    if len(turns) > 1 or 0 in turns:
        raise OracleError("chain is not strictly convex")
    if turns and turns != {chain_turn(pts[path[0]], pts[path[-1]], pts[w])}:
        raise OracleError("chain bends away from w")
    poly = [pts[k] for k in path] + [pts[w]]
    for k, p in enumerate(pts):
        if strictly_inside_polygon(poly, p):
            raise OracleError(f"point {k} lies inside the chain pocket")
    edges = list(zip(poly, poly[1:] + poly[:1]))
    doubled = [(2 * p[0], 2 * p[1]) for p in poly]
    for i, j in inst.constraints:
        s = (pts[i], pts[j])
        if any(properly_intersects(s, e) for e in edges if {tuple(e[0]), tuple(e[1])} != {s[0], s[1]}):
            raise OracleError(f"constraint ({i},{j}) crosses the chain pocket boundary")
        mid = (pts[i][0] + pts[j][0], pts[i][1] + pts[j][1])
        if strictly_inside_polygon(doubled, mid):
            raise OracleError(f"constraint ({i},{j}) lies inside the chain pocket")


__all__ = [
    "CCW", "CW", "ChainState", "ChainStuck", "OracleError", "angular_cmp", "chain_start", "chain_step",
    "check_chain", "convex_chain_oracle", "first_by_rotation", "strictly_inside_polygon",
    "strictly_inside_triangle",
]
