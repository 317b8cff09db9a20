"""Constrained Theta-6 graph: global construction and the local membership test."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .geom import (CANONICAL, Frame, Point, bisector_projection, cone_of, cross, interior_direction, orientation)
from .instance import Instance
from .visibility import LocalView, VisibilityGraph


class Theta6Graph(VisibilityGraph):
    """Undirected Theta-6 adjacency plus the directed per-subcone choices.

    ``out[u]`` maps ``(cone, subcone)`` to the selected neighbor.
    """

    kind = "theta6"

    def __init__(self, inst: Instance, out: Sequence[dict[tuple[int, int], int]], frame: Frame):
        cons = inst.constraint_set()
        und: list[set[int]] = [set() for _ in range(inst.n)]
        for u, choices in enumerate(out):
            for v in choices.values():
                und[u].add(v)
                und[v].add(u)
        adj = [[(v, (min(u, v), max(u, v)) in cons) for v in s] for u, s in enumerate(und)]
        super().__init__(inst, adj)
        self.out: tuple[dict[tuple[int, int], int], ...] = tuple(dict(o) for o in out)
        self.frame = frame

    def outgoing(self, u: int) -> dict[tuple[int, int], int]:
        return self.out[u]

    def to_json(self) -> dict:
        d = super().to_json()
        d["frame"] = list(self.frame.as_tuple())
        d["out"] = [
            [[c, j, v] for (c, j), v in sorted(o.items())] for o in self.out
        ]
        return d


def build_theta6(inst: Instance, g: VisibilityGraph, f: Frame = CANONICAL) -> Theta6Graph:
    """Per vertex and subcone, the visible vertex with the smallest bisector projection."""
    out = []
    for u in range(inst.n):
        fd = g.view(u).frame_data(f)
        out.append({key: vid for key, (vid, _) in fd.best.items()})
    return Theta6Graph(inst, out, f)


def local_edge_oracle(view: LocalView, v: int, f: Frame = CANONICAL) -> bool:
    """Decide whether ``uv`` is a Theta-6 edge using only the visibility view of ``u``."""
    fd = view.frame_data(f)
    if v not in fd.cone:
        raise ValueError(f"vertex {v} is not visible from {view.current.id}")
    c = fd.cone[v]
    for j in fd.subcones[v]:
        if fd.min_in(c, j) == v:
            return True

    u = view.current.pt
    vpt = view.neighbor(v).pt
    i = cone_of(vpt, u, f)
    top = bisector_projection(vpt, u, i, f)

    clips: list[tuple[Point, int]] = []
    split = False
    for s in view.incident:
        if s.id == v:
            split = True
            continue
        z = s.pt
        if cone_of(vpt, z, f) != i and bisector_projection(vpt, z, i, f) < top:
            clips.append((z, orientation(u, z, vpt)))

    sides = {1: False, -1: False}
    for nb in view.neighbors:
        if nb.id == v:
            continue
        x = nb.pt
        if cone_of(vpt, x, f) != i or not bisector_projection(vpt, x, i, f) < top:
            continue
        if any(orientation(u, z, x) != side for z, side in clips):
            continue
        if not split:
            return False
        sides[orientation(u, vpt, x)] = True
    if split:
        # u sits on both subcones of v; an edge exists if either side is empty
        return not (sides[1] and sides[-1])
    return True


def _ray_hit(origin: Point, d: tuple[int, int], a: Point, b: Point) -> Fraction | None:
    """Ray parameter where ``origin + s*d`` meets segment ``ab`` (None if it misses)."""
    ex, ey = b[0] - a[0], b[1] - a[1]
    den = cross(d[0], d[1], ex, ey)
    if den == 0:
        return None
    wx, wy = a[0] - origin[0], a[1] - origin[1]
    s = Fraction(cross(wx, wy, ex, ey), den)
    mu = Fraction(cross(wx, wy, d[0], d[1]), den)
    if s <= 0 or mu < 0 or mu > 1:
        return None
    return s


def fully_blocked_cones(inst: Instance, g: VisibilityGraph, u: int,
                        f: Frame = CANONICAL) -> dict[int, tuple[int, int] | None]:
    """Cones of ``u`` that hold points but no visible vertex, mapped to the blocking constraint."""
    pts = inst.points
    occupied = [False] * 6
    for k, p in enumerate(pts):
        if k != u:
            occupied[cone_of(pts[u], p, f)] = True
    seen = [False] * 6
    for v in g.neighbors(u):
        seen[cone_of(pts[u], pts[v], f)] = True
    out: dict[int, tuple[int, int] | None] = {}
    for c in range(6):
        if not occupied[c] or seen[c]:
            continue
        d = interior_direction(c, f)
        best: tuple[Fraction, tuple[int, int]] | None = None
        for con in inst.constraints:
            if u in con:
                continue
            s = _ray_hit(pts[u], d, pts[con[0]], pts[con[1]])
            if s is not None and (best is None or s < best[0]):
                best = (s, con)
        out[c] = None if best is None else best[1]
    return out


def count_fully_blocked_cones(inst: Instance, g: VisibilityGraph, u: int, f: Frame = CANONICAL) -> int:
    """Number of cones of ``u`` that contain points of P but no visible vertex."""
    return len(fully_blocked_cones(inst, g, u, f))


def distinct_blockers(inst: Instance, g: VisibilityGraph, u: int, f: Frame = CANONICAL) -> set[tuple[int, int]]:
    return {c for c in fully_blocked_cones(inst, g, u, f).values() if c is not None}
