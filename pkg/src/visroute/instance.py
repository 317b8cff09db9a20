"""Point sets with non-crossing segment constraints: model, text format, checks, generator."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .geom import CANONICAL, Frame, Point, coord_max, orientation, properly_intersects, squared_distance


class ParseError(ValueError):
    """Malformed instance text. ``line`` is 1-based (0 when unknown)."""

    def __init__(self, message: str, line: int = 0):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


class GenerationError(RuntimeError):
    """The random generator could not satisfy its constraints."""


class InputError(ValueError):
    """Bad generator arguments."""


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.message}"


@dataclass(frozen=True)
class Instance:
    """Points (ids are list positions) plus constraints as sorted id pairs."""

    points: tuple[Point, ...]
    constraints: tuple[tuple[int, int], ...] = field(default=())

    def __post_init__(self) -> None:
        pts = tuple(Point(int(p[0]), int(p[1])) for p in self.points)
        cons = tuple((min(i, j), max(i, j)) for i, j in self.constraints)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "constraints", cons)

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def m(self) -> int:
        return len(self.constraints)

    def segment(self, c: tuple[int, int]) -> tuple[Point, Point]:
        return (self.points[c[0]], self.points[c[1]])

    def segments(self) -> list[tuple[Point, Point]]:
        return [self.segment(c) for c in self.constraints]

    def constraint_set(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.constraints)

    def incident(self) -> list[list[int]]:
        """For every vertex, the ids at the other end of its constraints."""
        out: list[list[int]] = [[] for _ in self.points]
        for i, j in self.constraints:
            out[i].append(j)
            out[j].append(i)
        return out

    def normalized(self) -> "Instance":
        """Same instance with constraints sorted and de-duplicated."""
        return Instance(self.points, tuple(sorted(set(self.constraints))))


# --------------------------------------------------------------------------
# text format


def _strip(raw: str) -> str:
    return raw.strip()


def parse(data: bytes | str, *, limit: int | None = None) -> Instance:
    """Parse the ``n m`` / points / constraints text format.

    ``limit`` bounds absolute coordinates (default: the kernel bound).
    """
    text = data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data
    bound = coord_max() if limit is None else limit
    lines: list[tuple[int, list[str]]] = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        s = _strip(raw)
        if not s or s.startswith("#"):
            continue
        lines.append((lineno, s.split()))
    if not lines:
        raise ParseError("empty input", 1)

    def ints(lineno: int, toks: list[str], what: str) -> tuple[int, int]:
        if len(toks) != 2:
            raise ParseError(f"expected two integers for {what}, got {len(toks)} fields", lineno)
        try:
            return int(toks[0], 10), int(toks[1], 10)
        except ValueError:
            raise ParseError(f"non-integer field in {what}", lineno) from None

    lineno, toks = lines[0]
    n, m = ints(lineno, toks, "header")
    if n < 0 or m < 0:
        raise ParseError("negative count in header", lineno)
    if len(lines) != 1 + n + m:
        last = lines[-1][0]
        raise ParseError(f"expected {n} point lines and {m} constraint lines, found {len(lines) - 1} data lines",
                         last)
    points = []
    for lineno, toks in lines[1:1 + n]:
        x, y = ints(lineno, toks, "point")
        if abs(x) > bound or abs(y) > bound:
            raise ParseError(f"coordinate out of range (|x|,|y| <= {bound})", lineno)
        points.append(Point(x, y))
    cons = []
    for lineno, toks in lines[1 + n:]:
        i, j = ints(lineno, toks, "constraint")
        if not (0 <= i < n and 0 <= j < n):
            raise ParseError(f"constraint index out of range 0..{n - 1}", lineno)
        if i == j:
            raise ParseError("constraint joins a point to itself", lineno)
        cons.append((i, j))
    return Instance(tuple(points), tuple(cons))


def serialize(inst: Instance) -> bytes:
    out = [f"{inst.n} {inst.m}"]
    out.extend(f"{p.x} {p.y}" for p in inst.points)
    out.extend(f"{i} {j}" for i, j in inst.constraints)
    return ("\n".join(out) + "\n").encode("ascii")


def load(path: str) -> Instance:
    with open(path, "rb") as fh:
        return parse(fh.read())


def save(inst: Instance, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize(inst))


# --------------------------------------------------------------------------
# validation


def _direction_key(dx: int, dy: int) -> tuple[int, int]:
    g = math.gcd(dx, dy)
    dx, dy = dx // g, dy // g
    if dx < 0 or (dx == 0 and dy < 0):
        dx, dy = -dx, -dy
    return dx, dy


def find_collinear_triple(points: Sequence[Point]) -> tuple[int, int, int] | None:
    """Some collinear triple of distinct points, or ``None``; O(n^2) expected."""
    n = len(points)
    for i in range(n):
        px, py = points[i]
        seen: dict[tuple[int, int], int] = {}
        for j in range(i + 1, n):
            qx, qy = points[j]
            if qx == px and qy == py:
                continue
            key = _direction_key(qx - px, qy - py)
            k = seen.get(key)
            if k is not None:
                return (i, k, j)
            seen[key] = j
    return None


def validate(inst: Instance, f: Frame = CANONICAL, *, limit: int | None = None) -> list[Violation]:
    """All structural and general-position problems with ``inst`` under frame ``f``.

    Integer points can never sit on a slanted cone boundary (slope involves
    sqrt(3)), so for an integral frame the alignment condition reduces to
    distinct projections on the frame direction.
    """
    out: list[Violation] = []
    n = inst.n
    pts = inst.points
    if limit is not None:
        for k, p in enumerate(pts):
            if abs(p.x) > limit or abs(p.y) > limit:
                out.append(Violation("range", f"point {k} {tuple(p)} exceeds coordinate bound {limit}"))

    seen_pts: dict[Point, int] = {}
    for k, p in enumerate(pts):
        if p in seen_pts:
            out.append(Violation("duplicate-point", f"points {seen_pts[p]} and {k} coincide at {tuple(p)}"))
        else:
            seen_pts[p] = k

    seen_cons: set[tuple[int, int]] = set()
    good: list[tuple[int, int]] = []
    for i, j in inst.constraints:
        if not (0 <= i < n and 0 <= j < n):
            out.append(Violation("bad-index", f"constraint ({i},{j}) has an id outside 0..{n - 1}"))
            continue
        if i == j:
            out.append(Violation("bad-index", f"constraint ({i},{j}) is a loop"))
            continue
        if (i, j) in seen_cons:
            out.append(Violation("duplicate-constraint", f"constraint ({i},{j}) appears twice"))
            continue
        seen_cons.add((i, j))
        good.append((i, j))

    by_level: dict[int, int] = {}
    for k, p in enumerate(pts):
        level = p.x * f.dx + p.y * f.dy
        if level in by_level and pts[by_level[level]] != p:
            angle = math.degrees(math.atan2(f.dy, f.dx)) - 90.0
            out.append(Violation(
                "aligned",
                f"points {by_level[level]} and {k} aligned along direction {angle % 180:g}° "
                f"(perpendicular to C₀ bisector)"))
        else:
            by_level.setdefault(level, k)

    triple = find_collinear_triple(pts)
    if triple is not None:
        out.append(Violation("collinear", "three collinear points: %d, %d, %d" % triple))

    for i, j in good:
        k = _equidistant_point(pts, i, j)
        if k is not None:
            out.append(Violation("equidistant", f"point {k} is equidistant from the endpoints of constraint ({i},{j})"))

    segs = [(pts[i], pts[j]) for i, j in good]
    for a in range(len(segs)):
        for b in range(a + 1, len(segs)):
            if properly_intersects(segs[a], segs[b]):
                out.append(Violation("crossing", f"constraints cross: {good[a]} and {good[b]}"))
    return out


def _equidistant_point(pts: Sequence[Point], i: int, j: int) -> int | None:
    """A point on the perpendicular bisector of ``pts[i] pts[j]``, if any."""
    a, b = pts[i], pts[j]
    for k, p in enumerate(pts):
        if k != i and k != j and squared_distance(p, a) == squared_distance(p, b):
            return k
    return None


def is_valid(inst: Instance, f: Frame = CANONICAL) -> bool:
    return not validate(inst, f)


# --------------------------------------------------------------------------
# random generation


def _triangulation_edges(points: Sequence[Point]) -> list[tuple[int, int]]:
    import numpy as np
    from scipy.spatial import Delaunay

    n = len(points)
    if n < 3:
        return [(0, 1)] if n == 2 else []
    tri = Delaunay(np.asarray(points, dtype=float))
    edges: set[tuple[int, int]] = set()
    for a, b, c in tri.simplices.tolist():
        for i, j in ((a, b), (b, c), (a, c)):
            edges.add((min(i, j), max(i, j)))
    return sorted(edges)


def _non_crossing_subset(points: Sequence[Point], edges: Iterable[tuple[int, int]]) -> list[tuple[int, int]]:
    """Greedy filter that drops any edge crossing an accepted one (exact)."""
    kept: list[tuple[int, int]] = []
    for i, j in edges:
        s = (points[i], points[j])
        if all(not properly_intersects(s, (points[a], points[b])) for a, b in kept):
            kept.append((i, j))
    return kept


def gen_random(n: int, seed: int, density: float = 0.3, *, box: int | None = None,
               max_tries: int = 200_000) -> Instance:
    """Random instance in general position for the canonical frame.

    Points are drawn one at a time and redrawn until they keep general
    position. Constraints are a random subset of a triangulation's edges,
    sized ``round(density * (3n - 6))``.
    """
    if n < 2:
        raise InputError("n must be at least 2")
    if not 0.0 <= density <= 1.0:
        raise InputError("density must lie in [0, 1]")
    rng = random.Random(seed)
    side = box if box is not None else max(64, 20 * n)
    if side < 2:
        raise GenerationError("box too small")

    points: list[Point] = []
    levels: set[int] = set()
    dirs: list[set[tuple[int, int]]] = []
    tries = 0
    while len(points) < n:
        tries += 1
        if tries > max_tries:
            raise GenerationError(f"could not place {n} points in general position in a {side}x{side} box")
        p = Point(rng.randrange(side), rng.randrange(side))
        if p.y in levels or p in points:
            continue
        keys = [_direction_key(p.x - q.x, p.y - q.y) for q in points]
        if any(k in d for k, d in zip(keys, dirs)):
            continue
        if len(set(keys)) != len(keys):
            continue
        for k, d in zip(keys, dirs):
            d.add(k)
        dirs.append(set(keys))
        levels.add(p.y)
        points.append(p)

    budget = max(0, round(density * (3 * n - 6))) if n >= 3 else (1 if density > 0 and n == 2 else 0)
    cons: list[tuple[int, int]] = []
    if budget:
        edges = [e for e in _triangulation_edges(points) if _equidistant_point(points, *e) is None]
        rng.shuffle(edges)
        cons = _non_crossing_subset(points, edges)[:budget]
        cons.sort()
    return Instance(tuple(points), tuple(cons))


def gen_fully_blocked(n: int, seed: int, density: float = 0.3) -> tuple[Instance, int, int]:
    """Random instance where the cone of ``s`` holding ``t`` is fully blocked.

    A single constraint with both endpoints outside the canonical cone ``C0``
    of ``s`` spans that cone, ``t`` sits behind it and no other point lies in
    front of it inside the cone. Returns ``(instance, s, t)``.
    """
    if n < 4:
        raise InputError("n must be at least 4")
    rng = random.Random(seed)
    side = max(256, 40 * n)
    for _ in range(1000):
        s = Point(0, 0)
        ya, yb = rng.randrange(side // 8, side // 3), rng.randrange(side // 8, side // 3)
        a = Point(-rng.randrange(ya, 2 * ya), ya)
        b = Point(rng.randrange(yb, 2 * yb), yb)
        t = Point(rng.randrange(-side // 8, side // 8), rng.randrange(side // 2, side))
        if not (3 * t.x * t.x < t.y * t.y and orientation(a, b, t) != orientation(a, b, s)):
            continue
        points = [s, t, a, b]
        while len(points) < n:
            p = Point(rng.randrange(-side, side), rng.randrange(-side // 2, side))
            in_cone = 3 * p.x * p.x < p.y * p.y and p.y > 0
            if in_cone and orientation(a, b, p) != orientation(a, b, t):
                continue
            points.append(p)
        cons: list[tuple[int, int]] = [(2, 3)]
        budget = round(density * (3 * n - 6))
        if budget > 1:
            edges = [e for e in _triangulation_edges(points) if e != (2, 3) and _equidistant_point(points, *e) is None]
            rng.shuffle(edges)
            cons = _non_crossing_subset(points, cons + edges)[:budget]
        inst = Instance(tuple(points), tuple(sorted(cons)))
        if not validate(inst):
            return inst, 0, 1
    raise GenerationError(f"no fully blocked instance for n={n}, seed={seed}")
