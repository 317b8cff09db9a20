"""Exact integer geometry for six-cone (Theta-6) constructions.

All predicates work on integer coordinates. Quantities that involve the
cone boundaries (slope +-sqrt(3)) are carried as ``a + b*sqrt(3)`` pairs and
decided by :func:`exact_sign`; nothing here touches floating point.

Cones are numbered clockwise, ``C0`` being bisected by the frame direction.
Within a frame we work in rotated coordinates ``(x', y')`` where ``y'`` runs
along the frame direction and ``x'`` along its clockwise perpendicular. Both
are integers (scaled by ``|d|``, which never changes a sign).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import NamedTuple, Sequence

DEFAULT_COORD_MAX = 2**20

CW = -1
COLLINEAR = 0
CCW = 1


class GeometryError(ValueError):
    """Base class for kernel errors."""


class GeneralPositionViolation(GeometryError):
    """A predicate hit a degenerate configuration that general position forbids."""


class InputRangeError(GeometryError):
    """An operand is outside the range the kernel accepts."""


def coord_max() -> int:
    """Kernel coordinate bound; ``VISROUTE_COORD_MAX`` overrides the default."""
    raw = os.environ.get("VISROUTE_COORD_MAX")
    if raw is None or raw.strip() == "":
        return DEFAULT_COORD_MAX
    value = int(raw)
    if value <= 0:
        raise InputRangeError(f"VISROUTE_COORD_MAX must be positive, got {raw!r}")
    return value


class Point(NamedTuple):
    x: int
    y: int

    def __sub__(self, other: "Point") -> tuple[int, int]:  # type: ignore[override]
        return (self.x - other.x, self.y - other.y)


Segment = tuple[Point, Point]


# --------------------------------------------------------------------------
# a + b*sqrt(3)


def rt3_sign(a: int, b: int) -> int:
    """Sign of ``a + b*sqrt(3)`` for integers ``a``, ``b``."""
    if a >= 0 and b >= 0:
        return 1 if (a or b) else 0
    if a <= 0 and b <= 0:
        return -1
    # opposite signs: the term with the larger square wins
    d = a * a - 3 * b * b
    if d == 0:  # only possible for a == b == 0, handled above
        return 0
    if a > 0:
        return 1 if d > 0 else -1
    return -1 if d > 0 else 1


@dataclass(frozen=True, slots=True)
class Rt3Scalar:
    """The real number ``a + b*sqrt(3)`` with integer ``a`` and ``b``."""

    a: int
    b: int = 0

    def __post_init__(self) -> None:
        if type(self.a) is not int or type(self.b) is not int:
            if not (isinstance(self.a, int) and isinstance(self.b, int)):
                raise InputRangeError(f"Rt3Scalar needs integers, got {self.a!r}, {self.b!r}")

    def sign(self) -> int:
        return rt3_sign(self.a, self.b)

    def __add__(self, other: "Rt3Scalar | int") -> "Rt3Scalar":
        o = _rt3(other)
        return Rt3Scalar(self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __sub__(self, other: "Rt3Scalar | int") -> "Rt3Scalar":
        o = _rt3(other)
        return Rt3Scalar(self.a - o.a, self.b - o.b)

    def __rsub__(self, other: "Rt3Scalar | int") -> "Rt3Scalar":
        return _rt3(other) - self

    def __neg__(self) -> "Rt3Scalar":
        return Rt3Scalar(-self.a, -self.b)

    def __mul__(self, other: "Rt3Scalar | int") -> "Rt3Scalar":
        o = _rt3(other)
        return Rt3Scalar(self.a * o.a + 3 * self.b * o.b, self.a * o.b + self.b * o.a)

    __rmul__ = __mul__

    def __lt__(self, other: "Rt3Scalar | int") -> bool:
        return (self - other).sign() < 0

    def __le__(self, other: "Rt3Scalar | int") -> bool:
        return (self - other).sign() <= 0

    def __gt__(self, other: "Rt3Scalar | int") -> bool:
        return (self - other).sign() > 0

    def __ge__(self, other: "Rt3Scalar | int") -> bool:
        return (self - other).sign() >= 0

    def __float__(self) -> float:
        return self.a + self.b * math.sqrt(3.0)


def _rt3(v: "Rt3Scalar | int") -> Rt3Scalar:
    if isinstance(v, Rt3Scalar):
        return v
    if isinstance(v, int):
        return Rt3Scalar(v, 0)
    raise InputRangeError(f"cannot treat {v!r} as a + b*sqrt(3)")


def exact_sign(v: Rt3Scalar) -> int:
    """Exact sign of ``v.a + v.b*sqrt(3)``, one of -1, 0, +1."""
    if not isinstance(v, Rt3Scalar):
        raise InputRangeError(f"exact_sign expects an Rt3Scalar, got {type(v).__name__}")
    return v.sign()


def compare_ratios(n1: Rt3Scalar, d1: Rt3Scalar, n2: Rt3Scalar, d2: Rt3Scalar) -> int:
    """Sign of ``n1/d1 - n2/d2``; denominators must be nonzero."""
    s1, s2 = d1.sign(), d2.sign()
    if s1 == 0 or s2 == 0:
        raise GeometryError("zero denominator")
    return (n1 * d2 - n2 * d1).sign() * s1 * s2


# --------------------------------------------------------------------------
# basic predicates


def cross(ax: int, ay: int, bx: int, by: int) -> int:
    return ax * by - ay * bx


def orient_value(p: Sequence[int], q: Sequence[int], r: Sequence[int]) -> int:
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])


def orientation(p: Sequence[int], q: Sequence[int], r: Sequence[int]) -> int:
    """``CCW`` (+1), ``CW`` (-1) or ``COLLINEAR`` (0) for the turn p -> q -> r."""
    v = (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
    return (v > 0) - (v < 0)


def _between(a: Sequence[int], b: Sequence[int], c: Sequence[int]) -> bool:
    """For collinear a, b, c: is c strictly inside segment ab."""
    if a[0] != b[0]:
        return min(a[0], b[0]) < c[0] < max(a[0], b[0])
    return min(a[1], b[1]) < c[1] < max(a[1], b[1])


def properly_intersects(s1: Segment, s2: Segment) -> bool:
    """True iff the open interiors of the two segments share a point.

    Segments that only touch at an endpoint (shared or not) do not count.
    """
    a, b = s1
    c, d = s2
    if tuple(a) == tuple(b) or tuple(c) == tuple(d):
        return False  # a point has no interior
    o1 = orientation(a, b, c)
    o2 = orientation(a, b, d)
    o3 = orientation(c, d, a)
    o4 = orientation(c, d, b)
    if o1 * o2 < 0 and o3 * o4 < 0:
        return True
    if o1 == 0 and o2 == 0:
        # collinear: interiors overlap iff some endpoint lies strictly inside
        # the other segment, or both coincide
        if {tuple(a), tuple(b)} == {tuple(c), tuple(d)}:
            return True
        return (_between(a, b, c) or _between(a, b, d)
                or _between(c, d, a) or _between(c, d, b))
    return False


def squared_distance(p: Sequence[int], q: Sequence[int]) -> int:
    dx = p[0] - q[0]
    dy = p[1] - q[1]
    return dx * dx + dy * dy


# --------------------------------------------------------------------------
# frames and cones


@dataclass(frozen=True)
class Frame:
    """Cone orientation: ``(dx, dy)`` is the bisector of ``C0``.

    The direction is gcd-reduced on construction.
    """

    dx: int = 0
    dy: int = 1

    def __post_init__(self) -> None:
        if not (isinstance(self.dx, int) and isinstance(self.dy, int)):
            raise InputRangeError("frame direction must be integral")
        if self.dx == 0 and self.dy == 0:
            raise InputRangeError("frame direction must be nonzero")
        g = math.gcd(self.dx, self.dy)
        if g != 1:
            object.__setattr__(self, "dx", self.dx // g)
            object.__setattr__(self, "dy", self.dy // g)

    def local(self, wx: int, wy: int) -> tuple[int, int]:
        """Rotated coordinates ``(x', y')`` of the vector ``(wx, wy)``."""
        return (wx * self.dy - wy * self.dx, wx * self.dx + wy * self.dy)

    def boundary_directions(self) -> list[tuple[Rt3Scalar, Rt3Scalar]]:
        """Directions of the six cone boundary rays, doubled, in world coordinates.

        Ray ``k`` separates ``C_k`` from ``C_{k+1}``.
        """
        out = []
        for lx, ly in _RAY_LOCAL:
            out.append(self.world(lx, ly))
        return out

    def world(self, lx: Rt3Scalar, ly: Rt3Scalar) -> tuple[Rt3Scalar, Rt3Scalar]:
        """Map a frame-local vector back to world coordinates (scaled by |d|)."""
        # x' axis is (dy, -dx), y' axis is (dx, dy)
        return (lx * self.dy + ly * self.dx, ly * self.dy - lx * self.dx)

    def as_tuple(self) -> tuple[int, int]:
        return (self.dx, self.dy)


CANONICAL = Frame(0, 1)

# boundary ray k sits at 30 + 60k degrees clockwise from the bisector of C0;
# frame-local direction (sin, cos) doubled
_S = Rt3Scalar
_RAY_LOCAL: tuple[tuple[Rt3Scalar, Rt3Scalar], ...] = (
    (_S(1), _S(0, 1)),
    (_S(1), _S(0)),
    (_S(1), _S(0, -1)),
    (_S(-1), _S(0, -1)),
    (_S(-1), _S(0)),
    (_S(-1), _S(0, 1)),
)


def cone_index_local(x: int, y: int) -> int:
    """Cone of the frame-local vector ``(x, y)``.

    Integer vectors can never lie on the slanted boundaries, so the only
    boundary hit possible is ``y == 0``.
    """
    if y == 0:
        if x == 0:
            raise GeneralPositionViolation("cone of a zero vector")
        raise GeneralPositionViolation("point on a cone boundary (perpendicular to the C0 bisector)")
    if y * y > 3 * x * x:
        return 0 if y > 0 else 3
    if x > 0:
        return 1 if y > 0 else 2
    return 5 if y > 0 else 4


def cone_of(apex: Sequence[int], q: Sequence[int], f: Frame = CANONICAL) -> int:
    """Index ``i`` in 0..5 with ``q`` in cone ``C_i`` of ``apex``."""
    x, y = f.local(q[0] - apex[0], q[1] - apex[1])
    return cone_index_local(x, y)


def projection_local(cone: int, x: int, y: int) -> tuple[int, int]:
    """Doubled projection of ``(x, y)`` on the bisector of ``cone`` as ``(a, b)``."""
    if cone == 0:
        return (2 * y, 0)
    if cone == 1:
        return (y, x)
    if cone == 2:
        return (-y, x)
    if cone == 3:
        return (-2 * y, 0)
    if cone == 4:
        return (-y, -x)
    return (y, -x)


def bisector_projection(apex: Sequence[int], q: Sequence[int], cone: int, f: Frame = CANONICAL) -> Rt3Scalar:
    """Projection of ``q - apex`` on the bisector of ``cone`` (scaled by ``2|d|``)."""
    x, y = f.local(q[0] - apex[0], q[1] - apex[1])
    a, b = projection_local(cone, x, y)
    return Rt3Scalar(a, b)


def closer_by_bisector_projection(u: Sequence[int], a: Sequence[int], b: Sequence[int], cone: int,
                                  f: Frame = CANONICAL) -> bool:
    """Is ``a`` strictly closer to ``u`` than ``b`` along the bisector of ``cone``."""
    pa = bisector_projection(u, a, cone, f)
    pb = bisector_projection(u, b, cone, f)
    s = (pa - pb).sign()
    if s == 0:
        raise GeneralPositionViolation("equal bisector projections")
    return s < 0


def subcone_of(apex: Point, q: Point, incident_constraints: Sequence[Segment],
               f: Frame = CANONICAL) -> tuple[int, ...]:
    """Clockwise subcone index of ``q`` inside its cone of ``apex``.

    ``incident_constraints`` are segments with ``apex`` as one endpoint. A far
    endpoint of a splitting constraint lies in both adjacent subcones, so the
    result then has two entries.
    """
    cone = cone_of(apex, q, f)
    k = 0
    on_split = False
    for seg in incident_constraints:
        far = seg[1] if tuple(seg[0]) == tuple(apex) else seg[0]
        if tuple(far) == tuple(apex) or tuple(seg[0]) != tuple(apex) and tuple(seg[1]) != tuple(apex):
            raise GeometryError("constraint is not incident to the apex")
        if cone_of(apex, far, f) != cone:
            continue
        if tuple(far) == tuple(q):
            on_split = True
            continue
        o = orientation(apex, far, q)
        if o == COLLINEAR:
            raise GeneralPositionViolation("point collinear with a splitting constraint")
        if o == CW:
            k += 1
    return (k, k + 1) if on_split else (k,)


def in_canonical_triangle(u: Sequence[int], t: Sequence[int], v: Sequence[int], f: Frame = CANONICAL) -> bool:
    """Is ``v`` strictly inside the canonical triangle of ``u`` with respect to ``t``."""
    if tuple(t) == tuple(u):
        raise GeometryError("canonical triangle needs t != u")
    cone = cone_of(u, t, f)
    if cone_of(u, v, f) != cone:
        return False
    s = (bisector_projection(u, v, cone, f) - bisector_projection(u, t, cone, f)).sign()
    if s == 0:
        raise GeneralPositionViolation("point on the far side of the canonical triangle")
    return s < 0


def interior_direction(cone: int, f: Frame = CANONICAL) -> tuple[int, int]:
    """An integer world direction strictly inside ``cone``."""
    lx, ly = ((0, 1), (1, 1), (1, -1), (0, -1), (-1, -1), (-1, 1))[cone]
    return (lx * f.dy + ly * f.dx, ly * f.dy - lx * f.dx)


def rotate60_cw(v: tuple[Rt3Scalar, Rt3Scalar]) -> tuple[Rt3Scalar, Rt3Scalar]:
    """Rotate a world vector clockwise by 60 degrees (result doubled)."""
    x, y = v
    r3 = Rt3Scalar(0, 1)
    return (x + r3 * y, y - r3 * x)


def same_direction(v: tuple[Rt3Scalar, Rt3Scalar], w: tuple[Rt3Scalar, Rt3Scalar]) -> bool:
    return (v[0] * w[1] - v[1] * w[0]).sign() == 0 and (v[0] * w[0] + v[1] * w[1]).sign() > 0


def ray_line_parameter(origin: Sequence[int], direction: tuple[Rt3Scalar, Rt3Scalar],
                       a: Sequence[int], b: Sequence[int]) -> tuple[Rt3Scalar, Rt3Scalar] | None:
    """Where the ray ``origin + s*direction`` meets line ``ab``, as a position along ``a -> b``.

    Returns ``(num, den)`` with the position ``num/den`` (0 at ``a``, 1 at ``b``),
    or ``None`` when the ray is parallel to the line.
    """
    ex, ey = b[0] - a[0], b[1] - a[1]
    rx, ry = direction
    den = rx * ey - ry * ex  # cross(direction, e)
    if den.sign() == 0:
        return None
    mx, my = origin[0] - a[0], origin[1] - a[1]
    # a + mu*e = origin + s*direction  ->  mu = cross(direction, a - origin)... solved for mu
    num = rx * my - ry * mx
    return (num, den)
