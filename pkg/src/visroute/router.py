"""1-local, constant-memory routing on Theta-6 graphs and visibility graphs.

The step function sees exactly one :class:`LocalView` and one
:class:`MessageState`; :func:`route` is a thin driver that looks up the view of
the current vertex and records a :class:`Trace`.
"""

from __future__ import annotations

import enum
import json
import struct
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Protocol

from .chains import ChainState, ChainStuck, chain_start, chain_step, first_by_rotation
from .geom import (CANONICAL, CCW, CW, Frame, GeneralPositionViolation, InputRangeError, Point,
                   bisector_projection, cone_of, cross, orientation, properly_intersects, squared_distance)
from .instance import Instance, validate
from .visibility import LocalView, Site, VisibilityGraph


class Mode(str, enum.Enum):
    THETA6 = "theta6"
    VIS = "vis"


class Phase(str, enum.Enum):
    THETA = "THETA"
    AVOID = "AVOID"
    OPPOSITE = "OPPOSITE"


class Outcome(str, enum.Enum):
    REACHED = "REACHED"
    STEP_CAP = "STEP_CAP"
    ERROR = "ERROR"


class RoutingError(RuntimeError):
    """A routing rule could not produce a move."""

    def __init__(self, message: str, phase: Phase | None = None, substitute: bool = False):
        super().__init__(message)
        self.phase = phase
        self.substitute = substitute


class FrameRejected(ValueError):
    """The instance is not in general position for the requested frame."""


START_RULE = True
_NONE = -1
_I64 = 2**63


@dataclass(frozen=True)
class MessageState:
    """The constant-size memory that travels with the message."""

    dest: Site
    frame: Frame = CANONICAL
    mode: Mode = Mode.VIS
    phase: Phase = Phase.THETA
    avoid_origin: Site | None = None
    avoid_ref_cone: int | None = None
    chain: ChainState | None = None
    opposite_target: Site | None = None
    opposite_side: int | None = None

    _FMT = "<bbqqqqqqqqbqbqqqb"

    def to_bytes(self) -> bytes:
        """Fixed-width encoding; absent fields are written as -1."""

        def site(s: Site | None) -> tuple[int, int, int]:
            return (s.id, s.pt[0], s.pt[1]) if s is not None else (_NONE, 0, 0)

        fields = (
            list(Mode).index(self.mode), list(Phase).index(self.phase),
            self.frame.dx, self.frame.dy,
            *site(self.dest), *site(self.avoid_origin),
            _NONE if self.avoid_ref_cone is None else self.avoid_ref_cone,
            _NONE if self.chain is None else self.chain.pred,
            0 if self.chain is None else self.chain.turn,
            *site(self.opposite_target),
            0 if self.opposite_side is None else self.opposite_side,
        )
        for v in fields:
            if not -_I64 <= v < _I64:
                raise InputRangeError("state field does not fit in 64 bits")
        return struct.pack(self._FMT, *fields)

    @classmethod
    def size(cls) -> int:
        return struct.calcsize(cls._FMT)

    def to_json(self) -> dict:
        def site(s: Site | None):
            return None if s is None else {"id": s.id, "pt": [s.pt[0], s.pt[1]]}

        return {
            "dest": site(self.dest), "frame": list(self.frame.as_tuple()), "mode": self.mode.value,
            "phase": self.phase.value, "avoid_origin": site(self.avoid_origin),
            "avoid_ref_cone": self.avoid_ref_cone,
            "chain": None if self.chain is None else {"pred": self.chain.pred, "turn": self.chain.turn},
            "opposite_target": site(self.opposite_target), "opposite_side": self.opposite_side,
        }

    def to_theta(self) -> "MessageState":
        return MessageState(self.dest, self.frame, self.mode, Phase.THETA)


@dataclass(frozen=True)
class TraceStep:
    vertex: int
    phase: Phase
    note: str


@dataclass
class Trace:
    source: int
    dest: int
    mode: Mode
    frame: Frame
    steps: list[TraceStep] = field(default_factory=list)
    states: list[MessageState] = field(default_factory=list)
    outcome: Outcome = Outcome.REACHED
    error: str | None = None

    @property
    def vertices(self) -> list[int]:
        return [s.vertex for s in self.steps]

    @property
    def step_count(self) -> int:
        return max(0, len(self.steps) - 1)

    def has_phase(self, phase: Phase) -> bool:
        return any(s.phase == phase for s in self.steps[1:]) or any(st.phase == phase for st in self.states)

    def to_json(self) -> dict:
        out = {
            "source": self.source,
            "dest": self.dest,
            "mode": self.mode.value,
            "frame": list(self.frame.as_tuple()),
            "steps": [{"vertex": s.vertex, "phase": s.phase.value, "note": s.note} for s in self.steps],
            "outcome": self.outcome.value,
            "step_count": self.step_count,
        }
        if self.error:
            out["error"] = self.error
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=False)


class OppositeStrategy(Protocol):
    def __call__(self, view: LocalView, st: MessageState) -> int: ...


# --------------------------------------------------------------------------
# shared pieces


def _cone_and_subcones(view: LocalView, q: Point, f: Frame) -> tuple[int, tuple[int, ...]]:
    fd = view.frame_data(f)
    lx, ly = f.local(q[0] - view.current.pt[0], q[1] - view.current.pt[1])
    from .geom import cone_index_local
    c = cone_index_local(lx, ly)
    return c, fd.subcones_local(c, lx, ly)


def _min_entry(entries):
    from .geom import rt3_sign
    best = None
    for b in entries:
        if b is not None and (best is None or rt3_sign(b[1][0] - best[1][0], b[1][1] - best[1][1]) < 0):
            best = b
    return best


def theta_target(view: LocalView, target: Site, f: Frame, subcones: tuple[int, ...] | None = None,
                 whole_cone: bool = True) -> int | None:
    """Theta move toward ``target``: the closest neighbor in the subcone(s) holding
    ``target`` if it lies in the canonical triangle, else (with ``whole_cone``) the
    closest neighbor of the whole cone if that one does. ``None`` means blocked."""
    if view.current.id == target.id:
        return None
    from .geom import rt3_sign
    fd = view.frame_data(f)
    c, subs = _cone_and_subcones(view, target.pt, f)
    if subcones is not None:
        subs = subcones
    pt = bisector_projection(view.current.pt, target.pt, c, f)

    def valid(b) -> bool:
        if b is None:
            return False
        if b[0] == target.id:
            return True
        s = rt3_sign(b[1][0] - pt.a, b[1][1] - pt.b)
        if s == 0:
            raise GeneralPositionViolation("neighbor on the far side of the canonical triangle")
        return s < 0

    best = _min_entry(fd.best.get((c, j)) for j in subs)
    if valid(best):
        return best[0]
    if whole_cone:
        best = _min_entry(fd.best.get((c, j)) for j in range(fd.subcone_count(c) + 1))
        if valid(best):
            return best[0]
    return None


def theta_step(view: LocalView, st: MessageState) -> int | None:
    """One Theta-routing move toward the destination, or ``None`` when blocked."""
    return theta_target(view, st.dest, st.frame)


def crossing_constraints(view: LocalView, a: Point, b: Point) -> list[Site]:
    """Constraints incident to the current vertex that properly cross segment ``ab``."""
    cur = view.current.pt
    return [s for s in view.incident if properly_intersects((cur, s.pt), (a, b))]


def crossing_parameter(a: Point, b: Point, p: Point, q: Point) -> Fraction:
    """Position of the crossing of ``pq`` on ``ab`` as a fraction of ``|ab|``."""
    ex, ey = b[0] - a[0], b[1] - a[1]
    fx, fy = q[0] - p[0], q[1] - p[1]
    den = cross(ex, ey, fx, fy)
    return Fraction(cross(p[0] - a[0], p[1] - a[1], fx, fy), den)


def phase_end_resolution(view: LocalView, st: MessageState) -> MessageState:
    """Decide what follows an avoidance phase that has reached a blocking endpoint."""
    origin = st.avoid_origin
    assert origin is not None
    t = st.dest.pt
    hits = crossing_constraints(view, origin.pt, t)
    if not hits:
        raise RoutingError("phase end requested away from a blocking endpoint", st.phase)
    cur = view.current.pt
    q = min(hits, key=lambda s: crossing_parameter(origin.pt, t, cur, s.pt))
    dc, do = squared_distance(cur, t), squared_distance(q.pt, t)
    if dc == do:
        raise GeneralPositionViolation("constraint endpoints equidistant from the destination")
    if dc < do:
        return st.to_theta()
    side = orientation(cur, q.pt, origin.pt)
    return MessageState(st.dest, st.frame, st.mode, Phase.OPPOSITE, opposite_target=q,
                        opposite_side=side)


def _at_blocking_endpoint(view: LocalView, st: MessageState) -> bool:
    o = st.avoid_origin
    return o is not None and view.current.id != o.id and bool(crossing_constraints(view, o.pt, st.dest.pt))


# --------------------------------------------------------------------------
# obstacle avoidance


def _most(view: LocalView, ids: list[int], rot: int) -> int | None:
    """The id lying furthest in rotation direction ``rot`` (all within one cone)."""
    cur = view.current.pt
    best = None
    for vid in ids:
        if best is None or orientation(cur, view.neighbor(best).pt, view.neighbor(vid).pt) == rot:
            best = vid
    return best


def avoid_candidates(view: LocalView, st: MessageState) -> tuple[int | None, int | None]:
    """The ``v`` and ``w`` candidates relative to the stored reference cone."""
    fd = view.frame_data(st.frame)
    r = st.avoid_ref_cone
    c1, c2 = (r + 1) % 6, (r + 2) % 6
    v = fd.min_in(c2, 0)
    w = _most(view, [nb.id for nb in view.neighbors if fd.cone[nb.id] == c1], CCW)
    return v, w


def _rescue(view: LocalView, st: MessageState) -> bool:
    """Leave an avoidance walk that has turned through two or more cones once it
    stands strictly closer to t than the origin and has a valid Theta move."""
    o, t = st.avoid_origin.pt, st.dest.pt
    turned = (st.avoid_ref_cone - cone_of(o, t, st.frame)) % 6
    if turned < 2 or view.current.id == st.avoid_origin.id:
        return False
    if squared_distance(view.current.pt, t) >= squared_distance(o, t):
        return False
    return theta_step(view, st) is not None


def _start_neighbor(view: LocalView, t: Point, cone: int, f: Frame) -> int | None:
    """First neighbor of ``cone`` strictly clockwise of the line current -> t,
    scanning clockwise from the ray toward t."""
    cur = view.current.pt
    fd = view.frame_data(f)
    cands = [(nb.pt, nb.id) for nb in view.neighbors
             if fd.cone[nb.id] == cone and orientation(cur, t, nb.pt) == CW]
    if not cands:
        return None
    return first_by_rotation(cur, (t[0] - cur[0], t[1] - cur[1]), CW, cands)


def greedy_escape(view: LocalView, st: MessageState) -> int | None:
    """When every edge toward t is invalid, the start neighbor if it is strictly
    closer to t than the current vertex."""
    t = st.dest.pt
    nxt = _start_neighbor(view, t, cone_of(view.current.pt, t, st.frame), st.frame)
    if nxt is None or squared_distance(view.neighbor(nxt).pt, t) >= squared_distance(view.current.pt, t):
        return None
    return nxt


def avoid_step_theta6(view: LocalView, st: MessageState) -> tuple[int, MessageState, str]:
    f = st.frame
    cur = view.current.pt
    if START_RULE and view.current.id == st.avoid_origin.id:
        # invalid edges: leave through the first neighbor of the reference
        # cone on the chosen side of the line origin -> t
        nxt = _start_neighbor(view, st.dest.pt, st.avoid_ref_cone, f)
        if nxt is not None:
            return nxt, st, "avoid:start"
    for _ in range(6):
        v, w = avoid_candidates(view, st)
        if v is None and w is None:
            st = replace(st, avoid_ref_cone=(st.avoid_ref_cone + 1) % 6)
            continue
        if v is not None and w is not None:
            vp, wp = view.neighbor(v).pt, view.neighbor(w).pt
            ok = cone_of(wp, vp, f) == (st.avoid_ref_cone + 4) % 6
            if ok:
                ov, ow = orientation(cur, vp, wp), orientation(cur, wp, vp)
                for s in view.incident:
                    if orientation(cur, vp, s.pt) == ov and orientation(cur, wp, s.pt) == ow:
                        ok = False
                        break
            return (v, st, "avoid:v") if ok else (w, st, "avoid:w")
        return (v, st, "avoid:v") if v is not None else (w, st, "avoid:w")
    raise RoutingError(f"no avoidance candidate at vertex {view.current.id}", Phase.AVOID)


def avoid_step_vis(view: LocalView, st: MessageState) -> tuple[int, MessageState, str]:
    try:
        if st.chain is None:
            nxt = chain_start(view, st.dest.pt, CW)
            note = "chain:start"
        else:
            nxt = chain_step(view, st.chain)
            note = "chain"
    except ChainStuck as exc:
        raise RoutingError(str(exc), Phase.AVOID) from exc
    return nxt, replace(st, chain=ChainState(view.current.id, CW)), note


# --------------------------------------------------------------------------
# opposite endpoint


def _angle_less(o: Point, a: Point, b: Point, ref: Point) -> bool:
    """Is angle(a - o, ref - o) smaller than angle(b - o, ref - o)."""
    rx, ry = ref[0] - o[0], ref[1] - o[1]
    ax, ay = a[0] - o[0], a[1] - o[1]
    bx, by = b[0] - o[0], b[1] - o[1]
    da, db = ax * rx + ay * ry, bx * rx + by * ry
    la, lb = ax * ax + ay * ay, bx * bx + by * by
    # compare da/sqrt(la) > db/sqrt(lb)
    if (da >= 0) != (db >= 0):
        return da >= 0
    lhs, rhs = da * da * lb, db * db * la
    return lhs > rhs if da >= 0 else lhs < rhs


class DefaultOpposite:
    """Substitute opposite-endpoint walk for Theta-6 graphs.

    Moves to the target when adjacent, otherwise takes the Theta edge toward
    the target (on the traversal side of the constraint when the target splits
    a cone), and falls back to the neighbor that is strictly closer to the
    target with the smallest angle to it. Every move strictly reduces the
    distance to the target.
    """

    def __call__(self, view: LocalView, st: MessageState) -> int:
        tgt = st.opposite_target
        assert tgt is not None
        if view.is_neighbor(tgt.id):
            return tgt.id
        cur = view.current.pt
        _, subs = _cone_and_subcones(view, tgt.pt, st.frame)
        if len(subs) == 2 and st.opposite_side is not None:
            subs = (subs[0],) if st.opposite_side == CCW else (subs[1],)
        nxt = theta_target(view, tgt, st.frame, subs)
        if nxt is not None:
            return nxt
        d0 = squared_distance(cur, tgt.pt)
        best = None
        for nb in view.neighbors:
            if squared_distance(nb.pt, tgt.pt) < d0 and (best is None or _angle_less(cur, nb.pt, best.pt, tgt.pt)):
                best = nb
        if best is None:
            raise RoutingError(f"opposite-endpoint substitute stuck at {view.current.id}", Phase.OPPOSITE,
                               substitute=True)
        return best.id


def opposite_step(view: LocalView, st: MessageState,
                  strategy: OppositeStrategy | None = None) -> int:
    tgt = st.opposite_target
    assert tgt is not None
    if st.mode is Mode.VIS:
        if not view.is_neighbor(tgt.id):
            raise RoutingError("other endpoint of the constraint is not adjacent", Phase.OPPOSITE)
        return tgt.id
    return (strategy or DefaultOpposite())(view, st)


# --------------------------------------------------------------------------
# the step function


def step(view: LocalView, st: MessageState,
         opposite: OppositeStrategy | None = None) -> tuple[int, MessageState, str]:
    """One routing decision. Returns the next vertex, the new state and a short note."""
    here = view.current.id
    if here == st.dest.id:
        raise RoutingError("already at the destination", st.phase)
    notes: list[str] = []
    for _ in range(6):
        if st.phase is Phase.THETA:
            nxt = theta_step(view, st)
            if nxt is not None:
                notes.append("theta")
                return nxt, st, ";".join(notes)
            if st.mode is Mode.THETA6 and START_RULE:
                nxt = greedy_escape(view, st)
                if nxt is not None:
                    notes.append("greedy")
                    return nxt, st, ";".join(notes)
            c = cone_of(view.current.pt, st.dest.pt, st.frame)
            st = MessageState(st.dest, st.frame, st.mode, Phase.AVOID,
                              avoid_origin=view.current, avoid_ref_cone=c)
            notes.append("blocked")
            continue
        if st.phase is Phase.AVOID:
            if _at_blocking_endpoint(view, st):
                st = phase_end_resolution(view, st)
                notes.append("avoid-end:" + ("theta" if st.phase is Phase.THETA else "opposite"))
                continue
            if st.mode is Mode.THETA6 and _rescue(view, st):
                st = st.to_theta()
                notes.append("avoid-end:rescue")
                continue
            if st.mode is Mode.VIS:
                nxt, st2, note = avoid_step_vis(view, st)
            else:
                nxt, st2, note = avoid_step_theta6(view, st)
                if st2.avoid_ref_cone != st.avoid_ref_cone:
                    notes.append("restart")
            notes.append(note)
            return nxt, st2, ";".join(notes)
        if st.phase is Phase.OPPOSITE:
            tgt = st.opposite_target
            if here == tgt.id:
                st = st.to_theta()
                notes.append("opposite-end")
                continue
            nxt = opposite_step(view, st, opposite)
            notes.append("opposite")
            return nxt, st, ";".join(notes)
    raise RoutingError("phase transitions did not settle", st.phase)


# --------------------------------------------------------------------------
# driver


class Router:
    """Routes on one graph under one frame; validates the frame once."""

    def __init__(self, inst: Instance, graph: VisibilityGraph, mode: Mode | str, f: Frame = CANONICAL,
                 *, opposite: OppositeStrategy | None = None, check: bool = True):
        self.instance = inst
        self.graph = graph
        self.mode = Mode(mode)
        self.frame = f
        self.opposite = opposite
        if self.mode is Mode.THETA6 and getattr(graph, "kind", "") != "theta6":
            raise ValueError("THETA6 routing needs a Theta-6 graph")
        if self.mode is Mode.VIS and getattr(graph, "kind", "") != "vis":
            raise ValueError("VIS routing needs a visibility graph")
        if self.mode is Mode.THETA6 and graph.frame != f:
            raise ValueError("Theta-6 graph was built for a different frame")
        if check:
            bad = validate(inst, f)
            if bad:
                raise FrameRejected("; ".join(str(b) for b in bad[:3]))

    def route(self, s: int, t: int, step_cap: int | None = None) -> Trace:
        inst = self.instance
        if s == t:
            raise ValueError("source and destination must differ")
        cap = inst.n * inst.n if step_cap is None else step_cap
        st = MessageState(Site(t, inst.points[t]), self.frame, self.mode)
        trace = Trace(s, t, self.mode, self.frame)
        trace.steps.append(TraceStep(s, Phase.THETA, "start"))
        cur = s
        while cur != t:
            if trace.step_count >= cap:
                trace.outcome = Outcome.STEP_CAP
                trace.states.append(st)
                return trace
            trace.states.append(st)
            try:
                nxt, st2, note = step(self.graph.view(cur), st, self.opposite)
            except (RoutingError, GeneralPositionViolation) as exc:
                trace.outcome = Outcome.ERROR
                phase = getattr(exc, "phase", None) or st.phase
                kind = "substitute-strategy failure: " if getattr(exc, "substitute", False) else ""
                trace.error = f"{kind}{phase.value}: {exc}"
                return trace
            if not self.graph.has_edge(cur, nxt):
                trace.outcome = Outcome.ERROR
                trace.error = f"{st.phase.value}: step to non-neighbor {nxt}"
                return trace
            trace.steps.append(TraceStep(nxt, _move_phase(st, st2, note), note))
            st = st2
            cur = nxt
        trace.states.append(st)
        trace.outcome = Outcome.REACHED
        return trace


def _move_phase(before: MessageState, after: MessageState, note: str) -> Phase:
    last = note.rsplit(";", 1)[-1]
    if last == "theta":
        return Phase.THETA
    if last == "opposite":
        return Phase.OPPOSITE
    return Phase.AVOID


def route(inst: Instance, graph: VisibilityGraph, s: int, t: int, mode: Mode | str = Mode.VIS,
          f: Frame = CANONICAL, step_cap: int | None = None, *,
          opposite: OppositeStrategy | None = None) -> Trace:
    return Router(inst, graph, mode, f, opposite=opposite).route(s, t, step_cap)


StepFn = Callable[[LocalView, MessageState], tuple[int, MessageState, str]]
