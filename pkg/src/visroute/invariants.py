"""Checkers for recorded traces.

Every checker returns a list of human-readable violations; an empty list
means the property holds. None of them trusts the router: blocking
constraints, chain replays and views are recomputed from the instance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from .chains import ChainState, ChainStuck, chain_start, chain_step, chain_turn, convex_chain_oracle
from .geom import CW, Frame, compare_ratios, orientation, properly_intersects, ray_line_parameter, squared_distance
from .instance import Instance
from .router import MessageState, Mode, Phase, Trace, step
from .visibility import LocalView, VisibilityGraph, local_view


def _pt(inst: Instance, v: int):
    return inst.points[v]


def check_neighbors(trace: Trace, g: VisibilityGraph) -> list[str]:
    out = []
    vs = trace.vertices
    if not vs or vs[0] != trace.source:
        out.append("trace does not start at the source")
    for a, b in zip(vs, vs[1:]):
        if not g.has_edge(a, b):
            out.append(f"{a}->{b} is not an edge")
    if trace.outcome.value == "REACHED" and vs[-1] != trace.dest:
        out.append("REACHED trace does not end at the destination")
    return out


def check_theta_monotone(trace: Trace, inst: Instance) -> list[str]:
    """Every THETA move strictly reduces the squared distance to t."""
    t = _pt(inst, trace.dest)
    out = []
    for prev, cur in zip(trace.steps, trace.steps[1:]):
        if cur.phase is not Phase.THETA:
            continue
        if not squared_distance(_pt(inst, cur.vertex), t) < squared_distance(_pt(inst, prev.vertex), t):
            out.append(f"THETA move {prev.vertex}->{cur.vertex} does not approach t")
    return out


# --------------------------------------------------------------------------
# avoidance phases


def blocking_constraints(inst: Instance, a: int, b: int) -> list[tuple[int, int]]:
    """Constraints properly crossing segment ``ab``, nearest to ``a`` first."""
    return list(_blocking(inst, a, b))


@lru_cache(maxsize=65536)
def _blocking(inst: Instance, a: int, b: int) -> tuple[tuple[int, int], ...]:
    A, B = _pt(inst, a), _pt(inst, b)
    hits = []
    for c in inst.constraints:
        P, Q = inst.segment(c)
        if properly_intersects((A, B), (P, Q)):
            hits.append((_crossing_at(A, B, P, Q), c))
    hits.sort()
    return tuple(c for _, c in hits)


def _crossing_at(a, b, p, q) -> Fraction:
    ex, ey = b[0] - a[0], b[1] - a[1]
    fx, fy = q[0] - p[0], q[1] - p[1]
    den = ex * fy - ey * fx
    return Fraction((p[0] - a[0]) * fy - (p[1] - a[1]) * fx, den)


def right_endpoint(inst: Instance, c: tuple[int, int], a: int, b: int) -> int:
    """Endpoint of ``c`` on the clockwise side of the directed line ``a -> b``."""
    A, B = _pt(inst, a), _pt(inst, b)
    return c[0] if orientation(A, B, _pt(inst, c[0])) == CW else c[1]


@dataclass
class AvoidPhase:
    origin: int
    ref_cone: int
    start: int                      # index into trace.steps of the origin
    end: int                        # index of the vertex where the phase ended
    exit: str                       # "theta", "opposite", "rescue", "reached" or "open"
    ref_cones: list[int] = field(default_factory=list)

    @property
    def terminal(self) -> int:
        return self.end


def avoid_phases(trace: Trace) -> list[AvoidPhase]:
    """Split a trace into its avoidance phases.

    ``states[k]`` is the memory on arrival at ``steps[k]``; the note of
    ``steps[k + 1]`` describes the decision taken there.
    """
    out: list[AvoidPhase] = []
    cur: AvoidPhase | None = None
    n = len(trace.steps)
    for k in range(n):
        note = trace.steps[k + 1].note if k + 1 < n else ""
        parts = note.split(";") if note else []
        for part in parts:
            if part == "blocked":
                cur = AvoidPhase(origin=trace.steps[k].vertex, ref_cone=-1, start=k, end=k, exit="open")
            elif part.startswith("avoid-end:") and cur is not None:
                cur.end = k
                cur.exit = part.split(":", 1)[1]
                out.append(cur)
                cur = None
        if cur is not None and k + 1 < len(trace.states):
            nxt = trace.states[k + 1]
            if nxt.phase is Phase.AVOID and nxt.avoid_origin is not None:
                if cur.ref_cone < 0:
                    cur.ref_cone = nxt.avoid_ref_cone
                cur.ref_cones.append(nxt.avoid_ref_cone)
        if cur is not None and k == n - 1:
            cur.end = k
            cur.exit = "reached" if trace.steps[k].vertex == trace.dest else "open"
            out.append(cur)
            cur = None
    return out


@dataclass
class EndpointReport:
    checked: int = 0
    rescued: int = 0
    reached: int = 0
    violations: list[str] = field(default_factory=list)


def check_avoid_endpoints(trace: Trace, inst: Instance, *, fully_blocked: bool = False) -> EndpointReport:
    """Each avoidance phase ends on an endpoint of a constraint crossing (origin, t).

    With ``fully_blocked`` the endpoint must be the right endpoint of the
    closest such constraint. Rescue exits and phases cut short by reaching t
    are counted, not judged.
    """
    rep = EndpointReport()
    t = trace.dest
    for ph in avoid_phases(trace):
        if ph.exit == "rescue":
            rep.rescued += 1
            continue
        if ph.exit == "reached":
            rep.reached += 1
            continue
        rep.checked += 1
        v = trace.steps[ph.end].vertex
        if ph.exit == "open":
            rep.violations.append(f"avoidance from {ph.origin} never ended")
            continue
        blockers = blocking_constraints(inst, ph.origin, t)
        mine = [c for c in blockers if v in c]
        if not mine:
            rep.violations.append(f"avoidance from {ph.origin} ended at {v}, not on a blocking constraint")
            continue
        if fully_blocked:
            z = right_endpoint(inst, blockers[0], ph.origin, t)
            if v != z:
                rep.violations.append(f"avoidance from {ph.origin} ended at {v}, expected right endpoint {z}")
    return rep


def _ray_hits_segment(o, d, a, b):
    """Position along ``a -> b`` where the forward ray ``o + s*d`` meets segment
    ``ab``, as ``(num, den)``; ``None`` if it misses."""
    hit = ray_line_parameter(o, d, a, b)
    if hit is None:
        return None
    num, den = hit
    sd = den.sign()
    mu_lo = num.sign() * sd                      # sign of mu
    mu_hi = (num - den).sign() * sd              # sign of mu - 1
    if mu_lo < 0 or mu_hi > 0:
        return None
    ex, ey = b[0] - a[0], b[1] - a[1]
    ahead = ((a[0] - o[0]) * ey - (a[1] - o[1]) * ex) * sd
    return hit if ahead >= 0 else None


@lru_cache(maxsize=None)
def _rays(f: Frame):
    return f.boundary_directions()


def check_avoid_monotone(trace: Trace, inst: Instance, f: Frame) -> list[str]:
    """Along a Theta-6 avoidance phase, the right boundary of the reference cone
    meets the closest blocking constraint ever nearer its right endpoint."""
    if trace.mode is not Mode.THETA6:
        return []
    out = []
    rays = _rays(f)
    for ph in avoid_phases(trace):
        blockers = blocking_constraints(inst, ph.origin, trace.dest)
        if not blockers:
            continue
        q = blockers[0]
        z = right_endpoint(inst, q, ph.origin, trace.dest)
        a = q[0] if z == q[1] else q[1]
        A, Z = _pt(inst, a), _pt(inst, z)
        last = None
        for k in range(ph.start, ph.end + 1):
            if k >= len(trace.states):
                break
            st = trace.states[k + 1] if k + 1 < len(trace.states) else trace.states[k]
            if k > ph.start and st.avoid_ref_cone not in (None, ph.ref_cone):
                break  # a restart changes the reference boundary
            hit = _ray_hits_segment(_pt(inst, trace.steps[k].vertex), rays[ph.ref_cone], A, Z)
            if hit is None:
                continue
            if last is not None and compare_ratios(hit[0], hit[1], last[0], last[1]) < 0:
                out.append(f"avoidance from {ph.origin}: boundary crossing moved away from {z} "
                           f"at {trace.steps[k].vertex}")
            last = hit
    return out


def terminal_vertices(trace: Trace) -> list[int]:
    """Vertices where an avoidance or opposite phase handed over to THETA at
    the endpoint closer to t."""
    out = []
    for k in range(len(trace.steps) - 1):
        for part in trace.steps[k + 1].note.split(";"):
            if part in ("avoid-end:theta", "opposite-end"):
                out.append(trace.steps[k].vertex)
    return out


def check_single_terminal_visit(trace: Trace) -> list[str]:
    seen: set[int] = set()
    out = []
    for v in terminal_vertices(trace):
        if v in seen:
            out.append(f"vertex {v} is a phase terminal twice")
        seen.add(v)
    return out


def is_subsequence(short: Sequence[int], long: Sequence[int]) -> bool:
    it = iter(long)
    return all(x in it for x in short)


def check_vis_subsequence(vis: Trace, theta: Trace) -> list[str]:
    """Only judged when neither trace has an OPPOSITE phase."""
    if vis.has_phase(Phase.OPPOSITE) or theta.has_phase(Phase.OPPOSITE):
        return []
    if not is_subsequence(vis.vertices, theta.vertices):
        return [f"VIS trace {vis.source}->{vis.dest} is not a subsequence of the Theta-6 trace"]
    return []


# --------------------------------------------------------------------------
# locality and memory


def check_replay(trace: Trace, g: VisibilityGraph, views: dict[int, LocalView] | None = None) -> list[str]:
    """Feed each recorded state and a freshly built view back into ``step``.

    Views are rebuilt with :func:`local_view`, never taken from the graph's
    own cache. Pass a dict as ``views`` to share rebuilt views across traces.
    """
    out = []
    for k in range(len(trace.steps) - 1):
        u = trace.steps[k].vertex
        if views is None:
            view = local_view(g, u)
        else:
            view = views.get(u)
            if view is None:
                view = views[u] = local_view(g, u)
        nxt, st2, note = step(view, trace.states[k])
        if nxt != trace.steps[k + 1].vertex or note != trace.steps[k + 1].note:
            out.append(f"step {k}: replay chose {nxt} ({note}) instead of {trace.steps[k + 1].vertex}")
        elif k + 1 < len(trace.states) and st2 != trace.states[k + 1]:
            out.append(f"step {k}: replay produced a different state")
    return out


def state_sizes(trace: Trace) -> set[int]:
    return {len(st.to_bytes()) for st in trace.states}


def check_state_size(trace: Trace) -> list[str]:
    sizes = state_sizes(trace)
    if sizes - {MessageState.size()}:
        return [f"state sizes {sorted(sizes)} differ from {MessageState.size()}"]
    return []


# --------------------------------------------------------------------------
# convex chains


def _in_closed_triangle(a, b, c, x) -> bool:
    o = orientation(a, b, c)
    return all(orientation(p, q, x) in (0, o) for p, q in ((a, b), (b, c), (c, a)))


def restrict_view(view: LocalView, a, b, c) -> LocalView:
    """The view with neighbors outside the closed triangle ``abc`` removed."""
    keep = [nb for nb in view.neighbors if _in_closed_triangle(a, b, c, nb.pt)]
    return LocalView(view.current, keep, view.incident)


def replay_chain(g: VisibilityGraph, u: int, v: int, w: int, *, restrict: bool = False) -> list[int]:
    """Walk the chain from ``u`` toward ``v`` with the local rules only."""
    pts = g.instance.points
    U, V, W = pts[u], pts[v], pts[w]
    turn = chain_turn(U, V, W)

    def view(x: int) -> LocalView:
        lv = g.view(x)
        return restrict_view(lv, U, V, W) if restrict else lv

    path = [u, chain_start(view(u), W, turn, exclude=w)]
    while path[-1] != v and len(path) <= g.n:
        path.append(chain_step(view(path[-1]), ChainState(path[-2], turn)))
    return path


def check_chain_triple(g: VisibilityGraph, u: int, v: int, w: int) -> list[str]:
    """Oracle chain is checked by construction; the local replay must match it.

    The unrestricted view is used when ``vw`` is a constraint (the situation
    the router meets); otherwise the view is clipped to the triangle.
    """
    chain = convex_chain_oracle(g, u, v, w)
    if len(chain) == 2:
        return []
    restrict = (min(v, w), max(v, w)) not in g.instance.constraint_set()
    try:
        local = replay_chain(g, u, v, w, restrict=restrict)
    except ChainStuck as exc:
        return [f"chain replay for ({u},{v},{w}) stuck: {exc}"]
    if local != chain:
        return [f"chain replay for ({u},{v},{w}) gave {local}, oracle {chain}"]
    return []


__all__ = [
    "AvoidPhase", "EndpointReport", "avoid_phases", "blocking_constraints", "check_avoid_endpoints",
    "check_avoid_monotone", "check_chain_triple", "check_neighbors", "check_replay",
    "check_single_terminal_visit", "check_state_size", "check_theta_monotone", "check_vis_subsequence",
    "is_subsequence", "replay_chain", "restrict_view", "right_endpoint", "state_sizes", "terminal_vertices",
]
