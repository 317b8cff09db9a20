import json

import pytest

from visroute.geom import CW, Frame, orientation
from visroute.instance import gen_random
from visroute.invariants import (avoid_phases, check_avoid_endpoints, check_neighbors, check_replay,
                                 check_single_terminal_visit, check_state_size, check_theta_monotone)
from visroute.router import (FrameRejected, MessageState, Mode, Outcome, Phase, Router, RoutingError,
                             avoid_step_theta6, greedy_escape, opposite_step, phase_end_resolution, route, step,
                             theta_step)
from visroute.theta6 import build_theta6
from visroute.visibility import LocalView, Neighbor, Site, build_visibility_graph

from conftest import make, random_case

MODES = ("vis", "theta6")

POCKET_ROUTE = make(
    [(0, 0), (20, 250), (-256, 142), (209, 113), (-311, -22), (395, 153), (-301, 91), (117, 76), (277, 123),
     (82, -92), (120, -121), (-182, -4)],
    [(0, 2), (0, 9), (0, 11), (1, 3), (2, 3), (2, 11), (3, 7), (4, 9), (6, 11)])


def graphs(inst):
    vis = build_visibility_graph(inst)
    return {"vis": vis, "theta6": build_theta6(inst, vis)}


def view_of(current, neighbors, incident=()):
    """Hand-made view: ``neighbors`` maps id -> point, ``incident`` lists constraint far ends."""
    inc = {k for k, _ in incident}
    nbrs = [Neighbor(p, k, k in inc) for k, p in neighbors.items()]
    return LocalView(Site(0, current), nbrs, [Site(k, p) for k, p in incident])


def avoid_state(ref_cone=0):
    return MessageState(Site(90, (1, 400)), mode=Mode.THETA6, phase=Phase.AVOID,
                        avoid_origin=Site(91, (-30, -300)), avoid_ref_cone=ref_cone)


class TestRoute:
    @pytest.mark.parametrize("mode", MODES)
    def test_two_points(self, mode):
        inst = make([(0, 0), (1, 10)])
        tr = route(inst, graphs(inst)[mode], 0, 1, mode)
        assert tr.vertices == [0, 1]
        assert tr.step_count == 1 and tr.outcome is Outcome.REACHED

    @pytest.mark.parametrize("mode", MODES)
    def test_theta_twice(self, mode):
        inst = make([(0, 0), (1, 6), (1, 12)])
        tr = route(inst, graphs(inst)[mode], 0, 2, mode)
        assert tr.vertices == [0, 1, 2]
        assert [s.phase for s in tr.steps[1:]] == [Phase.THETA, Phase.THETA]

    @pytest.mark.parametrize("mode", MODES)
    def test_single_blocking_constraint(self, mode):
        inst = make([(0, 0), (1, 10), (-8, 5), (8, 6)], [(2, 3)])
        tr = route(inst, graphs(inst)[mode], 0, 1, mode)
        assert tr.vertices == [0, 3, 1]
        assert [s.phase for s in tr.steps] == [Phase.THETA, Phase.AVOID, Phase.THETA]
        assert tr.steps[2].note == "avoid-end:theta;theta"

    @pytest.mark.parametrize("mode", MODES)
    def test_opposite_endpoint(self, mode):
        inst = make([(0, 0), (1, 10), (-4, 5), (12, 8)], [(2, 3)])
        tr = route(inst, graphs(inst)[mode], 0, 1, mode)
        assert tr.vertices == [0, 3, 2, 1]
        assert [s.phase for s in tr.steps] == [Phase.THETA, Phase.AVOID, Phase.OPPOSITE, Phase.THETA]

    def test_vis_chain_of_two_steps(self):
        g = graphs(POCKET_ROUTE)["vis"]
        tr = route(POCKET_ROUTE, g, 0, 1, "vis")
        assert tr.vertices == [0, 7, 3, 1]
        assert [s.note for s in tr.steps[1:]] == ["blocked;chain:start", "chain", "avoid-end:theta;theta"]
        pts = POCKET_ROUTE.points
        assert orientation(pts[0], pts[7], pts[3]) == CW
        (ph,) = avoid_phases(tr)
        assert tr.steps[ph.end].vertex == 3
        assert check_avoid_endpoints(tr, POCKET_ROUTE, fully_blocked=True).violations == []

    def test_step_cap(self):
        inst = make([(0, 0), (1, 6), (1, 12)])
        tr = route(inst, graphs(inst)["vis"], 0, 2, "vis", step_cap=1)
        assert tr.outcome is Outcome.STEP_CAP
        assert tr.vertices == [0, 1]

    def test_same_endpoints(self):
        inst = make([(0, 0), (1, 10)])
        with pytest.raises(ValueError):
            route(inst, graphs(inst)["vis"], 0, 0)

    def test_graph_must_match_mode(self):
        inst = make([(0, 0), (1, 10)])
        g = graphs(inst)
        with pytest.raises(ValueError):
            Router(inst, g["vis"], "theta6")
        with pytest.raises(ValueError):
            Router(inst, g["theta6"], "vis")
        with pytest.raises(ValueError):
            Router(inst, g["theta6"], "theta6", Frame(1, 2))

    def test_frame_rejected(self):
        inst = make([(0, 0), (3, 3), (1, 7)])
        with pytest.raises(FrameRejected):
            Router(inst, graphs(inst)["vis"], "vis", Frame(1, -1))

    def test_tilted_frame(self):
        inst = gen_random(25, 4, 0.4)
        f = Frame(2, 5)
        vis = build_visibility_graph(inst)
        th = build_theta6(inst, vis, f)
        for g, mode in ((vis, "vis"), (th, "theta6")):
            r = Router(inst, g, mode, f)
            for t in range(1, inst.n):
                assert r.route(0, t).outcome is Outcome.REACHED

    def test_trace_json(self):
        inst = make([(0, 0), (1, 6), (1, 12)])
        d = json.loads(route(inst, graphs(inst)["vis"], 0, 2).dumps())
        assert set(d) == {"source", "dest", "mode", "frame", "steps", "outcome", "step_count"}
        assert d["steps"][1] == {"vertex": 1, "phase": "THETA", "note": "theta"}
        assert d["frame"] == [0, 1] and d["step_count"] == 2


class TestThetaStep:
    def test_destination_visible(self):
        inst = make([(0, 0), (1, 10)])
        st = MessageState(Site(1, (1, 10)))
        assert theta_step(graphs(inst)["vis"].view(0), st) == 1

    @pytest.mark.parametrize("mode", MODES)
    def test_invalid_edge_ignored(self, mode):
        inst = make([(0, 0), (2, 20), (-2, 11), (-6, 5), (1, 12)], [(0, 1), (3, 4)])
        st = MessageState(Site(2, (-2, 11)), mode=Mode(mode))
        assert theta_step(graphs(inst)[mode].view(0), st) is None

    @pytest.mark.parametrize("mode", MODES)
    def test_spanning_constraint(self, mode):
        inst = make([(0, 0), (1, 10), (-8, 5), (8, 6)], [(2, 3)])
        st = MessageState(Site(1, (1, 10)), mode=Mode(mode))
        assert theta_step(graphs(inst)[mode].view(0), st) is None


class TestGreedyEscape:
    def _state(self):
        return MessageState(Site(9, (0, 100)), mode=Mode.THETA6)

    def test_closer_invalid_edge_taken(self):
        view = view_of((0, 0), {1: (10, 105)})
        assert theta_step(view, self._state()) is None
        assert greedy_escape(view, self._state()) == 1
        nxt, st, note = step(view, self._state())
        assert (nxt, st.phase, note) == (1, Phase.THETA, "greedy")

    def test_farther_invalid_edge_starts_avoidance(self):
        view = view_of((0, 0), {1: (50, 190)})
        assert greedy_escape(view, self._state()) is None
        nxt, st, note = step(view, self._state())
        assert (nxt, st.phase, note) == (1, Phase.AVOID, "blocked;avoid:start")

    def test_left_side_ignored(self):
        assert greedy_escape(view_of((0, 0), {1: (-10, 105)}), self._state()) is None

    def test_gap_route(self):
        # the blocking endpoint lies beyond the far line; the greedy hop keeps the
        # Theta-6 route a supersequence of the VIS route
        inst, vis, th = random_case(50, 82)
        tv = Router(inst, vis, "vis").route(42, 16)
        tt = Router(inst, th, "theta6").route(42, 16)
        assert tv.vertices == [42, 22, 16]
        assert tt.vertices == [42, 15, 22, 16]
        assert tt.steps[1].note == "greedy"


class TestAvoidTheta6:
    def test_go_to_v(self):
        view = view_of((0, 0), {1: (6, 2), 2: (3, -1)})
        nxt, _, note = avoid_step_theta6(view, avoid_state())
        assert (nxt, note) == (2, "avoid:v")

    def test_constraint_in_triangle_forces_w(self):
        view = view_of((0, 0), {1: (12, 4), 2: (6, -2), 3: (20, 1)}, [(3, (20, 1))])
        nxt, _, note = avoid_step_theta6(view, avoid_state())
        assert (nxt, note) == (1, "avoid:w")

    def test_v_outside_cone_of_w(self):
        view = view_of((0, 0), {1: (6, 1), 2: (4, -6)})
        nxt, _, note = avoid_step_theta6(view, avoid_state())
        assert (nxt, note) == (1, "avoid:w")

    def test_restart_when_no_candidates(self):
        # nothing in C1 or C2 of the reference cone 0; C2 of reference cone 1 is C3
        view = view_of((0, 0), {1: (1, -9)})
        nxt, st, _ = avoid_step_theta6(view, avoid_state())
        assert nxt == 1
        assert st.avoid_ref_cone == 1

    def test_no_neighbors(self):
        with pytest.raises(RoutingError):
            avoid_step_theta6(view_of((0, 0), {}), avoid_state())


class TestPhaseEnd:
    def _state(self):
        return MessageState(Site(99, (0, 100)), phase=Phase.AVOID, avoid_origin=Site(98, (1, 0)),
                            avoid_ref_cone=0)

    def test_nearest_crossing_selected(self):
        view = view_of((-10, 50), {1: (10, 30), 2: (10, 70)}, [(1, (10, 30)), (2, (10, 70))])
        st = phase_end_resolution(view, self._state())
        assert st.phase is Phase.THETA

    def test_farther_endpoint_goes_opposite(self):
        view = view_of((-10, 50), {2: (10, 70)}, [(2, (10, 70))])
        st = phase_end_resolution(view, self._state())
        assert st.phase is Phase.OPPOSITE
        assert st.opposite_target.id == 2

    def test_closer_endpoint_resumes_theta(self):
        view = view_of((-10, 50), {1: (10, 30)}, [(1, (10, 30))])
        assert phase_end_resolution(view, self._state()).phase is Phase.THETA

    def test_requires_a_blocking_constraint(self):
        with pytest.raises(RoutingError):
            phase_end_resolution(view_of((-10, 50), {1: (10, 30)}), self._state())

    def test_origin_constraint_never_crosses(self):
        # a constraint at the origin only touches (origin, t), so the zero-step case cannot arise
        view = view_of((1, 0), {1: (-5, 40), 2: (0, 100)}, [(1, (-5, 40))])
        st = MessageState(Site(2, (0, 100)), phase=Phase.AVOID, avoid_origin=Site(0, (1, 0)), avoid_ref_cone=0)
        nxt, st2, note = step(view, st)
        assert "avoid-end" not in note


class TestOpposite:
    def _state(self, mode, target=(5, 9)):
        return MessageState(Site(99, (0, 100)), mode=Mode(mode), phase=Phase.OPPOSITE,
                            opposite_target=Site(1, target))

    @pytest.mark.parametrize("mode", MODES)
    def test_adjacent_target(self, mode):
        view = view_of((0, 0), {1: (5, 9), 2: (-3, 4)}, [(1, (5, 9))])
        assert opposite_step(view, self._state(mode)) == 1

    def test_vis_requires_adjacency(self):
        view = view_of((0, 0), {2: (-3, 4)})
        with pytest.raises(RoutingError):
            opposite_step(view, self._state("vis"))

    def test_theta6_takes_the_theta_edge_toward_target(self):
        view = view_of((0, 0), {2: (3, 40), 3: (-2, 7)})
        assert opposite_step(view, self._state("theta6", (1, 60))) == 3

    def test_custom_strategy(self):
        view = view_of((0, 0), {2: (3, 40), 3: (-2, 7)})
        assert opposite_step(view, self._state("theta6", (1, 60)), lambda v, s: 2) == 2


class TestMessageState:
    def test_fixed_size(self):
        full = MessageState(Site(2**40, (2**40, -2**40)), Frame(3, 7), Mode.THETA6, Phase.OPPOSITE,
                            Site(5, (1, 2)), 4, None, Site(6, (3, 4)), CW)
        assert len(full.to_bytes()) == len(MessageState(Site(0, (0, 0))).to_bytes()) == MessageState.size()

    def test_json(self):
        d = MessageState(Site(3, (1, 2))).to_json()
        assert d["dest"] == {"id": 3, "pt": [1, 2]}
        assert d["phase"] == "THETA" and d["avoid_origin"] is None


class TestRandomInstances:
    @pytest.mark.parametrize("seed", range(6))
    @pytest.mark.parametrize("mode", MODES)
    def test_all_pairs(self, seed, mode):
        inst, vis, th = random_case(20, 40 + seed, (0.0, 0.3, 0.7)[seed % 3])
        g = vis if mode == "vis" else th
        r = Router(inst, g, mode)
        for s in range(inst.n):
            for t in range(inst.n):
                if s == t:
                    continue
                tr = r.route(s, t)
                assert tr.outcome is Outcome.REACHED, (s, t, tr.error)
                assert check_neighbors(tr, g) == []
                assert check_theta_monotone(tr, inst) == []
                assert check_avoid_endpoints(tr, inst).violations == []
                assert check_single_terminal_visit(tr) == []
                assert check_state_size(tr) == []

    @pytest.mark.parametrize("mode", MODES)
    def test_replay(self, mode):
        inst, vis, th = random_case(20, 3, 0.7)
        g = vis if mode == "vis" else th
        r = Router(inst, g, mode)
        for t in range(1, inst.n):
            assert check_replay(r.route(0, t), g) == []
