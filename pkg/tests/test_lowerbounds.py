import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from visroute.geom import orientation
from visroute.instance import InputError, validate
from visroute.lowerbounds import (Length, Metric, NoPath, compare_sqrt_sums, crossing_vertices, gen_grid,
                                  gen_zigzag, grid_check, induced_crossing_subgraph, ratio_report, shortest_path,
                                  trim, zigzag_bounds, zigzag_check)
from visroute.visibility import build_visibility_graph

from conftest import make


def hull_size(points):
    pts = sorted(set(map(tuple, points)))
    if len(pts) < 3:
        return len(pts)

    def half(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and orientation(out[-2], out[-1], p) <= 0:
                out.pop()
            out.append(p)
        return out[:-1]

    return len(half(pts)) + len(half(pts[::-1]))


def mp_sign(a, b):
    with mpmath.workprec(600):
        d = mpmath.fsum(mpmath.sqrt(k) for k in a) - mpmath.fsum(mpmath.sqrt(k) for k in b)
    return 0 if abs(d) < mpmath.mpf(2) ** -500 else int(mpmath.sign(d))


class TestSqrtSums:
    def test_examples(self):
        assert compare_sqrt_sums([8], [2, 2]) == 0
        assert compare_sqrt_sums([2, 3], [10]) == -1
        assert compare_sqrt_sums([2, 3], [9]) == 1
        assert compare_sqrt_sums([], []) == 0
        assert compare_sqrt_sums([1, 1], [5]) == -1

    def test_near_tie(self):
        # sqrt(10^12 + 1) + 10^6 vs sqrt(4*10^12 + 1): differ by about 2.5e-7
        big = 10**12
        assert compare_sqrt_sums([big + 1, big], [4 * big + 1]) == mp_sign([big + 1, big], [4 * big + 1])

    @settings(max_examples=300)
    @given(st.lists(st.integers(0, 10**6), max_size=5), st.lists(st.integers(0, 10**6), max_size=5))
    def test_matches_high_precision(self, a, b):
        assert compare_sqrt_sums(a, b) == mp_sign(a, b)

    @given(st.lists(st.integers(1, 50), min_size=1, max_size=4), st.integers(2, 30))
    def test_scaled_copies_tie(self, a, k):
        assert compare_sqrt_sums([x * k * k for x in a], [x for x in a for _ in range(k)]) == 0

    def test_length_ordering(self):
        assert Length([9, 16]) == Length([49])
        assert Length([2]) < Length([1, 1])


class TestShortestPath:
    def test_two_vertices(self):
        g = build_visibility_graph(make([(0, 0), (3, 4)]))
        res = shortest_path(g, 0, 1, Metric.EUCLIDEAN)
        assert res.path == [0, 1] and res.value == 5.0

    def test_direct_edge_wins(self):
        g = build_visibility_graph(make([(0, 0), (5, 1), (10, 3)]))
        assert shortest_path(g, 0, 2, "euclidean").path == [0, 2]

    def test_detour_around_constraint(self):
        inst = make([(0, 0), (10, 1), (5, 3), (5, -2)], [(2, 3)])
        g = build_visibility_graph(inst)
        res = shortest_path(g, 0, 1, Metric.EUCLIDEAN)
        assert res.path == [0, 3, 1]
        assert shortest_path(g, 0, 1).hops == 2

    def test_no_path(self):
        g = build_visibility_graph(make([(0, 0), (10, 1), (5, 3), (5, -2)], [(2, 3)]))
        with pytest.raises(NoPath):
            shortest_path(g, 0, 1, vertices=[0, 1])
        with pytest.raises(NoPath):
            shortest_path(g, 0, 1, vertices=[1, 2])


class TestInducedSubgraph:
    def test_nothing_crosses(self):
        g = build_visibility_graph(make([(0, 0), (1, 10), (9, 3)]))
        sub, keep = induced_crossing_subgraph(g, 0, 1)
        assert keep == [0, 1]
        assert sub.edge_set() == {(0, 1)}

    def test_complete_graph(self):
        g = build_visibility_graph(make([(0, 0), (1, 10), (-5, 4), (6, 6), (-3, 8)]))
        sub, keep = induced_crossing_subgraph(g, 0, 1)
        assert keep == [0, 1, 2, 3, 4]
        assert sub.has_edge(0, 1)

    def test_same_endpoints(self):
        g = build_visibility_graph(make([(0, 0), (1, 10)]))
        with pytest.raises(ValueError):
            crossing_vertices(g, 0, 0)


class TestGrid:
    def test_two_rows(self):
        c = gen_grid(2)
        assert c.instance.n == 6
        assert validate(c.instance, limit=None) == []
        g = build_visibility_graph(c.instance)
        assert g.edge_set() == c.instance.constraint_set()

    @pytest.mark.parametrize("rows", [2, 3, 5, 8])
    def test_maximal_plane(self, rows):
        inst = gen_grid(rows).instance
        assert inst.m == 3 * inst.n - 3 - hull_size(inst.points)

    def test_five_rows_needs_three_hops(self):
        c = gen_grid(5)
        g = build_visibility_graph(c.instance)
        assert shortest_path(g, c.s, c.t).hops >= 3

    @pytest.mark.parametrize("rows", [5, 10])
    def test_routed_hops_at_least_half(self, rows):
        rep = ratio_report(gen_grid(rows), "vis")
        assert rep.routed_hops >= rows / 2
        assert rep.hop_ratio >= 1 and rep.length_ratio >= 1

    def test_too_small(self):
        with pytest.raises(InputError):
            gen_grid(1)


class TestTrim:
    @pytest.fixture
    def grid(self):
        c = gen_grid(6)
        return c, build_visibility_graph(c.instance)

    def test_source_only(self, grid):
        c, g = grid
        tc, keep = trim(c, g, [c.s])
        assert set(keep) == {c.s, c.t} | g.neighbors(c.s) | g.neighbors(c.t)
        assert keep[tc.s] == c.s and keep[tc.t] == c.t

    def test_constraints_between_kept_only(self, grid):
        c, g = grid
        tc, keep = trim(c, g, [c.s])
        for a, b in tc.instance.constraints:
            assert (min(keep[a], keep[b]), max(keep[a], keep[b])) in c.instance.constraint_set()

    def test_views_preserved(self):
        chk = grid_check(6)
        assert chk.views_ok and chk.replay_ok
        assert chk.trimmed_vertices <= 6 * chk.rows


class TestZigzag:
    def test_small(self):
        c = gen_zigzag(6, 10)
        assert c.instance.n == 8
        assert validate(c.instance, limit=None) == []
        pts = c.instance.points
        assert pts[c.s][1] < min(p[1] for p in pts[:6]) and pts[c.t][1] > max(p[1] for p in pts[:6])

    @pytest.mark.parametrize("n", [5, 3, 7])
    def test_bad_sizes(self, n):
        with pytest.raises(InputError):
            gen_zigzag(n, 10)

    def test_bad_eps(self):
        with pytest.raises(InputError):
            gen_zigzag(6, 10, 1, 2)

    def test_bounds_formula(self):
        b = zigzag_bounds(30, 10**6, Fraction(1, 8))
        assert b["free_upper"] == 4 * 10**6 + 14
        assert b["restricted_lower"] == 10**7
        assert math.isclose(b["ratio_target"], 10**7 / (4 * 10**6 + 14))

    @pytest.mark.parametrize("n", [6, 12, 30])
    def test_free_path_bound(self, n):
        assert zigzag_check(n, 10**6).free_ok

    def test_restricted_path_follows_zigzag(self):
        c = gen_zigzag(12, 1000)
        g = build_visibility_graph(c.instance)
        keep = crossing_vertices(g, c.s, c.t)
        hop = shortest_path(g, c.s, c.t, Metric.HOPS, keep)
        # one hop per row plus the two ends
        assert hop.hops == 12 // 3 + 1

    def test_ratio_linear_in_n(self):
        ratios = [zigzag_check(n, 10**6).ratio for n in (12, 24, 48)]
        assert ratios[1] / ratios[0] == pytest.approx(2, rel=0.05)
        assert ratios[2] / ratios[1] == pytest.approx(2, rel=0.05)

    def test_report_json(self):
        d = zigzag_check(12, 1000).to_json()
        assert {"free", "restricted", "ratio", "ok"} <= set(d)
