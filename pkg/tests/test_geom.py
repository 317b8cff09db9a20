import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from visroute.geom import (CANONICAL, CCW, COLLINEAR, CW, Frame, GeneralPositionViolation, GeometryError,
                           InputRangeError, Point, Rt3Scalar, closer_by_bisector_projection, compare_ratios,
                           cone_of, exact_sign, in_canonical_triangle, orientation, properly_intersects,
                           rotate60_cw, same_direction, squared_distance, subcone_of)

BOUND = 2**20
coord = st.integers(-BOUND, BOUND)
point = st.tuples(coord, coord)
big = st.integers(-2**40, 2**40)


def _mp_sign(a: int, b: int) -> int:
    with mpmath.workprec(256):
        v = mpmath.mpf(a) + mpmath.mpf(b) * mpmath.sqrt(3)
        return int(mpmath.sign(v))


class TestExactSign:
    @pytest.mark.parametrize("a,b,expected", [(-5, 3, 1), (0, 0, 0), (2, -1, 1), (5, -3, -1), (-2, 1, -1),
                                              (0, -7, -1), (7, 0, 1)])
    def test_examples(self, a, b, expected):
        assert exact_sign(Rt3Scalar(a, b)) == expected

    def test_rejects_non_scalar(self):
        with pytest.raises(InputRangeError):
            exact_sign(3)

    @settings(max_examples=2000)
    @given(big, big)
    def test_matches_high_precision(self, a, b):
        assert exact_sign(Rt3Scalar(a, b)) == _mp_sign(a, b)

    @given(st.integers(1, 10**6))
    def test_near_cancellation(self, k):
        # a/b close to sqrt(3): continued-fraction style pairs stress the square comparison
        b = k
        a = int(mpmath.floor(mpmath.sqrt(3) * b))
        assert exact_sign(Rt3Scalar(-a, b)) == _mp_sign(-a, b)
        assert exact_sign(Rt3Scalar(-a - 1, b)) == _mp_sign(-a - 1, b)

    def test_arithmetic(self):
        x = Rt3Scalar(1, 1) * Rt3Scalar(1, -1)
        assert x == Rt3Scalar(-2, 0)
        assert Rt3Scalar(2, 0) - 1 == Rt3Scalar(1, 0)
        assert Rt3Scalar(0, 1) > Rt3Scalar(1, 0)

    def test_compare_ratios(self):
        assert compare_ratios(Rt3Scalar(1), Rt3Scalar(2), Rt3Scalar(1), Rt3Scalar(3)) == 1
        assert compare_ratios(Rt3Scalar(-1), Rt3Scalar(-2), Rt3Scalar(1), Rt3Scalar(2)) == 0
        with pytest.raises(GeometryError):
            compare_ratios(Rt3Scalar(1), Rt3Scalar(0), Rt3Scalar(1), Rt3Scalar(1))


class TestOrientation:
    def test_examples(self):
        assert orientation((0, 0), (4, 0), (0, 4)) == CCW
        assert orientation((0, 0), (2, 2), (4, 4)) == COLLINEAR
        assert orientation((0, 0), (0, 4), (4, 0)) == CW

    @given(point, point, point)
    def test_antisymmetric(self, p, q, r):
        assert orientation(p, q, r) == -orientation(p, r, q)

    @given(point, point, point)
    def test_cyclic(self, p, q, r):
        assert orientation(p, q, r) == orientation(q, r, p)


class TestProperIntersection:
    def test_examples(self):
        assert properly_intersects(((0, 0), (4, 4)), ((0, 4), (4, 0)))
        assert not properly_intersects(((0, 0), (4, 4)), ((4, 4), (8, 1)))
        assert not properly_intersects(((0, 0), (10, 1)), ((5, 3), (5, 5)))

    def test_touching_interior_is_not_proper(self):
        # an endpoint resting on the other segment's interior
        assert not properly_intersects(((0, 0), (4, 0)), ((2, 0), (2, 3)))

    def test_collinear_overlap(self):
        assert properly_intersects(((0, 0), (4, 0)), ((2, 0), (6, 0)))
        assert not properly_intersects(((0, 0), (2, 0)), ((2, 0), (6, 0)))

    @given(point, point, point, point)
    def test_symmetric(self, a, b, c, d):
        assert properly_intersects((a, b), (c, d)) == properly_intersects((c, d), (a, b))
        assert properly_intersects((a, b), (c, d)) == properly_intersects((b, a), (d, c))

    @given(point, point, point)
    def test_shared_endpoint_never_proper(self, a, b, c):
        if orientation(a, b, c) != 0:
            assert not properly_intersects((a, b), (b, c))


class TestCones:
    @pytest.mark.parametrize("q,cone", [((1, 5), 0), ((5, 1), 1), ((1, -5), 3), ((5, -1), 2),
                                        ((-5, -1), 4), ((-5, 1), 5)])
    def test_examples(self, q, cone):
        assert cone_of((0, 0), q, CANONICAL) == cone

    def test_boundary_rejected(self):
        with pytest.raises(GeneralPositionViolation):
            cone_of((0, 0), (5, 0))

    @given(point, point)
    def test_reflection_shifts_by_three(self, apex, q):
        refl = (2 * apex[0] - q[0], 2 * apex[1] - q[1])
        try:
            c = cone_of(apex, q)
        except GeneralPositionViolation:
            return
        assert cone_of(apex, refl) == (c + 3) % 6

    def test_tilted_frame(self):
        f = Frame(2, 2)
        assert (f.dx, f.dy) == (1, 1)
        assert cone_of((0, 0), (3, 3), f) == 0
        assert cone_of((0, 0), (-3, -3), f) == 3

    def test_zero_frame_rejected(self):
        with pytest.raises(InputRangeError):
            Frame(0, 0)

    @given(st.tuples(st.integers(-50, 50), st.integers(-50, 50)).filter(lambda d: d != (0, 0)))
    def test_six_rotations_close_the_boundary_set(self, d):
        rays = Frame(*d).boundary_directions()
        for k in range(6):
            assert same_direction(rotate60_cw(rays[k]), rays[(k + 1) % 6])


class TestSubcones:
    def test_no_constraints(self):
        assert subcone_of(Point(0, 0), Point(1, 5), []) == (0,)

    def test_split(self):
        seg = [(Point(0, 0), Point(1, 8))]
        assert subcone_of(Point(0, 0), Point(-2, 6), seg) == (0,)
        assert subcone_of(Point(0, 0), Point(3, 6), seg) == (1,)
        assert subcone_of(Point(0, 0), Point(1, 8), seg) == (0, 1)

    def test_constraint_in_other_cone_ignored(self):
        seg = [(Point(0, 0), Point(8, 1))]
        assert subcone_of(Point(0, 0), Point(3, 6), seg) == (0,)

    def test_collinear_rejected(self):
        with pytest.raises(GeneralPositionViolation):
            subcone_of(Point(0, 0), Point(2, 16), [(Point(0, 0), Point(1, 8))])


class TestCanonicalTriangle:
    @pytest.mark.parametrize("v,inside", [((-1, 4), True), ((1, 12), False), ((9, 2), False)])
    def test_examples(self, v, inside):
        assert in_canonical_triangle((0, 0), (1, 10), v) is inside

    def test_far_side_rejected(self):
        with pytest.raises(GeneralPositionViolation):
            in_canonical_triangle((0, 0), (1, 10), (-1, 10))

    @settings(max_examples=500)
    @given(point, point, point)
    def test_inside_means_closer(self, u, t, v):
        if len({u, t, v}) < 3:
            return
        try:
            inside = in_canonical_triangle(u, t, v)
        except GeneralPositionViolation:
            return
        if inside:
            assert squared_distance(v, t) < squared_distance(u, t)


class TestBisectorProjection:
    def test_cone0(self):
        assert closer_by_bisector_projection((0, 0), (-1, 3), (2, 4), 0)
        assert not closer_by_bisector_projection((0, 0), (2, 7), (-3, 6), 0)

    def test_cone1_against_float_oracle(self):
        # doubled projections on the C1 bisector: sqrt(3)*x + y
        with mpmath.workprec(200):
            pa = mpmath.sqrt(3) * 4 + 1
            pb = mpmath.sqrt(3) * 1 + 4
        assert (pa < pb) is False
        assert closer_by_bisector_projection((0, 0), (4, 1), (1, 4), 1) is False

    def test_tie_rejected(self):
        with pytest.raises(GeneralPositionViolation):
            closer_by_bisector_projection((0, 0), (-1, 3), (1, 3), 0)
