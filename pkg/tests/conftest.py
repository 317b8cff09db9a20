from __future__ import annotations

from functools import lru_cache

import pytest

from visroute.instance import Instance, gen_random
from visroute.theta6 import build_theta6
from visroute.visibility import build_visibility_graph


@lru_cache(maxsize=None)
def random_case(n: int, seed: int, density: float = 0.3):
    """A generated instance with its visibility and Theta-6 graphs, cached per session."""
    inst = gen_random(n, seed, density)
    vis = build_visibility_graph(inst)
    return inst, vis, build_theta6(inst, vis)


def make(points, constraints=()) -> Instance:
    return Instance(tuple(points), tuple(constraints))


@pytest.fixture
def case20():
    return random_case(20, 1)
