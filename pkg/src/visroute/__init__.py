"""Local constant-memory routing on constrained Theta-6 and visibility graphs."""

from .geom import CANONICAL, Frame, GeneralPositionViolation, Point
from .instance import Instance, gen_fully_blocked, gen_random, load, parse, save, serialize, validate
from .router import MessageState, Mode, Outcome, Phase, Router, Trace, route, step
from .theta6 import Theta6Graph, build_theta6, local_edge_oracle
from .visibility import LocalView, VisibilityGraph, build_visibility_graph, local_view

__all__ = [
    "CANONICAL", "Frame", "GeneralPositionViolation", "Instance", "LocalView", "MessageState", "Mode",
    "Outcome", "Phase", "Point", "Router", "Theta6Graph", "Trace", "VisibilityGraph", "build_theta6",
    "build_visibility_graph", "gen_fully_blocked", "gen_random", "load", "local_edge_oracle", "local_view",
    "parse", "route", "save", "serialize", "step", "validate",
]
