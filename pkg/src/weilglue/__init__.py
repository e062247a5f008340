"""Weil algebras, jets on manifolds with corners, and collar gluing probed at Weil points."""

from .corners import AtlasManifold, BoxRegion, Chart, CornerModel, Transition, depth, stratum_member
from .gluing import (
    Collar,
    CollarJet,
    FaceIdentification,
    GluedManifold,
    borel_expand,
    check_gluable,
    collar_jet_of_wpoint,
    glue,
    wpoint_classify,
    wpoints_identified,
)
from .prolong import (
    RawWeilMap,
    WeilPoint,
    exponential_bijection_check,
    factorize_through_corner,
    prolong_atlas,
    prolong_chart,
    pushforward,
)
from .smoothexpr import SmoothExpr, SmoothMapTuple, compose, evaluate, parse_sexpr, taylor
from .weil import WeilAlgebra, WeilElement, augment, make_weil, mul, nilpotence_degree, tensor

__version__ = "0.1.0"

__all__ = [
    "AtlasManifold",
    "augment",
    "borel_expand",
    "BoxRegion",
    "Chart",
    "check_gluable",
    "Collar",
    "collar_jet_of_wpoint",
    "CollarJet",
    "compose",
    "CornerModel",
    "depth",
    "evaluate",
    "exponential_bijection_check",
    "FaceIdentification",
    "factorize_through_corner",
    "glue",
    "GluedManifold",
    "make_weil",
    "mul",
    "nilpotence_degree",
    "parse_sexpr",
    "prolong_atlas",
    "prolong_chart",
    "pushforward",
    "RawWeilMap",
    "SmoothExpr",
    "SmoothMapTuple",
    "stratum_member",
    "taylor",
    "tensor",
    "Transition",
    "WeilAlgebra",
    "WeilElement",
    "WeilPoint",
    "wpoint_classify",
    "wpoints_identified",
]
