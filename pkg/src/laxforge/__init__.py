"""Deformed Lax hierarchies, their flows, and reciprocal changes of variables."""

from .diffpoly import DiffPoly, Ring, change_variable, evolve, substitute, total_derivative
from .dispersionless import (
    LaurentSymbol,
    dl_derive_flow,
    dl_theorem3_transform,
    dl_theorem4_check,
    dl_theorem4_transform,
    poisson_bracket,
    symbol_mul,
)
from .errors import LaxforgeError
from .hierarchy import LaxModel, LaxSpec, broer_kaup_spec, derive_flow, verify_conservation, verify_zero_curvature
from .psdo import PsdOp, commutator, compose, power, project_geq
from .specfile import SpecFile, parse_spec, render_spec
from .transform import pushforward_check, theorem1_transform, theorem2_transform

__all__ = [
    "DiffPoly",
    "LaurentSymbol",
    "LaxModel",
    "LaxSpec",
    "LaxforgeError",
    "PsdOp",
    "Ring",
    "SpecFile",
    "broer_kaup_spec",
    "change_variable",
    "commutator",
    "compose",
    "derive_flow",
    "dl_derive_flow",
    "dl_theorem3_transform",
    "dl_theorem4_check",
    "dl_theorem4_transform",
    "evolve",
    "parse_spec",
    "poisson_bracket",
    "power",
    "project_geq",
    "pushforward_check",
    "render_spec",
    "substitute",
    "symbol_mul",
    "theorem1_transform",
    "theorem2_transform",
    "total_derivative",
    "verify_conservation",
    "verify_zero_curvature",
]
