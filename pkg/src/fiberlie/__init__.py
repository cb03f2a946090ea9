"""Partially algebraic vector fields, involutive closures and fiberwise algebraic sets.

Exact polynomial algebra over the rationals on ``R^n x R^m`` (base ``x``,
fiber ``u``), module Gröbner bases, bracket closure of distributions, the
rank locus D-infinity, fiber witness search, RK4 leaf charts, and the
geodesic plane field used to scan for local affine maps and isometries.
"""

from .distributions import (
    CLOSED, EXHAUSTED, RAW, Distribution, closure_certificate, dinfty, evaluation_rank, fiber_minors,
    involutive_closure, rank_profile, same_module,
)
from .fields import PAVectorField, PartiallyLinearDiffeo, bracket, evaluate_field, fiber_degree, pushforward
from .fw_sets import (
    CERTIFIED_EMPTY, EMPTY_EVIDENCE, NONEMPTY, UNKNOWN, FiberVerdict, FwConstructible, FwSet, fiber_nonempty,
    member, projection_probe, rabinowitsch_embed,
)
from .geometry import (
    AffineChart, GrStarChart, build_constraints, gauss_lift_residual, geodesic_spray, isometry_scan,
    tautological_field, validate_tautological_field,
)
from .groebner import (
    FreeModuleElement, IdealChain, ModuleBasis, buchberger, chain_stationarity, reduce,
)
from .groebner import member as module_member
from .integrator import (
    BlowUpError, FlowSpec, build_leaf, flow, flow_invariance_check, resolvent_rank_check, verify_tangency,
)
from .poly import GREVLEX, GradedPolynomial, PolynomialParseError, TermOrder, VarSplit, parse

__version__ = "0.1.0"

__all__ = [
    "AffineChart", "BlowUpError", "CERTIFIED_EMPTY", "CLOSED", "Distribution", "EMPTY_EVIDENCE", "EXHAUSTED",
    "FiberVerdict", "FlowSpec", "FreeModuleElement", "FwConstructible", "FwSet", "GREVLEX", "GradedPolynomial",
    "GrStarChart", "IdealChain", "ModuleBasis", "NONEMPTY", "PAVectorField", "PartiallyLinearDiffeo",
    "PolynomialParseError", "RAW", "TermOrder", "UNKNOWN", "VarSplit", "bracket", "buchberger",
    "build_constraints", "build_leaf", "chain_stationarity", "closure_certificate", "dinfty", "evaluate_field",
    "evaluation_rank", "fiber_degree", "fiber_minors", "fiber_nonempty", "flow", "flow_invariance_check",
    "gauss_lift_residual", "geodesic_spray", "involutive_closure", "isometry_scan", "member", "module_member",
    "parse", "projection_probe", "pushforward", "rabinowitsch_embed", "rank_profile", "reduce",
    "resolvent_rank_check", "same_module", "tautological_field", "validate_tautological_field",
    "verify_tangency",
]
