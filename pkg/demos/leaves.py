"""Leaves of involutive distributions by composed flows, with tangency checks."""
import numpy as np

from fiberlie import VarSplit
from fiberlie.distributions import Distribution, involutive_closure
from fiberlie.fields import PAVectorField
from fiberlie.integrator import (
    build_leaf, chart_from_fields, flow_invariance_check, resolvent_rank_check, verify_tangency,
)

s = VarSplit(1, 1)
F = lambda comps, split=s: PAVectorField.from_strings(comps, split)

# {d/dx1 + u1 d/du1, u1 d/du1} is involutive: the bracket is the second field
D = involutive_closure(Distribution([F(["1", "u1"]), F(["0", "u1"])]))
chart = build_leaf(D, [0.0, 1.0], resolution=21, h=1e-3)
rep = verify_tangency(chart, D)
print("leaf grid", chart.points.shape, "max angle %.2e" % rep.max_angle, "passed:", rep.passed)
print("u1 stays positive:", bool(np.all(chart.points[..., 1] > 0)))

# the Heisenberg plane field is not involutive, so a surface swept by its two fields is not tangent
t = VarSplit(1, 2)
P = Distribution([F(["1", "0", "0"], t), F(["0", "1", "x1"], t)], plane_dim=2)
bad = verify_tangency(chart_from_fields(P, [0.0, 0.0, 0.0], [0, 1], resolution=21), P)
print("negative control max angle %.3f, passed: %s" % (bad.max_angle, bad.passed))

# flows of a generator carry the closure to itself but not P
closure = involutive_closure(P)
print("closure invariant: %.1e" % flow_invariance_check(closure, 0, [0, 0, 0], 1.0).max_angle)
print("P drifts by: %.3f" % flow_invariance_check(P, 0, [0, 0, 0], 1.0).max_angle)

# X' = A X keeps the rank of X fixed
rep = resolvent_rank_check([[0, 1], [0, 0]], [[1, 0], [0, 0]], 2.0)
print("resolvent ranks", rep.ranks, "gap ratio %.1e" % rep.min_gap_ratio)
