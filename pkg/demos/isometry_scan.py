"""Scanning pairs of points for local affine or isometric identifications."""
from fractions import Fraction

import numpy as np

from fiberlie.distributions import involutive_closure
from fiberlie.geometry import (
    AffineChart, GrStarChart, build_constraints, depth_capped_fiber, isometry_scan, tautological_field,
)

rng = np.random.default_rng(4)
pairs = [([Fraction(int(a), 2) for a in rng.integers(-4, 5, 2)],
          [Fraction(int(a), 2) for a in rng.integers(-4, 5, 2)]) for _ in range(5)]

flat = GrStarChart(AffineChart.flat(2, metric=True))
rep = isometry_scan(flat, build_constraints(flat), pairs)
print("affine scan:", rep.counts(), "witnesses:", {" ".join(map(str, p.verdict.witness)) for p in rep.pairs})
rep = isometry_scan(flat, build_constraints(flat, isotropy=True), pairs)
for p in rep.pairs[:2]:
    U = np.array([float(w) for w in p.verdict.witness]).reshape(2, 2)
    print("isometric witness", U.round(6).tolist(), "|U^T U - I| = %.1e" % np.abs(U.T @ U - np.eye(2)).max())

# a connection flat to high order at the origin: the depth-capped fiber is
# unconstrained there and cut out by many equations at a generic pair
pair = GrStarChart(AffineChart(2, {"1,2,2": "x1^5"}))
closure = involutive_closure(tautological_field(pair), max_depth=4)
print("\nclosure:", len(closure), "generators,", closure.closure_state)
origin = depth_capped_fiber(pair, [0, 0], [0, 0], closure=closure)
generic = depth_capped_fiber(pair, [Fraction(1, 3), Fraction(1, 5)], [Fraction(1, 7), Fraction(2, 3)], closure=closure)
print("fiber equations over the origin:", len(origin), " over a generic pair:", len(generic))

# on a line there is nothing to bracket, so no point is special
line = GrStarChart(AffineChart(1, {"1,1,1": "x1^3"}))
print("line chart:", len(depth_capped_fiber(line, [0], [0])), len(depth_capped_fiber(line, [Fraction(1, 3)], [Fraction(1, 5)])))
