"""The plane field on pairs of charts whose leaves are graphs of affine maps."""
from fractions import Fraction

from fiberlie.geometry import (
    AffineChart, GrStarChart, gauss_lift_residual, geodesic_spray, validate_tautological_field,
)

# y = (x1, x2 + x1^3) straightens the curves of this chart
sheared = AffineChart(2, {"2,1,1": "-6*x1"})
print("spray:", [str(c) for c in geodesic_spray(sheared).components])

pair = GrStarChart(AffineChart.flat(2), sheared)
rep = validate_tautological_field(pair)
for r in rep.results:
    print("%-20s %s  %s" % (r.name, "ok" if r.passed else "FAILED", r.detail))

samples = [[Fraction(1, 2), 3], [-2, Fraction(1, 7)], [0, 0]]
for f in (["x1", "x2 + x1^3"], ["x1", "x2 + x1^2"]):
    lift = gauss_lift_residual(pair, f, samples)
    print(f, "Gauss lift tangent:", lift.zero)
