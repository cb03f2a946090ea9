"""Bracket closure of a plane field and the locus where its rank does not jump."""
from fractions import Fraction

from fiberlie import VarSplit
from fiberlie.distributions import Distribution, dinfty, evaluation_rank, involutive_closure, rank_profile
from fiberlie.fields import PAVectorField

s = VarSplit(1, 2)
F = lambda comps: PAVectorField.from_strings(comps, s)

# Heisenberg: one bracket already fills R^3
P = Distribution([F(["1", "0", "0"]), F(["0", "1", "x1"])], plane_dim=2)
D = involutive_closure(P)
print(D.closure_state, "after depth", D.bracket_depth_reached, "with", len(D), "generators")
print("provenance:", D.provenance)
print("rank at (1/2, 3, -1):", evaluation_rank(D, [Fraction(1, 2), 3, -1]))
S = dinfty(P, D)
print("D-infinity equations:", [str(e) for e in S.equations], "certified empty:", S.certified_empty())

# twisting the second field by u2 makes the bracket vanish on u2 = 0
P = Distribution([F(["1", "0", "0"]), F(["0", "1", "x1*u2"])], plane_dim=2)
D = involutive_closure(P)
S = dinfty(P, D)
print("\ntwisted D-infinity:", [str(e) for e in S.equations])
prof = rank_profile(D, [[1, 2, 0], [1, 2, 1], [0, 0, 0], [-3, 1, Fraction(1, 9)]])
print("ranks on/off the hyperplane:", prof.ranks)

# a bracket tower that needs two rounds; a depth cap of one leaves the answer open
P = Distribution([F(["1", "0", "0"]), F(["0", "1", "x1^2"])], plane_dim=2)
capped = involutive_closure(P, max_depth=1)
S = dinfty(P, capped)
print("\ncapped:", capped.closure_state, "outer approximation:", S.outer_approximation)
print("full:", involutive_closure(P).closure_state)
