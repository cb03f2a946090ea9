"""Which base points carry a nonempty fiber? Exact certificates where possible."""
from fractions import Fraction

from fiberlie import VarSplit, parse
from fiberlie.fw_sets import FwConstructible, FwSet, fiber_nonempty, projection_probe, rabinowitsch_embed

s = VarSplit(1, 1)
Z = lambda *texts: FwSet(s, [parse(t, s) for t in texts])
grid = [[Fraction(k, 2)] for k in range(-4, 5)]

for name in ("u1*x1 - 1", "u1^2 - x1", "u1^2 + 1"):
    rep = projection_probe(Z(name), grid, seed=0)
    marks = " ".join(v.verdict[0] for v in rep.verdicts)
    print("%-10s nonempty fraction %.2f   %s" % (name, rep.nonempty_fraction, marks))

v = fiber_nonempty(Z("u1^2 - x1"), [2])
print("\nwitness over x1 = 2:", v.witness, "exact:", v.exact, "residual:", v.residual)

# constructible sets become algebraic after adjoining one more fiber variable
S = FwConstructible(Z(), Z("u1"))
print("embedding of {u1 != 0}:", [str(e) for e in rabinowitsch_embed(S).equations])
print(rabinowitsch_embed(S).split)
