"""Brackets of partially algebraic fields and their behaviour under fiberwise linear maps."""
from fiberlie import VarSplit
from fiberlie.fields import PAVectorField, PartiallyLinearDiffeo, bracket, fiber_degree, pushforward

s = VarSplit(1, 2)  # coordinates x1 | u1, u2

V = PAVectorField.from_strings(["1", "0", "0"], s, name="V")
W = PAVectorField.from_strings(["0", "1", "x1"], s, name="W")
print("[V, W] =", bracket(V, W).to_json()["components"])

# fields may be arbitrary in x but stay polynomial in u
A = PAVectorField.from_strings(["x1^2", "u1*u2", "x1*u1^2"], s)
B = PAVectorField.from_strings(["u2", "1", "-u1"], s)
C = bracket(A, B)
print("fiber degrees:", fiber_degree(A), fiber_degree(B), "->", fiber_degree(C))

jacobi = bracket(A, bracket(B, V)) + bracket(B, bracket(V, A)) + bracket(V, bracket(A, B))
print("Jacobi sum is zero:", jacobi.is_zero())

# (x, u) -> (x + 1, [[1, x], [0, 2]] u), with its inverse written out by hand
phi = PartiallyLinearDiffeo(s, ["x1 + 1"], ["x1 - 1"],
                            [["1", "x1"], ["0", "2"]],
                            [["1", "-1/2*x1"], ["0", "1/2"]])
lhs = pushforward(bracket(A, B), phi)
rhs = bracket(pushforward(A, phi), pushforward(B, phi))
print("pushforward commutes with the bracket:", lhs == rhs)
print("pushed V:", pushforward(V, phi).to_json()["components"])
