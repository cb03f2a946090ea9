"""Partially algebraic vector fields on R^n x R^m and partially linear maps.

A field is a tuple of ``n + m`` polynomials: the first ``n`` are the base
components, the last ``m`` the fiber components.  Brackets use the convention

    [V, W] = JW . V - JV . W

where ``JW`` is the Jacobian of W's components with respect to all variables,
so that ``[d/dx1, x1 d/du1] = d/du1``.
"""

from __future__ import annotations

from typing import Sequence

from .groebner import FreeModuleElement
from .poly import NEG_INF, GradedPolynomial, VarSplit, parse, to_rational


class PAVectorField:
    __slots__ = ("split", "components", "name")

    def __init__(self, components: Sequence[GradedPolynomial], name: str | None = None,
                 split: VarSplit | None = None):
        components = tuple(components)
        if split is None:
            if not components:
                raise ValueError("empty field needs an explicit split")
            split = components[0].split
        if len(components) != split.nvars:
            raise ValueError(f"expected {split.nvars} components, got {len(components)}")
        if any(c.split != split for c in components):
            raise ValueError("components must share the field's split")
        self.split = split
        self.components = components
        self.name = name

    @classmethod
    def from_strings(cls, texts: Sequence[str], split: VarSplit, name: str | None = None):
        return cls([parse(t, split) for t in texts], name=name, split=split)

    @classmethod
    def zero(cls, split: VarSplit, name=None):
        return cls([GradedPolynomial.zero(split)] * split.nvars, name=name, split=split)

    @classmethod
    def coordinate(cls, split: VarSplit, index: int, coeff: GradedPolynomial | None = None, name=None):
        """``coeff * d/dz_index`` (``coeff`` defaults to 1)."""
        comps = [GradedPolynomial.zero(split)] * split.nvars
        comps[index] = coeff if coeff is not None else GradedPolynomial.constant(split, 1)
        return cls(comps, name=name, split=split)

    def __repr__(self):
        label = f"{self.name}: " if self.name else ""
        return f"PAVectorField({label}[{', '.join(str(c) for c in self.components)}])"

    def __eq__(self, other):
        return isinstance(other, PAVectorField) and self.components == other.components

    def __hash__(self):
        return hash(self.components)

    def _check(self, other: "PAVectorField"):
        if other.split != self.split:
            raise ValueError(f"split mismatch: {self.split} vs {other.split}")

    def __add__(self, other):
        self._check(other)
        return PAVectorField([a + b for a, b in zip(self.components, other.components)], split=self.split)

    def __sub__(self, other):
        self._check(other)
        return PAVectorField([a - b for a, b in zip(self.components, other.components)], split=self.split)

    def __neg__(self):
        return PAVectorField([-a for a in self.components], split=self.split)

    def __mul__(self, g):
        """Multiply by a rational constant or a polynomial function."""
        return PAVectorField([a * g for a in self.components], split=self.split)

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.components)

    def jacobian(self) -> list[list[GradedPolynomial]]:
        nv = self.split.nvars
        return [[c.partial(j) for j in range(nv)] for c in self.components]

    def apply(self, f: GradedPolynomial) -> GradedPolynomial:
        """Directional derivative ``V(f)``."""
        total = GradedPolynomial.zero(self.split)
        for j, c in enumerate(self.components):
            if c:
                d = f.partial(j)
                if d:
                    total = total + c * d
        return total

    def bracket(self, other: "PAVectorField") -> "PAVectorField":
        return bracket(self, other)

    def evaluate(self, point):
        return evaluate_field(self, point)

    def fiber_degree(self):
        return fiber_degree(self)

    def as_module_element(self) -> FreeModuleElement:
        return FreeModuleElement(self.components)

    def to_json(self) -> dict:
        return {"name": self.name or "", "components": [str(c) for c in self.components]}

    @classmethod
    def from_json(cls, obj: dict, split: VarSplit) -> "PAVectorField":
        comps = obj["components"]
        if len(comps) != split.nvars:
            raise ValueError(f"field {obj.get('name')!r}: expected {split.nvars} components")
        return cls.from_strings(comps, split, name=obj.get("name") or None)


def bracket(v: PAVectorField, w: PAVectorField) -> PAVectorField:
    """Lie bracket ``[V, W] = V(W) - W(V)`` componentwise, exactly."""
    v._check(w)
    comps = [v.apply(wc) - w.apply(vc) for vc, wc in zip(v.components, w.components)]
    return PAVectorField(comps, split=v.split)


def evaluate_field(v: PAVectorField, point) -> list:
    if len(point) != v.split.nvars:
        raise ValueError(f"point has length {len(point)}, expected {v.split.nvars}")
    point = [to_rational(p) for p in point]
    return [c.eval(point) for c in v.components]


def fiber_degree(v: PAVectorField):
    return max((c.fiber_degree() for c in v.components), default=NEG_INF)


# ------------------------------------------------------- partially linear maps


def _identity_check(products, split) -> bool:
    for i, row in enumerate(products):
        for j, e in enumerate(row):
            if e != GradedPolynomial.constant(split, 1 if i == j else 0):
                return False
    return True


def _matmul(a, b, split):
    k = len(b)
    return [[sum((a[i][t] * b[t][j] for t in range(k)), GradedPolynomial.zero(split))
             for j in range(len(b[0]))] for i in range(len(a))]


class PartiallyLinearDiffeo:
    """``Phi(x, u) = (f(x), A(x) u)`` with declared polynomial inverses.

    ``f`` and ``f_inv`` are ``n`` polynomials, ``A`` and ``A_inv`` are ``m x m``
    matrices of polynomials; all live on the full split but may only involve the
    base variables.  The inverse identities are checked exactly on construction.
    """

    def __init__(self, split: VarSplit, f, f_inv, A, A_inv):
        n, m = split.n, split.m
        self.split = split
        self.f = tuple(_lift(p, split) for p in f)
        self.f_inv = tuple(_lift(p, split) for p in f_inv)
        self.A = tuple(tuple(_lift(p, split) for p in row) for row in A)
        self.A_inv = tuple(tuple(_lift(p, split) for p in row) for row in A_inv)
        if len(self.f) != n or len(self.f_inv) != n:
            raise ValueError("f and f_inv need n components")
        if len(self.A) != m or any(len(r) != m for r in self.A) or \
                len(self.A_inv) != m or any(len(r) != m for r in self.A_inv):
            raise ValueError("A and A_inv must be m x m")
        for p in self.f + self.f_inv + sum(self.A, ()) + sum(self.A_inv, ()):
            if not p.is_base_only():
                raise ValueError(f"{p} depends on fiber variables")
        xs = [GradedPolynomial.var(split, i) for i in range(n)]
        us = [GradedPolynomial.var(split, n + i) for i in range(m)]
        if [_compose_base(p, self.f_inv, us) for p in self.f] != xs:
            raise ValueError("f o f_inv is not the identity")
        if [_compose_base(p, self.f, us) for p in self.f_inv] != xs:
            raise ValueError("f_inv o f is not the identity")
        if m and not (_identity_check(_matmul(self.A, self.A_inv, split), split)
                      and _identity_check(_matmul(self.A_inv, self.A, split), split)):
            raise ValueError("A . A_inv is not the identity matrix")

    @classmethod
    def identity(cls, split: VarSplit):
        n, m = split.n, split.m
        xs = [GradedPolynomial.var(split, i) for i in range(n)]
        eye = [[GradedPolynomial.constant(split, int(i == j)) for j in range(m)] for i in range(m)]
        return cls(split, xs, xs, eye, eye)

    def components(self) -> list[GradedPolynomial]:
        n, m = self.split.n, self.split.m
        us = [GradedPolynomial.var(self.split, n + i) for i in range(m)]
        fiber = [sum((self.A[a][b] * us[b] for b in range(m)), GradedPolynomial.zero(self.split))
                 for a in range(m)]
        return list(self.f) + fiber

    def inverse_components(self) -> list[GradedPolynomial]:
        """Components of ``Phi^{-1}(x, u) = (f_inv(x), A_inv(f_inv(x)) u)``."""
        n, m = self.split.n, self.split.m
        us = [GradedPolynomial.var(self.split, n + i) for i in range(m)]
        a_inv = [[_compose_base(p, self.f_inv, us) for p in row] for row in self.A_inv]
        fiber = [sum((a_inv[a][b] * us[b] for b in range(m)), GradedPolynomial.zero(self.split))
                 for a in range(m)]
        return list(self.f_inv) + fiber

    def inverse(self) -> "PartiallyLinearDiffeo":
        us = [GradedPolynomial.var(self.split, self.split.n + i) for i in range(self.split.m)]
        a_new = [[_compose_base(p, self.f_inv, us) for p in row] for row in self.A_inv]
        a_new_inv = [[_compose_base(p, self.f_inv, us) for p in row] for row in self.A]
        return PartiallyLinearDiffeo(self.split, self.f_inv, self.f, a_new, a_new_inv)


def _lift(p, split):
    if isinstance(p, str):
        return parse(p, split)
    if isinstance(p, GradedPolynomial):
        if p.split != split:
            raise ValueError("polynomial split differs from the map's split")
        return p
    return GradedPolynomial.constant(split, p)


def _compose_base(p: GradedPolynomial, base_images, fiber_vars) -> GradedPolynomial:
    return p.substitute(list(base_images) + list(fiber_vars))


def pushforward(v: PAVectorField, phi: PartiallyLinearDiffeo) -> PAVectorField:
    """``(Phi_* V)(z) = DPhi(Phi^{-1} z) . V(Phi^{-1} z)``, exactly."""
    if v.split != phi.split:
        raise ValueError("split mismatch")
    comps = phi.components()
    inv = phi.inverse_components()
    nv = v.split.nvars
    v_pulled = [c.substitute(inv) for c in v.components]
    out = []
    for comp in comps:
        total = GradedPolynomial.zero(v.split)
        for j in range(nv):
            if v_pulled[j]:
                d = comp.partial(j)
                if d:
                    total = total + d.substitute(inv) * v_pulled[j]
        out.append(total)
    return PAVectorField(out, name=v.name, split=v.split)
