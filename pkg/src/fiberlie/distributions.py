"""Finitely generated distributions, involutive closure, ranks and D-infinity.

A distribution is a list of polynomial vector fields, viewed as generators of a
submodule of ``A^(n+m)`` with ``A = Q[x, u]``.  The involutive closure adds
brackets round by round; a bracket is kept only if it is not already in the
module, which is decided exactly by reduction against a module Gröbner basis.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Sequence

from . import linalg
from .fields import PAVectorField, bracket, evaluate_field
from .groebner import BudgetExhausted, ModuleBasis, buchberger, extend, member, reduce_counted
from .fw_sets import NONEMPTY, FwSet, fiber_nonempty
from .poly import GREVLEX, GradedPolynomial, TermOrder, VarSplit, det, to_rational

log = logging.getLogger(__name__)

RAW, CLOSED, EXHAUSTED = "raw", "closed", "budget-exhausted"

DEFAULT_MAX_DEPTH = 6
DEFAULT_GB_BUDGET = 100_000


class Distribution:
    """Generators of a module of vector fields plus closure bookkeeping.

    ``provenance[i]`` is the bracket tree that produced generator ``i``
    (e.g. ``"[V1,[V1,V2]]"``); original generators carry their own names.
    """

    def __init__(self, generators: Sequence[PAVectorField], plane_dim: int | None = None,
                 closure_state: str = RAW, bracket_depth_reached: int = 0,
                 provenance: Sequence[str] | None = None, check_plane: bool = True):
        generators = list(generators)
        if not generators:
            raise ValueError("a distribution needs at least one generator")
        split = generators[0].split
        if any(g.split != split for g in generators):
            raise ValueError("generators must share one split")
        if closure_state not in (RAW, CLOSED, EXHAUSTED):
            raise ValueError(f"unknown closure state {closure_state!r}")
        self.split = split
        self.generators = generators
        self.plane_dim = plane_dim
        self.closure_state = closure_state
        self.bracket_depth_reached = bracket_depth_reached
        self.provenance = list(provenance) if provenance is not None else [
            g.name or f"V{i + 1}" for i, g in enumerate(generators)]
        self.gb_steps = 0
        self.rank_certified = False
        if plane_dim is not None and check_plane and closure_state == RAW:
            self.rank_certified = _check_plane_field(generators, plane_dim)

    def __len__(self):
        return len(self.generators)

    def __repr__(self):
        return (f"Distribution({len(self.generators)} generators, split={self.split.n}|{self.split.m}, "
                f"state={self.closure_state})")

    def matrix(self) -> list[list[GradedPolynomial]]:
        return [list(g.components) for g in self.generators]

    def module_basis(self, budget: int | None = DEFAULT_GB_BUDGET, order: TermOrder = GREVLEX) -> ModuleBasis:
        return buchberger([g.as_module_element() for g in self.generators], order, budget)

    def contains(self, v: PAVectorField, basis: ModuleBasis | None = None) -> bool:
        basis = basis or self.module_basis(budget=None)
        return member(v.as_module_element(), basis)

    def evaluation_rank(self, point) -> int:
        return evaluation_rank(self, point)

    def to_json(self) -> dict:
        return {
            "split": [self.split.n, self.split.m],
            "plane_dim": self.plane_dim,
            "closure_state": self.closure_state,
            "bracket_depth_reached": self.bracket_depth_reached,
            "generators": [
                {"name": name, "components": [str(c) for c in g.components]}
                for name, g in zip(self.provenance, self.generators)
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Distribution":
        split = VarSplit(*obj["split"])
        gens = [PAVectorField.from_json(g, split) for g in obj["generators"]]
        return cls(gens, plane_dim=obj.get("plane_dim"), closure_state=obj.get("closure_state", RAW),
                   bracket_depth_reached=obj.get("bracket_depth_reached", 0),
                   provenance=[g.get("name") or f"V{i + 1}" for i, g in enumerate(obj["generators"])])


def _minor(matrix, rows, cols) -> GradedPolynomial:
    return det([[matrix[r][c] for c in cols] for r in rows])


def _check_plane_field(generators, d) -> bool:
    """Reject generator sets that visibly fail to have constant rank ``d``.

    Returns True when constant rank is certified (no (d+1)-minors exist or all
    vanish identically, and some d-minor is a nonzero constant).
    """
    split = generators[0].split
    nv = split.nvars
    if d < 1 or d > nv:
        raise ValueError(f"plane dimension {d} outside 1..{nv}")
    matrix = [list(g.components) for g in generators]
    k = len(generators)
    if k < d:
        raise ValueError(f"{k} generators cannot span a {d}-plane field")
    for rows in itertools.combinations(range(k), d + 1):
        for cols in itertools.combinations(range(nv), d + 1):
            if not _minor(matrix, rows, cols).is_zero():
                raise ValueError(f"generators have rank > {d} somewhere; not a {d}-plane field")
    minors = []
    for rows in itertools.combinations(range(k), d):
        for cols in itertools.combinations(range(nv), d):
            m = _minor(matrix, rows, cols)
            if m.is_constant() and not m.is_zero():
                return True
            if not m.is_zero():
                minors.append(m)
    if not minors:
        raise ValueError(f"generators have rank < {d} everywhere")
    # rank < d exactly on the common zeros of the d-minors
    basis = buchberger(minors, budget=DEFAULT_GB_BUDGET)
    if basis.is_groebner and any(g.components[0].is_constant() for g in basis.generators):
        return True
    flat = VarSplit(0, nv)
    drop = fiber_nonempty(FwSet(flat, [GradedPolynomial(flat, m.terms) for m in minors]), [])
    if drop.verdict == NONEMPTY and drop.exact:
        raise ValueError(f"rank drops below {d} at {[str(v) for v in drop.witness]}; not a plane field")
    # fall back to sampled evidence
    for s in range(1, 8):
        point = [to_rational(((i + 1) * s * 7919) % 23 - 11) / (s + 1) for i in range(nv)]
        r = linalg.rank([evaluate_field(g, point) for g in generators])
        if r < d:
            raise ValueError(f"rank drops to {r} < {d} at {point}; not a plane field")
    return False


def involutive_closure(P: Distribution, max_depth: int = DEFAULT_MAX_DEPTH,
                       gb_budget: int = DEFAULT_GB_BUDGET, order: TermOrder = GREVLEX,
                       max_degree: int | None = None) -> Distribution:
    """Close ``P`` under brackets, adding only brackets outside the current module.

    Round ``r`` brackets every pair that involves a generator added in round
    ``r - 1``.  The result is ``closed`` when a round adds nothing, and
    ``budget-exhausted`` when ``max_depth`` rounds or ``gb_budget`` reduction
    steps run out first, or a new generator would exceed ``max_degree``.
    """
    if max_depth < 0:
        raise ValueError("max_depth must be non-negative")
    gens = list(P.generators)
    names = list(P.provenance)
    used = 0

    def result(state, depth):
        out = Distribution(gens, plane_dim=P.plane_dim, closure_state=state,
                           bracket_depth_reached=depth, provenance=names, check_plane=False)
        out.gb_steps = used
        out.rank_certified = P.rank_certified
        return out

    basis = buchberger([g.as_module_element() for g in gens], order, gb_budget)
    used += basis.steps
    if not basis.is_groebner:
        return result(EXHAUSTED, 0)
    fresh = set(range(len(gens)))
    depth_reached = 0
    for depth in range(1, max_depth + 1):
        added = []
        pairs = [(i, j) for i, j in itertools.combinations(range(len(gens)), 2) if i in fresh or j in fresh]
        try:
            for i, j in pairs:
                b = bracket(gens[i], gens[j])
                if b.is_zero():
                    continue
                r, steps = reduce_counted(b.as_module_element(), basis, budget=gb_budget - used)
                used += steps
                if r.is_zero():
                    continue
                if max_degree is not None and max(c.degree() for c in b.components) > max_degree:
                    return result(EXHAUSTED, depth)
                gens.append(PAVectorField(b.components, name=f"[{names[i]},{names[j]}]", split=b.split))
                names.append(f"[{names[i]},{names[j]}]")
                added.append(len(gens) - 1)
                basis = extend(basis, [b.as_module_element()], gb_budget - used)
                used += basis.steps
                if not basis.is_groebner:
                    return result(EXHAUSTED, depth)
        except BudgetExhausted:
            used = gb_budget
            return result(EXHAUSTED, depth)
        if not added:
            return result(CLOSED, depth_reached)
        depth_reached = depth
        fresh = set(added)
        log.debug("closure round %d added %d generators", depth, len(added))
    return result(EXHAUSTED, depth_reached)


def closure_certificate(D: Distribution, budget: int | None = None) -> bool:
    """True if every pairwise bracket of generators lies in the generated module."""
    basis = D.module_basis(budget=budget)
    if not basis.is_groebner:
        return False
    return all(member(bracket(a, b).as_module_element(), basis)
               for a, b in itertools.combinations(D.generators, 2))


def same_module(D1: Distribution, D2: Distribution) -> bool:
    b1, b2 = D1.module_basis(budget=None), D2.module_basis(budget=None)
    return all(member(g.as_module_element(), b1) for g in D2.generators) and \
        all(member(g.as_module_element(), b2) for g in D1.generators)


def evaluation_rank(D: Distribution, point) -> int:
    """Exact rank of the evaluated generator matrix at a rational point."""
    rows = [evaluate_field(g, point) for g in D.generators]
    return linalg.rank(rows)


@dataclass
class RankProfile:
    points: list
    ranks: list[int]
    min_rank: int = field(init=False)
    max_rank: int = field(init=False)

    def __post_init__(self):
        self.min_rank = min(self.ranks)
        self.max_rank = max(self.ranks)

    def to_json(self) -> dict:
        return {"points": [[str(v) for v in p] for p in self.points], "ranks": self.ranks,
                "min_rank": self.min_rank, "max_rank": self.max_rank}


def rank_profile(D: Distribution, samples) -> RankProfile:
    samples = [tuple(to_rational(v) for v in p) for p in samples]
    if not samples:
        raise ValueError("need at least one sample")
    ranks = [evaluation_rank(D, p) for p in samples]
    if D.plane_dim is not None and D.closure_state == RAW:
        bad = [r for r in ranks if r != D.plane_dim]
        if bad:
            log.warning("rank %s differs from plane dimension %s", bad[0], D.plane_dim)
    return RankProfile(samples, ranks)


def _minors(matrix, size: int) -> tuple[list[GradedPolynomial], list[tuple]]:
    """Distinct nonzero ``size x size`` minors, deduplicated up to sign."""
    k = len(matrix)
    ncols = len(matrix[0]) if k else 0
    seen = set()
    out, index = [], []
    for rows in itertools.combinations(range(k), size):
        sub = [matrix[r] for r in rows]
        live = [c for c in range(ncols) if any(not row[c].is_zero() for row in sub)]
        if len(live) < size:
            continue
        for cols in itertools.combinations(live, size):
            m = _minor(matrix, rows, cols)
            if m.is_zero() or m in seen or -m in seen:
                continue
            seen.add(m)
            out.append(m)
            index.append((rows, cols))
    return out, index


def dinfty(P: Distribution, closure: Distribution) -> FwSet:
    """Rank-at-most-``d`` locus of the closure: the infinitesimal integrability domain.

    Equations are the ``(d+1)``-minors of the closure's generator matrix.  If the
    closure was truncated, the set is flagged as an outer approximation.
    """
    d = P.plane_dim if P.plane_dim is not None else closure.plane_dim
    if d is None:
        raise ValueError("plane_dim must be set to compute D-infinity")
    if closure.closure_state == RAW:
        raise ValueError("closure has not been computed")
    eqs, index = _minors(closure.matrix(), d + 1)
    s = FwSet(closure.split, eqs, outer_approximation=closure.closure_state == EXHAUSTED)
    s.provenance = [{"rows": [closure.provenance[r] for r in rows], "cols": list(cols)} for rows, cols in index]
    return s


def fiber_minors(closure: Distribution, d: int, base_point) -> list[GradedPolynomial]:
    """The D-infinity equations restricted to the fiber over ``base_point``.

    Restriction commutes with taking minors, so generators are restricted first.
    """
    matrix = [[c.fiber_restrict(base_point) for c in g.components] for g in closure.generators]
    return _minors(matrix, d + 1)[0]
