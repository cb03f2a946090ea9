"""Buchberger's algorithm for ideals and for submodules of free modules ``A^l``.

Elements of ``A^l`` are stored internally as dicts ``{(position, monomial):
coefficient}``.  The default order is position-over-term with grevlex on
monomials.  Every computation carries a step budget: when it runs out the
result is returned flagged ``is_groebner=False`` rather than raising.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from gmpy2 import mpq

from .poly import (
    GREVLEX,
    GradedPolynomial,
    TermOrder,
    VarSplit,
    mono_div,
    mono_divides,
    mono_lcm,
    to_rational,
)


class BudgetExhausted(RuntimeError):
    pass


class FreeModuleElement:
    """Element of ``A^l``: ``l`` polynomials sharing one split."""

    __slots__ = ("components",)

    def __init__(self, components: Sequence[GradedPolynomial]):
        components = tuple(components)
        if not components:
            raise ValueError("module element needs at least one component")
        split = components[0].split
        if any(c.split != split for c in components):
            raise ValueError("components must share one split")
        self.components = components

    @property
    def rank(self) -> int:
        return len(self.components)

    @property
    def split(self) -> VarSplit:
        return self.components[0].split

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.components)

    def __eq__(self, other):
        return isinstance(other, FreeModuleElement) and self.components == other.components

    def __hash__(self):
        return hash(self.components)

    def __repr__(self):
        return "FreeModuleElement(" + ", ".join(str(c) for c in self.components) + ")"

    def __add__(self, other: "FreeModuleElement"):
        _check_rank(self, other)
        return FreeModuleElement([a + b for a, b in zip(self.components, other.components)])

    def __sub__(self, other: "FreeModuleElement"):
        _check_rank(self, other)
        return FreeModuleElement([a - b for a, b in zip(self.components, other.components)])

    def scale(self, g: GradedPolynomial) -> "FreeModuleElement":
        return FreeModuleElement([g * c for c in self.components])


def _check_rank(a: FreeModuleElement, b: FreeModuleElement):
    if a.rank != b.rank:
        raise ValueError(f"rank mismatch: {a.rank} vs {b.rank}")
    if a.split != b.split:
        raise ValueError("split mismatch")


def as_element(f) -> FreeModuleElement:
    """Accept a polynomial (rank-1 element) or a FreeModuleElement."""
    if isinstance(f, GradedPolynomial):
        return FreeModuleElement([f])
    if isinstance(f, FreeModuleElement):
        return f
    return FreeModuleElement(list(f))


def _to_vec(f: FreeModuleElement) -> dict:
    return {(pos, mono): c for pos, comp in enumerate(f.components) for mono, c in comp.items()}


def _from_vec(vec: dict, rank: int, split: VarSplit) -> FreeModuleElement:
    comps: list[dict] = [{} for _ in range(rank)]
    for (pos, mono), c in vec.items():
        comps[pos][mono] = c
    return FreeModuleElement([GradedPolynomial._raw(split, d) for d in comps])


def _axpy(target: dict, coeff, mono: tuple, source: dict):
    """target -= coeff * mono * source, in place."""
    for (pos, m), c in source.items():
        key = (pos, tuple(i + j for i, j in zip(m, mono)))
        v = target.get(key, 0) - coeff * c
        if v:
            target[key] = v
        else:
            target.pop(key, None)


class _Counter:
    def __init__(self, budget: int | None):
        self.budget = budget
        self.steps = 0

    def tick(self):
        self.steps += 1
        if self.budget is not None and self.steps > self.budget:
            raise BudgetExhausted(f"reduction budget of {self.budget} steps exhausted")


def _lead(vec: dict, order: TermOrder):
    key = order.heap_key
    return min(vec, key=lambda t: key(t[0], t[1]))


class _Reducer:
    """Division by a fixed list of vectors with known leading terms."""

    def __init__(self, order: TermOrder):
        self.order = order
        self.vecs: list[dict] = []
        self.leads: list[tuple] = []
        self.lead_inv: list = []
        self.by_pos: dict[int, list[int]] = {}

    def add(self, vec: dict) -> int:
        lt = _lead(vec, self.order)
        idx = len(self.vecs)
        self.vecs.append(vec)
        self.leads.append(lt)
        self.lead_inv.append(1 / vec[lt])
        self.by_pos.setdefault(lt[0], []).append(idx)
        return idx

    def find_divisor(self, pos: int, mono: tuple, active=None):
        for i in self.by_pos.get(pos, ()):
            if active is not None and i not in active:
                continue
            if mono_divides(self.leads[i][1], mono):
                return i
        return None

    def reduce(self, vec: dict, counter: _Counter, active=None) -> dict:
        """Full reduction; terms are visited largest first through a heap."""
        hk = self.order.heap_key
        p = dict(vec)
        heap = [(hk(pos, mono), (pos, mono)) for pos, mono in p]
        heapq.heapify(heap)
        queued = set(p)
        r: dict = {}
        while heap:
            lt = heapq.heappop(heap)[1]
            queued.discard(lt)
            c = p.get(lt)
            if c is None:
                continue
            i = self.find_divisor(lt[0], lt[1], active)
            if i is None:
                r[lt] = c
                del p[lt]
                continue
            counter.tick()
            shift = mono_div(lt[1], self.leads[i][1])
            coeff = c * self.lead_inv[i]
            for (pos, m), gc in self.vecs[i].items():
                key = (pos, tuple(a + b for a, b in zip(m, shift)))
                v = p.get(key, 0) - coeff * gc
                if v:
                    p[key] = v
                    if key not in queued:
                        queued.add(key)
                        heapq.heappush(heap, (hk(*key), key))
                else:
                    p.pop(key, None)
        return r


@dataclass
class ModuleBasis:
    """Generators of a submodule of ``A^l`` together with their order."""

    generators: tuple
    order: TermOrder = GREVLEX
    is_groebner: bool = False
    rank: int = 1
    split: VarSplit | None = None
    steps: int = 0
    _reducer: _Reducer | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.generators = tuple(self.generators)
        if self.generators:
            self.rank = self.generators[0].rank
            self.split = self.generators[0].split
        if self._reducer is None:
            self._reducer = _Reducer(self.order)
            for g in self.generators:
                self._reducer.add(_to_vec(g))

    def __len__(self):
        return len(self.generators)

    def leading_terms(self) -> list[tuple]:
        return list(self._reducer.leads)

    def polynomials(self) -> list[GradedPolynomial]:
        """Ideal case: the generators as plain polynomials."""
        if self.rank != 1:
            raise ValueError("not an ideal basis")
        return [g.components[0] for g in self.generators]


def _monic(vec: dict, order: TermOrder) -> dict:
    lt = _lead(vec, order)
    inv = 1 / vec[lt]
    return {k: v * inv for k, v in vec.items()}


def _check_gens(gens) -> tuple[int, VarSplit]:
    if not gens:
        raise ValueError("need at least one generator")
    rank, split = gens[0].rank, gens[0].split
    for g in gens:
        if g.rank != rank:
            raise ValueError(f"rank mismatch: {g.rank} vs {rank}")
        if g.split != split:
            raise ValueError("split mismatch among generators")
    return rank, split


def buchberger(
    gens: Iterable,
    order: TermOrder = GREVLEX,
    budget: int | None = 100_000,
) -> ModuleBasis:
    """Reduced Gröbner basis of the module generated by ``gens``.

    ``budget`` bounds the number of elementary reduction steps.  If it runs out,
    the partial basis computed so far is returned with ``is_groebner=False``.
    """
    gens = [as_element(g) for g in gens]
    rank, split = _check_gens(gens)
    return _complete(_Reducer(order), [], gens, order, budget, rank, split)


def extend(basis: ModuleBasis, gens: Iterable, budget: int | None = 100_000) -> ModuleBasis:
    """Gröbner basis of ``basis`` plus ``gens``, reusing the finished pairs of ``basis``.

    ``basis`` must be a completed Gröbner basis; only pairs involving new
    elements are formed.
    """
    if not basis.is_groebner:
        raise ValueError("extend needs a completed Gröbner basis")
    gens = [as_element(g) for g in gens]
    rank, split = _check_gens(list(basis.generators) + gens)
    red = _Reducer(basis.order)
    for g in basis.generators:
        red.add(_to_vec(g))
    return _complete(red, list(range(len(red.vecs))), gens, basis.order, budget, rank, split)


def _complete(red: _Reducer, done: list[int], gens, order, budget, rank, split) -> ModuleBasis:
    counter = _Counter(budget)
    mk = order.mono_key
    heap: list = []
    pending: set[tuple[int, int]] = set()
    complete = True

    def add_generator(vec):
        vec = _monic(vec, order)
        k = red.add(vec)
        pos, lm = red.leads[k]
        for i in red.by_pos[pos]:
            if i != k:
                pending.add((i, k))
                # normal selection: smallest lcm first, ties by index
                heapq.heappush(heap, (mk(mono_lcm(red.leads[i][1], lm)), i, k))

    try:
        for g in gens:
            vec = _to_vec(g)
            if not vec:
                continue
            vec = red.reduce(vec, counter)
            if vec:
                add_generator(vec)

        while heap:
            _, i, j = heapq.heappop(heap)
            pending.discard((i, j))
            li, lj = red.leads[i][1], red.leads[j][1]
            lcm = mono_lcm(li, lj)
            if rank == 1 and all(a == 0 or b == 0 for a, b in zip(li, lj)):
                continue  # coprime leading monomials
            if _chain_criterion(red, pending, i, j, lcm):
                continue
            s = {}
            _axpy(s, -1, mono_div(lcm, li), red.vecs[i])
            _axpy(s, 1, mono_div(lcm, lj), red.vecs[j])
            counter.tick()
            if not s:
                continue
            s = red.reduce(s, counter)
            if s:
                add_generator(s)
    except BudgetExhausted:
        complete = False

    vecs = red.vecs
    if complete:
        vecs = _reduce_basis(red, order, counter)
    elems = [_from_vec(v, rank, split) for v in vecs]
    return ModuleBasis(elems, order, is_groebner=complete, steps=counter.steps) if elems else \
        ModuleBasis((), order, is_groebner=complete, rank=rank, split=split, steps=counter.steps)


def _chain_criterion(red: _Reducer, pending: set, i: int, j: int, lcm: tuple) -> bool:
    pos = red.leads[i][0]
    for k in red.by_pos[pos]:
        if k in (i, j):
            continue
        if not mono_divides(red.leads[k][1], lcm):
            continue
        if (min(i, k), max(i, k)) in pending or (min(j, k), max(j, k)) in pending:
            continue
        return True
    return False


def _reduce_basis(red: _Reducer, order: TermOrder, counter: _Counter) -> list[dict]:
    # minimalize: drop generators whose leading term is divisible by another's
    n = len(red.vecs)
    keep = []
    for i in range(n):
        pi, mi = red.leads[i]
        redundant = False
        for j in range(n):
            if j == i or red.leads[j][0] != pi or not mono_divides(red.leads[j][1], mi):
                continue
            if red.leads[j][1] != mi or j < i:
                redundant = True
                break
        if not redundant:
            keep.append(i)
    # interreduce tails
    counter.budget = None
    out = []
    active = set(keep)
    for i in keep:
        active.discard(i)
        vec = red.reduce(red.vecs[i], counter, active=active)
        active.add(i)
        out.append(_monic(vec, order))
    key = order.heap_key
    out.sort(key=lambda v: key(*_lead(v, order)))
    return out


def reduce(f, basis: ModuleBasis, budget: int | None = None) -> FreeModuleElement:
    """Normal form of ``f``: no term is divisible by a leading term of ``basis``."""
    return reduce_counted(f, basis, budget)[0]


def reduce_counted(f, basis: ModuleBasis, budget: int | None = None) -> tuple[FreeModuleElement, int]:
    """Like :func:`reduce`, also returning the number of reduction steps used."""
    f = as_element(f)
    if basis.generators and f.rank != basis.rank:
        raise ValueError(f"rank mismatch: {f.rank} vs {basis.rank}")
    counter = _Counter(budget)
    r = basis._reducer.reduce(_to_vec(f), counter)
    return _from_vec(r, f.rank, f.split), counter.steps


def member(f, basis: ModuleBasis) -> bool:
    """Exact submodule membership; ``basis`` must be a Gröbner basis."""
    if not basis.is_groebner:
        raise ValueError("membership needs a completed Gröbner basis")
    return reduce(f, basis).is_zero()


# ------------------------------------------------------------ ideal chains


@dataclass
class IdealChain:
    """Increasing chain of polynomial ideals over a base-only split."""

    stages: list

    def __post_init__(self):
        if not self.stages:
            raise ValueError("empty chain")
        self.stages = [[g for g in stage] for stage in self.stages]
        splits = {g.split for stage in self.stages for g in stage}
        if len(splits) > 1:
            raise ValueError("all stage generators must share one split")
        for stage in self.stages:
            for g in stage:
                if not g.is_base_only():
                    raise ValueError(f"chain generator {g} involves fiber variables")
        for k in range(len(self.stages) - 1):
            later = set(self.stages[k + 1])
            missing = [g for g in self.stages[k] if not g.is_zero() and g not in later]
            if missing:
                raise ValueError(f"stage {k + 1} generator {missing[0]} not carried into stage {k + 2}")


@dataclass
class SampleStationarity:
    point: tuple
    classes: list[str]
    stationary_index: int
    all_trivial: bool
    unit_radius_certified: list[bool]


@dataclass
class StationarityReport:
    global_index: int
    samples: list[SampleStationarity]
    radius: object

    @property
    def trivial_samples(self) -> list[tuple]:
        return [s.point for s in self.samples if s.all_trivial]

    def to_json(self) -> dict:
        return {
            "global_stationarity_index": self.global_index,
            "neighborhood_radius": str(self.radius),
            "samples": [
                {
                    "point": [str(v) for v in s.point],
                    "classes": s.classes,
                    "stationarity_index": s.stationary_index,
                    "all_trivial": s.all_trivial,
                    "unit_radius_certified": s.unit_radius_certified,
                }
                for s in self.samples
            ],
            "trivial_sample_count": len(self.trivial_samples),
        }


def _nonvanishing_on_box(g: GradedPolynomial, point, radius) -> bool:
    """Certify ``g != 0`` on the sup-norm ball around ``point`` via a gradient bound."""
    value = abs(g.eval(point))
    if not value:
        return False
    bound = mpq(0)
    for i in range(g.split.nvars):
        d = g.partial(i)
        for mono, c in d.items():
            t = abs(c)
            for v, e in zip(point, mono):
                if e:
                    t *= (abs(v) + radius) ** e
            bound += t
    return value > bound * radius


def chain_stationarity(chain: IdealChain, samples: Sequence, neighborhood_radius=mpq(1, 100),
                       budget: int | None = 100_000) -> StationarityReport:
    """Classify each stage at each sample and locate where the chain stops growing.

    A stage is ``"unit"`` at ``y`` if a generator is nonzero at ``y``, ``"zero"`` if
    all generators are the zero polynomial, and ``"nontrivial"`` otherwise.
    """
    if not samples:
        raise ValueError("need at least one sample")
    radius = to_rational(neighborhood_radius)
    if radius <= 0:
        raise ValueError("neighborhood radius must be positive")
    stages = chain.stages
    nonzero_stages = [[g for g in st if not g.is_zero()] for st in stages]

    # global index: first j whose ideal contains every later generator
    global_index = len(stages)
    bases: dict[int, ModuleBasis] = {}
    for j in range(len(stages)):
        later = [g for st in nonzero_stages[j + 1:] for g in st]
        if not nonzero_stages[j]:
            if not later:
                global_index = j + 1
                break
            continue
        basis = bases.setdefault(j, buchberger(nonzero_stages[j], budget=budget))
        if not basis.is_groebner:
            continue
        if all(member(g, basis) for g in later):
            global_index = j + 1
            break

    reports = []
    for y in samples:
        y = tuple(to_rational(v) for v in y)
        classes, certified = [], []
        for st in nonzero_stages:
            if not st:
                classes.append("zero")
                certified.append(False)
                continue
            witness = next((g for g in st if g.eval(y)), None)
            if witness is None:
                classes.append("nontrivial")
                certified.append(False)
            else:
                classes.append("unit")
                certified.append(_nonvanishing_on_box(witness, y, radius))
        first_unit = next((k + 1 for k, c in enumerate(classes) if c == "unit"), len(stages))
        reports.append(SampleStationarity(
            point=y,
            classes=classes,
            stationary_index=min(global_index, first_unit),
            all_trivial=all(c != "nontrivial" for c in classes),
            unit_radius_certified=certified,
        ))
    return StationarityReport(global_index, reports, radius)
