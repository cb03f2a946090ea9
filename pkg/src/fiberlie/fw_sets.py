"""Fiberwise algebraic and constructible sets and their projection probes.

Emptiness of a real fiber cannot be decided by numerical search, so fiber
verdicts are tri-state.  Only the linear strategy, which solves affine fiber
systems exactly, can return ``CERTIFIED-EMPTY``.
"""

from __future__ import annotations

import csv
import io
import itertools
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from gmpy2 import mpq

from . import linalg
from .numeric import CompiledSystem
from .poly import GradedPolynomial, VarSplit, to_rational

NONEMPTY = "NONEMPTY"
EMPTY_EVIDENCE = "EMPTY-EVIDENCE"
CERTIFIED_EMPTY = "CERTIFIED-EMPTY"
UNKNOWN = "UNKNOWN"

STRATEGIES = ("auto", "linear", "search", "grid")

DEFAULT_TOLERANCE = 1e-9
RECONSTRUCTION_DENOMINATOR = 10**6
NEGATIVE_THRESHOLD = 1e-6


class FwSet:
    """Common zero locus of a list of polynomials.

    ``outer_approximation`` marks sets computed from a truncated closure.
    """

    def __init__(self, split: VarSplit, equations: Sequence[GradedPolynomial] = (),
                 outer_approximation: bool = False):
        equations = [e for e in equations]
        if any(e.split != split for e in equations):
            raise ValueError("equations must live on the set's split")
        self.split = split
        self.equations = equations
        self.outer_approximation = outer_approximation
        self.provenance: list | None = None

    def __repr__(self):
        flag = ", outer" if self.outer_approximation else ""
        return f"FwSet({len(self.equations)} equations{flag})"

    def member(self, point) -> bool:
        return member(self, point)

    def certified_empty(self) -> bool:
        """True if some equation is a nonzero constant."""
        return any(e.is_constant() and not e.is_zero() for e in self.equations)

    def intersect(self, other: "FwSet") -> "FwSet":
        if other.split != self.split:
            raise ValueError("split mismatch")
        return FwSet(self.split, self.equations + other.equations,
                     self.outer_approximation or other.outer_approximation)

    def fiber(self, base_point) -> list[GradedPolynomial]:
        return [e.fiber_restrict(base_point) for e in self.equations]

    def to_json(self) -> dict:
        return {"split": [self.split.n, self.split.m], "equations": [str(e) for e in self.equations],
                "outer_approximation": self.outer_approximation}


class FwConstructible:
    """Difference ``positive - negative`` of two fiberwise algebraic sets."""

    def __init__(self, positive: FwSet, negative: FwSet):
        if positive.split != negative.split:
            raise ValueError("split mismatch")
        self.positive = positive
        self.negative = negative

    @property
    def split(self) -> VarSplit:
        return self.positive.split

    @property
    def outer_approximation(self) -> bool:
        return self.positive.outer_approximation

    def __repr__(self):
        return f"FwConstructible({len(self.positive.equations)} equations minus {len(self.negative.equations)})"

    def member(self, point) -> bool:
        return member(self, point)

    def to_json(self) -> dict:
        return {"positive": self.positive.to_json(), "negative": self.negative.to_json()}


def _parts(S):
    if isinstance(S, FwConstructible):
        return S.positive.equations, S.negative.equations
    return S.equations, None


def member(S: FwSet | FwConstructible, point) -> bool:
    """Exact membership at a rational point."""
    if len(point) != S.split.nvars:
        raise ValueError(f"point has length {len(point)}, expected {S.split.nvars}")
    point = [to_rational(v) for v in point]
    pos, neg = _parts(S)
    if any(e.eval(point) for e in pos):
        return False
    if neg is None:
        return True
    return any(g.eval(point) for g in neg)


def rabinowitsch_embed(S: FwConstructible) -> FwSet:
    """Turn ``S1 - S2`` into an algebraic set in one more fiber variable.

    The negative equations are first combined into ``g = sum g_i^2`` (a single
    equation is used as is); the new equation is ``u_{m+1} * g - 1``.
    """
    n, m = S.split.n, S.split.m
    big = VarSplit(n, m + 1)
    mapping = list(range(n + m))
    pos = [e.rename(big, mapping) for e in S.positive.equations]
    neg = S.negative.equations
    if not neg:
        warnings.warn("constructible set has no negative part; embedding is the identity", stacklevel=2)
        return FwSet(big, pos, S.outer_approximation)
    if len(neg) == 1:
        g = neg[0]
    else:
        g = neg[0] * neg[0]
        for h in neg[1:]:
            g = g + h * h
    g = g.rename(big, mapping)
    extra = GradedPolynomial.var(big, n + m) * g - 1
    return FwSet(big, pos + [extra], S.outer_approximation)


# ------------------------------------------------------------ fiber probes


@dataclass
class FiberVerdict:
    verdict: str
    witness: list | None = None
    exact: bool = False
    residual: float | None = None
    strategy: str = ""
    attempts: int = 0
    note: str = ""

    def to_json(self) -> dict:
        if self.witness is None:
            witness = None
        elif self.exact:
            witness = [str(v) for v in self.witness]
        else:
            witness = [float(v) for v in self.witness]
        return {"verdict": self.verdict, "witness": witness, "exact": self.exact,
                "residual": None if self.residual is None else float(self.residual),
                "strategy": self.strategy, "attempts": self.attempts, "note": self.note}


def _exact_check(eqs, negs, u) -> bool:
    if any(e.eval(u) for e in eqs):
        return False
    return negs is None or any(g.eval(u) for g in negs)


def fiber_nonempty(S: FwSet | FwConstructible, base_point, strategy: str = "auto",
                   tolerance: float = DEFAULT_TOLERANCE, attempt_budget: int = 20, seed: int = 0,
                   box=None, hint=None, rng: np.random.Generator | None = None) -> FiberVerdict:
    """Decide (or gather evidence) whether the fiber of ``S`` over ``base_point`` is nonempty.

    Strategies: ``linear`` solves affine fiber systems exactly; ``search`` runs
    damped least squares from random starts; ``grid`` scans a declared box for
    ``m <= 2``; ``auto`` picks ``linear`` when the fiber is affine, else ``search``.
    ``hint`` is tried first by every strategy.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    n, m = S.split.n, S.split.m
    if len(base_point) != n:
        raise ValueError(f"base point has length {len(base_point)}, expected {n}")
    pos, neg = _parts(S)
    eqs = [e.fiber_restrict(base_point) for e in pos]
    negs = None if neg is None else [g.fiber_restrict(base_point) for g in neg]
    eqs = [e for e in eqs if not e.is_zero()]
    affine = all(e.degree() <= 1 for e in eqs)
    if strategy == "auto":
        strategy = "linear" if affine else "search"

    if hint is not None:
        h = [to_rational(v) for v in hint]
        if len(h) != m:
            raise ValueError("hint has wrong length")
        if _exact_check(eqs, negs, h):
            return FiberVerdict(NONEMPTY, h, exact=True, residual=0.0, strategy=strategy, note="hint")

    if strategy == "linear":
        if not affine:
            return FiberVerdict(UNKNOWN, strategy="linear", note="fiber equations are not affine")
        return _linear(eqs, negs, m)
    if rng is None:
        rng = np.random.default_rng(seed)
    if strategy == "search":
        return _search(eqs, negs, m, tolerance, attempt_budget, rng, hint)
    return _grid(eqs, negs, m, tolerance, box)


def _linear(eqs, negs, m) -> FiberVerdict:
    rows, rhs = [], []
    for e in eqs:
        row = [mpq(0)] * m
        for mono, c in e.items():
            if any(mono):
                row[mono.index(1)] += c
        rows.append(row)
        rhs.append(-e.constant_value())
    if rows:
        sol = linalg.solve_affine(rows, rhs)
        if sol is None:
            return FiberVerdict(CERTIFIED_EMPTY, strategy="linear", note="inconsistent affine system")
        particular, nullspace = sol
    else:
        particular, nullspace = [mpq(0)] * m, [[mpq(int(i == j)) for j in range(m)] for i in range(m)]
    if negs is None:
        return FiberVerdict(NONEMPTY, particular, exact=True, residual=0.0, strategy="linear")
    # parametrize the solution space and look at the negative equations on it
    k = len(nullspace)
    if k == 0:
        if any(g.eval(particular) for g in negs):
            return FiberVerdict(NONEMPTY, particular, exact=True, residual=0.0, strategy="linear")
        return FiberVerdict(CERTIFIED_EMPTY, strategy="linear", note="unique solution lies in the excluded set")
    param_split = VarSplit(0, k)
    ts = [GradedPolynomial.var(param_split, i) for i in range(k)]
    coords = [GradedPolynomial.constant(param_split, particular[j]) +
              sum((ts[i] * nullspace[i][j] for i in range(k)), GradedPolynomial.zero(param_split))
              for j in range(m)]
    restricted = [g.substitute(coords, param_split) for g in negs]
    live = [g for g in restricted if not g.is_zero()]
    if not live:
        return FiberVerdict(CERTIFIED_EMPTY, strategy="linear",
                            note="excluded set contains the whole affine solution space")
    deg = max(int(g.degree()) for g in live)
    # a nonzero polynomial of degree <= deg is nonzero somewhere on this finite grid
    values = sorted(range(-deg, deg + 1), key=abs)
    for t in itertools.product(values, repeat=k):
        if live[0].eval(list(t)):
            u = [c.eval(list(t)) for c in coords]
            return FiberVerdict(NONEMPTY, u, exact=True, residual=0.0, strategy="linear")
    raise AssertionError("unreachable: nonzero polynomial vanished on a full grid")


def _levenberg_marquardt(F: CompiledSystem, J: CompiledSystem, u0, m, tol, max_iter=300):
    u = np.array(u0, dtype=float)
    r = F(u)
    cost = float(r @ r)
    lam = 1e-3
    for _ in range(max_iter):
        if np.max(np.abs(r)) < tol * 1e-3:
            break
        jac = J(u).reshape(-1, m)
        grad = jac.T @ r
        a = jac.T @ jac
        try:
            step = np.linalg.solve(a + lam * np.eye(m), grad)
        except np.linalg.LinAlgError:
            lam *= 10
            continue
        trial = u - step
        rt = F(trial)
        ct = float(rt @ rt)
        if np.isfinite(ct) and ct < cost:
            u, r, cost = trial, rt, ct
            lam = max(lam / 3, 1e-12)
            if np.linalg.norm(step) < 1e-16 * (1 + np.linalg.norm(u)):
                break
        else:
            lam *= 4
            if lam > 1e12:
                break
    return u, float(np.max(np.abs(r))) if r.size else 0.0


def _reconstruct(u, bound: int = RECONSTRUCTION_DENOMINATOR) -> list:
    return [mpq(Fraction(float(v)).limit_denominator(bound)) for v in u]


def _candidates(u):
    # simplest rationals first: a coarse bound can land exactly where a fine one overshoots
    seen = []
    bound = 1
    while bound <= RECONSTRUCTION_DENOMINATOR:
        q = _reconstruct(u, bound)
        if q not in seen:
            seen.append(q)
            yield q
        bound *= 10


def _accept(eqs, negs, u, residual, tol, attempts, strategy):
    for q in _candidates(u):
        if _exact_check(eqs, negs, q):
            return FiberVerdict(NONEMPTY, q, exact=True, residual=0.0, strategy=strategy, attempts=attempts)
    if residual < tol:
        if negs is not None and max(abs(g.eval_float(list(u))) for g in negs) < NEGATIVE_THRESHOLD:
            return None
        return FiberVerdict(NONEMPTY, [float(v) for v in u], exact=False, residual=residual,
                            strategy=strategy, attempts=attempts)
    return None


def _search(eqs, negs, m, tol, budget, rng, hint) -> FiberVerdict:
    F = CompiledSystem(eqs, m)
    J = CompiledSystem([e.partial(j) for e in eqs for j in range(m)], m)
    best = np.inf
    starts = []
    if hint is not None:
        starts.append(np.array([float(v) for v in hint]))
    for attempt in range(budget):
        u0 = starts[attempt] if attempt < len(starts) else rng.normal(0.0, 2.0, size=m)
        if eqs:
            u, residual = _levenberg_marquardt(F, J, u0, m, tol)
        else:
            u, residual = u0, 0.0
        best = min(best, residual)
        verdict = _accept(eqs, negs, u, residual, tol, attempt + 1, "search")
        if verdict is not None:
            return verdict
    return FiberVerdict(EMPTY_EVIDENCE, residual=float(best), strategy="search", attempts=budget,
                        note="no witness below tolerance")


def _grid(eqs, negs, m, tol, box, resolution=64) -> FiberVerdict:
    if m > 2:
        raise ValueError("grid strategy supports at most two fiber variables")
    if box is None or len(box) != m:
        raise ValueError("grid strategy needs a box with one (lo, hi) pair per fiber variable")
    box = [(to_rational(lo), to_rational(hi)) for lo, hi in box]
    if any(lo >= hi for lo, hi in box):
        raise ValueError("invalid box")
    axes = [[lo + (hi - lo) * k / resolution for k in range(resolution + 1)] for lo, hi in box]
    # exact zeros on grid nodes first
    for node in itertools.product(*axes):
        if _exact_check(eqs, negs, list(node)):
            return FiberVerdict(NONEMPTY, list(node), exact=True, residual=0.0, strategy="grid")
    if not eqs:
        return FiberVerdict(UNKNOWN, strategy="grid", note="no admissible grid node")
    F = CompiledSystem(eqs, m)
    J = CompiledSystem([e.partial(j) for e in eqs for j in range(m)], m)
    fa = [np.array([float(v) for v in a]) for a in axes]
    mesh = np.stack(np.meshgrid(*fa, indexing="ij"), axis=-1)
    vals = F(mesh)  # shape (res+1,)*m + (k,)
    cells = itertools.product(range(resolution), repeat=m)
    for cell in cells:
        corners = [tuple(c + d for c, d in zip(cell, off)) for off in itertools.product((0, 1), repeat=m)]
        cv = np.array([vals[c] for c in corners])
        if np.all(cv.min(axis=0) <= 0) and np.all(cv.max(axis=0) >= 0):
            center = np.mean([mesh[c] for c in corners], axis=0)
            u, residual = _levenberg_marquardt(F, J, center, m, tol)
            inside = all(float(lo) - 1e-9 <= x <= float(hi) + 1e-9 for x, (lo, hi) in zip(u, box))
            if inside:
                verdict = _accept(eqs, negs, u, residual, tol, 1, "grid")
                if verdict is not None:
                    return verdict
    return FiberVerdict(UNKNOWN, strategy="grid", note="no sign change found inside the box")


# --------------------------------------------------------- projection probes


@dataclass
class ProjectionReport:
    samples: list
    verdicts: list[FiberVerdict]
    strategy: str
    seed: int
    density_threshold: float = 0.9
    outer_approximation: bool = False
    counts: dict = field(init=False)

    def __post_init__(self):
        self.counts = {v: 0 for v in (NONEMPTY, EMPTY_EVIDENCE, CERTIFIED_EMPTY, UNKNOWN)}
        for v in self.verdicts:
            self.counts[v.verdict] += 1

    @property
    def nonempty_fraction(self) -> float:
        return self.counts[NONEMPTY] / len(self.verdicts)

    @property
    def dense_looking(self) -> bool:
        return self.nonempty_fraction >= self.density_threshold

    def to_json(self) -> dict:
        return {
            "strategy": self.strategy,
            "seed": self.seed,
            "outer_approximation": self.outer_approximation,
            "counts": self.counts,
            "nonempty_fraction": self.nonempty_fraction,
            "density_threshold": self.density_threshold,
            "dense_looking": self.dense_looking,
            "samples": [dict(base_point=[str(c) for c in p], **v.to_json())
                        for p, v in zip(self.samples, self.verdicts)],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        n = len(self.samples[0]) if self.samples else 0
        writer.writerow([f"x{i + 1}" for i in range(n)] + ["verdict", "witness", "residual"])
        for p, v in zip(self.samples, self.verdicts):
            j = v.to_json()
            witness = "" if j["witness"] is None else " ".join(str(w) for w in j["witness"])
            writer.writerow([str(c) for c in p] + [v.verdict, witness,
                                                   "" if v.residual is None else repr(float(v.residual))])
        return buf.getvalue()


def projection_probe(S: FwSet | FwConstructible, base_samples, strategy: str = "auto",
                     tolerance: float = DEFAULT_TOLERANCE, budget: int = 20, seed: int = 0,
                     box=None, density_threshold: float = 0.9) -> ProjectionReport:
    """Run :func:`fiber_nonempty` over base samples.

    Sample ``i`` draws its random starts from ``default_rng([seed, i])``, so
    verdicts do not depend on evaluation order.
    """
    samples = [tuple(to_rational(v) for v in p) for p in base_samples]
    if not samples:
        raise ValueError("need at least one base sample")
    verdicts = [
        fiber_nonempty(S, p, strategy=strategy, tolerance=tolerance, attempt_budget=budget,
                       box=box, rng=np.random.default_rng([seed, i]))
        for i, p in enumerate(samples)
    ]
    return ProjectionReport(samples, verdicts, strategy, seed, density_threshold,
                            outer_approximation=S.outer_approximation)
