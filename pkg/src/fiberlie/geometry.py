"""Affine connections with polynomial Christoffel symbols and the isometry scan.

Sign convention: geodesics solve ``x'' = -Gamma(x', x')`` (the usual one).
Replacing ``Gamma`` by ``-Gamma`` converts to the opposite convention.

On ``M x M`` the chart of ``n``-planes that are graphs of linear maps
``T_x M -> T_y M`` has base coordinates ``(x, y)`` and fiber coordinates the
matrix ``U``, stored row-major: ``U[a][b]`` is fiber variable ``a*n + b``.  In
polynomial text the target coordinates ``y1..yn`` appear as ``x(n+1)..x(2n)``.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .distributions import EXHAUSTED, Distribution, fiber_minors, involutive_closure
from .fields import PAVectorField
from .fw_sets import (
    NONEMPTY, FiberVerdict, FwConstructible, FwSet, fiber_nonempty, rabinowitsch_embed,
)
from .integrator import integrate
from .numeric import CompiledField, CompiledSystem
from .poly import GradedPolynomial, VarSplit, det, parse, to_rational

log = logging.getLogger(__name__)


def _poly(value, split: VarSplit) -> GradedPolynomial:
    if isinstance(value, GradedPolynomial):
        if value.split != split:
            raise ValueError("polynomial has the wrong split")
        return value
    if isinstance(value, str):
        return parse(value, split)
    return GradedPolynomial.constant(split, value)


class AffineChart:
    """A torsion-free connection on a chart of ``R^n`` with polynomial symbols.

    ``gamma`` maps 1-based ``(k, i, j)`` to ``Gamma^k_{ij}``; a missing entry is
    filled from its symmetric partner ``(k, j, i)`` or else set to 0.
    """

    def __init__(self, dim: int, gamma: dict | None = None, metric=None):
        if dim < 1:
            raise ValueError("dimension must be positive")
        self.dim = n = dim
        self.split = VarSplit(n, 0)
        zero = GradedPolynomial.zero(self.split)
        g = [[[zero] * n for _ in range(n)] for _ in range(n)]
        given: dict = {}
        for key, value in (gamma or {}).items():
            k, i, j = _index(key)
            if not all(1 <= v <= n for v in (k, i, j)):
                raise ValueError(f"Christoffel index {key!r} out of range 1..{n}")
            given[(k - 1, i - 1, j - 1)] = _poly(value, self.split)
        for (k, i, j), p in given.items():
            partner = given.get((k, j, i))
            if partner is not None and partner != p:
                raise ValueError(f"Gamma^{k + 1}_{i + 1}{j + 1} != Gamma^{k + 1}_{j + 1}{i + 1}; "
                                 "connection must be torsion free")
            g[k][i][j] = g[k][j][i] = p
        self.gamma = g
        self.metric = None
        if metric is not None:
            G = [[_poly(e, self.split) for e in row] for row in metric]
            if len(G) != n or any(len(row) != n for row in G):
                raise ValueError(f"metric must be {n}x{n}")
            for i, j in itertools.combinations(range(n), 2):
                if G[i][j] != G[j][i]:
                    raise ValueError("metric must be symmetric")
            self.metric = G

    @classmethod
    def flat(cls, dim: int, metric: bool = False) -> "AffineChart":
        G = [[int(i == j) for j in range(dim)] for i in range(dim)] if metric else None
        return cls(dim, {}, G)

    def is_flat_chart(self) -> bool:
        """True when all symbols vanish identically in this chart."""
        return all(p.is_zero() for plane in self.gamma for row in plane for p in row)

    def symbol(self, k: int, i: int, j: int) -> GradedPolynomial:
        """``Gamma^k_{ij}`` with 0-based indices."""
        return self.gamma[k][i][j]

    def to_json(self) -> dict:
        n = self.dim
        out = {"dim": n, "gamma": {}}
        for k, i, j in itertools.product(range(n), repeat=3):
            if i <= j and not self.gamma[k][i][j].is_zero():
                out["gamma"][f"{k + 1},{i + 1},{j + 1}"] = str(self.gamma[k][i][j])
        if self.metric is not None:
            out["metric"] = [[str(e) for e in row] for row in self.metric]
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "AffineChart":
        unknown = set(obj) - {"dim", "gamma", "metric"}
        if unknown:
            raise ValueError(f"unknown chart fields {sorted(unknown)}")
        return cls(obj["dim"], obj.get("gamma", {}), obj.get("metric"))


def _index(key) -> tuple[int, int, int]:
    if isinstance(key, str):
        parts = key.split(",")
        if len(parts) != 3:
            raise ValueError(f"Christoffel key {key!r} must look like 'k,i,j'")
        return tuple(int(p) for p in parts)
    k, i, j = key
    return int(k), int(i), int(j)


def geodesic_spray(chart: AffineChart) -> PAVectorField:
    """The spray on ``TM``: ``(x, p) -> (p, -Gamma(x)(p, p))``, split ``(n, n)``."""
    n = chart.dim
    split = VarSplit(n, n)
    lift = list(range(n))
    p = [GradedPolynomial.var(split, n + i) for i in range(n)]
    comps = list(p)
    for k in range(n):
        acc = GradedPolynomial.zero(split)
        for i, j in itertools.product(range(n), repeat=2):
            gk = chart.gamma[k][i][j]
            if not gk.is_zero():
                acc = acc - gk.rename(split, lift) * p[i] * p[j]
        comps.append(acc)
    return PAVectorField(comps, name="spray", split=split)


class GrStarChart:
    """Graph-of-linear-map chart over ``M x M`` from a source and a target chart."""

    def __init__(self, source: AffineChart, target: AffineChart | None = None):
        target = source if target is None else target
        if source.dim != target.dim:
            raise ValueError("source and target charts must have equal dimension")
        self.source, self.target = source, target
        self.n = n = source.dim
        self.split = VarSplit(2 * n, n * n)
        self._validated: dict | None = None

    @property
    def has_metric(self) -> bool:
        return self.source.metric is not None and self.target.metric is not None

    def x(self, i: int) -> GradedPolynomial:
        return GradedPolynomial.var(self.split, i)

    def y(self, i: int) -> GradedPolynomial:
        return GradedPolynomial.var(self.split, self.n + i)

    def U(self, a: int, b: int) -> GradedPolynomial:
        return GradedPolynomial.var(self.split, 2 * self.n + a * self.n + b)

    def source_poly(self, p: GradedPolynomial) -> GradedPolynomial:
        return p.rename(self.split, list(range(self.n)))

    def target_poly(self, p: GradedPolynomial) -> GradedPolynomial:
        return p.rename(self.split, [self.n + i for i in range(self.n)])

    def base_point(self, x, y) -> list:
        if len(x) != self.n or len(y) != self.n:
            raise ValueError(f"points must have length {self.n}")
        return [to_rational(v) for v in list(x) + list(y)]

    def identity_fiber(self) -> list:
        return [to_rational(int(a == b)) for a in range(self.n) for b in range(self.n)]


def tautological_field(pair: GrStarChart) -> Distribution:
    """The geodesic ``n``-plane field on the graph chart, as ``n`` generators.

    ``V_c`` moves the base by ``(e_c, U e_c)`` and the fiber by the transport
    equation ``U'_{ab} = sum_d U_{ad} G^d_{bc}(x) - sum_{d,e} G^a_{de}(y) U_{dc} U_{eb}``.
    """
    n, split = pair.n, pair.split
    gx = [[[pair.source_poly(p) for p in row] for row in plane] for plane in pair.source.gamma]
    gy = [[[pair.target_poly(p) for p in row] for row in plane] for plane in pair.target.gamma]
    zero = GradedPolynomial.zero(split)
    gens = []
    for c in range(n):
        comps = [GradedPolynomial.constant(split, int(i == c)) for i in range(n)]
        comps += [pair.U(a, c) for a in range(n)]
        for a, b in itertools.product(range(n), repeat=2):
            acc = zero
            for d in range(n):
                if not gx[d][b][c].is_zero():
                    acc = acc + pair.U(a, d) * gx[d][b][c]
            for d, e in itertools.product(range(n), repeat=2):
                if not gy[a][d][e].is_zero():
                    acc = acc - gy[a][d][e] * pair.U(d, c) * pair.U(e, b)
            comps.append(acc)
        gens.append(PAVectorField(comps, name=f"V{c + 1}", split=split))
    return Distribution(gens, plane_dim=n)


def fiber_components(D: Distribution, pair: GrStarChart) -> list[list[GradedPolynomial]]:
    return [list(g.components[2 * pair.n:]) for g in D.generators]


# ----------------------------------------------------------------- oracles


@dataclass
class OracleResult:
    name: str
    passed: bool
    detail: str = ""
    value: float | None = None

    def to_json(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail, "value": self.value}


def flat_oracle(n: int) -> OracleResult:
    """Flat charts: fiber components vanish and all generator brackets vanish, exactly."""
    pair = GrStarChart(AffineChart.flat(n))
    D = tautological_field(pair)
    fiber_zero = all(p.is_zero() for row in fiber_components(D, pair) for p in row)
    brackets_zero = all(a.bracket(b).is_zero() for a, b in itertools.combinations(D.generators, 2))
    return OracleResult("flat", fiber_zero and brackets_zero,
                        f"fiber components zero: {fiber_zero}; brackets zero: {brackets_zero}")


def identity_graph_oracle(chart: AffineChart) -> OracleResult:
    """On the diagonal with ``U = I`` the fiber components vanish identically in ``x``.

    Checked symbolically by substituting ``y = x`` and ``U = I``.
    """
    pair = GrStarChart(chart)
    n = pair.n
    D = tautological_field(pair)
    xs = VarSplit(n, 0)
    images = [GradedPolynomial.var(xs, i) for i in range(n)] * 2
    images += [GradedPolynomial.constant(xs, int(a == b)) for a in range(n) for b in range(n)]
    bad = [p for row in fiber_components(D, pair) for p in row if not p.substitute(images, xs).is_zero()]
    return OracleResult("identity-graph", not bad,
                        "all fiber components vanish at (x, x, I)" if not bad else f"{len(bad)} nonzero components")


def augmented_geodesic_field(pair: GrStarChart) -> PAVectorField:
    """Flow on ``(x, y, U, p)`` that follows ``sum_c p_c V_c`` while ``x`` runs a geodesic.

    Constant combinations of the ``V_c`` are not geodesic; the coefficients must
    be the velocity ``p`` of the source geodesic.
    """
    n = pair.n
    D = tautological_field(pair)
    big = VarSplit(2 * n + n * n, n)
    base = list(range(2 * n + n * n))
    p = [GradedPolynomial.var(big, 2 * n + n * n + i) for i in range(n)]
    comps = []
    for i in range(2 * n + n * n):
        acc = GradedPolynomial.zero(big)
        for c, g in enumerate(D.generators):
            acc = acc + g.components[i].rename(big, base) * p[c]
        comps.append(acc)
    spray = geodesic_spray(pair.source)
    for k in range(n):
        # spray variables (x, p) -> (x, p) inside the big split
        comps.append(spray.components[n + k].rename(big, list(range(n)) + [2 * n + n * n + i for i in range(n)]))
    return PAVectorField(comps, name="augmented", split=big)


def _geodesic_residual(gamma, pos, vel, acc) -> np.ndarray:
    n = len(gamma)
    system = CompiledSystem([gamma[k][i][j] for k in range(n) for i in range(n) for j in range(n)], n)
    G = system(pos).reshape(pos.shape[:-1] + (n, n, n))
    return acc + np.einsum("...kij,...i,...j->...k", G, vel, vel)


@dataclass
class GeodesicOracleReport:
    residual_x: float
    residual_y: float
    tolerance: float
    passed: bool

    def to_json(self) -> dict:
        return {"residual_x": self.residual_x, "residual_y": self.residual_y,
                "tolerance": self.tolerance, "passed": self.passed}


def geodesic_projection_oracle(pair: GrStarChart, initial_states=None, t_max: float = 0.4,
                               samples: int = 5, h: float = 1e-3, delta: float = 1e-2,
                               tolerance: float = 1e-6) -> GeodesicOracleReport:
    """Integrate integral curves of the plane field and test both projections for geodesy.

    Second derivatives of the projected curves come from five-point stencils
    of width ``delta`` around each sample time.
    """
    n = pair.n
    aug = CompiledField(augmented_geodesic_field(pair).components)
    if initial_states is None:
        initial_states = default_initial_states(n)
    states = np.atleast_2d(np.asarray(initial_states, dtype=float))
    dim = 2 * n + n * n + n
    if states.shape[1] != dim:
        raise ValueError(f"initial states need length {dim} (x, y, U, p)")
    centers = np.linspace(2 * delta, t_max - 2 * delta, samples)
    offsets = np.array([-2, -1, 0, 1, 2]) * delta
    times = (centers[:, None] + offsets[None, :]).reshape(-1)
    rows = np.repeat(states, times.size, axis=0)
    traj = integrate(aug, rows, np.tile(times, states.shape[0]), h).reshape(states.shape[0], samples, 5, dim)
    w1 = np.array([1, -8, 0, 8, -1]) / (12 * delta)
    w2 = np.array([-1, 16, -30, 16, -1]) / (12 * delta ** 2)
    out = []
    for sl, chart in ((slice(0, n), pair.source), (slice(n, 2 * n), pair.target)):
        q = traj[..., sl]
        vel = np.einsum("s,...sk->...k", w1, q)
        acc = np.einsum("s,...sk->...k", w2, q)
        res = _geodesic_residual(chart.gamma, q[..., 2, :], vel, acc)
        out.append(float(np.max(np.abs(res))))
    return GeodesicOracleReport(out[0], out[1], tolerance, max(out) <= tolerance)


def default_initial_states(n: int) -> np.ndarray:
    """A few deterministic starting states ``(x, y, U, p)`` near the origin."""
    rng = np.random.default_rng(12345)
    states = []
    for _ in range(3):
        x = rng.uniform(-0.3, 0.3, n)
        y = rng.uniform(-0.3, 0.3, n)
        U = np.eye(n) + rng.uniform(-0.2, 0.2, (n, n))
        p = rng.uniform(-0.5, 0.5, n)
        states.append(np.concatenate([x, y, U.reshape(-1), p]))
    return np.array(states)


@dataclass
class ValidationReport:
    results: list[OracleResult]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def to_json(self) -> dict:
        return {"passed": self.passed, "oracles": [r.to_json() for r in self.results]}


class ValidationError(RuntimeError):
    pass


def validate_tautological_field(pair: GrStarChart) -> ValidationReport:
    """Run the flat, identity-graph and geodesic-projection oracles for ``pair``."""
    if pair._validated is not None:
        return pair._validated
    results = [flat_oracle(pair.n), identity_graph_oracle(pair.source)]
    if pair.target is not pair.source:
        results.append(identity_graph_oracle(pair.target))
    geo = geodesic_projection_oracle(pair)
    results.append(OracleResult("geodesic-projection", geo.passed,
                                f"residuals x={geo.residual_x:.3g}, y={geo.residual_y:.3g}",
                                max(geo.residual_x, geo.residual_y)))
    pair._validated = ValidationReport(results)
    return pair._validated


# ------------------------------------------------------------- Gauss lifts


@dataclass
class GaussLiftReport:
    points: list
    residuals: list
    max_residual: float

    @property
    def zero(self) -> bool:
        return all(r == 0 for r in self.residuals)

    def to_json(self) -> dict:
        return {"points": [[str(v) for v in p] for p in self.points],
                "residuals": [str(r) for r in self.residuals], "max_residual": self.max_residual,
                "affine_at_samples": self.zero}


def gauss_lift_residual(pair: GrStarChart, f: Sequence, samples) -> GaussLiftReport:
    """Deviation of the Gauss lift ``x -> (x, f(x), Df(x))`` from the plane field.

    The lift's ``c``-th tangent is ``(e_c, Df e_c, d_c Df)``; its base part already
    agrees with ``V_c``, so the residual is the largest gap in the fiber part.
    Evaluation is exact at rational samples.
    """
    n = pair.n
    xs = VarSplit(n, 0)
    f = [_poly(p, xs) for p in f]
    if len(f) != n:
        raise ValueError(f"map needs {n} components")
    Df = [[fa.partial(b) for b in range(n)] for fa in f]
    ddf = [[[Df[a][b].partial(c) for c in range(n)] for b in range(n)] for a in range(n)]
    D = tautological_field(pair)
    fibers = fiber_components(D, pair)
    points, residuals = [], []
    for s in samples:
        x = [to_rational(v) for v in s]
        if len(x) != n:
            raise ValueError(f"sample points need length {n}")
        U = [e.eval(x) for row in Df for e in row]
        z = x + [fa.eval(x) for fa in f] + U
        worst = to_rational(0)
        for c in range(n):
            for a, b in itertools.product(range(n), repeat=2):
                gap = abs(ddf[a][b][c].eval(x) - fibers[c][a * n + b].eval(z))
                worst = max(worst, gap)
        points.append(x)
        residuals.append(worst)
    return GaussLiftReport(points, residuals, float(max(residuals, default=0)))


# ------------------------------------------------------------ constraints


@dataclass
class ConstraintPack:
    invertibility: FwConstructible
    isotropy: FwSet | None = None
    extra: list = field(default_factory=list)

    @property
    def determinant(self) -> GradedPolynomial:
        return self.invertibility.negative.equations[0]

    def equations(self) -> list[GradedPolynomial]:
        eqs = list(self.isotropy.equations) if self.isotropy is not None else []
        for s in self.extra:
            eqs.extend(s.equations)
        return eqs

    def to_json(self) -> dict:
        return {"det": str(self.determinant),
                "isotropy": None if self.isotropy is None else [str(e) for e in self.isotropy.equations],
                "extra": [[str(e) for e in s.equations] for s in self.extra]}


def build_constraints(pair: GrStarChart, isotropy: bool = False, unimodular: bool = False,
                      extra: Sequence[FwSet] = ()) -> ConstraintPack:
    """Invertibility (``det U != 0``), optional isotropy ``U^T G(y) U = G(x)``, unimodularity and extras."""
    n, split = pair.n, pair.split
    U = [[pair.U(a, b) for b in range(n)] for a in range(n)]
    d = det(U)
    inv = FwConstructible(FwSet(split, []), FwSet(split, [d]))
    iso = None
    if isotropy:
        if not pair.has_metric:
            raise ValueError("isotropy needs a metric on both charts")
        Gx = [[pair.source_poly(e) for e in row] for row in pair.source.metric]
        Gy = [[pair.target_poly(e) for e in row] for row in pair.target.metric]
        eqs = []
        for i, j in itertools.product(range(n), repeat=2):
            acc = -Gx[i][j]
            for a, b in itertools.product(range(n), repeat=2):
                if not Gy[a][b].is_zero():
                    acc = acc + U[a][i] * Gy[a][b] * U[b][j]
            eqs.append(acc)
        iso = FwSet(split, eqs)
    extras = []
    if unimodular:
        extras.append(FwSet(split, [d - 1]))
    for s in extra:
        if s.split != split:
            raise ValueError("extra constraint has the wrong split")
        extras.append(s)
    return ConstraintPack(inv, iso, extras)


# ---------------------------------------------------------- isometry scans


class _UnionFind:
    def __init__(self):
        self.parent: dict = {}

    def find(self, a):
        self.parent.setdefault(a, a)
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


@dataclass
class PairResult:
    x: tuple
    y: tuple
    verdict: FiberVerdict
    fiber_equations: int
    symmetric: bool | None = None

    def to_json(self) -> dict:
        return {"x": [str(v) for v in self.x], "y": [str(v) for v in self.y],
                "fiber_equations": self.fiber_equations, "symmetric": self.symmetric, **self.verdict.to_json()}


@dataclass
class ScanReport:
    pairs: list[PairResult]
    closure_state: str
    bracket_depth: int
    closure_generators: int
    outer_approximation: bool
    validation: ValidationReport
    strategy: str
    seed: int
    truncations: list[str] = field(default_factory=list)

    def counts(self) -> dict:
        out: dict = {}
        for p in self.pairs:
            out[p.verdict.verdict] = out.get(p.verdict.verdict, 0) + 1
        return dict(sorted(out.items()))

    def orbit_partition(self) -> list[list[tuple]]:
        """Classes of sample points joined by NONEMPTY pairs."""
        uf = _UnionFind()
        for p in self.pairs:
            uf.find(p.x)
            uf.find(p.y)
            if p.verdict.verdict == NONEMPTY:
                uf.union(p.x, p.y)
        classes: dict = {}
        for a in sorted(uf.parent):
            classes.setdefault(uf.find(a), []).append(a)
        return sorted(classes.values())

    def to_json(self) -> dict:
        return {
            "closure": {"state": self.closure_state, "bracket_depth": self.bracket_depth,
                        "generators": self.closure_generators},
            "outer_approximation": self.outer_approximation,
            "truncations": self.truncations,
            "validation": self.validation.to_json(),
            "strategy": self.strategy,
            "seed": self.seed,
            "counts": self.counts(),
            "pairs": [p.to_json() for p in self.pairs],
            "orbit_partition": [[[str(v) for v in pt] for pt in cls] for cls in self.orbit_partition()],
        }


def _inverse_witness_check(equations, det_poly, witness, tol: float = 1e-6) -> bool:
    n = int(round(len(witness) ** 0.5))
    U = np.array([float(v) for v in witness]).reshape(n, n)
    if abs(np.linalg.det(U)) < 1e-12:
        return False
    Ui = list(np.linalg.inv(U).reshape(-1))
    if abs(det_poly.eval_float(Ui)) < 1e-12:
        return False
    return max((abs(e.eval_float(Ui)) for e in equations), default=0.0) <= tol


def isometry_scan(pair: GrStarChart, constraints: ConstraintPack, pair_samples, max_depth: int = 4,
                  gb_budget: int = 100_000, strategy: str = "auto", tolerance: float = 1e-9,
                  seed: int = 0, attempt_budget: int = 20, embed: bool = False,
                  check_symmetry: bool = True) -> ScanReport:
    """Evidence for local affine (or isometric) maps sending ``x`` to ``y``.

    For each sample pair the fiber of ``D-infinity`` of the closed plane field,
    cut by the constraints, is searched for a matrix ``U``; ``det U = 0`` is
    excluded by filtering witnesses, or by an extra variable when ``embed``.
    """
    validation = validate_tautological_field(pair)
    if not validation.passed:
        raise ValidationError(f"tautological field failed validation: {validation.to_json()}")
    P = tautological_field(pair)
    closure = involutive_closure(P, max_depth=max_depth, gb_budget=gb_budget)
    truncated = closure.closure_state == EXHAUSTED
    truncations = []
    if truncated:
        truncations.append(f"involutive closure stopped at depth {closure.bracket_depth_reached} "
                           f"(max_depth={max_depth}, gb_budget={gb_budget}); D-infinity is an outer approximation")
    n = pair.n
    fsplit = VarSplit(0, n * n)
    results = []
    for i, (x, y) in enumerate(pair_samples):
        base = pair.base_point(x, y)
        eqs = fiber_minors(closure, n, base)
        eqs += [e.fiber_restrict(base) for e in constraints.equations()]
        eqs = [e for e in eqs if not e.is_zero()]
        neg = constraints.determinant.fiber_restrict(base)
        S = FwConstructible(FwSet(fsplit, eqs, truncated), FwSet(fsplit, [neg]))
        rng = np.random.default_rng([seed, i])
        if embed:
            E = rabinowitsch_embed(S)
            v = fiber_nonempty(E, [], strategy=strategy, tolerance=tolerance, attempt_budget=attempt_budget,
                               rng=rng, hint=pair.identity_fiber() + [1])
            if v.witness is not None:
                v.witness = v.witness[:-1]
        else:
            v = fiber_nonempty(S, [], strategy=strategy, tolerance=tolerance, attempt_budget=attempt_budget,
                               rng=rng, hint=pair.identity_fiber())
        res = PairResult(tuple(base[:n]), tuple(base[n:]), v, len(eqs))
        if check_symmetry and v.verdict == NONEMPTY and v.witness is not None:
            back = pair.base_point(y, x)
            beqs = fiber_minors(closure, n, back) + [e.fiber_restrict(back) for e in constraints.equations()]
            res.symmetric = bool(_inverse_witness_check(beqs, constraints.determinant.fiber_restrict(back), v.witness))
        results.append(res)
    return ScanReport(results, closure.closure_state, closure.bracket_depth_reached, len(closure.generators),
                      truncated, validation, strategy, seed, truncations)


def depth_capped_fiber(pair: GrStarChart, x, y, max_depth: int = 4, gb_budget: int = 100_000,
                       closure: Distribution | None = None) -> list[GradedPolynomial]:
    """Equations of the depth-capped D-infinity fiber over ``(x, y)`` (polynomials in ``U``)."""
    if closure is None:
        closure = involutive_closure(tautological_field(pair), max_depth=max_depth, gb_budget=gb_budget)
    return fiber_minors(closure, pair.n, pair.base_point(x, y))


__all__ = [
    "AffineChart", "ConstraintPack", "GaussLiftReport", "GeodesicOracleReport", "GrStarChart", "OracleResult",
    "PairResult", "ScanReport", "ValidationError", "ValidationReport", "augmented_geodesic_field",
    "build_constraints", "default_initial_states", "depth_capped_fiber", "flat_oracle", "gauss_lift_residual",
    "geodesic_projection_oracle", "geodesic_spray", "identity_graph_oracle", "isometry_scan",
    "tautological_field", "validate_tautological_field",
]
