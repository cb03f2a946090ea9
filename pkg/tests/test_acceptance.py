"""Acceptance suite; one summary line per criterion is printed at the end of the run."""
import json
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from fiberlie.distributions import CLOSED, Distribution, closure_certificate, dinfty, evaluation_rank, involutive_closure
from fiberlie.fields import PAVectorField, bracket, fiber_degree, pushforward
from fiberlie.fw_sets import CERTIFIED_EMPTY, NONEMPTY, FwSet, fiber_nonempty, projection_probe
from fiberlie.geometry import (
    AffineChart, GrStarChart, build_constraints, depth_capped_fiber, fiber_components, flat_oracle,
    geodesic_projection_oracle, identity_graph_oracle, isometry_scan, tautological_field,
)
from fiberlie.groebner import FreeModuleElement, buchberger, member
from fiberlie.integrator import build_leaf, chart_from_fields, resolvent_rank_check, verify_tangency
from fiberlie.poly import GradedPolynomial, VarSplit, parse

from conftest import diffeos, fields, polys, small_rationals, splits

ONCE = settings(deadline=None, derandomize=True, database=None,
                suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much])


class Clock:
    def __init__(self, limit):
        self.limit = limit

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        if exc[0] is None:
            assert self.elapsed < self.limit, f"took {self.elapsed:.1f}s, limit {self.limit}s"


def F(texts, split):
    return PAVectorField.from_strings(texts, split)


# ----------------------------------------------------------------- criterion 1

@st.composite
def lie_triple(draw):
    s = draw(splits(max_vars=4))
    return s, draw(fields(s, 2, 3)), draw(fields(s, 2, 3)), draw(fields(s, 2, 3)), draw(small_rationals)


@pytest.mark.criterion(1)
def test_exact_lie_algebra_suite():
    seen = []

    @settings(ONCE, max_examples=220)
    @given(lie_triple())
    def check(data):
        s, u, v, w, a = data
        c = GradedPolynomial.constant(s, a)
        assert (bracket(u, v) + bracket(v, u)).is_zero()
        assert bracket(u * c + v, w) == bracket(u, w) * c + bracket(v, w)
        assert bracket(w, u * c + v) == bracket(w, u) * c + bracket(w, v)
        jac = bracket(u, bracket(v, w)) + bracket(v, bracket(w, u)) + bracket(w, bracket(u, v))
        assert jac.is_zero()
        b = bracket(u, v)
        assert isinstance(b, PAVectorField) and b.split == s
        assert all(isinstance(comp, GradedPolynomial) for comp in b.components)
        if not b.is_zero():
            assert fiber_degree(b) <= fiber_degree(u) + fiber_degree(v)
        seen.append(1)

    with Clock(30):
        check()
    assert len(seen) >= 200


# ----------------------------------------------------------------- criterion 2

@st.composite
def natural_instance(draw):
    s = draw(splits(max_vars=4))
    return draw(fields(s, 2, 3)), draw(fields(s, 2, 3)), draw(diffeos(s))


@pytest.mark.criterion(2)
def test_pushforward_naturality():
    seen = []

    @settings(ONCE, max_examples=60)
    @given(natural_instance())
    def check(data):
        v, w, phi = data
        assert pushforward(bracket(v, w), phi) == bracket(pushforward(v, phi), pushforward(w, phi))
        seen.append(1)

    with Clock(30):
        check()
    assert len(seen) >= 50


# ----------------------------------------------------------------- criterion 3

@pytest.mark.criterion(3)
def test_chow_regime_heisenberg():
    s = VarSplit(1, 2)
    with Clock(5):
        P = Distribution([F(["1", "0", "0"], s), F(["0", "1", "x1"], s)], plane_dim=2)
        D = involutive_closure(P)
        assert D.closure_state == CLOSED and D.bracket_depth_reached == 1 and len(D) == 3
        rng = np.random.default_rng(2024)
        for _ in range(100):
            z = [Fraction(int(rng.integers(-50, 51)), int(rng.integers(1, 20))) for _ in range(3)]
            assert evaluation_rank(D, z) == 3
        S = dinfty(P, D)
        assert S.certified_empty() and not S.outer_approximation
        # the only 3x3 minor is a nonzero constant
        assert len(S.equations) == 1 and S.equations[0].is_constant() and not S.equations[0].is_zero()


# ----------------------------------------------------------------- criterion 4

S11 = VarSplit(1, 1)
S12 = VarSplit(1, 2)
FROBENIUS_SUITE = [
    ("commuting", [["1", "0"], ["0", "1"]], S11, [0.0, 0.0]),
    ("half-plane", [["1", "0"], ["0", "u1"]], S11, [0.0, 1.0]),
    ("exponential", [["1", "u1"], ["0", "u1"]], S11, [0.0, 1.0]),
    ("slices", [["1", "0", "0"], ["0", "1", "0"]], S12, [0.0, 0.0, 0.5]),
    ("sheared slices", [["1", "0", "u1"], ["0", "1", "x1"]], S12, [0.0, 0.0, 0.0]),
]


@pytest.mark.criterion(4)
@pytest.mark.parametrize("name,gens,split,z0", FROBENIUS_SUITE, ids=[e[0] for e in FROBENIUS_SUITE])
def test_frobenius_regime(name, gens, split, z0):
    with Clock(60):
        P = Distribution([F(g, split) for g in gens])
        D = involutive_closure(P)
        assert D.closure_state == CLOSED and len(D) == len(P)
        assert closure_certificate(D)
        chart = build_leaf(D, z0, resolution=21, h=1e-3)
        assert chart.points.shape[:2] == (21, 21)
        rep = verify_tangency(chart, D, tolerance=1e-6)
        assert rep.passed and rep.max_angle <= 1e-6


@pytest.mark.criterion(4)
def test_frobenius_negative_control():
    with Clock(60):
        P = Distribution([F(["1", "0", "0"], S12), F(["0", "1", "x1"], S12)], plane_dim=2)
        chart = chart_from_fields(P, [0.0, 0.0, 0.0], [0, 1], resolution=21, h=1e-3)
        rep = verify_tangency(chart, P, tolerance=1e-6)
        assert not rep.passed and rep.max_angle >= 1e-2


# ----------------------------------------------------------------- criterion 5

S22 = VarSplit(2, 2)
SYMS = sympy.symbols("x1 x2 u1 u2")


def to_sympy(p):
    return sympy.Add(*[sympy.Rational(int(c.numerator), int(c.denominator))
                       * sympy.Mul(*[x**e for x, e in zip(SYMS, mono)]) for mono, c in p.items()])


@st.composite
def module_instance(draw):
    rank = draw(st.integers(1, 2))
    gens = [FreeModuleElement([draw(polys(S22, 2, 3)) for _ in range(rank)]) for _ in range(draw(st.integers(1, 3)))]
    return gens, [draw(polys(S22, 2, 3)) for _ in gens]


@pytest.mark.criterion(5)
def test_groebner_soundness():
    counts = {"combination": 0, "principal": 0, "rejected": 0}

    @settings(ONCE, max_examples=300)
    @given(module_instance())
    def combinations(inst):
        gens, coeffs = inst
        if all(g.is_zero() for g in gens):
            gens = gens + [FreeModuleElement([GradedPolynomial.constant(S22, 1)] * gens[0].rank)]
            coeffs = coeffs + [coeffs[0]]
        B = buchberger(gens, budget=None)
        h = gens[0].scale(coeffs[0])
        for g, c in zip(gens[1:], coeffs[1:]):
            h = h + g.scale(c)
        assert member(h, B)
        counts["combination"] += 1

    @settings(ONCE, max_examples=300)
    @given(polys(S22, 2, 3).filter(lambda g: not g.is_zero()), polys(S22, 3, 4), st.booleans())
    def principal(g, f, multiply):
        if multiply:
            f = f * g
        _, r = sympy.div(to_sympy(f), to_sympy(g), *SYMS)
        divisible = sympy.expand(r) == 0
        assert member(f, buchberger([g])) == divisible
        counts["principal"] += 1
        counts["rejected"] += not divisible

    with Clock(60):
        combinations()
        principal()
        B = buchberger([parse("u1^2", S11), parse("u1*x1 + 1", S11)])
        assert B.is_groebner and B.polynomials() == [parse("1", S11)]
    assert counts["combination"] + counts["principal"] >= 500
    assert counts["rejected"] >= 50


# ----------------------------------------------------------------- criterion 6

RESOLVENT_SUITE = [
    ("zero", [[0, 0], [0, 0]], np.eye(2), 2),
    ("nilpotent", [[0, 1], [0, 0]], [[1, 0], [0, 0]], 1),
    ("nilpotent full", [[0, 1], [0, 0]], [[0.3, 1.0], [2.0, -1.0]], 2),
    ("vanishing", [[1, 0], [0, 1]], np.zeros((2, 2)), 0),
    ("time dependent", [[[0, 1], 0], [0, -1]], [[1, 2], [0, 0]], 1),
    ("rotation 3x2", [[0, -1, 0], [1, 0, 0], [0, 0, [0, 0, 1]]], [[1, 0], [0, 0], [0, 1]], 2),
]


@pytest.mark.criterion(6)
def test_rank_constancy_ode():
    with Clock(10):
        for name, A, X0, rank in RESOLVENT_SUITE:
            rep = resolvent_rank_check(A, X0, 2.0, h=1e-3)
            assert rep.passed and set(rep.ranks) == {rank}, name
            assert rep.min_gap_ratio > 1e6, name
        # explicit solution X(t) = (I + tA) X0 for nilpotent A
        A = np.array([[0.0, 1.0], [0.0, 0.0]])
        X0 = np.array([[0.3, 1.0], [2.0, -1.0]])
        rep = resolvent_rank_check(A.tolist(), X0, 2.0, h=1e-3, samples=5)
        for t, sv in zip(rep.times, rep.singular_values):
            exact = np.linalg.svd((np.eye(2) + t * A) @ X0, compute_uv=False)
            assert np.allclose(sv, exact, atol=1e-10)


# ----------------------------------------------------------------- criterion 7

CHART_SUITE = [
    AffineChart(1, {"1,1,1": "x1^3"}),
    AffineChart(1, {"1,1,1": "1 - x1"}),
    AffineChart(2, {"2,1,1": "-6*x1"}),
    AffineChart(2, {"1,1,2": "x1*x2", "2,2,2": "x1^2 - 1"}),
    AffineChart(2, {"1,2,2": "x1^5"}),
    AffineChart(2, {"1,1,1": "x2", "2,1,2": "1/2", "1,2,2": "-x1"}),
]


@pytest.mark.criterion(7)
def test_flat_charts_have_vanishing_fiber_components():
    with Clock(60):
        for n in (1, 2, 3):
            assert flat_oracle(n).passed
            pair = GrStarChart(AffineChart.flat(n))
            D = tautological_field(pair)
            assert all(p.is_zero() for row in fiber_components(D, pair) for p in row)
            assert all(bracket(a, b).is_zero() for a in D.generators for b in D.generators)


@pytest.mark.criterion(7)
def test_identity_graph_is_a_zero_of_fiber_components():
    with Clock(60):
        for chart in CHART_SUITE:
            assert identity_graph_oracle(chart).passed
            pair = GrStarChart(chart)
            n = chart.dim
            comps = fiber_components(tautological_field(pair), pair)
            x = [Fraction(k + 1, 3) for k in range(n)]
            point = x + x + [Fraction(int(i == j)) for i in range(n) for j in range(n)]
            assert all(p.eval(point) == 0 for row in comps for p in row)


@pytest.mark.criterion(7)
@pytest.mark.parametrize("index", range(len(CHART_SUITE)))
def test_integral_curves_project_to_geodesics(index):
    with Clock(60):
        rep = geodesic_projection_oracle(GrStarChart(CHART_SUITE[index]), h=1e-3, tolerance=1e-6)
        assert rep.passed and max(rep.residual_x, rep.residual_y) <= 1e-6


# ----------------------------------------------------------------- criterion 8

def _pairs(n, count, seed):
    rng = np.random.default_rng(seed)
    draw = lambda: [Fraction(int(rng.integers(-6, 7)), int(rng.integers(1, 4))) for _ in range(n)]
    return [(draw(), draw()) for _ in range(count)]


@pytest.mark.criterion(8)
def test_flat_scan_is_fully_nonempty():
    with Clock(300):
        pair = GrStarChart(AffineChart.flat(2))
        rep = isometry_scan(pair, build_constraints(pair), _pairs(2, 12, 8))
        assert rep.counts() == {NONEMPTY: 12}
        assert all(p.verdict.exact and p.verdict.witness == [1, 0, 0, 1] for p in rep.pairs)


@pytest.mark.criterion(8)
def test_isotropic_flat_scan_gives_orthogonal_witnesses():
    with Clock(300):
        pair = GrStarChart(AffineChart.flat(2, metric=True))
        rep = isometry_scan(pair, build_constraints(pair, isotropy=True), _pairs(2, 8, 9))
        for p in rep.pairs:
            assert p.verdict.verdict == NONEMPTY
            if p.verdict.exact:
                U = sympy.Matrix(2, 2, [sympy.Rational(str(v)) for v in p.verdict.witness])
                assert U.T * U == sympy.eye(2)
            else:
                U = np.array([float(v) for v in p.verdict.witness]).reshape(2, 2)
                assert np.max(np.abs(U.T @ U - np.eye(2))) <= 1e-9


def strictly_larger(pair, special, generic, depth):
    """Certify Z(fiber over special) strictly contains Z(fiber over generic), symbolically."""
    closure = involutive_closure(tautological_field(pair), max_depth=depth)
    small = depth_capped_fiber(pair, *generic, closure=closure)
    big = depth_capped_fiber(pair, *special, closure=closure)
    nonzero = [f for f in small if not f.is_zero()]
    if not nonzero:
        return False
    if big:
        # containment: every equation over the special pair lies in the generic fiber ideal
        basis = buchberger(nonzero)
        if not basis.is_groebner or not all(member(f, basis) for f in big):
            return False
        # strictness: a point of the special fiber where some generic equation is nonzero
        v = fiber_nonempty(FwSet(VarSplit(0, pair.n ** 2), big), [])
        return v.verdict == NONEMPTY and v.exact and any(f.eval(v.witness) != 0 for f in nonzero)
    return True


@pytest.mark.criterion(8)
def test_high_order_vanishing_literal_example():
    # Gamma^1_11 = x1^3 on a line; see the README for why this instance cannot show a jump
    with Clock(300):
        pair = GrStarChart(AffineChart(1, {"1,1,1": "x1^3"}))
        assert strictly_larger(pair, ([0], [0]), ([Fraction(1, 3)], [Fraction(1, 5)]), depth=4)


@pytest.mark.criterion(8)
def test_high_order_vanishing_planar_analogue():
    with Clock(300):
        pair = GrStarChart(AffineChart(2, {"1,2,2": "x1^5"}))
        generic = ([Fraction(1, 3), Fraction(1, 5)], [Fraction(1, 7), Fraction(2, 3)])
        assert strictly_larger(pair, ([0, 0], [0, 0]), generic, depth=4)


# ----------------------------------------------------------------- criterion 9

GRID = [[Fraction(k, 4)] for k in range(-12, 13)]


@pytest.mark.criterion(9)
def test_projection_probe_ground_truth():
    with Clock(30):
        def Z(text):
            return FwSet(S11, [parse(text, S11)])
        rep = projection_probe(Z("u1*x1 - 1"), GRID, seed=0)
        for p, v in zip(rep.samples, rep.verdicts):
            assert (v.verdict == CERTIFIED_EMPTY) == (p[0] == 0)
            assert v.verdict in (CERTIFIED_EMPTY, NONEMPTY)
        rep = projection_probe(Z("u1^2 - x1"), GRID, seed=0)
        for p, v in zip(rep.samples, rep.verdicts):
            assert (v.verdict == NONEMPTY) == (p[0] >= 0)
        rep = projection_probe(Z("u1^2 + 1"), GRID, seed=0)
        assert rep.nonempty_fraction == 0.0


# ---------------------------------------------------------------- criterion 10

JOBS = {
    "bracket-closure": {"split": [1, 2], "fields": {"V1": ["1", "0", "0"], "V2": ["0", "1", "x1"]},
                        "distribution": {"generators": ["V1", "V2"], "plane_dim": 2}, "params": {"samples": 4}},
    "dinfty": {"split": [1, 2], "fields": {"V1": ["1", "0", "0"], "V2": ["0", "1", "x1*u2"]},
               "distribution": {"generators": ["V1", "V2"], "plane_dim": 2}, "params": {"samples": 4}},
    "leaf": {"split": [1, 1], "fields": {"A": ["1", "u1"], "B": ["0", "u1"]},
             "distribution": {"generators": ["A", "B"]}, "params": {"z0": [0, 1], "resolution": 5}},
    "groebner": {"split": [1, 1], "polynomials": ["u1^2", "u1*x1 + 1"], "params": {"reduce": ["u1"]}},
    "chain": {"split": [1, 0], "stages": [["x1"], ["x1", "x1^2"]], "params": {"samples": 3}},
    "projection-probe": {"split": [1, 2], "set": {"equations": ["u1^2 + u2^2 - x1"]},
                         "params": {"samples": 6, "sample_box": [[-1, 2]]}},
    "isometry-scan": {"chart": {"dim": 2, "metric": [["1", "0"], ["0", "1"]]},
                      "params": {"samples": 3, "isotropy": True}},
}


@pytest.mark.criterion(10)
@pytest.mark.parametrize("task", sorted(JOBS))
def test_reports_are_byte_identical(task, tmp_path):
    job = dict(JOBS[task], version=1, task=task, seed=20)
    path = tmp_path / "job.json"
    path.write_text(json.dumps(job))
    outputs = []
    for k in range(2):
        out = tmp_path / f"report{k}.json"
        proc = subprocess.run([sys.executable, "-m", "fiberlie", "--input", str(path), "--output", str(out)],
                              capture_output=True, text=True)
        assert proc.returncode in (0, 2), proc.stderr
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]
