from fractions import Fraction

import pytest
from hypothesis import strategies as st

from fiberlie.fields import PAVectorField, PartiallyLinearDiffeo
from fiberlie.poly import GradedPolynomial, VarSplit

small_rationals = st.builds(Fraction, st.integers(-5, 5), st.integers(1, 4))


@st.composite
def splits(draw, max_vars=6):
    total = draw(st.integers(1, max_vars))
    n = draw(st.integers(0, total))
    return VarSplit(n, total - n)


@st.composite
def polys(draw, split, max_degree=4, max_terms=5):
    terms = {}
    for _ in range(draw(st.integers(0, max_terms))):
        deg = draw(st.integers(0, max_degree))
        mono = [0] * split.nvars
        for _ in range(deg):
            mono[draw(st.integers(0, split.nvars - 1))] += 1
        terms[tuple(mono)] = draw(small_rationals)
    return GradedPolynomial(split, terms)


@st.composite
def fields(draw, split, max_degree=2, max_terms=3):
    comps = [draw(polys(split, max_degree, max_terms)) for _ in range(split.nvars)]
    return PAVectorField(comps, split=split)


@st.composite
def points(draw, length):
    return [draw(small_rationals) for _ in range(length)]


def _mat(a, b, split):
    k = len(b)
    zero = GradedPolynomial.zero(split)
    return [[sum((a[i][t] * b[t][j] for t in range(k)), zero) for j in range(len(b[0]))] for i in range(len(a))]


@st.composite
def diffeos(draw, split):
    """Random partially linear map: triangular shear on the base, elementary row ops on the fiber."""
    n, m = split.n, split.m
    base = VarSplit(n, 0) if n else None
    xs = [GradedPolynomial.var(split, i) for i in range(n)]
    us = [GradedPolynomial.var(split, n + j) for j in range(m)]
    f, f_inv = [], []
    for i in range(n):
        scale = draw(st.sampled_from([Fraction(1), Fraction(-1), Fraction(2), Fraction(1, 3)]))
        shift = GradedPolynomial.constant(split, draw(small_rationals))
        if i:
            lower = VarSplit(i, 0)
            q = draw(polys(lower, 2, 2)).substitute(xs[:i], split)
        else:
            q = GradedPolynomial.zero(split)
        f.append(xs[i] * GradedPolynomial.constant(split, scale) + q + shift)
        # invert the triangular shear one coordinate at a time
        images = f_inv + xs[i:] + us
        f_inv.append((xs[i] - q.substitute(images) - shift) * GradedPolynomial.constant(split, 1 / scale))
    one = GradedPolynomial.constant(split, 1)
    zero = GradedPolynomial.zero(split)
    A = [[one if a == b else zero for b in range(m)] for a in range(m)]
    A_inv = [row[:] for row in A]
    for _ in range(draw(st.integers(0, 2)) if m > 1 else 0):
        a, b = draw(st.sampled_from([(a, b) for a in range(m) for b in range(m) if a != b]))
        p = draw(polys(base, 1, 2)).substitute(xs, split) if n else GradedPolynomial.constant(split, draw(small_rationals))
        E = [[one if r == c else (p if (r, c) == (a, b) else zero) for c in range(m)] for r in range(m)]
        E_inv = [[one if r == c else (-p if (r, c) == (a, b) else zero) for c in range(m)] for r in range(m)]
        A, A_inv = _mat(A, E, split), _mat(E_inv, A_inv, split)
    if m:
        c = draw(st.sampled_from([Fraction(2), Fraction(-1, 2), Fraction(3)]))
        A = [[e * GradedPolynomial.constant(split, c) for e in row] for row in A]
        A_inv = [[e * GradedPolynomial.constant(split, 1 / c) for e in row] for row in A_inv]
    return PartiallyLinearDiffeo(split, f, f_inv, A, A_inv)


# ----------------------------------------------------------- criterion report

_criteria: dict[str, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(k): acceptance criterion the test belongs to")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    key = getattr(report, "criterion", None)
    if key is not None:
        _criteria.setdefault(key, []).append((report.nodeid.split("::")[-1], report.outcome))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result().criterion = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_criteria, key=lambda k: int(str(k).rstrip("abcd"))):
        runs = _criteria[key]
        ok = all(outcome == "passed" for _, outcome in runs)
        failed = [name for name, outcome in runs if outcome != "passed"]
        line = f"criterion {key}: {'PASS' if ok else 'FAIL'}"
        if failed:
            line += f" (failing: {', '.join(failed)})"
        terminalreporter.write_line(line)
