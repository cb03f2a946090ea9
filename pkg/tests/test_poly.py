from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fiberlie.poly import (
    NEG_INF, ExponentOverflowError, GradedPolynomial, PolynomialParseError, UnknownVariableError, VarSplit,
    det, format_poly, parse, to_rational,
)

from conftest import points, polys, splits

S11 = VarSplit(1, 1)
S12 = VarSplit(1, 2)


def P(text, split=S11):
    return parse(text, split)


def test_add_examples():
    assert P("x1 + u1") + P("-u1") == P("x1")
    assert GradedPolynomial.zero(S11) + P("x1*u1") == P("x1*u1")
    assert P("1/2*x1") + P("1/3*x1") == P("5/6*x1")


def test_mul_examples():
    assert P("x1 + u1") * P("x1 - u1") == P("x1^2 - u1^2")
    assert (P("x1^3 + u1") * GradedPolynomial.zero(S11)).is_zero()
    assert P("u1 + 1") ** 2 == P("u1^2 + 2*u1 + 1")


def test_partial_examples():
    p = P("x1^2*u1")
    assert p.partial(0) == P("2*x1*u1")
    assert p.partial(1) == P("x1^2")
    assert P("7").partial(0).is_zero()
    with pytest.raises(IndexError):
        p.partial(2)


def test_eval_examples():
    assert P("x1*u1 + 1").eval([2, 3]) == 7
    assert GradedPolynomial.zero(S11).eval([5, 6]) == 0
    assert P("u1^2 - u1").eval([0, 1]) == 0
    with pytest.raises(ValueError):
        P("x1").eval([1])


def test_fiber_restrict_examples():
    r = parse("x1*u1 + u2", S12).fiber_restrict([2])
    assert r.split == VarSplit(0, 2)
    assert r == parse("2*u1 + u2", VarSplit(0, 2))
    c = P("x1^2").fiber_restrict([3])
    assert c.is_constant() and c.constant_value() == 9
    assert P("u1").fiber_restrict([Fraction(1, 7)]) == parse("u1", VarSplit(0, 1))
    with pytest.raises(ValueError):
        P("u1").fiber_restrict([1, 2])


def test_parse_examples():
    p = P("x1^2*u1 - 1/2")
    assert p.terms == {(2, 1): Fraction(1), (0, 0): Fraction(-1, 2)}
    with pytest.raises(UnknownVariableError):
        parse("u3", VarSplit(1, 2))
    assert parse("x1*(u1+u2)", S12) == parse("x1*u1 + x1*u2", S12)


def test_canonical_format():
    assert format_poly(P("-1/2 + u1*x1^2")) == "x1^2*u1 - 1/2"
    assert str(GradedPolynomial.zero(S11)) == "0"
    assert str(P("-u1")) == "-u1"


@pytest.mark.parametrize("text,pos", [("u1^", 3), ("x1 + * u1", 5), ("(x1", 3), ("x1 u1", 3), ("2/0", 0)])
def test_parse_errors_report_position(text, pos):
    with pytest.raises(PolynomialParseError) as info:
        P(text)
    assert info.value.position == pos


def test_exponent_overflow():
    with pytest.raises(PolynomialParseError) as info:
        P("x1^4294967296")
    assert info.value.position == 3
    big = P("x1^2147483647")
    with pytest.raises(ExponentOverflowError):
        big * P("x1")


def test_split_mismatch():
    with pytest.raises(ValueError):
        P("x1") + parse("x1", VarSplit(2, 0))


def test_fiber_degree_sentinel():
    assert GradedPolynomial.zero(S11).fiber_degree() == NEG_INF
    assert P("x1^5*u1^2 + u1").fiber_degree() == 2


def test_to_rational_is_exact():
    assert to_rational(0.1) == Fraction(0.1)
    assert to_rational("3/6") == Fraction(1, 2)
    assert to_rational("-0.25") == Fraction(-1, 4)


def test_det_two_by_two():
    s = VarSplit(0, 4)
    u = [GradedPolynomial.var(s, i) for i in range(4)]
    assert det([[u[0], u[1]], [u[2], u[3]]]) == parse("u1*u4 - u2*u3", s)


@st.composite
def three_polys(draw):
    s = draw(splits())
    return s, draw(polys(s)), draw(polys(s)), draw(polys(s))


@settings(max_examples=60, deadline=None)
@given(three_polys())
def test_ring_axioms(data):
    _, p, q, r = data
    assert (p + q) + r == p + (q + r)
    assert (p * q) * r == p * (q * r)
    assert p + q == q + p
    assert p * q == q * p
    assert p * (q + r) == p * q + p * r
    assert p - p == GradedPolynomial.zero(p.split)


@settings(max_examples=60, deadline=None)
@given(three_polys(), st.data())
def test_partial_is_derivation(data, extra):
    s, p, q, _ = data
    i = extra.draw(st.integers(0, s.nvars - 1))
    assert (p * q).partial(i) == p.partial(i) * q + p * q.partial(i)


@settings(max_examples=60, deadline=None)
@given(three_polys(), st.data())
def test_eval_is_ring_homomorphism(data, extra):
    s, p, q, _ = data
    z = extra.draw(points(s.nvars))
    assert (p * q).eval(z) == p.eval(z) * q.eval(z)
    assert (p + q).eval(z) == p.eval(z) + q.eval(z)


@settings(max_examples=60, deadline=None)
@given(three_polys(), st.data())
def test_fiber_restrict_commutes_with_fiber_partials(data, extra):
    s, p, _, _ = data
    if s.m == 0:
        return
    x = extra.draw(points(s.n))
    j = extra.draw(st.integers(0, s.m - 1))
    assert p.fiber_restrict(x).partial(j) == p.partial(s.n + j).fiber_restrict(x)


@settings(max_examples=100, deadline=None)
@given(three_polys())
def test_parse_format_round_trip(data):
    s, p, _, _ = data
    assert parse(str(p), s) == p
    assert str(parse(str(p), s)) == str(p)
