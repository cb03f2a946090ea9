"""Exact sparse multivariate polynomials over Q with a base/fiber variable split.

Variables are ordered ``x1..xn, u1..um``.  A monomial is a plain tuple of
``n + m`` non-negative exponents; a polynomial maps monomials to nonzero
rational coefficients (``gmpy2.mpq``).  Base coefficients are restricted to
polynomials in ``x``, so every bracket and closure computation built on top of
this module is exact.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from gmpy2 import mpq

Rational = type(mpq(0))

#: Largest exponent allowed for a single variable (fits a signed 32-bit int).
MAX_EXPONENT = 2**31 - 1

#: Sentinel degree of the zero polynomial.
NEG_INF = float("-inf")

_ZERO = mpq(0)
_ONE = mpq(1)


class ExponentOverflowError(OverflowError):
    """An exponent left the fixed-width range."""


class PolynomialParseError(ValueError):
    """Syntax error in a polynomial string.  ``position`` is a 0-based offset."""

    def __init__(self, message: str, text: str, position: int):
        self.message = message
        self.text = text
        self.position = position
        super().__init__(f"{message} at position {position}: {text!r}")


class UnknownVariableError(PolynomialParseError):
    pass


def to_rational(value) -> Rational:
    """Convert ints, Fractions, mpq, exact decimal strings or ``a/b`` strings.

    Floats are converted exactly (binary value), never rounded.
    """
    if isinstance(value, Rational):
        return value
    if isinstance(value, str):
        value = value.strip()
        if not re.fullmatch(r"[+-]?\d+(/\d+)?|[+-]?\d*\.\d+([eE][+-]?\d+)?", value):
            raise ValueError(f"not a rational literal: {value!r}")
        if "/" in value and int(value.split("/")[1]) == 0:
            raise ZeroDivisionError(f"zero denominator in {value!r}")
    return mpq(value)


@dataclass(frozen=True)
class VarSplit:
    """Number of base variables ``n`` and fiber variables ``m``."""

    n: int
    m: int

    def __post_init__(self):
        if self.n < 0 or self.m < 0 or self.n + self.m < 1:
            raise ValueError(f"invalid split (n={self.n}, m={self.m})")

    @property
    def nvars(self) -> int:
        return self.n + self.m

    def names(self) -> list[str]:
        return [f"x{i + 1}" for i in range(self.n)] + [f"u{i + 1}" for i in range(self.m)]

    def index_of(self, name: str) -> int:
        match = re.fullmatch(r"([xu])([1-9]\d*)", name)
        if match:
            k = int(match.group(2))
            if match.group(1) == "x" and k <= self.n:
                return k - 1
            if match.group(1) == "u" and k <= self.m:
                return self.n + k - 1
        raise KeyError(name)


# ---------------------------------------------------------------- monomials


def mono_mul(a: tuple, b: tuple) -> tuple:
    out = tuple(i + j for i, j in zip(a, b))
    if any(e > MAX_EXPONENT for e in out):
        raise ExponentOverflowError("exponent exceeds MAX_EXPONENT")
    return out


def mono_divides(a: tuple, b: tuple) -> bool:
    """True if ``a`` divides ``b``."""
    return all(i <= j for i, j in zip(a, b))


def mono_div(a: tuple, b: tuple) -> tuple:
    return tuple(i - j for i, j in zip(a, b))


def mono_lcm(a: tuple, b: tuple) -> tuple:
    return tuple(max(i, j) for i, j in zip(a, b))


def grevlex_key(mono: tuple):
    return (sum(mono), tuple(-e for e in reversed(mono)))


def lex_key(mono: tuple):
    return mono


@dataclass(frozen=True)
class TermOrder:
    """Monomial order plus the position strategy used for module elements.

    ``position="pot"`` compares component index first (lower index is
    larger), ``"top"`` compares monomials first.
    """

    kind: str = "grevlex"
    position: str = "pot"

    def __post_init__(self):
        if self.kind not in ("grevlex", "lex"):
            raise ValueError(f"unknown monomial order {self.kind!r}")
        if self.position not in ("pot", "top"):
            raise ValueError(f"unknown position strategy {self.position!r}")

    @property
    def mono_key(self) -> Callable:
        return grevlex_key if self.kind == "grevlex" else lex_key

    def module_key(self, pos: int, mono: tuple):
        if self.position == "pot":
            return (-pos, self.mono_key(mono))
        return (self.mono_key(mono), -pos)

    def heap_key(self, pos: int, mono: tuple):
        """Sort key that is smallest for the largest term (for ``heapq``)."""
        if self.kind == "grevlex":
            mk = (-sum(mono), mono[::-1])
        else:
            mk = tuple(-e for e in mono)
        if self.position == "pot":
            return (pos, mk)
        return (mk, pos)


GREVLEX = TermOrder("grevlex", "pot")


# --------------------------------------------------------------- polynomial


class GradedPolynomial:
    """Immutable polynomial in ``x1..xn, u1..um`` with rational coefficients."""

    __slots__ = ("split", "_terms", "_hash")

    def __init__(self, split: VarSplit, terms: Mapping[tuple, object] | None = None):
        self.split = split
        clean = {}
        nv = split.nvars
        for mono, c in (terms or {}).items():
            mono = tuple(int(e) for e in mono)
            if len(mono) != nv:
                raise ValueError(f"monomial {mono} has wrong length for {split}")
            if any(e < 0 for e in mono):
                raise ValueError(f"negative exponent in {mono}")
            if any(e > MAX_EXPONENT for e in mono):
                raise ExponentOverflowError("exponent exceeds MAX_EXPONENT")
            c = to_rational(c)
            if c:
                clean[mono] = clean.get(mono, _ZERO) + c
                if not clean[mono]:
                    del clean[mono]
        self._terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, split: VarSplit, terms: dict) -> "GradedPolynomial":
        # trusted constructor: terms already canonical
        obj = cls.__new__(cls)
        obj.split = split
        obj._terms = terms
        obj._hash = None
        return obj

    # construction helpers
    @classmethod
    def zero(cls, split: VarSplit) -> "GradedPolynomial":
        return cls._raw(split, {})

    @classmethod
    def constant(cls, split: VarSplit, c) -> "GradedPolynomial":
        c = to_rational(c)
        return cls._raw(split, {(0,) * split.nvars: c} if c else {})

    @classmethod
    def var(cls, split: VarSplit, index: int) -> "GradedPolynomial":
        if not 0 <= index < split.nvars:
            raise IndexError(f"variable index {index} out of range for {split}")
        mono = tuple(1 if i == index else 0 for i in range(split.nvars))
        return cls._raw(split, {mono: _ONE})

    @classmethod
    def monomial(cls, split: VarSplit, mono: tuple, c=1) -> "GradedPolynomial":
        return cls(split, {mono: c})

    @classmethod
    def parse(cls, text: str, split: VarSplit) -> "GradedPolynomial":
        return parse(text, split)

    # basic protocol
    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self) -> Iterator[tuple[tuple, Rational]]:
        return iter(self._terms.items())

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(not any(m) for m in self._terms)

    def constant_value(self) -> Rational:
        return self._terms.get((0,) * self.split.nvars, _ZERO)

    def coefficient(self, mono: tuple) -> Rational:
        return self._terms.get(tuple(mono), _ZERO)

    def __eq__(self, other):
        if isinstance(other, GradedPolynomial):
            return self.split == other.split and self._terms == other._terms
        if isinstance(other, (int, Rational)) or hasattr(other, "denominator"):
            return self._terms == ({(0,) * self.split.nvars: to_rational(other)} if other else {})
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.split, frozenset(self._terms.items())))
        return self._hash

    def __repr__(self):
        return f"GradedPolynomial({self.split.n}|{self.split.m}, {format_poly(self)!r})"

    def __str__(self):
        return format_poly(self)

    # arithmetic
    def _coerce(self, other) -> "GradedPolynomial":
        if isinstance(other, GradedPolynomial):
            if other.split != self.split:
                raise ValueError(f"split mismatch: {self.split} vs {other.split}")
            return other
        return GradedPolynomial.constant(self.split, other)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self._terms)
        for mono, c in other._terms.items():
            s = out.get(mono, _ZERO) + c
            if s:
                out[mono] = s
            else:
                out.pop(mono, None)
        return GradedPolynomial._raw(self.split, out)

    __radd__ = __add__

    def __neg__(self):
        return GradedPolynomial._raw(self.split, {m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def scale(self, c) -> "GradedPolynomial":
        c = to_rational(c)
        if not c:
            return GradedPolynomial.zero(self.split)
        return GradedPolynomial._raw(self.split, {m: v * c for m, v in self._terms.items()})

    def __mul__(self, other):
        if not isinstance(other, GradedPolynomial):
            return self.scale(other)
        other = self._coerce(other)
        out: dict = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                mono = tuple(i + j for i, j in zip(m1, m2))
                s = out.get(mono, _ZERO) + c1 * c2
                if s:
                    out[mono] = s
                else:
                    del out[mono]
        for mono in out:
            if max(mono, default=0) > MAX_EXPONENT:
                raise ExponentOverflowError("exponent exceeds MAX_EXPONENT")
        return GradedPolynomial._raw(self.split, out)

    def __rmul__(self, other):
        return self.scale(other)

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only non-negative integer powers")
        result = GradedPolynomial.constant(self.split, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def mul_term(self, mono: tuple, c) -> "GradedPolynomial":
        """Multiply by the single term ``c * mono``."""
        c = to_rational(c)
        if not c:
            return GradedPolynomial.zero(self.split)
        return GradedPolynomial._raw(
            self.split, {mono_mul(m, mono): v * c for m, v in self._terms.items()}
        )

    # degrees
    def degree(self):
        return max((sum(m) for m in self._terms), default=NEG_INF)

    def fiber_degree(self):
        n = self.split.n
        return max((sum(m[n:]) for m in self._terms), default=NEG_INF)

    def base_degree(self):
        n = self.split.n
        return max((sum(m[:n]) for m in self._terms), default=NEG_INF)

    def is_base_only(self) -> bool:
        n = self.split.n
        return all(not any(m[n:]) for m in self._terms)

    def sorted_terms(self, order: TermOrder = GREVLEX) -> list[tuple[tuple, Rational]]:
        """Terms in descending order."""
        key = order.mono_key
        return sorted(self._terms.items(), key=lambda t: key(t[0]), reverse=True)

    def leading_term(self, order: TermOrder = GREVLEX) -> tuple[tuple, Rational]:
        if not self._terms:
            raise ValueError("zero polynomial has no leading term")
        key = order.mono_key
        mono = max(self._terms, key=key)
        return mono, self._terms[mono]

    # calculus and evaluation
    def partial(self, index: int) -> "GradedPolynomial":
        if not 0 <= index < self.split.nvars:
            raise IndexError(f"variable index {index} out of range for {self.split}")
        out = {}
        for mono, c in self._terms.items():
            e = mono[index]
            if e:
                out[mono[:index] + (e - 1,) + mono[index + 1:]] = c * e
        return GradedPolynomial._raw(self.split, out)

    def eval(self, point: Sequence) -> Rational:
        """Exact value at a rational point of length ``n + m``."""
        if len(point) != self.split.nvars:
            raise ValueError(f"point has length {len(point)}, expected {self.split.nvars}")
        point = [to_rational(v) for v in point]
        powers: dict = {}
        total = _ZERO
        for mono, c in self._terms.items():
            acc = c
            for i, e in enumerate(mono):
                if e:
                    key = (i, e)
                    p = powers.get(key)
                    if p is None:
                        p = powers[key] = point[i] ** e
                    acc *= p
            total += acc
        return total

    __call__ = eval

    def eval_float(self, point: Sequence[float]) -> float:
        total = 0.0
        for mono, c in self._terms.items():
            acc = float(c)
            for i, e in enumerate(mono):
                if e:
                    acc *= point[i] ** e
            total += acc
        return total

    def substitute(self, images: Sequence["GradedPolynomial"], split: VarSplit | None = None):
        """Compose: replace variable ``i`` by ``images[i]`` (all in one target split)."""
        if len(images) != self.split.nvars:
            raise ValueError("need one image per variable")
        if split is None:
            split = images[0].split if images else self.split
        for im in images:
            if im.split != split:
                raise ValueError("images must share a split")
        cache: dict = {}

        def power(i, e):
            key = (i, e)
            if key not in cache:
                cache[key] = images[i] ** e
            return cache[key]

        total = GradedPolynomial.zero(split)
        for mono, c in self._terms.items():
            term = GradedPolynomial.constant(split, c)
            for i, e in enumerate(mono):
                if e:
                    term = term * power(i, e)
            total = total + term
        return total

    def fiber_restrict(self, base_point: Sequence) -> "GradedPolynomial":
        """Substitute the base variables; the result lives on split ``(0, m)``."""
        n, m = self.split.n, self.split.m
        if len(base_point) != n:
            raise ValueError(f"base point has length {len(base_point)}, expected {n}")
        if m == 0:
            raise ValueError("fiber restriction needs m >= 1")
        base_point = [to_rational(v) for v in base_point]
        out: dict = {}
        for mono, c in self._terms.items():
            v = c
            for i in range(n):
                if mono[i]:
                    v *= base_point[i] ** mono[i]
            if v:
                key = mono[n:]
                s = out.get(key, _ZERO) + v
                if s:
                    out[key] = s
                else:
                    del out[key]
        return GradedPolynomial._raw(VarSplit(0, m), out)

    def variables(self) -> set[int]:
        return {i for mono in self._terms for i, e in enumerate(mono) if e}

    def is_affine_in(self, indices: Iterable[int]) -> bool:
        idx = list(indices)
        return all(sum(mono[i] for i in idx) <= 1 for mono in self._terms)

    def rename(self, split: VarSplit, mapping: Sequence[int]) -> "GradedPolynomial":
        """Move variable ``i`` to position ``mapping[i]`` of a (larger) split."""
        out = {}
        for mono, c in self._terms.items():
            new = [0] * split.nvars
            for i, e in enumerate(mono):
                if e:
                    new[mapping[i]] += e
            out[tuple(new)] = c
        return GradedPolynomial._raw(split, out)

    def to_float_arrays(self):
        """(exponents, coefficients) as lists, for numerical compilation."""
        monos = list(self._terms)
        return monos, [float(self._terms[m]) for m in monos]


# ------------------------------------------------------------ text formats


def _format_coeff(c: Rational) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def format_poly(p: GradedPolynomial) -> str:
    """Canonical text: grevlex-descending terms, e.g. ``x1^2*u1 - 1/2``."""
    if p.is_zero():
        return "0"
    names = p.split.names()
    parts = []
    for k, (mono, c) in enumerate(p.sorted_terms()):
        factors = [n if e == 1 else f"{n}^{e}" for n, e in zip(names, mono) if e]
        mag = abs(c)
        if not factors:
            body = _format_coeff(mag)
        elif mag == 1:
            body = "*".join(factors)
        else:
            body = _format_coeff(mag) + "*" + "*".join(factors)
        if k == 0:
            parts.append(("-" if c < 0 else "") + body)
        else:
            parts.append((" - " if c < 0 else " + ") + body)
    return "".join(parts)


_TOKEN = re.compile(r"\s*(?:(?P<num>\d+(?:\s*/\s*\d+)?)|(?P<var>[A-Za-z_]\w*)|(?P<op>[-+*^()]))")


def _tokenize(text: str):
    pos = 0
    tokens = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        match = _TOKEN.match(text, pos)
        if not match:
            start = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise PolynomialParseError(f"unexpected character {text[start]!r}", text, start)
        start = match.start(match.lastgroup)
        kind = match.lastgroup
        tokens.append((kind, match.group(kind), start))
        pos = match.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, split: VarSplit):
        self.text = text
        self.split = split
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        return PolynomialParseError(message, self.text, tok[2])

    def parse(self) -> GradedPolynomial:
        if self.peek()[0] == "end":
            raise self.error("empty expression")
        p = self.expr()
        if self.peek()[0] != "end":
            raise self.error(f"unexpected {self.peek()[1]!r}")
        return p

    # expr := unary (('+'|'-') unary)*
    def expr(self):
        p = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            q = self.unary()
            p = p + q if op == "+" else p - q
        return p

    # unary := ('+'|'-') unary | term
    def unary(self):
        if self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            q = self.unary()
            return q if op == "+" else -q
        return self.term()

    # term := power ('*' power)*
    def term(self):
        p = self.power()
        while self.peek() [0] == "op" and self.peek()[1] == "*":
            self.take()
            p = p * self.power()
        return p

    # power := atom ('^' integer)*
    def power(self):
        p = self.atom()
        while self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            tok = self.take()
            if tok[0] != "num" or "/" in tok[1]:
                raise self.error("exponent must be a non-negative integer literal", tok)
            k = int(tok[1])
            if k > MAX_EXPONENT or (k and p.degree() * k > MAX_EXPONENT):
                raise self.error("exponent overflow", tok)
            p = p**k
        return p

    def atom(self):
        tok = self.take()
        kind, value, _ = tok
        if kind == "num":
            if "/" in value:
                a, b = (s.strip() for s in value.split("/"))
                if int(b) == 0:
                    raise self.error("zero denominator", tok)
                return GradedPolynomial.constant(self.split, mpq(int(a), int(b)))
            return GradedPolynomial.constant(self.split, int(value))
        if kind == "var":
            try:
                idx = self.split.index_of(value)
            except KeyError:
                raise UnknownVariableError(f"unknown variable {value!r}", self.text, tok[2]) from None
            return GradedPolynomial.var(self.split, idx)
        if kind == "op" and value == "(":
            p = self.expr()
            close = self.take()
            if close[1] != ")":
                raise self.error("expected ')'", close)
            return p
        if kind == "end":
            raise self.error("unexpected end of input", tok)
        raise self.error(f"unexpected {value!r}", tok)


def parse(text: str, split: VarSplit) -> GradedPolynomial:
    """Parse the polynomial grammar (``+ - * ^``, parentheses, ``a/b`` literals)."""
    return _Parser(text, split).parse()


def polys(split: VarSplit, *texts: str) -> list[GradedPolynomial]:
    return [parse(t, split) for t in texts]


def det(matrix: Sequence[Sequence[GradedPolynomial]]) -> GradedPolynomial:
    """Determinant by Laplace expansion along the sparsest row (small sizes only)."""
    k = len(matrix)
    if k == 0:
        raise ValueError("empty matrix")
    if any(len(row) != k for row in matrix):
        raise ValueError("matrix is not square")
    if k == 1:
        return matrix[0][0]
    if k == 2:
        return matrix[0][0] * matrix[1][1] - matrix[0][1] * matrix[1][0]
    r = min(range(k), key=lambda i: sum(1 for e in matrix[i] if e))
    split = matrix[0][0].split
    total = GradedPolynomial.zero(split)
    for j, entry in enumerate(matrix[r]):
        if entry.is_zero():
            continue
        minor = [row[:j] + row[j + 1:] for i, row in enumerate(matrix) if i != r]
        term = entry * det(minor)
        total = total + term if (r + j) % 2 == 0 else total - term
    return total


def gcd_int(values: Iterable[int]) -> int:
    g = 0
    for v in values:
        g = math.gcd(g, int(v))
    return g
