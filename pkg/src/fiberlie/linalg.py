"""Exact linear algebra over Q: fraction-free rank, pivot rows, affine solves."""

from __future__ import annotations

import math
from typing import Sequence

from gmpy2 import mpq

from .poly import to_rational


def _integer_rows(rows: Sequence[Sequence]) -> list[list[int]]:
    out = []
    for row in rows:
        row = [to_rational(v) for v in row]
        lcm = 1
        for v in row:
            lcm = lcm * v.denominator // math.gcd(lcm, v.denominator)
        out.append([int(v * lcm) for v in row])
    return out


def _eliminate(rows: list[list[int]]) -> tuple[int, list[int]]:
    """Fraction-free elimination; returns (rank, original indices of pivot rows).

    Rows are processed in the given order and a row becomes a pivot as soon as it
    is independent of the pivots chosen before it.
    """
    if not rows:
        return 0, []
    ncols = len(rows[0])
    basis: list[tuple[int, list[int]]] = []  # (pivot column, reduced row)
    chosen = []
    for idx, row in enumerate(rows):
        r = list(row)
        for col, b in basis:
            if r[col]:
                f, g = b[col], r[col]
                r = [f * x - g * y for x, y in zip(r, b)]
                d = 0
                for x in r:
                    d = math.gcd(d, x)
                if d > 1:
                    r = [x // d for x in r]
        pivot = next((c for c in range(ncols) if r[c]), None)
        if pivot is not None:
            basis.append((pivot, r))
            chosen.append(idx)
    return len(chosen), chosen


def rank(rows: Sequence[Sequence]) -> int:
    """Exact rank of a rational matrix given as a list of rows."""
    return _eliminate(_integer_rows(rows))[0]


def independent_rows(rows: Sequence[Sequence]) -> list[int]:
    """Indices of a maximal independent set of rows, greedily in row order."""
    return _eliminate(_integer_rows(rows))[1]


def solve_affine(a: Sequence[Sequence], b: Sequence):
    """Solve ``a @ z = b`` exactly.

    Returns ``(particular, nullspace)`` with ``nullspace`` a list of basis
    vectors, or ``None`` if the system is inconsistent.
    """
    nrows = len(a)
    ncols = len(a[0]) if nrows else 0
    m = [[to_rational(v) for v in row] + [to_rational(rhs)] for row, rhs in zip(a, b)]
    pivots = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, nrows) if m[i][c]), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        inv = 1 / m[r][c]
        m[r] = [v * inv for v in m[r]]
        for i in range(nrows):
            if i != r and m[i][c]:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    for i in range(r, nrows):
        if m[i][ncols]:
            return None
    particular = [mpq(0)] * ncols
    for i, c in enumerate(pivots):
        particular[c] = m[i][ncols]
    free = [c for c in range(ncols) if c not in pivots]
    nullspace = []
    for f in free:
        v = [mpq(0)] * ncols
        v[f] = mpq(1)
        for i, c in enumerate(pivots):
            v[c] = -m[i][f]
        nullspace.append(v)
    return particular, nullspace
