"""Exact univariate polynomial arithmetic over the rationals.

Coefficients are :class:`fractions.Fraction` (always reduced, positive
denominator).  A :class:`Poly` stores them in ascending degree order with
trailing zeros stripped, so the zero polynomial is the empty tuple.

Everything here is immutable and pure.
"""
from __future__ import annotations

from fractions import Fraction
from itertools import combinations, permutations
from numbers import Rational
from typing import Iterable, Sequence

import numpy as np

from .errors import NonSquare, ShapeMismatch, ZeroPolynomial

NEG_INF = float("-inf")

# Plücker column order for 2x4 matrices, 0-based pairs.
PLUCKER_PAIRS: tuple[tuple[int, int], ...] = tuple(combinations(range(4), 2))
PLUCKER_LABELS = ("12", "13", "14", "23", "24", "34")


def as_fraction(x) -> Fraction:
    """Coerce ints, Fractions, floats (exactly) and "num/den" strings."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, Rational):
        return Fraction(x.numerator, x.denominator)
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, (float, np.floating)):
        return Fraction(float(x))
    raise TypeError(f"cannot convert {x!r} to Fraction")


def format_fraction(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


class Poly:
    """Univariate polynomial in t with exact rational coefficients."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        cs = [as_fraction(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    def __setattr__(self, name, value):
        raise AttributeError("Poly is immutable")

    # constructors
    @classmethod
    def const(cls, c) -> Poly:
        return cls([c])

    @classmethod
    def monomial(cls, degree: int, c=1) -> Poly:
        return cls([0] * degree + [c])

    @classmethod
    def t(cls) -> Poly:
        return cls([0, 1])

    # basic protocol
    def degree(self):
        """Degree, with ``-inf`` for the zero polynomial."""
        return len(self.coeffs) - 1 if self.coeffs else NEG_INF

    def is_zero(self) -> bool:
        return not self.coeffs

    def leading(self) -> Fraction:
        return self.coeffs[-1] if self.coeffs else Fraction(0)

    def __len__(self):
        return len(self.coeffs)

    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.coeffs == other.coeffs
        if isinstance(other, (int, Fraction)):
            return self.coeffs == Poly([other]).coeffs
        return NotImplemented

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        return f"Poly([{', '.join(format_fraction(c) for c in self.coeffs)}])"

    def __str__(self):
        if not self.coeffs:
            return "0"
        terms = []
        for i, c in enumerate(self.coeffs):
            if c == 0:
                continue
            mag = format_fraction(abs(c))
            if i == 0:
                body = mag
            else:
                mono = "t" if i == 1 else f"t^{i}"
                body = mono if abs(c) == 1 else f"{mag}*{mono}"
            terms.append(("-" if c < 0 else "+", body))
        head_sign, head = terms[0]
        out = ("-" if head_sign == "-" else "") + head
        for sign, body in terms[1:]:
            out += f" {sign} {body}"
        return out

    # arithmetic
    @staticmethod
    def _coerce(x) -> Poly:
        return x if isinstance(x, Poly) else Poly([x])

    def __add__(self, other):
        other = self._coerce(other)
        a, b = self.coeffs, other.coeffs
        n = max(len(a), len(b))
        return Poly(
            (a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)
        )

    __radd__ = __add__

    def __neg__(self):
        return Poly(-c for c in self.coeffs)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        a, b = self.coeffs, other.coeffs
        if not a or not b:
            return Poly()
        out = [Fraction(0)] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x == 0:
                continue
            for j, y in enumerate(b):
                out[i + j] += x * y
        return Poly(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = Poly([1])
        for _ in range(k):
            out = out * self
        return out

    def __call__(self, x):
        """Horner evaluation; exact for Fraction/int input, float for floats/arrays."""
        if isinstance(x, (int, Fraction)):
            acc = Fraction(0)
            for c in reversed(self.coeffs):
                acc = acc * x + c
            return acc
        if not self.coeffs:
            return np.zeros_like(np.asarray(x, dtype=float))
        return np.polynomial.polynomial.polyval(x, self.to_float())

    def to_float(self) -> np.ndarray:
        return np.array([float(c) for c in self.coeffs], dtype=float)

    def derivative(self) -> Poly:
        return Poly(i * c for i, c in enumerate(self.coeffs) if i > 0)

    def divmod(self, divisor: Poly) -> tuple[Poly, Poly]:
        if divisor.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        dd = len(divisor.coeffs) - 1
        lead = divisor.coeffs[-1]
        if len(rem) - 1 < dd:
            return Poly(), self
        quot = [Fraction(0)] * (len(rem) - dd)
        for k in range(len(rem) - 1 - dd, -1, -1):
            c = rem[k + dd] / lead
            quot[k] = c
            if c:
                for j, dc in enumerate(divisor.coeffs):
                    rem[k + j] -= c * dc
        return Poly(quot), Poly(rem[:dd])

    def __floordiv__(self, other):
        return self.divmod(self._coerce(other))[0]

    def __mod__(self, other):
        return self.divmod(self._coerce(other))[1]

    def exact_div(self, other: Poly) -> Poly:
        q, r = self.divmod(other)
        if not r.is_zero():
            raise ArithmeticError("division is not exact")
        return q

    def monic(self) -> Poly:
        if self.is_zero():
            return self
        lead = self.coeffs[-1]
        return Poly(c / lead for c in self.coeffs)

    def compose(self, inner: Poly) -> Poly:
        acc = Poly()
        for c in reversed(self.coeffs):
            acc = acc * inner + c
        return acc

    def scale_var(self, s) -> Poly:
        """p(s*t)."""
        s = as_fraction(s)
        return Poly(c * s**i for i, c in enumerate(self.coeffs))

    def to_strings(self) -> list[str]:
        return [format_fraction(c) for c in self.coeffs]

    @classmethod
    def from_strings(cls, items: Sequence[str]) -> Poly:
        return cls(Fraction(s) for s in items)


def poly_arith(a: Poly, b: Poly, op: str) -> Poly:
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown op {op!r}")


def derivative(p: Poly) -> Poly:
    return p.derivative()


def is_identically_zero(p: Poly) -> bool:
    return p.is_zero()


def poly_gcd(a: Poly, b: Poly) -> Poly:
    """Monic gcd (zero if both are zero)."""
    while not b.is_zero():
        a, b = b, a % b
    return a.monic()


def squarefree_part(p: Poly) -> Poly:
    if p.degree() < 1:
        return p
    g = poly_gcd(p, p.derivative())
    return p.exact_div(g) if g.degree() > 0 else p


# ---------------------------------------------------------------------------
# matrices


class PolyMat:
    """Dense row-major matrix of polynomials."""

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, rows: int, cols: int, entries: Sequence):
        if len(entries) != rows * cols:
            raise ShapeMismatch(f"expected {rows * cols} entries, got {len(entries)}")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(
            self, "entries", tuple(e if isinstance(e, Poly) else Poly([e]) for e in entries)
        )

    def __setattr__(self, name, value):
        raise AttributeError("PolyMat is immutable")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence]) -> PolyMat:
        rows = [list(r) for r in rows]
        ncols = len(rows[0]) if rows else 0
        if any(len(r) != ncols for r in rows):
            raise ShapeMismatch("ragged rows")
        return cls(len(rows), ncols, [e for r in rows for e in r])

    def __getitem__(self, ij) -> Poly:
        i, j = ij
        return self.entries[i * self.cols + j]

    def row(self, i: int) -> list[Poly]:
        return list(self.entries[i * self.cols:(i + 1) * self.cols])

    def to_rows(self) -> list[list[Poly]]:
        return [self.row(i) for i in range(self.rows)]

    def __eq__(self, other):
        return (
            isinstance(other, PolyMat)
            and (self.rows, self.cols) == (other.rows, other.cols)
            and self.entries == other.entries
        )

    def __hash__(self):
        return hash((self.rows, self.cols, self.entries))

    def __repr__(self):
        return f"PolyMat({self.to_rows()!r})"

    def matmul_const(self, k: Sequence[Sequence]) -> PolyMat:
        """Right-multiply by a constant (rational) matrix given as nested rows."""
        k = [[as_fraction(x) for x in r] for r in k]
        if len(k) != self.cols:
            raise ShapeMismatch("inner dimensions differ")
        out_cols = len(k[0])
        out = []
        for i in range(self.rows):
            for j in range(out_cols):
                acc = Poly()
                for m in range(self.cols):
                    if k[m][j]:
                        acc = acc + self[i, m] * k[m][j]
                out.append(acc)
        return PolyMat(self.rows, out_cols, out)

    def map(self, fn) -> PolyMat:
        return PolyMat(self.rows, self.cols, [fn(e) for e in self.entries])


def det_poly(m: PolyMat) -> Poly:
    """Determinant by fraction-free Bareiss elimination over Q[t]."""
    if m.rows != m.cols:
        raise NonSquare(f"{m.rows}x{m.cols} matrix has no determinant")
    n = m.rows
    if n == 0:
        return Poly([1])
    a = [m.row(i) for i in range(n)]
    sign = 1
    prev = Poly([1])
    for k in range(n - 1):
        if a[k][k].is_zero():
            swap = next((r for r in range(k + 1, n) if not a[r][k].is_zero()), None)
            if swap is None:
                return Poly()
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[k][k] * a[i][j] - a[i][k] * a[k][j]).exact_div(prev)
        prev = a[k][k]
    d = a[n - 1][n - 1]
    return -d if sign < 0 else d


def det_cofactor(m: PolyMat) -> Poly:
    """Leibniz expansion; slow, used as an independent check for n <= 4."""
    if m.rows != m.cols:
        raise NonSquare(f"{m.rows}x{m.cols} matrix has no determinant")
    n = m.rows
    total = Poly()
    for perm in permutations(range(n)):
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        term = Poly([1])
        for i, j in enumerate(perm):
            term = term * m[i, j]
            if term.is_zero():
                break
        total = total - term if inv % 2 else total + term
    return total


def plucker_minors(m: PolyMat) -> list[Poly]:
    """The six 2x2 minors of a 2x4 matrix, columns ordered (12,13,14,23,24,34)."""
    if (m.rows, m.cols) != (2, 4):
        raise ShapeMismatch(f"expected a 2x4 matrix, got {m.rows}x{m.cols}")
    return [m[0, i] * m[1, j] - m[0, j] * m[1, i] for i, j in PLUCKER_PAIRS]


def plucker_relation(p: Sequence):
    """p12*p34 - p13*p24 + p14*p23 for any ring elements (Poly, Fraction, ...)."""
    return p[0] * p[5] - p[1] * p[4] + p[2] * p[3]


def constant_plucker(k: Sequence[Sequence]) -> list:
    """Plücker vector of a constant 4x2 matrix (entries in any commutative ring)."""
    return [k[i][0] * k[j][1] - k[j][0] * k[i][1] for i, j in PLUCKER_PAIRS]


# ---------------------------------------------------------------------------
# Sturm sequences and real roots


def sturm_sequence(p: Poly) -> list[Poly]:
    """Canonical Sturm chain of the square-free part of ``p``."""
    if p.is_zero():
        raise ZeroPolynomial("Sturm sequence of the zero polynomial")
    p0 = squarefree_part(p)
    seq = [p0, p0.derivative()]
    while not seq[-1].is_zero():
        seq.append(-(seq[-2] % seq[-1]))
    seq.pop()
    return seq


def _sign_variations(seq: Sequence[Poly], x: Fraction) -> int:
    signs = []
    for q in seq:
        v = q(x)
        if v:
            signs.append(v > 0)
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def count_real_roots(p: Poly, lo, hi, seq: Sequence[Poly] | None = None) -> int:
    """Number of distinct real roots of ``p`` in the half-open interval (lo, hi].

    Works for any rational lo < hi, including when either endpoint is a root:
    on a square-free chain, sign variations are right-continuous at roots.
    """
    lo, hi = as_fraction(lo), as_fraction(hi)
    if p.is_zero():
        raise ZeroPolynomial("root count of the zero polynomial")
    if not lo < hi:
        raise ValueError("need lo < hi")
    if p.degree() == 0:
        return 0
    seq = sturm_sequence(p) if seq is None else seq
    return _sign_variations(seq, lo) - _sign_variations(seq, hi)


def root_bound(p: Poly) -> Fraction:
    """Cauchy bound: every real root has |r| < bound."""
    lead = abs(p.leading())
    return 1 + max((abs(c) / lead for c in p.coeffs[:-1]), default=Fraction(0))


def isolate_real_roots(p: Poly, lo, hi, width=None) -> list[tuple[Fraction, Fraction]]:
    """Disjoint intervals (a, b], each holding exactly one root of p in (lo, hi].

    Intervals are sorted; ``width`` optionally refines each below that size.
    Exact rational roots land on an interval's right endpoint when hit.
    """
    lo, hi = as_fraction(lo), as_fraction(hi)
    seq = sturm_sequence(p)
    out = []
    stack = [(lo, hi, count_real_roots(p, lo, hi, seq))]
    while stack:
        a, b, n = stack.pop()
        if n == 0:
            continue
        if n == 1 and (width is None or b - a <= width):
            out.append((a, b))
            continue
        mid = (a + b) / 2
        n_left = count_real_roots(p, a, mid, seq)
        stack.append((mid, b, n - n_left))
        stack.append((a, mid, n_left))
    out.sort()
    return out


def real_roots_float(p: Poly, lo, hi, tol: float = 1e-12) -> list[float]:
    """Float approximations of the distinct roots in (lo, hi] via exact bisection."""
    return [float((a + b) / 2) for a, b in isolate_real_roots(p, lo, hi, width=Fraction(tol))]
