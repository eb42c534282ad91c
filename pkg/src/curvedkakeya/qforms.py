"""Exact symmetric forms over Q: inertia and isotropic vectors.

Isotropic vectors of an indefinite rational form may need one square root,
so this module also carries a tiny Q(sqrt d) number type.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import isqrt
from typing import Sequence

from .polycore import as_fraction, format_fraction


def _squarefree_split(n: int, bound: int = 1000) -> tuple[int, int]:
    """n = s^2 * d, pulling out square factors k^2 with k <= bound; returns (s, d). n > 0.

    d is squarefree whenever n has no prime factor above ``bound`` appearing
    squared.  Exactness never depends on it, only the tidiness of the surd.
    """
    s = 1
    k = 2
    while k <= bound and k * k <= n:
        while n % (k * k) == 0:
            n //= k * k
            s *= k
        k += 1
    r = isqrt(n)
    if r * r == n:
        return s * r, 1
    return s, n


def rational_sqrt(q: Fraction) -> Fraction | None:
    """Exact square root if q is the square of a rational, else None."""
    if q < 0:
        return None
    a, b = isqrt(q.numerator), isqrt(q.denominator)
    if a * a == q.numerator and b * b == q.denominator:
        return Fraction(a, b)
    return None


@dataclass(frozen=True)
class Surd:
    """a + b*sqrt(d), a, b rational, d a non-square integer > 1 (or d = 1, b = 0)."""

    a: Fraction
    b: Fraction = Fraction(0)
    d: int = 1

    def __post_init__(self):
        object.__setattr__(self, "a", as_fraction(self.a))
        object.__setattr__(self, "b", as_fraction(self.b))
        if self.b == 0 and self.d != 1:
            object.__setattr__(self, "d", 1)

    @classmethod
    def sqrt_of(cls, q) -> Surd:
        """sqrt(q) for rational q >= 0, simplified to s*sqrt(d)."""
        q = as_fraction(q)
        r = rational_sqrt(q)
        if r is not None:
            return cls(r)
        # sqrt(n/m) = sqrt(n*m)/m
        s, d = _squarefree_split(q.numerator * q.denominator)
        return cls(Fraction(0), Fraction(s, q.denominator), d)

    def _lift(self, other) -> Surd:
        if isinstance(other, Surd):
            if self.d != 1 and other.d != 1 and self.d != other.d:
                raise ValueError("mixed quadratic fields")
            return other
        return Surd(as_fraction(other))

    def _field(self, other: Surd) -> int:
        return self.d if self.d != 1 else other.d

    def __add__(self, other):
        o = self._lift(other)
        return Surd(self.a + o.a, self.b + o.b, self._field(o))

    __radd__ = __add__

    def __neg__(self):
        return Surd(-self.a, -self.b, self.d)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        o = self._lift(other)
        d = self._field(o)
        return Surd(self.a * o.a + self.b * o.b * d, self.a * o.b + self.b * o.a, d)

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.b == 0 and self.a == other
        if isinstance(other, Surd):
            return (self.a, self.b) == (other.a, other.b) and (self.b == 0 or self.d == other.d)
        return NotImplemented

    def __hash__(self):
        return hash((self.a, self.b, self.d))

    def __bool__(self):
        return bool(self.a) or bool(self.b)

    def __float__(self):
        return float(self.a) + float(self.b) * self.d**0.5

    def is_rational(self) -> bool:
        return self.b == 0

    def __str__(self):
        if self.b == 0:
            return format_fraction(self.a)
        sign = "-" if self.b < 0 else "+"
        return f"{format_fraction(self.a)}{sign}{format_fraction(abs(self.b))}*sqrt({self.d})"

    @classmethod
    def parse(cls, s: str) -> Surd:
        s = s.strip()
        if "sqrt" not in s:
            return cls(Fraction(s))
        head, tail = s.split("*sqrt(")
        # split at the last sign that is not a leading one
        k = max(head.rfind("+", 1), head.rfind("-", 1))
        a_str, b_str = head[:k], head[k:]
        return cls(Fraction(a_str), Fraction(b_str.lstrip("+")), int(tail.rstrip(")")))


def plucker_form_matrix() -> list[list[Fraction]]:
    """Gram matrix G with p^T G p = p12 p34 - p13 p24 + p14 p23."""
    g = [[Fraction(0)] * 6 for _ in range(6)]
    half = Fraction(1, 2)
    for i, j, s in ((0, 5, half), (1, 4, -half), (2, 3, half)):
        g[i][j] = g[j][i] = s
    return g


def restrict_form(g: Sequence[Sequence[Fraction]], basis: Sequence[Sequence[Fraction]]):
    """Matrix of the form g on span(basis): B^T G B."""
    k = len(basis)
    n = len(g)
    gb = [[sum(g[r][c] * basis[j][c] for c in range(n)) for r in range(n)] for j in range(k)]
    return [[sum(basis[i][r] * gb[j][r] for r in range(n)) for j in range(k)] for i in range(k)]


@dataclass(frozen=True)
class Inertia:
    positive: int
    negative: int
    zero: int

    @property
    def definite(self) -> bool:
        return self.zero == 0 and (self.positive == 0 or self.negative == 0)


def _diagonalize(q: Sequence[Sequence[Fraction]]):
    """Congruence reduction A = P^T Q P.

    Returns (diag, P, iso_col) where ``iso_col`` is the index of a zero
    diagonal entry met during reduction (then P[:, iso_col] is isotropic), or
    None if the reduction finished with all pivots nonzero.
    """
    n = len(q)
    a = [[as_fraction(x) for x in row] for row in q]
    p = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    for k in range(n):
        for i in range(k, n):
            if a[i][i] == 0:
                return None, p, i
        piv = a[k][k]
        for j in range(k + 1, n):
            c = a[k][j] / piv
            if c == 0:
                continue
            # column op then row op: x_j -= c x_k
            for r in range(n):
                a[r][j] -= c * a[r][k]
            for r in range(n):
                a[j][r] -= c * a[k][r]
            for r in range(n):
                p[r][j] -= c * p[r][k]
    return [a[i][i] for i in range(n)], p, None


def inertia(q: Sequence[Sequence]) -> Inertia:
    """Signature of a rational symmetric matrix by exact symmetric elimination."""
    n = len(q)
    a = [[as_fraction(x) for x in row] for row in q]
    pos = neg = 0
    remaining = list(range(n))
    while remaining:
        piv = next((i for i in remaining if a[i][i] != 0), None)
        if piv is None:
            off = next(
                ((i, j) for i in remaining for j in remaining if i < j and a[i][j] != 0), None
            )
            if off is None:
                break
            # x_i += x_j makes a nonzero diagonal entry 2 a_ij
            i, j = off
            for r in range(n):
                a[r][i] += a[r][j]
            for r in range(n):
                a[i][r] += a[j][r]
            piv = i
        d = a[piv][piv]
        pos += d > 0
        neg += d < 0
        remaining.remove(piv)
        for j in remaining:
            c = a[piv][j] / d
            if c == 0:
                continue
            for r in range(n):
                a[r][j] -= c * a[r][piv]
            for r in range(n):
                a[j][r] -= c * a[piv][r]
    return Inertia(pos, neg, n - pos - neg)


def isotropic_vector(q: Sequence[Sequence]) -> list | None:
    """A nonzero vector y with y^T Q y = 0, or None if Q is definite.

    The result is a list of Fractions when a rational isotropic vector is
    found; otherwise a list of :class:`Surd` in a single field Q(sqrt d).
    """
    n = len(q)
    if n == 0:
        return None
    diag, p, iso = _diagonalize(q)
    if iso is not None:
        return [p[r][iso] for r in range(n)]
    pos = [i for i, d in enumerate(diag) if d > 0]
    neg = [i for i, d in enumerate(diag) if d < 0]
    if not pos or not neg:
        return None
    # d_i y_i^2 + d_j y_j^2 = 0 with y_i = 1, y_j = sqrt(-d_i/d_j); prefer a rational pair
    pairs = [(i, j) for i in pos for j in neg]
    for i, j in pairs:
        r = rational_sqrt(-diag[i] / diag[j])
        if r is not None:
            return [p[row][i] + r * p[row][j] for row in range(n)]
    i, j = pairs[0]
    root = Surd.sqrt_of(-diag[i] / diag[j])
    return [Surd(p[row][i]) + root * p[row][j] for row in range(n)]


def rref(rows: Sequence[Sequence]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form over Q and the pivot columns."""
    a = [[as_fraction(x) for x in r] for r in rows]
    if not a:
        return [], []
    ncols = len(a[0])
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(a)) if a[i][c] != 0), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        lead = a[r][c]
        a[r] = [x / lead for x in a[r]]
        for i in range(len(a)):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
        if r == len(a):
            break
    return a[:r], pivots


def nullspace(rows: Sequence[Sequence], ncols: int | None = None) -> list[list[Fraction]]:
    """Rational basis of {x : A x = 0}, one vector per free column (in column order)."""
    if ncols is None:
        ncols = len(rows[0])
    red, pivots = rref(rows) if rows else ([], [])
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        v = [Fraction(0)] * ncols
        v[fc] = Fraction(1)
        for r, pc in enumerate(pivots):
            v[pc] = -red[r][fc]
        basis.append(v)
    return basis


def rank(rows: Sequence[Sequence]) -> int:
    return len(rref(rows)[1]) if rows else 0


def inverse(m: Sequence[Sequence]) -> list[list[Fraction]] | None:
    """Exact inverse of a square rational matrix, or None if singular."""
    n = len(m)
    aug = [[as_fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)]
           for i, row in enumerate(m)]
    red, pivots = rref(aug)
    if len(pivots) < n or pivots[n - 1] != n - 1:
        return None
    return [row[n:] for row in red]
