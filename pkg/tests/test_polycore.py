import random
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import polymats, polys, rationals
from oracles import numeric_root_count
from curvedkakeya.errors import NonSquare
from curvedkakeya.polycore import (
    Poly,
    PolyMat,
    count_real_roots,
    derivative,
    det_cofactor,
    det_poly,
    is_identically_zero,
    isolate_real_roots,
    plucker_minors,
    plucker_relation,
    poly_arith,
    poly_gcd,
    real_roots_float,
    squarefree_part,
    sturm_sequence,
)

T = Poly.t()
ts = sp.Symbol("t")


def to_sympy(p: Poly):
    return sum((sp.Rational(c.numerator, c.denominator) * ts**k for k, c in enumerate(p.coeffs)), sp.Integer(0))


def from_sympy(e) -> Poly:
    e = sp.expand(e)
    if e == 0:
        return Poly()
    return Poly(Fraction(int(c.p), int(c.q)) for c in reversed(sp.Poly(e, ts).all_coeffs()))


# --- arithmetic -------------------------------------------------------------


def test_difference_of_squares():
    assert poly_arith(T + 1, T - 1, "mul") == T**2 - 1


def test_additive_identity():
    p = Poly([3, 0, Fraction(-2, 3)])
    assert poly_arith(p, Poly(), "add") == p


def test_minor_product_matches_oracle():
    assert poly_arith(T**2, -2 * T**2, "mul") == Poly([0, 0, 0, 0, -2])


def test_unknown_op():
    with pytest.raises(ValueError):
        poly_arith(T, T, "div")


def test_derivatives():
    assert derivative(T**3) == 3 * T**2
    assert derivative(Poly([7])).is_zero()
    assert derivative(-(T**3)) == -3 * T**2


def test_identically_zero():
    assert is_identically_zero(Poly())
    assert is_identically_zero(T - T)
    assert not is_identically_zero(-T)


def test_strings_roundtrip():
    p = Poly([0, 1, Fraction(-2, 3)])
    assert p.to_strings() == ["0", "1", "-2/3"]
    assert Poly.from_strings(p.to_strings()) == p


def test_trailing_zeros_normalised():
    assert Poly([1, 2, 0, 0]) == Poly([1, 2])
    assert Poly([0, 0]).is_zero() and Poly([0, 0]).degree() == Poly().degree()


@settings(max_examples=1000, deadline=None)
@given(polys(), polys(), polys())
def test_ring_axioms(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a * b == b * a
    assert a - a == Poly()


@settings(max_examples=300, deadline=None)
@given(polys(), polys())
def test_leibniz_rule(p, q):
    assert derivative(p * q) == derivative(p) * q + p * derivative(q)


@settings(max_examples=200, deadline=None)
@given(polys(), polys(max_deg=2))
def test_divmod_against_sympy(a, b):
    if b.is_zero():
        return
    q, r = a.divmod(b)
    sq, sr = sp.div(to_sympy(a), to_sympy(b), ts)
    assert q == from_sympy(sq) and r == from_sympy(sr)
    assert q * b + r == a


@settings(max_examples=100, deadline=None)
@given(polys(3, st.integers(-5, 5)), polys(3, st.integers(-5, 5)))
def test_gcd_against_sympy(a, b):
    if a.is_zero() and b.is_zero():
        return
    g = poly_gcd(a, b)
    expected = from_sympy(sp.gcd(to_sympy(a), to_sympy(b)))
    assert g == expected.monic()


def test_squarefree_part():
    p = (T - 1) ** 3 * (T + 2) ** 2 * T
    assert squarefree_part(p) == ((T - 1) * (T + 2) * T).monic()


def test_exact_evaluation_and_compose():
    p = T**2 - 2
    assert p(Fraction(3, 2)) == Fraction(1, 4)
    assert p.compose(T + 1) == T**2 + 2 * T - 1
    np.testing.assert_allclose(p(np.array([0.0, 2.0])), [-2.0, 2.0])
    np.testing.assert_array_equal(Poly()(np.array([0.5, 1.0])), [0.0, 0.0])
    assert Poly()(0.5) == 0


# --- determinants and minors ------------------------------------------------


def test_triangular_det():
    m = PolyMat.from_rows([[1, T], [0, T**2]])
    assert det_poly(m) == T**2


def test_example_wronskian_matches_sympy_golden():
    b1 = [Poly([1]), Poly(), T, T**2]
    b2 = [Poly(), Poly([1]), T**2, -(T**3)]
    m = PolyMat.from_rows([b1, b2, [derivative(p) for p in b1], [derivative(p) for p in b2]])
    got = det_poly(m)
    t = ts
    oracle = sp.Matrix([[1, 0, t, t**2], [0, 1, t**2, -(t**3)], [0, 0, 1, 2 * t], [0, 0, 2 * t, -3 * t**2]]).det()
    assert got == from_sympy(oracle)
    assert got == Poly([0, 0, -7])  # golden: -7 t^2
    assert not got.is_zero()


def test_repeated_row_det_zero():
    r = [T, 1, T**2, 3]
    m = PolyMat.from_rows([r, [1, 2, 3, 4], r, [T, T, T, T]])
    assert det_poly(m).is_zero()


def test_non_square():
    with pytest.raises(NonSquare):
        det_poly(PolyMat.from_rows([[1, 2, 3]]))


@settings(max_examples=100, deadline=None)
@given(polymats(4, 4, max_deg=2))
def test_bareiss_matches_cofactor_and_sympy(m):
    d = det_poly(m)
    assert d == det_cofactor(m)
    sm = sp.Matrix(4, 4, [to_sympy(m[i, j]) for i in range(4) for j in range(4)])
    assert d == from_sympy(sm.det(method="berkowitz"))


@settings(max_examples=100, deadline=None)
@given(polymats(4, 4, max_deg=2), st.integers(0, 3), st.integers(0, 3))
def test_det_alternating(m, i, j):
    if i == j:
        return
    rows = m.to_rows()
    rows[i], rows[j] = rows[j], rows[i]
    assert det_poly(PolyMat.from_rows(rows)) == -det_poly(m)


def test_example_minors_against_sympy():
    rows = [[1, 0, T, T**2], [0, 1, T**2, -(T**3)]]
    got = plucker_minors(PolyMat.from_rows(rows))
    sm = sp.Matrix([[1, 0, ts, ts**2], [0, 1, ts**2, -(ts**3)]])
    oracle = [from_sympy(sm[:, [a, b]].det()) for a, b in ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))]
    assert got == oracle
    assert got == [Poly([1]), T**2, -(T**3), -T, -(T**2), -2 * T**4]


def test_coordinate_minors():
    assert plucker_minors(PolyMat.from_rows([[1, 0, 0, 0], [0, 1, 0, 0]])) == [Poly([1])] + [Poly()] * 5


def test_proportional_rows_all_minors_zero():
    r = [T, 2, T**3, 1 - T]
    m = PolyMat.from_rows([r, [T * p if isinstance(p, Poly) else T * p for p in r]])
    assert all(p.is_zero() for p in plucker_minors(m))


@settings(max_examples=300, deadline=None)
@given(polymats(2, 4, max_deg=4, coeffs=rationals))
def test_grassmann_plucker(m):
    assert plucker_relation(plucker_minors(m)).is_zero()


# --- Sturm ------------------------------------------------------------------


def test_sturm_examples():
    assert count_real_roots(T**2 - 1, 0, 2) == 1
    assert count_real_roots(T**2 + 1, -10, 10) == 0


def test_half_open_convention():
    p = (T - 1) * (T - 2)
    assert count_real_roots(p, 1, 2) == 1  # 2 counted, 1 not
    assert count_real_roots(p, 0, 1) + count_real_roots(p, 1, 3) == count_real_roots(p, 0, 3) == 2


def test_repeated_roots_counted_once():
    assert count_real_roots((T - Fraction(1, 3)) ** 3 * (T + 5), -10, 10) == 2


def test_sturm_sequence_of_squarefree_part():
    p = (T - 1) ** 2 * (T + 1)
    seq = sturm_sequence(p)
    q = squarefree_part(p)
    assert seq[0] == q and seq[1] == derivative(q)
    assert seq[-1].degree() == 0


def test_sturm_against_numeric_oracle():
    rng = random.Random(5)
    mismatches = []
    for _ in range(1000):
        deg = rng.randint(1, 8)
        coeffs = [rng.randint(-10, 10) for _ in range(deg)] + [rng.choice([-3, -2, -1, 1, 2, 3])]
        lo, hi = rng.randint(-4, 0), rng.randint(1, 4)
        got = count_real_roots(Poly(coeffs), lo, hi)
        if got != numeric_root_count(coeffs, lo, hi):
            mismatches.append(coeffs)
    assert not mismatches


def test_isolation_intervals():
    p = (T - Fraction(1, 3)) * (T - Fraction(1, 2)) * (T + 2)
    ivs = isolate_real_roots(p, -5, 5)
    assert len(ivs) == 3
    for a, b in ivs:
        assert count_real_roots(p, a, b) == 1
    roots = real_roots_float(p, -5, 5)
    np.testing.assert_allclose(roots, [-2, 1 / 3, 1 / 2], atol=1e-10)
