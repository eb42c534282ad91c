"""Exact nondegeneracy checks for polynomial projection families.

A family is a pair of polynomial frames b1(t), b2(t) in Q[t]^4; the map
P_t(z) = M(t) z with M(t) = [b1(t); b2(t)] sends labels z = (x, v) in R^4 to
R^2.  The first two coordinates of each b_i form the x-block (beta_i), the last
two the v-block (gamma_i).
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import AllMinorsZero, InvariantViolation, SingularMatrix, WitnessReconstructionFailed
from .polycore import (
    PLUCKER_PAIRS,
    Poly,
    PolyMat,
    as_fraction,
    constant_plucker,
    count_real_roots,
    det_poly,
    format_fraction,
    plucker_minors,
)
from .qforms import (
    Surd,
    inverse,
    isotropic_vector,
    nullspace,
    plucker_form_matrix,
    restrict_form,
)


@dataclass(frozen=True)
class FamilySpec:
    b1: tuple[Poly, Poly, Poly, Poly]
    b2: tuple[Poly, Poly, Poly, Poly]
    name: str = "family"

    def __post_init__(self):
        for label in ("b1", "b2"):
            vec = tuple(p if isinstance(p, Poly) else Poly(p) for p in getattr(self, label))
            if len(vec) != 4:
                raise ValueError(f"{label} must have 4 coordinates")
            if all(p.is_zero() for p in vec):
                raise ValueError(f"{label} is the zero vector")
            object.__setattr__(self, label, vec)

    @classmethod
    def from_coeffs(cls, b1, b2, name="family") -> FamilySpec:
        """Build from nested coefficient lists, e.g. ``[[1], [0], [0, 1], [0, 0, 1]]``."""
        return cls(tuple(Poly(c) for c in b1), tuple(Poly(c) for c in b2), name)

    def matrix(self) -> PolyMat:
        return PolyMat.from_rows([self.b1, self.b2])

    @property
    def beta(self) -> tuple[tuple[Poly, Poly], tuple[Poly, Poly]]:
        return (self.b1[0], self.b1[1]), (self.b2[0], self.b2[1])

    @property
    def gamma(self) -> tuple[tuple[Poly, Poly], tuple[Poly, Poly]]:
        return (self.b1[2], self.b1[3]), (self.b2[2], self.b2[3])

    def max_degree(self) -> int:
        return max(max(p.degree() for p in self.b1), max(p.degree() for p in self.b2))

    def coefficient_array(self) -> np.ndarray:
        """Float array C[r, j, h]: coefficient of t^h in row r, column j."""
        deg = max(self.max_degree(), 0)
        out = np.zeros((2, 4, deg + 1))
        for r, row in enumerate((self.b1, self.b2)):
            for j, p in enumerate(row):
                out[r, j, : len(p.coeffs)] = p.to_float()
        return out

    def derivative_family(self) -> tuple[tuple[Poly, ...], tuple[Poly, ...]]:
        return tuple(p.derivative() for p in self.b1), tuple(p.derivative() for p in self.b2)


def example_family() -> FamilySpec:
    """b1 = (1, 0, t, t^2), b2 = (0, 1, t^2, -t^3)."""
    return FamilySpec.from_coeffs(
        [[1], [0], [0, 1], [0, 0, 1]], [[0], [1], [0, 0, 1], [0, 0, 0, -1]], name="example"
    )


def wisewell_family() -> FamilySpec:
    """b1 = (1, 0, -2t^2, -2t), b2 = (0, 1, -2t, 0)."""
    return FamilySpec.from_coeffs(
        [[1], [0], [0, 0, -2], [0, -2]], [[0], [1], [0, -2], [0]], name="wisewell"
    )


# ---------------------------------------------------------------------------
# exponents


@dataclass(frozen=True)
class ExponentReport:
    B: int
    N: int
    alpha: Fraction
    beta: Fraction | None
    p: Fraction | None
    dim_bound: Fraction

    @classmethod
    def from_degree(cls, B: int) -> ExponentReport:
        N = B + 1
        alpha = Fraction(2 * N, 3 * N - 2)
        # beta has a pole at N = 1
        beta = Fraction(3 * N - 2, 4 * N - 4) if N >= 2 else None
        return cls(B, N, alpha, beta, 2 * beta if beta is not None else None, 1 + Fraction(1, N))

    def linear_target(self, p=None) -> Fraction:
        """Exponent e in ||sum chi_T||_p <= C delta^e, for p >= 2*beta."""
        if self.beta is None:
            raise ValueError("beta undefined for N = 1")
        p = self.p if p is None else as_fraction(p)
        return -2 + (4 * self.beta - Fraction(1, 2)) / p

    def to_dict(self) -> dict:
        f = lambda q: None if q is None else format_fraction(q)  # noqa: E731
        return {
            "B": self.B,
            "N": self.N,
            "alpha": f(self.alpha),
            "beta": f(self.beta),
            "p": f(self.p),
            "dim_bound": f(self.dim_bound),
        }


# ---------------------------------------------------------------------------
# individual checks


def wronskian_determinant(f: FamilySpec) -> Poly:
    d1, d2 = f.derivative_family()
    return det_poly(PolyMat.from_rows([f.b1, f.b2, d1, d2]))


def nonneg_root_count(p: Poly, lo=0, hi=1) -> int:
    """Distinct roots of p in the closed interval [lo, hi]."""
    lo, hi = Fraction(lo), Fraction(hi)
    return int(p(lo) == 0) + count_real_roots(p, lo, hi)


def wronskian_check(f: FamilySpec) -> dict:
    w = wronskian_determinant(f)
    ok = not w.is_zero()
    return {"ok": ok, "roots_in_01": count_real_roots(w, 0, 1) if ok else None, "det": w}


@dataclass(frozen=True)
class MinorCoefficientMatrix:
    """Row h holds c_h with det(M(t) K) = sum_h (c_h . K_I) t^h."""

    B: int
    rows: tuple[tuple[Fraction, ...], ...]
    minors: tuple[Poly, ...]

    def as_integer_matrix(self) -> np.ndarray:
        """Rows scaled by a common denominator (exact int64 when it fits)."""
        den = 1
        for row in self.rows:
            for c in row:
                den = den * c.denominator // np.gcd(den, c.denominator)
        return np.array([[int(c * den) for c in row] for row in self.rows], dtype=object)


def minor_coefficients(f: FamilySpec) -> MinorCoefficientMatrix:
    minors = plucker_minors(f.matrix())
    if all(m.is_zero() for m in minors):
        raise AllMinorsZero(f"{f.name}: M(t) has rank < 2 identically")
    B = max(m.degree() for m in minors)
    rows = tuple(
        tuple(m.coeffs[h] if h < len(m.coeffs) else Fraction(0) for m in minors)
        for h in range(B + 1)
    )
    return MinorCoefficientMatrix(B, rows, tuple(minors))


def _antisym(p: Sequence) -> list[list]:
    zero = p[0] * 0
    a = [[zero] * 4 for _ in range(4)]
    for (i, j), val in zip(PLUCKER_PAIRS, p):
        a[i][j] = val
        a[j][i] = -val
    return a


def witness_from_plucker(p: Sequence) -> list[list]:
    """4x2 matrix whose columns span the 2-plane with Plücker vector p.

    Assumes p lies on the Plücker quadric.  For p = u ^ w and p_ab != 0 the
    rows a, b of the antisymmetric matrix [p_ij] are u_a w - w_a u and
    u_b w - w_b u, which span span(u, w).
    """
    idx = next((k for k, val in enumerate(p) if val != 0), None)
    if idx is None:
        raise WitnessReconstructionFailed("zero Plücker vector")
    a, b = PLUCKER_PAIRS[idx]
    P = _antisym(p)
    col_a = P[a]
    col_b = [-x for x in P[b]]
    return [[col_b[r], col_a[r]] for r in range(4)]


def verify_witness(f: FamilySpec, K: Sequence[Sequence]) -> bool:
    """True iff det(M(t) K) is identically zero, decided exactly.

    K may hold Fractions or Surds of one field Q(sqrt d); writing
    K = K0 + sqrt(d) K1 the determinant splits into a rational part and a
    sqrt(d) part, and both must vanish.
    """
    d = 1
    k0, k1 = [], []
    for row in K:
        r0, r1 = [], []
        for x in row:
            if isinstance(x, Surd):
                r0.append(x.a)
                r1.append(x.b)
                if x.b != 0:
                    d = x.d
            else:
                r0.append(as_fraction(x))
                r1.append(Fraction(0))
        k0.append(r0)
        k1.append(r1)
    M = f.matrix()
    A = M.matmul_const(k0)
    Bm = M.matmul_const(k1)
    rational = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0] + (Bm[0, 0] * Bm[1, 1] - Bm[0, 1] * Bm[1, 0]) * d
    irrational = A[0, 0] * Bm[1, 1] + Bm[0, 0] * A[1, 1] - A[0, 1] * Bm[1, 0] - Bm[0, 1] * A[1, 0]
    return rational.is_zero() and irrational.is_zero()


def witness_rank_ok(K: Sequence[Sequence]) -> bool:
    """The two columns of K are independent (some 2x2 minor is nonzero)."""
    return any(x != 0 for x in constant_plucker(K))


@dataclass(frozen=True)
class SubspaceVerdict:
    ok: bool
    witness: list | None = None
    nullspace_dim: int = 0


def subspace_nondegeneracy(f: FamilySpec, mc: MinorCoefficientMatrix | None = None) -> SubspaceVerdict:
    """Decide whether some 2-plane K has det(M(t) K) identically zero.

    Such planes correspond to points of the Plücker quadric inside the null
    space of the stacked coefficient vectors c_h.  The quadric form restricted
    to that null space is definite exactly when no such point exists.
    """
    mc = minor_coefficients(f) if mc is None else mc
    basis = nullspace([list(r) for r in mc.rows], 6)
    if not basis:
        return SubspaceVerdict(True, None, 0)
    q = restrict_form(plucker_form_matrix(), basis)
    y = isotropic_vector(q)
    if y is None:
        return SubspaceVerdict(True, None, len(basis))
    zero = y[0] * 0
    p = [sum((y[i] * basis[i][c] for i in range(len(basis))), zero) for c in range(6)]
    K = witness_from_plucker(p)
    if not witness_rank_ok(K) or not verify_witness(f, K):
        raise WitnessReconstructionFailed(f"{f.name}: reconstructed plane does not collapse")
    return SubspaceVerdict(False, K, len(basis))


def collapsing_line(f: FamilySpec) -> list[Fraction] | None:
    """A nonzero u with M(t) u identically zero, if one exists."""
    deg = max(f.max_degree(), 0)
    rows = []
    for vec in (f.b1, f.b2):
        for h in range(deg + 1):
            rows.append([p.coeffs[h] if h < len(p.coeffs) else Fraction(0) for p in vec])
    ker = nullspace(rows, 4)
    return ker[0] if ker else None


def gamma_determinant(f: FamilySpec) -> Poly:
    (g11, g12), (g21, g22) = f.gamma
    return g11 * g22 - g12 * g21


def frame_independence(f: FamilySpec) -> bool:
    """True iff gamma_1(t), gamma_2(t) are independent for every t in [0, 1]."""
    g = gamma_determinant(f)
    if g.is_zero():
        return False
    return nonneg_root_count(g, 0, 1) == 0


def rotate_label_basis(f: FamilySpec, R: Sequence[Sequence]) -> FamilySpec:
    """Re-express the family in new label coordinates z' = R z (M -> M R^-1)."""
    rinv = inverse(R)
    if rinv is None:
        raise SingularMatrix("rotation matrix is singular")
    m = f.matrix().matmul_const(rinv)
    return FamilySpec(tuple(m.row(0)), tuple(m.row(1)), name=f.name)


def random_rational_rotation(rng: random.Random, max_num: int = 5, max_den: int = 5) -> list[list[Fraction]]:
    """Exact rational rotation via the Cayley transform (I - S)(I + S)^-1 of a skew S."""
    s = [[Fraction(0)] * 4 for _ in range(4)]
    for i in range(4):
        for j in range(i + 1, 4):
            val = Fraction(rng.randint(-max_num, max_num), rng.randint(1, max_den))
            s[i][j], s[j][i] = val, -val
    ident = [[Fraction(int(i == j)) for j in range(4)] for i in range(4)]
    minus = [[ident[i][j] - s[i][j] for j in range(4)] for i in range(4)]
    plus_inv = inverse([[ident[i][j] + s[i][j] for j in range(4)] for i in range(4)])
    return [[sum(minus[i][k] * plus_inv[k][j] for k in range(4)) for j in range(4)] for i in range(4)]


def find_independent_frame(f: FamilySpec, seed: int = 0, tries: int = 200):
    """Search rational rotations until the rotated frame passes frame_independence."""
    rng = random.Random(seed)
    for _ in range(tries):
        R = random_rational_rotation(rng)
        g = rotate_label_basis(f, R)
        if frame_independence(g):
            return R, g
    return None, None


# ---------------------------------------------------------------------------
# aggregate


@dataclass(frozen=True)
class CheckReport:
    family: str
    wronskian_ok: bool
    wronskian_roots_in_01: int | None
    wronskian_det: Poly
    frame_independent: bool
    subspace_ok: bool
    witness: list | None
    line_ok: bool
    exponents: ExponentReport
    minors: tuple[Poly, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "wronskian_ok": self.wronskian_ok,
            "wronskian_roots_in_01": self.wronskian_roots_in_01,
            "wronskian_det": self.wronskian_det.to_strings(),
            "frame_independent": self.frame_independent,
            "subspace_ok": self.subspace_ok,
            "line_ok": self.line_ok,
            "witness": None if self.witness is None else [[str(x) for x in row] for row in self.witness],
            "exponents": self.exponents.to_dict(),
            "minors": {lab: m.to_strings() for lab, m in zip(("12", "13", "14", "23", "24", "34"), self.minors)},
        }


def full_check(f: FamilySpec) -> CheckReport:
    mc = minor_coefficients(f)
    wr = wronskian_check(f)
    verdict = subspace_nondegeneracy(f, mc)
    line = collapsing_line(f)
    if verdict.ok and line is not None:
        # a collapsing line lies in a collapsing plane; both verdicts cannot disagree
        raise InvariantViolation(f"{f.name}: line collapses but no plane does")
    return CheckReport(
        family=f.name,
        wronskian_ok=wr["ok"],
        wronskian_roots_in_01=wr["roots_in_01"],
        wronskian_det=wr["det"],
        frame_independent=frame_independence(f),
        subspace_ok=verdict.ok,
        witness=verdict.witness,
        line_ok=line is None,
        exponents=ExponentReport.from_degree(mc.B),
        minors=mc.minors,
    )
