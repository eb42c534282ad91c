"""Semialgebraic sets in (t, y1, y2) and curved-tube capture counts.

A set is an intersection of constraints Q >= 0 or "Q = 0 thickened", the
latter meaning |Q| <= delta * |grad Q| at the test point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np
from scipy import ndimage

from .defaults import DEFAULTS
from .family import ExponentReport, FamilySpec, minor_coefficients
from .polycore import (
    Poly,
    as_fraction,
    count_real_roots,
    format_fraction,
    isolate_real_roots,
    poly_gcd,
    squarefree_part,
)
from .tubes import CurveEvaluator, Tube, grid_size, raster_center_batch

RELATIONS = ("ge0", "eq0_thick")


class TriPoly:
    """Sparse trivariate polynomial in (t, y1, y2) with rational coefficients."""

    def __init__(self, terms: Mapping[tuple[int, int, int], object]):
        clean = {}
        for exp, c in terms.items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != 3 or min(exp) < 0:
                raise ValueError(f"bad exponent {exp}")
            c = as_fraction(c)
            if c:
                clean[exp] = clean.get(exp, Fraction(0)) + c
        self.terms = {e: c for e, c in clean.items() if c}

    def __eq__(self, other):
        return isinstance(other, TriPoly) and self.terms == other.terms

    __hash__ = None

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def __call__(self, t, y1, y2):
        t, y1, y2 = (np.asarray(a, dtype=float) for a in (t, y1, y2))
        out = np.zeros(np.broadcast(t, y1, y2).shape)
        for (i, j, k), c in self.terms.items():
            out = out + float(c) * t**i * y1**j * y2**k
        return out

    def partial(self, axis: int) -> TriPoly:
        out = {}
        for e, c in self.terms.items():
            if e[axis]:
                ne = list(e)
                ne[axis] -= 1
                out[tuple(ne)] = c * e[axis]
        return TriPoly(out)

    def gradient_norm(self, t, y1, y2) -> np.ndarray:
        return np.sqrt(sum(self.partial(a)(t, y1, y2) ** 2 for a in range(3)))

    def along(self, t: Poly, y1: Poly, y2: Poly) -> Poly:
        """Exact substitution of univariate polynomials for (t, y1, y2)."""
        acc = Poly()
        for (i, j, k), c in self.terms.items():
            acc = acc + (t**i) * (y1**j) * (y2**k) * c
        return acc

    def to_records(self) -> list[dict]:
        return [{"exp": list(e), "coef": format_fraction(c)} for e, c in sorted(self.terms.items())]

    @classmethod
    def from_records(cls, recs: Sequence[Mapping]) -> TriPoly:
        return cls({tuple(r["exp"]): Fraction(str(r["coef"])) for r in recs})


@dataclass(frozen=True)
class Constraint:
    poly: TriPoly
    relation: str = "ge0"

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise ValueError(f"relation must be one of {RELATIONS}")


@dataclass(frozen=True)
class SemialgebraicSpec:
    constraints: tuple[Constraint, ...]
    e_max: int = DEFAULTS["E_max"]

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if self.complexity > self.e_max:
            raise ValueError(f"complexity {self.complexity} exceeds E_max={self.e_max}")

    @property
    def complexity(self) -> int:
        return sum(max(1, c.poly.degree()) for c in self.constraints)

    def contains(self, t, y1, y2, delta: float | None = None) -> np.ndarray:
        ok = np.ones(np.broadcast(np.asarray(t), np.asarray(y1), np.asarray(y2)).shape, dtype=bool)
        for c in self.constraints:
            q = c.poly(t, y1, y2)
            if c.relation == "ge0":
                ok &= q >= 0
            else:
                if delta is None:
                    raise ValueError("thickened constraint needs delta")
                ok &= np.abs(q) <= delta * c.poly.gradient_norm(t, y1, y2)
        return ok


def wisewell_surface() -> SemialgebraicSpec:
    """y1 = t * y2, thickened."""
    return SemialgebraicSpec((Constraint(TriPoly({(0, 1, 0): 1, (1, 0, 1): -1}), "eq0_thick"),))


def whole_cube() -> SemialgebraicSpec:
    return SemialgebraicSpec((Constraint(TriPoly({(0, 0, 0): 1}), "ge0"),))


@dataclass
class SetRaster:
    delta: float
    mask: np.ndarray

    @property
    def volume(self) -> float:
        return self.delta**3 * int(self.mask.sum())


def rasterize_set(s: SemialgebraicSpec, delta: float) -> SetRaster:
    """Cells whose centers satisfy every constraint (thickening by delta)."""
    n = grid_size(delta)
    c = (np.arange(n) + 0.5) * delta
    t, y1, y2 = np.meshgrid(c, c, c, indexing="ij", sparse=True)
    return SetRaster(delta, s.contains(t, y1, y2, delta))


# ---------------------------------------------------------------------------
# capture


@dataclass
class CaptureReport:
    delta: float
    lam: float
    captured: int
    tube_count: int
    set_volume: float
    bound: float
    epsilon: float
    N: int
    C_cal: float
    ratio: float = field(init=False)

    def __post_init__(self):
        self.ratio = self.captured / self.bound if self.bound > 0 else math.inf


def tube_fractions(f: FamilySpec, tubes: Sequence[Tube], mask: np.ndarray) -> np.ndarray:
    """|raster(T) & S| / |raster(T)| per tube (0 for tubes missing the cube)."""
    if not tubes:
        return np.zeros(0)
    d = tubes[0].delta
    ev = CurveEvaluator(f)
    z = np.array([T.label.z for T in tubes])
    a0 = np.array([T.alpha0 for T in tubes])
    lam = np.array([T.lam for T in tubes])
    ti, _, flat = raster_center_batch(ev, z, d, d, a0, lam)
    total = np.bincount(ti, minlength=len(tubes))
    hits = np.bincount(ti, weights=mask.ravel()[flat].astype(float), minlength=len(tubes))
    return np.where(total > 0, hits / np.maximum(total, 1), 0.0)


def capture_count(
    f: FamilySpec, tubes: Sequence[Tube], s: SemialgebraicSpec | SetRaster, lambda_frac: float,
    epsilon: float = DEFAULTS["epsilon"], C_cal: float = DEFAULTS["C_cal"], N: int | None = None,
) -> CaptureReport:
    """Count tubes with |T & S| >= lambda |T| and compare with C |S| delta^(-2-eps) lambda^(-N)."""
    if not 0 < lambda_frac <= 1:
        raise ValueError("lambda_frac must lie in (0, 1]")
    d = tubes[0].delta if tubes else (s.delta if isinstance(s, SetRaster) else None)
    raster = s if isinstance(s, SetRaster) else rasterize_set(s, d)
    N = ExponentReport.from_degree(minor_coefficients(f).B).N if N is None else N
    frac = tube_fractions(f, tubes, raster.mask)
    captured = int(np.sum((frac > 0) & (frac >= lambda_frac - 1e-12)))
    bound = C_cal * raster.volume * d ** (-2 - epsilon) * lambda_frac ** (-N)
    return CaptureReport(d, lambda_frac, captured, len(tubes), raster.volume, bound, epsilon, N, C_cal)


def degenerate_wisewell_labels(v: np.ndarray) -> np.ndarray:
    """Labels (0, -2 x4, x3, x4) whose Wisewell curves lie on y1 = t y2."""
    v = np.asarray(v, dtype=float).reshape(-1, 2)
    return np.column_stack([np.zeros(len(v)), -2 * v[:, 1], v[:, 0], v[:, 1]])


# ---------------------------------------------------------------------------
# Wongkew neighbourhood volumes


@dataclass
class WongkewResult:
    measured: float
    bound: float
    ok: bool


def neighbourhood_volume(q: TriPoly, rho: float, R: float, center: Sequence[float], h: float | None = None) -> float:
    """Volume of the rho-neighbourhood of {q = 0} & B(center, R), on a voxel grid of step h."""
    h = rho / 6 if h is None else h
    c = np.asarray(center, dtype=float)
    half = R + rho + 2 * h
    m = int(math.ceil(2 * half / h))
    nodes = [c[a] - half + h * np.arange(m + 1) for a in range(3)]
    X, Y, Z = np.meshgrid(*nodes, indexing="ij", sparse=True)
    pos = q(X, Y, Z) >= 0
    lo = hi = pos[:-1, :-1, :-1]
    lo = lo.copy()
    hi = hi.copy()
    for dx in (0, 1):
        for dy in (0, 1):
            for dz in (0, 1):
                corner = pos[dx : m + dx, dy : m + dy, dz : m + dz]
                lo &= corner
                hi |= corner
    crossing = hi & ~lo
    ctr = [nd[:-1] + h / 2 for nd in nodes]
    CX, CY, CZ = np.meshgrid(*ctr, indexing="ij", sparse=True)
    in_ball = (CX - c[0]) ** 2 + (CY - c[1]) ** 2 + (CZ - c[2]) ** 2 <= R**2
    seeds = crossing & in_ball
    if not seeds.any():
        return 0.0
    dist = ndimage.distance_transform_edt(~seeds, sampling=h)
    return float(np.count_nonzero(dist <= rho)) * h**3


def wongkew_bound(d: int, rho: float, R: float, c: Sequence[float], n: int = 3, m: int = 1) -> float:
    """sum_{j=m}^{n} c_j d^j rho^j R^(n-j)."""
    return float(sum(c[j - m] * d**j * rho**j * R ** (n - j) for j in range(m, n + 1)))


def calibrate_wongkew(rho: float = 0.05, R: float = 0.5, safety: float = 4.0) -> float:
    """c_j from the flat case: safety * measured / (rho R^2) for a plane through the center."""
    plane = TriPoly({(0, 1, 0): 1, (0, 0, 0): Fraction(-1, 2)})
    measured = neighbourhood_volume(plane, rho, R, (0.5, 0.5, 0.5))
    return safety * measured / (rho * R**2)


def wongkew_check(q: TriPoly, rho: float, R: float, center: Sequence[float],
                  c: Sequence[float] = tuple(DEFAULTS["c_wongkew"]), degree: int | None = None, h: float | None = None) -> WongkewResult:
    if q.is_zero():
        raise ValueError("variety polynomial must be nonzero")
    if rho > R:
        raise ValueError("need rho <= R")
    measured = neighbourhood_volume(q, rho, R, center, h)
    bound = wongkew_bound(degree or max(1, q.degree()), rho, R, c)
    return WongkewResult(measured, bound, measured <= bound)


# ---------------------------------------------------------------------------
# components of a curve inside a set


def _curve_polys(f: FamilySpec, z: Sequence) -> tuple[Poly, Poly]:
    zq = [as_fraction(c) for c in z]
    rows = []
    for vec in (f.b1, f.b2):
        acc = Poly()
        for p, c in zip(vec, zq):
            acc = acc + p * c
        rows.append(acc)
    return rows[0], rows[1]


def composed_constraints(f: FamilySpec, z: Sequence, s: SemialgebraicSpec, delta=None) -> list[Poly]:
    """Univariate h_i with {t : curve point in S} = {t : h_i(t) >= 0 for all i}."""
    y1, y2 = _curve_polys(f, z)
    tt = Poly.t()
    out = []
    for c in s.constraints:
        g = c.poly.along(tt, y1, y2)
        if c.relation == "ge0":
            out.append(g)
        else:
            if delta is None:
                raise ValueError("thickened constraint needs delta")
            d = as_fraction(delta)
            grad2 = sum((c.poly.partial(a).along(tt, y1, y2) ** 2 for a in range(3)), Poly())
            out.append(grad2 * (d * d) - g * g)
    return out


def _sign_at_root(h: Poly, interval: tuple[Fraction, Fraction], sq: Poly) -> int:
    """Sign of h at the unique root of sq isolated in (a, b]."""
    a, b = interval
    common = poly_gcd(h, sq)
    if common.degree() > 0 and count_real_roots(common, a, b) > 0:
        return 0
    # h has no root in (a, b], so its sign there is constant
    v = h(b)
    return (v > 0) - (v < 0)


def curve_component_count(f: FamilySpec, z: Sequence, s: SemialgebraicSpec, delta=None) -> dict:
    """Connected components of {t in [0, 1] : (t, Phi(z, t)) in S}, decided exactly.

    The roots of all composed constraints split [0, 1] into points and open
    gaps; each piece is tested exactly and feasible runs are counted.
    """
    hs = composed_constraints(f, z, s, delta)
    live = [h for h in hs if not h.is_zero()]
    D = sum(max(h.degree(), 0) for h in live)
    bounds = {"sturm": 1 + D, "milnor_thom": Fraction(D + 2, 2)}
    zero, one = Fraction(0), Fraction(1)
    prod = Poly([1])
    for h in live:
        prod = prod * h
    if prod.degree() <= 0:
        ok = all(h.coeffs[0] >= 0 for h in live)
        return {"components": int(ok), **bounds}
    sq = squarefree_part(prod)

    def ok_at(x: Fraction) -> bool:
        return all(h(x) >= 0 for h in live)

    # pieces: ("exact", x) or ("root", (a, b)); upper(x) bounds the piece from above
    pieces: list[tuple[str, object]] = [("exact", zero)]
    pieces += [("root", iv) for iv in isolate_real_roots(sq, zero, one)]
    if sq(one) != 0:
        pieces.append(("exact", one))
    upper = lambda pc: pc[1] if pc[0] == "exact" else pc[1][1]  # noqa: E731

    flags = []
    for k, pc in enumerate(pieces):
        if pc[0] == "exact":
            flags.append(ok_at(pc[1]))
        else:
            flags.append(all(_sign_at_root(h, pc[1], sq) >= 0 for h in live))
        if k + 1 < len(pieces):
            lo, hi = upper(pc), upper(pieces[k + 1])
            if pc[0] == "root" and lo >= hi:
                # shrink the isolating interval until it ends before the next point
                a, b = pc[1]
                while b >= hi:
                    mid = (a + b) / 2
                    a, b = (a, mid) if count_real_roots(sq, a, mid) else (mid, b)
                lo = b
            x = (lo + hi) / 2
            while sq(x) == 0 or count_real_roots(sq, lo, x) > 0:
                x = (lo + x) / 2
            flags.append(ok_at(x))
    comps = sum(1 for k, good in enumerate(flags) if good and (k == 0 or not flags[k - 1]))
    return {"components": comps, **bounds}
