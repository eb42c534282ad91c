"""Incidence fields of curved tubes and the functionals evaluated on them.

Fields live on the Grid3 of spacing delta.  Pairwise sums run over ordered
pairs (T1, T2) of tubes through a cell, with tangents taken at the cell-center t.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .defaults import DEFAULTS
from .errors import EmptyCell, LadderTooShort, MixedDelta
from .family import ExponentReport, FamilySpec, minor_coefficients
from .tubes import (
    CurveEvaluator,
    Grid3,
    Label,
    Tube,
    grid_size,
    jittered_grid,
    raster_center_batch,
    rasterize_tube,
    wedge_many,
)

WEDGE_CUTOFF = DEFAULTS["wedge_cutoff"]
C_RAST = DEFAULTS["C_rast"]


def common_delta(tubes: Sequence[Tube], delta: float | None = None) -> float:
    ds = {T.delta for T in tubes}
    if delta is not None:
        ds.add(delta)
    if len(ds) > 1:
        raise MixedDelta(f"tubes use several radii: {sorted(ds)}")
    if not ds:
        raise ValueError("delta needed for an empty tube list")
    return ds.pop()


def incidences(ev: CurveEvaluator, tubes: Sequence[Tube], g: float, mode: str = "center", chunk: int | None = None):
    """(tube index, t-cell index, flat cell) for every tube/cell incidence."""
    n = grid_size(g)
    if not tubes:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, empty
    if mode == "cover":
        parts = [rasterize_tube(ev, T, g, "cover") for T in tubes]
        ti = np.concatenate([np.full(len(p), k, dtype=np.int64) for k, p in enumerate(parts)])
        flat = np.concatenate(parts).astype(np.int64)
        return ti, flat // (n * n), flat
    delta = tubes[0].delta
    z = np.array([T.label.z for T in tubes])
    a0 = np.array([T.alpha0 for T in tubes])
    lam = np.array([T.lam for T in tubes])
    window = (2 * int(math.floor(delta / g + 0.5)) + 1) ** 2
    chunk = chunk or max(1, 4_000_000 // (n * window))
    out = []
    for s in range(0, len(tubes), chunk):
        ti, ci, flat = raster_center_batch(ev, z[s : s + chunk], delta, g, a0[s : s + chunk], lam[s : s + chunk])
        out.append((ti + s, ci, flat))
    return tuple(np.concatenate(col) for col in zip(*out))


def accumulate_field(f: FamilySpec, tubes: Sequence[Tube], delta: float | None = None, mode: str = "center") -> Grid3:
    """counts[cell] = number of tubes whose raster holds the cell."""
    d = common_delta(tubes, delta)
    grid = Grid3.zeros(d)
    if tubes:
        _, _, flat = incidences(CurveEvaluator(f), tubes, d, mode)
        grid.add_cells(flat)
    return grid


def lp_norm(g: Grid3, p: float) -> float:
    """(delta^3 sum counts^p)^(1/p)."""
    if p < 1:
        raise ValueError("p must be >= 1")
    c = g.counts[g.counts > 0].astype(float)
    if c.size == 0:
        return 0.0
    # factor out the max count to keep large p finite
    m = c.max()
    return float(m * (g.delta**3 * np.sum((c / m) ** p)) ** (1.0 / p))


@dataclass
class FieldStats:
    delta: float
    tube_count: int
    lp: dict[float, float]
    max_count: int
    support_cells: int
    total_incidences: int

    @classmethod
    def of(cls, g: Grid3, tube_count: int, ps: Sequence[float]) -> FieldStats:
        return cls(
            g.delta, tube_count, {float(p): lp_norm(g, float(p)) for p in ps},
            int(g.counts.max(initial=0)), g.support_cells, int(g.counts.sum(dtype=np.int64)),
        )


# ---------------------------------------------------------------------------
# pairwise functionals


def _pair_data(f: FamilySpec, tubes: Sequence[Tube], mode: str = "center"):
    """Cell id and wedge of tangents for every ordered pair of co-incident tubes."""
    d = common_delta(tubes)
    ev = CurveEvaluator(f)
    n = grid_size(d)
    ti, ci, flat = incidences(ev, tubes, d, mode)
    if ti.size == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    z = np.array([T.label.z for T in tubes])
    tc = (np.arange(n) + 0.5) * d
    dm = ev.dmatrix(tc)  # (n, 2, 4)
    tan = np.ones((ti.size, 3))
    tan[:, 1:] = np.einsum("irj,ij->ir", dm[ci], z[ti])

    order = np.argsort(flat, kind="stable")
    flat, tan = flat[order], tan[order]
    cells, start, size = np.unique(flat, return_index=True, return_counts=True)
    busy = size > 1
    if not busy.any():
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    # expand only incidences in cells holding at least two tubes
    gid = np.repeat(np.arange(cells.size), size)
    mask = busy[gid]
    inc = np.nonzero(mask)[0]
    k = size[gid[inc]]
    first = np.repeat(inc, k)
    offset = np.arange(first.size) - np.repeat(np.cumsum(k) - k, k)
    second = np.repeat(start[gid[inc]], k) + offset
    keep = first != second
    first, second = first[keep], second[keep]
    return flat[first], wedge_many(tan[first], tan[second])


def plain_multilinear_check(f: FamilySpec, tubes: Sequence[Tube], slack: float = C_RAST, mode: str = "center") -> dict:
    """delta^3 sum_cells sum_{T1,T2} |v1 ^ v2| against delta^3 (#T)^2."""
    if not tubes:
        return {"lhs": 0.0, "rhs": 0.0, "ok": True, "ratio": 0.0}
    d = tubes[0].delta
    _, w = _pair_data(f, tubes, mode)
    lhs = d**3 * float(w.sum())
    rhs = d**3 * len(tubes) ** 2
    return {"lhs": lhs, "rhs": rhs, "ok": lhs <= slack * rhs, "ratio": lhs / rhs}


def bilinear_functional(f: FamilySpec, tubes: Sequence[Tube], alpha: float, beta: float, mode: str = "center") -> float:
    """delta^3 sum_cells (sum_{T1,T2} |v1 ^ v2|^alpha)^beta, near-parallel pairs dropped."""
    if len(tubes) < 2:
        return 0.0
    d = tubes[0].delta
    cell, w = _pair_data(f, tubes, mode)
    keep = w >= WEDGE_CUTOFF
    cell, w = cell[keep], w[keep]
    if w.size == 0:
        return 0.0
    _, inv = np.unique(cell, return_inverse=True)
    per_cell = np.bincount(inv, weights=w ** float(alpha))
    return d**3 * float(np.sum(per_cell ** float(beta)))


def bilinear_bound(delta: float, tube_count: int) -> float:
    return delta**2.5 * tube_count**1.5


# ---------------------------------------------------------------------------
# broad / narrow


@dataclass(frozen=True)
class BroadNarrowParams:
    K_caps: int = 4
    rho: float = 1.0
    narrow_threshold: int = DEFAULTS["narrow_threshold"]

    def __post_init__(self):
        if self.K_caps < 2:
            raise ValueError("K_caps must be >= 2")
        if not 0 < self.rho <= 1:
            raise ValueError("rho must lie in (0, 1]")

    @property
    def cap_side(self) -> float:
        return self.rho / self.K_caps


def cell_tubes(f: FamilySpec, tubes: Sequence[Tube], cell: int | tuple[int, int, int], mode: str = "center") -> np.ndarray:
    d = common_delta(tubes)
    n = grid_size(d)
    flat_cell = cell if np.isscalar(cell) else int(np.ravel_multi_index(tuple(cell), (n, n, n)))
    ti, _, flat = incidences(CurveEvaluator(f), tubes, d, mode)
    return np.unique(ti[flat == flat_cell])


def classify_directions(v: np.ndarray, params: BroadNarrowParams) -> dict:
    """Narrow iff at most narrow_threshold caps hold more than half of the directions."""
    v = np.asarray(v, dtype=float).reshape(-1, 2)
    total = len(v)
    if total == 0:
        raise EmptyCell("no tubes through this cell")
    side = params.cap_side
    caps = np.floor(v / side).astype(np.int64)
    keys, counts = np.unique(caps, axis=0, return_counts=True)
    order = np.argsort(-counts, kind="stable")
    top = np.cumsum(counts[order])
    reach = np.nonzero(2 * top > total)[0]
    if reach.size and reach[0] < params.narrow_threshold:
        used = order[: reach[0] + 1]
        return {"kind": "narrow", "dominating_caps": {tuple(map(int, keys[i])) for i in used}}
    return {"kind": "broad", "dominating_caps": set()}


def broad_narrow_classify(f: FamilySpec, tubes: Sequence[Tube], cell, params: BroadNarrowParams) -> dict:
    idx = cell_tubes(f, tubes, cell)
    if idx.size == 0:
        raise EmptyCell(f"cell {cell} is empty")
    v = np.array([tubes[i].label.v for i in idx])
    return classify_directions(v, params)


# ---------------------------------------------------------------------------
# scaling experiments


@dataclass
class ScalingFit:
    points: list[tuple[float, float]]
    slope: float
    intercept: float
    r2: float


def fit_scaling(deltas: Sequence[float], values: Sequence[float]) -> ScalingFit:
    """Least-squares line through (log delta, log value)."""
    if len(deltas) < 3:
        raise LadderTooShort("need at least 3 ladder points")
    x = np.log(np.asarray(deltas, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - float(np.sum(resid**2) / ss) if ss > 0 else 1.0
    return ScalingFit(list(zip(x.tolist(), y.tolist())), float(slope), float(intercept), r2)


def linear_target(f: FamilySpec, p=None) -> Fraction:
    return ExponentReport.from_degree(minor_coefficients(f).B).linear_target(p)


def ladder_labels(delta: float, rng: np.random.Generator, plane: Sequence[Sequence[float]] | None = None,
                  count: int | None = None) -> np.ndarray:
    """ceil(delta^-2) labels with delta-separated v (or plane coordinates).

    Without ``plane``: v on a jittered grid in [0,1]^2 and x uniform in [0,1]^2.
    With ``plane`` (a 4x2 matrix K): z = K (a, b) with (a, b) on the jittered grid.
    """
    count = math.ceil(delta**-2 - 1e-9) if count is None else count
    side = math.ceil(math.sqrt(count) - 1e-9)
    grid = jittered_grid(side, delta, rng)
    grid = grid[np.sort(rng.permutation(len(grid))[:count])]
    if plane is None:
        x = rng.uniform(0, 1, size=(count, 2))
        return np.hstack([x, grid])
    return grid @ np.asarray(plane, dtype=float).T


@dataclass
class LadderResult:
    fit: ScalingFit
    stats: list[FieldStats]
    p: float
    target: float | None = None
    extras: dict = field(default_factory=dict)


def linear_kakeya_experiment(f: FamilySpec, ladder: Sequence[float], p: float, seed: int,
                             plane=None, mode: str = "center") -> LadderResult:
    """||sum chi_T||_p across a descending delta ladder, with #T = ceil(delta^-2)."""
    if len(ladder) < 3:
        raise LadderTooShort("need at least 3 ladder points")
    if any(b >= a for a, b in zip(ladder, ladder[1:])):
        raise ValueError("ladder must be strictly decreasing")
    stats = []
    for k, d in enumerate(ladder):
        rng = np.random.default_rng([seed, k])
        z = ladder_labels(d, rng, plane)
        tubes = [Tube(Label.from_z(row), 0.0, 1.0, d) for row in z]
        g = accumulate_field(f, tubes, d, mode)
        stats.append(FieldStats.of(g, len(tubes), [1.0, 2.0, float(p)]))
    fit = fit_scaling(ladder, [s.lp[float(p)] for s in stats])
    try:
        target = float(linear_target(f, Fraction(p).limit_denominator(10**6)))
    except ValueError:
        target = None
    return LadderResult(fit, stats, float(p), target)


def bush_labels(f: FamilySpec, v: np.ndarray, t0: float, y0: Sequence[float]) -> np.ndarray:
    """Labels (x, v) whose curves all pass through (t0, y0)."""
    m = CurveEvaluator(f).matrix(t0)
    bx, gv = m[:, :2], m[:, 2:]
    rhs = np.asarray(y0, dtype=float)[None, :] - v @ gv.T
    x = np.linalg.solve(bx, rhs.T).T
    return np.hstack([x, v])


def bush_tubes(f: FamilySpec, delta: float, seed: int, t0: float = 0.5, y0: Sequence[float] = (0.5, 0.5)) -> list[Tube]:
    """About delta^-1 full-length tubes with delta-separated v, all through (t0, y0)."""
    rng = np.random.default_rng([seed, int(round(-math.log2(delta) * 1000))])
    v = jittered_grid(math.ceil(delta**-0.5), delta, rng)
    return [Tube(Label.from_z(z), 0.0, 1.0, delta) for z in bush_labels(f, v, t0, y0)]
