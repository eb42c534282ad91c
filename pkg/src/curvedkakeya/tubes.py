"""Curves, tangents and curved delta-tubes over the unit cube [0,1]^3.

A label z = (x, v) in R^4 defines the curve t -> (t, Phi(z, t)) with
Phi(z, t) = M(t) z.  Cells of the shared grid are indexed (t, y1, y2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ZeroVector
from .family import FamilySpec

_EPS = 1e-12


@dataclass(frozen=True)
class Label:
    x: tuple[float, float]
    v: tuple[float, float]

    @classmethod
    def from_z(cls, z: Sequence[float]) -> Label:
        z = [float(c) for c in z]
        return cls((z[0], z[1]), (z[2], z[3]))

    @property
    def z(self) -> np.ndarray:
        return np.array([*self.x, *self.v], dtype=float)

    def in_unit_cube(self) -> bool:
        return bool(np.all((self.z >= 0) & (self.z <= 1)))


@dataclass(frozen=True)
class Tube:
    label: Label
    alpha0: float = 0.0
    lam: float = 1.0
    delta: float = 1 / 16

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if not (0 <= self.alpha0 <= 1):
            raise ValueError("alpha0 must lie in [0, 1]")
        if not (self.delta - _EPS <= self.lam <= 1 - self.alpha0 + _EPS):
            raise ValueError("need delta <= lambda <= 1 - alpha0")

    @property
    def t_range(self) -> tuple[float, float]:
        return self.alpha0, self.alpha0 + self.lam


class CurveEvaluator:
    """Float evaluation of M(t) and M'(t), cached per family."""

    def __init__(self, f: FamilySpec):
        self.family = f
        self.coef = f.coefficient_array()  # (2, 4, deg+1)
        deg = self.coef.shape[2] - 1
        self.dcoef = self.coef[:, :, 1:] * np.arange(1, deg + 1) if deg > 0 else np.zeros((2, 4, 1))

    @staticmethod
    def _mat(coef: np.ndarray, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        powers = t[..., None] ** np.arange(coef.shape[2])
        return np.einsum("rjh,...h->...rj", coef, powers)

    def matrix(self, t) -> np.ndarray:
        """M(t), shape t.shape + (2, 4)."""
        return self._mat(self.coef, t)

    def dmatrix(self, t) -> np.ndarray:
        return self._mat(self.dcoef, t)

    def phi(self, z, t) -> np.ndarray:
        """Phi for labels z (..., 4) at times t (m,): shape (..., m, 2)."""
        z = np.asarray(z, dtype=float)
        return np.einsum("mrj,...j->...mr", self.matrix(np.atleast_1d(t)), z)

    def dphi(self, z, t) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return np.einsum("mrj,...j->...mr", self.dmatrix(np.atleast_1d(t)), z)

    def speed_bound(self, z) -> float:
        """Upper bound for |d/dt Phi(z, t)| on [0, 1] (|t^h| <= 1 termwise)."""
        z = np.asarray(z, dtype=float)
        terms = np.abs(np.einsum("rjh,j->rh", self.dcoef, z))
        return float(np.sqrt((terms.sum(axis=1) ** 2).sum()))


def _z(z) -> np.ndarray:
    return z.z if isinstance(z, Label) else np.asarray(z, dtype=float)


def phi(f: FamilySpec, z, t: float) -> np.ndarray:
    return CurveEvaluator(f).phi(_z(z), t)[0]


def tangent(f: FamilySpec, z, t: float) -> np.ndarray:
    """(1, z.b1'(t), z.b2'(t))."""
    d = CurveEvaluator(f).dphi(_z(z), t)[0]
    return np.array([1.0, d[0], d[1]])


def wedge(u, w) -> float:
    """|u x w| / (|u| |w|): the sine of the angle between u and w."""
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    nu, nw = np.linalg.norm(u), np.linalg.norm(w)
    if nu == 0 or nw == 0:
        raise ZeroVector("wedge of a zero vector")
    return float(min(1.0, np.linalg.norm(np.cross(u, w)) / (nu * nw)))


def wedge_many(u: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Row-wise wedge for tangent arrays whose first coordinate is 1."""
    c = np.cross(u, w)
    out = np.linalg.norm(c, axis=-1) / (np.linalg.norm(u, axis=-1) * np.linalg.norm(w, axis=-1))
    return np.minimum(out, 1.0)


def tube_contains(f: FamilySpec, T: Tube, p: Sequence[float]) -> bool:
    t = float(p[0])
    a, b = T.t_range
    if t < a or t > b:
        return False
    y = np.asarray(p[1:3], dtype=float)
    return bool(np.linalg.norm(y - phi(f, T.label, t)) <= T.delta)


# ---------------------------------------------------------------------------
# grid and rasterization


def grid_size(delta: float) -> int:
    n = 1.0 / delta
    return int(round(n)) if abs(n - round(n)) < 1e-9 else int(math.ceil(n))


@dataclass
class Grid3:
    delta: float
    counts: np.ndarray

    @classmethod
    def zeros(cls, delta: float, dtype=np.int32) -> Grid3:
        n = grid_size(delta)
        return cls(delta, np.zeros((n, n, n), dtype=dtype))

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.counts.shape

    def centers(self, axis_count: int | None = None) -> np.ndarray:
        n = self.dims[0] if axis_count is None else axis_count
        return (np.arange(n) + 0.5) * self.delta

    def add_cells(self, flat: np.ndarray, weight: int = 1) -> None:
        self.counts += (weight * np.bincount(flat, minlength=self.counts.size)).reshape(self.dims).astype(
            self.counts.dtype
        )

    @property
    def support_cells(self) -> int:
        return int(np.count_nonzero(self.counts))


def unravel(flat: np.ndarray, n: int) -> np.ndarray:
    return np.stack(np.unravel_index(flat, (n, n, n)), axis=-1)


def _t_columns(n: int, g: float, a: float, b: float, centered: bool) -> np.ndarray:
    """t-cell indices selected by the interval [a, b]."""
    if centered:
        i = np.arange(n)
        tc = (i + 0.5) * g
        return i[(tc >= a - _EPS) & (tc <= b + _EPS)]
    lo = max(0, int(math.floor(a / g)))
    hi = min(n - 1, int(math.floor(b / g - _EPS)) if b < 1 else n - 1)
    return np.arange(lo, hi + 1)


def _disc_offsets(radius: float, rounded: bool = False) -> np.ndarray:
    # around a rounded base cell |k| <= floor(radius + 1/2) suffices
    r = int(math.floor(radius + 0.5)) if rounded else int(math.ceil(radius)) + 1
    k = np.arange(-r, r + 1)
    return np.stack(np.meshgrid(k, k, indexing="ij"), axis=-1).reshape(-1, 2)


def raster_center_batch(
    ev: CurveEvaluator, z: np.ndarray, delta: float, g: float,
    alpha0: np.ndarray | None = None, lam: np.ndarray | None = None, clip: bool = True,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Center-rule raster of many tubes at once.

    Cell (i, j, k) belongs to a tube iff its center lies in the tube.
    Returns (tube index, t-cell index, flat cell index) for every incidence.
    With clip=False cells outside the cube are kept (flat index then invalid),
    which gives the full cell count |T| of each tube.
    """
    z = np.atleast_2d(np.asarray(z, dtype=float))
    n = grid_size(g)
    tc = (np.arange(n) + 0.5) * g
    y = ev.phi(z, tc) / g - 0.5  # (ntubes, n, 2), in cell-center units
    base = np.rint(y).astype(np.int64)
    offs = _disc_offsets(delta / g, rounded=True)
    cand = base[:, :, None, :] + offs[None, None, :, :]  # (nt, n, K, 2)
    d2 = ((cand - y[:, :, None, :]) ** 2).sum(-1)
    keep = d2 <= (delta / g) ** 2 * (1 + 1e-12)
    if clip:
        keep &= np.all((cand >= 0) & (cand < n), axis=-1)
    if alpha0 is not None:
        a = np.asarray(alpha0, dtype=float)[:, None]
        b = a + np.asarray(lam, dtype=float)[:, None]
        tmask = (tc[None, :] >= a - _EPS) & (tc[None, :] <= b + _EPS)
        keep &= tmask[:, :, None]
    ti, ci, ki = np.nonzero(keep)
    cells = cand[ti, ci, ki]
    flat = (ci * n + cells[:, 0]) * n + cells[:, 1]
    return ti, ci, flat


def rasterize_tube(f: FamilySpec | CurveEvaluator, T: Tube, delta_grid: float, mode: str = "cover") -> np.ndarray:
    """Sorted flat indices of grid cells assigned to tube T.

    mode="cover": every cell meeting T.  The center curve is sampled inside each
    t-column with stride s = delta_grid / (16 max(1, L / 4)), L a speed bound; a
    cell is kept when its box lies within delta + L s / 2 of a sample.
    mode="center": cells whose centers lie in T.
    """
    ev = f if isinstance(f, CurveEvaluator) else CurveEvaluator(f)
    g = delta_grid
    n = grid_size(g)
    z = T.label.z
    if mode == "center":
        _, _, flat = raster_center_batch(ev, z[None], T.delta, g, [T.alpha0], [T.lam])
        return np.unique(flat)
    if mode != "cover":
        raise ValueError(f"unknown raster mode {mode!r}")
    a, b = T.t_range
    L = ev.speed_bound(z)
    s = g / 16 / max(1.0, L / 4)
    reach = T.delta + L * s / 2
    out = []
    offs = _disc_offsets(reach / g)
    for i in _t_columns(n, g, a, b, centered=False):
        lo, hi = max(a, i * g), min(b, (i + 1) * g)
        ts = np.linspace(lo, hi, max(2, int(math.ceil((hi - lo) / s)) + 1))
        y = ev.phi(z, ts) / g  # cell units, cell j covers [j, j+1)
        base = np.floor(y).astype(np.int64)
        cand = base[:, None, :] + offs[None, :, :]
        # distance from the sample to the cell box [j, j+1)
        gap = np.maximum(np.maximum(cand - y[:, None, :], y[:, None, :] - (cand + 1)), 0.0)
        keep = ((gap**2).sum(-1) <= (reach / g) ** 2 * (1 + 1e-12)) & np.all((cand >= 0) & (cand < n), axis=-1)
        cells = cand[keep]
        out.append((i * n + cells[:, 0]) * n + cells[:, 1])
    return np.unique(np.concatenate(out)) if out else np.zeros(0, dtype=np.int64)


def brute_force_cells(f: FamilySpec, T: Tube, delta_grid: float) -> np.ndarray:
    """Cells whose centers satisfy tube_contains, by scanning every cell center."""
    ev = CurveEvaluator(f)
    n = grid_size(delta_grid)
    c = (np.arange(n) + 0.5) * delta_grid
    a, b = T.t_range
    cols = np.nonzero((c >= a - _EPS) & (c <= b + _EPS))[0]
    if cols.size == 0:
        return np.zeros(0, dtype=np.int64)
    centre = ev.phi(T.label.z, c[cols])  # (m, 2)
    dy1 = c[None, :, None] - centre[:, 0, None, None]
    dy2 = c[None, None, :] - centre[:, 1, None, None]
    inside = dy1**2 + dy2**2 <= T.delta**2 * (1 + 1e-12)
    ii, jj, kk = np.nonzero(inside)
    return np.sort((cols[ii] * n + jj) * n + kk)


# ---------------------------------------------------------------------------
# label selection


def select_separated_labels(
    candidates: Iterable, delta: float, mode: str = "direction_v",
    plane: Sequence[Sequence[float]] | None = None,
) -> list[int]:
    """Greedy maximal subsequence (as indices) whose keys are pairwise >= delta apart.

    mode="direction_v" keys on v; mode="projected" keys on the orthogonal
    projection onto span(plane), given as two 4-vectors.
    """
    z = np.array([_z(c) for c in candidates], dtype=float).reshape(-1, 4)
    if mode == "direction_v":
        keys = z[:, 2:]
    elif mode == "projected":
        if plane is None:
            raise ValueError("projected mode needs a plane")
        q, _ = np.linalg.qr(np.asarray(plane, dtype=float).T)
        keys = z @ q
    else:
        raise ValueError(f"unknown mode {mode!r}")
    buckets: dict[tuple[int, int], list[int]] = {}
    kept = []
    for idx, key in enumerate(keys):
        cell = (int(math.floor(key[0] / delta)), int(math.floor(key[1] / delta)))
        ok = True
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                for other in buckets.get((cell[0] + di, cell[1] + dj), ()):
                    if np.hypot(*(keys[other] - key)) < delta:
                        ok = False
                        break
                if not ok:
                    break
            if not ok:
                break
        if ok:
            kept.append(idx)
            buckets.setdefault(cell, []).append(idx)
    return kept


def jittered_grid(count_per_side: int, delta: float, rng: np.random.Generator,
                  lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    """count_per_side^2 points in [lo, hi]^2, pairwise >= delta apart.

    The grid is inset by the jitter amplitude j and its step is chosen so that
    step - 2j = delta; neighbors therefore stay delta-separated after moving.
    """
    m = count_per_side
    if m == 1:
        return np.array([[(lo + hi) / 2] * 2])
    jit = (hi - lo - (m - 1) * delta) / (2 * m)
    if jit < -_EPS:
        raise ValueError("too many points for this separation")
    jit = max(jit, 0.0)
    step = (hi - lo - 2 * jit) / (m - 1)
    base = lo + jit + np.arange(m) * step
    gx, gy = np.meshgrid(base, base, indexing="ij")
    pts = np.stack([gx.ravel(), gy.ravel()], axis=-1)
    return pts + rng.uniform(-jit, jit, size=pts.shape)
