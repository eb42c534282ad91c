"""(delta, s)-sets in [0,1]^4, their projections under P_t, and box dimension.

Box counting at fixed dyadic scales stands in for Hausdorff dimension.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .defaults import DEFAULTS
from .errors import InfeasibleExponent, TooFewScales
from .family import FamilySpec
from .polycore import Poly
from .tubes import CurveEvaluator

C_F = DEFAULTS["C_F"]
DEFAULT_SCALES = tuple(2.0**-k for k in range(3, 9))
WISEWELL_PLANE = ((1, 0), (0, 0), (0, 0), (0, 1))


@dataclass
class PointCloud:
    points: np.ndarray
    delta: float
    s_target: float
    generator: str
    params: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.points)

    def to_text(self) -> str:
        """One point per line, 12 significant digits."""
        return "".join(" ".join(f"{c:.12g}" for c in row) + "\n" for row in self.points)


def _orthonormal_plane(K) -> np.ndarray:
    q, _ = np.linalg.qr(np.asarray(K, dtype=float))
    return q[:, :2]


def plane_points(K, spacing: float, center=(0.5, 0.5, 0.5, 0.5)) -> np.ndarray:
    """Square grid of the given spacing in span(K) + center, clipped to [0,1]^4."""
    q = _orthonormal_plane(K)
    c = np.asarray(center, dtype=float)
    half = 1.0  # the plane meets [0,1]^4 within distance 1 of the center
    k = np.arange(-math.floor(half / spacing), math.floor(half / spacing) + 1) * spacing
    a, b = np.meshgrid(k, k, indexing="ij")
    pts = c + a.reshape(-1, 1) * q[:, 0] + b.reshape(-1, 1) * q[:, 1]
    inside = np.all((pts >= 0) & (pts <= 1), axis=1)
    return pts[inside]


def cantor_1d(ratio: float, levels: int) -> np.ndarray:
    """Left endpoints of the 2^levels intervals of the two-piece Cantor set of this ratio."""
    pts = np.zeros(1)
    scale = 1.0
    for _ in range(levels):
        pts = np.concatenate([pts, pts + scale * (1 - ratio)])
        scale *= ratio
    return np.sort(pts)


def cantor_product(ratio: float, levels: int, dim: int) -> np.ndarray:
    axis = cantor_1d(ratio, levels)
    grids = np.meshgrid(*([axis] * dim), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


def generate_cloud(kind: str, delta: float, s: float, seed: int = 0, plane=None) -> PointCloud:
    """Build a delta-separated cloud with about delta^-s points.

    kind: "uniform" (jittered grid of spacing delta^(s/4)), "plane" (grid of
    spacing delta^(s/2) in span(plane)), "wisewell_plane" (the plane
    (a, 0, 0, b)), "cantor" (product of two-piece Cantor sets, ratio 2^(-4/s)).
    """
    if not 0 < s <= 4:
        raise InfeasibleExponent("s must lie in (0, 4]")
    if not 0 < delta <= 0.25:
        raise ValueError("delta must lie in (0, 1/4]")
    rng = np.random.default_rng(seed)
    if kind == "uniform":
        h = delta ** (s / 4)
        m = max(1, int(math.floor(1 / h)))
        jit = max(0.0, (h - delta) / 2)
        base = (np.arange(m) + 0.5) * h
        grids = np.meshgrid(*([base] * 4), indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=-1)
        pts = np.clip(pts + rng.uniform(-jit, jit, pts.shape), 0, 1)
        return PointCloud(pts, delta, s, "uniform", {"seed": seed})
    if kind in ("plane", "wisewell_plane"):
        if s > 2:
            raise InfeasibleExponent("a 2-plane carries at most s = 2")
        K = WISEWELL_PLANE if kind == "wisewell_plane" else plane
        if K is None:
            raise ValueError("plane generator needs a 4x2 matrix")
        pts = plane_points(K, delta ** (s / 2))
        return PointCloud(pts, delta, s, kind, {"plane": np.asarray(K, dtype=float).tolist()})
    if kind == "cantor":
        if s >= 4:
            raise InfeasibleExponent("Cantor product needs s < 4")
        ratio = 2.0 ** (-4.0 / s)
        levels = 0
        # the gap at the next level is (1 - 2 ratio) ratio^levels
        while (1 - 2 * ratio) * ratio**levels >= delta and 2 ** (4 * (levels + 1)) <= 2**22:
            levels += 1
        pts = cantor_product(ratio, levels, 4)
        return PointCloud(pts, delta, s, "cantor", {"ratio": ratio, "levels": levels})
    raise ValueError(f"unknown generator {kind!r}")


def random_generic_plane(f: FamilySpec, seed: int = 0, max_entry: int = 9,
                         min_singular: float = 0.1, max_tries: int = 2000) -> list[list[Fraction]]:
    """Random rational 4x2 K, redrawn until the family maps span(K) onto R^2 for some t.

    det(M(t) K) not identically zero is checked exactly. At finite scales a
    plane that is only barely mapped onto R^2 looks degenerate, so K is also
    redrawn while the smallest singular value of M(t) Q (Q an orthonormal
    basis of span(K)) dips below min_singular on a grid of t in [0, 1].
    """
    rng = random.Random(seed)
    mat = f.matrix()
    ev = CurveEvaluator(f)
    ts = np.linspace(0, 1, 129)
    for _ in range(max_tries):
        K = [[Fraction(rng.randint(-max_entry, max_entry), rng.randint(1, max_entry)) for _ in range(2)]
             for _ in range(4)]
        m = mat.matmul_const(K)
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        if det.is_zero():
            continue
        q = _orthonormal_plane([[float(c) for c in row] for row in K])
        worst = min(np.linalg.svd(ev.matrix(t) @ q, compute_uv=False)[-1] for t in ts)
        if worst >= min_singular:
            return K
    raise ValueError(f"no plane with singular values >= {min_singular} in {max_tries} draws")


def plane_determinant(f: FamilySpec, K) -> Poly:
    m = f.matrix().matmul_const(K)
    return m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]


# ---------------------------------------------------------------------------
# verification


def _pack(keys: np.ndarray) -> np.ndarray:
    """Injective int64 code for rows of small nonnegative-offset integer keys."""
    keys = keys - keys.min(axis=0)
    span = keys.max(axis=0) + 1
    code = np.zeros(len(keys), dtype=np.int64)
    for col in range(keys.shape[1]):
        code = code * int(span[col]) + keys[:, col]
    return code


@dataclass
class DeltaSVerdict:
    ok: bool
    worst_ratio: float
    worst_ball: tuple | None
    separated: bool
    C_F: float = C_F


def verify_delta_s(cloud: PointCloud, C: float = C_F) -> DeltaSVerdict:
    """Separation plus #(P & Q) <= C (r/delta)^s over dyadic cubes Q.

    Q runs over cubes of half-width r centred on the r-grid, for dyadic
    r in [delta, 1]; counted as 2r-boxes with offsets 0 and r.
    """
    pts = np.asarray(cloud.points, dtype=float).reshape(-1, 4)
    if len(pts) == 0:
        return DeltaSVerdict(True, 0.0, None, True, C)
    separated = True
    if len(pts) > 1:
        dist, _ = cKDTree(pts).query(pts, k=2)
        separated = bool(dist[:, 1].min() >= cloud.delta * (1 - 1e-9))
    worst, where = 0.0, None
    r = 1.0
    while r >= cloud.delta * (1 - 1e-12):
        for off in (0.0, r):
            keys = np.floor((pts + off) / (2 * r)).astype(np.int64)
            packed = _pack(keys)
            _, first, counts = np.unique(packed, return_index=True, return_counts=True)
            k = int(np.argmax(counts))
            ratio = counts[k] / (r / cloud.delta) ** cloud.s_target
            if ratio > worst:
                worst = float(ratio)
                box = keys[first[k]]
                where = (tuple(((box + 0.5) * 2 * r - off).tolist()), r)
        r /= 2
    return DeltaSVerdict(separated and worst <= C, worst, where, separated, C)


# ---------------------------------------------------------------------------
# projections and box counting


def project_cloud(f: FamilySpec, cloud: PointCloud | np.ndarray, t: float) -> np.ndarray:
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=float)
    m = CurveEvaluator(f).matrix(float(t))
    return np.asarray(pts, dtype=float).reshape(-1, 4) @ m.T


@dataclass
class DimEstimate:
    t: float | None
    counts: dict[float, float]
    slope: float
    scales_used: tuple[float, ...]


def occupied_boxes(points2d: np.ndarray, scale: float, offset=(0.0, 0.0)) -> int:
    """Number of grid squares of side ``scale`` (grid shifted by ``offset``) holding a point."""
    pts = np.asarray(points2d, dtype=float).reshape(-1, 2)
    if not len(pts):
        return 0
    keys = np.floor((pts + np.asarray(offset, dtype=float)) / scale).astype(np.int64)
    keys -= keys.min(axis=0)
    span = keys.max(axis=0) + 1
    if span[0] * span[1] <= 1 << 26:
        # dense marking is linear time, sorting is not
        seen = np.zeros(int(span[0] * span[1]), dtype=bool)
        seen[keys[:, 0] * span[1] + keys[:, 1]] = True
        return int(np.count_nonzero(seen))
    return int(np.unique(_pack(keys)).size)


def mean_occupied(points2d: np.ndarray, scale: float, shifts: int = 2) -> float:
    """Occupied-box count averaged over shifts x shifts grid offsets (multiples of scale/shifts)."""
    offs = [(i * scale / shifts, j * scale / shifts) for i in range(shifts) for j in range(shifts)]
    return float(np.mean([occupied_boxes(points2d, scale, o) for o in offs]))


def _fine_image(pts: np.ndarray, h: float):
    keys = np.floor(pts / h).astype(np.int64)
    k0 = keys.min(axis=0)
    keys -= k0
    span = keys.max(axis=0) + 1
    if span[0] * span[1] > 1 << 26:
        return None, k0
    img = np.zeros((int(span[0]), int(span[1])), dtype=bool)
    img[keys[:, 0], keys[:, 1]] = True
    return img, k0


def _coarse_count(img: np.ndarray, r: int, m0: int, m1: int) -> int:
    """Boxes of r x r fine cells, grid shifted by (m0, m1) fine cells, meeting the image."""
    n0, n1 = img.shape
    a, b = -(-(n0 + m0) // r), -(-(n1 + m1) // r)
    pad = np.zeros((a * r, b * r), dtype=bool)
    pad[m0:m0 + n0, m1:m1 + n1] = img
    return int(np.count_nonzero(pad.reshape(a, r, b, r).any(axis=(1, 3))))


def shifted_counts(points2d, scales: Sequence[float], shifts: int = 2) -> dict[float, float]:
    """mean_occupied at every scale, from one fine occupancy image when scales are dyadic.

    With h = min(scales)/shifts and every scale an integer multiple r*h, the
    shifted coarse boxes are unions of whole fine cells, so the points are
    binned once and each grid is a block reduction of the image.
    """
    pts = np.asarray(points2d, dtype=float).reshape(-1, 2)
    scales = [float(s) for s in scales]
    if not len(pts):
        return {s: 0.0 for s in scales}
    h = min(scales) / shifts
    ratios = [s / h for s in scales]
    img, k0 = None, (0, 0)
    if all(abs(q - round(q)) < 1e-9 and round(q) % shifts == 0 for q in ratios):
        img, k0 = _fine_image(pts, h)
    if img is None:
        return {s: mean_occupied(pts, s, shifts) for s in scales}
    out = {}
    for s, q in zip(scales, ratios):
        r = int(round(q))
        step = r // shifts
        # the image starts at fine cell k0, not at the origin
        out[s] = float(np.mean([_coarse_count(img, r, int((k0[0] + i * step) % r), int((k0[1] + j * step) % r))
                                for i in range(shifts) for j in range(shifts)]))
    return out


def box_dimension(points2d, scales: Sequence[float] = DEFAULT_SCALES, t: float | None = None,
                  shifts: int = 4) -> DimEstimate:
    """Slope of log #(occupied squares) against log(1/scale).

    Counts are averaged over shifted grids, which damps the dependence on how
    the set sits against the grid; shifts=1 gives the plain dyadic count.
    """
    scales = sorted(set(float(s) for s in scales), reverse=True)
    if len(scales) < 4:
        raise TooFewScales("box dimension needs at least 4 scales")
    pts = np.asarray(points2d, dtype=float).reshape(-1, 2)
    counts = shifted_counts(pts, scales, shifts)
    used = list(scales)
    # saturated fine scales (every point in its own box) only flatten the fit
    while len(used) > 4 and counts[used[-1]] >= len(pts) and counts[used[-2]] >= len(pts):
        used.pop()
    if len(pts) == 0:
        return DimEstimate(t, counts, 0.0, tuple(used))
    x = np.log(1 / np.asarray(used))
    y = np.log(np.asarray([counts[s] for s in used], dtype=float))
    slope = float(np.polyfit(x, y, 1)[0])
    return DimEstimate(t, counts, float(min(2.0, max(0.0, slope))), tuple(used))


@dataclass
class ExceptionReport:
    a_threshold: float
    t_samples: list[float]
    flagged: list[float]
    estimates: list[DimEstimate]

    @property
    def spacing(self) -> float:
        return 1.0 / len(self.t_samples) if self.t_samples else 0.0

    @property
    def measure_estimate(self) -> float:
        return self.spacing * len(self.flagged)

    @property
    def flagged_fraction(self) -> float:
        return len(self.flagged) / len(self.t_samples) if self.t_samples else 0.0

    @property
    def slopes(self) -> np.ndarray:
        return np.array([e.slope for e in self.estimates])


def t_grid(samples: int) -> list[float]:
    return [(i + 0.5) / samples for i in range(samples)]


def exceptional_scan(f: FamilySpec, cloud: PointCloud, a: float, samples: int | None = None,
                     scales: Sequence[float] = DEFAULT_SCALES) -> ExceptionReport:
    """Flag sampled t whose projected box dimension falls below a."""
    if not 0 <= a <= 2:
        raise ValueError("a must lie in [0, 2]")
    samples = samples or max(1, int(round(1 / cloud.delta)))
    ts = t_grid(samples)
    ests = [box_dimension(project_cloud(f, cloud, t), scales, t) for t in ts]
    flagged = [e.t for e in ests if e.slope < a]
    return ExceptionReport(a, ts, flagged, ests)


def generic_plane_cloud(f: FamilySpec, delta: float, seed: int = 0) -> PointCloud:
    """(delta, 2)-cloud in a random plane on which the family is not degenerate."""
    K = random_generic_plane(f, seed)
    cloud = generate_cloud("plane", delta, 2.0, seed, plane=[[float(c) for c in row] for row in K])
    cloud.params["plane_exact"] = [[str(c) for c in row] for row in K]
    return cloud
