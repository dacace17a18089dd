"""Box-counting dimensions, packing/Hausdorff pre-measures and the explicit covering constants."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import InputError, PointCloud, neighborhood_index, unit_ball_volume

SAFETY_FACTOR = 10.0


# ---------------------------------------------------------------------------
# box counting


def box_count(cloud: PointCloud, eps: float, offset=None) -> int:
    """Number of half-open lattice cubes ``[k*eps, (k+1)*eps)^n`` holding at least one point.

    The lattice is anchored at the origin, or at ``-offset * eps`` when a
    fractional ``offset`` in ``[0, 1)^n`` is given.
    """
    if not eps > 0:
        raise InputError("box size must be positive")
    if len(cloud) == 0:
        return 0
    pts = cloud.points if offset is None else cloud.points + np.asarray(offset, dtype=float) * eps
    cells = np.floor(pts / eps).astype(np.int64)
    cells -= cells.min(axis=0)
    key = np.zeros(len(cells), dtype=np.int64)
    for col in cells.T:
        key = key * (int(col.max()) + 1) + col
    return int(np.unique(key).size)


@dataclass
class DimensionEstimate:
    scales: np.ndarray
    counts: np.ndarray
    slope: float
    intercept: float
    lower_est: float
    upper_est: float
    window: int = 3
    shifts: int = 0

    @property
    def monotone(self) -> bool:
        order = np.argsort(self.scales)
        return bool(np.all(np.diff(self.counts[order]) <= 1e-9))

    def loglog(self) -> np.ndarray:
        """Rows of (log 1/eps, log N)."""
        return np.column_stack([np.log(1 / self.scales), np.log(self.counts)])

    def to_dict(self) -> dict:
        return {
            "scales": self.scales, "counts": self.counts, "slope": self.slope,
            "intercept": self.intercept, "lower_est": self.lower_est, "upper_est": self.upper_est,
            "window": self.window, "shifts": self.shifts, "monotone": self.monotone,
        }


def _check_scales(cloud: PointCloud, scales, safety_factor: float, what: str) -> np.ndarray:
    scales = np.asarray(scales, dtype=float).reshape(-1)
    if np.any(scales <= 0):
        raise InputError(f"{what} must be positive")
    floor = safety_factor * cloud.resolution
    if np.any(scales < floor * (1 - 1e-9)):
        raise InputError(f"{what} {scales.min():.3g} is below {safety_factor:g} x resolution ({floor:.3g})")
    return scales


def minkowski_dims(cloud: PointCloud, scales, window: int = 3, shifts: int = 0, seed: int = 0,
                   safety_factor: float = SAFETY_FACTOR) -> DimensionEstimate:
    """Box-counting slope of ``log N_eps`` against ``log 1/eps``.

    ``shifts > 0`` replaces each count by its mean over that many seeded random
    lattice offsets, which removes most of the lattice-phase oscillation on
    self-similar sets.  ``lower_est``/``upper_est`` are the extreme slopes over
    sliding windows of ``window`` consecutive scales.
    """
    scales = np.sort(_check_scales(cloud, scales, safety_factor, "box size"))[::-1]
    if scales.size < 4:
        raise InputError("need at least 4 scales for a slope estimate")
    diam = cloud.diameter_bound()
    if diam > 0 and scales[0] > diam * (1 + 1e-9):
        raise InputError(f"largest box size {scales[0]:.3g} exceeds the cloud diameter bound {diam:.3g}")
    if shifts:
        offsets = np.random.default_rng(seed).random((shifts, cloud.ambient_dim))
        counts = np.array([np.mean([box_count(cloud, e, o) for o in offsets]) for e in scales])
    else:
        counts = np.array([box_count(cloud, e) for e in scales], dtype=float)
    x, y = np.log(1 / scales), np.log(counts)
    slope, intercept = np.polyfit(x, y, 1)
    local = [np.polyfit(x[i:i + window], y[i:i + window], 1)[0] for i in range(len(x) - window + 1)]
    return DimensionEstimate(scales, counts, float(slope), float(intercept),
                             float(min(local)), float(max(local)), window, shifts)


def packing_dim_bound(parts, scales, **kwargs) -> float:
    """Largest box-counting slope over the parts of a decomposition."""
    parts = list(parts)
    if not parts:
        raise InputError("decomposition must have at least one part")
    return max(minkowski_dims(p, scales, **kwargs).slope for p in parts)


def triadic_scales(lo: float, hi: float, count: int = 12) -> np.ndarray:
    """``count`` scales spread uniformly in log between ``hi`` and ``lo``."""
    return np.geomspace(hi, lo, count)


# ---------------------------------------------------------------------------
# pre-measures


def packing_premeasure(cloud: PointCloud, j: float, eta: float, mode: str = "fixed",
                       safety_factor: float = SAFETY_FACTOR, return_balls: bool = False):
    """Greedy packing estimate of ``P^j_eta``.

    ``fixed``: scan points in index order and keep every point whose closed
    ball of radius eta is disjoint from those already kept.  ``variable``:
    repeatedly place the largest feasible ball (radius <= eta, centred on a
    sample point, disjoint from earlier balls; ties by index) until only balls
    below the cloud resolution fit.  Returns ``omega_j * sum r^j``.
    """
    _check_scales(cloud, [eta], safety_factor, "packing scale")
    if len(cloud) == 0:
        return (0.0, np.zeros((0, cloud.ambient_dim)), np.zeros(0)) if return_balls else 0.0
    if mode == "fixed":
        centers, radii = _fixed_packing(cloud, eta)
    elif mode == "variable":
        centers, radii = _variable_packing(cloud, eta)
    else:
        raise InputError(f"unknown packing mode {mode!r}")
    value = unit_ball_volume(j) * float(np.sum(radii ** j))
    return (value, centers, radii) if return_balls else value


def _fixed_packing(cloud: PointCloud, eta: float):
    blocked = np.zeros(len(cloud), dtype=bool)
    chosen = []
    tree, pts = cloud.tree, cloud.points
    for i in range(len(cloud)):
        if blocked[i]:
            continue
        chosen.append(i)
        blocked[tree.query_ball_point(pts[i], 2 * eta)] = True
    return pts[chosen], np.full(len(chosen), float(eta))


def _variable_packing(cloud: PointCloud, eta: float):
    pts, tree = cloud.points, cloud.tree
    r_min = cloud.resolution
    room = np.full(len(pts), float(eta))  # largest feasible radius at each sample point
    centers, radii = [], []
    while True:
        i = int(np.argmax(room))  # ties -> lowest index
        r = float(room[i])
        if r < r_min:
            break
        centers.append(pts[i])
        radii.append(r)
        near = np.asarray(tree.query_ball_point(pts[i], r + eta), dtype=np.intp)
        gap = np.linalg.norm(pts[near] - pts[i], axis=1) - r
        room[near] = np.minimum(room[near], gap)
    return np.array(centers).reshape(-1, pts.shape[1]), np.array(radii)


def hausdorff_premeasure(cloud: PointCloud, j: float, delta: float, pitch_factor: float = 0.125,
                         safety_factor: float = SAFETY_FACTOR, return_balls: bool = False):
    """Greedy lattice-cover estimate of ``H^j_delta`` (an upper-biased estimate).

    Candidate balls of radius delta sit on the lattice of pitch
    ``pitch_factor * delta`` anchored at the origin.  The cover is built by
    taking the lexicographically first uncovered sample point and, among the
    lattice balls containing it, the one covering the most uncovered points
    (ties by lattice order), until every point is covered.  Anchoring each
    step at an uncovered point keeps the balls from leaving slivers between
    them.  Returns ``omega_j * (#balls) * delta^j``.
    """
    _check_scales(cloud, [delta], safety_factor, "cover scale")
    if len(cloud) == 0:
        return (0.0, np.zeros((0, cloud.ambient_dim))) if return_balls else 0.0
    pitch = pitch_factor * delta
    pts, tree = cloud.points, cloud.tree
    n = pts.shape[1]
    radius = delta * (1 + 1e-12)
    order = np.lexsort(pts.T[::-1])
    covered = np.zeros(len(pts), dtype=bool)
    chosen = []
    for start in order:
        if covered[start]:
            continue
        p = pts[start]
        lo = np.floor((p - delta) / pitch).astype(np.int64)
        hi = np.ceil((p + delta) / pitch).astype(np.int64)
        axes = [np.arange(a, b + 1) for a, b in zip(lo, hi)]
        nodes = np.array(np.meshgrid(*axes, indexing="ij")).reshape(n, -1).T
        centers = nodes * pitch
        centers = centers[np.linalg.norm(centers - p, axis=1) <= radius]
        if len(centers) == 0:
            centers = (np.round(p / pitch) * pitch)[None, :]
        near = np.asarray(tree.query_ball_point(p, 2 * radius), dtype=np.intp)
        near = near[~covered[near]]
        inside = np.linalg.norm(pts[near][None, :, :] - centers[:, None, :], axis=2) <= radius
        k = int(np.argmax(inside.sum(axis=1)))  # centers are in lattice order, so ties go to the first
        covered[near[inside[k]]] = True
        covered[start] = True
        chosen.append(centers[k])
    value = unit_ball_volume(j) * len(chosen) * delta ** j
    return (value, np.array(chosen).reshape(-1, n)) if return_balls else value


@dataclass
class MeasureReport:
    j: float
    scale: float
    hausdorff_pre: float
    packing_pre: float
    packing_mode: str = "fixed"

    @property
    def ratio(self) -> float:
        return self.packing_pre / self.hausdorff_pre if self.hausdorff_pre > 0 else math.inf

    def to_dict(self) -> dict:
        return {"j": self.j, "scale": self.scale, "hausdorff_pre": self.hausdorff_pre,
                "packing_pre": self.packing_pre, "ratio": self.ratio, "packing_mode": self.packing_mode}


def measure_compare(cloud: PointCloud, j: float, scale: float, packing_mode: str = "fixed",
                    safety_factor: float = SAFETY_FACTOR) -> MeasureReport:
    """Packing and Hausdorff pre-measures at a common scale, and their ratio."""
    return MeasureReport(
        j, float(scale),
        hausdorff_premeasure(cloud, j, scale, safety_factor=safety_factor),
        packing_premeasure(cloud, j, scale, mode=packing_mode, safety_factor=safety_factor),
        packing_mode,
    )


# ---------------------------------------------------------------------------
# explicit constants


def _lattice_ball_count(dim: int, radius: float, pitch: float) -> int:
    """#{z in Z^dim : |z| * pitch <= radius}."""
    if radius < 0:
        return 0
    if dim == 0:
        return 1
    k = int(math.floor(radius / pitch + 1e-12))
    if dim == 1:
        return 2 * k + 1
    t = np.arange(-k, k + 1) * pitch
    rest = np.sqrt(np.maximum(radius ** 2 - t ** 2, 0.0))
    if dim == 2:
        return int(np.sum(2 * np.floor(rest / pitch + 1e-12).astype(np.int64) + 1))
    return int(sum(_lattice_ball_count(dim - 1, float(r), pitch) for r in rest))


def slab_cover_centers(n: int, j: int, delta: float) -> np.ndarray:
    """Explicit centers of the lattice cover (small cases only; see :func:`slab_covering_constant`)."""
    pitch = 4 * delta / math.sqrt(n)
    k = int(math.floor(1 / pitch + 1e-12))
    axis = np.arange(-k, k + 1) * pitch
    grid = np.array(np.meshgrid(*([axis] * n), indexing="ij")).reshape(n, -1).T
    keep = (np.linalg.norm(grid, axis=1) <= 1 + 1e-12) & (np.linalg.norm(grid[:, j:], axis=1) <= 2 * delta + 1e-12)
    return grid[keep]


def slab_covering_constant(n: int, j: int, delta: float) -> tuple[int, float]:
    """Ball count Q of a lattice cover of ``L^{2 delta} ∩ B_1(0)`` by balls of radius 4 delta, and ``C = Q (4 delta)^j``.

    ``L`` is the span of the first j axes.  Centers are the points of the
    lattice of pitch ``4 delta / sqrt(n)`` with ``|c| <= 1`` and normal part
    ``|c_perp| <= 2 delta``.  Truncating each coordinate of a slab point toward
    zero lands on such a center within distance ``pitch * sqrt(n) = 4 delta``,
    so the balls cover the slab.
    """
    if not 0 < delta <= 1 / 8:
        raise InputError(f"delta must lie in (0, 1/8], got {delta}")
    if not 0 <= j <= n:
        raise InputError(f"need 0 <= j <= n, got j={j}, n={n}")
    pitch = 4 * delta / math.sqrt(n)
    k = n - j
    if k == 0:
        q = _lattice_ball_count(j, 1.0, pitch)
    else:
        kn = int(math.floor(2 * delta / pitch + 1e-12))
        axis = np.arange(-kn, kn + 1) * pitch
        normals = np.array(np.meshgrid(*([axis] * k), indexing="ij")).reshape(k, -1).T
        norms = np.linalg.norm(normals, axis=1)
        norms = norms[norms <= 2 * delta + 1e-12]
        q = sum(_lattice_ball_count(j, math.sqrt(max(1 - r * r, 0.0)), pitch) for r in norms)
    return int(q), float(q * (4 * delta) ** j)


def eta(delta1: float, C: float, n: int, j: int) -> float:
    """Dimension excess ``-ln(2C) / ln(4 delta1)``; ``n - j + 1`` when ``delta1 > 1/8``."""
    if not delta1 > 0:
        raise InputError("delta1 must be positive")
    if not C > 0.5:
        raise InputError("C must exceed 1/2")
    if delta1 > 1 / 8:
        return float(n - j + 1)
    return -math.log(2 * C) / math.log(4 * delta1)


def lipschitz_constants(M: float, j: int) -> tuple[float, float]:
    """``c(M, j) = omega_j (1 + M^2)^(-j/2)`` and ``C(M, j) = (4 max(M, 1))^j / c``."""
    if M < 0:
        raise InputError("Lipschitz constant must be >= 0")
    c = unit_ball_volume(j) * (1 + M * M) ** (-j / 2)
    return c, (4 * max(M, 1.0)) ** j / c


@dataclass
class RecursionLevel:
    q: int
    scale: float
    count: int
    weighted: float
    bound: float
    decay: float | None
    passed: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class RecursionReport:
    j: int
    delta1: float
    lam: float
    eta: float
    slab_count: int
    initial_count: int
    t0: float
    levels: list = field(default_factory=list)
    truncated: bool = False

    @property
    def passed(self) -> bool:
        return bool(self.levels) and all(lv.passed for lv in self.levels)

    def to_dict(self) -> dict:
        return {"j": self.j, "delta1": self.delta1, "lambda": self.lam, "eta": self.eta,
                "Q": self.slab_count, "Q_prime": self.initial_count, "T0": self.t0,
                "levels": [lv.to_dict() for lv in self.levels], "truncated": self.truncated,
                "passed": self.passed}


def covering_recursion_check(cloud: PointCloud, j: int, delta1: float = 1 / 16, q_max: int = 6,
                             lam: float = 0.25, safety_factor: float = SAFETY_FACTOR) -> RecursionReport:
    """Tabulate ``N(A, s_q) s_q^(j + eta)`` for ``s_q = (4 delta1)^q lam`` and check the halving.

    Level q passes when the weighted count is at most ``2^-q T_0`` and at most
    half the previous level's.  Levels below ``safety_factor * h`` are dropped
    and the report is marked truncated.
    """
    if not 0 < delta1 <= 1 / 8:
        raise InputError("delta1 must lie in (0, 1/8]")
    n = cloud.ambient_dim
    Q, C = slab_covering_constant(n, j, delta1)
    ex = eta(delta1, C, n, j)
    power = j + ex
    floor = safety_factor * cloud.resolution
    q_prime = box_count(cloud, lam)
    t0 = max(q_prime, Q) * lam ** power
    report = RecursionReport(j, delta1, lam, ex, Q, q_prime, t0)
    prev = None
    for q in range(q_max + 1):
        s = (4 * delta1) ** q * lam
        if s < floor * (1 - 1e-9):
            report.truncated = True
            break
        count = box_count(cloud, s)
        w = count * s ** power
        bound = 2.0 ** -q * t0
        decay = None if prev is None else w / prev
        ok = w <= bound * (1 + 1e-12) and (decay is None or decay <= 0.5)
        report.levels.append(RecursionLevel(q, s, count, w, bound, decay, ok))
        prev = w
    return report


@dataclass
class BallBoundReport:
    M: float
    j: int
    c: float
    trials: int
    used: int
    min_ratio: float
    tol: float
    samples: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.used > 0 and self.min_ratio >= 1 - self.tol

    def to_dict(self) -> dict:
        return {"M": self.M, "j": self.j, "c": self.c, "trials": self.trials, "used": self.used,
                "min_ratio": self.min_ratio, "tol": self.tol, "passed": self.passed, "samples": self.samples}


def graph_ball_lower_bound_check(cloud: PointCloud, M: float, j: int, trials: int = 100, seed: int = 0,
                                 rho_range=(0.05, 0.25), fine_scale: float | None = None,
                                 tol: float = 0.05) -> BallBoundReport:
    """Check ``H^j(B_rho(x) ∩ graph) >= c(M, j) rho^j`` on random balls centred on a graph sample.

    The cloud must be a graph over ``[0,1]^j`` in its first j coordinates.
    Centres are drawn so the ball's shadow stays inside the domain; the
    measure is estimated by :func:`hausdorff_premeasure` at ``fine_scale``
    (default ``10 h``).  Trials whose radius is under 20 fine scales are skipped.
    """
    c, _ = lipschitz_constants(M, j)
    fine = fine_scale if fine_scale is not None else SAFETY_FACTOR * cloud.resolution
    rng = np.random.default_rng(seed)
    dom = cloud.points[:, :j]
    report = BallBoundReport(M, j, c, trials, 0, math.inf, tol)
    for _ in range(trials):
        rho = float(rng.uniform(*rho_range))
        ok = np.all((dom >= rho) & (dom <= 1 - rho), axis=1)
        if rho < 20 * fine or not ok.any():
            continue
        center = cloud.points[rng.choice(np.flatnonzero(ok))]
        sub = cloud.subset(neighborhood_index(cloud, center, rho))
        est = hausdorff_premeasure(sub, j, fine)
        ratio = est / (c * rho ** j)
        report.used += 1
        report.min_ratio = min(report.min_ratio, ratio)
        report.samples.append({"center": center.tolist(), "rho": rho, "estimate": est, "ratio": ratio})
    return report
