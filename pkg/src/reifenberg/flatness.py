"""Discrete-scale evaluation of the twelve Reifenberg-type approximation properties.

A property is tested on a finite geometric :class:`ScaleLadder` and a finite
set of base points, so every verdict reads "consistent at the tested scales".

For each property the classifier computes a *critical delta*: the smallest
delta for which the property holds on the sampled data.  The property is then
consistent at a tested delta exactly when ``critical <= delta``.

* Planes are affine planes through the base point (the point itself lies on
  the set).
* "There is a rho_y" is read as "some tail of the ladder of at least
  ``min_tail`` scales".  Tails nest, so the finest ``min_tail`` scales decide
  the non-uniform and locally uniform variants.
* Strong variants use the shifted plane ``L_y + x``.  Their deviations are
  obtained from difference vectors ``(p - x) / rho`` with rho the finest ladder
  radius whose ball still holds p: a single plane must keep all of them within
  delta.
* Fine variants ("for every delta") count as consistent when the critical
  delta at the finest scales is below every tested delta.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .geometry import (
    AffinePlane,
    InputError,
    PointCloud,
    ScaleLadder,
    _hull_reduce,
    enclosing_radius,
    minimax_basis,
    neighborhood_index,
)

DEFAULT_DELTA_GRID = (0.4, 0.2, 0.1, 0.05, 0.025)
SAFETY_FACTOR = 10.0
TOL = 1e-9

# (id, strength, uniformity, fine)
PROPERTIES = (
    ("i", "w", "", False),
    ("ii", "w", "rho", False),
    ("iii", "w", "rho0", False),
    ("iv", "w", "", True),
    ("v", "w", "rho", True),
    ("vi", "w", "rho0", True),
    ("vii", "s", "", False),
    ("viii", "s", "rho", False),
    ("ix", "s", "rho0", False),
    ("x", "s", "", True),
    ("xi", "s", "rho", True),
    ("xii", "s", "rho0", True),
)
PROPERTY_IDS = tuple(p[0] for p in PROPERTIES)
PROPERTY_NAMES = {
    pid: s + {"": "", "rho": "ρ", "rho0": "ρ0"}[u] + ("δ" if fine else "")
    for pid, s, u, fine in PROPERTIES
}


def property_id(strength: str, uniformity: str, fine: bool) -> str:
    for pid, s, u, f in PROPERTIES:
        if (s, u, f) == (strength, uniformity, fine):
            return pid
    raise InputError(f"no property ({strength}, {uniformity!r}, fine={fine})")


def _base_index(cloud: PointCloud, y) -> int:
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.size != cloud.ambient_dim:
        raise InputError(f"base point has dimension {y.size}, cloud has {cloud.ambient_dim}")
    if len(cloud) == 0:
        raise InputError("cloud is empty")
    dist, idx = cloud.tree.query(y)
    if dist > cloud.resolution * (1 + 1e-9):
        raise InputError(f"base point is {dist:.3g} from the cloud (resolution {cloud.resolution:.3g})")
    return int(idx)


def _bind(ladder: ScaleLadder, cloud: PointCloud, safety_factor: float) -> np.ndarray:
    return ladder.bind(cloud, safety_factor).radii


# ---------------------------------------------------------------------------
# per-point profiles


@dataclass
class FlatnessProfile:
    """Optimal deviation ``delta*(y, rho)`` and fitted plane at each ladder radius."""

    base_point: np.ndarray
    radii: np.ndarray
    deltas: np.ndarray
    planes: list
    j: int
    sided: str = "one"

    def to_dict(self) -> dict:
        return {
            "base_point": self.base_point, "j": self.j, "sided": self.sided,
            "entries": [{"rho": r, "delta": d, "plane": p.to_dict()}
                        for r, d, p in zip(self.radii, self.deltas, self.planes)],
        }


def _local_fits(cloud: PointCloud, y: np.ndarray, radii: np.ndarray, j: int):
    idx = neighborhood_index(cloud, y, radii[0])
    diff = cloud.points[idx] - y
    dist = np.linalg.norm(diff, axis=1)
    deltas, bases = [], []
    for rho in radii:
        sub = diff[dist <= rho * (1 + 1e-12)]
        basis, value = minimax_basis(sub, j)
        deltas.append(min(value / rho, 1.0))
        bases.append(basis)
    return np.array(deltas), bases, diff, dist


def _plane_samples(y: np.ndarray, basis: np.ndarray, rho: float, h: float, cap: int = 20000) -> np.ndarray:
    j = basis.shape[0]
    if j == 0:
        return y[None, :]
    pitch = max(h, 2 * rho / cap ** (1 / j))
    m = int(math.floor(rho / pitch))
    axis = np.arange(-m, m + 1) * pitch
    coords = np.array(np.meshgrid(*([axis] * j), indexing="ij")).reshape(j, -1).T
    coords = coords[np.linalg.norm(coords, axis=1) <= rho]
    return y + coords @ basis


def _two_sided(diff: np.ndarray, y: np.ndarray, rho: float, h: float, seeds, j: int) -> tuple[float, np.ndarray]:
    n = y.size
    cands = [np.asarray(s) for s in seeds]
    if n == 2 and j == 1:
        t = np.linspace(0, np.pi, 90, endpoint=False)
        cands += [np.array([[math.cos(a), math.sin(a)]]) for a in t]
    pts = y + diff
    tree_a = cKDTree(pts)
    best = (math.inf, cands[0])
    for basis in cands:
        lp = _plane_samples(y, basis, rho, h)
        d1 = cKDTree(lp).query(pts)[0].max()
        d2 = tree_a.query(lp)[0].max()
        val = max(d1, d2) / rho
        if val < best[0]:
            best = (val, basis)
    return min(best[0], 1.0), best[1]


def flatness_profile(cloud: PointCloud, y, ladder: ScaleLadder, j: int, sided: str = "one",
                     safety_factor: float = SAFETY_FACTOR) -> FlatnessProfile:
    """``delta*(y, rho)`` for every ladder radius, minimised over j-planes through y.

    ``sided="one"`` uses the sup-distance of ``A ∩ B_rho(y)`` to the plane;
    ``sided="two"`` the Hausdorff distance between ``A ∩ B`` and ``L ∩ B``
    (plane discretised at the cloud resolution), minimised over the one-sided
    optimum and, in the plane, a grid of line directions.
    """
    if sided not in ("one", "two"):
        raise InputError(f"sided must be 'one' or 'two', got {sided!r}")
    if not 0 <= j <= cloud.ambient_dim:
        raise InputError(f"j={j} must lie in [0, {cloud.ambient_dim}]")
    radii = _bind(ladder, cloud, safety_factor)
    y = cloud.points[_base_index(cloud, y)].copy()
    deltas, bases, diff, dist = _local_fits(cloud, y, radii, j)
    if sided == "two":
        two = []
        for k, rho in enumerate(radii):
            sub = diff[dist <= rho * (1 + 1e-12)]
            val, basis = _two_sided(sub, y, rho, cloud.resolution, [bases[k]], j)
            two.append(max(val, deltas[k]))
            bases[k] = basis
        deltas = np.array(two)
    planes = [AffinePlane(y, b) for b in bases]
    return FlatnessProfile(y, radii.copy(), deltas, planes, j, sided)


def _scaled_vectors(diff: np.ndarray, dist: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """``(p - y) / rho_i`` with rho_i the smallest ladder radius still containing p."""
    asc = radii[::-1]
    pos = np.searchsorted(asc, dist * (1 - 1e-12), side="left")
    pos = np.minimum(pos, len(asc) - 1)
    return diff / asc[pos][:, None]


def strong_flatness(cloud: PointCloud, y, ladder: ScaleLadder, j: int,
                    safety_factor: float = SAFETY_FACTOR) -> tuple[AffinePlane, float]:
    """One plane ``L_y`` through y for all ladder radii: ``min_L max_rho deviation``.

    Seeded by the per-scale fitted planes and refined by local search (exact in
    the plane for lines).
    """
    radii = _bind(ladder, cloud, safety_factor)
    y = cloud.points[_base_index(cloud, y)].copy()
    _, bases, diff, dist = _local_fits(cloud, y, radii, j)
    vecs = _hull_reduce(_scaled_vectors(diff, dist, radii))
    basis, value = minimax_basis(vecs, j, seeds=bases if j else ())
    return AffinePlane(y, basis), float(min(value, 1.0))


# ---------------------------------------------------------------------------
# classification


@dataclass
class Witness:
    point: np.ndarray
    rho: float
    delta: float

    def to_dict(self) -> dict:
        return {"point": self.point, "rho": self.rho, "delta": self.delta}


@dataclass
class ReifenbergVerdict:
    """Critical deltas for the twelve properties, with witnesses and the data behind them."""

    j: int
    ladder: ScaleLadder
    delta_grid: tuple
    min_tail: int
    critical: dict
    witnesses: dict
    contained: bool
    enclosing_radius: float
    base_points: np.ndarray
    profiles: np.ndarray  # (base points, ladder radii) of delta*
    pool_size: int = 0

    def consistent(self, pid: str, delta: float) -> bool:
        return bool(self.critical[pid] <= delta + TOL)

    def fine_consistent(self, pid: str) -> bool:
        return self.consistent(pid, min(self.delta_grid))

    def member(self, pid: str) -> bool:
        """Fixed-delta properties: consistent at some tested delta < 1; fine ones: below every tested delta."""
        if _is_fine(pid):
            return self.fine_consistent(pid)
        return any(self.consistent(pid, d) for d in self.delta_grid if d < 1)

    def consistent_grid(self, pid: str) -> list[bool]:
        return [self.consistent(pid, d) for d in self.delta_grid]

    def infimum_consistent(self, pid: str) -> float | None:
        ok = [d for d in self.delta_grid if self.consistent(pid, d)]
        return min(ok) if ok else None

    def lattice_violations(self) -> list[str]:
        """Implications between verdicts that fail on this verdict (should be empty)."""
        bad = []
        grid = sorted(self.delta_grid)
        for u in ("", "rho", "rho0"):
            for fine in (False, True):
                s, w = property_id("s", u, fine), property_id("w", u, fine)
                for d in grid:
                    if self.consistent(s, d) and not self.consistent(w, d):
                        bad.append(f"{s} => {w} at delta={d}")
        for st in ("w", "s"):
            for fine in (False, True):
                chain = [property_id(st, u, fine) for u in ("rho0", "rho", "")]
                for hi, lo in zip(chain, chain[1:]):
                    for d in grid:
                        if self.consistent(hi, d) and not self.consistent(lo, d):
                            bad.append(f"{hi} => {lo} at delta={d}")
            for u in ("", "rho", "rho0"):
                fine_id, fixed_id = property_id(st, u, True), property_id(st, u, False)
                if self.fine_consistent(fine_id) and not all(self.consistent_grid(fixed_id)):
                    bad.append(f"{fine_id} => {fixed_id} at every delta")
        for pid in PROPERTY_IDS:
            flags = [self.consistent(pid, d) for d in grid]
            if any(a and not b for a, b in zip(flags, flags[1:])):
                bad.append(f"{pid} not monotone in delta")
        return bad

    def to_dict(self) -> dict:
        return {
            "j": self.j, "ladder": self.ladder.to_dict(), "delta_grid": list(self.delta_grid),
            "min_tail": self.min_tail, "contained": self.contained,
            "enclosing_radius": self.enclosing_radius, "pool_size": self.pool_size,
            "base_points": self.base_points, "profiles": self.profiles,
            "properties": {
                pid: {
                    "name": PROPERTY_NAMES[pid],
                    "critical_delta": self.critical[pid],
                    "consistent": dict(zip([repr(d) for d in self.delta_grid], self.consistent_grid(pid))),
                    "infimum_consistent": self.infimum_consistent(pid),
                    "member": self.member(pid),
                    "witness": self.witnesses.get(pid),
                }
                for pid in PROPERTY_IDS
            },
        }


def _is_fine(pid: str) -> bool:
    return dict((p[0], p[3]) for p in PROPERTIES)[pid]


@dataclass
class _PointData:
    index: int
    deltas: np.ndarray          # delta* at radii[start:]
    bases: list
    start: int
    fine_vectors: np.ndarray    # hull-reduced scaled vectors within radii[fine]
    fine_rho: np.ndarray        # radius each fine vector was scaled by
    full_vectors: np.ndarray | None = None
    full_rho: np.ndarray | None = None


def _reduce_with(vecs: np.ndarray, rho: np.ndarray):
    if len(vecs) <= vecs.shape[1] + 1 or vecs.shape[1] > 6:
        return vecs, rho
    red = _hull_reduce(vecs)
    if len(red) == len(vecs):
        return vecs, rho
    # map reduced rows back to their scaling radius
    tree = cKDTree(vecs)
    idx = tree.query(red)[1]
    return vecs[idx], rho[idx]


def _point_data(cloud: PointCloud, i: int, radii: np.ndarray, start: int, fine: int, j: int) -> _PointData:
    x = cloud.points[i]
    deltas, bases, diff, dist = _local_fits(cloud, x, radii[start:], j)
    asc = radii[::-1]
    pos = np.minimum(np.searchsorted(asc, dist * (1 - 1e-12), side="left"), len(asc) - 1)
    rho = asc[pos]
    vecs = diff / rho[:, None]
    inner = dist <= radii[fine] * (1 + 1e-12)
    fv, fr = _reduce_with(vecs[inner], rho[inner])
    data = _PointData(i, deltas, bases, start, fv, fr)
    if start == 0:
        data.full_vectors, data.full_rho = _reduce_with(vecs, rho)
    return data


def _strong_value(vecs: np.ndarray, rho: np.ndarray, j: int, seeds) -> tuple[float, float]:
    """(min over planes of max scaled deviation, radius of the worst vector)."""
    if len(vecs) == 0:
        return 0.0, math.nan
    vecs, rho = _reduce_with(vecs, rho)
    basis, value = minimax_basis(vecs, j, seeds=seeds if j else ())
    resid = vecs - (vecs @ basis.T) @ basis if j else vecs
    k = int(np.argmax(np.linalg.norm(resid, axis=1)))
    return float(min(value, 1.0)), float(rho[k])


def choose_base_sample(cloud: PointCloud, base_sample=None, seed: int = 0, default_count: int = 64) -> np.ndarray:
    """Indices of base points: all points for small clouds, else a seeded random subset."""
    m = len(cloud)
    if base_sample is None:
        base_sample = default_count
    if isinstance(base_sample, (int, np.integer)):
        if base_sample < 1:
            raise InputError("base sample must be nonempty")
        if base_sample >= m:
            return np.arange(m)
        return np.sort(np.random.default_rng(seed).choice(m, size=int(base_sample), replace=False))
    idx = np.unique(np.asarray(base_sample, dtype=np.intp).reshape(-1))
    if idx.size == 0:
        raise InputError("base sample must be nonempty")
    if idx[0] < 0 or idx[-1] >= m:
        raise InputError("base sample index out of range")
    return idx


def classify(cloud: PointCloud, j: int, delta_grid=DEFAULT_DELTA_GRID, ladder: ScaleLadder | None = None,
             base_sample=None, seed: int = 0, satellites: int = 4, min_tail: int = 2, threads: int = 1,
             safety_factor: float = SAFETY_FACTOR) -> ReifenbergVerdict:
    """Evaluate all twelve properties; see the module docstring for the semantics.

    ``base_sample`` is an index array, a count (seeded random subset) or None
    (64 points).  For the locally uniform variants every base point gets up to
    ``satellites`` extra cloud points from its finest uniformity ball.
    """
    if not 0 <= j <= cloud.ambient_dim:
        raise InputError(f"j={j} must lie in [0, {cloud.ambient_dim}]")
    delta_grid = tuple(sorted({float(d) for d in delta_grid}, reverse=True))
    if not delta_grid or any(not 0 < d for d in delta_grid):
        raise InputError("delta grid must hold positive values")
    if ladder is None:
        ladder = ScaleLadder.spanning(max(cloud.diameter_bound(), SAFETY_FACTOR * cloud.resolution), 0.5, cloud,
                                      safety_factor)
    radii = _bind(ladder, cloud, safety_factor)
    K = len(radii)
    if K < min_tail:
        raise InputError(f"ladder has {K} radii, fewer than min_tail={min_tail}")
    fine = K - min_tail
    base = choose_base_sample(cloud, base_sample, seed)

    rng = np.random.default_rng(seed + 1)
    sats = []
    for i in base:
        near = neighborhood_index(cloud, cloud.points[i], radii[fine])
        near = near[near != i]
        if satellites and near.size:
            sats.extend(rng.choice(near, size=min(satellites, near.size), replace=False).tolist())
    sats = np.setdiff1d(np.unique(np.asarray(sats, dtype=np.intp)), base)

    jobs = [(int(i), 0) for i in base] + [(int(i), fine) for i in sats]

    def work(job):
        return _point_data(cloud, job[0], radii, job[1], fine, j)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, jobs))
    else:
        results = [work(job) for job in jobs]
    data = {d.index: d for d in results}
    pool_idx = np.array(sorted(data))
    pool_tree = cKDTree(cloud.points[pool_idx])

    def fine_deltas(d: _PointData) -> np.ndarray:
        return d.deltas[fine - d.start:]

    critical, witnesses = {}, {}

    def record(pid, value, point, rho):
        critical[pid] = float(value)
        witnesses[pid] = Witness(np.asarray(point, dtype=float), float(rho), float(value)).to_dict()

    # weak, non-uniform: finest tail at each base point
    best = (-1.0, None, None)
    for i in base:
        fd = fine_deltas(data[i])
        k = int(np.argmax(fd))
        if fd[k] > best[0]:
            best = (fd[k], cloud.points[i], radii[fine + k])
    w_none = best

    # weak, locally uniform: every pool point in the finest uniformity ball
    best = (-1.0, None, None)
    near_sets = {}
    for i in base:
        near = pool_idx[pool_tree.query_ball_point(cloud.points[i], radii[fine] * (1 + 1e-12))]
        near_sets[i] = np.sort(near)
        for x in near_sets[i]:
            fd = fine_deltas(data[x])
            k = int(np.argmax(fd))
            if fd[k] > best[0]:
                best = (fd[k], cloud.points[x], radii[fine + k])
    w_rho = best

    # weak, globally uniform: every base point at every scale, plus containment
    enc = enclosing_radius(cloud.points)
    contained = enc <= radii[0] * (1 + 1e-9)
    best = (-1.0, None, None)
    for i in base:
        d = data[i].deltas
        k = int(np.argmax(d))
        if d[k] > best[0]:
            best = (d[k], cloud.points[i], radii[k])
    w_rho0 = best if contained else (math.inf, best[1], radii[0])

    # strong, non-uniform
    best = (-1.0, None, None)
    for i in base:
        d = data[i]
        val, rho = _strong_value(d.fine_vectors, d.fine_rho, j, d.bases[fine:])
        if val > best[0]:
            best = (val, cloud.points[i], rho)
    s_none = best

    # strong, locally uniform: one plane per base point, shifted to each nearby pool point
    best = (-1.0, None, None)
    for i in base:
        near = near_sets[i]
        vecs = np.vstack([data[x].fine_vectors for x in near])
        rhos = np.concatenate([data[x].fine_rho for x in near])
        val, rho = _strong_value(vecs, rhos, j, data[i].bases[fine:])
        if val > best[0]:
            best = (val, cloud.points[i], rho)
    s_rho = best

    # strong, globally uniform: one plane for every base point and scale
    vecs = np.vstack([data[i].full_vectors for i in base])
    rhos = np.concatenate([data[i].full_rho for i in base])
    seeds = [data[i].bases[k] for i in base[:8] for k in (0, K - 1)]
    val, rho = _strong_value(vecs, rhos, j, seeds)
    s_rho0 = (val if contained else math.inf, cloud.points[base[0]], rho)

    for (value, point, rho), (strength, unif) in zip(
        (w_none, w_rho, w_rho0, s_none, s_rho, s_rho0),
        (("w", ""), ("w", "rho"), ("w", "rho0"), ("s", ""), ("s", "rho"), ("s", "rho0")),
    ):
        for fine_flag in (False, True):
            record(property_id(strength, unif, fine_flag), value, point, rho)

    profiles = np.array([data[i].deltas for i in base])
    return ReifenbergVerdict(j, ladder, delta_grid, min_tail, critical, witnesses, bool(contained), float(enc),
                             cloud.points[base].copy(), profiles, len(pool_idx))


def dimension_violations(lower: ReifenbergVerdict, upper: ReifenbergVerdict) -> list[str]:
    """Implications "consistent for j => consistent for j+1" that fail between two verdicts."""
    bad = []
    for pid in PROPERTY_IDS:
        for d in lower.delta_grid:
            if d in upper.delta_grid and lower.consistent(pid, d) and not upper.consistent(pid, d):
                bad.append(f"{pid} at j={lower.j} => j={upper.j}, delta={d}")
    return bad
