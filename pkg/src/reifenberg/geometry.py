"""Numerical geometry kernel: point clouds, balls, affine planes and plane fitting.

All lengths are plain floats.  Sets are represented by finite samples
(:class:`PointCloud`) carrying a resolution ``h``: every point of the intended
set lies within ``h`` of some sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import minimize
from scipy.spatial import ConvexHull, QhullError, cKDTree

ORTHONORMAL_TOL = 1e-10


class InputError(ValueError):
    """Raised when an operation receives arguments outside its contract."""


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Finite sample of a subset of R^n."""

    points: np.ndarray
    resolution: float
    label: str = ""

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1) if pts.size else pts.reshape(0, 1)
        if pts.ndim != 2 or pts.shape[1] < 1:
            raise InputError(f"points must be an (m, n) array, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise InputError("points must be finite")
        if not self.resolution > 0:
            raise InputError(f"resolution must be positive, got {self.resolution}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "resolution", float(self.resolution))

    @property
    def ambient_dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    @cached_property
    def tree(self) -> cKDTree:
        return cKDTree(self.points)

    def subset(self, index, label: str | None = None) -> "PointCloud":
        return PointCloud(self.points[index], self.resolution, self.label if label is None else label)

    def diameter_bound(self) -> float:
        """Diagonal of the bounding box (an upper bound for the diameter)."""
        if len(self) == 0:
            return 0.0
        return float(np.linalg.norm(self.points.max(axis=0) - self.points.min(axis=0)))


@dataclass(frozen=True, eq=False)
class AffinePlane:
    """A j-dimensional affine plane: ``base + span(basis)``.

    ``basis`` has shape (j, n) with orthonormal rows.
    """

    base: np.ndarray
    basis: np.ndarray

    def __post_init__(self):
        base = np.asarray(self.base, dtype=float).reshape(-1)
        n = base.size
        basis = np.asarray(self.basis, dtype=float).reshape(-1, n) if n else np.zeros((0, 0))
        j = basis.shape[0]
        if j > n:
            raise InputError(f"plane dimension {j} exceeds ambient dimension {n}")
        gram = basis @ basis.T
        if j and np.max(np.abs(gram - np.eye(j))) > ORTHONORMAL_TOL:
            raise InputError("basis rows must be orthonormal")
        base.setflags(write=False)
        basis.setflags(write=False)
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "basis", basis)

    @property
    def j(self) -> int:
        return self.basis.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.base.size

    def distances(self, points) -> np.ndarray:
        """Orthogonal distances of an (m, n) array of points to the plane."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.ambient_dim:
            raise InputError(
                f"point dimension {pts.shape[1]} does not match plane dimension {self.ambient_dim}"
            )
        return _normal_norms(pts - self.base, self.basis)

    def translated(self, point) -> "AffinePlane":
        """The parallel plane through ``point``."""
        return AffinePlane(np.asarray(point, dtype=float), self.basis)

    def to_dict(self) -> dict:
        return {"base": self.base.tolist(), "basis": self.basis.tolist()}


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise InputError(f"ball radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(-1))


@dataclass(frozen=True)
class ScaleLadder:
    """Geometric radii ``rho_max * ratio**k`` for ``k = 0..count-1``."""

    rho_max: float
    ratio: float
    count: int
    radii: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.rho_max > 0:
            raise InputError("rho_max must be positive")
        if not 0 < self.ratio < 1:
            raise InputError("ladder ratio must lie in (0, 1)")
        if int(self.count) != self.count or self.count < 1:
            raise InputError("ladder count must be a positive integer")
        radii = self.rho_max * self.ratio ** np.arange(int(self.count), dtype=float)
        radii.setflags(write=False)
        object.__setattr__(self, "radii", radii)

    @classmethod
    def parse(cls, text: str) -> "ScaleLadder":
        """Parse ``"rho_max:ratio:count"``, e.g. ``"1.0:0.5:8"``."""
        try:
            rho, ratio, count = text.split(":")
            return cls(float(rho), float(ratio), int(count))
        except ValueError as exc:
            raise InputError(f"bad ladder spec {text!r}: expected rho_max:ratio:count") from exc

    @classmethod
    def spanning(cls, rho_max: float, ratio: float, cloud: PointCloud, safety_factor: float = 10.0):
        """Longest ladder from ``rho_max`` whose finest radius is still >= safety_factor * h."""
        floor = safety_factor * cloud.resolution
        if rho_max < floor:
            raise InputError(f"rho_max {rho_max} is below the resolvable scale {floor}")
        count = int(math.floor(math.log(floor / rho_max) / math.log(ratio) + 1e-9)) + 1
        return cls(rho_max, ratio, count)

    def bind(self, cloud: PointCloud, safety_factor: float = 10.0) -> "ScaleLadder":
        """Check that the finest radius is resolvable on ``cloud``; returns self."""
        floor = safety_factor * cloud.resolution
        if self.radii[-1] < floor * (1 - 1e-9):
            raise InputError(
                f"finest ladder radius {self.radii[-1]:.3g} is below {safety_factor:g} x resolution "
                f"({floor:.3g})"
            )
        return self

    def to_dict(self) -> dict:
        return {"rho_max": self.rho_max, "ratio": self.ratio, "count": int(self.count)}


def _normal_norms(diff: np.ndarray, basis: np.ndarray) -> np.ndarray:
    if basis.shape[0] == 0:
        return np.linalg.norm(diff, axis=1)
    resid = diff - (diff @ basis.T) @ basis
    return np.linalg.norm(resid, axis=1)


def _check_dim(p: np.ndarray, n: int) -> None:
    if p.shape[-1] != n:
        raise InputError(f"dimension mismatch: {p.shape[-1]} vs {n}")


def distance_point_plane(p, plane: AffinePlane) -> float:
    p = np.asarray(p, dtype=float).reshape(-1)
    _check_dim(p, plane.ambient_dim)
    return float(plane.distances(p[None, :])[0])


def neighborhood(cloud: PointCloud, ball: Ball) -> PointCloud:
    """Sample points within the closed ball; the result may be empty."""
    _check_dim(ball.center, cloud.ambient_dim)
    idx = neighborhood_index(cloud, ball.center, ball.radius)
    return cloud.subset(idx)


def neighborhood_index(cloud: PointCloud, center, radius: float) -> np.ndarray:
    if len(cloud) == 0:
        return np.zeros(0, dtype=np.intp)
    # small slack so points exactly on the sphere survive rounding in the tree
    idx = np.asarray(cloud.tree.query_ball_point(center, radius * (1 + 1e-12) + 1e-15), dtype=np.intp)
    idx.sort()
    return idx


def one_sided_deviation(cloud: PointCloud, plane: AffinePlane, ball: Ball) -> float:
    """``sup_{p in A ∩ B} d(p, L) / radius`` (0 for an empty intersection)."""
    sub = neighborhood(cloud, ball)
    if len(sub) == 0:
        return 0.0
    return float(plane.distances(sub.points).max() / ball.radius)


def hausdorff_distance(a: PointCloud, b: PointCloud) -> float:
    if len(a) == 0 or len(b) == 0:
        raise InputError("hausdorff_distance needs two nonempty clouds")
    _check_dim(a.points, b.ambient_dim)
    d_ab = b.tree.query(a.points)[0].max()
    d_ba = a.tree.query(b.points)[0].max()
    return float(max(d_ab, d_ba))


def unit_ball_volume(j: float) -> float:
    """Lebesgue measure of the unit ball in R^j."""
    if j < 0:
        raise InputError("unit_ball_volume needs j >= 0")
    return math.pi ** (j / 2) / math.gamma(j / 2 + 1)


# ---------------------------------------------------------------------------
# plane fitting


def _canonical_basis(vecs: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis for span(vecs) (rows).

    Standard basis vectors are projected onto the span and orthonormalised in
    order, so the result does not depend on the LAPACK eigenvector choice.
    """
    k, n = vecs.shape
    if k == 0:
        return np.zeros((0, n))
    q, _ = np.linalg.qr(vecs.T)
    proj = q @ q.T
    out = []
    for i in range(n):
        v = proj[:, i].copy()
        for u in out:
            v -= (u @ v) * u
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            out.append(v / norm)
        if len(out) == k:
            break
    return _orthonormalize(np.array(out))


def _orthonormalize(rows: np.ndarray) -> np.ndarray:
    if rows.shape[0] == 0:
        return rows
    q, r = np.linalg.qr(rows.T)
    q = q * np.sign(np.where(np.diag(r) == 0, 1.0, np.diag(r)))
    out = q.T.copy()
    for v in out:
        nz = np.flatnonzero(np.abs(v) > 1e-12)
        if nz.size and v[nz[0]] < 0:
            v *= -1
    return out


def _spectral_basis(diff: np.ndarray, j: int) -> np.ndarray:
    """Top-j eigenvectors of the second-moment matrix of ``diff`` with a lexicographic tie-break."""
    n = diff.shape[1]
    if j == 0:
        return np.zeros((0, n))
    if j == n:
        return np.eye(n)
    moment = diff.T @ diff if len(diff) else np.zeros((n, n))
    vals, vecs = np.linalg.eigh(moment)
    order = np.argsort(-vals, kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    scale = max(abs(vals[0]), 1e-300)
    tol = 1e-9 * scale
    # eigenvalues tied with the j-th one form a cluster that must be split canonically
    cut = vals[j - 1]
    strict = np.flatnonzero(vals > cut + tol)
    cluster = np.flatnonzero(np.abs(vals - cut) <= tol)
    chosen = list(_canonical_basis(vecs[:, strict].T)) if strict.size else []
    need = j - len(chosen)
    if need:
        tied = vecs[:, cluster].T
        if chosen:
            c = np.array(chosen)
            tied = tied - (tied @ c.T) @ c
        chosen.extend(_canonical_basis(tied)[:need])
    return _orthonormalize(np.array(chosen))


def _hull_reduce(points: np.ndarray) -> np.ndarray:
    """Vertices of the convex hull (enough for any convex sup-objective)."""
    m, n = points.shape
    if m <= n + 1 or n > 6:
        return points
    try:
        return points[ConvexHull(points).vertices]
    except (QhullError, ValueError):
        return points[_flat_hull_index(points)]


def _flat_hull_index(points: np.ndarray) -> np.ndarray:
    """Hull vertex indices of a degenerate (lower-dimensional) point set."""
    centered = points - points.mean(axis=0)
    _, sv, vt = np.linalg.svd(centered, full_matrices=False)
    rank = int(np.sum(sv > 1e-10 * max(sv[0], 1e-300))) if sv.size else 0
    if rank == 0:
        return np.array([0])
    coords = centered @ vt[:rank].T
    if rank == 1:
        return np.unique([np.argmin(coords[:, 0]), np.argmax(coords[:, 0])])
    try:
        return ConvexHull(coords).vertices
    except (QhullError, ValueError):
        return np.arange(len(points))


def _min_width_direction_2d(pts: np.ndarray, symmetric: bool):
    """Exact minimax line in the plane.

    With ``symmetric`` the line passes through the origin and the value is
    ``min_u max |<p, u>|``; otherwise the line is free and the value is half the
    minimum width.  Returns (unit normal, value, offset along normal).
    """
    work = np.vstack([pts, -pts]) if symmetric else pts
    try:
        hull = ConvexHull(work)
        verts = work[hull.vertices]
    except (QhullError, ValueError):
        verts = work[_flat_hull_index(work)] if len(work) > 2 else work
    if len(verts) < 3:
        normals = _degenerate_normals(verts)
    else:
        edges = np.roll(verts, -1, axis=0) - verts
        lens = np.linalg.norm(edges, axis=1)
        keep = lens > 1e-15
        edges = edges[keep] / lens[keep, None]
        normals = np.column_stack([-edges[:, 1], edges[:, 0]])
        if normals.size == 0:
            normals = _degenerate_normals(verts)
    best = (None, math.inf, 0.0)
    for start in range(0, len(normals), 256):
        nrm = normals[start:start + 256]
        proj = verts @ nrm.T
        hi, lo = proj.max(axis=0), proj.min(axis=0)
        vals = (hi - lo) / 2
        k = int(np.argmin(vals))
        if vals[k] < best[1]:
            best = (nrm[k], float(vals[k]), float((hi[k] + lo[k]) / 2))
    normal, value, offset = best
    if symmetric:
        offset = 0.0
    return normal, value, offset


def _degenerate_normals(verts: np.ndarray) -> np.ndarray:
    spread = verts - verts.mean(axis=0)
    if len(verts) < 2 or np.allclose(spread, 0):
        return np.array([[0.0, 1.0]])
    d = spread[np.argmax(np.linalg.norm(spread, axis=1))]
    d = d / np.linalg.norm(d)
    return np.array([[-d[1], d[0]]])


def _enclosing_center(y: np.ndarray) -> np.ndarray:
    """Approximate minimum enclosing ball center of the rows of ``y``."""
    if len(y) == 1:
        return y[0].copy()
    if y.shape[1] == 1:
        return np.array([(y.max() + y.min()) / 2])
    y = _hull_reduce(y)
    c = (y.max(axis=0) + y.min(axis=0)) / 2
    for k in range(1, 400):  # Badoiu-Clarkson
        far = y[np.argmax(np.linalg.norm(y - c, axis=1))]
        c = c + (far - c) / (k + 1)
    res = minimize(lambda z: np.max(np.linalg.norm(y - z, axis=1)), c, method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000})
    if np.max(np.linalg.norm(y - res.x, axis=1)) < np.max(np.linalg.norm(y - c, axis=1)):
        c = res.x
    return c


def enclosing_radius(points: np.ndarray) -> float:
    """Radius of an (approximately minimal) ball containing all points; an upper bound."""
    pts = np.asarray(points, dtype=float)
    c = _enclosing_center(pts)
    return float(np.max(np.linalg.norm(pts - c, axis=1)))


def _frame_from_basis(basis: np.ndarray, n: int) -> np.ndarray:
    """Complete an orthonormal (j, n) basis to an orthonormal n x n frame (rows)."""
    j = basis.shape[0]
    if j == n:
        return basis.copy()
    vals, vecs = np.linalg.eigh(np.eye(n) - basis.T @ basis)
    # the projector has eigenvalue 1 exactly on the orthogonal complement
    comp = _canonical_basis(vecs[:, vals > 0.5].T)
    return np.vstack([basis, comp[: n - j]])


def _plane_objective(diff: np.ndarray, frame: np.ndarray, j: int, anchored: bool):
    """Max distance to the plane spanned by the first j frame rows; returns (value, normal offset)."""
    normal = diff @ frame[j:].T
    if anchored:
        return float(np.max(np.linalg.norm(normal, axis=1))), np.zeros(normal.shape[1])
    if normal.shape[1] == 1:
        hi, lo = normal.max(), normal.min()
        return float((hi - lo) / 2), np.array([(hi + lo) / 2])
    c = _enclosing_center(normal)
    return float(np.max(np.linalg.norm(normal - c, axis=1))), c


def _local_search(diff: np.ndarray, frame: np.ndarray, j: int, anchored: bool,
                  step: float = 0.25, min_step: float = 1e-7, max_rounds: int = 400):
    """Coordinate descent over tangent/normal Givens rotations minimising the max distance."""
    n = frame.shape[0]
    value, _ = _plane_objective(diff, frame, j, anchored)
    rounds = 0
    while step > min_step and rounds < max_rounds:
        rounds += 1
        improved = False
        for a in range(j):
            for b in range(j, n):
                for t in (step, -step):
                    c, s = math.cos(t), math.sin(t)
                    trial = frame.copy()
                    trial[a], trial[b] = c * frame[a] + s * frame[b], -s * frame[a] + c * frame[b]
                    v, _ = _plane_objective(diff, trial, j, anchored)
                    if v < value - 1e-15:
                        frame, value, improved = trial, v, True
                        break
        if not improved:
            step /= 2
    return frame, value


def minimax_basis(vectors: np.ndarray, j: int, seeds=()) -> tuple[np.ndarray, float]:
    """Plane through the origin minimising ``max_v d(v, span)`` over the rows of ``vectors``.

    Exact in the plane (j=1, n=2); coordinate-descent local search otherwise,
    started from the spectral basis and every seed basis.
    """
    vectors = np.asarray(vectors, dtype=float)
    n = vectors.shape[1]
    if j == n:
        return np.eye(n), 0.0
    if len(vectors) == 0:
        return (np.asarray(seeds[0]) if len(seeds) else _spectral_basis(np.eye(n)[:1], j)), 0.0
    if j == 0:
        return np.zeros((0, n)), float(np.max(np.linalg.norm(vectors, axis=1)))
    reduced = _hull_reduce(vectors)
    candidates = [_spectral_basis(reduced, j)] + [np.asarray(s, dtype=float).reshape(j, n) for s in seeds]
    if n == 2 and j == 1:
        normal, _, _ = _min_width_direction_2d(reduced, symmetric=True)
        candidates.insert(0, np.array([[normal[1], -normal[0]]]))
        results = [(b, float(np.max(_normal_norms(reduced, b)))) for b in candidates]
    else:
        results = []
        for b in candidates:
            frame, v = _local_search(reduced, _frame_from_basis(b, n), j, anchored=True)
            results.append((frame[:j], v))
    basis, value = min(results, key=lambda bv: bv[1])
    return _orthonormalize(basis), value


def fit_plane(points, j: int, objective: str = "minimax", anchor=None) -> tuple[AffinePlane, float]:
    """Fit a j-plane to ``points`` (a PointCloud or an (m, n) array).

    ``objective`` is ``"sum-of-squares"`` (plane through the centroid spanned by
    the top-j eigenvectors of the second-moment matrix) or ``"minimax"`` (that
    plane refined to minimise the largest point-plane distance).  With
    ``anchor`` the plane is constrained to pass through that point.

    Returns the plane and its residual, the max distance of the inputs to it.
    """
    pts = points.points if isinstance(points, PointCloud) else np.atleast_2d(np.asarray(points, dtype=float))
    if len(pts) == 0:
        raise InputError("fit_plane needs at least one point")
    n = pts.shape[1]
    if not 0 <= j <= n:
        raise InputError(f"plane dimension j={j} must lie in [0, {n}]")
    if objective not in ("minimax", "sum-of-squares"):
        raise InputError(f"unknown objective {objective!r}")
    base = pts.mean(axis=0) if anchor is None else np.asarray(anchor, dtype=float).reshape(-1)
    _check_dim(base, n)
    diff = pts - base
    basis = _spectral_basis(diff, j)
    plane = AffinePlane(base, basis)
    residual = float(plane.distances(pts).max())
    if objective == "sum-of-squares" or j == n:
        return plane, residual

    if anchor is not None:
        basis2, value = minimax_basis(diff, j, seeds=[basis] if j else ())
        cand = AffinePlane(base, basis2)
    elif j == 0:
        cand = AffinePlane(_enclosing_center(pts), basis)
    elif n == 2 and j == 1:
        reduced = _hull_reduce(diff)
        normal, _, offset = _min_width_direction_2d(reduced, symmetric=False)
        cand = AffinePlane(base + offset * normal, np.array([[normal[1], -normal[0]]]))
    else:
        reduced = _hull_reduce(diff)
        frame, _ = _local_search(reduced, _frame_from_basis(basis, n), j, anchored=False)
        _, off = _plane_objective(reduced, frame, j, anchored=False)
        cand = AffinePlane(base + off @ frame[j:], _orthonormalize(frame[:j]))
    cand_res = float(cand.distances(pts).max())
    if cand_res < residual:
        return cand, cand_res
    return plane, residual


def similarity_transform(cloud: PointCloud, rotation=None, scale: float = 1.0, translation=None) -> PointCloud:
    """Apply ``x -> scale * R x + t``; resolution scales with ``scale``."""
    n = cloud.ambient_dim
    rot = np.eye(n) if rotation is None else np.asarray(rotation, dtype=float)
    t = np.zeros(n) if translation is None else np.asarray(translation, dtype=float)
    return PointCloud(scale * cloud.points @ rot.T + t, cloud.resolution * abs(scale), cloud.label)


def rotation_2d(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])
