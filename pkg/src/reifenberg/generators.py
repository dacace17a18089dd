"""Example sets as point clouds: comb sets, Koch-type curves, Lipschitz graphs, plane patches."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .geometry import InputError, PointCloud

KOCH_MAX_ANGLE = math.pi / 2


@dataclass
class GeneratorSpec:
    """Recipe for a generated cloud; ``params`` are passed to the generator for ``kind``."""

    kind: str
    params: dict = field(default_factory=dict)

    def build(self) -> PointCloud:
        try:
            fn = GENERATORS[self.kind]
        except KeyError:
            raise InputError(f"unknown generator kind {self.kind!r}; choose from {sorted(GENERATORS)}")
        params = dict(self.params)
        if self.kind == "finite-union":
            parts = [GeneratorSpec(**p).build() for p in params.pop("parts")]
            return union(*parts, **params)
        return fn(**params)

    def to_dict(self) -> dict:
        return asdict(self)


def _grid_axis(lo: float, hi: float, h: float) -> np.ndarray:
    m = int(math.ceil((hi - lo) / h - 1e-9)) + 1
    return np.linspace(lo, hi, max(m, 2)) if hi > lo else np.array([lo])


def _grid(j: int, lo: float, hi: float, h: float) -> np.ndarray:
    axis = _grid_axis(lo, hi, h)
    if j == 0:
        return np.zeros((1, 0))
    mesh = np.meshgrid(*([axis] * j), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _pad(points: np.ndarray, n: int) -> np.ndarray:
    return np.hstack([points, np.zeros((points.shape[0], n - points.shape[1]))])


def gen_comb(j: int, n: int, slab_count: int, h: float = 1e-3) -> PointCloud:
    """Samples of ``U_{i<=N} {1/i} x [0,1]^j x {0}^(n-j-1)`` on a grid of spacing <= h."""
    if j < 0 or j >= n:
        raise InputError(f"comb needs 0 <= j < n (one transverse coordinate), got j={j}, n={n}")
    if slab_count < 1:
        raise InputError("slab_count must be positive")
    if not h > 0:
        raise InputError("h must be positive")
    tangential = _grid(j, 0.0, 1.0, h)
    blocks = []
    for i in range(1, slab_count + 1):
        blocks.append(np.hstack([np.full((len(tangential), 1), 1.0 / i), tangential]))
    pts = _pad(np.vstack(blocks), n)
    return PointCloud(pts, h, f"comb j={j} n={n} N={slab_count} h={h:g}")


def comb_slabs(cloud: PointCloud, slab_count: int) -> list[PointCloud]:
    """Split a comb cloud (as produced by :func:`gen_comb`) into its slabs."""
    per = len(cloud) // slab_count
    return [cloud.subset(slice(i * per, (i + 1) * per), f"slab {i + 1}") for i in range(slab_count)]


def koch_ratio(angle: float) -> float:
    """Similarity ratio so that four segments with bend ``angle`` span the unit base."""
    return 1.0 / (2.0 * (1.0 + math.cos(angle)))


def _check_angle(angle: float) -> None:
    if not 0 < angle < KOCH_MAX_ANGLE:
        raise InputError(f"bend angle must lie in (0, pi/2), got {angle}")


def _koch_vertices(schedule) -> tuple[np.ndarray, float]:
    pts = np.array([[0.0, 0.0], [1.0, 0.0]])
    seg = 1.0
    for angle in schedule:
        r = koch_ratio(angle)
        c, s = math.cos(angle), math.sin(angle)
        rot = np.array([[c, -s], [s, c]])
        a, b = pts[:-1], pts[1:]
        v = b - a
        p1 = a + r * v
        p2 = p1 + r * (v @ rot.T)
        p3 = b - r * v
        out = np.empty((4 * len(a) + 1, 2))
        out[0:-1:4], out[1::4], out[2::4], out[3::4] = a, p1, p2, p3
        out[-1] = pts[-1]
        pts = out
        seg *= r
    return pts, seg


def gen_koch(angle: float = math.pi / 3, depth: int = 6) -> PointCloud:
    """Vertices of the depth-d Koch-type curve with bend ``angle`` (pi/3: classical curve)."""
    _check_angle(angle)
    if depth < 0:
        raise InputError("depth must be >= 0")
    pts, seg = _koch_vertices([angle] * depth)
    return PointCloud(pts, seg, f"koch angle={angle:.6g} depth={depth}")


def koch_pieces(cloud: PointCloud) -> list[PointCloud]:
    """The four first-level self-similar pieces of a Koch-type vertex cloud (shared endpoints kept)."""
    m = len(cloud) - 1
    if m < 4 or m % 4:
        raise InputError("cloud is not a Koch vertex set of depth >= 1")
    q = m // 4
    return [cloud.subset(slice(i * q, (i + 1) * q + 1), f"piece {i + 1}") for i in range(4)]


def gen_variable_koch(schedule, depth: int) -> PointCloud:
    """Koch-type curve whose level-k bends (k = 1 coarsest) use ``schedule[k-1]``."""
    schedule = [float(t) for t in schedule]
    if len(schedule) < depth:
        raise InputError(f"schedule has {len(schedule)} angles but depth is {depth}")
    schedule = schedule[:depth]
    for t in schedule:
        _check_angle(t)
    if any(b > a + 1e-15 for a, b in zip(schedule, schedule[1:])):
        raise InputError("angle schedule must be non-increasing")
    pts, seg = _koch_vertices(schedule)
    return PointCloud(pts, seg, f"variable koch depth={depth}")


@dataclass
class LipschitzGraph:
    """A map ``g: R^j -> R^(n-j)`` with Lipschitz constant <= M.

    Each output component is a sum of one-dimensional profiles, one per domain
    axis.  Profiles are piecewise linear on ``knots`` uniform cells (slopes from
    a clamped random walk) or short sine series, scaled so the sum has
    Lipschitz constant at most M.
    """

    j: int
    n: int
    lipschitz: float
    shape: str
    slopes: np.ndarray | None = None     # (n-j, j, knots)
    offsets: np.ndarray | None = None    # (n-j, j, knots + 1) profile values at knots
    amplitudes: np.ndarray | None = None  # (n-j, j, terms)
    phases: np.ndarray | None = None

    def profile_bound(self) -> float:
        k = self.n - self.j
        return self.lipschitz / math.sqrt(self.j * k) if self.j and k else 0.0

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        k = self.n - self.j
        out = np.zeros((len(x), k))
        for c in range(k):
            for i in range(self.j):
                out[:, c] += self._profile(c, i, x[:, i])
        return out

    def _profile(self, c: int, i: int, t: np.ndarray) -> np.ndarray:
        if self.shape == "piecewise-linear":
            knots = self.slopes.shape[2]
            cell = np.clip(np.floor(t * knots).astype(int), 0, knots - 1)
            return self.offsets[c, i, cell] + self.slopes[c, i, cell] * (t - cell / knots)
        terms = np.arange(1, self.amplitudes.shape[2] + 1)
        arg = 2 * np.pi * np.outer(t, terms) + self.phases[c, i]
        return (np.sin(arg) - np.sin(self.phases[c, i])) @ self.amplitudes[c, i]

    def breakpoints(self) -> np.ndarray:
        """Knot positions along each axis (piecewise-linear shape only)."""
        return np.linspace(0.0, 1.0, self.slopes.shape[2] + 1)


def lipschitz_graph(j: int, n: int, lipschitz: float, seed: int = 0,
                    shape: str = "piecewise-linear", knots: int = 16, terms: int = 3) -> LipschitzGraph:
    if lipschitz < 0:
        raise InputError("Lipschitz constant must be >= 0")
    if not 0 < j < n:
        raise InputError(f"graph needs 0 < j < n, got j={j}, n={n}")
    if shape not in ("piecewise-linear", "smooth"):
        raise InputError(f"unknown graph shape {shape!r}")
    rng = np.random.default_rng(seed)
    g = LipschitzGraph(j, n, float(lipschitz), shape)
    bound = g.profile_bound()
    k = n - j
    if shape == "piecewise-linear":
        walk = np.cumsum(rng.normal(0.0, 0.5 * bound if bound else 1.0, size=(k, j, knots)), axis=2)
        slopes = np.clip(walk, -bound, bound)
        offsets = np.zeros((k, j, knots + 1))
        offsets[:, :, 1:] = np.cumsum(slopes / knots, axis=2)
        g.slopes, g.offsets = slopes, offsets
    else:
        raw = rng.uniform(-1.0, 1.0, size=(k, j, terms))
        weight = np.abs(raw) @ (2 * np.pi * np.arange(1, terms + 1))
        g.amplitudes = raw * (bound / np.where(weight > 0, weight, 1.0))[..., None]
        g.phases = rng.uniform(0.0, 2 * np.pi, size=(k, j, 1))
    return g


def gen_lipschitz_graph(j: int, n: int, lipschitz: float, seed: int = 0, h: float = 1e-3,
                        shape: str = "piecewise-linear", knots: int = 16) -> PointCloud:
    """Samples of ``graph(g)`` over ``[0,1]^j`` for a seeded random g with Lipschitz constant <= M."""
    if not h > 0:
        raise InputError("h must be positive")
    g = lipschitz_graph(j, n, lipschitz, seed, shape, knots)
    domain = _grid(j, 0.0, 1.0, h / math.sqrt(1.0 + lipschitz ** 2))
    pts = np.hstack([domain, g(domain)])
    return PointCloud(pts, h, f"lipschitz graph j={j} n={n} M={lipschitz:g} seed={seed} {shape}")


def gen_plane_patch(j: int, n: int, radius: float = 1.0, h: float = 0.01) -> PointCloud:
    """Grid samples of ``B_radius(0) ∩ span(e_1..e_j)``."""
    if not 0 <= j <= n:
        raise InputError(f"need 0 <= j <= n, got j={j}, n={n}")
    if not (radius > 0 and h > 0):
        raise InputError("radius and h must be positive")
    grid = _grid(j, -radius, radius, h)
    grid = grid[np.linalg.norm(grid, axis=1) <= radius * (1 + 1e-12)]
    return PointCloud(_pad(grid, n), h, f"plane patch j={j} n={n} radius={radius:g}")


def gen_circle(radius: float = 1.0, h: float = 1e-3) -> PointCloud:
    """Control curve: samples of a circle of the given radius in R^2."""
    m = int(math.ceil(2 * math.pi * radius / h))
    t = 2 * math.pi * np.arange(m) / m
    return PointCloud(radius * np.column_stack([np.cos(t), np.sin(t)]), h, f"circle R={radius:g}")


def union(*clouds: PointCloud, label: str | None = None) -> PointCloud:
    if not clouds:
        raise InputError("union needs at least one cloud")
    if len(clouds) == 1 and label is None:
        return clouds[0]
    dims = {c.ambient_dim for c in clouds}
    if len(dims) != 1:
        raise InputError(f"cannot unite clouds of ambient dimensions {sorted(dims)}")
    pts = np.vstack([c.points for c in clouds])
    res = max(c.resolution for c in clouds)
    return PointCloud(pts, res, label if label is not None else " + ".join(c.label for c in clouds))


GENERATORS = {
    "comb": gen_comb,
    "koch": gen_koch,
    "variable-koch": gen_variable_koch,
    "lipschitz-graph": gen_lipschitz_graph,
    "plane-patch": gen_plane_patch,
    "circle": gen_circle,
    "finite-union": union,
}
