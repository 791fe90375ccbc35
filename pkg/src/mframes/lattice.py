"""Metric rho-lattices: separated, covering point sets of bounded multiplicity.

A lattice at spacing ``rho`` must have pairwise geodesic distances of at
least ``rho/2`` and covering radius at most ``rho/2``. Covering is measured on
a deterministic probe set, so it is an estimate with probe resolution.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import DuplicatePoints, GenerationFailed, StrategyUnsupported, UsageError
from .manifolds import TWO_PI, Manifold, get_manifold

log = logging.getLogger(__name__)

DEFAULT_PROBES_PER_POINT = 200
DEFAULT_POOL_FACTOR = 100
STRATEGIES = ("grid", "farthest")


@dataclass
class Lattice:
    manifold: Manifold
    rho: float
    points: np.ndarray

    def __post_init__(self):
        self.manifold = get_manifold(self.manifold)
        self.points = self.manifold.as_points(self.points)

    def __len__(self):
        return self.points.shape[0]


@dataclass(frozen=True)
class LatticeReport:
    min_separation: float
    covering_radius: float
    multiplicity: int
    cover_multiplicity: int
    point_count: int
    rho: float

    @property
    def separated(self) -> bool:
        return self.min_separation >= 0.5 * self.rho * (1 - 1e-12)

    @property
    def covering(self) -> bool:
        return self.covering_radius <= 0.5 * self.rho * (1 + 1e-12)

    @property
    def ok(self) -> bool:
        return self.separated and self.covering


def default_probe_count(point_count: int) -> int:
    """At least DEFAULT_PROBES_PER_POINT per point, rounded up to a power of two.

    Rounding keeps the probe set unchanged while refinement adds a few points.
    """
    return 1 << math.ceil(math.log2(DEFAULT_PROBES_PER_POINT * max(point_count, 1)))


def probe_points(manifold, count: int) -> np.ndarray:
    """Deterministic quasi-uniform probes: equispaced grids or a Fibonacci sphere."""
    man = get_manifold(manifold)
    if man.name == "circle":
        return (TWO_PI * np.arange(count) / count).reshape(-1, 1)
    if man.name == "torus2":
        side = math.isqrt(count - 1) + 1
        t = TWO_PI * np.arange(side) / side
        a, b = np.meshgrid(t, t, indexing="ij")
        return np.column_stack([a.ravel(), b.ravel()])
    i = np.arange(count) + 0.5
    z = 1.0 - 2.0 * i / count
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = math.pi * (3.0 - math.sqrt(5.0)) * i
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


class _Index:
    """Nearest-neighbour queries in geodesic distance."""

    def __init__(self, manifold: Manifold, points: np.ndarray):
        self.sphere = manifold.name == "sphere2"
        self.tree = cKDTree(self._embed(points), boxsize=None if self.sphere else TWO_PI)

    def _embed(self, pts):
        if self.sphere:
            return pts
        pts = np.array(pts, dtype=float)
        pts[pts >= TWO_PI] -= TWO_PI
        return pts

    def _to_query_radius(self, r):
        if self.sphere:
            return 2.0 * math.sin(min(r, math.pi) / 2.0)
        return r

    def _to_geodesic(self, dist):
        if self.sphere:
            return 2.0 * np.arcsin(np.minimum(dist, 2.0) / 2.0)
        return dist

    def query(self, pts, k=1):
        dist, idx = self.tree.query(self._embed(pts), k=k)
        return self._to_geodesic(dist), idx

    def distance_to(self, pts, p):
        if self.sphere:
            chord = np.linalg.norm(pts - p, axis=-1)
            return 2.0 * np.arcsin(np.minimum(chord, 2.0) / 2.0)
        delta = np.abs(np.mod(pts - p, TWO_PI))
        wrapped = np.minimum(delta, TWO_PI - delta)
        return np.sqrt(np.sum(wrapped * wrapped, axis=-1))

    def count_within(self, pts, r):
        """Number of indexed points at geodesic distance strictly below ``r``."""
        radius = self._to_query_radius(r) * (1 - 1e-9)
        return self.tree.query_ball_point(self._embed(pts), radius, return_length=True)


def verify_lattice(lattice: Lattice, probe_count: int | None = None) -> LatticeReport:
    """Measure separation, covering radius and cover multiplicities.

    ``multiplicity`` counts lattice points within distance rho of a probe (the
    rho-ball cover); ``cover_multiplicity`` does the same for rho/2.
    """
    return _measure(lattice, probe_count, multiplicities=True)


def _measure(lattice, probe_count, multiplicities):
    man = lattice.manifold
    pts = lattice.points
    count = len(pts)
    if probe_count is None:
        probe_count = default_probe_count(count)
    if probe_count < 10 * count:
        raise UsageError(f"probe_count must be at least 10 x point count ({10 * count})")
    index = _Index(man, pts)
    if count > 1:
        dist, _ = index.query(pts, k=2)
        min_sep = float(dist[:, 1].min())
        if min_sep == 0.0:
            raise DuplicatePoints("lattice contains repeated points")
    else:
        min_sep = math.inf
    probes = probe_points(man, probe_count)
    nearest, _ = index.query(probes)
    mult = cover_mult = -1
    if multiplicities:
        mult = int(index.count_within(probes, lattice.rho).max())
        cover_mult = int(index.count_within(probes, 0.5 * lattice.rho).max())
    return LatticeReport(
        min_separation=min_sep,
        covering_radius=float(nearest.max()),
        multiplicity=mult,
        cover_multiplicity=cover_mult,
        point_count=count,
        rho=float(lattice.rho),
    )


def grid_size(rho: float) -> int:
    """Largest even point count per axis whose spacing stays >= rho/2."""
    size = int(math.floor(4.0 * math.pi / rho + 1e-9))
    return size - size % 2


def _grid(man: Manifold, rho: float) -> np.ndarray:
    size = grid_size(rho)
    if size < 2:
        raise GenerationFailed(f"rho={rho} too large for a grid on {man.name}")
    t = TWO_PI * np.arange(size) / size
    if man.name == "circle":
        return t.reshape(-1, 1)
    a, b = np.meshgrid(t, t, indexing="ij")
    return np.column_stack([a.ravel(), b.ravel()])


def _farthest(man: Manifold, rho: float, rng: np.random.Generator, pool_factor: float) -> np.ndarray:
    half = 0.5 * rho
    pool_size = int(math.ceil(pool_factor * (man.diameter / rho) ** man.n))
    pool = man.random_points(rng, pool_size)
    first = pool[rng.integers(pool_size)]
    # leaf order of a kd-tree is spatially coherent, so metric balls touch few blocks
    pool = pool[cKDTree(_Index(man, pool)._embed(pool)).indices]
    index = _Index(man, pool)
    block = 256
    nblocks = -(-pool_size // block)
    mind = np.full(nblocks * block, -np.inf)
    mind[:pool_size] = index.distance_to(pool, first)
    blocks = mind.reshape(nblocks, block)
    bmax = blocks.max(axis=1)
    selected = [first]
    # margin keeps the exact separation check clear of rounding in the update
    threshold = half * (1 + 1e-9)
    while True:
        b = int(np.argmax(bmax))
        i = b * block + int(np.argmax(blocks[b]))
        radius = mind[i]
        if radius <= threshold:
            break
        p = pool[i]
        selected.append(p)
        # only pool points closer to p than the current maximum can improve
        near = np.asarray(index.tree.query_ball_point(
            index._embed(p[None, :])[0], index._to_query_radius(radius) * (1 + 1e-9)))
        np.minimum.at(mind, near, index.distance_to(pool[near], p))
        touched = np.unique(near // block)
        bmax[touched] = blocks[touched].max(axis=1)
    points = np.array(selected)

    # probe-driven refinement: any probe farther than rho/2 is a valid new point
    for _ in range(50):
        probes = probe_points(man, default_probe_count(len(points)))
        nearest, _ = _Index(man, points).query(probes)
        if nearest.max() <= half:
            return points
        extra = []
        order = np.argsort(-nearest)
        for i in order:
            if nearest[i] <= threshold:
                break
            cand = probes[i]
            if extra and np.min(man.distance(np.array(extra), cand)) <= threshold:
                continue
            extra.append(cand)
        log.debug("refinement added %d points", len(extra))
        points = np.vstack([points, np.array(extra)])
    return points


def generate_lattice(manifold, rho: float, strategy: str = "farthest", seed: int = 0,
                     pool_factor: float = DEFAULT_POOL_FACTOR) -> Lattice:
    """Build a rho-lattice and verify it before returning.

    ``strategy`` is ``"grid"`` (circle and torus only) or ``"farthest"``
    (greedy maximin selection from a seeded candidate pool).
    """
    man = get_manifold(manifold)
    if not rho > 0 or rho >= man.diameter:
        raise UsageError(f"rho must lie in (0, {man.diameter:.4f}), got {rho}")
    strategy = strategy.lower()
    if strategy in ("farthestpoint", "farthest_point", "fps"):
        strategy = "farthest"
    if strategy == "grid":
        if man.name == "sphere2":
            raise StrategyUnsupported("grid lattices exist only on the circle and torus")
        points = _grid(man, rho)
    elif strategy == "farthest":
        points = _farthest(man, rho, np.random.default_rng(seed), pool_factor)
    else:
        raise UsageError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")
    lattice = Lattice(man, rho, points)
    report = _measure(lattice, None, multiplicities=False)
    if not report.ok:
        raise GenerationFailed(
            f"{strategy} lattice on {man.name} at rho={rho} violates invariants: "
            f"separation {report.min_separation:.4g}, covering {report.covering_radius:.4g}; "
            "increase the candidate pool")
    return lattice
