"""Spectral backends for the circle, the flat 2-torus and the 2-sphere.

Every backend uses the invariant measure normalized to total mass one and a
real orthonormal eigenbasis of the Laplace-Beltrami operator, so the constant
function is the first basis element and every other basis function has mean
zero. Eigen-entries are ordered by eigenvalue and then by label, which makes
``spectrum(M, w1)`` a prefix of ``spectrum(M, w2)`` whenever ``w1 <= w2``.

Points are stored as float arrays of shape ``(N, coord_dim)``: one angle on
the circle, two angles on the torus, a unit 3-vector on the sphere.
"""
from __future__ import annotations

import abc
import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import roots_legendre

from .errors import NegativeArgument, UsageError
from .legendre import alf_index, fully_normalized_alf

TWO_PI = 2.0 * math.pi
SQRT2 = math.sqrt(2.0)
_CHUNK = 2048


@dataclass(frozen=True)
class EigenEntry:
    manifold: str
    m: int
    eigenvalue: float
    label: tuple

    def label_str(self) -> str:
        if self.manifold == "circle":
            k, trig = self.label
            return f"k={k},{trig}"
        if self.manifold == "torus2":
            k1, k2, trig = self.label
            return f"k=({k1},{k2}),{trig}"
        l, mu = self.label
        return f"l={l},mu={mu}"

    def to_json(self) -> dict:
        return {"m": self.m, "lambda": float(self.eigenvalue), "label": self.label_str()}


class Manifold(abc.ABC):
    """A compact homogeneous manifold with a concrete real eigenbasis."""

    name: str
    n: int  # manifold dimension
    d: int  # dimension of the acting group
    coord_dim: int
    diameter: float

    def __repr__(self):
        return f"{type(self).__name__}()"

    def __eq__(self, other):
        return isinstance(other, Manifold) and other.name == self.name

    def __hash__(self):
        return hash(self.name)

    # -- spectrum -----------------------------------------------------------

    @abc.abstractmethod
    def _table(self, level: int) -> tuple:
        """Eigenvalues and labels for the integer band ``level`` (cached)."""

    def spectrum(self, omega: float) -> list[EigenEntry]:
        eigenvalues, labels = self._table(_level(omega))
        return [EigenEntry(self.name, m, float(lam), lab)
                for m, (lam, lab) in enumerate(zip(eigenvalues, labels))]

    def eigenvalues(self, omega: float) -> np.ndarray:
        return self._table(_level(omega))[0]

    def dim_bandlimited(self, omega: float) -> int:
        return len(self._table(_level(omega))[0])

    def product_band(self, omega: float) -> float:
        _level(omega)
        return 4.0 * self.d * omega

    # -- geometry -----------------------------------------------------------

    @abc.abstractmethod
    def as_points(self, p) -> np.ndarray:
        """Coerce ``p`` to a canonical ``(N, coord_dim)`` array."""

    @abc.abstractmethod
    def distance(self, p, q) -> np.ndarray:
        """Geodesic distance, broadcasting over leading point axes."""

    @abc.abstractmethod
    def random_points(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Points drawn from the normalized invariant measure."""

    @abc.abstractmethod
    def reference_quadrature(self, omega: float) -> tuple[np.ndarray, np.ndarray]:
        """A tensor-product rule exact on E_omega, independent of the cubature solver."""

    # -- eigenfunctions -----------------------------------------------------

    @abc.abstractmethod
    def _basis_block(self, points: np.ndarray, level: int) -> np.ndarray:
        ...

    def basis(self, points, omega: float) -> np.ndarray:
        """Values of all eigenfunctions with eigenvalue <= omega.

        Returns an array of shape ``(N, dim_bandlimited(omega))``.
        """
        level = _level(omega)
        pts = self.as_points(points)
        dim = self.dim_bandlimited(level)
        out = np.empty((pts.shape[0], dim))
        for start in range(0, pts.shape[0], _CHUNK):
            out[start:start + _CHUNK] = self._basis_block(pts[start:start + _CHUNK], level)
        return out


def _level(omega) -> int:
    if omega < 0:
        raise NegativeArgument(f"band must be nonnegative, got {omega}")
    # eigenvalues are integers on all three backends
    return int(math.floor(omega + 1e-9))


class Circle(Manifold):
    name = "circle"
    n = 1
    d = 1
    coord_dim = 1
    diameter = math.pi

    @functools.lru_cache(maxsize=64)
    def _table(self, level):
        kmax = math.isqrt(level)
        lams = [0.0]
        labels = [(0, "cos")]
        for k in range(1, kmax + 1):
            lams += [float(k * k)] * 2
            labels += [(k, "cos"), (k, "sin")]
        return np.array(lams), tuple(labels)

    def as_points(self, p):
        arr = np.asarray(p, dtype=float).reshape(-1, 1)
        return np.mod(arr, TWO_PI)

    def distance(self, p, q):
        p, q = np.asarray(p, float), np.asarray(q, float)
        if p.ndim and p.shape[-1] == 1:
            p = p[..., 0]
        if q.ndim and q.shape[-1] == 1:
            q = q[..., 0]
        delta = np.abs(np.mod(p - q, TWO_PI))
        return np.minimum(delta, TWO_PI - delta)

    def random_points(self, rng, count):
        return rng.uniform(0.0, TWO_PI, size=(count, 1))

    def reference_quadrature(self, omega):
        count = math.isqrt(_level(omega)) + 1
        theta = TWO_PI * np.arange(count) / count
        return theta.reshape(-1, 1), np.full(count, 1.0 / count)

    def _basis_block(self, points, level):
        kmax = math.isqrt(level)
        theta = points[:, 0]
        out = np.empty((theta.size, 2 * kmax + 1))
        out[:, 0] = 1.0
        k = np.arange(1, kmax + 1)
        phase = np.outer(theta, k)
        out[:, 1::2] = SQRT2 * np.cos(phase)
        out[:, 2::2] = SQRT2 * np.sin(phase)
        return out


class Torus2(Manifold):
    name = "torus2"
    n = 2
    d = 2
    coord_dim = 2
    diameter = math.pi * SQRT2

    @functools.lru_cache(maxsize=64)
    def _table(self, level):
        kmax = math.isqrt(level)
        reps = []
        for k1 in range(0, kmax + 1):
            for k2 in range(-kmax, kmax + 1):
                if (k1 > 0 or k2 > 0) and k1 * k1 + k2 * k2 <= level:
                    reps.append((k1 * k1 + k2 * k2, k1, k2))
        rows = [(0.0, (0, 0, "cos"))]
        for lam, k1, k2 in sorted(reps):
            rows.append((float(lam), (k1, k2, "cos")))
            rows.append((float(lam), (k1, k2, "sin")))
        return np.array([r[0] for r in rows]), tuple(r[1] for r in rows)

    @functools.lru_cache(maxsize=64)
    def _frequencies(self, level):
        _, labels = self._table(level)
        freqs = np.array([[lab[0], lab[1]] for lab in labels[1::2]], dtype=float)
        return freqs.reshape(-1, 2)

    def product_band(self, omega):
        # |k + k'|^2 <= (|k| + |k'|)^2 <= 4 omega
        _level(omega)
        return 4.0 * omega

    def as_points(self, p):
        arr = np.asarray(p, dtype=float).reshape(-1, 2)
        return np.mod(arr, TWO_PI)

    def distance(self, p, q):
        delta = np.abs(np.mod(np.asarray(p, float) - np.asarray(q, float), TWO_PI))
        wrapped = np.minimum(delta, TWO_PI - delta)
        return np.sqrt(np.sum(wrapped * wrapped, axis=-1))

    def random_points(self, rng, count):
        return rng.uniform(0.0, TWO_PI, size=(count, 2))

    def reference_quadrature(self, omega):
        count = math.isqrt(_level(omega)) + 1
        theta = TWO_PI * np.arange(count) / count
        t1, t2 = np.meshgrid(theta, theta, indexing="ij")
        pts = np.column_stack([t1.ravel(), t2.ravel()])
        return pts, np.full(pts.shape[0], 1.0 / pts.shape[0])

    def _basis_block(self, points, level):
        freqs = self._frequencies(level)
        phase = points @ freqs.T
        out = np.empty((points.shape[0], 2 * freqs.shape[0] + 1))
        out[:, 0] = 1.0
        out[:, 1::2] = SQRT2 * np.cos(phase)
        out[:, 2::2] = SQRT2 * np.sin(phase)
        return out


class Sphere2(Manifold):
    """Unit sphere with real harmonics ordered by degree l, then order mu in -l..l.

    Column ``l*l + l + mu`` holds the harmonic of degree l and order mu; mu > 0
    carries cos(mu phi), mu < 0 carries sin(|mu| phi).
    """

    name = "sphere2"
    n = 2
    d = 3
    coord_dim = 3
    diameter = math.pi

    @staticmethod
    def max_degree(omega) -> int:
        level = _level(omega)
        deg = int(math.isqrt(level))
        while deg * (deg + 1) > level:
            deg -= 1
        return deg

    @functools.lru_cache(maxsize=64)
    def _table(self, level):
        lmax = self.max_degree(level)
        lams, labels = [], []
        for l in range(lmax + 1):
            for mu in range(-l, l + 1):
                lams.append(float(l * (l + 1)))
                labels.append((l, mu))
        return np.array(lams), tuple(labels)

    def product_band(self, omega):
        top = 2 * self.max_degree(omega)
        return float(top * (top + 1))

    @functools.lru_cache(maxsize=64)
    def _gather(self, lmax):
        alf_cols, trig_cols = [], []
        for l in range(lmax + 1):
            for mu in range(-l, l + 1):
                alf_cols.append(alf_index(l, abs(mu)))
                # trig table: [cos 0..lmax | sin 0..lmax]
                trig_cols.append(mu if mu >= 0 else lmax + 1 - mu)
        return np.array(alf_cols), np.array(trig_cols)

    def as_points(self, p):
        arr = np.asarray(p, dtype=float).reshape(-1, 3)
        norms = np.linalg.norm(arr, axis=1, keepdims=True)
        if np.any(norms == 0):
            raise UsageError("sphere points must be nonzero 3-vectors")
        # leave unit vectors untouched so serialized points roundtrip bit for bit
        return np.where(np.abs(norms - 1.0) > 4e-16, arr / norms, arr)

    def distance(self, p, q):
        p = np.asarray(p, float)
        q = np.asarray(q, float)
        cross = np.linalg.norm(np.cross(p, q), axis=-1)
        dot = np.sum(p * q, axis=-1)
        return np.arctan2(cross, dot)

    def random_points(self, rng, count):
        pts = rng.standard_normal((count, 3))
        return pts / np.linalg.norm(pts, axis=1, keepdims=True)

    def reference_quadrature(self, omega):
        deg = self.max_degree(omega)
        n_lat = deg // 2 + 1
        n_lon = deg + 1
        x, w = roots_legendre(n_lat)
        phi = TWO_PI * np.arange(n_lon) / n_lon
        s = np.sqrt(1.0 - x * x)
        pts = np.column_stack([
            np.outer(s, np.cos(phi)).ravel(),
            np.outer(s, np.sin(phi)).ravel(),
            np.repeat(x, n_lon),
        ])
        weights = np.repeat(w / 2.0, n_lon) / n_lon
        return pts, weights

    def _basis_block(self, points, level):
        lmax = self.max_degree(level)
        alf = fully_normalized_alf(lmax, points[:, 2])
        phi = np.arctan2(points[:, 1], points[:, 0])
        mphi = np.outer(phi, np.arange(lmax + 1))
        trig = np.concatenate([np.cos(mphi), np.sin(mphi)], axis=1)
        alf_cols, trig_cols = self._gather(lmax)
        return alf[:, alf_cols] * trig[:, trig_cols]


CIRCLE = Circle()
TORUS2 = Torus2()
SPHERE2 = Sphere2()
MANIFOLDS = {m.name: m for m in (CIRCLE, TORUS2, SPHERE2)}


def get_manifold(name) -> Manifold:
    if isinstance(name, Manifold):
        return name
    key = str(name).lower().replace("-", "").replace("_", "")
    aliases = {"s1": "circle", "torus": "torus2", "t2": "torus2", "sphere": "sphere2", "s2": "sphere2"}
    key = aliases.get(key, key)
    try:
        return MANIFOLDS[key]
    except KeyError:
        raise UsageError(f"unknown manifold {name!r}; choose from {sorted(MANIFOLDS)}") from None


# Operation-level API -------------------------------------------------------

def spectrum(manifold, omega):
    return get_manifold(manifold).spectrum(omega)


def dim_bandlimited(manifold, omega):
    return get_manifold(manifold).dim_bandlimited(omega)


def product_band(manifold, omega):
    """Smallest safe band containing products of two E_omega functions."""
    return get_manifold(manifold).product_band(omega)


def geodesic_distance(manifold, p, q):
    return get_manifold(manifold).distance(p, q)


def eval_eigenfunction(manifold, entry: EigenEntry, p):
    man = get_manifold(manifold)
    if entry.manifold != man.name:
        raise UsageError(f"entry belongs to {entry.manifold}, not {man.name}")
    values = man.basis(p, entry.eigenvalue)[:, entry.m]
    return float(values[0]) if values.size == 1 else values


@dataclass
class SpectralCoefficients:
    """A function in E_omega given by its coefficients in the eigenbasis."""

    manifold: Manifold
    omega: float
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.manifold = get_manifold(self.manifold)
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        expected = self.manifold.dim_bandlimited(self.omega)
        if self.coeffs.shape != (expected,):
            raise UsageError(f"expected {expected} coefficients for band {self.omega}, "
                             f"got shape {self.coeffs.shape}")

    @classmethod
    def zeros(cls, manifold, omega):
        man = get_manifold(manifold)
        return cls(man, omega, np.zeros(man.dim_bandlimited(omega)))

    @property
    def entries(self):
        return self.manifold.spectrum(self.omega)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def evaluate(self, points) -> np.ndarray:
        return self.manifold.basis(points, self.omega) @ self.coeffs

    def with_band(self, omega) -> "SpectralCoefficients":
        """Zero-pad or truncate to another band (truncation drops coefficients)."""
        dim = self.manifold.dim_bandlimited(omega)
        out = np.zeros(dim)
        keep = min(dim, self.coeffs.size)
        out[:keep] = self.coeffs[:keep]
        return SpectralCoefficients(self.manifold, omega, out)

    def __add__(self, other):
        band = max(self.omega, other.omega)
        return SpectralCoefficients(self.manifold, band,
                                    self.with_band(band).coeffs + other.with_band(band).coeffs)


def random_bandlimited(manifold, omega, rng) -> SpectralCoefficients:
    """Standard-normal coefficients on every eigen-entry of E_omega."""
    man = get_manifold(manifold)
    return SpectralCoefficients(man, omega, rng.standard_normal(man.dim_bandlimited(omega)))
