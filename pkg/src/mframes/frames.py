"""Bandlimited localized Parseval frames.

Scale ``j`` uses a lattice at spacing ``a * d**-0.5 * 2**-j`` carrying a
positive cubature rule exact on products of two functions of band
``4**(j+1)``. Its atoms are

    Theta_{j,k} = sqrt(mu_{j,k}) * sum_m F_j(lambda_m) u_m(x_{j,k}) u_m,

stored as coefficient vectors on band ``4**(j+1)``. Exactness of each rule on
``|F_j(L) f|**2`` turns ``sum_j ||F_j(L) f||**2 = ||f||**2`` into the Parseval
identity over the atoms.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .cubature import DEFAULT_TOL, CubatureRule, compute_weights
from .errors import BandExceeded, CubatureFailed, InsufficientLattice, UnknownAtomIndex, UsageError
from .filterbank import FilterBank, eval_filter, window
from .lattice import generate_lattice
from .manifolds import Manifold, SpectralCoefficients, get_manifold

log = logging.getLogger(__name__)

DEFAULT_FRAME_A = {"circle": 2.0, "torus2": 2.5, "sphere2": 1.7}
LOCALIZATION_RADII = (2, 5, 10)


def default_strategy(manifold) -> str:
    return "farthest" if get_manifold(manifold).name == "sphere2" else "grid"


def scale_rho(manifold, a: float, j: int) -> float:
    return a / math.sqrt(get_manifold(manifold).d) * 2.0 ** (-j)


@dataclass
class FrameScale:
    j: int
    rule: CubatureRule
    band: float
    atoms: np.ndarray = field(repr=False)  # (K_j, dim E_band)

    @property
    def count(self) -> int:
        return self.atoms.shape[0]


@dataclass
class FrameAtom:
    j: int
    k: int
    center: np.ndarray
    weight: float
    coeffs: SpectralCoefficients


@dataclass
class FrameSet:
    manifold: Manifold
    bank: FilterBank
    a: float
    tol: float
    seed: int
    scales: list[FrameScale]
    band_rule: str = "tight"

    @property
    def j_max(self) -> int:
        return self.bank.j_max

    @property
    def covered_band(self) -> float:
        return self.bank.covered_band

    @property
    def atom_band(self) -> float:
        return max(s.band for s in self.scales)

    def atom_count(self) -> int:
        return sum(s.count for s in self.scales)

    def atom(self, j: int, k: int) -> FrameAtom:
        scale = self._scale(j)
        if not 0 <= k < scale.count:
            raise UnknownAtomIndex(f"no atom ({j}, {k})")
        return FrameAtom(j, k, scale.rule.points[k], float(scale.rule.weights[k]),
                         SpectralCoefficients(self.manifold, scale.band, scale.atoms[k]))

    def _scale(self, j):
        if not 0 <= j < len(self.scales):
            raise UnknownAtomIndex(f"no scale {j}; frame has scales 0..{len(self.scales) - 1}")
        return self.scales[j]


@dataclass
class FrameCoefficients:
    """Analysis coefficients, one dense vector per scale in lattice order."""

    values: list[np.ndarray]
    omega: float

    def __getitem__(self, index):
        j, k = index
        return float(self.values[j][k])

    def energy(self) -> float:
        return float(sum(np.dot(v, v) for v in self.values))

    @classmethod
    def zeros(cls, frame: FrameSet, omega: float = 0.0):
        return cls([np.zeros(s.count) for s in frame.scales], omega)

    @classmethod
    def unit(cls, frame: FrameSet, j: int, k: int):
        out = cls.zeros(frame)
        frame.atom(j, k)
        out.values[j][k] = 1.0
        return out


def exactness_band(manifold, j: int, band_rule: str = "tight") -> float:
    man = get_manifold(manifold)
    top = window(j)[1]
    if band_rule == "universal":
        return 4.0 * man.d * top
    return man.product_band(top)


def build_frame(manifold, omega_target: float, a: float | None = None, tol: float = DEFAULT_TOL,
                seed: int = 0, guard_scales: int = 0, band_rule: str = "tight",
                strategy: str | None = None) -> FrameSet:
    """Construct a Parseval frame on the band covering ``omega_target``.

    Raises CubatureFailed (with the failing scale) when some lattice is too
    coarse for its cubature; decreasing ``a`` refines every scale.
    """
    man = get_manifold(manifold)
    if not omega_target > 0:
        raise UsageError("omega_target must be positive")
    if a is None:
        a = DEFAULT_FRAME_A[man.name]
    if not a > 0:
        raise UsageError("lattice constant a must be positive")
    if band_rule not in ("tight", "universal"):
        raise UsageError(f"unknown band rule {band_rule!r}")
    strategy = strategy or default_strategy(man)
    bank = FilterBank.for_band(omega_target, guard_scales)
    scales = []
    for j in bank.scales:
        rho = scale_rho(man, a, j)
        exact = exactness_band(man, j, band_rule)
        lattice = generate_lattice(man, rho, strategy, seed + j)
        try:
            rule = compute_weights(man, lattice, exact, tol)
        except InsufficientLattice as exc:
            raise CubatureFailed(j, exc) from exc
        band = window(j)[1]
        filt = eval_filter(j, man.eigenvalues(band))
        atoms = np.sqrt(rule.weights)[:, None] * man.basis(lattice.points, band) * filt[None, :]
        log.info("scale %d: rho=%.4g, %d nodes, exact on %g", j, rho, len(lattice), exact)
        scales.append(FrameScale(j, rule, band, atoms))
    return FrameSet(man, bank, float(a), float(tol), int(seed), scales, band_rule)


def _check_band(frame: FrameSet, f: SpectralCoefficients):
    if f.manifold != frame.manifold:
        raise UsageError(f"signal lives on {f.manifold.name}, frame on {frame.manifold.name}")
    if f.omega > frame.covered_band + 1e-9:
        raise BandExceeded(f"signal band {f.omega:g} exceeds covered band {frame.covered_band:g}")


def analyze(frame: FrameSet, f: SpectralCoefficients, cross_check: bool = False) -> FrameCoefficients:
    """Inner products of ``f`` with every atom, computed in the eigenbasis.

    With ``cross_check`` the values are compared against the sampled route
    ``sqrt(mu) * (F_j(L) f)(x_{j,k})`` and a mismatch raises AssertionError.
    """
    _check_band(frame, f)
    values = []
    for scale in frame.scales:
        cols = min(f.coeffs.size, scale.atoms.shape[1])
        values.append(scale.atoms[:, :cols] @ f.coeffs[:cols])
    out = FrameCoefficients(values, f.omega)
    if cross_check:
        other = analyze_sampled(frame, f)
        scale_ref = max(1.0, f.norm())
        for a_vals, b_vals in zip(out.values, other.values):
            if a_vals.size and np.abs(a_vals - b_vals).max() > 1e-12 * scale_ref:
                raise AssertionError("spectral and sampled analysis disagree")
    return out


def analyze_sampled(frame: FrameSet, f: SpectralCoefficients) -> FrameCoefficients:
    """``sqrt(mu_{j,k}) * (F_j(L) f)(x_{j,k})``, evaluating F_j(L) f at the nodes."""
    _check_band(frame, f)
    man = frame.manifold
    values = []
    for scale in frame.scales:
        band = min(f.omega, scale.band)
        filtered = eval_filter(scale.j, man.eigenvalues(band)) * f.with_band(band).coeffs
        node_values = man.basis(scale.rule.points, band) @ filtered
        values.append(np.sqrt(scale.rule.weights) * node_values)
    return FrameCoefficients(values, f.omega)


def synthesize(frame: FrameSet, coeffs: FrameCoefficients, band: float | None = None) -> SpectralCoefficients:
    """Sum of coefficient-weighted atoms, on ``band`` (default: the largest atom band)."""
    if len(coeffs.values) != len(frame.scales):
        raise UnknownAtomIndex(f"coefficients have {len(coeffs.values)} scales, frame has {len(frame.scales)}")
    out_band = frame.atom_band if band is None else band
    dim = frame.manifold.dim_bandlimited(out_band)
    total = np.zeros(dim)
    for scale, vals in zip(frame.scales, coeffs.values):
        vals = np.asarray(vals, dtype=float)
        if vals.shape != (scale.count,):
            raise UnknownAtomIndex(f"scale {scale.j} has {scale.count} atoms, got {vals.shape}")
        cols = min(dim, scale.atoms.shape[1])
        total[:cols] += vals @ scale.atoms[:, :cols]
    return SpectralCoefficients(frame.manifold, out_band, total)


def frame_operator(frame: FrameSet, omega: float) -> np.ndarray:
    """Matrix of f -> sum <f, Theta> Theta restricted to E_omega."""
    dim = frame.manifold.dim_bandlimited(omega)
    S = np.zeros((dim, dim))
    for scale in frame.scales:
        cols = min(dim, scale.atoms.shape[1])
        block = scale.atoms[:, :cols]
        S[:cols, :cols] += block.T @ block
    return S


def parseval_defect(frame: FrameSet, f: SpectralCoefficients) -> float:
    """Relative defect |sum <f, Theta>^2 - ||f||^2| / ||f||^2."""
    energy = analyze(frame, f).energy()
    norm2 = f.norm() ** 2
    return abs(energy - norm2) / norm2


def atom_norms(frame: FrameSet) -> np.ndarray:
    return np.concatenate([np.linalg.norm(s.atoms, axis=1) for s in frame.scales])


@dataclass
class LocalizationProfile:
    j: int
    k: int
    scaled_distance: np.ndarray = field(repr=False)
    magnitude: np.ndarray = field(repr=False)
    center_value: float
    mass_outside: dict

    @property
    def peak_at_center(self) -> bool:
        return self.center_value >= self.magnitude.max() * (1 - 1e-12)

    def rows(self):
        return list(zip(self.scaled_distance.tolist(), self.magnitude.tolist()))


def localization_profile(frame: FrameSet, j: int, k: int, probe_count: int = 20000,
                         radii=LOCALIZATION_RADII) -> LocalizationProfile:
    """Atom magnitude against ``2**j * d(x, x_{j,k})`` on a quadrature grid.

    The grid integrates ``Theta**2`` exactly, so the reported fraction of
    L2 mass outside the ball of radius ``R * 2**-j`` is exact up to rounding.
    """
    atom = frame.atom(j, k)
    man = frame.manifold
    band = man.product_band(atom.coeffs.omega)
    pts, w = man.reference_quadrature(band)
    while pts.shape[0] < probe_count:
        band = 4.0 * band
        pts, w = man.reference_quadrature(band)
    values = atom.coeffs.evaluate(pts)
    dist = man.distance(pts, atom.center)
    total = float(w @ values ** 2)
    mass = {}
    for R in radii:
        outside = dist > R * 2.0 ** (-j)
        mass[R] = float(w[outside] @ values[outside] ** 2) / total
    center_value = float(abs(atom.coeffs.evaluate(atom.center[None, :])[0]))
    return LocalizationProfile(j, k, dist * 2.0 ** j, np.abs(values), center_value, mass)
