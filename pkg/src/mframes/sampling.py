"""Shannon-type reconstruction and exact discrete Fourier coefficients.

A scheme for design band ``Omega`` pairs the flat kernel of ``g(L / Omega)``
(equal to 1 on E_Omega, zero beyond ``4 Omega``) with a positive cubature rule
exact on products of two functions of band ``4 Omega``. For ``f`` in E_Omega,

    f(x) = sum_k mu_k f(x_k) K(x, x_k).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cubature import DEFAULT_TOL, CubatureRule, compute_weights
from .errors import BandInsufficient, CubatureFailed, InsufficientLattice, LengthMismatch, UsageError
from .filterbank import CUTOFF_END, Multiplier, eval_g
from .lattice import generate_lattice
from .manifolds import EigenEntry, Manifold, SpectralCoefficients, get_manifold

DEFAULT_SAMPLING_A = {"circle": 2.0, "torus2": 2.0, "sphere2": 0.95}


@dataclass
class SamplingScheme:
    manifold: Manifold
    Omega: float
    multiplier: Multiplier
    rule: CubatureRule
    kernel_band: float
    # row k: spectral coefficients of mu_k K(., x_k)
    kernel_columns: np.ndarray = field(repr=False)

    @property
    def node_count(self) -> int:
        return len(self.rule)

    @property
    def nodes(self) -> np.ndarray:
        return self.rule.points


def build_sampling_scheme(manifold, Omega: float, a: float | None = None, tol: float = DEFAULT_TOL,
                          seed: int = 0, strategy: str | None = None) -> SamplingScheme:
    man = get_manifold(manifold)
    if not Omega > 0:
        raise UsageError(f"design band Omega must be positive, got {Omega}")
    if a is None:
        a = DEFAULT_SAMPLING_A[man.name]
    strategy = strategy or ("farthest" if man.name == "sphere2" else "grid")
    kernel_band = CUTOFF_END * Omega
    multiplier = Multiplier(lambda lam: eval_g(np.asarray(lam) / Omega), kernel_band, "g(./Omega)")
    lattice = generate_lattice(man, a / math.sqrt(Omega), strategy, seed)
    try:
        rule = compute_weights(man, lattice, man.product_band(kernel_band), tol)
    except InsufficientLattice as exc:
        raise CubatureFailed(None, exc) from exc
    filt = multiplier(man.eigenvalues(kernel_band))
    columns = rule.weights[:, None] * man.basis(lattice.points, kernel_band) * filt[None, :]
    return SamplingScheme(man, float(Omega), multiplier, rule, kernel_band, columns)


def reconstruct_coefficients(scheme: SamplingScheme, samples) -> SpectralCoefficients:
    samples = np.asarray(samples, dtype=float)
    if samples.shape != (scheme.node_count,):
        raise LengthMismatch(f"expected {scheme.node_count} samples, got {samples.shape}")
    return SpectralCoefficients(scheme.manifold, scheme.kernel_band, samples @ scheme.kernel_columns)


def reconstruct(scheme: SamplingScheme, samples, eval_points) -> np.ndarray:
    """Values at ``eval_points`` of sum_k mu_k f(x_k) K(x, x_k)."""
    return reconstruct_coefficients(scheme, samples).evaluate(eval_points)


def required_band(manifold, entries, signal_band=None) -> float:
    man = get_manifold(manifold)
    top = max((e.eigenvalue for e in entries), default=0.0)
    if signal_band is not None:
        top = max(top, signal_band)
    return man.product_band(top)


def fourier_coefficients(rule: CubatureRule, samples, entries: list[EigenEntry],
                         signal_band: float | None = None) -> np.ndarray:
    """Exact coefficients sum_k mu_k f(x_k) u_i(x_k) for each requested entry.

    The rule must be exact on products of the signal band with the requested
    entries; ``signal_band`` defaults to the largest requested eigenvalue.
    """
    man = rule.manifold
    samples = np.asarray(samples, dtype=float)
    if samples.shape != rule.weights.shape:
        raise LengthMismatch(f"expected {rule.weights.size} samples, got {samples.shape}")
    if not entries:
        return np.zeros(0)
    for e in entries:
        if e.manifold != man.name:
            raise UsageError(f"entry {e.label_str()} belongs to {e.manifold}")
    need = required_band(man, entries, signal_band)
    if rule.omega + 1e-9 < need:
        raise BandInsufficient(f"rule is exact on E_{rule.omega:g} but E_{need:g} is needed; "
                               "coefficients would alias")
    top = max(e.eigenvalue for e in entries)
    basis = man.basis(rule.points, top)[:, [e.m for e in entries]]
    return (rule.weights * samples) @ basis


def discrete_representation(rule: CubatureRule, samples, omega: float) -> SpectralCoefficients:
    entries = rule.manifold.spectrum(omega)
    coeffs = fourier_coefficients(rule, samples, entries, signal_band=omega)
    return SpectralCoefficients(rule.manifold, omega, coeffs)
