"""Littlewood-Paley spectral filters with squares summing to one.

The cutoff ``g`` equals 1 on [0, 1], vanishes on [4, inf) and blends
smoothly in between using the mollifier ``phi(t) = exp(-1/t)``. The filters
are

    F_0(s) = sqrt(g(s)),   F_j(s) = sqrt(g(s / 4**j) - g(s / 4**(j-1))),

so the partial sums of ``F_j(s)**2`` telescope to ``g(s / 4**J)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NegativeArgument, UnboundedSupport, UsageError
from .manifolds import SpectralCoefficients, get_manifold

CUTOFF_START = 1.0
CUTOFF_END = 4.0


def _phi(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def eval_g(s):
    """Smooth monotone cutoff: 1 on [0, 1], 0 on [4, inf)."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0):
        raise NegativeArgument("g is defined for s >= 0 only")
    width = CUTOFF_END - CUTOFF_START
    left = _phi((CUTOFF_END - s_arr) / width)
    right = _phi((s_arr - CUTOFF_START) / width)
    total = left + right
    out = np.where(s_arr <= CUTOFF_START, 1.0,
                   np.where(s_arr >= CUTOFF_END, 0.0, left / np.where(total > 0, total, 1.0)))
    return float(out) if np.ndim(s) == 0 else out


def window(j: int) -> tuple[float, float]:
    """Closed spectral interval outside which F_j vanishes."""
    if j == 0:
        return 0.0, CUTOFF_END
    return 4.0 ** (j - 1), 4.0 ** (j + 1)


def eval_filter(j: int, s):
    if j < 0:
        raise UsageError(f"scale must be nonnegative, got {j}")
    s_arr = np.asarray(s, dtype=float)
    if j == 0:
        sq = eval_g(s_arr)
    else:
        sq = np.maximum(eval_g(s_arr / 4.0 ** j) - eval_g(s_arr / 4.0 ** (j - 1)), 0.0)
    out = np.sqrt(sq)
    return float(out) if np.ndim(s) == 0 else out


@dataclass(frozen=True)
class Multiplier:
    """A spectral multiplier ``F`` with declared support ``[0, support]``."""

    func: Callable
    support: float | None
    name: str = "multiplier"

    def __call__(self, s):
        return self.func(s)


def flat_multiplier() -> Multiplier:
    """Equal to 1 on [0, 1] and supported in [0, 4]."""
    return Multiplier(eval_g, CUTOFF_END, "g")


def filter_multiplier(j: int) -> Multiplier:
    """F_j as a multiplier of the unscaled eigenvalue."""
    return Multiplier(lambda s: eval_filter(j, s), window(j)[1], f"F_{j}")


@dataclass(frozen=True)
class FilterBank:
    j_max: int
    generator: str = "mollifier exp(-1/t) blend on [1, 4]"

    def __post_init__(self):
        if self.j_max < 0:
            raise UsageError("j_max must be nonnegative")

    @classmethod
    def for_band(cls, omega_target: float, guard_scales: int = 0) -> "FilterBank":
        """Smallest J with 4**J >= omega_target, plus ``guard_scales``."""
        j = 0
        while 4.0 ** j < omega_target:
            j += 1
        return cls(j + guard_scales)

    @property
    def scales(self) -> range:
        return range(self.j_max + 1)

    @property
    def covered_band(self) -> float:
        """Band on which the squared filters sum to one."""
        return 4.0 ** self.j_max

    def filter(self, j, s):
        return eval_filter(j, s)

    def params(self) -> dict:
        return {"j_max": self.j_max, "generator": self.generator,
                "cutoff": [CUTOFF_START, CUTOFF_END]}


def apply_filter(bank: FilterBank, j: int, f: SpectralCoefficients) -> SpectralCoefficients:
    """Coefficientwise F_j(lambda_m) c_m, returned on band min(f.omega, 4**(j+1))."""
    if not 0 <= j <= bank.j_max:
        raise UsageError(f"scale {j} outside 0..{bank.j_max}")
    band = min(f.omega, window(j)[1])
    g = f.with_band(band)
    lams = f.manifold.eigenvalues(band)
    return SpectralCoefficients(f.manifold, band, eval_filter(j, lams) * g.coeffs)


def eval_kernel(manifold, multiplier: Multiplier, t: float, x, y):
    """Kernel of F(t^2 L): sum over m of F(t^2 lambda_m) u_m(x) u_m(y).

    ``x`` and ``y`` may hold several points each; the result has shape
    ``(len(x), len(y))`` then (a float for single points).
    """
    man = get_manifold(manifold)
    if getattr(multiplier, "support", None) is None:
        raise UnboundedSupport("multiplier must declare a finite support bound")
    if not t > 0:
        raise UsageError("t must be positive")
    band = multiplier.support / (t * t)
    weights = np.asarray(multiplier(t * t * man.eigenvalues(band)), dtype=float)
    bx = man.basis(x, band)
    by = man.basis(y, band)
    out = (bx * weights) @ by.T
    return float(out[0, 0]) if out.size == 1 else out
