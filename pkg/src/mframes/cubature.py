"""Positive cubature rules exact on a bandlimited space.

With the normalized measure and an orthonormal basis whose first element is
the constant, exactness on E_omega means ``A mu = e_0`` where ``A[m, k]`` is
the m-th eigenfunction at the k-th node. Weights are found as the
smallest-norm correction of the uniform rule, with an active-set pass that
pins weights at the positivity floor, and Lawson-Hanson NNLS as the last
resort.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh, lstsq
from scipy.optimize import nnls

from .errors import InsufficientLattice, LengthMismatch, ToleranceInvalid, UsageError
from .lattice import Lattice
from .manifolds import Manifold, get_manifold

log = logging.getLogger(__name__)

EPSILON = 1e-6
DEFAULT_TOL = 1e-10


@dataclass
class CubatureRule:
    lattice: Lattice
    weights: np.ndarray = field(repr=False)
    omega: float
    residual: float
    solver: str = "min-norm"

    @property
    def manifold(self) -> Manifold:
        return self.lattice.manifold

    @property
    def points(self) -> np.ndarray:
        return self.lattice.points

    def __len__(self):
        return len(self.weights)

    def weight_ratio(self) -> float:
        return float(self.weights.max() / self.weights.min())

    def weight_constants(self) -> tuple[float, float]:
        """Empirical (c1, c2) with c1 rho^n <= mu_k <= c2 rho^n."""
        scale = self.lattice.rho ** self.manifold.n
        return float(self.weights.min() / scale), float(self.weights.max() / scale)


def moment_matrix(manifold, points, omega) -> np.ndarray:
    """``A[m, k] = u_m(x_k)`` over all eigen-entries with eigenvalue <= omega."""
    return get_manifold(manifold).basis(points, omega).T


def _moment_defect(A, mu):
    defect = A @ mu
    defect[0] -= 1.0
    return defect


def _min_norm_solve(A, r, refine=2):
    """Smallest ``x`` with ``A x = r`` (least squares when inconsistent)."""
    rows, cols = A.shape
    if rows > cols:
        return lstsq(A, r, lapack_driver="gelsd")[0]
    gram = A @ A.T
    evals, evecs = eigh(gram)
    cutoff = evals[-1] * 1e-13
    inv = np.where(evals > cutoff, 1.0 / np.where(evals > cutoff, evals, 1.0), 0.0)

    def solve(rhs):
        return A.T @ (evecs @ (inv * (evecs.T @ rhs)))

    x = solve(r)
    for _ in range(refine):
        x += solve(r - A @ x)
    return x


def _least_change(A, mu0, lb, max_rounds=30):
    """Closest weights to ``mu0`` satisfying the moments, with active-set clamping at ``lb``."""
    free = np.ones(mu0.size, dtype=bool)
    mu = mu0.copy()
    for _ in range(max_rounds):
        fixed_mass = A[:, ~free] @ np.full((~free).sum(), lb)
        rhs = -fixed_mass - A[:, free] @ mu0[free]
        rhs[0] += 1.0
        mu = np.full(mu0.size, lb)
        mu[free] = mu0[free] + _min_norm_solve(A[:, free], rhs)
        low = free & (mu < lb)
        if not low.any():
            return mu
        free &= ~low
        if not free.any():
            break
    return None


def compute_weights(manifold, lattice: Lattice, omega: float, tol: float = DEFAULT_TOL,
                    eps: float = EPSILON) -> CubatureRule:
    """Strictly positive weights integrating every function in E_omega exactly.

    Every weight is at least ``eps / K`` for K nodes. Raises
    InsufficientLattice when no such rule is found within ``tol``; the remedy
    is a finer lattice.
    """
    man = get_manifold(manifold)
    if not tol > 0:
        raise ToleranceInvalid(f"tol must be positive, got {tol}")
    if omega < 0:
        raise UsageError(f"omega must be nonnegative, got {omega}")
    if lattice.manifold != man:
        raise UsageError(f"lattice lives on {lattice.manifold.name}, not {man.name}")
    count = len(lattice)
    A = moment_matrix(man, lattice.points, omega)
    lb = eps / count
    mu0 = np.full(count, 1.0 / count)

    solver = "uniform"
    mu = mu0
    if np.abs(_moment_defect(A, mu0)).max() > 1e-3 * tol:
        solver = "min-norm"
        mu = _least_change(A, mu0, lb)
        if mu is None or np.abs(_moment_defect(A, mu)).max() > tol:
            solver = "nnls"
            log.info("least-change weights failed on %d nodes; falling back to NNLS", count)
            rhs = -A.sum(axis=1) * lb
            rhs[0] += 1.0
            nu, _ = nnls(A, rhs, maxiter=50 * count)
            mu = lb + nu
    residual = float(np.abs(_moment_defect(A, mu)).max())
    if residual > tol or mu.min() < lb * (1 - 1e-12):
        raise InsufficientLattice(
            f"{count} nodes cannot integrate E_{omega:g} on {man.name} exactly: "
            f"residual {residual:.3g} > tol {tol:.3g}; refine rho")
    return CubatureRule(lattice, mu, float(omega), residual, solver)


def verify_exactness(rule: CubatureRule, omega_check: float) -> float:
    """Largest moment defect over all eigen-entries with eigenvalue <= omega_check."""
    A = moment_matrix(rule.manifold, rule.points, omega_check)
    return float(np.abs(_moment_defect(A, rule.weights)).max())


def integrate(rule: CubatureRule, samples) -> float:
    samples = np.asarray(samples, dtype=float)
    if samples.shape != rule.weights.shape:
        raise LengthMismatch(f"expected {rule.weights.size} samples, got {samples.shape}")
    return float(rule.weights @ samples)


# rho = c / sqrt(omega); empirically sufficient per backend
DEFAULT_RHO_CONSTANT = {"circle": np.pi, "torus2": np.pi, "sphere2": 3.4}


def auto_rho(manifold, omega: float, c: float | None = None) -> float:
    man = get_manifold(manifold)
    if c is None:
        c = DEFAULT_RHO_CONSTANT[man.name]
    if omega <= 0:
        return 0.9 * man.diameter
    return min(c / np.sqrt(omega), 0.9 * man.diameter)


def auto_rule(manifold, omega: float, tol: float = DEFAULT_TOL, seed: int = 0,
              rho: float | None = None, strategy: str | None = None) -> CubatureRule:
    """Lattice at ``rho`` (default ``auto_rho``) plus a rule exact on E_omega."""
    from .lattice import generate_lattice

    man = get_manifold(manifold)
    rho = auto_rho(man, omega) if rho is None else rho
    strategy = strategy or ("farthest" if man.name == "sphere2" else "grid")
    return compute_weights(man, generate_lattice(man, rho, strategy, seed), omega, tol)
