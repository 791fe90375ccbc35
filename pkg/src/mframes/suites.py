"""Named verification suites; each item returns one ResultRecord.

Items are independent, so ``run_suites`` may evaluate them on a thread pool
(capped by MFRAMES_THREADS). Every item draws its randomness from a generator
seeded by ``(seed, item name)``, which keeps records identical no matter how
the items are scheduled.
"""
from __future__ import annotations

import functools
import math
import os
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone

import numpy as np

from .cubature import auto_rule, compute_weights, integrate, verify_exactness
from .errors import UsageError
from .filterbank import FilterBank, apply_filter, eval_filter
from .frames import (
    analyze, atom_norms, build_frame, frame_operator, localization_profile, synthesize,
)
from .lattice import generate_lattice, verify_lattice
from .manifolds import MANIFOLDS, get_manifold, random_bandlimited
from .records import ExperimentConfig, ResultRecord
from .sampling import build_sampling_scheme, fourier_coefficients, reconstruct

ALL_MANIFOLDS = tuple(MANIFOLDS)

# largest L2 mass fraction of a sphere atom outside radius 10 * 2**-j, measured
# over the first atoms of scales 2 and 3 (worst case 0.0081) with a safety margin
LOCALIZATION_BOUND = 0.02
LOCALIZATION_RADIUS = 10

PARSEVAL_TOL = 1e-8
NORM_TOL = 1e-10
PRODUCT_TOL = 1e-10
SHANNON_TOL = 1e-8
FOURIER_TOL = 1e-10
WEYL_BAND = 2.0
ATOM_FACTOR = 4.0

PRODUCT_OMEGA = {"circle": 16.0, "torus2": 8.0, "sphere2": 12.0}
FOURIER_OMEGA = {"circle": 16.0, "torus2": 8.0, "sphere2": 20.0}
LATTICE_RHO = {"circle": 0.1, "torus2": 0.3, "sphere2": 0.2}
SHANNON_OMEGAS = (4.0, 16.0, 64.0)
WEYL_OMEGAS = (4.0, 16.0, 64.0, 256.0)


def item_rng(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng([int(seed), zlib.crc32(name.encode())])


def lmax_to_omega(lmax: int) -> float:
    return float(lmax * (lmax + 1))


@functools.lru_cache(maxsize=8)
def cached_frame(manifold: str, omega: float, a=None, tol=1e-10, seed=0, guard_scales=0):
    return build_frame(manifold, omega, a=a, tol=tol, seed=seed, guard_scales=guard_scales)


def _record(name, config, measured, checks, rows=()):
    return ResultRecord(name=name, command=config.command, config=config.to_dict(),
                        measured=measured, checks=checks, rows=list(rows), seed=config.seed)


def _manifolds(config, default=ALL_MANIFOLDS):
    if config.manifold is None:
        return default
    return (get_manifold(config.manifold).name,)


def _frame_omega(config, default=72.0):
    if config.lmax is not None:
        return lmax_to_omega(config.lmax)
    return default if config.omega is None else config.omega


# -- individual items ---------------------------------------------------------


def partition_item(config, name):
    j_max = config.j_max
    s = np.linspace(0.0, 4.0 ** j_max, 10_000)
    total = sum(eval_filter(j, s) ** 2 for j in range(j_max + 1))
    defect = float(np.abs(total - 1.0).max())
    return _record(name, config, {"j_max": j_max, "grid_points": s.size, "max_defect": defect},
                   {"partition_of_unity": defect < 1e-12})


def norm_item(config, name, man):
    rng = item_rng(config.seed, name)
    omega = config.omega if config.omega is not None else 4.0 ** config.j_max
    bank = FilterBank.for_band(omega)
    trials = config.trials or 100
    worst = 0.0
    for _ in range(trials):
        f = random_bandlimited(man, omega, rng)
        parts = sum(apply_filter(bank, j, f).norm() ** 2 for j in bank.scales)
        worst = max(worst, abs(parts - f.norm() ** 2) / f.norm() ** 2)
    return _record(name, config, {"manifold": man, "omega": omega, "trials": trials,
                                  "max_relative_defect": worst},
                   {"norm_decomposition": worst < NORM_TOL})


def circle_grid_rule(omega=49.0):
    lattice = generate_lattice("circle", math.pi / 2, "grid")
    return compute_weights("circle", lattice, omega)


def cubature_item(config, name):
    circle = circle_grid_rule()
    circle_residual = verify_exactness(circle, 49.0)
    omega = _frame_omega(config)
    sphere = auto_rule("sphere2", omega, tol=config.tol,
                       seed=config.seed)
    sphere_residual = verify_exactness(sphere, omega)
    c1, c2 = sphere.weight_constants()
    measured = {
        "circle_nodes": len(circle), "circle_residual": circle_residual,
        "sphere_omega": omega, "sphere_nodes": len(sphere), "sphere_rho": float(sphere.lattice.rho),
        "sphere_residual": sphere_residual, "sphere_min_weight": float(sphere.weights.min()),
        "sphere_weight_ratio": sphere.weight_ratio(), "sphere_c1": c1, "sphere_c2": c2,
        "sphere_solver": sphere.solver,
    }
    checks = {
        "circle_exact": circle_residual < 1e-12,
        "sphere_exact": sphere_residual < 1e-8,
        "sphere_positive": bool(sphere.weights.min() > 0),
        "sphere_weight_ratio": sphere.weight_ratio() < 10,
    }
    return _record(name, config, measured, checks)


def aliasing_item(config, name):
    rule = circle_grid_rule()
    man = get_manifold("circle")
    entry = next(e for e in man.spectrum(64) if e.label == (8, "cos"))
    values = man.basis(rule.points, 64)[:, entry.m]
    defect = abs(integrate(rule, values) - 0.0)
    return _record(name, config, {"mode": entry.label_str(), "lambda": entry.eigenvalue,
                                  "defect": defect, "expected": math.sqrt(2)},
                   {"aliasing_witness": abs(defect - math.sqrt(2)) < 1e-12})


def out_of_band_fraction(man, f, g) -> float:
    """Relative energy of ``f g`` beyond ``product_band(max band)``; exact quadrature."""
    band = man.product_band(max(f.omega, g.omega))
    pts, w = man.reference_quadrature(man.product_band(band))
    fg = f.evaluate(pts) * g.evaluate(pts)
    total = float(w @ fg ** 2)
    inside = (w * fg) @ man.basis(pts, band)
    return max(total - float(inside @ inside), 0.0) / total


def product_item(config, name, man):
    rng = item_rng(config.seed, name)
    omega = config.omega if config.omega is not None else PRODUCT_OMEGA[man]
    trials = config.trials or 50
    worst = max(out_of_band_fraction(get_manifold(man), random_bandlimited(man, omega, rng),
                                     random_bandlimited(man, omega, rng))
                for _ in range(trials))
    return _record(name, config, {"manifold": man, "omega": omega,
                                  "product_band": get_manifold(man).product_band(omega),
                                  "trials": trials, "max_out_of_band": worst},
                   {"product_property": worst < PRODUCT_TOL})


def frame_checks(frame, rng, trials=100):
    """Parseval defect, frame-operator spectrum and roundtrip error on the covered band."""
    man = frame.manifold
    band = frame.covered_band
    defect = roundtrip = 0.0
    for _ in range(trials):
        f = random_bandlimited(man, band, rng)
        c = analyze(frame, f)
        norm2 = f.norm() ** 2
        defect = max(defect, abs(c.energy() - norm2) / norm2)
        back = synthesize(frame, c, band)
        roundtrip = max(roundtrip, float(np.linalg.norm(back.coeffs - f.coeffs)) / f.norm())
    evals = np.linalg.eigvalsh(frame_operator(frame, band))
    spread = float(np.abs(evals - 1.0).max())
    measured = {"manifold": man.name, "covered_band": band, "j_max": frame.j_max,
                "atoms": frame.atom_count(), "trials": trials, "max_parseval_defect": defect,
                "max_eigenvalue_deviation": spread, "max_roundtrip_error": roundtrip,
                "max_atom_norm": float(atom_norms(frame).max())}
    checks = {"parseval": defect < PARSEVAL_TOL, "frame_operator": spread < PARSEVAL_TOL,
              "roundtrip": roundtrip < PARSEVAL_TOL}
    return measured, checks


def parseval_item(config, name, man):
    omega = _frame_omega(config)
    frame = cached_frame(man, omega, config.a, config.tol, config.seed, config.guard_scales)
    measured, checks = frame_checks(frame, item_rng(config.seed, name), config.trials or 100)
    return _record(name, config, {"omega": omega, **measured}, checks)


def atom_budget(man, j_max) -> int:
    return sum(get_manifold(man).dim_bandlimited(4.0 ** (j + 1)) for j in range(j_max + 1))


def atoms_item(config, name, man):
    omega = _frame_omega(config)
    frame = cached_frame(man, omega, config.a, config.tol, config.seed, config.guard_scales)
    budget = atom_budget(man, frame.j_max)
    total = frame.atom_count()
    rows = [{"j": s.j, "atoms": s.count, "dim": get_manifold(man).dim_bandlimited(s.band)}
            for s in frame.scales]
    return _record(name, config, {"manifold": man, "omega": omega, "atoms": total,
                                  "dim_sum": budget, "ratio": total / budget},
                   {"atom_count": total <= ATOM_FACTOR * budget and total * ATOM_FACTOR >= budget},
                   rows)


def localization_item(config, name):
    omega = _frame_omega(config)
    man = "sphere2" if config.manifold is None else get_manifold(config.manifold).name
    frame = cached_frame(man, omega, config.a, config.tol, config.seed, config.guard_scales)
    scales = (config.j,) if config.j is not None else (2, 3)
    rows, checks = [], {}
    for j in scales:
        prof = localization_profile(frame, j, config.k)
        outside = prof.mass_outside[LOCALIZATION_RADIUS]
        rows.append({"j": j, "k": config.k, "center_value": prof.center_value,
                     **{f"mass_outside_{r}": v for r, v in prof.mass_outside.items()}})
        checks[f"j{j}_mass"] = outside < LOCALIZATION_BOUND
        checks[f"j{j}_peak"] = bool(prof.peak_at_center)
    worst = max(r[f"mass_outside_{LOCALIZATION_RADIUS}"] for r in rows)
    return _record(name, config, {"manifold": man, "omega": omega, "bound": LOCALIZATION_BOUND,
                                  "max_mass_outside": worst}, checks, rows)


def shannon_item(config, name, man):
    rng = item_rng(config.seed, name)
    omegas = (config.Omega,) if config.Omega is not None else SHANNON_OMEGAS
    trials = config.trials or 100
    n = get_manifold(man).n
    rows = []
    for Omega in omegas:
        scheme = build_sampling_scheme(man, Omega, config.a, seed=config.seed)
        grid = get_manifold(man).random_points(rng, config.points)
        worst = 0.0
        for _ in range(trials):
            f = random_bandlimited(man, Omega, rng)
            truth = f.evaluate(grid)
            approx = reconstruct(scheme, f.evaluate(scheme.nodes), grid)
            worst = max(worst, float(np.abs(approx - truth).max() / np.abs(truth).max()))
        rows.append({"Omega": Omega, "nodes": scheme.node_count,
                     "density": scheme.node_count / Omega ** (n / 2), "max_sup_error": worst})
    dens = [r["density"] for r in rows]
    checks = {"reconstruction": max(r["max_sup_error"] for r in rows) < SHANNON_TOL}
    if len(rows) > 1:
        checks["node_density"] = max(dens) / min(dens) <= WEYL_BAND
    return _record(name, config, {"manifold": man, "trials": trials, "test_points": config.points,
                                  "density_spread": max(dens) / min(dens)}, checks, rows)


def fourier_item(config, name, man):
    rng = item_rng(config.seed, name)
    omega = config.omega if config.omega is not None else FOURIER_OMEGA[man]
    M = get_manifold(man)
    rule = auto_rule(man, M.product_band(omega), seed=config.seed)
    trials = config.trials or 20
    entries = M.spectrum(omega)
    worst = 0.0
    for _ in range(trials):
        f = random_bandlimited(man, omega, rng)
        got = fourier_coefficients(rule, f.evaluate(rule.points), entries)
        worst = max(worst, float(np.abs(got - f.coeffs).max()))
    measured = {"manifold": man, "omega": omega, "nodes": len(rule), "trials": trials,
                "max_coefficient_error": worst}
    checks = {"coefficients": worst < FOURIER_TOL}
    if man == "circle":
        value = cos_theta_coefficient(rule)
        measured["cos_theta_coefficient"] = value
        checks["cos_theta"] = abs(value - 1 / math.sqrt(2)) < 1e-12
    return _record(name, config, measured, checks)


def cos_theta_coefficient(rule) -> float:
    man = rule.manifold
    entry = next(e for e in man.spectrum(1) if e.label == (1, "cos"))
    return float(fourier_coefficients(rule, np.cos(rule.points[:, 0]), [entry])[0])


def weyl_item(config, name, man):
    M = get_manifold(man)
    rows = [{"omega": w, "dim": M.dim_bandlimited(w), "ratio": M.dim_bandlimited(w) / w ** (M.n / 2)}
            for w in WEYL_OMEGAS]
    ratios = [r["ratio"] for r in rows]
    spread = max(ratios) / min(ratios)
    return _record(name, config, {"manifold": man, "ratio_spread": spread},
                   {"weyl_band": spread <= WEYL_BAND}, rows)


def lattice_item(config, name, man):
    rho = config.rho if isinstance(config.rho, float) else LATTICE_RHO[man]
    strategy = config.strategy or ("farthest" if man == "sphere2" else "grid")
    lattice = generate_lattice(man, rho, strategy, config.seed)
    rep = verify_lattice(lattice, config.probe_count)
    measured = {"manifold": man, "rho": rho, "strategy": strategy, "points": rep.point_count,
                "min_separation": rep.min_separation, "covering_radius": rep.covering_radius,
                "multiplicity": rep.multiplicity, "cover_multiplicity": rep.cover_multiplicity}
    return _record(name, config, measured, {"separated": rep.separated, "covering": rep.covering})


# -- registry ----------------------------------------------------------------

PER_MANIFOLD = {
    "norm": norm_item, "product": product_item, "shannon": shannon_item,
    "fourier": fourier_item, "weyl": weyl_item, "lattice": lattice_item,
}
SINGLE = {
    "partition": partition_item, "cubature": cubature_item, "aliasing": aliasing_item,
    "localization": localization_item,
}
SPHERE_DEFAULT = {"parseval": parseval_item, "atoms": atoms_item}
SUITES = tuple(sorted((*PER_MANIFOLD, *SINGLE, *SPHERE_DEFAULT)))


def suite_items(config: ExperimentConfig):
    """``(name, thunk)`` pairs for the configured suite ("all" expands to every suite)."""
    suite = config.suite or "all"
    names = SUITES if suite == "all" else (suite,)
    items = []
    for s in names:
        if s in SINGLE:
            items.append((s, functools.partial(SINGLE[s], config, s)))
        elif s in PER_MANIFOLD or s in SPHERE_DEFAULT:
            func = PER_MANIFOLD.get(s) or SPHERE_DEFAULT[s]
            default = ALL_MANIFOLDS if s in PER_MANIFOLD else ("sphere2",)
            for man in _manifolds(config, default):
                name = f"{s}/{man}"
                items.append((name, functools.partial(func, config, name, man)))
        else:
            raise UsageError(f"unknown suite {s!r}; choose from {', '.join(SUITES)} or all")
    return items


def thread_cap() -> int:
    raw = os.environ.get("MFRAMES_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError:
        raise UsageError(f"MFRAMES_THREADS must be an integer, got {raw!r}") from None
    if value < 1:
        raise UsageError("MFRAMES_THREADS must be at least 1")
    return value


def _timed(name, thunk):
    start = time.perf_counter()
    rec = thunk()
    rec.wall_clock = time.perf_counter() - start
    rec.timestamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return rec


def run_suites(config: ExperimentConfig, threads: int | None = None) -> list[ResultRecord]:
    """Run every item of the configured suite; records come back sorted by name."""
    items = suite_items(config)
    workers = min(threads or thread_cap(), len(items))
    if workers <= 1:
        records = [_timed(n, t) for n, t in items]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda it: _timed(*it), items))
    return sorted(records, key=lambda r: r.name)
