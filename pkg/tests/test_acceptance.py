"""Acceptance gate: one test per criterion, each at its stated tolerance."""
import math

import numpy as np

from mframes.cubature import auto_rule, verify_exactness
from mframes.filterbank import FilterBank, apply_filter, eval_filter
from mframes.frames import analyze, frame_operator, localization_profile, synthesize
from mframes.lattice import generate_lattice
from mframes.manifolds import get_manifold, random_bandlimited
from mframes.records import ExperimentConfig
from mframes.sampling import build_sampling_scheme, fourier_coefficients, reconstruct
from mframes.suites import (
    LOCALIZATION_BOUND, atom_budget, cached_frame, circle_grid_rule, cos_theta_coefficient,
    out_of_band_fraction, run_suites,
)

MANIFOLDS = ("circle", "torus2", "sphere2")


def test_criterion_01_partition_of_unity(criterion):
    j_max = 5
    s = np.linspace(0, 2.0 ** (2 * j_max), 10_000)
    defect = float(np.abs(sum(eval_filter(j, s) ** 2 for j in range(j_max + 1)) - 1).max())
    assert criterion(1, "partition of unity", defect < 1e-12, f"max defect {defect:.2e} < 1e-12")


def test_criterion_02_norm_decomposition(criterion):
    rng = np.random.default_rng(2)
    bank = FilterBank(5)
    worst = {}
    for name in MANIFOLDS:
        worst[name] = 0.0
        for _ in range(100):
            f = random_bandlimited(name, bank.covered_band, rng)
            parts = sum(apply_filter(bank, j, f).norm() ** 2 for j in bank.scales)
            worst[name] = max(worst[name], abs(parts - f.norm() ** 2) / f.norm() ** 2)
    ok = max(worst.values()) < 1e-10
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    assert criterion(2, "norm decomposition", ok, f"relative defect {detail} < 1e-10")


def test_criterion_03_cubature_exactness(criterion):
    circle = circle_grid_rule()
    # closed form: uniform weights 1/8 on the 8th roots of unity
    closed = np.allclose(circle.weights, 1 / 8, atol=1e-15)
    c_res = verify_exactness(circle, 49)
    sphere = auto_rule("sphere2", 72.0)
    s_res = verify_exactness(sphere, 72)
    ratio = sphere.weight_ratio()
    ok = closed and c_res < 1e-12 and s_res < 1e-8 and sphere.weights.min() > 0 and ratio < 10
    detail = (f"circle residual {c_res:.1e}; sphere {len(sphere)} nodes, residual {s_res:.1e}, "
              f"min weight {sphere.weights.min():.2e}, max/min {ratio:.2f}")
    assert criterion(3, "cubature exactness", ok, detail)


def test_criterion_04_aliasing_witness(criterion):
    rule = circle_grid_rule()
    man = get_manifold("circle")
    entry = next(e for e in man.spectrum(64) if e.label == (8, "cos"))
    defect = abs(float(rule.weights @ man.basis(rule.points, 64)[:, entry.m]))
    ok = abs(defect - math.sqrt(2)) < 1e-12
    assert criterion(4, "aliasing witness", ok, f"defect on cos 8t mode {defect:.15f} = sqrt 2")


def test_criterion_05_product_property(criterion):
    rng = np.random.default_rng(5)
    bands = {"circle": 16.0, "torus2": 8.0, "sphere2": 12.0}
    worst = {}
    for name, omega in bands.items():
        man = get_manifold(name)
        worst[name] = max(out_of_band_fraction(man, random_bandlimited(man, omega, rng),
                                               random_bandlimited(man, omega, rng))
                          for _ in range(50))
    ok = max(worst.values()) < 1e-10
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    assert criterion(5, "product property", ok, f"out-of-band energy {detail} < 1e-10")


def test_criterion_06_parseval_frame(criterion, sphere_frame):
    rng = np.random.default_rng(6)
    man = sphere_frame.manifold
    defect = roundtrip = 0.0
    for _ in range(100):
        f = random_bandlimited(man, 72, rng)
        c = analyze(sphere_frame, f)
        defect = max(defect, abs(c.energy() - f.norm() ** 2) / f.norm() ** 2)
        back = synthesize(sphere_frame, c, 72)
        roundtrip = max(roundtrip, float(np.linalg.norm(back.coeffs - f.coeffs)) / f.norm())
    evals = np.linalg.eigvalsh(frame_operator(sphere_frame, 72))
    spread = float(np.abs(evals - 1).max())
    ok = defect < 1e-8 and spread < 1e-8 and roundtrip < 1e-8
    detail = (f"Parseval defect {defect:.1e}, eigenvalues within {spread:.1e} of 1, "
              f"roundtrip {roundtrip:.1e} (all < 1e-8)")
    assert criterion(6, "Parseval frame", ok, detail)


def test_criterion_07_localization(criterion, sphere_frame):
    results = {j: localization_profile(sphere_frame, j, 0) for j in (2, 3)}
    mass = {j: p.mass_outside[10] for j, p in results.items()}
    peak = all(p.peak_at_center for p in results.values())
    ok = peak and max(mass.values()) < LOCALIZATION_BOUND < 0.1
    detail = ", ".join(f"j={j} mass {m:.4f}" for j, m in mass.items())
    assert criterion(7, "localization", ok,
                     f"{detail} < frozen bound {LOCALIZATION_BOUND}; peak at center {peak}")


def test_criterion_08_shannon_sampling(criterion):
    rng = np.random.default_rng(8)
    errors, spreads = {}, {}
    for name in MANIFOLDS:
        man = get_manifold(name)
        dens = []
        errors[name] = 0.0
        for Omega in (4.0, 16.0, 64.0):
            scheme = build_sampling_scheme(man, Omega)
            grid = man.random_points(rng, 256)
            dens.append(scheme.node_count / Omega ** (man.n / 2))
            for _ in range(100):
                f = random_bandlimited(man, Omega, rng)
                truth = f.evaluate(grid)
                err = np.abs(reconstruct(scheme, f.evaluate(scheme.nodes), grid) - truth).max()
                errors[name] = max(errors[name], float(err / np.abs(truth).max()))
        spreads[name] = max(dens) / min(dens)
    ok = max(errors.values()) < 1e-8 and max(spreads.values()) <= 2
    detail = ", ".join(f"{k} err {errors[k]:.1e} density spread {spreads[k]:.2f}" for k in MANIFOLDS)
    assert criterion(8, "Shannon sampling", ok, detail)


def test_criterion_09_discrete_fourier(criterion):
    rng = np.random.default_rng(9)
    bands = {"circle": 16.0, "torus2": 8.0, "sphere2": 20.0}
    worst = 0.0
    for name, omega in bands.items():
        man = get_manifold(name)
        rule = auto_rule(man, man.product_band(omega))
        entries = man.spectrum(omega)
        for _ in range(20):
            f = random_bandlimited(man, omega, rng)
            got = fourier_coefficients(rule, f.evaluate(rule.points), entries)
            worst = max(worst, float(np.abs(got - f.coeffs).max()))
    cos = cos_theta_coefficient(circle_grid_rule())
    ok = worst < 1e-10 and abs(cos - 1 / math.sqrt(2)) < 1e-12
    assert criterion(9, "discrete Fourier coefficients", ok,
                     f"max coefficient error {worst:.1e}; cos theta coefficient {cos:.15f}")


def test_criterion_10_weyl_consistency(criterion, sphere_frame):
    spreads = {}
    for name in MANIFOLDS:
        man = get_manifold(name)
        ratios = [man.dim_bandlimited(w) / w ** (man.n / 2) for w in (4, 16, 64, 256)]
        spreads[name] = max(ratios) / min(ratios)
    weyl_ok = max(spreads.values()) <= 2
    total = sphere_frame.atom_count()
    budget = atom_budget("sphere2", sphere_frame.j_max)
    atoms_ok = budget / 4 <= total <= 4 * budget
    detail = (", ".join(f"{k} spread {v:.2f}" for k, v in spreads.items())
              + f"; sphere atoms {total} vs sum of dims {budget} (ratio {total / budget:.2f}, limit 4)")
    assert criterion(10, "Weyl consistency", weyl_ok and atoms_ok, detail)


def test_criterion_11_determinism(criterion):
    def once():
        cached_frame.cache_clear()
        cfg = ExperimentConfig(suite="all", seed=11, trials=5)
        recs = [r.comparable() for r in run_suites(cfg)]
        lat = generate_lattice("sphere2", 0.3, "farthest", seed=11).points
        return recs, lat

    (a, la), (b, lb) = once(), once()
    ok = a == b and np.array_equal(la, lb)
    assert criterion(11, "determinism", ok, f"{len(a)} records identical across two runs: {a == b}")
