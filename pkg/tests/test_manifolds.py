import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial.legendre import leggauss
from scipy.special import sph_harm_y

from mframes import (
    CIRCLE, SPHERE2, TORUS2, EigenEntry, SpectralCoefficients, dim_bandlimited,
    eval_eigenfunction, geodesic_distance, get_manifold, product_band, spectrum,
)
from mframes.errors import NegativeArgument, UsageError


def sphere_points(theta, phi):
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    return np.column_stack([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi),
                            np.cos(theta)])


# -- spectra -------------------------------------------------------------------

def test_circle_spectrum_band_4():
    lams = [e.eigenvalue for e in spectrum("circle", 4)]
    assert lams == [0, 1, 1, 4, 4]


def test_sphere_spectrum_band_6():
    entries = spectrum("sphere2", 6)
    assert len(entries) == 9
    assert sorted({e.label[0] for e in entries}) == [0, 1, 2]


def test_torus_spectrum_band_2():
    lams = [e.eigenvalue for e in spectrum("torus2", 2)]
    assert lams == [0] + [1] * 4 + [2] * 4


def test_torus_spectrum_matches_lattice_count():
    # integer pairs with k1^2 + k2^2 <= omega, counted directly
    for omega in (3, 10, 50):
        r = math.isqrt(omega)
        count = sum(1 for a in range(-r, r + 1) for b in range(-r, r + 1) if a * a + b * b <= omega)
        assert dim_bandlimited("torus2", omega) == count


@pytest.mark.parametrize("name,omega,dim", [("circle", 49, 15), ("sphere2", 72, 81),
                                            ("circle", 0, 1), ("sphere2", 0, 1), ("torus2", 0, 1)])
def test_dim_bandlimited(name, omega, dim):
    assert dim_bandlimited(name, omega) == dim


def test_spectrum_is_prefix_stable():
    for man in (CIRCLE, TORUS2, SPHERE2):
        small, big = man.spectrum(20), man.spectrum(90)
        assert big[: len(small)] == small
        assert [e.m for e in big] == list(range(len(big)))


def test_negative_band_rejected():
    with pytest.raises(NegativeArgument):
        spectrum("circle", -1)


def test_unknown_manifold():
    with pytest.raises(UsageError):
        get_manifold("klein bottle")


def test_entry_json():
    e = spectrum("sphere2", 2)[2]
    assert e.to_json() == {"m": 2, "lambda": 2.0, "label": "l=1,mu=0"}


# -- eigenfunction values --------------------------------------------------------

def test_constant_mode_is_one(rng):
    for man in (CIRCLE, TORUS2, SPHERE2):
        pts = man.random_points(rng, 5)
        entry = man.spectrum(0)[0]
        assert np.allclose(eval_eigenfunction(man, entry, pts), 1.0)


def test_circle_cos_at_zero():
    entry = next(e for e in spectrum("circle", 1) if e.label == (1, "cos"))
    assert eval_eigenfunction("circle", entry, 0.0) == pytest.approx(math.sqrt(2), abs=1e-15)


def test_sphere_l1_mu0_at_north_pole():
    entry = next(e for e in spectrum("sphere2", 2) if e.label == (1, 0))
    assert eval_eigenfunction("sphere2", entry, [0, 0, 1]) == pytest.approx(math.sqrt(3), abs=1e-14)


def test_entry_manifold_mismatch():
    entry = spectrum("circle", 1)[1]
    with pytest.raises(UsageError):
        eval_eigenfunction("sphere2", entry, [0, 0, 1])


def test_sphere_basis_matches_scipy_harmonics(rng):
    pts = SPHERE2.random_points(rng, 40)
    theta = np.arccos(np.clip(pts[:, 2], -1, 1))
    phi = np.arctan2(pts[:, 1], pts[:, 0])
    ours = SPHERE2.basis(pts, 12 * 13)
    for e in SPHERE2.spectrum(12 * 13):
        l, mu = e.label
        y = sph_harm_y(l, abs(mu), theta, phi)
        ref = y.real if mu == 0 else math.sqrt(2) * (y.real if mu > 0 else y.imag)
        ref = math.sqrt(4 * math.pi) * ref
        col = ours[:, e.m]
        # real harmonics are fixed only up to sign
        sign = np.sign(col @ ref)
        assert np.allclose(sign * col, ref, atol=1e-11), e.label_str()


def _quadrature(man, order):
    """Independent product Gauss/trapezoid rule with normalized weights."""
    t = 2 * np.pi * np.arange(order) / order
    if man.name == "circle":
        return t[:, None], np.full(order, 1 / order)
    if man.name == "torus2":
        a, b = np.meshgrid(t, t, indexing="ij")
        return np.column_stack([a.ravel(), b.ravel()]), np.full(order * order, 1 / order ** 2)
    x, w = leggauss(order)
    th, ph = np.meshgrid(np.arccos(x), t, indexing="ij")
    ww = np.outer(w / 2, np.full(order, 1 / order)).ravel()
    return sphere_points(th.ravel(), ph.ravel()), ww


@pytest.mark.parametrize("man,omega", [(CIRCLE, 100), (TORUS2, 40), (SPHERE2, 110)])
def test_orthonormality(man, omega):
    pts, w = _quadrature(man, 64)
    B = man.basis(pts, omega)
    gram = B.T @ (w[:, None] * B)
    assert np.abs(gram - np.eye(B.shape[1])).max() < 1e-12


def test_eigen_relation_finite_differences(rng):
    h = 1e-4
    # circle: -f'' = k^2 f
    t = rng.uniform(0, 2 * np.pi, 7)
    for e in CIRCLE.spectrum(25):
        f = lambda s: CIRCLE.basis(s[:, None], 25)[:, e.m]
        lap = -(f(t + h) - 2 * f(t) + f(t - h)) / h ** 2
        assert np.allclose(lap, e.eigenvalue * f(t), atol=1e-5 * (1 + e.eigenvalue))
    # torus: -(d_1^2 + d_2^2) f = |k|^2 f
    p = TORUS2.random_points(rng, 7)
    for e in TORUS2.spectrum(13):
        f = lambda q: TORUS2.basis(q, 13)[:, e.m]
        lap = 0.0
        for axis in range(2):
            dh = np.zeros(2)
            dh[axis] = h
            lap = lap - (f(p + dh) - 2 * f(p) + f(p - dh)) / h ** 2
        assert np.allclose(lap, e.eigenvalue * f(p), atol=1e-5 * (1 + e.eigenvalue))
    # sphere: Laplace-Beltrami in polar coordinates
    th = rng.uniform(0.3, 2.8, 7)
    ph = rng.uniform(0, 2 * np.pi, 7)
    for e in SPHERE2.spectrum(30):
        f = lambda a, b: SPHERE2.basis(sphere_points(a, b), 30)[:, e.m]
        d_th = (np.sin(th + h / 2) * (f(th + h, ph) - f(th, ph))
                - np.sin(th - h / 2) * (f(th, ph) - f(th - h, ph))) / (h * h * np.sin(th))
        d_ph = (f(th, ph + h) - 2 * f(th, ph) + f(th, ph - h)) / (h * h * np.sin(th) ** 2)
        assert np.allclose(-(d_th + d_ph), e.eigenvalue * f(th, ph), atol=1e-4 * (1 + e.eigenvalue))


# -- distances ------------------------------------------------------------------

def test_distance_examples():
    assert geodesic_distance("circle", 0.0, math.pi) == pytest.approx(math.pi)
    assert geodesic_distance("sphere2", [0, 0, 1], [0, 0, -1]) == pytest.approx(math.pi)
    assert geodesic_distance("torus2", [0, 0], [1.5 * math.pi, 0]) == pytest.approx(math.pi / 2)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(["circle", "torus2", "sphere2"]), st.integers(0, 2 ** 32 - 1))
def test_distance_is_a_metric(name, seed):
    man = get_manifold(name)
    p, q, r = man.random_points(np.random.default_rng(seed), 3)
    d = lambda a, b: float(man.distance(a[None, :], b[None, :])[0])
    assert d(p, p) == pytest.approx(0.0, abs=1e-7)
    assert d(p, q) == pytest.approx(d(q, p), abs=1e-12)
    assert d(p, r) <= d(p, q) + d(q, r) + 1e-12
    assert 0 <= d(p, q) <= man.diameter + 1e-12


# -- product band and Weyl --------------------------------------------------------

@pytest.mark.parametrize("name,omega,band", [("circle", 4, 16), ("sphere2", 2, 6),
                                             ("circle", 0, 0), ("torus2", 0, 0), ("sphere2", 0, 0)])
def test_product_band_examples(name, omega, band):
    assert product_band(name, omega) == band


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(["circle", "torus2", "sphere2"]), st.floats(0.5, 30), st.integers(0, 1000))
def test_products_stay_in_product_band(name, omega, seed):
    from mframes.suites import out_of_band_fraction
    from mframes import random_bandlimited

    man = get_manifold(name)
    rng = np.random.default_rng(seed)
    f, g = random_bandlimited(man, omega, rng), random_bandlimited(man, omega, rng)
    assert out_of_band_fraction(man, f, g) < 1e-10


def test_product_band_is_tight_on_circle():
    # cos(2t)^2 has a cos(4t) component: band 16 is needed, 15 is not enough
    f = SpectralCoefficients("circle", 4, [0, 0, 0, 1, 0])
    pts, w = CIRCLE.reference_quadrature(64)
    sq = f.evaluate(pts) ** 2
    inside = (w * sq) @ CIRCLE.basis(pts, 15)
    assert float(w @ sq ** 2) - inside @ inside > 0.1


def test_product_band_never_exceeds_universal_bound():
    for man in (CIRCLE, TORUS2, SPHERE2):
        for omega in (1, 5, 72, 300):
            assert man.product_band(omega) <= 4 * man.d * omega


@pytest.mark.parametrize("man", [CIRCLE, TORUS2, SPHERE2])
def test_weyl_ratio_band(man):
    ratios = [man.dim_bandlimited(w) / w ** (man.n / 2) for w in (4, 16, 64, 256)]
    assert max(ratios) / min(ratios) <= 2


# -- spectral coefficients ------------------------------------------------------------

def test_coefficients_length_checked():
    with pytest.raises(UsageError):
        SpectralCoefficients("circle", 4, np.zeros(3))


def test_with_band_pads_and_truncates(rng):
    from mframes import random_bandlimited

    f = random_bandlimited("sphere2", 6, rng)
    up = f.with_band(20)
    assert up.coeffs.size == 25 and np.array_equal(up.coeffs[:9], f.coeffs)
    assert np.array_equal(up.with_band(6).coeffs, f.coeffs)
    pts = SPHERE2.random_points(rng, 10)
    assert np.allclose(up.evaluate(pts), f.evaluate(pts))


def test_entry_is_frozen():
    e = EigenEntry("circle", 0, 0.0, (0, "cos"))
    with pytest.raises(Exception):
        e.m = 3
