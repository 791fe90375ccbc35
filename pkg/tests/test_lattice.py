import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mframes.errors import DuplicatePoints, StrategyUnsupported, UsageError
from mframes.lattice import Lattice, generate_lattice, grid_size, verify_lattice
from mframes.manifolds import get_manifold


def test_circle_grid_example():
    lat = generate_lattice("circle", math.pi / 2, "grid")
    assert len(lat) == 8
    assert np.allclose(np.sort(lat.points[:, 0]), np.arange(8) * math.pi / 4)
    rep = verify_lattice(lat)
    assert rep.min_separation == pytest.approx(math.pi / 4, abs=1e-12)
    assert rep.covering_radius == pytest.approx(math.pi / 8, abs=1e-3)
    assert rep.covering_radius <= math.pi / 8 + 1e-12
    # open rho-balls around a midpoint hold 4 nodes; rho/2-balls hold 2
    assert rep.multiplicity == 4
    assert rep.cover_multiplicity == 2
    assert rep.ok


def test_torus_grid_example():
    lat = generate_lattice("torus2", math.pi / 2, "grid")
    assert len(lat) == 64
    rep = verify_lattice(lat)
    assert rep.min_separation == pytest.approx(math.pi / 4, abs=1e-12)
    assert rep.covering_radius == pytest.approx(math.pi * math.sqrt(2) / 8, abs=5e-3)
    assert rep.covering_radius <= math.pi / 4


def test_sphere_farthest_example():
    lat = generate_lattice("sphere2", 0.5, "farthest", seed=7)
    rep = verify_lattice(lat)
    assert rep.separated and rep.covering
    assert rep.min_separation >= 0.25


def test_single_sphere_point_covers():
    lat = Lattice(get_manifold("sphere2"), 10.0, np.array([[0.0, 0.0, 1.0]]))
    rep = verify_lattice(lat)
    # the farthest probe sits within probe resolution of the antipode
    assert rep.covering_radius == pytest.approx(math.pi, abs=0.1)
    assert rep.covering_radius <= math.pi
    assert rep.covering and rep.min_separation == math.inf
    dense = verify_lattice(lat, probe_count=1 << 16)
    assert dense.covering_radius == pytest.approx(math.pi, abs=0.02)


def test_duplicate_points():
    pts = np.array([[0.1], [0.1], [2.0]])
    with pytest.raises(DuplicatePoints):
        verify_lattice(Lattice(get_manifold("circle"), 1.0, pts))


def test_grid_needs_flat_manifold():
    with pytest.raises(StrategyUnsupported):
        generate_lattice("sphere2", 0.5, "grid")


@pytest.mark.parametrize("rho", [0.0, -1.0, 4.0])
def test_rho_range(rho):
    with pytest.raises(UsageError):
        generate_lattice("circle", rho, "grid")


def test_unknown_strategy():
    with pytest.raises(UsageError):
        generate_lattice("circle", 0.5, "random")


def test_too_few_probes():
    lat = generate_lattice("circle", 0.5, "grid")
    with pytest.raises(UsageError):
        verify_lattice(lat, probe_count=len(lat))


@pytest.mark.parametrize("name,strategy", [("sphere2", "farthest"), ("torus2", "farthest"),
                                           ("circle", "farthest")])
def test_deterministic(name, strategy):
    a = generate_lattice(name, 0.4, strategy, seed=3)
    b = generate_lattice(name, 0.4, strategy, seed=3)
    assert np.array_equal(a.points, b.points)


def test_seed_changes_farthest_lattice():
    a = generate_lattice("sphere2", 0.4, "farthest", seed=1)
    b = generate_lattice("sphere2", 0.4, "farthest", seed=2)
    assert a.points.shape != b.points.shape or not np.allclose(a.points, b.points)


@pytest.mark.parametrize("name,a,strategy", [("circle", 1.0, "grid"), ("torus2", 1.0, "grid"),
                                             ("sphere2", 1.0, "farthest"), ("torus2", 1.0, "farthest")])
def test_cardinality_scaling(name, a, strategy):
    man = get_manifold(name)
    scaled = [len(generate_lattice(name, a * 2.0 ** -j, strategy)) * (a * 2.0 ** -j) ** man.n
              for j in range(4)]
    assert max(scaled) / min(scaled) <= 2


def test_grid_size_keeps_separation():
    for rho in (0.05, 0.3, 1.0, math.pi / 2):
        n = grid_size(rho)
        assert n % 2 == 0
        assert 2 * math.pi / n >= rho / 2 - 1e-12


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 3.0), st.sampled_from(["circle", "torus2"]))
def test_grid_lattices_always_verify(rho, name):
    if name == "torus2":
        rho = max(rho, 0.2)
    rep = verify_lattice(generate_lattice(name, rho, "grid"))
    assert rep.ok


@settings(max_examples=10, deadline=None)
@given(st.floats(0.3, 1.5), st.integers(0, 100))
def test_farthest_sphere_lattices_verify(rho, seed):
    rep = verify_lattice(generate_lattice("sphere2", rho, "farthest", seed))
    assert rep.ok
