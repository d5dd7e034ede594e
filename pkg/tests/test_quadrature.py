import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stokesreg import ellipsoid, generate_nodes, integrate, sphere
from stokesreg.quadrature import THETA_DEFAULT, bump, partition_weights

from conftest import nodes


def test_bump_support():
    assert bump(0.0) == 1.0
    assert bump(1.0) == 0.0 and bump(1.5) == 0.0
    assert 0 < bump(0.99) < 1e-20


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=3, max_size=3))
def test_partition_sums_to_one(v):
    n = np.array(v)
    if np.linalg.norm(n) < 1e-3:
        return
    n /= np.linalg.norm(n)
    psi = partition_weights(n)
    assert abs(psi.sum() - 1.0) <= 1e-15
    assert np.all(psi[np.abs(n) <= np.cos(THETA_DEFAULT)] == 0)


def test_sphere_counts_and_area(sphere16):
    assert len(sphere16) == 4302
    # the partition of unity gives rapid (super-algebraic) convergence: 1.1e-5 relative here
    assert integrate(sphere16, np.ones(len(sphere16))) == pytest.approx(4 * np.pi, rel=2e-5)


def test_nodes_lie_on_surface_and_grid(sphere16):
    q = sphere16
    assert np.allclose(np.linalg.norm(q.positions, axis=1), 1.0, atol=1e-13)
    for axis in range(3):
        pts = q.positions[q.axis_set == axis]
        others = np.delete(pts, axis, axis=1) / q.h
        assert np.allclose(others, np.round(others), atol=1e-12)


def test_integrate_polynomial_moments(sphere32):
    x2 = integrate(sphere32, lambda x, n: x[:, 0] ** 2)
    assert x2 == pytest.approx(4 * np.pi / 3, rel=1e-6)
    assert np.allclose(integrate(sphere32, lambda x, n: n), 0.0, atol=1e-12)


def test_integrate_rejects_bad_shape(sphere16):
    with pytest.raises(ValueError):
        integrate(sphere16, np.ones(3))


def test_ellipsoid_divergence_theorem():
    # int x.n dA = 3 * volume
    vol = 4 / 3 * np.pi * 1.0 * 0.6 * 0.4
    errs = [abs(integrate(nodes("ellipsoid", h), lambda x, n: np.sum(x * n, axis=1)) - 3 * vol)
            for h in (1 / 16, 1 / 32)]
    # measured 4.6e-3 and 1.2e-4
    assert errs[1] < 2e-4 and errs[0] / errs[1] > 16


def test_coarse_nodes_are_fine_nodes():
    from stokesreg.interface import match_nodes
    coarse, fine = generate_nodes(sphere(), 1 / 8), nodes("sphere", 1 / 16)
    idx = match_nodes(coarse, fine)
    assert np.allclose(fine.positions[idx], coarse.positions)


def test_deterministic_order():
    a, b = generate_nodes(ellipsoid(), 1 / 8), generate_nodes(ellipsoid(), 1 / 8)
    assert np.array_equal(a.positions, b.positions)
