import numpy as np
import pytest

from stokesreg import generate_nodes, sphere
from stokesreg.interface import (InterfaceProblem, NonConvergenceError, QuadraticTension, match_nodes,
                                 richardson_error, solve_interface, surface_tension_force)


@pytest.fixture(scope="module")
def sphere8():
    return generate_nodes(sphere(), 1 / 8)


def test_quadratic_tension():
    g = QuadraticTension(2.0)
    x = np.array([[2.0, 1.0, 0.0], [3.0, 0.0, 0.0]])
    assert np.allclose(g(x), [1.0, 2.0])
    assert np.allclose(g.gradient(x), [[0, 0, 0], [2, 0, 0]])


def test_constant_tension_force_is_normal(sphere8):
    # gamma = 1 on the unit sphere: [f] = 2 H n = -2 n
    q = sphere8
    f = surface_tension_force(q, lambda x: np.ones(len(x)))
    assert np.allclose(f, -2 * q.normals, atol=1e-12)


def test_fitted_gradient_matches_analytic(sphere8):
    q = sphere8
    g = QuadraticTension(0.0)
    fitted = surface_tension_force(q, lambda x: g(x))
    assert np.abs(fitted - surface_tension_force(q, g)).max() < 5e-2


def test_problem_validation(sphere8):
    p = InterfaceProblem([sphere8, sphere8], viscosities=[3.0])
    assert p.ratios == [3.0, 3.0]
    with pytest.raises(ValueError):
        InterfaceProblem([sphere8], viscosities=[1.0, 2.0])
    with pytest.raises(ValueError):
        InterfaceProblem([sphere8], mu0=0.0)


def test_matched_viscosity_converges_in_one_step(sphere8):
    sol = solve_interface(InterfaceProblem([sphere8], viscosities=[1.0]))
    assert sol.iterations == 1


def test_sphere_solve_iterations_and_symmetry(sphere8):
    sol = solve_interface(InterfaceProblem([sphere8], viscosities=[2.0]))
    assert 6 <= sol.iterations <= 10
    assert sol.trace[-1] < 1e-10
    # the trace contracts geometrically
    assert all(b < a for a, b in zip(sol.trace, sol.trace[1:]))
    u = sol.velocities[0]
    mirror = sphere8.positions * [1, -1, 1]
    idx = match_nodes(sphere8.subset(np.ones(len(sphere8), bool)), sphere8)
    assert np.array_equal(idx, np.arange(len(sphere8)))
    # gamma depends on x1 only, so u_2 is odd in x2
    from scipy.spatial import cKDTree
    _, j = cKDTree(sphere8.positions).query(mirror)
    assert np.allclose(u[j, 1], -u[:, 1], atol=1e-6)


def test_non_convergence_raises(sphere8):
    with pytest.raises(NonConvergenceError) as info:
        solve_interface(InterfaceProblem([sphere8], viscosities=[2.0], max_iter=2))
    assert len(info.value.trace) == 2


def test_richardson_error_examples(sphere8):
    u = np.random.default_rng(0).normal(size=(len(sphere8), 3))
    assert richardson_error(u, u) == (0.0, 0.0)
    emax, erms = richardson_error(u, u + [3.0, 4.0, 0.0])
    assert emax == pytest.approx(5.0) and erms == pytest.approx(5.0)


def test_richardson_restricts_fine_to_coarse(sphere8, sphere16):
    fine_u = sphere16.positions.copy()
    assert richardson_error(sphere8.positions, fine_u, sphere8, sphere16) == (0.0, 0.0)


def test_unknown_mode(sphere8):
    with pytest.raises(ValueError):
        solve_interface(InterfaceProblem([sphere8]), mode="fast")
