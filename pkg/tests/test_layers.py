import numpy as np
import pytest

from stokesreg.geometry import unit_normal
from stokesreg.kernels import Smoothing
from stokesreg.layers import (DensityField, LayerConfig, LayerEvaluator, TargetSet, correction_double,
                              correction_single, double_layer, single_layer)
from stokesreg.oracles import rotation_density


def test_config_defaults_and_validation():
    on, near = LayerConfig("on"), LayerConfig("near")
    assert (on.delta_ratio, on.corrections, on.regularization) == (3.0, False, "sharp")
    assert (near.delta_ratio, near.corrections, near.regularization) == (2.0, True, "plain")
    assert on.tags() == (Smoothing.S1_SHARP, Smoothing.S2_SHARP, Smoothing.S3_SHARP)
    assert near.delta(0.1) == pytest.approx(0.2)
    for bad in [dict(mode="x"), dict(mode="on", regularization="x"), dict(mode="on", delta_ratio=0)]:
        with pytest.raises(ValueError):
            LayerConfig(**bad)


def test_translating_sphere_on_surface(sphere16):
    # f = (3/2, 0, 0) on the unit sphere gives u = (1, 0, 0) on the surface
    q = sphere16
    u = single_layer(q, DensityField(np.tile([1.5, 0.0, 0.0], (len(q), 1))), TargetSet.on_surface(q))
    assert np.abs(u - [1.0, 0.0, 0.0]).max() < 2e-4


def test_zero_density_gives_zero(sphere16):
    q = sphere16
    tg = TargetSet.near(q.surface, 1.03 * q.positions[:50])
    zero = DensityField(np.zeros((len(q), 3)))
    assert np.all(single_layer(q, zero, tg, LayerConfig("near")) == 0)
    assert np.all(double_layer(q, zero, tg, LayerConfig("near")) == 0)


def test_constant_density_double_layer_is_exact(sphere16):
    # after subtraction the integrand vanishes identically; only chi q0 / 8pi remains
    q = sphere16
    c = np.array([0.3, -1.0, 2.0])
    dens = DensityField(np.tile(c, (len(q), 1)), lambda x: np.tile(c, (len(x), 1)))
    pts = np.concatenate([0.98 * q.positions[:20], 1.02 * q.positions[:20]])
    tg = TargetSet.near(q.surface, pts)
    w = double_layer(q, dens, tg, LayerConfig("near"))
    expected = (tg.chi / (8 * np.pi))[:, None] * c
    assert np.abs(w - expected).max() < 1e-14
    w_on = double_layer(q, dens, TargetSet.on_surface(q), LayerConfig("on"))
    assert np.abs(w_on - 0.5 * c).max() < 1e-14


def test_corrections_vanish_for_zero_inputs():
    n = np.array([[0.0, 0.0, 1.0]])
    z = np.zeros((1, 3))
    assert np.all(correction_single(np.array([0.4]), 0.1, n, np.array([-1.0]), z, z, np.zeros(1)) == 0)
    assert np.all(correction_double(np.array([0.4]), 0.1, n, np.array([-1.0]), z, np.zeros(1), z, z, z) == 0)


def test_double_correction_vanishes_on_surface():
    # I3a(0) = 0 and the other terms carry a factor lambda
    rng = np.random.default_rng(0)
    args = [rng.normal(size=(4, 3)) for _ in range(5)]
    out = correction_double(np.zeros(4), 0.1, args[0], np.full(4, -1.0), args[1], rng.normal(size=4),
                            args[2], args[3], args[4])
    assert np.all(out == 0)


def test_corrections_decay_far_from_surface():
    n = np.array([[0.0, 0.0, 1.0]])
    f = np.array([[1.0, 2.0, 3.0]])
    out = correction_single(np.array([8.0]), 0.1, n, np.array([-1.0]), f, f, np.ones(1))
    assert np.abs(out).max() < 1e-28


def test_single_layer_correction_improves_near_values(sphere16):
    q = sphere16
    f = DensityField(np.tile([1.5, 0.0, 0.0], (len(q), 1)), lambda x: np.tile([1.5, 0.0, 0.0], (len(x), 1)))
    pts = q.positions[::40] * (1 + 0.5 * q.h)
    tg = TargetSet.near(q.surface, pts)
    r = np.linalg.norm(pts, axis=1)[:, None]
    ux = pts[:, :1]
    exact = 0.75 * (np.array([1.0, 0, 0]) / r + ux * pts / r ** 3) + 0.25 * (
        np.array([1.0, 0, 0]) / r ** 3 - 3 * ux * pts / r ** 5)
    corr = single_layer(q, f, tg, LayerConfig("near"))
    plain = single_layer(q, f, tg, LayerConfig("near", corrections=False))
    assert np.abs(corr - exact).max() < np.abs(plain - exact).max() / 20


def test_rotation_identity_near_ellipsoid(ellipsoid16):
    q = ellipsoid16
    pts = q.positions[::30]
    n = unit_normal(q.surface, pts)
    tg = TargetSet.near(q.surface, np.concatenate([pts + 0.03 * n, pts - 0.03 * n]))
    w = double_layer(q, DensityField.from_function(q, rotation_density), tg, LayerConfig("near"))
    expected = (tg.chi / (8 * np.pi))[:, None] * rotation_density(tg.points)
    assert np.abs(w - expected).max() < 5e-3


def test_far_targets_use_plain_sum(sphere16):
    q = sphere16
    tg = TargetSet.near(q.surface, np.array([[3.0, 0.0, 0.0], [0.0, 0.0, 0.0]]))
    assert np.all(np.isinf(tg.signed_distance)) and np.all(np.isnan(tg.foot))
    w = double_layer(q, DensityField(np.tile([1.0, 0, 0], (len(q), 1))), tg, LayerConfig("near"))
    # unsubtracted: exterior 0, interior q, up to quadrature error (1.1e-5 measured)
    assert np.allclose(w, [[0, 0, 0], [1, 0, 0]], atol=5e-5)


def test_evaluator_is_deterministic(sphere16):
    q = sphere16
    tg = TargetSet.on_surface(q)
    f = DensityField(np.random.default_rng(2).normal(size=(len(q), 3)))
    ev = LayerEvaluator(q, LayerConfig("on"))
    assert np.array_equal(ev.single_layer(f, tg), ev.single_layer(f, tg))
