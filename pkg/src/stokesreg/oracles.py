"""Closed-form reference solutions: translating spheroid, point Stokeslet, stresslet identity."""
from dataclasses import dataclass

import numpy as np

from .kernels import stokeslet

SPHERE_E = 1e-6


@dataclass(frozen=True)
class SpheroidFlow:
    """Prolate spheroid x1^2/a^2 + (x2^2+x3^2)/b^2 = 1 translating with U = e1 (mu = 1)."""
    a: float = 1.0
    b: float = 0.5

    def __post_init__(self):
        if not (self.a >= self.b > 0):
            raise ValueError("need a >= b > 0")

    @property
    def c(self):
        return np.sqrt(self.a ** 2 - self.b ** 2)

    @property
    def e(self):
        return self.c / self.a

    @property
    def is_sphere(self):
        return self.e < SPHERE_E

    @property
    def D_e(self):
        e = self.e
        return (1 + e * e) * np.log((1 + e) / (1 - e)) - 2 * e

    @property
    def alpha(self):
        return self.e ** 2 / self.D_e

    @property
    def beta(self):
        e = self.e
        return self.alpha * (1 - e * e) / (2 * e * e)


def _sign(s):
    return np.where(s >= 0, 1.0, -1.0)


def spheroid_velocity(flow: SpheroidFlow, x):
    """Exterior velocity of the translating spheroid (classical closed form).

    Near-axis cancellations are removed algebraically: with sigma = sign(s),
    s/R - sigma = -r^2 / (R (s + sigma R)).
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    a, b = flow.a, flow.b
    inside = x[:, 0] ** 2 / a ** 2 + (x[:, 1] ** 2 + x[:, 2] ** 2) / b ** 2 < 1 - 1e-12
    if np.any(inside):
        raise ValueError("spheroid_velocity is defined outside the body only")
    if flow.is_sphere:
        out = _sphere_velocity(a, x)
        return out[0] if single else out
    c = flow.c
    x1 = x[:, 0]
    r2 = x[:, 1] ** 2 + x[:, 2] ** 2
    s1, s2 = x1 + c, x1 - c
    R1 = np.sqrt(s1 ** 2 + r2)
    R2 = np.sqrt(s2 ** 2 + r2)
    g1, g2 = _sign(s1), _sign(s2)
    # B2 = (1/r^2)(s1/R1 - s2/R2)
    B2 = 1.0 / (R2 * (s2 + g2 * R2)) - 1.0 / (R1 * (s1 + g1 * R1))
    split = g1 != g2
    B2 = np.where(split, B2 + (g1 - g2) / np.where(split, r2, 1.0), B2)
    # B1 = log((R2 - s2)/(R1 - s1)); R - s = r^2/(R + s) when s > 0
    both_pos = (s1 > 0) & (s2 > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        A1 = np.where(s1 > 0, r2 / (R1 + s1), R1 - s1)
        A2 = np.where(s2 > 0, r2 / (R2 + s2), R2 - s2)
        B1 = np.where(both_pos, np.log((R1 + s1) / (R2 + s2)), np.log(A2 / A1))
    al, be = flow.alpha, flow.beta
    # grad B3: d/dx1 = B1 - c/R1 - c/R2; d/dx_t = x_t (1/R2 - 1/R1 - x1 B2)
    gradB3 = np.empty_like(x)
    gradB3[:, 0] = B1 - c / R1 - c / R2
    lat = 1.0 / R2 - 1.0 / R1 - x1 * B2
    gradB3[:, 1] = x[:, 1] * lat
    gradB3[:, 2] = x[:, 2] * lat
    u = 2 * be * gradB3
    u[:, 0] += 2 * al * B1 - al * r2 * B2
    radial = al * (1.0 / R2 - 1.0 / R1)
    u[:, 1] += radial * x[:, 1]
    u[:, 2] += radial * x[:, 2]
    return u[0] if single else u


def _sphere_velocity(a, x, U=np.array([1.0, 0.0, 0.0])):
    r = np.linalg.norm(x, axis=1)[:, None]
    ux = (x @ U)[:, None]
    return (0.75 * a * (U / r + ux * x / r ** 3)
            + 0.25 * a ** 3 * (U / r ** 3 - 3 * ux * x / r ** 5))


def spheroid_traction(flow: SpheroidFlow, x):
    """Traction (f1, 0, 0) as printed in the reference formula.

    This is the force the body exerts on itself from the fluid side, so the
    single layer reproducing the flow uses its negative (see the experiments).
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    out = np.zeros_like(x)
    if flow.is_sphere:
        out[:, 0] = -1.5 / flow.a
    else:
        e, a, b = flow.e, flow.a, flow.b
        out[:, 0] = -4 * a * e ** 3 / (b * flow.D_e * np.sqrt(a * a - (e * x[:, 0]) ** 2))
    return out


def point_stokeslet(y0, bvec, y):
    """Velocity (1/8pi) S(y, y0) b and stress (1/8pi) T_ijk b_j at y."""
    y = np.asarray(y, dtype=float)
    yh = y - np.asarray(y0, dtype=float)
    bvec = np.asarray(bvec, dtype=float)
    u = np.einsum("...ij,j->...i", stokeslet(y, y0), bvec) / (8 * np.pi)
    r = np.linalg.norm(yh, axis=-1)[..., None, None]
    yb = (yh @ bvec)[..., None, None]
    sigma = -6.0 / (8 * np.pi) * yb * yh[..., :, None] * yh[..., None, :] / r ** 5
    return u, sigma


def dl_identity_rhs(x0, chi):
    """chi * (0, -x3, x2): the stresslet identity with the rotational density, chi in {1, 1/2, 0}."""
    x0 = np.asarray(x0, dtype=float)
    chi = np.asarray(chi, dtype=float)
    out = np.zeros_like(x0)
    out[..., 1] = -x0[..., 2]
    out[..., 2] = x0[..., 1]
    return chi[..., None] * out if chi.ndim else chi * out


def rotation_density(x):
    """The density (0, -x3, x2) of the stresslet identity."""
    x = np.asarray(x, dtype=float)
    return dl_identity_rhs(x, 1.0)
