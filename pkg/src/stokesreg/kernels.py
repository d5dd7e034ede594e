"""Stokeslet/stresslet kernels, the erf smoothing families and their moment integrals.

Smoothing factors are written as functions of the scaled distance rho = r/delta.
The plain family (S1, S2, S3) is used near the surface together with the
analytic corrections; the sharp family (S1_SHARP, ...) cancels two further
moments and is used for targets on the surface without corrections.
"""
from dataclasses import dataclass
from enum import IntEnum
from fractions import Fraction
from math import factorial

import numpy as np
from scipy.special import erf, erfc

SQRT_PI = np.sqrt(np.pi)

# beyond this rho every smoothing factor equals 1 to double precision
FAR_RHO = 7.5
# below this rho the quotients s/rho^k are evaluated from their Taylor series
SERIES_RHO = 0.5
SERIES_TERMS = 16


class Smoothing(IntEnum):
    S1 = 0
    S2 = 1
    S3 = 2
    S1_SHARP = 3
    S2_SHARP = 4
    S3_SHARP = 5


# s(rho) = erf(rho) - (2/sqrt(pi)) * rho * P(rho^2) * exp(-rho^2); P as ascending coefficients
_POLY = {
    Smoothing.S1: [],
    Smoothing.S2: [Fraction(1)],
    Smoothing.S3: [Fraction(1), Fraction(2, 3)],
    Smoothing.S1_SHARP: [Fraction(-5, 3), Fraction(2, 3)],
    Smoothing.S2_SHARP: [Fraction(1), Fraction(-14, 3), Fraction(4, 3)],
    Smoothing.S3_SHARP: [Fraction(1), Fraction(2, 3), Fraction(-4), Fraction(8, 9)],
}

# power of r the smoothing factor is divided by inside the kernel
QUOTIENT_POWER = {
    Smoothing.S1: 1, Smoothing.S1_SHARP: 1,
    Smoothing.S2: 3, Smoothing.S2_SHARP: 3,
    Smoothing.S3: 5, Smoothing.S3_SHARP: 5,
}

SHARP = {Smoothing.S1: Smoothing.S1_SHARP, Smoothing.S2: Smoothing.S2_SHARP,
         Smoothing.S3: Smoothing.S3_SHARP}


def _series_coefficients(kind, n_terms):
    """Exact Taylor coefficients c_m with s(rho) = (2/sqrt(pi)) sum_m c_m rho^(2m+1)."""
    poly = _POLY[kind]
    c = [Fraction((-1) ** m, factorial(m) * (2 * m + 1)) for m in range(n_terms)]
    for m in range(n_terms):
        for k, pk in enumerate(poly):
            j = m - k
            if j >= 0:
                c[m] -= pk * Fraction((-1) ** j, factorial(j))
    return c


def quotient_series(kind, n_terms=SERIES_TERMS):
    """Coefficients a_m with s(rho)/rho^p = (2/sqrt(pi)) sum_m a_m rho^(2m).

    The leading coefficients that must vanish for s = O(rho^p) are checked.
    """
    p = QUOTIENT_POWER[kind]
    skip = (p - 1) // 2
    c = _series_coefficients(kind, n_terms + skip)
    if any(ck != 0 for ck in c[:skip]):
        raise ValueError(f"{kind.name} is not O(rho^{p}) at the origin")
    return np.array([float(ck) for ck in c[skip:]]) * (2.0 / SQRT_PI)


SERIES_TABLE = np.array([quotient_series(k) for k in Smoothing])
POLY_TABLE = np.zeros((len(Smoothing), 4))
for _k, _p in _POLY.items():
    POLY_TABLE[_k, :len(_p)] = [float(v) for v in _p]


@dataclass(frozen=True)
class SmoothingKind:
    tag: Smoothing
    delta: float

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")


def smoothing_rho(tag, rho):
    """Smoothing factor s(rho) for an array of scaled distances."""
    tag = Smoothing(tag)
    rho = np.asarray(rho, dtype=float)
    p = POLY_TABLE[tag]
    r2 = rho * rho
    poly = p[0] + r2 * (p[1] + r2 * (p[2] + r2 * p[3]))
    return erf(rho) - (2.0 / SQRT_PI) * rho * poly * np.exp(-r2)


def smoothing(kind, r):
    """s(r/delta) for the tagged smoothing family."""
    if np.any(np.asarray(r) < 0):
        raise ValueError("distance must be non-negative")
    return smoothing_rho(kind.tag, np.asarray(r, dtype=float) / kind.delta)


def smoothing_quotient_rho(tag, rho):
    """s(rho)/rho^p with the removable singularity at rho=0 filled in."""
    tag = Smoothing(tag)
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    p = QUOTIENT_POWER[tag]
    out = np.empty_like(rho)
    small = rho < SERIES_RHO
    if np.any(small):
        r2 = rho[small] ** 2
        out[small] = np.polynomial.polynomial.polyval(r2, SERIES_TABLE[tag])
    big = ~small
    out[big] = smoothing_rho(tag, rho[big]) / rho[big] ** p
    return out


def kernel_factor(kind, r):
    """s(r/delta)/r^p, finite at r=0."""
    p = QUOTIENT_POWER[kind.tag]
    rho = np.asarray(r, dtype=float) / kind.delta
    return smoothing_quotient_rho(kind.tag, rho) / kind.delta ** p


@dataclass(frozen=True)
class MomentIntegrals:
    I1: float
    I2a: float
    I2b: float
    I3a: float
    I3b: float
    scaled_distance: float


def moment_integrals(lam):
    """Closed-form moment integrals of the plain erf family at scaled distance lam.

    All five depend on |lam| only. The Gaussian factor is exp(-lam^2); see
    tests/test_kernels.py for the quadrature check of each defining integral.
    """
    a = np.abs(np.asarray(lam, dtype=float))
    aerfc = a * erfc(a)
    gauss = np.exp(-a * a) / SQRT_PI
    i1 = aerfc - gauss
    return MomentIntegrals(
        I1=i1,
        I2a=-aerfc,
        I2b=2.0 * i1,
        I3a=-2.0 / 3.0 * aerfc,
        I3b=8.0 / 3.0 * (aerfc - gauss),
        scaled_distance=lam,
    )


def stokeslet(y, x):
    """Free-space Stokeslet S_ij(y, x) = delta_ij/r + d_i d_j / r^3, d = y - x."""
    d = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
    r = np.linalg.norm(d, axis=-1)
    if np.any(r == 0):
        raise ValueError("singular evaluation: y == x")
    r = r[..., None, None]
    return np.eye(3) / r + d[..., :, None] * d[..., None, :] / r ** 3


def stresslet_apply(y, x, q, n):
    """T_ijk(y, x) q_j n_k = -6 (d.q)(d.n) d_i / r^5."""
    d = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
    r = np.linalg.norm(d, axis=-1)
    if np.any(r == 0):
        raise ValueError("singular evaluation: y == x")
    dq = np.sum(d * q, axis=-1)
    dn = np.sum(d * n, axis=-1)
    return (-6.0 * dq * dn / r ** 5)[..., None] * d


def stresslet(y, x):
    """Full T_ijk tensor, shape (..., 3, 3, 3)."""
    d = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
    r = np.linalg.norm(d, axis=-1)
    if np.any(r == 0):
        raise ValueError("singular evaluation: y == x")
    t = np.einsum("...i,...j,...k->...ijk", d, d, d)
    return -6.0 * t / r[..., None, None, None] ** 5
