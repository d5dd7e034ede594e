"""Compiled target-by-node sums for the regularized layer potentials.

Each target sums over all nodes in node order, so results do not depend on the
thread count. Parallelism is over targets only.
"""
import math
import os

import numba
import numpy as np
from numba import njit, prange

# skip the TBB probe; the installed TBB is too old for numba and only warns
numba.config.THREADING_LAYER = "omp"

from .kernels import FAR_RHO, POLY_TABLE, QUOTIENT_POWER, SERIES_RHO, SERIES_TABLE, SQRT_PI, Smoothing

_TWO_OVER_SQRT_PI = 2.0 / SQRT_PI
_POWERS = np.array([QUOTIENT_POWER[k] for k in Smoothing], dtype=np.int64)


def configure_threads():
    """Cap numba's worker pool by STOKESREG_THREADS when set."""
    cap = os.environ.get("STOKESREG_THREADS")
    if cap:
        numba.set_num_threads(max(1, min(int(cap), numba.config.NUMBA_NUM_THREADS)))


@njit(cache=True)
def _quotient(tag, rho, series, poly, powers):
    # s(rho)/rho^p for rho < FAR_RHO
    if rho < SERIES_RHO:
        r2 = rho * rho
        coef = series[tag]
        acc = 0.0
        for m in range(coef.shape[0] - 1, -1, -1):
            acc = acc * r2 + coef[m]
        return acc
    r2 = rho * rho
    p = poly[tag]
    pol = p[0] + r2 * (p[1] + r2 * (p[2] + r2 * p[3]))
    s = math.erf(rho) - _TWO_OVER_SQRT_PI * rho * pol * math.exp(-r2)
    return s / rho ** powers[tag]


@njit(parallel=True, cache=True)
def _single_layer(targets, nodes, dens, weights, delta, tag1, tag2, series, poly, powers):
    m = targets.shape[0]
    n = nodes.shape[0]
    out = np.zeros((m, 3))
    far2 = (FAR_RHO * delta) ** 2
    d1 = 1.0 / delta
    d3 = d1 * d1 * d1
    for t in prange(m):
        y0 = targets[t, 0]
        y1 = targets[t, 1]
        y2 = targets[t, 2]
        a0 = 0.0
        a1 = 0.0
        a2 = 0.0
        for j in range(n):
            dx = y0 - nodes[j, 0]
            dy = y1 - nodes[j, 1]
            dz = y2 - nodes[j, 2]
            r2 = dx * dx + dy * dy + dz * dz
            f0 = dens[j, 0]
            f1 = dens[j, 1]
            f2 = dens[j, 2]
            if r2 >= far2:
                rinv = 1.0 / math.sqrt(r2)
                k1 = rinv
                k2 = rinv * rinv * rinv
            else:
                rho = math.sqrt(r2) * d1
                k1 = _quotient(tag1, rho, series, poly, powers) * d1
                k2 = _quotient(tag2, rho, series, poly, powers) * d3
            w = weights[j]
            c = (f0 * dx + f1 * dy + f2 * dz) * k2
            a0 += w * (f0 * k1 + c * dx)
            a1 += w * (f1 * k1 + c * dy)
            a2 += w * (f2 * k1 + c * dz)
        out[t, 0] = a0
        out[t, 1] = a1
        out[t, 2] = a2
    return out


@njit(parallel=True, cache=True)
def _double_layer(targets, anchors, nodes, normals, dens, weights, delta, tag3, series, poly, powers):
    m = targets.shape[0]
    n = nodes.shape[0]
    out = np.zeros((m, 3))
    far2 = (FAR_RHO * delta) ** 2
    d1 = 1.0 / delta
    d5 = d1 ** 5
    for t in prange(m):
        y0 = targets[t, 0]
        y1 = targets[t, 1]
        y2 = targets[t, 2]
        q00 = anchors[t, 0]
        q01 = anchors[t, 1]
        q02 = anchors[t, 2]
        a0 = 0.0
        a1 = 0.0
        a2 = 0.0
        for j in range(n):
            dx = y0 - nodes[j, 0]
            dy = y1 - nodes[j, 1]
            dz = y2 - nodes[j, 2]
            r2 = dx * dx + dy * dy + dz * dz
            dq = dx * (dens[j, 0] - q00) + dy * (dens[j, 1] - q01) + dz * (dens[j, 2] - q02)
            dn = dx * normals[j, 0] + dy * normals[j, 1] + dz * normals[j, 2]
            if r2 >= far2:
                rinv = 1.0 / math.sqrt(r2)
                k3 = rinv * rinv
                k3 = k3 * k3 * rinv
            else:
                rho = math.sqrt(r2) * d1
                k3 = _quotient(tag3, rho, series, poly, powers) * d5
            c = weights[j] * dq * dn * k3
            a0 += c * dx
            a1 += c * dy
            a2 += c * dz
        out[t, 0] = a0
        out[t, 1] = a1
        out[t, 2] = a2
    return out


def _as2d(a):
    return np.ascontiguousarray(np.asarray(a, dtype=np.float64).reshape(-1, 3))


def single_layer_sum(targets, nodes, dens, weights, delta, tag1, tag2):
    """Sum_j w_j [f_j s1/r + (f_j.d) d s2/r^3] for every target (no 1/8pi)."""
    return _single_layer(_as2d(targets), _as2d(nodes), _as2d(dens),
                         np.ascontiguousarray(weights, dtype=np.float64), float(delta),
                         int(tag1), int(tag2), SERIES_TABLE, POLY_TABLE, _POWERS)


def double_layer_sum(targets, anchors, nodes, normals, dens, weights, delta, tag3):
    """Sum_j w_j (d.(q_j - q0))(d.n_j) d s3/r^5 for every target (no prefactor)."""
    return _double_layer(_as2d(targets), _as2d(anchors), _as2d(nodes), _as2d(normals),
                         _as2d(dens), np.ascontiguousarray(weights, dtype=np.float64),
                         float(delta), int(tag3), SERIES_TABLE, POLY_TABLE, _POWERS)
