"""Surface derivatives of node-sampled fields via local polynomial fits.

A field near a surface point x0 is fitted by weighted least squares as a
bivariate polynomial in the two in-plane coordinates of x0's dominant chart.
The fit is linear in the nodal values, so for each x0 we keep a small operator
``D`` mapping stencil values to (f, f_1, f_2, f_11, f_12, f_22) at x0.
"""
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .geometry import PLANE_AXES, monge_frame

DEGREE_DEFAULT = 4
RADIUS_FACTOR = 4.0
WIDTH_FACTOR = 2.0
_MIN_EXTRA = 4
_COND_LIMIT = 1e12


class FitError(RuntimeError):
    pass


def _monomials(degree):
    return [(i, k - i) for k in range(degree + 1) for i in range(k, -1, -1)]


def _design(u, v, degree):
    return np.stack([u ** a * v ** b for a, b in _monomials(degree)], axis=-1)


def _derivative_rows(degree, h):
    """Rows picking value and derivatives at the origin from the scaled coefficients."""
    mono = _monomials(degree)
    rows = np.zeros((6, len(mono)))
    picks = [((0, 0), 1.0), ((1, 0), 1 / h), ((0, 1), 1 / h),
             ((2, 0), 2 / h ** 2), ((1, 1), 1 / h ** 2), ((0, 2), 2 / h ** 2)]
    for r, (m, scale) in enumerate(picks):
        if m in mono:
            rows[r, mono.index(m)] = scale
    return rows


@dataclass
class LocalPatchFit:
    center: np.ndarray
    axis: int
    coefficients: np.ndarray   # (n_monomials, ...) in coordinates scaled by h
    stencil: np.ndarray
    degree: int
    h: float

    def jet(self):
        """(value, d1, d2, d11, d12, d22) at the center."""
        return np.tensordot(_derivative_rows(self.degree, self.h), self.coefficients, axes=(1, 0))

    def value(self):
        return self.jet()[0]

    def gradient(self):
        return self.jet()[1:3]

    def hessian(self):
        j = self.jet()
        return np.array([[j[3], j[4]], [j[4], j[5]]])


class PatchFitter:
    """Builds local fit operators on a quadrature set."""

    def __init__(self, qset, degree=DEGREE_DEFAULT, radius_factor=RADIUS_FACTOR,
                 width_factor=WIDTH_FACTOR):
        self.qset = qset
        self.degree = degree
        self.h = qset.h
        self.radius = radius_factor * qset.h
        self.width = width_factor * qset.h
        self.tree = cKDTree(qset.positions)
        self.n_coef = len(_monomials(degree))
        self._rows = _derivative_rows(degree, self.h)

    def _stencil(self, x0, axis, radius):
        # a 3D ball: an in-plane disc can run past the chart edge on steep patches
        idx = np.asarray(self.tree.query_ball_point(x0, radius), dtype=int)
        p, q = PLANE_AXES[int(axis)]
        d = self.qset.positions[idx] - x0
        return idx, d[:, p], d[:, q], np.sum(d * d, axis=1)

    def _solve(self, x0, axis, normal):
        radius = self.radius
        for attempt in range(2):
            idx, u, v, r2 = self._stencil(x0, axis, radius)
            # keep the sheet through x0
            same_sheet = self.qset.normals[idx] @ normal > 0.5
            idx, u, v, r2 = idx[same_sheet], u[same_sheet], v[same_sheet], r2[same_sheet]
            if idx.size >= self.n_coef + _MIN_EXTRA:
                w = np.exp(-r2 / self.width ** 2)
                sw = np.sqrt(w)
                a = _design(u / self.h, v / self.h, self.degree) * sw[:, None]
                s = np.linalg.svd(a, compute_uv=False)
                if s[-1] > 0 and s[0] / s[-1] < _COND_LIMIT:
                    pinv = np.linalg.pinv(a) * sw[None, :]
                    return idx, pinv
            radius *= 1.5
        raise FitError(f"rank-deficient local fit at {x0}")

    def fit(self, x0, values, axis=None, normal=None):
        """LocalPatchFit of nodal ``values`` around surface point x0."""
        x0 = np.asarray(x0, dtype=float)
        if normal is None or axis is None:
            frame = monge_frame(self.qset.surface, x0)
            axis, normal = int(frame.dominant_axis), frame.normal
        idx, pinv = self._solve(x0, axis, normal)
        coef = np.tensordot(pinv, np.asarray(values)[idx], axes=(1, 0))
        return LocalPatchFit(x0, int(axis), coef, idx, self.degree, self.h)

    def operators(self, points):
        """Padded jet operators for many surface points.

        Returns (frames, stencil indices (M, K), D (M, 6, K)); padded columns of D
        are zero and their indices point at node 0.
        """
        points = np.atleast_2d(np.asarray(points, dtype=float))
        frames = monge_frame(self.qset.surface, points)
        ops = []
        for i in range(points.shape[0]):
            idx, pinv = self._solve(points[i], frames.dominant_axis[i], frames.normal[i])
            ops.append((idx, self._rows @ pinv))
        kmax = max(idx.size for idx, _ in ops) if ops else 0
        stencil = np.zeros((len(ops), kmax), dtype=int)
        dmat = np.zeros((len(ops), 6, kmax))
        for i, (idx, op) in enumerate(ops):
            stencil[i, :idx.size] = idx
            dmat[i, :, :idx.size] = op
        return frames, stencil, dmat


def fit_local_patch(qset, x0, field, degree=DEGREE_DEFAULT):
    values = field.values if hasattr(field, "values") else field
    return PatchFitter(qset, degree).fit(x0, values)


def dual_derivatives(frame):
    """d T_i^* / d alpha_j as an array (..., j, i, 3) from the Monge height derivatives."""
    z = frame.slopes
    zz = frame.height_hessian
    ginv = np.linalg.inv(frame.metric)
    axis = np.atleast_1d(frame.dominant_axis)
    shape = z.shape[:-1]
    e_axis = np.zeros(shape + (3,))
    e_axis.reshape(-1, 3)[np.arange(axis.size), axis.ravel()] = 1.0
    # d_j T_k = z_kj e_axis
    dT = zz[..., :, :, None] * e_axis[..., None, None, :]          # (..., k, j, 3)
    dT = np.swapaxes(dT, -3, -2)                                     # (..., j, k, 3)
    # d_j g_kl = z_kj z_l + z_k z_lj, stored as dg[..., j, k, l]
    dg = np.empty(shape + (2, 2, 2))
    for j in range(2):
        for k in range(2):
            for l in range(2):
                dg[..., j, k, l] = zz[..., k, j] * z[..., l] + z[..., k] * zz[..., l, j]
    dginv = -np.einsum("...ik,...jkl,...lm->...jim", ginv, dg, ginv)
    out = (np.einsum("...jik,...kx->...jix", dginv, frame.tangents)
           + np.einsum("...ik,...jkx->...jix", ginv, dT))
    return out


@dataclass
class SurfaceOperators:
    gradient: np.ndarray      # surface gradient of each component, (..., 3) or (..., c, 3)
    divergence: np.ndarray    # surface divergence (vector fields only)
    laplacian: np.ndarray     # componentwise surface Laplacian


def laplacian_from_jet(frame, jet):
    """sum g^ij f_ij + sum c_i f_i from a jet (6, ...) at the frame's point."""
    ginv = np.linalg.inv(frame.metric)
    c = frame.laplacian_coefficients
    f1, f2, f11, f12, f22 = jet[1], jet[2], jet[3], jet[4], jet[5]
    return (ginv[0, 0] * f11 + 2 * ginv[0, 1] * f12 + ginv[1, 1] * f22
            + c[0] * f1 + c[1] * f2)


def gradient_from_jet(frame, jet):
    """f_1 T_1* + f_2 T_2*; jet components may carry trailing dimensions."""
    return np.multiply.outer(jet[1], frame.duals[0]) + np.multiply.outer(jet[2], frame.duals[1])


def surface_operators(qset, x0, values, fitter=None):
    """Surface gradient, divergence and Laplacian of nodal ``values`` at x0.

    Scalars give (gradient (3,), None, laplacian). Vectors (N, 3) give the
    gradient of each component (3, 3), the divergence of the field, and the
    componentwise Laplacian (3,).
    """
    fitter = fitter or PatchFitter(qset)
    frame = monge_frame(qset.surface, x0)
    axis, normal = int(frame.dominant_axis), frame.normal
    values = np.asarray(values, dtype=float)
    jet = fitter.fit(x0, values, axis, normal).jet()
    grad = gradient_from_jet(frame, jet)
    lap = laplacian_from_jet(frame, jet)
    div = None
    if values.ndim == 2:
        n = qset.normals
        vtan = values - np.sum(values * n, axis=1)[:, None] * n
        tjet = fitter.fit(x0, vtan, axis, normal).jet()
        div = tjet[1] @ frame.duals[0] + tjet[2] @ frame.duals[1]
    return SurfaceOperators(grad, div, lap)
