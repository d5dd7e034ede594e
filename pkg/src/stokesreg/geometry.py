"""Implicit surfaces and the local geometry needed by the quadrature and corrections.

Surfaces are level sets phi(x) = 0 with phi > 0 outside. All functions accept a
single point of shape (3,) or a batch of shape (M, 3).
"""
import re
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

COS_THETA_DEFAULT = np.cos(np.deg2rad(70.0))

# in-plane coordinate axes for each dominant axis (cyclic, so the frame is right-handed)
PLANE_AXES = {0: (1, 2), 1: (2, 0), 2: (0, 1)}


class SingularSurfacePoint(ValueError):
    pass


class ClosestPointError(RuntimeError):
    def __init__(self, message, best):
        super().__init__(message)
        self.best = best


class ImplicitSurface:
    """Base class: subclasses provide ``evaluate`` and ``bounding_box``."""

    kind_tag = "implicit"

    def evaluate(self, x):
        raise NotImplementedError

    @property
    def bounding_box(self):
        raise NotImplementedError

    def phi(self, x):
        return self.evaluate(x)[0]

    def grad_phi(self, x):
        return self.evaluate(x)[1]

    def hess_phi(self, x):
        return self.evaluate(x)[2]


@dataclass(frozen=True)
class Ellipsoid(ImplicitSurface):
    semiaxes: tuple = (1.0, 1.0, 1.0)
    center: tuple = (0.0, 0.0, 0.0)

    @property
    def kind_tag(self):
        a, b, c = self.semiaxes
        if a == b == c:
            return "sphere"
        if b == c:
            return "spheroid"
        return "ellipsoid"

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        inv = 1.0 / np.asarray(self.semiaxes, dtype=float) ** 2
        d = x - np.asarray(self.center)
        value = np.sum(d * d * inv, axis=-1) - 1.0
        grad = 2.0 * d * inv
        hess = np.broadcast_to(np.diag(2.0 * inv), x.shape[:-1] + (3, 3)).copy()
        return value, grad, hess

    @property
    def bounding_box(self):
        c = np.asarray(self.center, dtype=float)
        s = np.asarray(self.semiaxes, dtype=float)
        return c - s, c + s


MOLECULE_CENTERS = (
    (np.sqrt(3) / 3, 0.0, -np.sqrt(6) / 12),
    (-np.sqrt(3) / 6, 0.5, -np.sqrt(6) / 12),
    (-np.sqrt(3) / 6, -0.5, -np.sqrt(6) / 12),
    (0.0, 0.0, np.sqrt(6) / 4),
)


@dataclass(frozen=True)
class Molecule(ImplicitSurface):
    """Four-atom surface phi = c - sum_k exp(-|x - x_k|^2 / r^2)."""

    centers: tuple = MOLECULE_CENTERS
    radius: float = 0.5
    level: float = 0.6
    center: tuple = (0.0, 0.0, 0.0)

    kind_tag = "molecule"

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        r2 = self.radius ** 2
        value = np.full(x.shape[:-1], self.level)
        grad = np.zeros(x.shape)
        hess = np.zeros(x.shape[:-1] + (3, 3))
        eye = np.eye(3)
        for ck in self.centers:
            d = x - (np.asarray(ck) + np.asarray(self.center))
            g = np.exp(-np.sum(d * d, axis=-1) / r2)
            value -= g
            grad += (2.0 / r2) * g[..., None] * d
            hess -= g[..., None, None] * (4.0 / r2 ** 2 * d[..., :, None] * d[..., None, :] - 2.0 / r2 * eye)
        return value, grad, hess

    @property
    def bounding_box(self):
        c = np.asarray(self.centers) + np.asarray(self.center)
        return c.min(axis=0) - 1.0, c.max(axis=0) + 1.0


def sphere(radius=1.0, center=(0.0, 0.0, 0.0)):
    return Ellipsoid((radius, radius, radius), tuple(center))


def spheroid(a=1.0, b=0.5, center=(0.0, 0.0, 0.0)):
    return Ellipsoid((a, b, b), tuple(center))


def ellipsoid(a=1.0, b=0.6, c=0.4, center=(0.0, 0.0, 0.0)):
    return Ellipsoid((a, b, c), tuple(center))


def molecule(center=(0.0, 0.0, 0.0)):
    return Molecule(center=tuple(center))


_SPEC_RE = re.compile(r"^\s*(\w+)\s*(?::(.*))?$")


def parse_surface(spec):
    """Build a surface from strings like ``"spheroid:a=1,b=0.5"`` or
    ``"sphere:center=(2,0,0.01)"``."""
    m = _SPEC_RE.match(spec)
    if not m:
        raise ValueError(f"bad surface spec {spec!r}")
    kind, rest = m.group(1).lower(), m.group(2) or ""
    params = {}
    center = (0.0, 0.0, 0.0)
    for key, val in re.findall(r"(\w+)\s*=\s*(\([^)]*\)|[^,]+)", rest):
        if key == "center":
            center = tuple(float(v) for v in val.strip("() ").split(","))
            if len(center) != 3:
                raise ValueError(f"center needs three components in {spec!r}")
        else:
            params[key] = float(val)
    if kind == "sphere":
        s = sphere(params.pop("r", 1.0), center)
    elif kind == "spheroid":
        s = spheroid(params.pop("a", 1.0), params.pop("b", 0.5), center)
    elif kind == "ellipsoid":
        s = ellipsoid(params.pop("a", 1.0), params.pop("b", 0.6), params.pop("c", 0.4), center)
    elif kind == "molecule":
        s = molecule(center)
    else:
        raise ValueError(f"unknown surface kind {kind!r}")
    if params:
        _reject(spec, params)
    return s


def _reject(spec, params):
    raise ValueError(f"unexpected parameters {sorted(params)} in {spec!r}")


def evaluate_surface(surface, x):
    """(phi, grad phi, hess phi) at x."""
    return surface.evaluate(x)


def unit_normal(surface, x):
    _, grad, _ = surface.evaluate(x)
    norm = np.linalg.norm(grad, axis=-1)
    if np.any(norm == 0):
        raise SingularSurfacePoint("singular surface point")
    return grad / norm[..., None]


def _curvature_from(grad, hess):
    gnorm = np.linalg.norm(grad, axis=-1)
    if np.any(gnorm == 0):
        raise SingularSurfacePoint("singular surface point")
    trace = np.trace(hess, axis1=-2, axis2=-1)
    ghg = np.einsum("...i,...ij,...j->...", grad, hess, grad)
    return -0.5 * (trace * gnorm ** 2 - ghg) / gnorm ** 3


def mean_curvature(surface, x):
    """H from 2H = -(phi_ii phi_j^2 - phi_i phi_j phi_ij)/|grad phi|^3.

    With the outward normal this gives H = -1/R on a sphere of radius R, i.e.
    H = -div(n)/2; the same H is used in the corrections and the tension jump.
    """
    _, grad, hess = surface.evaluate(x)
    return _curvature_from(grad, hess)


@dataclass
class SurfaceFrame:
    point: np.ndarray
    normal: np.ndarray
    tangents: np.ndarray       # (..., 2, 3)
    duals: np.ndarray          # (..., 2, 3)
    metric: np.ndarray         # (..., 2, 2)
    sqrt_g: np.ndarray
    mean_curvature: np.ndarray
    dominant_axis: np.ndarray
    slopes: np.ndarray = field(repr=False)       # z_1, z_2
    height_hessian: np.ndarray = field(repr=False)  # z_ij
    side: np.ndarray = field(repr=False)         # sign(n . e_axis)

    @property
    def inverse_metric(self):
        return np.linalg.inv(self.metric)

    @property
    def laplacian_coefficients(self):
        """c_i of the surface Laplacian; equals -side*2H z_i/sqrt(g)."""
        return -self.side[..., None] * 2.0 * self.mean_curvature[..., None] * self.slopes / self.sqrt_g[..., None]


def dominant_axis(normal):
    return np.argmax(np.abs(normal), axis=-1)


def monge_frame(surface, x, axis=None):
    """Monge-patch frame at surface point(s) x over the plane normal to ``axis``.

    ``axis`` defaults to the dominant normal component.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    _, grad, hess = surface.evaluate(x)
    gnorm = np.linalg.norm(grad, axis=-1)
    if np.any(gnorm == 0):
        raise SingularSurfacePoint("singular surface point")
    normal = grad / gnorm[:, None]
    if axis is None:
        axis = dominant_axis(normal)
    axis = np.broadcast_to(np.asarray(axis), (x.shape[0],)).astype(int)
    m = x.shape[0]
    perm = np.array([PLANE_AXES[int(k)] + (int(k),) for k in axis])  # (m, 3) = (p, q, k)
    rows = np.arange(m)[:, None]
    gp = grad[rows, perm]                        # gradient in (p, q, k) order
    hp = hess[rows[:, :, None], perm[:, :, None], perm[:, None, :]]
    phik = gp[:, 2]
    if np.any(np.abs(phik) < 1e-14 * gnorm):
        raise SingularSurfacePoint("normal lies in the coordinate plane")
    z = -gp[:, :2] / phik[:, None]
    zz = -(hp[:, :2, :2] + hp[:, :2, 2:3] * z[:, None, :] + z[:, :, None] * hp[:, 2:3, :2]
           + hp[:, 2, 2][:, None, None] * z[:, :, None] * z[:, None, :]) / phik[:, None, None]
    tangents = np.zeros((m, 2, 3))
    for a in range(2):
        tangents[np.arange(m), a, perm[:, a]] = 1.0
        tangents[np.arange(m), a, perm[:, 2]] = z[:, a]
    metric = np.eye(2) + z[:, :, None] * z[:, None, :]
    g = 1.0 + np.sum(z * z, axis=1)
    ginv = np.linalg.inv(metric)
    duals = np.einsum("mij,mjk->mik", ginv, tangents)
    side = np.sign(normal[np.arange(m), axis])
    frame = SurfaceFrame(
        point=x, normal=normal, tangents=tangents, duals=duals, metric=metric,
        sqrt_g=np.sqrt(g), mean_curvature=_curvature_from(grad, hess), dominant_axis=axis,
        slopes=z, height_hessian=zz, side=side,
    )
    if single:
        frame = SurfaceFrame(**{k: v[0] for k, v in frame.__dict__.items()})
    return frame


@dataclass
class ClosestPointResult:
    foot: np.ndarray
    signed_distance: np.ndarray
    normal_at_foot: np.ndarray
    iterations: int = 0


def closest_point(surface, y, tol=1e-12, max_iter=50):
    """Project y onto the surface: y = foot + b n(foot), phi(foot) = 0.

    Damped Newton on (foot, b), seeded by one gradient-projection step. Valid
    inside a tube around the surface where the projection is unique.
    """
    y = np.asarray(y, dtype=float)
    single = y.ndim == 1
    y = np.atleast_2d(y)
    val, grad, _ = surface.evaluate(y)
    x0 = y - (val / np.sum(grad * grad, axis=-1))[:, None] * grad
    n0 = unit_normal(surface, x0)
    b = np.sum((y - x0) * n0, axis=-1)
    scale = np.maximum(1.0, np.linalg.norm(y, axis=-1))

    def residual(x0, b):
        v, g, h = surface.evaluate(x0)
        gn = np.linalg.norm(g, axis=-1)
        n = g / gn[:, None]
        f = np.empty((x0.shape[0], 4))
        f[:, :3] = y - x0 - b[:, None] * n
        f[:, 3] = v / gn
        return f, v, g, h, gn, n

    f, v, g, h, gn, n = residual(x0, b)
    res = np.linalg.norm(f, axis=1)
    it = 0
    active = res > tol * scale
    while np.any(active):
        if it >= max_iter:
            best = ClosestPointResult(x0, b, n, it)
            raise ClosestPointError(
                f"closest point did not converge for {int(active.sum())} point(s)", best)
        it += 1
        idx = np.nonzero(active)[0]
        ga, ha, gna, na, ba = g[idx], h[idx], gn[idx], n[idx], b[idx]
        proj = np.eye(3) - na[:, :, None] * na[:, None, :]
        dn = np.einsum("mij,mjk->mik", proj, ha) / gna[:, None, None]
        jac = np.zeros((idx.size, 4, 4))
        jac[:, :3, :3] = -np.eye(3) - ba[:, None, None] * dn
        jac[:, :3, 3] = -na
        jac[:, 3, :3] = ga / gna[:, None] - (v[idx] / gna ** 3)[:, None] * np.einsum("mij,mj->mi", ha, ga)
        step = np.linalg.solve(jac, -f[idx][:, :, None])[:, :, 0]
        lam = np.ones(idx.size)
        # damping: halve the step where the residual grows
        for _ in range(30):
            x_try = x0[idx] + lam[:, None] * step[:, :3]
            b_try = b[idx] + lam * step[:, 3]
            vt, gt, _ = surface.evaluate(x_try)
            gnt = np.linalg.norm(gt, axis=-1)
            ft = np.concatenate([y[idx] - x_try - b_try[:, None] * gt / gnt[:, None],
                                 (vt / gnt)[:, None]], axis=1)
            worse = np.linalg.norm(ft, axis=1) > res[idx] * (1 - 1e-4 * lam)
            worse &= res[idx] > 10 * tol * scale[idx]
            if not np.any(worse):
                break
            lam[worse] *= 0.5
        x0[idx] = x_try
        b[idx] = b_try
        f, v, g, h, gn, n = residual(x0, b)
        res = np.linalg.norm(f, axis=1)
        active = res > tol * scale
    # report b from the converged foot so that y = foot + b n exactly up to tol
    b = np.sum((y - x0) * n, axis=-1)
    out = ClosestPointResult(x0, b, n, it)
    if single:
        out = ClosestPointResult(x0[0], b[0], n[0], it)
    return out


class Region(IntEnum):
    INSIDE = -1
    ON = 0
    OUTSIDE = 1


CHI = {Region.INSIDE: 8 * np.pi, Region.ON: 4 * np.pi, Region.OUTSIDE: 0.0}


def region_classify(surface, y, tol=1e-9):
    """Classify by the sign of phi; |phi| <= tol |grad phi| counts as on the surface.

    Returns (region, chi) with chi = 8pi, 4pi, 0 for inside, on, outside.
    """
    val, grad, _ = surface.evaluate(y)
    val = np.asarray(val)
    gnorm = np.linalg.norm(grad, axis=-1)
    region = np.where(np.abs(val) <= tol * gnorm, Region.ON,
                      np.where(val < 0, Region.INSIDE, Region.OUTSIDE)).astype(int)
    chi = np.select([region == Region.INSIDE, region == Region.ON], [8 * np.pi, 4 * np.pi], 0.0)
    if region.ndim == 0:
        return Region(int(region)), float(chi)
    return region, chi
