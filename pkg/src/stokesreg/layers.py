"""Regularized single and double layer potentials with near-surface corrections.

Normalization:

    SL[f](y) = (1/8pi) sum_x S(y, x) f(x) w(x)
    DL[q](y) = (1/8pi) sum_x T(y, x) (q(x) - q(x0)) n(x) w(x) + (chi(y)/8pi) q(x0)

where x0 is the closest surface point to y and chi = 8pi, 4pi, 0 inside, on,
outside. Targets on the surface use the sharp smoothing and no corrections;
targets near the surface use the plain smoothing plus the analytic corrections.
"""
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .calculus import PatchFitter, dual_derivatives
from .geometry import Region, closest_point, region_classify
from .kernels import SHARP, Smoothing, moment_integrals
from .summation import configure_threads, double_layer_sum, single_layer_sum

EIGHT_PI = 8.0 * np.pi
TUBE_DEFAULT = 0.25


@dataclass
class LayerConfig:
    """How a layer integral is evaluated.

    mode: "on" (sharp smoothing, delta = 3h) or "near" (plain smoothing plus
    corrections, delta = 2h). Fields left as None take the mode's default.
    """
    mode: str = "on"
    delta_ratio: Optional[float] = None
    corrections: Optional[bool] = None
    regularization: Optional[str] = None
    subtraction: bool = True
    correction_cutoff: float = 6.0

    def __post_init__(self):
        if self.mode not in ("on", "near"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.delta_ratio is None:
            self.delta_ratio = 3.0 if self.mode == "on" else 2.0
        if self.corrections is None:
            self.corrections = self.mode == "near"
        if self.regularization is None:
            self.regularization = "sharp" if self.mode == "on" else "plain"
        if self.regularization not in ("plain", "sharp"):
            raise ValueError(f"unknown regularization {self.regularization!r}")
        if not self.delta_ratio > 0:
            raise ValueError("delta_ratio must be positive")

    def delta(self, h):
        return self.delta_ratio * h

    def tags(self):
        plain = (Smoothing.S1, Smoothing.S2, Smoothing.S3)
        if self.regularization == "sharp":
            return tuple(SHARP[t] for t in plain)
        return plain


@dataclass
class DensityField:
    """Nodal density values, optionally with the ambient function they came from."""
    values: np.ndarray
    function: Optional[Callable] = None

    @classmethod
    def from_function(cls, qset, func):
        return cls(np.asarray(func(qset.positions), dtype=float), func)

    def at(self, x):
        return None if self.function is None else np.asarray(self.function(x), dtype=float)


@dataclass
class TargetSet:
    """Evaluation points together with their closest surface points."""
    points: np.ndarray
    foot: np.ndarray
    signed_distance: np.ndarray
    normal: np.ndarray
    region: np.ndarray
    chi: np.ndarray
    node_index: np.ndarray = field(default=None)

    def __len__(self):
        return self.points.shape[0]

    @classmethod
    def on_surface(cls, qset):
        m = len(qset)
        return cls(qset.positions.copy(), qset.positions.copy(), np.zeros(m), qset.normals.copy(),
                   np.full(m, int(Region.ON)), np.full(m, 4 * np.pi), np.arange(m))

    @classmethod
    def near(cls, surface, points, tube=TUBE_DEFAULT):
        """Targets off a surface; the side comes from the sign of phi.

        Points farther than ``tube`` (estimated by |phi|/|grad phi|) get no foot
        point and signed distance +-inf; they are evaluated without subtraction
        or corrections, where the integrand is smooth anyway.
        """
        points = np.atleast_2d(np.asarray(points, dtype=float))
        m = points.shape[0]
        region, chi = region_classify(surface, points)
        region, chi = np.atleast_1d(region), np.atleast_1d(chi)
        val, grad, _ = surface.evaluate(points)
        close = np.abs(val) <= tube * np.linalg.norm(grad, axis=1)
        foot = np.full((m, 3), np.nan)
        normal = np.full((m, 3), np.nan)
        b = np.where(region < 0, -np.inf, np.inf)
        if np.any(close):
            cp = closest_point(surface, points[close])
            foot[close], normal[close], b[close] = cp.foot, cp.normal_at_foot, cp.signed_distance
        return cls(points, foot, b, normal, region, chi, np.full(m, -1))

    @classmethod
    def on_other_surface(cls, surface, points):
        """Points lying on a different surface, evaluated against ``surface``."""
        return cls.near(surface, points)


def _vec_laplacian(frames, jet):
    """Componentwise surface Laplacian from jets (M, 6, c)."""
    ginv = np.linalg.inv(frames.metric)
    c = frames.laplacian_coefficients
    return (ginv[:, 0, 0, None] * jet[:, 3] + 2 * ginv[:, 0, 1, None] * jet[:, 4]
            + ginv[:, 1, 1, None] * jet[:, 5] + c[:, 0, None] * jet[:, 1] + c[:, 1, None] * jet[:, 2])


def _vec_gradient(frames, jet_row1, jet_row2):
    return jet_row1[..., None] * frames.duals[:, 0] + jet_row2[..., None] * frames.duals[:, 1]


def _divergence(frames, jet):
    """Surface divergence of a tangential field from its jets (M, 6, 3)."""
    return np.einsum("mc,mc->m", jet[:, 1], frames.duals[:, 0]) + np.einsum(
        "mc,mc->m", jet[:, 2], frames.duals[:, 1])


def _grad_divergence(frames, jet):
    """Surface gradient of the surface divergence of a tangential field."""
    dd = dual_derivatives(frames)                       # (M, j, i, 3)
    second = [[jet[:, 3], jet[:, 4]], [jet[:, 4], jet[:, 5]]]
    out = np.zeros((jet.shape[0], 3))
    for j in range(2):
        dj = np.zeros(jet.shape[0])
        for i in range(2):
            dj += np.einsum("mc,mc->m", second[i][j], frames.duals[:, i])
            dj += np.einsum("mc,mc->m", jet[:, 1 + i], dd[:, j, i])
        out += dj[:, None] * frames.duals[:, j]
    return out


def correction_single(lam, delta, normal, H, f0, grad_fn, div_f):
    """Near-surface correction to the single layer at signed scaled distance lam.

    f0: density at the closest point; grad_fn: surface gradient of f.n;
    div_f: surface divergence of f. Arrays are per target.
    """
    lam = np.asarray(lam, dtype=float)
    mi = moment_integrals(lam)
    b = lam * delta
    fn = np.sum(f0 * normal, axis=-1)
    fnl = fn[..., None] * normal
    ftan = f0 - fnl
    curv = (1.0 + H * b)[..., None]
    main = curv * (2 * (mi.I1 + mi.I2a)[..., None] * fnl + (2 * mi.I1 + mi.I2b)[..., None] * ftan)
    deriv = (delta * lam * mi.I2b)[..., None] * (grad_fn + div_f[..., None] * normal)
    return -delta / 8.0 * (main - deriv)


def correction_double(lam, delta, normal, H, grad_qn, div_q, lap_qnl, lap_sum_tan, grad_div_q):
    """Near-surface correction to the double layer for the subtracted density q - q(x0).

    grad_qn: surface gradient of q.n; div_q: surface divergence; lap_qnl: surface
    Laplacian of (q.n)n; lap_sum_tan: tangential part of the Laplacian of q + (q.n)n;
    grad_div_q: surface gradient of the surface divergence.
    """
    lam = np.asarray(lam, dtype=float)
    mi = moment_integrals(lam)
    b = lam * delta
    first = (-0.75 * delta * (1.0 + b * H) * mi.I3a)[..., None] * (grad_qn + div_q[..., None] * normal)
    second = (0.375 * delta ** 2 * lam * mi.I3a)[..., None] * lap_qnl
    third = (3.0 / 32.0 * delta ** 2 * lam * mi.I3b)[..., None] * (
        lap_sum_tan + 2.0 * grad_div_q - 4.0 * H[..., None] * grad_qn)
    return first + second + third


@dataclass
class _JetOperators:
    frames: object
    stencil: np.ndarray
    dmat: np.ndarray
    rows: np.ndarray      # target rows these operators belong to


class LayerEvaluator:
    """Layer potentials over one quadrature set, caching per-target fit operators."""

    def __init__(self, qset, config: LayerConfig = None, fitter: PatchFitter = None):
        configure_threads()
        self.qset = qset
        self.config = config or LayerConfig()
        self.delta = self.config.delta(qset.h)
        self.fitter = fitter or PatchFitter(qset)
        self._cache = {}

    def _operators(self, targets, rows):
        key = (id(targets), rows.tobytes())
        hit = self._cache.get(key)
        if hit is None:
            frames, stencil, dmat = self.fitter.operators(targets.foot[rows])
            hit = (targets, _JetOperators(frames, stencil, dmat, rows))
            self._cache[key] = hit
        return hit[1]

    def _jets(self, ops, nodal):
        """Jets (M, 6, ...) of nodal values restricted to each stencil."""
        return np.einsum("msk,mk...->ms...", ops.dmat, nodal[ops.stencil])

    def _correction_rows(self, targets):
        if not self.config.corrections:
            return np.zeros(0, dtype=int)
        lam = targets.signed_distance / self.delta
        return np.nonzero(np.abs(lam) <= self.config.correction_cutoff)[0]

    def single_layer(self, f, targets: TargetSet):
        """u(y) = (1/8pi) sum S f w, plus corrections in near mode."""
        f = f if isinstance(f, DensityField) else DensityField(np.asarray(f, dtype=float))
        t1, t2, _ = self.config.tags()
        u = single_layer_sum(targets.points, self.qset.positions, f.values, self.qset.weights,
                             self.delta, t1, t2) / EIGHT_PI
        rows = self._correction_rows(targets)
        if rows.size:
            ops = self._operators(targets, rows)
            nn = self.qset.normals
            fn_nodes = np.sum(f.values * nn, axis=1)
            ft_nodes = f.values - fn_nodes[:, None] * nn
            jet_fn = self._jets(ops, fn_nodes)
            jet_ft = self._jets(ops, ft_nodes)
            f0 = f.at(targets.foot[rows])
            if f0 is None:
                f0 = self._jets(ops, f.values)[:, 0]
            fr = ops.frames
            u[rows] += correction_single(
                targets.signed_distance[rows] / self.delta, self.delta, fr.normal,
                fr.mean_curvature, f0, _vec_gradient(fr, jet_fn[:, 1], jet_fn[:, 2]),
                _divergence(fr, jet_ft))
        return u

    def _anchors(self, q, targets):
        """q(x0) per target; zero for far targets, which are summed unsubtracted."""
        anchors = np.zeros((len(targets), 3))
        on_node = targets.node_index >= 0 if targets.node_index is not None else np.zeros(len(targets), bool)
        anchors[on_node] = q.values[targets.node_index[on_node]]
        near = np.isfinite(targets.signed_distance)
        rest = np.nonzero(~on_node & near)[0]
        if rest.size:
            exact = q.at(targets.foot[rest])
            if exact is None:
                ops = self._operators(targets, rest)
                exact = self._jets(ops, q.values)[:, 0]
            anchors[rest] = exact
        return anchors

    def double_layer(self, q, targets: TargetSet):
        """w(y) = (1/8pi) sum T (q - q0) n w + chi q0/8pi, plus corrections in near mode."""
        q = q if isinstance(q, DensityField) else DensityField(np.asarray(q, dtype=float))
        _, _, t3 = self.config.tags()
        if self.config.subtraction:
            anchors = self._anchors(q, targets)
        else:
            anchors = np.zeros((len(targets), 3))
        w = -6.0 * double_layer_sum(targets.points, anchors, self.qset.positions, self.qset.normals,
                                    q.values, self.qset.weights, self.delta, t3) / EIGHT_PI
        if self.config.subtraction:
            chi = np.where(np.isfinite(targets.signed_distance), targets.chi, 0.0)
            w += chi[:, None] * anchors / EIGHT_PI
        rows = self._correction_rows(targets)
        if rows.size and self.config.subtraction:
            ops = self._operators(targets, rows)
            fr = ops.frames
            nn = self.qset.normals[ops.stencil]                        # (M, K, 3)
            qt = q.values[ops.stencil] - anchors[rows][:, None, :]
            qn = np.sum(qt * nn, axis=2)
            qnl = qn[..., None] * nn
            qtan = qt - qnl
            jet = lambda vals: np.einsum("msk,mk...->ms...", ops.dmat, vals)
            jet_qn, jet_tan, jet_nl, jet_sum = jet(qn), jet(qtan), jet(qnl), jet(qt + qnl)
            n0 = fr.normal
            lap_sum = _vec_laplacian(fr, jet_sum)
            lap_sum_tan = lap_sum - np.sum(lap_sum * n0, axis=1)[:, None] * n0
            w[rows] += correction_double(
                targets.signed_distance[rows] / self.delta, self.delta, n0, fr.mean_curvature,
                _vec_gradient(fr, jet_qn[:, 1], jet_qn[:, 2]), _divergence(fr, jet_tan),
                _vec_laplacian(fr, jet_nl), lap_sum_tan, _grad_divergence(fr, jet_tan))
        return w


def single_layer(qset, f, targets, config=None):
    return LayerEvaluator(qset, config).single_layer(f, targets)


def double_layer(qset, q, targets, config=None):
    return LayerEvaluator(qset, config).double_layer(q, targets)
