"""Partition-of-unity quadrature for smooth closed surfaces.

Nodes are the intersections of the surface with grid lines parallel to each
coordinate axis (lines through j*h in the two remaining coordinates). A node on
a line parallel to e_i is kept when |n.e_i| >= cos(theta) and carries the weight
psi_i(n) h^2 / |n.e_i|, so the rule reduces to a trapezoidal sum on each chart.
"""
from dataclasses import dataclass, field

import numpy as np

from .geometry import PLANE_AXES, unit_normal

THETA_DEFAULT = np.deg2rad(70.0)

_CHUNK_POINTS = 2_000_000


class RootFindingError(RuntimeError):
    pass


def bump(r):
    """C-infinity bump exp(r^2/(r^2-1)) on |r| < 1, zero elsewhere."""
    r = np.asarray(r, dtype=float)
    r2 = r * r
    inside = r2 < 1.0
    out = np.zeros_like(r2)
    out[inside] = np.exp(r2[inside] / (r2[inside] - 1.0))
    return out if out.ndim else float(out)


def partition_weights(n, theta=THETA_DEFAULT):
    """psi_1..psi_3 for unit normal(s) n; psi_i vanishes where |n.e_i| <= cos(theta).

    The bump argument is sin(angle to e_i)/sin(theta), so r^2 = (1 - n_i^2)/sin^2(theta).
    """
    n = np.asarray(n, dtype=float)
    r = np.sqrt(np.clip(1.0 - n * n, 0.0, None)) / np.sin(theta)
    w = bump(r)
    total = np.sum(w, axis=-1, keepdims=True)
    if np.any(total == 0):
        raise ValueError("no coordinate chart covers this normal")
    return w / total


@dataclass(frozen=True)
class QuadratureNode:
    position: np.ndarray
    normal: np.ndarray
    pou_weight: float
    axis_set: int
    grid_index: tuple


@dataclass
class QuadratureSet:
    positions: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    axis_set: np.ndarray
    grid_index: np.ndarray
    h: float
    theta: float
    surface: object = field(repr=False)

    def __len__(self):
        return self.positions.shape[0]

    @property
    def surface_tag(self):
        return self.surface.kind_tag

    def node(self, i):
        return QuadratureNode(self.positions[i], self.normals[i], float(self.weights[i]),
                              int(self.axis_set[i]), tuple(int(v) for v in self.grid_index[i]))

    def subset(self, mask):
        return QuadratureSet(self.positions[mask], self.normals[mask], self.weights[mask],
                             self.axis_set[mask], self.grid_index[mask], self.h, self.theta,
                             self.surface)


def _grid_range(lo, hi, h):
    return np.arange(int(np.ceil(lo / h)), int(np.floor(hi / h)) + 1)


def _line_roots(surface, axis, j1, j2, h, lo, hi):
    """All roots of phi along the lines x_p = j1 h, x_q = j2 h parallel to ``axis``.

    Returns (line index, coordinate along the axis), sorted by line then coordinate.
    """
    p, q = PLANE_AXES[axis]
    step = 0.5 * h
    t = np.arange(lo - step, hi + 2 * step, step)
    nt = t.size
    lines_per_chunk = max(1, _CHUNK_POINTS // nt)
    found_line, found_lo = [], []
    for start in range(0, j1.size, lines_per_chunk):
        sl = slice(start, start + lines_per_chunk)
        pts = np.empty((j1[sl].size, nt, 3))
        pts[..., p] = (j1[sl] * h)[:, None]
        pts[..., q] = (j2[sl] * h)[:, None]
        pts[..., axis] = t[None, :]
        val = surface.phi(pts)
        change = np.signbit(val[:, :-1]) != np.signbit(val[:, 1:])
        li, ki = np.nonzero(change)
        found_line.append(li + start)
        found_lo.append(ki)
    line = np.concatenate(found_line)
    k = np.concatenate(found_lo)
    if line.size == 0:
        return line, np.zeros(0)
    a = t[k].copy()
    b = t[k + 1].copy()
    base = np.zeros((line.size, 3))
    base[:, p] = j1[line] * h
    base[:, q] = j2[line] * h

    def phi_at(s):
        x = base.copy()
        x[:, axis] = s
        return surface.phi(x)

    fa = phi_at(a)
    for _ in range(200):
        if np.all(b - a <= 1e-14):
            break
        mid = 0.5 * (a + b)
        fm = phi_at(mid)
        left = np.signbit(fm) == np.signbit(fa)
        a = np.where(left, mid, a)
        fa = np.where(left, fm, fa)
        b = np.where(left, b, mid)
    else:
        bad = np.nonzero(b - a > 1e-14)[0][0]
        raise RootFindingError(
            f"bisection stalled on axis {axis} line ({j1[line[bad]]}, {j2[line[bad]]})")
    s = 0.5 * (a + b)
    # one Newton polish, kept only where it stays inside the final bracket
    x = base.copy()
    x[:, axis] = s
    val, grad, _ = surface.evaluate(x)
    ds = val / grad[:, axis]
    s_new = s - ds
    ok = np.isfinite(s_new) & (np.abs(ds) <= 1e-12)
    s = np.where(ok, s_new, s)
    return line, s


def generate_nodes(surface, h, theta=THETA_DEFAULT):
    """Quadrature nodes on ``surface`` for grid spacing h (lines through the origin)."""
    lo, hi = surface.bounding_box
    lo = np.asarray(lo) - h
    hi = np.asarray(hi) + h
    cos_t = np.cos(theta)
    parts = []
    for axis in range(3):
        p, q = PLANE_AXES[axis]
        g1 = _grid_range(lo[p], hi[p], h)
        g2 = _grid_range(lo[q], hi[q], h)
        J1, J2 = np.meshgrid(g1, g2, indexing="ij")
        j1, j2 = J1.ravel(), J2.ravel()
        line, s = _line_roots(surface, axis, j1, j2, h, lo[axis], hi[axis])
        pts = np.zeros((line.size, 3))
        pts[:, p] = j1[line] * h
        pts[:, q] = j2[line] * h
        pts[:, axis] = s
        n = unit_normal(surface, pts)
        keep = np.abs(n[:, axis]) >= cos_t
        pts, n = pts[keep], n[keep]
        gi = np.stack([j1[line[keep]], j2[line[keep]]], axis=1)
        psi = partition_weights(n, theta)[:, axis]
        w = psi / np.abs(n[:, axis]) * h * h
        # lexicographic (j1, j2, coordinate along the line)
        order = np.lexsort((pts[:, axis], gi[:, 1], gi[:, 0]))
        parts.append((pts[order], n[order], w[order], np.full(order.size, axis), gi[order]))
    pos, nrm, wts, ax, gi = (np.concatenate(c) for c in zip(*parts))
    return QuadratureSet(pos, nrm, wts, ax.astype(int), gi.astype(int), float(h), float(theta), surface)


def integrate(qset, f):
    """Sum of weight * f over the nodes, in node order.

    ``f`` is either an array of nodal values (leading dimension = node count) or
    a callable ``f(positions, normals)``.
    """
    vals = f(qset.positions, qset.normals) if callable(f) else np.asarray(f)
    if vals.shape[0] != len(qset):
        raise ValueError("nodal values do not match the node count")
    return np.tensordot(qset.weights, vals, axes=(0, 0))
