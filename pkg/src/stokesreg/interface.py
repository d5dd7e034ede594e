"""Two-fluid interface velocity by successive evaluation of the boundary integral equation.

For x0 on surface p,

    (lam_p + 1) u(x0) = -(2/mu0) sum_m SL_m[f_m](x0) + sum_m 2 (lam_m - 1) DL_m[u_m](x0)

with SL and DL normalized by 1/8pi as in ``layers``. Same-surface integrals use
the on-surface path; other-surface integrals treat the nodes of p as targets
near surface m.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .geometry import mean_curvature
from .layers import DensityField, LayerConfig, LayerEvaluator, TargetSet
from .quadrature import generate_nodes

log = logging.getLogger(__name__)

MODES = ("direct", "uncorrected", "corrected")


class NonConvergenceError(RuntimeError):
    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class QuadraticTension:
    """gamma(x) = 1 + (x1 - xc)^2."""
    xc: float = 0.0

    def __call__(self, x):
        return 1.0 + (np.asarray(x)[..., 0] - self.xc) ** 2

    def gradient(self, x):
        g = np.zeros_like(np.asarray(x, dtype=float))
        g[..., 0] = 2.0 * (np.asarray(x)[..., 0] - self.xc)
        return g


def surface_tension_force(qset, gamma, fitter=None):
    """Jump [f] = 2 gamma H n - grad_S gamma at every node.

    The surface gradient projects gamma's ambient gradient when it is available,
    otherwise it comes from local fits of the nodal gamma values.
    """
    x, n = qset.positions, qset.normals
    g = np.asarray(gamma(x), dtype=float)
    H = mean_curvature(qset.surface, x)
    if hasattr(gamma, "gradient"):
        amb = gamma.gradient(x)
        grad_s = amb - np.sum(amb * n, axis=1)[:, None] * n
    else:
        from .calculus import PatchFitter, gradient_from_jet
        fitter = fitter or PatchFitter(qset)
        frames, stencil, dmat = fitter.operators(x)
        jet = np.einsum("msk,mk->ms", dmat, g[stencil])
        grad_s = jet[:, 1, None] * frames.duals[:, 0] + jet[:, 2, None] * frames.duals[:, 1]
    return 2.0 * (g * H)[:, None] * n - grad_s


@dataclass
class InterfaceProblem:
    """Interfaces, viscosities and tensions; ``viscosities[p]`` is mu_p inside surface p."""
    qsets: Sequence
    mu0: float = 1.0
    viscosities: Sequence[float] = (2.0,)
    tensions: Optional[Sequence[Callable]] = None
    tolerance: float = 1e-10
    max_iter: int = 100

    def __post_init__(self):
        if len(self.viscosities) != len(self.qsets):
            if len(self.viscosities) == 1:
                self.viscosities = tuple(self.viscosities) * len(self.qsets)
            else:
                raise ValueError("one viscosity per surface")
        if self.mu0 <= 0 or any(m <= 0 for m in self.viscosities):
            raise ValueError("viscosities must be positive")
        if self.tensions is None:
            self.tensions = [QuadraticTension(_center_x(q)) for q in self.qsets]

    @property
    def ratios(self):
        return [m / self.mu0 for m in self.viscosities]


def _center_x(qset):
    center = getattr(qset.surface, "center", (0.0, 0.0, 0.0))
    return float(center[0])


@dataclass
class InterfaceSolution:
    velocities: List[np.ndarray]
    iterations: int
    trace: List[float] = field(default_factory=list)
    qsets: Sequence = ()


def _configs(mode):
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "direct":
        same = LayerConfig("near", delta_ratio=3.0, corrections=False)
    else:
        same = LayerConfig("on")
    cross = LayerConfig("near", delta_ratio=2.0, corrections=(mode == "corrected"))
    return same, cross


def solve_interface(problem: InterfaceProblem, mode="corrected", sl_fine_h=None):
    """Successive evaluation from u = 0 until max |u^N - u^(N-1)| < tolerance."""
    same_cfg, cross_cfg = _configs(mode)
    qsets = list(problem.qsets)
    ns = len(qsets)
    lam = problem.ratios
    forces = [DensityField(surface_tension_force(q, g)) for q, g in zip(qsets, problem.tensions)]

    # evaluators[m][p]: integrals over surface m at the nodes of surface p
    evaluators = [[None] * ns for _ in range(ns)]
    targets = [[None] * ns for _ in range(ns)]
    for m in range(ns):
        for p in range(ns):
            if p == m:
                evaluators[m][p] = LayerEvaluator(qsets[m], same_cfg)
                targets[m][p] = TargetSet.on_surface(qsets[p])
            else:
                evaluators[m][p] = LayerEvaluator(qsets[m], cross_cfg)
                targets[m][p] = TargetSet.near(qsets[m].surface, qsets[p].positions)

    rhs = []
    for p in range(ns):
        acc = np.zeros((len(qsets[p]), 3))
        for m in range(ns):
            if p == m and sl_fine_h is not None:
                acc += _fine_single_layer(qsets[m], problem.tensions[m], sl_fine_h, qsets[p].positions)
            else:
                acc += evaluators[m][p].single_layer(forces[m], targets[m][p])
        rhs.append(-2.0 / problem.mu0 * acc)

    if all(l == 1.0 for l in lam):
        # no double layer: the right-hand side is the answer
        u = [r / 2.0 for r in rhs]
        return InterfaceSolution(u, 1, [float(max(np.abs(v).max() for v in u))], qsets)

    u = [np.zeros((len(q), 3)) for q in qsets]
    trace = []
    for it in range(1, problem.max_iter + 1):
        new = []
        for p in range(ns):
            acc = rhs[p].copy()
            for m in range(ns):
                if lam[m] != 1.0:
                    acc += 2.0 * (lam[m] - 1.0) * evaluators[m][p].double_layer(DensityField(u[m]), targets[m][p])
            new.append(acc / (lam[p] + 1.0))
        err = max(float(np.max(np.linalg.norm(a - b, axis=1))) for a, b in zip(new, u))
        u = new
        trace.append(err)
        log.info("iteration %d: %.3e", it, err)
        if err < problem.tolerance:
            return InterfaceSolution(u, it, trace, qsets)
    raise NonConvergenceError(f"no convergence in {problem.max_iter} iterations", trace)


def _fine_single_layer(qset, gamma, h_fine, points):
    """Single layer of the tension jump from a finer node set, at on-surface points."""
    fine = generate_nodes(qset.surface, h_fine, qset.theta)
    force = DensityField(surface_tension_force(fine, gamma))
    idx = match_nodes(qset, fine)
    tg = TargetSet.on_surface(fine)
    sub = TargetSet(points, points, np.zeros(len(points)), tg.normal[idx], tg.region[idx],
                    tg.chi[idx], idx)
    return LayerEvaluator(fine, LayerConfig("on")).single_layer(force, sub)


def match_nodes(coarse, fine, tol=1e-9):
    """Index into ``fine`` of every node of ``coarse`` (coarse lines are fine lines)."""
    tree = cKDTree(fine.positions)
    dist, idx = tree.query(coarse.positions, k=4)
    out = np.full(len(coarse), -1)
    for c in range(idx.shape[1]):
        ok = (out < 0) & (dist[:, c] <= tol) & (fine.axis_set[np.minimum(idx[:, c], len(fine) - 1)] == coarse.axis_set)
        out[ok] = idx[ok, c]
    if np.any(out < 0):
        raise ValueError(f"{np.sum(out < 0)} coarse nodes have no fine counterpart")
    return out


def richardson_error(u_h, u_h2, coarse=None, fine=None):
    """(max, rms) over the coarse nodes of |u_h - u_{h/2}|.

    With ``coarse``/``fine`` quadrature sets, u_h2 is restricted to the coarse
    nodes by exact node matching; otherwise both arrays are already aligned.
    """
    u_h = np.asarray(u_h)
    u_h2 = np.asarray(u_h2)
    if coarse is not None and fine is not None:
        u_h2 = u_h2[match_nodes(coarse, fine)]
    e = np.linalg.norm(u_h - u_h2, axis=1)
    return float(e.max()), float(np.sqrt(np.mean(e * e)))
