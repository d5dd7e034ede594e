"""Experiment drivers: quadrature points, layer accuracy tests, interface solves.

Every experiment returns an ``ExperimentResult`` whose rows go to CSV (one
target per row) followed by ``#`` summary rows.
"""
import csv
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence

import numpy as np

from .geometry import Ellipsoid, parse_surface, sphere, unit_normal
from .interface import MODES, InterfaceProblem, match_nodes, richardson_error, solve_interface
from .layers import DensityField, LayerConfig, LayerEvaluator, TargetSet
from .oracles import (SpheroidFlow, dl_identity_rhs, point_stokeslet, rotation_density,
                      spheroid_traction, spheroid_velocity)
from .quadrature import generate_nodes

log = logging.getLogger(__name__)

EXPERIMENTS = ("quadpts", "single-layer", "dl-identity", "sum-layers", "interface",
               "two-spheres", "delta-sweep")
DEFAULT_SURFACE = {
    "quadpts": "sphere", "single-layer": "spheroid:a=1,b=0.5", "dl-identity": "ellipsoid",
    "sum-layers": "sphere", "interface": "sphere", "two-spheres": "sphere",
    "delta-sweep": "sphere",
}
DEFAULT_SWEEP = (0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0)
POINT_FORCE_AT = (2.0, 0.0, 0.0)
POINT_FORCE = (1.0, 0.0, 0.0)


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str
    surface: Optional[str] = None
    h: Sequence[float] = (1 / 16, 1 / 32)
    mode: Optional[str] = None          # on|near, or direct|uncorrected|corrected for two-spheres
    delta_ratio: Optional[float] = None
    corrections: Optional[bool] = None
    regularization: Optional[str] = None
    mu0: float = 1.0
    mu: float = 2.0
    tol: float = 1e-10
    sl_fine_h: Optional[float] = None
    eps: float = 1 / 16 ** 3
    delta_ratios: Sequence[float] = DEFAULT_SWEEP
    max_targets: Optional[int] = None
    seed: int = 0
    output: Optional[str] = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.surface is None:
            self.surface = DEFAULT_SURFACE[self.experiment]
        self.h = [float(v) for v in (self.h if np.iterable(self.h) else [self.h])]
        if not self.h or any(v <= 0 for v in self.h):
            raise ConfigError("grid sizes must be positive")
        if self.mode is None:
            self.mode = "corrected" if self.experiment == "two-spheres" else "on"
        allowed = MODES if self.experiment == "two-spheres" else ("on", "near")
        if self.mode not in allowed:
            raise ConfigError(f"mode must be one of {allowed}")
        if self.experiment in ("interface", "two-spheres") and len(self.h) < 1:
            raise ConfigError("need at least one grid size")
        for a, b in zip(self.h, self.h[1:]):
            if not np.isclose(a, 2 * b):
                raise ConfigError("grid sizes must halve successively")
        if self.experiment == "delta-sweep":
            self.mode = "near"

    def layer_config(self):
        try:
            return LayerConfig(self.mode, self.delta_ratio, self.corrections, self.regularization)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


@dataclass
class LevelSummary:
    h: float
    nodes: int
    targets: int
    max_error: Optional[float] = None
    l2_error: Optional[float] = None
    extra: dict = field(default_factory=dict)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    columns: List[str]
    rows: List[list]
    levels: List[LevelSummary]
    orders: dict = field(default_factory=dict)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            self.write(fh)

    def write(self, fh):
        w = csv.writer(fh)
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(v) for v in row])
        for lv in self.levels:
            items = [f"h={_fmt(lv.h)}", f"nodes={lv.nodes}", f"targets={lv.targets}"]
            if lv.max_error is not None:
                items += [f"max={lv.max_error:.6e}", f"l2={lv.l2_error:.6e}"]
            items += [f"{k}={_fmt(v)}" for k, v in lv.extra.items()]
            fh.write("# " + " ".join(items) + "\n")
        for name, values in self.orders.items():
            fh.write(f"# order_{name}=" + ",".join(_fmt_order(v) for v in values) + "\n")


def _fmt(v):
    if isinstance(v, np.integer):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (list, tuple)):
        return ";".join(f"{x:.3e}" for x in v)
    return str(v)


def _fmt_order(v):
    return "undefined" if v is None else f"{v:.3f}"


def convergence_report(errors):
    """log2(e_h / e_{h/2}) for consecutive levels; None where an error is zero."""
    errors = list(errors)
    if len(errors) < 2:
        raise ValueError("need at least two grid levels")
    out = []
    for a, b in zip(errors, errors[1:]):
        out.append(None if a == 0 or b == 0 else float(np.log2(a / b)))
    return out


def near_surface_points(surface, h, side="outside"):
    """Points of the ambient grid (spacing h, through the origin) within distance h.

    side="outside": 0 < b <= h; side="both": 0 < |b| <= h.
    """
    lo, hi = (np.asarray(v) for v in surface.bounding_box)
    axes = [np.arange(np.ceil((lo[i] - 2 * h) / h), np.floor((hi[i] + 2 * h) / h) + 1) * h
            for i in range(3)]
    picked = []
    for x in axes[0]:
        yy, zz = np.meshgrid(axes[1], axes[2], indexing="ij")
        pts = np.stack([np.full(yy.size, x), yy.ravel(), zz.ravel()], axis=1)
        val, grad, _ = surface.evaluate(pts)
        close = np.abs(val) <= 2.0 * h * np.linalg.norm(grad, axis=1)
        picked.append(pts[close])
    pts = np.concatenate(picked)
    targets = TargetSet.near(surface, pts)
    b = targets.signed_distance
    keep = (b > 0) & (b <= h) if side == "outside" else (np.abs(b) <= h) & (b != 0)
    return _subset(targets, keep)


def _subset(t, mask):
    return TargetSet(t.points[mask], t.foot[mask], t.signed_distance[mask], t.normal[mask],
                     t.region[mask], t.chi[mask], t.node_index[mask])


def _limit(targets, cfg):
    if cfg.max_targets is None or len(targets) <= cfg.max_targets:
        return targets
    rng = np.random.default_rng(cfg.seed)
    keep = np.zeros(len(targets), dtype=bool)
    keep[np.sort(rng.choice(len(targets), cfg.max_targets, replace=False))] = True
    return _subset(targets, keep)


def _errors(u, exact):
    e = np.linalg.norm(u - exact, axis=1)
    return e, float(e.max()), float(np.sqrt(np.mean(e * e)))


def _surface(cfg):
    try:
        return parse_surface(cfg.surface)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _targets(cfg, surface, qset, h, side):
    if cfg.mode == "on":
        return TargetSet.on_surface(qset)
    return _limit(near_surface_points(surface, h, side), cfg)


def _field_rows(h, targets, u, exact, err):
    return [[h, *targets.points[i], *u[i], *exact[i], err[i]] for i in range(len(targets))]


FIELD_COLUMNS = ["h", "x", "y", "z", "ux", "uy", "uz", "ex", "ey", "ez", "error"]


def _run_quadpts(cfg):
    surface = _surface(cfg)
    rows, levels = [], []
    for h in cfg.h:
        q = generate_nodes(surface, h)
        for i in range(len(q)):
            rows.append([*q.positions[i], *q.normals[i], q.weights[i], int(q.axis_set[i])])
        area = float(np.sum(q.weights))
        levels.append(LevelSummary(h, len(q), 0, extra={"area": area}))
    return ExperimentResult(cfg, ["x", "y", "z", "nx", "ny", "nz", "weight", "axis_set"], rows, levels)


def _spheroid_flow(surface):
    if not isinstance(surface, Ellipsoid):
        raise ConfigError("single-layer needs a sphere or prolate spheroid")
    a, b, c = surface.semiaxes
    if b != c or a < b or any(surface.center):
        raise ConfigError("single-layer needs a spheroid a >= b = c centered at the origin")
    return SpheroidFlow(a, b)


def _layer_levels(cfg, evaluate):
    """Shared loop for the layer tests: ``evaluate(h)`` -> (targets, u, exact, nodes)."""
    rows, levels = [], []
    for h in cfg.h:
        targets, u, exact, nodes = evaluate(h)
        err, emax, el2 = _errors(u, exact)
        rows += _field_rows(h, targets, u, exact, err)
        levels.append(LevelSummary(h, nodes, len(targets), emax, el2))
        log.info("h=%g targets=%d max=%.3e l2=%.3e", h, len(targets), emax, el2)
    res = ExperimentResult(cfg, FIELD_COLUMNS, rows, levels)
    if len(levels) > 1:
        res.orders = {"max": convergence_report([lv.max_error for lv in levels]),
                      "l2": convergence_report([lv.l2_error for lv in levels])}
    return res


def _run_single_layer(cfg):
    surface = _surface(cfg)
    flow = _spheroid_flow(surface)
    layer = cfg.layer_config()

    def evaluate(h):
        q = generate_nodes(surface, h)
        force = DensityField.from_function(q, lambda x: -spheroid_traction(flow, x))
        targets = _targets(cfg, surface, q, h, "outside")
        u = LayerEvaluator(q, layer).single_layer(force, targets)
        if cfg.mode == "on":
            exact = np.tile([1.0, 0.0, 0.0], (len(targets), 1))
        else:
            exact = spheroid_velocity(flow, targets.points)
        return targets, u, exact, len(q)

    return _layer_levels(cfg, evaluate)


def _run_dl_identity(cfg):
    surface = _surface(cfg)
    layer = cfg.layer_config()

    def evaluate(h):
        q = generate_nodes(surface, h)
        dens = DensityField.from_function(q, rotation_density)
        targets = _targets(cfg, surface, q, h, "both")
        w = LayerEvaluator(q, layer).double_layer(dens, targets)
        exact = dl_identity_rhs(targets.points, targets.chi / (8 * np.pi))
        return targets, w, exact, len(q)

    return _layer_levels(cfg, evaluate)


def sum_layer_data(surface, y0=POINT_FORCE_AT, bvec=POINT_FORCE):
    """Velocity and traction jumps [u] = -u^-, [f] = -sigma^- n as ambient closures."""
    def jump_u(x):
        return -point_stokeslet(y0, bvec, x)[0]

    def jump_f(x):
        n = unit_normal(surface, x)
        sigma = point_stokeslet(y0, bvec, x)[1]
        return -np.einsum("...ik,...k->...i", sigma, n)

    return jump_u, jump_f


def _run_sum_layers(cfg):
    surface = _surface(cfg)
    layer = cfg.layer_config()
    jump_u, jump_f = sum_layer_data(surface)

    def evaluate(h):
        q = generate_nodes(surface, h)
        targets = _targets(cfg, surface, q, h, "both")
        ev = LayerEvaluator(q, layer)
        u = (-ev.single_layer(DensityField.from_function(q, jump_f), targets)
             - ev.double_layer(DensityField.from_function(q, jump_u), targets))
        inner = point_stokeslet(POINT_FORCE_AT, POINT_FORCE, targets.points)[0]
        exact = inner * (targets.chi / (8 * np.pi))[:, None]
        return targets, u, exact, len(q)

    return _layer_levels(cfg, evaluate)


def _run_delta_sweep(cfg):
    surface = _surface(cfg)
    flow = _spheroid_flow(surface)
    h = cfg.h[-1]
    q = generate_nodes(surface, h)
    force = DensityField.from_function(q, lambda x: -spheroid_traction(flow, x))
    targets = _limit(near_surface_points(surface, h, "outside"), cfg)
    exact = spheroid_velocity(flow, targets.points)
    rows, levels = [], []
    for ratio in cfg.delta_ratios:
        layer = LayerConfig("near", ratio, cfg.corrections, cfg.regularization)
        u = LayerEvaluator(q, layer).single_layer(force, targets)
        err, emax, el2 = _errors(u, exact)
        rows.append([h, ratio, emax, el2])
        levels.append(LevelSummary(h, len(q), len(targets), emax, el2, {"delta_ratio": ratio}))
    return ExperimentResult(cfg, ["h", "delta_ratio", "max_error", "l2_error"], rows, levels)


def _interface_levels(cfg, build_sets, mode):
    solutions = []
    for h in cfg.h:
        qsets = build_sets(h)
        problem = InterfaceProblem(qsets, cfg.mu0, [cfg.mu] * len(qsets), tolerance=cfg.tol)
        solutions.append(solve_interface(problem, mode=mode, sl_fine_h=cfg.sl_fine_h))
        log.info("h=%g iterations=%d", h, solutions[-1].iterations)
    rows, levels = [], []
    for k, (h, sol) in enumerate(zip(cfg.h, solutions)):
        q0 = sol.qsets[0]
        err = np.full(len(q0), np.nan)
        lv = LevelSummary(h, sum(len(q) for q in sol.qsets), len(q0),
                          extra={"iterations": sol.iterations, "trace": sol.trace})
        if k + 1 < len(solutions):
            fine = solutions[k + 1]
            norms = [richardson_error(sol.velocities[p], fine.velocities[p], sol.qsets[p], fine.qsets[p])
                     for p in range(len(sol.qsets))]
            lv.max_error, lv.l2_error = norms[0]
            if len(norms) > 1:
                lv.extra["max_other"], lv.extra["l2_other"] = norms[1]
            idx = match_nodes(q0, fine.qsets[0])
            err = np.linalg.norm(sol.velocities[0] - fine.velocities[0][idx], axis=1)
        u = sol.velocities[0]
        rows += [[h, *q0.positions[i], *u[i], err[i]] for i in range(len(q0))]
        levels.append(lv)
    res = ExperimentResult(cfg, ["h", "x", "y", "z", "ux", "uy", "uz", "e_h"], rows, levels)
    measured = [lv for lv in levels if lv.max_error is not None]
    if len(measured) > 1:
        res.orders = {"max": convergence_report([lv.max_error for lv in measured]),
                      "l2": convergence_report([lv.l2_error for lv in measured])}
    return res


def _run_interface(cfg):
    surface = _surface(cfg)
    return _interface_levels(cfg, lambda h: [generate_nodes(surface, h)], "corrected")


def two_sphere_surfaces(eps):
    return [sphere(1.0, (0.0, 0.0, 0.0)), sphere(1.0, (2.0, 0.0, eps))]


def _run_two_spheres(cfg):
    surfaces = two_sphere_surfaces(cfg.eps)
    return _interface_levels(cfg, lambda h: [generate_nodes(s, h) for s in surfaces], cfg.mode)


_RUNNERS = {
    "quadpts": _run_quadpts, "single-layer": _run_single_layer, "dl-identity": _run_dl_identity,
    "sum-layers": _run_sum_layers, "interface": _run_interface, "two-spheres": _run_two_spheres,
    "delta-sweep": _run_delta_sweep,
}


def run_experiment(cfg: ExperimentConfig):
    result = _RUNNERS[cfg.experiment](cfg)
    if cfg.output:
        result.write_csv(cfg.output)
    return result


def parse_h(text):
    """'1/16,1/32' -> [0.0625, 0.03125]."""
    try:
        return [float(Fraction(part.strip())) for part in str(text).split(",") if part.strip()]
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad grid size list {text!r}") from exc
