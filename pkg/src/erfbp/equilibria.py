"""Location of all equilibrium points of the effective potential.

Strategy: evaluate grad W on a rectangular grid, keep every cell in which
both components change sign, and polish each candidate cell center with a
damped Newton iteration on the analytic gradient/Hessian.  Small primaries
additionally get rings of seeds at radii scaled by m^(1/3), because the
satellite equilibria hugging a light primary can slip between grid nodes.
A completeness pass re-runs the search at doubled resolution and demands the
same answer.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import GridTooCoarse
from .model import (
    COLLISION_TOL,
    MassTriple,
    PrimaryConfiguration,
    build_configuration,
    min_primary_distance,
    potential_arrays,
)

__all__ = [
    "EquilibriumPoint",
    "EquilibriumSet",
    "RefineFailure",
    "find_equilibria",
    "refine_root",
    "newton_refine_batch",
    "degeneracy_measure",
    "inside_primary_triangle",
]

NEWTON_TOL = 1e-11
NEWTON_MAX_ITER = 50
DEDUP_RADIUS = 1e-6
SEARCH_HALF_WIDTH = 2.0
DEFAULT_RESOLUTION = 400

_RING_SCALES = (0.3, 0.5, 0.8, 1.2, 2.0, 3.5)
_RING_ANGLES = 16


@dataclass(frozen=True)
class EquilibriumPoint:
    """One converged root of grad W with diagnostics."""

    x: float
    y: float
    grad_norm: float
    degeneracy: float  # det of the Hessian of W at the point
    label: str | None = None
    fold_flag: bool = False

    @property
    def position(self):
        return np.array([self.x, self.y])

    def with_label(self, label, fold_flag=False):
        return replace(self, label=label, fold_flag=fold_flag)

    def to_dict(self):
        return {
            "label": self.label,
            "x": self.x,
            "y": self.y,
            "grad_norm": self.grad_norm,
            "degeneracy": self.degeneracy,
        }


@dataclass(frozen=True)
class EquilibriumSet:
    """All equilibria found for one mass triple, sorted by position."""

    masses: MassTriple
    points: tuple
    config: PrimaryConfiguration

    @property
    def count(self):
        return len(self.points)

    def positions(self):
        return np.array([[p.x, p.y] for p in self.points]).reshape(-1, 2)

    def by_label(self):
        return {p.label: p for p in self.points if p.label is not None}

    def to_dict(self):
        return {
            "masses": self.masses.to_dict(),
            "count": self.count,
            "points": [p.to_dict() for p in self.points],
        }


@dataclass(frozen=True)
class RefineFailure:
    """Diagnostic returned when Newton polishing fails."""

    reason: str  # "diverged" | "hit-singularity" | "max-iterations"
    last_position: tuple


# status codes used by the batch kernel
_RUNNING, _CONVERGED, _SINGULAR, _DIVERGED = 0, 1, 2, 3


def newton_refine_batch(seeds, primaries, mass_array, tol=NEWTON_TOL,
                        max_iter=NEWTON_MAX_ITER, max_move=0.5,
                        collision_tol=COLLISION_TOL):
    """Damped Newton on grad W for a batch of seeds.

    seeds (N, 2); primaries/mass_array either shared, or batched per seed
    with shapes (N, 3, 2) / (N, 3) for parameter sweeps.  Returns
    (positions (N, 2), status (N,)) with status in {1: converged,
    2: hit singularity, 3: diverged or max iterations}.
    """
    x = np.array(seeds, float).reshape(-1, 2)
    n = x.shape[0]
    prim = np.asarray(primaries, float)
    mass = np.asarray(mass_array, float)
    batched = prim.ndim == 3
    status = np.full(n, _RUNNING, np.int8)
    start = x.copy()

    for _ in range(max_iter):
        act = status == _RUNNING
        if not act.any():
            break
        xa = x[act]
        pa = prim[act] if batched else prim
        ma = mass[act] if batched else mass
        _, g, h = potential_arrays(xa, pa, ma, order=2)
        gn = np.hypot(g[..., 0], g[..., 1])
        done = gn < tol
        det = h[..., 0] * h[..., 2] - h[..., 1] ** 2
        bad = (det == 0.0) | ~np.isfinite(det)
        # Newton step from the 2x2 symmetric Hessian
        with np.errstate(divide="ignore", invalid="ignore"):
            sx = (h[..., 2] * g[..., 0] - h[..., 1] * g[..., 1]) / det
            sy = (h[..., 0] * g[..., 1] - h[..., 1] * g[..., 0]) / det
        step = np.stack([sx, sy], axis=-1)

        # damped update: halve until the residual decreases
        trial = xa - step
        _, gt, _ = potential_arrays(trial, pa, ma, order=1)
        gtn = np.hypot(gt[..., 0], gt[..., 1])
        need = (gtn >= gn) & ~done & ~bad
        t = np.ones(len(xa))
        for _ in range(25):
            if not need.any():
                break
            t[need] *= 0.5
            cand = xa[need] - t[need, None] * step[need]
            pn = pa[need] if batched else pa
            mn = ma[need] if batched else ma
            _, gc, _ = potential_arrays(cand, pn, mn, order=1)
            gcn = np.hypot(gc[..., 0], gc[..., 1])
            ok = gcn < gn[need]
            trial[need] = cand
            gtn[need] = gcn
            idx = np.nonzero(need)[0]
            need[idx[ok]] = False
        stalled = need  # never achieved a decrease

        new_x = np.where(done[:, None], xa, trial)
        dist = min_primary_distance(new_x, pa, ma)
        hit = dist <= collision_tol
        far = np.hypot(*(new_x - start[act]).T) > max_move

        sub = np.full(len(xa), _RUNNING, np.int8)
        sub[done] = _CONVERGED
        sub[~done & hit] = _SINGULAR
        sub[~done & ~hit & (bad | stalled | far)] = _DIVERGED
        x[act] = new_x
        status[act] = sub

    status[status == _RUNNING] = _DIVERGED
    return x, status


def refine_root(seed, config, tol=NEWTON_TOL, max_iter=NEWTON_MAX_ITER,
                max_move=0.5):
    """Polish one seed; returns an EquilibriumPoint or a RefineFailure."""
    seed = np.asarray(seed, float)
    if min_primary_distance(seed, config.positions, config.mass_array) <= config.collision_tol:
        return RefineFailure("hit-singularity", tuple(seed))
    pos, status = newton_refine_batch(
        seed[None, :], config.positions, config.mass_array,
        tol=tol, max_iter=max_iter, max_move=max_move,
        collision_tol=config.collision_tol,
    )
    p = pos[0]
    if status[0] == _CONVERGED:
        return _make_point(p, config)
    reason = {_SINGULAR: "hit-singularity", _DIVERGED: "diverged"}.get(status[0], "max-iterations")
    return RefineFailure(reason, tuple(p))


def _make_point(p, config, label=None):
    _, g, h = potential_arrays(p, config.positions, config.mass_array, order=2)
    return EquilibriumPoint(
        float(p[0]), float(p[1]),
        grad_norm=float(np.hypot(g[0], g[1])),
        degeneracy=float(h[0] * h[2] - h[1] ** 2),
        label=label,
    )


def degeneracy_measure(point, config):
    """det(Hessian of W) = W_xx*W_yy - W_xy^2 at an equilibrium; zero on the
    bifurcation set."""
    pos = point.position if isinstance(point, EquilibriumPoint) else np.asarray(point, float)
    _, _, h = potential_arrays(pos, config.positions, config.mass_array, order=2)
    return float(h[0] * h[2] - h[1] ** 2)


def inside_primary_triangle(point, config):
    """True if the point lies strictly inside the triangle of the primaries."""
    q = config.positions
    p = np.asarray(point, float)
    s = []
    for i in range(3):
        a, b = q[i], q[(i + 1) % 3]
        s.append((b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]))
    return all(v > 0 for v in s) or all(v < 0 for v in s)


# ---------------------------------------------------------------------------
# grid search
# ---------------------------------------------------------------------------


def _grid_seeds(config, resolution, half_width):
    """Cell centers of grid cells where both gradient components change sign."""
    axis = np.linspace(-half_width, half_width, resolution + 1)
    cell = axis[1] - axis[0]
    X, Y = np.meshgrid(axis, axis, indexing="ij")
    pts = np.stack([X, Y], axis=-1)
    _, g, _ = potential_arrays(pts, config.positions, config.mass_array, order=1)

    def sign_change(a):
        s = np.signbit(a)
        c = s[:-1, :-1]
        return (s[1:, :-1] != c) | (s[:-1, 1:] != c) | (s[1:, 1:] != c)

    mask = sign_change(g[..., 0]) & sign_change(g[..., 1])
    ii, jj = np.nonzero(mask)
    seeds = np.stack([axis[ii] + cell / 2.0, axis[jj] + cell / 2.0], axis=-1)
    # cells sitting on a (massive) primary produce spurious sign flips
    keep = min_primary_distance(seeds, config.positions, config.mass_array) > 0.35 * cell
    return seeds[keep]


def _ring_seeds(config):
    """Extra seeds on rings around each primary, scaled by m^(1/3)."""
    out = []
    ang = np.linspace(0.0, 2.0 * np.pi, _RING_ANGLES, endpoint=False)
    circle = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    for i, m in enumerate(config.mass_array):
        if m <= 0.0:
            continue
        base = np.cbrt(m)
        for s in _RING_SCALES:
            rad = base * s
            if rad < 10.0 * config.collision_tol or rad > 0.5:
                continue
            out.append(config.positions[i] + rad * circle)
    if not out:
        return np.empty((0, 2))
    return np.concatenate(out, axis=0)


def _dedup(points, radius):
    out = []
    for p in points:
        if all((p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2 > radius * radius for q in out):
            out.append(p)
    return np.array(out).reshape(-1, 2)


def _search_once(config, resolution, half_width, tol, dedup_radius):
    seeds = _grid_seeds(config, resolution, half_width)
    rings = _ring_seeds(config)
    if len(rings):
        seeds = np.concatenate([seeds, rings], axis=0)
    if len(seeds) == 0:
        return np.empty((0, 2))
    pos, status = newton_refine_batch(
        seeds, config.positions, config.mass_array,
        tol=tol, collision_tol=config.collision_tol,
    )
    good = pos[status == _CONVERGED]
    inside = np.all(np.abs(good) <= half_width + 0.25, axis=-1)
    good = good[inside]
    order = np.lexsort((np.round(good[:, 1], 9), np.round(good[:, 0], 9)))
    return _dedup(good[order], dedup_radius)


def _sets_match(a, b, radius):
    if len(a) != len(b):
        return False
    if len(a) == 0:
        return True
    d2 = ((a[:, None, :] - b[None, :, :]) ** 2).sum(-1)
    return bool(np.all(d2.min(axis=1) < radius * radius))


def find_equilibria(masses, resolution=DEFAULT_RESOLUTION, tol=NEWTON_TOL,
                    half_width=SEARCH_HALF_WIDTH, dedup_radius=DEDUP_RADIUS,
                    verify=True, max_refinements=2):
    """Find all equilibria for a mass triple.

    With ``verify=True`` (default) the search is repeated at doubled grid
    resolution; a mismatch triggers up to ``max_refinements`` internal
    doublings before GridTooCoarse is raised.  ``verify=False`` runs a
    single pass (used by large parameter scans, where neighbouring cells
    cross-check each other).
    """
    if not isinstance(masses, MassTriple):
        masses = MassTriple.of(*masses) if len(masses) == 2 else MassTriple(*masses)
    config = build_configuration(masses)

    n = resolution
    pts = _search_once(config, n, half_width, tol, dedup_radius)
    if verify:
        for _ in range(max_refinements + 1):
            finer = _search_once(config, 2 * n, half_width, tol, dedup_radius)
            if _sets_match(pts, finer, dedup_radius):
                pts = finer
                break
            pts, n = finer, 2 * n
        else:
            raise GridTooCoarse(
                f"equilibrium count still changing at resolution {2 * n}"
            )
    eq = tuple(_make_point(p, config) for p in pts)
    return EquilibriumSet(masses, eq, config)
