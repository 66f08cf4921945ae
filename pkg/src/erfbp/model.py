"""Rotating-frame model: primaries, effective potential, equations of motion.

The three primaries sit at the vertices of a unit-side equilateral triangle
(Lagrange's central configuration) rotating with unit angular velocity about
the mass centroid, which is the origin.  Total mass and the gravitational
constant are 1, so the effective potential for the massless particle is

    W(x, y) = (x^2 + y^2)/2 + sum_i m_i / r_i

with r_i the distance to primary i.  Everything downstream (equilibria,
stability, curve tracing) is built on the derivatives of W computed here.

All evaluation routines broadcast: points may be an (..., 2) array and, for
parameter scans, primaries/masses may carry leading batch axes as well.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CollisionSingularity, DegenerateK, MassOutOfRange

__all__ = [
    "MU_ROUTH",
    "MassTriple",
    "PrimaryConfiguration",
    "PhaseState",
    "PotentialEvaluation",
    "build_configuration",
    "evaluate_potential",
    "equations_of_motion",
    "jacobi_constant",
    "routh_quantity",
]

#: Routh's critical mass ratio, the positive root of m(1-m) = 1/27 below 1/2.
MU_ROUTH = 0.5 * (1.0 - math.sqrt(69.0) / 9.0)

#: Default positivity floor for primary masses.
MASS_FLOOR = 1e-9

#: Default collision tolerance around each primary.
COLLISION_TOL = 1e-8

_SUM_TOL = 1e-14


@dataclass(frozen=True)
class MassTriple:
    """Normalized primary masses (m1, m2, m3) with m1 + m2 + m3 = 1.

    Unnormalized but proportional inputs are accepted and rescaled.  Each
    mass must exceed the positivity floor unless ``degenerate_limit`` is set,
    which permits arbitrarily small (or zero) masses for restricted
    three-body cross checks.
    """

    m1: float
    m2: float
    m3: float
    degenerate_limit: bool = field(default=False, compare=False)

    def __post_init__(self):
        vals = (self.m1, self.m2, self.m3)
        if not all(math.isfinite(v) for v in vals):
            raise MassOutOfRange(f"non-finite masses {vals}")
        total = self.m1 + self.m2 + self.m3
        if total <= 0.0:
            raise MassOutOfRange(f"non-positive total mass {total}")
        if abs(total - 1.0) > _SUM_TOL:
            object.__setattr__(self, "m1", self.m1 / total)
            object.__setattr__(self, "m2", self.m2 / total)
            object.__setattr__(self, "m3", self.m3 / total)
        floor = 0.0 if self.degenerate_limit else MASS_FLOOR
        low = min(self.m1, self.m2, self.m3)
        if low < floor:
            raise MassOutOfRange(
                f"mass {low} below floor {floor}"
                + ("" if self.degenerate_limit else " (use degenerate_limit=True to permit)")
            )

    @classmethod
    def of(cls, m1, m2, m3=None, degenerate_limit=False):
        """Build from (m1, m2) with m3 = 1 - m1 - m2, or from all three."""
        if m3 is None:
            m3 = 1.0 - m1 - m2
        return cls(m1, m2, m3, degenerate_limit)

    def swapped23(self):
        """The triple with m2 and m3 exchanged."""
        return MassTriple(self.m1, self.m3, self.m2, self.degenerate_limit)

    @property
    def array(self):
        return np.array([self.m1, self.m2, self.m3])

    def to_dict(self):
        return {"m1": self.m1, "m2": self.m2, "m3": self.m3}


def routh_quantity(masses):
    """m1*m2 + m1*m3 + m2*m3 - 1/27; negative iff the Lagrange triangle is stable.

    Accepts a MassTriple or an (m1, m2) pair of arrays (m3 implied), in which
    case the result broadcasts.
    """
    if isinstance(masses, MassTriple):
        m1, m2, m3 = masses.m1, masses.m2, masses.m3
    else:
        m1, m2 = np.asarray(masses[0], float), np.asarray(masses[1], float)
        m3 = 1.0 - m1 - m2
    return m1 * m2 + m1 * m3 + m2 * m3 - 1.0 / 27.0


def k_constant(masses):
    """K = m2*(m3 - m2) + m1*(m2 + 2*m3), the paper-derived orientation scalar."""
    m1, m2, m3 = masses.m1, masses.m2, masses.m3
    return m2 * (m3 - m2) + m1 * (m2 + 2.0 * m3)


# ---------------------------------------------------------------------------
# geometric construction of the primary configuration
# ---------------------------------------------------------------------------

_SQRT3 = math.sqrt(3.0)
# counterclockwise unit-side template triangle
_TEMPLATE = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, _SQRT3 / 2.0]])


def primary_positions(mass_array):
    """Primary coordinates for masses (..., 3); returns (..., 3, 2).

    Unit-side equilateral triangle, mass centroid at the origin, m1 rotated
    onto the positive x axis, m2 in the upper half plane.  Vectorized over
    leading axes.
    """
    m = np.asarray(mass_array, float)
    c = m[..., :, None] * _TEMPLATE  # (..., 3, 2) weighted vertices
    centroid = c.sum(axis=-2)  # (..., 2)
    q = _TEMPLATE - centroid[..., None, :]
    ang = np.arctan2(q[..., 0, 1], q[..., 0, 0])
    ca, sa = np.cos(ang)[..., None], np.sin(ang)[..., None]
    x = ca * q[..., 0] + sa * q[..., 1]
    y = -sa * q[..., 0] + ca * q[..., 1]
    # CCW template + rotation always lands m2 above the axis for m3 > 0;
    # reflect defensively for degenerate edge cases.
    flip = np.where(y[..., 1] < 0.0, -1.0, 1.0)
    return np.stack([x, y * flip[..., None]], axis=-1)


@dataclass(frozen=True)
class PrimaryConfiguration:
    """Frozen rotating-frame configuration of the three primaries."""

    masses: MassTriple
    positions: np.ndarray  # (3, 2), read-only
    K: float
    collision_tol: float = COLLISION_TOL
    k_degenerate: bool = False

    @property
    def mass_array(self):
        return self.masses.array

    def to_dict(self):
        p = self.positions
        d = self.masses.to_dict()
        d.update(
            x1=p[0, 0], y1=p[0, 1], x2=p[1, 0], y2=p[1, 1],
            x3=p[2, 0], y3=p[2, 1], K=self.K,
        )
        if self.k_degenerate:
            d["k_degenerate"] = True
        return d

    def to_json(self, **kw):
        return json.dumps({k: (float(v) if not isinstance(v, bool) else v)
                           for k, v in self.to_dict().items()}, **kw)


def build_configuration(masses, collision_tol=COLLISION_TOL, strict_k=False):
    """Construct the rotating-frame primary configuration for a mass triple.

    The positions are derived geometrically (unit side, zero mass centroid,
    m1 on the positive x axis, m2 above it) rather than from closed-form
    coordinate expressions.  ``K`` is attached for reference; when |K| is
    below 1e-14 the configuration is still well defined geometrically, so by
    default the case is only flagged (``k_degenerate``).  Pass
    ``strict_k=True`` to raise instead.
    """
    if not isinstance(masses, MassTriple):
        masses = MassTriple(*masses)
    K = k_constant(masses)
    k_deg = abs(K) < 1e-14
    if k_deg and strict_k:
        raise DegenerateK(f"K = {K} is numerically zero")
    pos = primary_positions(masses.array)
    pos.setflags(write=False)
    return PrimaryConfiguration(masses, pos, K, float(collision_tol), k_deg)


# ---------------------------------------------------------------------------
# effective potential and derivatives (vectorized kernels)
# ---------------------------------------------------------------------------


def potential_arrays(points, primaries, mass_array, order=2):
    """Raw kernel for W and its derivatives, no collision checks.

    points (..., 2), primaries (..., 3, 2), mass_array (..., 3), mutually
    broadcastable.  Returns (omega, grad, hess) where grad is (..., 2) and
    hess is (..., 3) ordered (W_xx, W_xy, W_yy); entries beyond ``order``
    are None.
    """
    pts = np.asarray(points, float)
    d = pts[..., None, :] - primaries  # (..., 3, 2)
    r2 = np.einsum("...ij,...ij->...i", d, d)
    r = np.sqrt(r2)
    inv_r = 1.0 / r
    omega = 0.5 * np.einsum("...j,...j->...", pts, pts) + np.sum(mass_array * inv_r, axis=-1)
    if order < 1:
        return omega, None, None
    inv_r3 = inv_r / r2
    mr3 = mass_array * inv_r3
    grad = pts - np.einsum("...i,...ij->...j", mr3, d)
    if order < 2:
        return omega, grad, None
    mr5 = mr3 / r2
    dx, dy = d[..., 0], d[..., 1]
    wxx = 1.0 + np.sum(mr5 * (2.0 * dx * dx - dy * dy), axis=-1)
    wxy = 3.0 * np.sum(mr5 * dx * dy, axis=-1)
    wyy = 1.0 + np.sum(mr5 * (2.0 * dy * dy - dx * dx), axis=-1)
    return omega, grad, np.stack([wxx, wxy, wyy], axis=-1)


def potential_third_arrays(points, primaries, mass_array):
    """Third partials of W: (W_xxx, W_xxy, W_xyy, W_yyy), each (...,).

    Needed for derivatives of the Hessian determinant during fold refinement.
    """
    pts = np.asarray(points, float)
    d = pts[..., None, :] - primaries
    r2 = np.einsum("...ij,...ij->...i", d, d)
    r = np.sqrt(r2)
    inv_r5 = 1.0 / (r2 * r2 * r)
    inv_r7 = inv_r5 / r2
    dx, dy = d[..., 0], d[..., 1]
    m = mass_array
    wxxx = np.sum(m * (9.0 * dx * inv_r5 - 15.0 * dx ** 3 * inv_r7), axis=-1)
    wxxy = np.sum(m * (3.0 * dy * inv_r5 - 15.0 * dx ** 2 * dy * inv_r7), axis=-1)
    wxyy = np.sum(m * (3.0 * dx * inv_r5 - 15.0 * dx * dy ** 2 * inv_r7), axis=-1)
    wyyy = np.sum(m * (9.0 * dy * inv_r5 - 15.0 * dy ** 3 * inv_r7), axis=-1)
    return wxxx, wxxy, wxyy, wyyy


def min_primary_distance(points, primaries, mass_array=None):
    """Distance from each point to the nearest primary; broadcasts.

    With ``mass_array`` given, zero-mass primaries are ignored: they are no
    singularity of the potential (their term vanishes identically) and the
    degenerate-limit problem has a genuine equilibrium at such a vertex.
    """
    d = np.asarray(points, float)[..., None, :] - primaries
    dist = np.sqrt(np.einsum("...ij,...ij->...i", d, d))
    if mass_array is not None:
        dist = np.where(np.asarray(mass_array) > 0.0, dist, np.inf)
    return dist.min(axis=-1)


@dataclass(frozen=True)
class PotentialEvaluation:
    """W and derivatives at one point: grad = (W_x, W_y), hessian = (W_xx, W_xy, W_yy)."""

    omega: float
    grad: tuple | None = None
    hessian: tuple | None = None


def evaluate_potential(pos, config, order=2):
    """Evaluate W (and derivatives up to ``order``) at a point.

    Raises CollisionSingularity if the point is within the collision
    tolerance of a primary.
    """
    pos = np.asarray(pos, float)
    if pos.shape != (2,):
        raise ValueError("evaluate_potential expects a single planar point")
    _check_collision(pos, config)
    omega, grad, hess = potential_arrays(pos, config.positions, config.mass_array, order)
    return PotentialEvaluation(
        float(omega),
        None if grad is None else (float(grad[0]), float(grad[1])),
        None if hess is None else (float(hess[0]), float(hess[1]), float(hess[2])),
    )


def _check_collision(pos, config):
    dmin = min_primary_distance(pos, config.positions, config.mass_array)
    if np.any(dmin <= config.collision_tol):
        raise CollisionSingularity(
            f"point {np.asarray(pos).tolist()} within {config.collision_tol} of a primary"
        )


# ---------------------------------------------------------------------------
# dynamics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PhaseState:
    """Rotating-frame state (x, y, vx, vy), angular velocity normalized to 1."""

    x: float
    y: float
    vx: float = 0.0
    vy: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.vx, self.vy)):
            raise ValueError("non-finite phase state")

    @property
    def array(self):
        return np.array([self.x, self.y, self.vx, self.vy])

    @property
    def position(self):
        return np.array([self.x, self.y])


def equations_of_motion(state, config):
    """Time derivative (vx, vy, 2*vy + W_x, -2*vx + W_y) of the state."""
    if isinstance(state, PhaseState):
        state = state.array
    state = np.asarray(state, float)
    pos = state[:2]
    _check_collision(pos, config)
    _, grad, _ = potential_arrays(pos, config.positions, config.mass_array, order=1)
    return np.array([
        state[2],
        state[3],
        2.0 * state[3] + grad[0],
        -2.0 * state[2] + grad[1],
    ])


def jacobi_constant(state, config):
    """C = 2*W(x, y) - (vx^2 + vy^2), conserved along exact motion."""
    if isinstance(state, PhaseState):
        state = state.array
    state = np.asarray(state, float)
    _check_collision(state[:2], config)
    omega, _, _ = potential_arrays(state[:2], config.positions, config.mass_array, order=0)
    return float(2.0 * omega - state[2] ** 2 - state[3] ** 2)
