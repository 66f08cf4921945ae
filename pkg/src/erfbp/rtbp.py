"""Restricted three-body Lagrange points, used as a degenerate-limit oracle.

When one primary mass of the four-body configuration goes to zero, the two
survivors form a circular restricted three-body problem with unit separation
and (after renormalization) unit total mass, so its five libration points
are directly comparable with the four-body equilibrium set.  The collinear
points are located by an independent one-dimensional bracketing solver on
the standard axis equation; the triangular points are closed form.  Nothing
here touches the four-body potential code.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import brentq

__all__ = ["collinear_points", "triangular_points", "lagrange_points",
           "reduced_problem_points"]


def _axis_equation(x, mu):
    """d/dx of the collinear effective potential, primaries at -mu and 1-mu."""
    r1 = x + mu
    r2 = x - 1.0 + mu
    return x - (1.0 - mu) * r1 / abs(r1) ** 3 - mu * r2 / abs(r2) ** 3


def collinear_points(mu):
    """x-coordinates (L1, L2, L3) of the collinear points for mass ratio mu."""
    if not 0.0 < mu < 1.0:
        raise ValueError("mass ratio must lie in (0, 1)")
    eps = 1e-12
    l1 = brentq(_axis_equation, -mu + eps, 1.0 - mu - eps, args=(mu,), xtol=1e-15)
    l2 = brentq(_axis_equation, 1.0 - mu + eps, 2.5, args=(mu,), xtol=1e-15)
    l3 = brentq(_axis_equation, -2.5, -mu - eps, args=(mu,), xtol=1e-15)
    return l1, l2, l3


def triangular_points(mu):
    """L4 (y > 0) and L5 (y < 0), closed form."""
    x = 0.5 - mu
    y = np.sqrt(3.0) / 2.0
    return (x, y), (x, -y)


def lagrange_points(mu):
    """All five points in the standard frame, primaries at (-mu, 0), (1-mu, 0)."""
    l1, l2, l3 = collinear_points(mu)
    l4, l5 = triangular_points(mu)
    return np.array([[l1, 0.0], [l2, 0.0], [l3, 0.0], list(l4), list(l5)])


def reduced_problem_points(config, vanishing_index):
    """Five reduced-problem points mapped into the rotating frame of ``config``.

    ``vanishing_index`` (0, 1 or 2) names the primary whose mass is taken to
    zero.  The two survivors (a, b), in index order, define the reduced
    problem with mass ratio mu = m_b / (m_a + m_b); the standard-frame points
    are carried over by the orientation-preserving isometry that sends
    (-mu, 0) to primary a and (1-mu, 0) to primary b.
    """
    idx = [i for i in range(3) if i != vanishing_index]
    m = config.mass_array
    pa, pb = config.positions[idx[0]], config.positions[idx[1]]
    mu = m[idx[1]] / (m[idx[0]] + m[idx[1]])
    pts = lagrange_points(mu)
    u = pb - pa
    u = u / np.hypot(*u)
    rot = np.array([[u[0], -u[1]], [u[1], u[0]]])
    origin_std = np.array([-mu, 0.0])
    return (pts - origin_std) @ rot.T + pa
