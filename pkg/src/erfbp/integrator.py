"""Trajectory integration in the rotating frame.

A thin wrapper over scipy's DOP853 (8th-order embedded Runge-Kutta with
5th/3rd-order error control, adaptive steps) driving the rotating-frame
equations of motion, with collision and escape termination events and
Jacobi-constant drift bookkeeping.  The integrator exists to validate the
vector field and the linearization, not to do production orbit work.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import ValidationError
from .model import PhaseState, min_primary_distance, potential_arrays

__all__ = ["Trajectory", "integrate", "ESCAPE_RADIUS"]

ESCAPE_RADIUS = 20.0


@dataclass(frozen=True)
class Trajectory:
    """Integrated samples (t_k, state_k) plus conservation diagnostics."""

    times: np.ndarray  # (N,)
    states: np.ndarray  # (N, 4) rows (x, y, vx, vy)
    jacobi: np.ndarray  # (N,)
    jacobi_drift: float
    termination: str  # "completed" | "collision" | "escape"

    @property
    def samples(self):
        return list(zip(self.times, self.states))

    def final_state(self):
        s = self.states[-1]
        return PhaseState(*s)


def _rhs(config):
    prim, mass = config.positions, config.mass_array

    def f(_, y):
        _, g, _ = potential_arrays(y[:2], prim, mass, order=1)
        return (y[2], y[3], 2.0 * y[3] + g[0], -2.0 * y[2] + g[1])

    return f


def _jacobi_series(states, config):
    pos = states[:, :2]
    omega, _, _ = potential_arrays(pos, config.positions, config.mass_array, order=0)
    return 2.0 * omega - states[:, 2] ** 2 - states[:, 3] ** 2


def integrate(state0, config, t_end, tol=1e-12, sample_times=None):
    """Integrate from ``state0`` to ``t_end`` with local error tolerance ``tol``.

    ``tol`` must lie in [1e-14, 1e-6] and is applied as both rtol and atol.
    Termination is "collision" if the particle enters the collision
    tolerance of a primary (including step-size underflow there), "escape"
    beyond |q| = 20, otherwise "completed".  ``sample_times`` requests dense
    output at specific times; by default the accepted steps are returned.
    """
    if not 1e-14 <= tol <= 1e-6:
        raise ValidationError(f"tolerance {tol} outside [1e-14, 1e-6]")
    if isinstance(state0, PhaseState):
        y0 = state0.array
    else:
        y0 = np.asarray(state0, float)
        PhaseState(*y0)  # validates finiteness
    if min_primary_distance(y0[:2], config.positions, config.mass_array) <= config.collision_tol:
        raise ValidationError("initial state inside the collision tolerance")

    def collision(_, y):
        return min_primary_distance(y[:2], config.positions, config.mass_array) - config.collision_tol

    def escape(_, y):
        return np.hypot(y[0], y[1]) - ESCAPE_RADIUS

    collision.terminal = True
    escape.terminal = True

    sol = solve_ivp(
        _rhs(config), (0.0, float(t_end)), y0, method="DOP853",
        rtol=tol, atol=tol, dense_output=sample_times is not None,
        t_eval=None if sample_times is None else np.asarray(sample_times, float),
        events=(collision, escape),
    )
    if sol.status == -1:
        # step-size underflow: close approach to a primary
        termination = "collision"
    elif sol.status == 1:
        termination = "collision" if len(sol.t_events[0]) else "escape"
    else:
        termination = "completed"

    times = sol.t
    states = sol.y.T
    jac = _jacobi_series(states, config)
    drift = float(np.max(np.abs(jac - jac[0]))) if len(jac) else 0.0
    return Trajectory(times, states, jac, drift, termination)
