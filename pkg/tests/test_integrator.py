"""Trajectory integration: conservation, reversal, linearized growth."""

import numpy as np
import pytest

from erfbp import (
    LINEARLY_STABLE,
    MassTriple,
    PhaseState,
    ValidationError,
    build_configuration,
    find_equilibria,
    integrate,
    jacobi_constant,
    label_equilibria,
    stability_report,
)


@pytest.fixture(scope="module")
def region1():
    s = label_equilibria(find_equilibria(MassTriple.of(0.005, 0.005)))
    return s


def test_rest_at_stable_equilibrium(region1):
    s = region1
    pt = s.by_label()["L6"]
    assert stability_report(pt, s.config).classification == LINEARLY_STABLE
    traj = integrate(PhaseState(pt.x, pt.y), s.config, 10.0, tol=1e-12)
    assert traj.termination == "completed"
    drift = np.hypot(traj.states[:, 0] - pt.x, traj.states[:, 1] - pt.y)
    assert drift.max() < 1e-10


def test_jacobi_drift_bounded_orbit(region1):
    s = region1
    pt = s.by_label()["L6"]
    state = PhaseState(pt.x + 1e-3, pt.y - 5e-4, 2e-4, -1e-4)
    traj = integrate(state, s.config, 100.0, tol=1e-12)
    assert traj.termination == "completed"
    assert traj.jacobi_drift < 1e-9
    assert abs(traj.jacobi[0] - jacobi_constant(state, s.config)) < 1e-14


def test_drift_scales_with_tolerance(region1):
    s = region1
    pt = s.by_label()["L6"]
    state = PhaseState(pt.x + 5e-3, pt.y, 0.0, 1e-3)
    drifts = {}
    for tol in (1e-8, 1e-9):
        drifts[tol] = integrate(state, s.config, 50.0, tol=tol).jacobi_drift
    assert drifts[1e-9] <= drifts[1e-8] / 5.0


def test_time_reversal(region1):
    # The rotating frame has no plain velocity-reversal symmetry (the
    # Coriolis term flips); the true reversal is y-reflection combined with
    # (vx, vy) -> (-vx, vy), which maps the trajectory into the problem with
    # m2 and m3 exchanged.  On the m2 = m3 line that is the same problem, so
    # integrating "back" must return to the reflected start exactly.
    masses = MassTriple.of(0.8, 0.1)  # m2 = m3 = 0.1
    config = build_configuration(masses)
    state = PhaseState(1.3, 0.2, -0.1, -0.2)
    tol = 1e-12
    fwd = integrate(state, config, 8.0, tol=tol, sample_times=[0.0, 8.0])
    assert fwd.termination == "completed"
    e = fwd.states[-1]
    back = integrate(PhaseState(e[0], -e[1], -e[2], e[3]), config, 8.0,
                     tol=tol, sample_times=[0.0, 8.0])
    f = back.states[-1]
    ret = np.array([f[0], -f[1], -f[2], f[3]])
    assert np.max(np.abs(ret - state.array)) < 100 * tol


def test_unstable_eigenvector_growth():
    s = label_equilibria(find_equilibria(MassTriple.of(0.4, 0.35)))
    # L8 (outer x-axis point) has a real unstable pair at these masses
    pt = s.by_label()["L8"]
    r = stability_report(pt, s.config)
    J = np.array([
        [0, 0, 1, 0],
        [0, 0, 0, 1],
        [r.A11, r.A12, 0, 2],
        [r.A12, r.A22, -2, 0],
    ], float)
    lam, vec = np.linalg.eig(J)
    k = np.argmax(lam.real)
    growth = lam[k].real
    assert growth > 0.1 and abs(lam[k].imag) < 1e-12
    v = vec[:, k].real
    v /= np.linalg.norm(v)
    state0 = np.array([pt.x, pt.y, 0.0, 0.0]) + 1e-6 * v
    t_fold = 1.0 / growth
    times = np.linspace(0.0, t_fold, 30)
    traj = integrate(PhaseState(*state0), s.config, t_fold, tol=1e-12,
                     sample_times=times)
    d = np.linalg.norm(traj.states - np.array([pt.x, pt.y, 0, 0]), axis=1)
    slope = np.polyfit(traj.times, np.log(d), 1)[0]
    assert abs(slope - growth) / growth < 0.05


def test_collision_termination():
    config = build_configuration(MassTriple.of(0.4, 0.35))
    q = config.positions[0]
    # fast radial drop from close range: gravitational focusing beats the
    # Coriolis deflection and the approach distance falls below tolerance
    state = PhaseState(q[0] + 2e-3, q[1], -2.0, 0.0)
    traj = integrate(state, config, 50.0, tol=1e-10)
    assert traj.termination == "collision"
    assert traj.times[-1] < 50.0


def test_escape_termination():
    config = build_configuration(MassTriple.of(0.4, 0.35))
    state = PhaseState(5.0, 0.0, 3.0, 3.0)
    traj = integrate(state, config, 200.0, tol=1e-9)
    assert traj.termination == "escape"
    assert np.hypot(*traj.states[-1, :2]) >= 19.9


def test_tolerance_validation():
    config = build_configuration(MassTriple.of(0.4, 0.35))
    with pytest.raises(ValidationError):
        integrate(PhaseState(0.1, 0.1), config, 1.0, tol=1e-4)
    with pytest.raises(ValidationError):
        integrate(PhaseState(0.1, 0.1), config, 1.0, tol=1e-15)
