"""Orbit integration sanity checks: conservation and linear growth rates.

Integrates a few rotating-frame trajectories, monitors the Jacobi constant,
and measures the e-folding rate of a small displacement from an unstable
equilibrium against the eigenvalue predicted by the linearization.
"""

import numpy as np

from erfbp import (
    MassTriple,
    PhaseState,
    find_equilibria,
    integrate,
    label_equilibria,
    stability_report,
)
from erfbp.io import trajectory_csv, write_text

eqs = label_equilibria(find_equilibria(MassTriple.of(0.005, 0.005)))
config = eqs.config

# quasi-periodic motion near the stable L6
pt = eqs.by_label()["L6"]
state = PhaseState(pt.x + 1e-3, pt.y, 0.0, 5e-4)
traj = integrate(state, config, 200.0, tol=1e-12)
print(f"near L6: {len(traj.times)} steps, termination={traj.termination}, "
      f"Jacobi drift {traj.jacobi_drift:.2e}")
write_text("orbit_near_L6.csv", trajectory_csv(traj))

# growth along the unstable direction of L1
pt = eqs.by_label()["L1"]
r = stability_report(pt, config)
J = np.array([[0, 0, 1, 0], [0, 0, 0, 1],
              [r.A11, r.A12, 0, 2], [r.A12, r.A22, -2, 0]], float)
lam, vec = np.linalg.eig(J)
k = int(np.argmax(lam.real))
v = vec[:, k].real
v /= np.linalg.norm(v)
state0 = np.array([pt.x, pt.y, 0.0, 0.0]) + 1e-6 * v
T = 1.0 / lam[k].real
traj = integrate(PhaseState(*state0), config, T, tol=1e-12,
                 sample_times=np.linspace(0, T, 40))
d = np.linalg.norm(traj.states - np.array([pt.x, pt.y, 0, 0]), axis=1)
slope = np.polyfit(traj.times, np.log(d), 1)[0]
print(f"L1 unstable mode: eigenvalue {lam[k].real:.6f}, measured growth "
      f"rate {slope:.6f} ({100 * abs(slope - lam[k].real) / lam[k].real:.2f}% off)")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    pt6 = eqs.by_label()["L6"]
    state = PhaseState(pt6.x + 1e-3, pt6.y, 0.0, 5e-4)
    traj = integrate(state, config, 400.0, tol=1e-12,
                     sample_times=np.linspace(0, 400, 8000))
    fig, axes = plt.subplots(1, 2, figsize=(11, 5))
    axes[0].plot(traj.states[:, 0], traj.states[:, 1], lw=0.4)
    axes[0].plot(pt6.x, pt6.y, "r*", ms=10)
    axes[0].set_aspect("equal")
    axes[0].set_title("libration around L6")
    axes[1].semilogy(traj.times, np.abs(traj.jacobi - traj.jacobi[0]) + 1e-18)
    axes[1].set_title("Jacobi-constant drift")
    axes[1].set_xlabel("t")
    fig.tight_layout()
    fig.savefig("trajectory_demo.png", dpi=150)
    print("wrote trajectory_demo.png")
except ImportError:
    print("(matplotlib not available; skipping the figure)")
