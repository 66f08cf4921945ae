"""The vanishing-mass limit against the restricted three-body problem.

As one primary mass goes to zero the problem reduces to the circular
restricted three-body problem of the two survivors.  Four of the eight
equilibria converge to reduced Lagrange points at O(m); the other four are
satellites of the vanishing primary, approaching its vertex (itself a
triangular point of the reduced problem) only at the (m/h)^(1/3) scale.
This demo measures both rates.
"""

import numpy as np

from erfbp import MassTriple, find_equilibria, rtbp

m1 = 0.4
print(" m2        far-family error   satellite radii")
for m2 in (1e-4, 1e-5, 1e-6, 1e-7):
    masses = MassTriple.of(m1, m2, degenerate_limit=True)
    s = find_equilibria(masses)
    oracle = rtbp.reduced_problem_points(s.config, vanishing_index=1)
    P = s.positions()
    q2 = s.config.positions[1]

    d_or = np.sqrt(((oracle[:, None] - P[None]) ** 2).sum(-1)).min(axis=1)
    occupied = int(np.argmin(np.hypot(*(oracle - q2).T)))
    far_err = max(d_or[k] for k in range(5) if k != occupied)
    sat = np.sort(np.hypot(*(P - q2).T))[:4]
    print(f" {m2:.0e}   {far_err:9.2e}          " +
          " ".join(f"{r:.5f}" for r in sat))

print("\nfar families converge at O(m2); satellite radii shrink by")
print("10^(1/3) = 2.154 per mass decade, the cube-root scaling of the")
print("force balance h*r = m2/r^2 around the vanishing vertex.")
