"""Locate, label and classify all equilibria for a chosen mass triple.

Walks through the basic objects: the rotating-frame configuration, the
effective potential, the equilibrium set with family labels, and the
linear-stability report of each point.  Saves a figure when matplotlib is
available.
"""

import numpy as np

from erfbp import (
    MassTriple,
    build_configuration,
    evaluate_potential,
    find_equilibria,
    label_equilibria,
    stability_report,
)

# Figure-fig2-style cases: eight equilibria near the simplex boundary,
# ten in the central regime.
for m1, m2 in ((0.02, 0.015), (0.4, 0.35)):
    masses = MassTriple.of(m1, m2)
    config = build_configuration(masses)
    print(f"\nmasses m1={masses.m1:.3f} m2={masses.m2:.3f} m3={masses.m3:.3f}"
          f"   K={config.K:+.4f}")
    print("primaries:")
    for k, (x, y) in enumerate(config.positions, start=1):
        print(f"  m{k} at ({x:+.6f}, {y:+.6f})")

    eqs = label_equilibria(find_equilibria(masses))
    print(f"{eqs.count} equilibria:")
    for p in sorted(eqs.points, key=lambda p: p.label and int(p.label[1:])):
        r = stability_report(p, config)
        freq = (f"  w1={r.omega1:.4f} w2={r.omega2:.4f}"
                if r.omega1 is not None else "")
        print(f"  {p.label:>4}  ({p.x:+.6f}, {p.y:+.6f})  |grad|={p.grad_norm:.1e}"
              f"  {r.classification:<15}{freq}")

# The effective potential at a sample point, with derivatives.
ev = evaluate_potential((0.5, 0.2), config, order=2)
print(f"\nW(0.5, 0.2) = {ev.omega:.6f}, grad = {np.round(ev.grad, 6)}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, 2, figsize=(11, 5))
    for ax, (m1, m2) in zip(axes, ((0.02, 0.015), (0.4, 0.35))):
        masses = MassTriple.of(m1, m2)
        config = build_configuration(masses)
        eqs = label_equilibria(find_equilibria(masses))
        xs = np.linspace(-1.6, 1.6, 500)
        X, Y = np.meshgrid(xs, xs)
        from erfbp.model import potential_arrays

        _, g, _ = potential_arrays(np.stack([X, Y], -1), config.positions,
                                   config.mass_array, order=1)
        ax.contour(X, Y, g[..., 0], [0.0], colors="tab:red", linewidths=0.8)
        ax.contour(X, Y, g[..., 1], [0.0], colors="tab:blue", linewidths=0.8)
        ax.plot(*config.positions.T, "ko", ms=8)
        for p in eqs.points:
            ax.plot(p.x, p.y, "go", ms=5)
            ax.annotate(p.label, (p.x, p.y), fontsize=8,
                        xytext=(4, 4), textcoords="offset points")
        ax.set_aspect("equal")
        ax.set_title(f"m1={m1}, m2={m2}: {eqs.count} equilibria")
    fig.tight_layout()
    fig.savefig("equilibria_demo.png", dpi=150)
    print("\nwrote equilibria_demo.png")
except ImportError:
    print("\n(matplotlib not available; skipping the figure)")
