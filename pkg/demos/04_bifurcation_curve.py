"""The 8/10 bifurcation curve over the mass simplex.

Scans equilibrium counts per cell, extracts the closed boundary between the
8- and 10-equilibrium regimes, and refines every boundary point to an exact
degenerate equilibrium (fold).  A moderate resolution keeps this demo at a
few minutes; raise it for production-quality output.
"""

import numpy as np

from erfbp import GridSpec, extract_bifurcation_curve, scan_simplex
from erfbp.io import curve_csv, region_map_csv, write_text

RESOLUTION = 120  # the acceptance suite runs 300

grid = GridSpec.simplex(RESOLUTION)
print(f"scanning {RESOLUTION}x{RESOLUTION} cells ...")
rmap = scan_simplex(grid, scan_resolution=200)
hist = rmap.summary()["count_histogram"]
print("count histogram:", hist)
write_text("count_map.csv", region_map_csv(rmap))

curves = extract_bifurcation_curve(rmap, tol=1e-8)
c = curves[0]
dets = np.asarray(c.meta["fold_dets"], float)
print(f"bifurcation curve: {len(c)} vertices, closed={c.closed}, "
      f"max |det H| at folds = {np.nanmax(np.abs(dets)):.2e}")
print(f"m1 range [{c.vertices[:, 0].min():.4f}, {c.vertices[:, 0].max():.4f}], "
      f"m2 range [{c.vertices[:, 1].min():.4f}, {c.vertices[:, 1].max():.4f}]")
write_text("bifurcation_curve.csv", curve_csv(c))

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    M1, M2 = grid.mesh()
    fig, ax = plt.subplots(figsize=(7, 7))
    counts = np.ma.masked_less(rmap.counts, 0)
    ax.pcolormesh(M1, M2, counts, cmap="RdYlGn_r", shading="nearest",
                  vmin=8, vmax=10)
    ax.plot(c.vertices[:, 0], c.vertices[:, 1], "k-", lw=1.5,
            label="bifurcation curve")
    ax.plot([0, 1], [1, 0], "k--", lw=0.7)
    ax.set_xlabel("m1")
    ax.set_ylabel("m2")
    ax.legend()
    ax.set_title("Equilibrium count over the mass simplex")
    fig.tight_layout()
    fig.savefig("bifurcation_demo.png", dpi=150)
    print("wrote bifurcation_demo.png")
except ImportError:
    print("(matplotlib not available; skipping the figure)")
