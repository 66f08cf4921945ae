"""Stability domains of L3, L5, L6 in region I and their nesting.

Maps the per-cell LinearlyStable verdict for each family, extracts the
domain boundaries, and shows that each boundary coincides with the family's
own 1:1 resonance curve.  On the half of region I with m1 >= m2 the domains
nest (the mirror chain holds on the other half with L3 and L6 exchanged).
"""

import numpy as np

from erfbp import (
    GridSpec,
    family_field,
    hausdorff_distance,
    stability_domain,
    trace_resonance_curve,
)
from erfbp.io import region_map_csv, write_text

grid = GridSpec.region("I", 300)
M1, M2 = grid.mesh()
half = grid.simplex_mask() & (M1 >= M2)

masks, boundaries = {}, {}
for lab in ("L3", "L5", "L6"):
    field = family_field(lab, grid)
    rmap, curves = stability_domain(lab, grid, field=field)
    masks[lab] = field.stable()
    boundaries[lab] = curves
    res = trace_resonance_curve(lab, 1, 1, grid, field=field)
    d = hausdorff_distance(np.vstack([c.vertices for c in curves]),
                           np.vstack([c.vertices for c in res]))
    print(f"{lab}: {int(masks[lab].sum())} stable cells; boundary vs 1:1 "
          f"curve Hausdorff distance {d:.2e} (cell = {max(grid.cell_size):.2e})")
    write_text(f"stability_domain_{lab}.csv", region_map_csv(rmap))

n5 = int((masks["L5"] & half).sum())
n6 = int((masks["L6"] & half).sum())
n3 = int((masks["L3"] & half).sum())
print(f"\nnesting on the m1 >= m2 half: |L5| = {n5} < |L6| = {n6} < |L3| = {n3}")
print("L5 inside L6:", bool(np.all(~(masks['L5'] & half) | masks['L6'])))
print("L6 inside L3:", bool(np.all(~(masks['L6'] & half) | masks['L3'])))

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 7))
    total = sum(masks[lab].astype(int) for lab in masks)
    ax.pcolormesh(M1, M2, np.ma.masked_equal(total, 0), cmap="YlGnBu",
                  shading="nearest", vmin=0, vmax=3)
    for lab, color in (("L3", "tab:blue"), ("L5", "tab:green"),
                       ("L6", "tab:orange")):
        for c in boundaries[lab]:
            ax.plot(c.vertices[:, 0], c.vertices[:, 1], color=color, lw=1.4,
                    label=lab if c is boundaries[lab][0] else None)
    ax.set_xlabel("m1")
    ax.set_ylabel("m2")
    ax.legend()
    ax.set_title("Number of stable families per cell (region I)")
    fig.tight_layout()
    fig.savefig("stability_domains_demo.png", dpi=150)
    print("wrote stability_domains_demo.png")
except ImportError:
    print("(matplotlib not available; skipping the figure)")
