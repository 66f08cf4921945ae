"""Resonance curves, the Routh critical curve, and their intersections.

Reproduces the region-I picture: 1:1, 2:1 and 3:1 resonance curves of the
three stable families L3, L5, L6, the Routh critical curve, and the marked
crossings (the diagonal 1:1 points and the 1:1-Routh intersections).
"""

import numpy as np

from erfbp import (
    GridSpec,
    family_field,
    locate_curve_intersection,
    resonance_axis_endpoint,
    routh_curve,
    trace_resonance_curve,
)
from erfbp.io import curve_csv, write_text

grid = GridSpec.region("I", 300)
fields = {lab: family_field(lab, grid) for lab in ("L3", "L5", "L6")}

curves = {}
for lab in ("L3", "L5", "L6"):
    for (p, q) in ((1, 1), (2, 1), (3, 1)):
        cs = trace_resonance_curve(lab, p, q, grid, field=fields[lab])
        curves[lab, p, q] = cs
        n = sum(len(c) for c in cs)
        print(f"{lab} {p}:{q}  {len(cs)} fragment(s), {n} vertices")
        for k, c in enumerate(cs):
            write_text(f"resonance_{lab}_{p}{q}_{k}.csv", curve_csv(c))

arcs = routh_curve()
routh1 = min(arcs, key=lambda a: a.vertices.max())

print("\nanchors on the m1 = m2 line:")
for lab in ("L3", "L5", "L6"):
    x = locate_curve_intersection(curves[lab, 1, 1][0], "m1=m2", tol=1e-10)
    for pt in x:
        print(f"  {lab} 1:1 crosses the diagonal at ({pt[0]:.7f}, {pt[1]:.7f})")

print("\n1:1-Routh crossings:")
for lab in ("L3", "L6"):
    x = locate_curve_intersection(curves[lab, 1, 1][0], routh1, tol=1e-10,
                                  field=fields[lab])
    for pt in x:
        if pt[0] > 1e-3 and pt[1] > 1e-3:
            print(f"  {lab}: ({pt[0]:.7f}, {pt[1]:.7f})")

pt, err = resonance_axis_endpoint("L6", 1, 1, "m1")
print(f"\nL6 1:1 endpoint on the m1 = 0 edge: m2 = {pt[1]:.9f} "
      f"(extrapolation spread {err:.1e}); Routh ratio = 0.038520896504551")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 7))
    colors = {"L3": "tab:blue", "L5": "tab:green", "L6": "tab:orange"}
    styles = {(1, 1): "-", (2, 1): "--", (3, 1): ":"}
    for (lab, p, q), cs in curves.items():
        for c in cs:
            ax.plot(c.vertices[:, 0], c.vertices[:, 1], styles[p, q],
                    color=colors[lab], lw=1.2,
                    label=f"{lab} {p}:{q}" if c is cs[0] else None)
    for arc in arcs:
        ax.plot(arc.vertices[:, 0], arc.vertices[:, 1], "r-", lw=1.5)
    ax.plot([0, 0.045], [0, 0.045], "k:", lw=0.8)
    ax.set_xlim(0, 0.045)
    ax.set_ylim(0, 0.045)
    ax.set_xlabel("m1")
    ax.set_ylabel("m2")
    ax.legend(fontsize=8, ncol=3)
    ax.set_title("Region I resonance curves and the Routh critical curve")
    fig.tight_layout()
    fig.savefig("resonance_demo.png", dpi=150)
    print("wrote resonance_demo.png")
except ImportError:
    print("(matplotlib not available; skipping the figure)")
