"""Linear stability at an equilibrium.

Linearizing the rotating-frame equations about an equilibrium gives the
biquadratic characteristic equation

    lam^4 + c2 * lam^2 + c0 = 0,
    c2 = 4 - W_xx - W_yy,    c0 = W_xx * W_yy - W_xy^2.

All four roots are purely imaginary (linear stability) exactly when
c2 > 0, c0 > 0 and c2^2 - 4*c0 >= 0; the two frequencies are then
w^2 = (c2 +- sqrt(c2^2 - 4*c0)) / 2, ordered w1 >= w2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotStable
from .model import potential_arrays

__all__ = [
    "StabilityReport",
    "characteristic_coefficients",
    "classify",
    "frequencies",
    "eigenvalues",
    "resonance_residual",
    "stability_report",
    "LINEARLY_STABLE",
    "DEGENERATE",
    "UNSTABLE",
]

LINEARLY_STABLE = "LinearlyStable"
DEGENERATE = "Degenerate"
UNSTABLE = "Unstable"

#: equality band for boundary detection in classify()
DEGENERACY_BAND = 1e-10


def _hessian_entries(point, config):
    pos = point.position if hasattr(point, "position") else np.asarray(point, float)
    _, _, h = potential_arrays(pos, config.positions, config.mass_array, order=2)
    return float(h[0]), float(h[1]), float(h[2])


def characteristic_coefficients(point, config):
    """(c2, c0) of the characteristic biquadratic at an equilibrium point."""
    a11, a12, a22 = _hessian_entries(point, config)
    return 4.0 - a11 - a22, a11 * a22 - a12 * a12


def classify(c2, c0, band=DEGENERACY_BAND):
    """LinearlyStable / Degenerate / Unstable from the biquadratic coefficients.

    Degenerate means some stability condition holds only as an equality
    within ``band`` (this includes the 1:1 resonance boundary where the
    discriminant vanishes).
    """
    disc = c2 * c2 - 4.0 * c0
    if c2 > band and c0 > band and disc > band:
        return LINEARLY_STABLE
    if c2 > -band and c0 > -band and disc > -band:
        return DEGENERATE
    return UNSTABLE


def frequencies(c2, c0, band=DEGENERACY_BAND):
    """(w1, w2) with w1 >= w2 > 0 for a stable or degenerate point."""
    verdict = classify(c2, c0, band)
    if verdict == UNSTABLE:
        raise NotStable(f"no real frequencies for c2={c2}, c0={c0}")
    disc = max(c2 * c2 - 4.0 * c0, 0.0)
    root = math.sqrt(disc)
    w1 = math.sqrt(max((c2 + root) / 2.0, 0.0))
    w2 = math.sqrt(max((c2 - root) / 2.0, 0.0))
    return w1, w2


def eigenvalues(c2, c0):
    """The four roots of lam^4 + c2*lam^2 + c0 = 0 as complex numbers."""
    lam2 = np.roots([1.0, c2, c0]).astype(complex)
    lams = []
    for z in lam2:
        r = np.sqrt(z)
        lams.extend([r, -r])
    return sorted(lams, key=lambda z: (round(z.real, 12), round(z.imag, 12)))


def resonance_residual(point, config, p, q):
    """q*w1 - p*w2 for coprime integers p >= q >= 1; zero on the p:q curve."""
    if p < q or q < 1:
        raise ValueError("resonance ratio must have p >= q >= 1")
    c2, c0 = characteristic_coefficients(point, config)
    w1, w2 = frequencies(c2, c0)
    return q * w1 - p * w2


@dataclass(frozen=True)
class StabilityReport:
    """Full linear-stability record for one equilibrium point."""

    A11: float
    A12: float
    A22: float
    c2: float
    c0: float
    discriminant: float
    eigenvalues: tuple
    classification: str
    omega1: float | None = None
    omega2: float | None = None

    def to_dict(self):
        return {
            "A11": self.A11, "A12": self.A12, "A22": self.A22,
            "c2": self.c2, "c0": self.c0, "discriminant": self.discriminant,
            "classification": self.classification,
            "omega1": self.omega1, "omega2": self.omega2,
            "eigenvalues": [[z.real, z.imag] for z in self.eigenvalues],
        }


def stability_report(point, config, band=DEGENERACY_BAND):
    """Assemble the StabilityReport for an equilibrium point."""
    a11, a12, a22 = _hessian_entries(point, config)
    c2 = 4.0 - a11 - a22
    c0 = a11 * a22 - a12 * a12
    verdict = classify(c2, c0, band)
    w1 = w2 = None
    if verdict != UNSTABLE:
        w1, w2 = frequencies(c2, c0, band)
    return StabilityReport(
        A11=a11, A12=a12, A22=a22, c2=c2, c0=c0,
        discriminant=c2 * c2 - 4.0 * c0,
        eigenvalues=tuple(eigenvalues(c2, c0)),
        classification=verdict,
        omega1=w1, omega2=w2,
    )


def coefficients_arrays(hess):
    """Vectorized (c2, c0, disc) from Hessian stacks (..., 3) [xx, xy, yy]."""
    a11, a12, a22 = hess[..., 0], hess[..., 1], hess[..., 2]
    c2 = 4.0 - a11 - a22
    c0 = a11 * a22 - a12 * a12
    return c2, c0, c2 * c2 - 4.0 * c0


def stable_mask(c2, c0, disc, band=DEGENERACY_BAND):
    """Vectorized LinearlyStable test (strict inequalities)."""
    return (c2 > band) & (c0 > band) & (disc > band)
