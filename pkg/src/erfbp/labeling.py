"""Family labels L1..L10 and continuation along mass paths.

Labels are defined once, at the reference masses (m1, m2) = (0.4, 0.35)
where all ten equilibria exist, and transported to any other mass triple by
numerical continuation along the straight segment in mass space.  The
reference assignment (the "atlas") is:

* L3, L5, L6 - the three families that admit linear stability for small
  mass parameters.  L5 is the self-symmetric one under the m1 <-> m2
  relabeling (its 1:1 resonance crosses the diagonal near m = 0.0027);
  L3 and L6 are the mirror pair (1:1 crossing near m = 0.0188), with L3
  the one whose 1:1 curve reaches the m2 = 0 axis at Routh's ratio and
  B-type Routh-curve crossing at (0.0201, 0.0181); L6 is its m1 <-> m2
  mirror.  At the reference, L3 = (+0.426, -0.836), L5 = (+0.346, +0.854),
  L6 = (-0.926, -0.187).
* L9, L10 - the pair that merges and disappears on the bifurcation curve
  when continued toward small masses; L9 is the member with smaller y at
  the reference.
* L1, L2 - the remaining two interior points, ordered by distance from
  the origin.
* L4, L7, L8 - the remaining three exterior points, ordered by polar angle
  in [0, 2*pi).

Which pair of families annihilates on the bifurcation curve depends on
where a path crosses it; the straight-segment convention makes the
assignment reproducible.  Labels are invariant under path reversal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .equilibria import (
    DEDUP_RADIUS,
    EquilibriumSet,
    _make_point,
    newton_refine_batch,
)
from .errors import LabelAmbiguity, FamilyLost
from .model import (
    MassTriple,
    build_configuration,
    potential_arrays,
    potential_third_arrays,
    primary_positions,
)

__all__ = [
    "REFERENCE_MASSES",
    "REFERENCE_ATLAS",
    "LABELS",
    "SWAP12_PERMUTATION",
    "SWAP23_PERMUTATION",
    "FamilyTrace",
    "label_equilibria",
    "continue_family",
    "continue_labels",
    "labeled_point",
]

REFERENCE_MASSES = MassTriple(0.4, 0.35, 0.25)

REFERENCE_ATLAS = {
    "L1": (-0.2497650575101346, -0.1119579010934465),
    "L2": (0.0413445650566775, -0.2738152383166329),
    "L3": (0.4264316436106612, -0.8364415601082036),
    "L4": (-0.8117506865764936, 0.8585798000029489),
    "L5": (0.3456085784556152, 0.8539038441963832),
    "L6": (-0.9257575689916129, -0.1874683643001393),
    "L7": (-0.5351643425829705, -1.0591187656789840),
    "L8": (1.1715764601391130, -0.0046673452359258),
    "L9": (-0.1244196021612265, -0.1118101681075292),
    "L10": (0.0426839361546642, 0.1876371066385620),
}

LABELS = tuple(REFERENCE_ATLAS)

#: label permutation induced by exchanging m1 and m2 (measured by
#: continuation between mirror-image mass triples)
SWAP12_PERMUTATION = {
    "L1": "L2", "L2": "L1", "L3": "L6", "L4": "L8", "L5": "L5",
    "L6": "L3", "L7": "L7", "L8": "L4", "L9": "L9", "L10": "L10",
}

#: label permutation induced by exchanging m2 and m3
SWAP23_PERMUTATION = {
    "L1": "L1", "L2": "L10", "L3": "L5", "L4": "L7", "L5": "L3",
    "L6": "L6", "L7": "L4", "L8": "L8", "L9": "L9", "L10": "L2",
}

DEGENERACY_TOL = 1e-8
_STEP_MAX = 0.02
_STEP_MIN = 1e-10
_MOVE_CAP = 0.1


@dataclass(frozen=True)
class FamilyTrace:
    """Sampled continuation history of one labeled family."""

    label: str | None
    path: tuple  # ((MassTriple, (x, y)), ...)
    terminated_by: str  # "path-end" | "fold" | "collision"
    fold_masses: MassTriple | None = None
    fold_position: tuple | None = None

    @property
    def completed(self):
        return self.terminated_by == "path-end"

    @property
    def end_position(self):
        return np.array(self.path[-1][1])


def _segment_masses(m_from, m_to, t):
    m = (1.0 - t) * m_from.array + t * m_to.array
    return MassTriple(m[0], m[1], m[2], degenerate_limit=True)


class _BatchContinuer:
    """Advance a batch of equilibria along one straight mass segment.

    All still-active families share the adaptive step; a family whose Newton
    correction fails at the minimum step is retired as folded.
    """

    def __init__(self, positions, m_from, m_to, tol=1e-12, move_cap=_MOVE_CAP,
                 record=False):
        self.x = np.array(positions, float).reshape(-1, 2)
        self.active = np.ones(len(self.x), bool)
        self.m_from, self.m_to = m_from, m_to
        self.tol = tol
        self.move_cap = move_cap
        self.fold_t = np.full(len(self.x), np.nan)
        self.record = record
        self.history = [[(m_from, tuple(p))] for p in self.x] if record else None

    def run(self):
        t, dt = 0.0, _STEP_MAX
        prev_delta = np.zeros_like(self.x)
        while t < 1.0 - 1e-15 and self.active.any():
            dt = min(dt, 1.0 - t)
            m_next = _segment_masses(self.m_from, self.m_to, t + dt)
            prim = primary_positions(m_next.array)
            idx = np.nonzero(self.active)[0]
            seeds = self.x[idx] + prev_delta[idx] * dt
            pos, status = newton_refine_batch(
                seeds, prim, m_next.array, tol=self.tol,
                max_move=self.move_cap,
            )
            moved = np.hypot(*(pos - self.x[idx]).T)
            ok = (status == 1) & (moved < self.move_cap)
            if ok.all():
                prev_delta[idx] = (pos - self.x[idx]) / dt
                self.x[idx] = pos
                t += dt
                if self.record:
                    for k, i in enumerate(idx):
                        self.history[i].append((m_next, tuple(pos[k])))
                dt = min(dt * 1.6, _STEP_MAX)
            elif dt > _STEP_MIN:
                dt *= 0.25
                prev_delta[idx] = 0.0
            else:
                # the failing families have hit a fold (or singularity)
                self.fold_t[idx[~ok]] = t
                self.active[idx[~ok]] = False
                dt = _STEP_MAX / 8.0
        return self


def _det_and_derivs(pos, prim, mass):
    _, _, h = potential_arrays(pos, prim, mass, order=2)
    a11, a12, a22 = h[0], h[1], h[2]
    det = a11 * a22 - a12 * a12
    wxxx, wxxy, wxyy, wyyy = potential_third_arrays(pos, prim, mass)
    ddx = wxxx * a22 + a11 * wxyy - 2.0 * a12 * wxxy
    ddy = wxxy * a22 + a11 * wyyy - 2.0 * a12 * wxyy
    return det, ddx, ddy


def refine_fold(m_from, m_to, x0, t0, tol=1e-11, max_iter=40):
    """Solve (W_x, W_y, det H) = 0 for (x, y, t) along a mass segment.

    Newton iteration on the extended system locates a fold point exactly:
    the returned position is a degenerate equilibrium of the mass triple at
    parameter t on the segment.  Returns (position, t, det) or None.
    """
    z = np.array([x0[0], x0[1], t0], float)
    h_t = 1e-7
    for _ in range(max_iter):
        m = _segment_masses(m_from, m_to, z[2])
        prim = primary_positions(m.array)
        _, g, hess = potential_arrays(z[:2], prim, m.array, order=2)
        det, ddx, ddy = _det_and_derivs(z[:2], prim, m.array)
        F = np.array([g[0], g[1], det])
        if np.max(np.abs(F)) < tol:
            return z[:2].copy(), float(z[2]), float(det)
        # t-derivatives by central difference through the configuration
        mp = _segment_masses(m_from, m_to, z[2] + h_t)
        mm = _segment_masses(m_from, m_to, z[2] - h_t)
        _, gp, _ = potential_arrays(z[:2], primary_positions(mp.array), mp.array, order=2)
        _, gm, _ = potential_arrays(z[:2], primary_positions(mm.array), mm.array, order=2)
        detp = _det_and_derivs(z[:2], primary_positions(mp.array), mp.array)[0]
        detm = _det_and_derivs(z[:2], primary_positions(mm.array), mm.array)[0]
        J = np.array([
            [hess[0], hess[1], (gp[0] - gm[0]) / (2 * h_t)],
            [hess[1], hess[2], (gp[1] - gm[1]) / (2 * h_t)],
            [ddx, ddy, (detp - detm) / (2 * h_t)],
        ])
        try:
            step = np.linalg.solve(J, F)
        except np.linalg.LinAlgError:
            return None
        # keep t inside the segment
        z_new = z - step
        z_new[2] = min(max(z_new[2], 0.0), 1.0)
        if not np.all(np.isfinite(z_new)):
            return None
        z = z_new
    return None


def continue_family(start, path, tol=1e-12, move_cap=_MOVE_CAP,
                    degeneracy_tol=DEGENERACY_TOL):
    """Trace one family along a polyline of mass triples.

    ``start`` is an EquilibriumPoint (or position) converged at path[0].
    The trace terminates early with reason "fold" when Newton correction
    stalls and the fold refinement confirms a vanishing Hessian determinant,
    or "collision" when the family runs into a primary.
    """
    pos = np.asarray(start.position if hasattr(start, "position") else start, float)
    label = getattr(start, "label", None)
    samples = [(path[0], tuple(pos))]
    for m_from, m_to in zip(path[:-1], path[1:]):
        cont = _BatchContinuer(pos[None, :], m_from, m_to, tol=tol,
                               move_cap=move_cap, record=True).run()
        samples.extend(cont.history[0][1:])
        if not cont.active[0]:
            t_stall = cont.fold_t[0]
            stall_pos = cont.x[0]
            fold = refine_fold(m_from, m_to, stall_pos, t_stall)
            if fold is not None and abs(fold[2]) < degeneracy_tol:
                fm = _segment_masses(m_from, m_to, fold[1])
                return FamilyTrace(label, tuple(samples), "fold",
                                   fold_masses=fm, fold_position=tuple(fold[0]))
            m_stall = _segment_masses(m_from, m_to, t_stall)
            prim = primary_positions(m_stall.array)
            d = np.sqrt(((stall_pos - prim) ** 2).sum(-1)).min()
            reason = "collision" if d < 1e-4 else "fold"
            return FamilyTrace(label, tuple(samples), reason)
        pos = cont.x[0]
    return FamilyTrace(label, tuple(samples), "path-end")


def continue_labels(target_masses, labels=LABELS, source=None, tol=1e-12):
    """Continue atlas families to ``target_masses`` along the straight path.

    Returns (positions dict label -> (x, y), folds dict label -> stall t).
    ``source`` may supply an alternative (masses, {label: position}) start.
    """
    if not isinstance(target_masses, MassTriple):
        target_masses = MassTriple.of(*target_masses, degenerate_limit=True)
    if source is None:
        m0, atlas = REFERENCE_MASSES, REFERENCE_ATLAS
    else:
        m0, atlas = source
    labels = [l for l in labels if l in atlas]
    starts = np.array([atlas[l] for l in labels])
    cont = _BatchContinuer(starts, m0, target_masses, tol=tol).run()
    out, folds = {}, {}
    for k, lab in enumerate(labels):
        if cont.active[k]:
            out[lab] = tuple(cont.x[k])
        else:
            folds[lab] = float(cont.fold_t[k])
    return out, folds


def labeled_point(label, masses, tol=1e-12):
    """EquilibriumPoint of one labeled family at the given masses.

    Raises FamilyLost if the family folds before the target is reached.
    """
    if not isinstance(masses, MassTriple):
        masses = MassTriple.of(*masses, degenerate_limit=True)
    pos, folds = continue_labels(masses, labels=(label,))
    if label not in pos:
        raise FamilyLost(f"{label} folds at t={folds[label]:.6f} on the way to {masses.to_dict()}")
    config = build_configuration(masses)
    return _make_point(np.array(pos[label]), config, label=label)


def label_equilibria(eqset, match_radius=DEDUP_RADIUS, tol=1e-12):
    """Assign atlas labels to an EquilibriumSet by continuation.

    Families that fold on the straight path from the reference drop out of
    the labeling; set points left unmatched are returned with label None
    and, when a fold occurred on the path, a fold flag.
    """
    target = eqset.masses
    positions, folds = continue_labels(target, tol=tol)
    pts = eqset.positions()
    taken = {}
    for lab, p in positions.items():
        if len(pts) == 0:
            break
        d = np.hypot(pts[:, 0] - p[0], pts[:, 1] - p[1])
        j = int(np.argmin(d))
        if d[j] < match_radius:
            if j in taken:
                raise LabelAmbiguity(
                    f"{lab} and {taken[j]} both continue onto point {j} at {target.to_dict()}"
                )
            taken[j] = lab
    fold_happened = bool(folds)
    labeled = tuple(
        pt.with_label(taken[j]) if j in taken
        else pt.with_label(None, fold_flag=fold_happened)
        for j, pt in enumerate(eqset.points)
    )
    return EquilibriumSet(eqset.masses, labeled, eqset.config)
