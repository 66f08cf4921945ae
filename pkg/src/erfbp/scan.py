"""Mass-simplex scans and implicit-curve extraction.

The (m1, m2) parameter plane is explored three ways:

* per-cell equilibrium counts (``scan_simplex``), the raw material for the
  8/10 bifurcation boundary;
* per-family "fields": the position of one labeled family solved on every
  grid cell by row-to-row continuation, from which stability verdicts and
  resonance residuals follow vectorized;
* implicit curves (Routh, resonance, stability boundaries, bifurcation)
  extracted marching-squares style from a residual sampled on the grid and
  refined by bisection along the crossing grid edges.

The 1:1 resonance locus is traced through the discriminant c2^2 - 4*c0,
which changes sign across the curve; the frequency difference w1 - w2 is
nonnegative wherever it is defined and therefore cannot be bracketed.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass, field

import numpy as np

from .equilibria import find_equilibria, newton_refine_batch
from .errors import FamilyLost, NumericalError, OpenCurveWarning, ValidationError
from .labeling import labeled_point, refine_fold
from .model import (
    MU_ROUTH,
    MassTriple,
    potential_arrays,
    primary_positions,
    routh_quantity,
)
from .stability import coefficients_arrays, stable_mask

__all__ = [
    "GridSpec",
    "RegionMap",
    "PlanarCurve",
    "FamilyField",
    "LineSpec",
    "DIAG_ROUTH",
    "region_box",
    "identify_regions",
    "family_field",
    "scan_simplex",
    "routh_curve",
    "trace_resonance_curve",
    "stability_domain",
    "extract_bifurcation_curve",
    "locate_curve_intersection",
    "resonance_axis_endpoint",
    "hausdorff_distance",
]

SIMPLEX_MARGIN = 1e-4

#: m1 = m2 = m crossing of the Routh curve: smaller root of 2m - 3m^2 = 1/27
DIAG_ROUTH = (1.0 - math.sqrt(1.0 - 1.0 / 9.0)) / 3.0


def pool_size(processes=None):
    """Worker count: ERFBP_THREADS caps os.cpu_count()."""
    avail = os.cpu_count() or 1
    cap = os.environ.get("ERFBP_THREADS")
    if cap:
        avail = min(avail, max(1, int(cap)))
    if processes is not None:
        avail = min(avail, max(1, processes))
    return avail


# ---------------------------------------------------------------------------
# grids and regions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    """Rectangular cell grid in the (m1, m2) plane."""

    m1_min: float
    m1_max: float
    m2_min: float
    m2_max: float
    resolution: int
    margin: float = SIMPLEX_MARGIN

    def __post_init__(self):
        if self.resolution < 2:
            raise ValidationError("grid resolution must be at least 2")
        if not (self.m1_min < self.m1_max and self.m2_min < self.m2_max):
            raise ValidationError("empty grid region")

    @classmethod
    def simplex(cls, resolution, margin=SIMPLEX_MARGIN):
        return cls(margin, 1.0 - 2.0 * margin, margin, 1.0 - 2.0 * margin,
                   resolution, margin)

    @classmethod
    def region(cls, name, resolution, margin=SIMPLEX_MARGIN, pad=0.002):
        return cls(*region_box(name, margin, pad), resolution, margin)

    @property
    def m1_centers(self):
        e = np.linspace(self.m1_min, self.m1_max, self.resolution + 1)
        return (e[:-1] + e[1:]) / 2.0

    @property
    def m2_centers(self):
        e = np.linspace(self.m2_min, self.m2_max, self.resolution + 1)
        return (e[:-1] + e[1:]) / 2.0

    @property
    def cell_size(self):
        return ((self.m1_max - self.m1_min) / self.resolution,
                (self.m2_max - self.m2_min) / self.resolution)

    def mesh(self):
        return np.meshgrid(self.m1_centers, self.m2_centers, indexing="ij")

    def simplex_mask(self):
        M1, M2 = self.mesh()
        return (M1 > self.margin) & (M2 > self.margin) & (M1 + M2 < 1.0 - self.margin)


def region_box(name, margin=SIMPLEX_MARGIN, pad=0.002):
    """Bounding box of Lagrange-stability region I, II or III.

    The regions are the connected components of {routh < 0} inside the
    simplex: I at the lower-left corner (m3 dominant), II at the lower-right
    (m1 dominant), III at the upper-left (m2 dominant).
    """
    hi = MU_ROUTH + pad
    if name == "I":
        return (margin, hi, margin, hi)
    if name == "II":
        return (1.0 - 2.0 * hi, 1.0 - 2.0 * margin, margin, hi)
    if name == "III":
        return (margin, hi, 1.0 - 2.0 * hi, 1.0 - 2.0 * margin)
    raise ValidationError(f"unknown region {name!r}")


def identify_regions(resolution=800, margin=SIMPLEX_MARGIN):
    """Locate regions I/II/III as components of {routh < 0} by centroid.

    Returns {name: (mask, grid)} on a full-simplex grid.
    """
    from scipy import ndimage

    grid = GridSpec.simplex(resolution, margin)
    M1, M2 = grid.mesh()
    neg = (routh_quantity((M1, M2)) < 0.0) & grid.simplex_mask()
    lab, n = ndimage.label(neg)
    if n != 3:
        raise NumericalError(f"expected 3 Lagrange-stable components, found {n}")
    out = {}
    for k in range(1, 4):
        mask = lab == k
        c1, c2 = M1[mask].mean(), M2[mask].mean()
        if c1 < 0.5 and c2 < 0.5:
            out["I"] = (mask, grid)
        elif c1 > 0.5:
            out["II"] = (mask, grid)
        else:
            out["III"] = (mask, grid)
    if set(out) != {"I", "II", "III"}:
        raise NumericalError("could not identify regions by centroid")
    return out


@dataclass
class RegionMap:
    """Per-cell scan payload on a GridSpec.

    counts[i, j] is the equilibrium count at cell (m1_centers[i],
    m2_centers[j]), -1 where invalid or failed; stable[label][i, j] is
    1 / 0 / -1 for stable / not stable / family absent.
    """

    grid: GridSpec
    counts: np.ndarray | None = None
    stable: dict = field(default_factory=dict)
    routh_sign: np.ndarray | None = None
    valid: np.ndarray | None = None
    failures: list = field(default_factory=list)

    def to_rows(self):
        M1, M2 = self.grid.mesh()
        labels = sorted(self.stable)
        rows = []
        for i in range(self.grid.resolution):
            for j in range(self.grid.resolution):
                if self.valid is not None and not self.valid[i, j]:
                    continue
                row = {"m1": float(M1[i, j]), "m2": float(M2[i, j])}
                if self.counts is not None:
                    row["count"] = int(self.counts[i, j])
                for lab in labels:
                    row[f"stable{lab}"] = int(self.stable[lab][i, j])
                if self.routh_sign is not None:
                    row["routh_sign"] = int(self.routh_sign[i, j])
                rows.append(row)
        return rows

    def summary(self):
        out = {
            "grid": {
                "m1_min": self.grid.m1_min, "m1_max": self.grid.m1_max,
                "m2_min": self.grid.m2_min, "m2_max": self.grid.m2_max,
                "resolution": self.grid.resolution,
            },
            "cells_valid": int(self.valid.sum()) if self.valid is not None else None,
            "failures": len(self.failures),
        }
        if self.counts is not None:
            vals, freq = np.unique(self.counts[self.counts >= 0], return_counts=True)
            out["count_histogram"] = {int(v): int(f) for v, f in zip(vals, freq)}
        for lab, arr in sorted(self.stable.items()):
            out[f"stable_cells_{lab}"] = int((arr == 1).sum())
        return out


# ---------------------------------------------------------------------------
# per-family fields
# ---------------------------------------------------------------------------


@dataclass
class FamilyField:
    """One labeled family solved on every cell of a grid (NaN where lost)."""

    label: str
    grid: GridSpec
    positions: np.ndarray  # (n, n, 2)
    c2: np.ndarray
    c0: np.ndarray
    disc: np.ndarray

    @property
    def alive(self):
        return np.isfinite(self.positions[..., 0])

    def stable(self, band=1e-10):
        with np.errstate(invalid="ignore"):
            out = stable_mask(np.nan_to_num(self.c2, nan=-1.0),
                              np.nan_to_num(self.c0, nan=-1.0),
                              np.nan_to_num(self.disc, nan=-1.0), band)
        return out & self.alive

    def indicator(self):
        """min(c2, c0, disc): positive exactly on the stable cells."""
        with np.errstate(invalid="ignore"):
            return np.fmin(np.fmin(self.c2, self.c0), self.disc)

    def seed_near(self, m1, m2):
        """Closest alive field position, for warm-starting refinements."""
        i = int(np.clip(np.searchsorted(self.grid.m1_centers, m1), 0,
                        len(self.grid.m1_centers) - 1))
        j = int(np.clip(np.searchsorted(self.grid.m2_centers, m2), 0,
                        len(self.grid.m2_centers) - 1))
        if np.isfinite(self.positions[i, j, 0]):
            return self.positions[i, j]
        alive = np.argwhere(self.alive)
        if len(alive) == 0:
            raise FamilyLost(f"{self.label} nowhere alive on the grid")
        k = np.argmin((alive[:, 0] - i) ** 2 + (alive[:, 1] - j) ** 2)
        return self.positions[alive[k][0], alive[k][1]]


def _solve_family_cells(m1_vals, m2_vals, seeds, tol=1e-12, jump_cap=0.25):
    """Newton-solve a family at a batch of mass cells from given seeds."""
    m1_vals = np.atleast_1d(np.asarray(m1_vals, float))
    m2_vals = np.atleast_1d(np.asarray(m2_vals, float))
    masses = np.stack([m1_vals, m2_vals, 1.0 - m1_vals - m2_vals], axis=-1)
    prim = primary_positions(masses)
    seeds = np.asarray(seeds, float).reshape(-1, 2)
    pos, status = newton_refine_batch(seeds, prim, masses, tol=tol, max_move=jump_cap)
    ok = (status == 1) & (np.hypot(*(pos - seeds).T) < jump_cap)
    pos = pos.copy()
    pos[~ok] = np.nan
    return pos, ok


# moves above this between neighbouring cells trigger substepped continuation
_SUSPECT_MOVE = 0.05


def _advance_cells(m1_src, m2_src, m1_dst, m2_dst, seeds, tol=1e-12,
                   jump_cap=0.25):
    """Carry family positions from source cells to destination cells.

    A direct Newton solve handles the bulk; cells whose solution fails or
    moves suspiciously far (possible branch jump near a fold or a crowded
    corner) are redone with substepped continuation along the mass segment.
    """
    m1_src = np.broadcast_to(np.asarray(m1_src, float), np.shape(m1_dst)).astype(float)
    m2_src = np.broadcast_to(np.asarray(m2_src, float), np.shape(m2_dst)).astype(float)
    m1_dst = np.atleast_1d(np.asarray(m1_dst, float))
    m2_dst = np.atleast_1d(np.asarray(m2_dst, float))
    m1_src, m2_src = np.atleast_1d(m1_src), np.atleast_1d(m2_src)
    seeds = np.asarray(seeds, float).reshape(-1, 2)

    pos, ok = _solve_family_cells(m1_dst, m2_dst, seeds, tol, jump_cap)
    moved = np.hypot(*(np.nan_to_num(pos) - seeds).T)
    suspect = ~ok | (moved > _SUSPECT_MOVE)
    for n_sub in (4, 16, 64):
        idx = np.nonzero(suspect)[0]
        if len(idx) == 0:
            break
        cur = seeds[idx].copy()
        good = np.ones(len(idx), bool)
        for k in range(1, n_sub + 1):
            t = k / n_sub
            m1 = (1 - t) * m1_src[idx] + t * m1_dst[idx]
            m2 = (1 - t) * m2_src[idx] + t * m2_dst[idx]
            step, sok = _solve_family_cells(m1[good], m2[good], cur[good],
                                            tol, jump_cap)
            gi = np.nonzero(good)[0]
            cur[gi[sok]] = step[sok]
            good[gi[~sok]] = False
            if not good.any():
                break
        # per-substep moves are individually capped; the total may be large
        # when the family legitimately sweeps quickly (tiny-mass corners)
        accept = good
        pos[idx[accept]] = cur[accept]
        ok[idx[accept]] = True
        suspect[idx[accept]] = False
        # remaining suspects retry with more substeps
    ok &= ~suspect  # a suspect move never confirmed by substepping is a jump
    pos[~ok] = np.nan
    return pos, ok


def family_field(label, grid, anchor=None, tol=1e-12, jump_cap=0.25):
    """Continue one labeled family across all valid cells of a grid.

    The family is first brought to an anchor cell by continuation from the
    reference masses, then propagated row by row (Newton at each cell seeded
    from its neighbour), with horizontal fill-in passes for cells missed by
    the vertical sweep.  Cells where the family has folded away stay NaN.
    """
    m1c, m2c = grid.m1_centers, grid.m2_centers
    n1, n2 = len(m1c), len(m2c)
    valid = grid.simplex_mask()
    pos = np.full((n1, n2, 2), np.nan)

    candidates = [] if anchor is None else [tuple(anchor)]
    for (i, j) in ((n1 // 2, n2 // 2), (n1 // 4, n2 // 4), (3 * n1 // 4, n2 // 4),
                   (n1 // 4, 3 * n2 // 4), (1, 1), (n1 - 2, 1), (1, n2 - 2)):
        candidates.append((i, j))
    start = None
    for (i, j) in candidates:
        if not valid[i, j]:
            continue
        try:
            pt = labeled_point(label, (m1c[i], m2c[j]))
        except FamilyLost:
            continue
        start = (i, j, pt.position)
        break
    if start is None:
        raise FamilyLost(f"{label} could not be anchored inside the grid")
    ia, ja, p0 = start
    pos[ia, ja] = p0

    def extend_row(i, j_from, step):
        """Walk row i from an already-solved column into unfilled cells."""
        j, cur = j_from, pos[i, j_from]
        while 0 <= j + step < n2:
            j += step
            if not valid[i, j] or np.isfinite(pos[i, j, 0]):
                break
            p, ok = _advance_cells(m1c[i], m2c[j - step], m1c[i], m2c[j],
                                   cur, tol, jump_cap)
            if not ok[0]:
                break
            pos[i, j] = cur = p[0]

    def fill_gaps(i):
        alive = np.nonzero(np.isfinite(pos[i, :, 0]))[0]
        if len(alive) == 0:
            return False
        extend_row(i, alive[0], -1)
        extend_row(i, alive[-1], +1)
        gaps = np.nonzero(np.diff(alive) > 1)[0]
        for g in gaps:
            extend_row(i, alive[g], +1)
            extend_row(i, alive[g + 1], -1)
        return True

    extend_row(ia, ja, +1)
    extend_row(ia, ja, -1)
    for direction in (1, -1):
        i = ia
        while 0 <= i + direction < n1:
            src, i = i, i + direction
            cols = np.nonzero(np.isfinite(pos[src, :, 0]) & valid[i])[0]
            if len(cols) == 0:
                break
            p, ok = _advance_cells(m1c[src], m2c[cols], np.full(len(cols), m1c[i]),
                                   m2c[cols], pos[src, cols], tol, jump_cap)
            pos[i, cols[ok]] = p[ok]
            if not fill_gaps(i):
                break

    # final passes: pull isolated missed cells from any alive neighbour
    # (substepped, so branch identity is preserved); genuine fold voids
    # stay NaN
    for _ in range(3):
        holes = np.argwhere(~np.isfinite(pos[..., 0]) & valid)
        if len(holes) == 0:
            break
        progress = False
        for i, j in holes:
            for di, dj in ((0, -1), (0, 1), (-1, 0), (1, 0)):
                ii, jj = i + di, j + dj
                if not (0 <= ii < n1 and 0 <= jj < n2):
                    continue
                if not np.isfinite(pos[ii, jj, 0]):
                    continue
                p, ok = _advance_cells(m1c[ii], m2c[jj], m1c[i], m2c[j],
                                       pos[ii, jj], tol, jump_cap)
                if ok[0]:
                    pos[i, j] = p[0]
                    progress = True
                    break
        if not progress:
            break

    M1, M2 = grid.mesh()
    masses = np.stack([M1, M2, 1.0 - M1 - M2], axis=-1)
    prim = primary_positions(masses)
    with np.errstate(invalid="ignore", divide="ignore"):
        _, _, hess = potential_arrays(pos, prim, masses, order=2)
        c2, c0, disc = coefficients_arrays(hess)
    dead = ~np.isfinite(pos[..., 0])
    for a in (c2, c0, disc):
        a[dead] = np.nan
    return FamilyField(label, grid, pos, c2, c0, disc)


# ---------------------------------------------------------------------------
# simplex count scan
# ---------------------------------------------------------------------------

_SCAN_RESOLUTION = 200


def _count_rows(args):
    i0, i1, m1c, m2c, margin, scan_resolution = args
    out = np.full((i1 - i0, len(m2c)), -1, np.int16)
    fails = []
    for i in range(i0, i1):
        for j, m2 in enumerate(m2c):
            m1 = m1c[i]
            if not (m1 > margin and m2 > margin and m1 + m2 < 1.0 - margin):
                continue
            try:
                s = find_equilibria(MassTriple.of(m1, m2, degenerate_limit=True),
                                    resolution=scan_resolution, verify=False)
                out[i - i0, j] = s.count
            except Exception as exc:  # recorded per cell, not fatal
                fails.append(f"({m1:.6g},{m2:.6g}): {exc}")
    return i0, out, fails


def scan_simplex(grid, labels=(), count=True, processes=None,
                 scan_resolution=_SCAN_RESOLUTION):
    """Per-cell equilibrium counts, stability verdicts and Routh sign.

    ``labels`` selects families whose per-cell LinearlyStable verdict is
    computed from continuation fields; ``count=False`` skips the much more
    expensive per-cell root counting.
    """
    m1c, m2c = grid.m1_centers, grid.m2_centers
    valid = grid.simplex_mask()
    M1, M2 = grid.mesh()
    rmap = RegionMap(grid, valid=valid)
    rmap.routh_sign = np.where(valid, np.sign(routh_quantity((M1, M2))), 0).astype(np.int8)

    if count:
        n = grid.resolution
        counts = np.full((n, len(m2c)), -1, np.int16)
        nproc = pool_size(processes)
        chunk = max(2, n // (8 * nproc))
        jobs = [(i0, min(i0 + chunk, n), m1c, m2c, grid.margin, scan_resolution)
                for i0 in range(0, n, chunk)]
        if nproc > 1:
            import multiprocessing as mp

            with mp.get_context("fork").Pool(nproc) as pool:
                results = pool.map(_count_rows, jobs)
        else:
            results = [_count_rows(j) for j in jobs]
        for i0, block, fails in results:
            counts[i0:i0 + block.shape[0]] = block
            rmap.failures.extend(fails)
        counts[~valid] = -1
        rmap.counts = counts

    for lab in labels:
        try:
            f = family_field(lab, grid)
        except FamilyLost as exc:
            rmap.failures.append(str(exc))
            rmap.stable[lab] = np.full((grid.resolution, grid.resolution), -1, np.int8)
            continue
        verdict = np.where(f.alive, f.stable().astype(np.int8), np.int8(-1))
        verdict[~valid] = -1
        rmap.stable[lab] = verdict
    return rmap


# ---------------------------------------------------------------------------
# implicit curves: marching squares + edge bisection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlanarCurve:
    """Polyline in the (m1, m2) plane with its defining-equation metadata."""

    kind: str  # "resonance" | "routh" | "bifurcation" | "stability-boundary"
    vertices: np.ndarray
    refinement_tol: float
    label: str | None = None
    p: int | None = None
    q: int | None = None
    closed: bool = False
    meta: dict = field(default_factory=dict, compare=False)

    def __len__(self):
        return len(self.vertices)

    def header(self):
        bits = [f"kind={self.kind}"]
        if self.label:
            bits.append(f"label={self.label}")
        if self.p is not None:
            bits.append(f"p={self.p}")
        if self.q is not None:
            bits.append(f"q={self.q}")
        tol = f"{self.refinement_tol:g}".replace("e-0", "e-").replace("e+0", "e+")
        bits.append(f"tol={tol}")
        return "# " + " ".join(bits)


_MS_TABLE = {
    1: [("b", "l")], 2: [("b", "r")], 3: [("r", "l")], 4: [("r", "t")],
    6: [("b", "t")], 7: [("t", "l")], 8: [("t", "l")], 9: [("b", "t")],
    11: [("r", "t")], 12: [("r", "l")], 13: [("b", "r")], 14: [("b", "l")],
}


def _marching_chains(F, xs, ys):
    """Zero-contour chains of F sampled on the nodes xs x ys.

    Each chain is a list of crossings (P_neg, P_pos, t_lin) along grid edges
    whose endpoint samples have opposite sign; saddle cells are split by the
    corner-mean sign.  Cells touching a NaN sample are skipped.
    """
    crossings = {}
    segments = []

    def cross(i0, j0, i1, j1):
        f0, f1 = F[i0, j0], F[i1, j1]
        p0 = np.array([xs[i0], ys[j0]])
        p1 = np.array([xs[i1], ys[j1]])
        if f0 > f1:
            p0, p1, f0, f1 = p1, p0, f1, f0
        t = f0 / (f0 - f1) if f0 != f1 else 0.5
        return (p0, p1, float(np.clip(t, 0.0, 1.0)))

    # vectorized pre-scan: only visit cells actually crossed by the contour
    pos = F > 0
    fin = np.isfinite(F)
    idx_all = (pos[:-1, :-1] * 1 + pos[1:, :-1] * 2 + pos[1:, 1:] * 4
               + pos[:-1, 1:] * 8)
    ok = fin[:-1, :-1] & fin[1:, :-1] & fin[1:, 1:] & fin[:-1, 1:]
    hot = np.argwhere(ok & (idx_all > 0) & (idx_all < 15))

    for i, j in hot:
        f = (F[i, j], F[i + 1, j], F[i + 1, j + 1], F[i, j + 1])
        idx = int(idx_all[i, j])
        ekey = {"b": (i, j, "h"), "r": (i + 1, j, "v"),
                "t": (i, j + 1, "h"), "l": (i, j, "v")}
        emake = {"b": (i, j, i + 1, j), "r": (i + 1, j, i + 1, j + 1),
                 "t": (i, j + 1, i + 1, j + 1), "l": (i, j, i, j + 1)}
        if idx in (5, 10):
            mean = sum(f) / 4.0
            if (idx == 5) == (mean > 0):
                pairs = [("b", "r"), ("t", "l")]
            else:
                pairs = [("b", "l"), ("r", "t")]
        else:
            pairs = _MS_TABLE[idx]
        for a, b in pairs:
            for name in (a, b):
                k = ekey[name]
                if k not in crossings:
                    crossings[k] = cross(*emake[name])
            segments.append((ekey[a], ekey[b]))

    adj = {}
    for a, b in segments:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)

    visited = set()
    chains = []

    def walk(start):
        chain = [start]
        visited.add(start)
        cur = start
        while True:
            nxt = [e for e in adj[cur] if e not in visited]
            if not nxt:
                # may close the loop back to start
                if len(chain) > 2 and start in adj[cur] and chain[0] != cur:
                    chain.append(start)
                break
            cur = nxt[0]
            visited.add(cur)
            chain.append(cur)
        return chain

    ends = [e for e, nb in adj.items() if len(nb) == 1]
    for e in ends:
        if e not in visited:
            chains.append(walk(e))
    for e in adj:
        if e not in visited:
            chains.append(walk(e))
    return [[crossings[k] for k in chain] for chain in chains]


def _refine_crossings(crossings, provider, tol, max_iter=60):
    """Bisect every (P_neg, P_pos) bracket to |residual| < tol.

    ``provider(points, seeds) -> (values, seeds)`` supplies the true
    residual; brackets the provider cannot reproduce (sign mismatch, NaN)
    fall back to the linearly interpolated crossing.
    """
    P0 = np.array([c[0] for c in crossings], float)
    P1 = np.array([c[1] for c in crossings], float)
    tlin = np.array([c[2] for c in crossings], float)
    lin = P0 + tlin[:, None] * (P1 - P0)
    n = len(P0)
    seeds = provider.initial_seeds(lin)
    f0, seeds = provider(P0, seeds)
    f1, seeds = provider(P1, seeds)
    ok = np.isfinite(f0) & np.isfinite(f1) & (np.sign(f0) != np.sign(f1))
    lo, hi = P0.copy(), P1.copy()
    swap = ok & (f0 > 0)
    lo[swap], hi[swap] = P1[swap], P0[swap]
    out = lin.copy()
    active = ok.copy()
    for _ in range(max_iter):
        if not active.any():
            break
        mid = (lo + hi) / 2.0
        fm, seeds = provider(mid, seeds, mask=active)
        with np.errstate(invalid="ignore"):
            done = active & (np.abs(fm) < tol)
        out[done] = mid[done]
        nan = active & ~np.isfinite(fm)
        out[nan] = (lo[nan] + hi[nan]) / 2.0
        active &= ~done & ~nan
        neg = active & (fm < 0)
        pos = active & (fm >= 0) & np.isfinite(fm)
        lo[neg] = mid[neg]
        hi[pos] = mid[pos]
        out[active] = (lo[active] + hi[active]) / 2.0
    return out


class RouthProvider:
    """Residual m1*m2 + m1*m3 + m2*m3 - 1/27."""

    def initial_seeds(self, points):
        return None

    def __call__(self, points, seeds, mask=None):
        return routh_quantity((points[:, 0], points[:, 1])), seeds


class FamilyResidualProvider:
    """Residuals that require solving a labeled family at each mass point."""

    def __init__(self, label, kind="indicator", p=1, q=1, field=None,
                 tol=1e-12):
        self.label = label
        self.kind = kind
        self.p, self.q = p, q
        self.field = field
        self.tol = tol

    def initial_seeds(self, points):
        seeds = np.empty_like(points)
        for k, (m1, m2) in enumerate(points):
            if self.field is not None:
                try:
                    seeds[k] = self.field.seed_near(m1, m2)
                    continue
                except FamilyLost:
                    pass
            seeds[k] = labeled_point(self.label, (m1, m2)).position
        return seeds

    def _values(self, c2, c0, disc):
        if self.kind == "indicator":
            return np.fmin(np.fmin(c2, c0), disc)
        if self.p == self.q:
            return disc
        w1 = np.sqrt(np.clip((c2 + np.sqrt(np.clip(disc, 0.0, None))) / 2.0, 0.0, None))
        w2 = np.sqrt(np.clip((c2 - np.sqrt(np.clip(disc, 0.0, None))) / 2.0, 0.0, None))
        vals = self.q * w1 - self.p * w2
        vals[disc < 0] = np.nan
        return vals

    def __call__(self, points, seeds, mask=None):
        points = np.asarray(points, float)
        idx = np.arange(len(points)) if mask is None else np.nonzero(mask)[0]
        vals = np.full(len(points), np.nan)
        if len(idx) == 0:
            return vals, seeds
        sub = points[idx]
        pos, ok = _solve_family_cells(sub[:, 0], sub[:, 1], seeds[idx], tol=self.tol)
        masses = np.stack([sub[:, 0], sub[:, 1], 1.0 - sub.sum(axis=1)], axis=-1)
        prim = primary_positions(masses)
        with np.errstate(invalid="ignore", divide="ignore"):
            _, _, hess = potential_arrays(pos, prim, masses, order=2)
            c2, c0, disc = coefficients_arrays(hess)
            v = self._values(c2, c0, disc)
        v[~ok] = np.nan
        vals[idx] = v
        new_seeds = seeds.copy()
        new_seeds[idx[ok]] = pos[ok]
        return vals, new_seeds


def _chains_to_curves(chains, provider, tol, kind, label=None, p=None, q=None,
                      min_vertices=2):
    curves = []
    for chain in chains:
        if len(chain) < min_vertices:
            continue
        closed = len(chain) > 3 and chain[0] is chain[-1]
        pts = _refine_crossings(chain[:-1] if closed else chain, provider, tol)
        if closed:
            pts = np.vstack([pts, pts[:1]])
        curves.append(PlanarCurve(kind, pts, tol, label=label, p=p, q=q,
                                  closed=closed))
    curves.sort(key=lambda c: -len(c))
    return curves


def _clip_chain_to_simplex(vertices, residual_1d, tol):
    """Split a refined polyline at the simplex edges, solving the exact
    edge crossings with the curve's own residual restricted to the edge."""
    def inside(v):
        return v[0] >= 0.0 and v[1] >= 0.0 and v[0] + v[1] <= 1.0

    def edge_point(v_in, v_out):
        # which edge is crossed
        for a, b, c in ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (1.0, 1.0, 1.0)):
            s_in = a * v_in[0] + b * v_in[1] - c
            s_out = a * v_out[0] + b * v_out[1] - c
            if np.sign(s_in) != np.sign(s_out) and s_out != s_in:
                # parametrize the edge line and bisect the residual on it
                if (a, b) == (1.0, 0.0):
                    line = lambda t: np.array([c, t])
                    t0, t1 = v_in[1], v_out[1]
                elif (a, b) == (0.0, 1.0):
                    line = lambda t: np.array([t, c])
                    t0, t1 = v_in[0], v_out[0]
                else:
                    line = lambda t: np.array([t, 1.0 - t])
                    t0, t1 = v_in[0], v_out[0]
                f0 = residual_1d(line(t0))
                f1 = residual_1d(line(t1))
                if np.sign(f0) == np.sign(f1):
                    # chord fallback
                    s = s_in / (s_in - s_out)
                    return v_in + s * (v_out - v_in)
                for _ in range(80):
                    tm = (t0 + t1) / 2.0
                    fm = residual_1d(line(tm))
                    if abs(fm) < tol:
                        break
                    if np.sign(fm) == np.sign(f0):
                        t0, f0 = tm, fm
                    else:
                        t1 = tm
                return line((t0 + t1) / 2.0)
        return None

    pieces, cur = [], []
    for k, v in enumerate(vertices):
        if inside(v):
            if k > 0 and not inside(vertices[k - 1]):
                ep = edge_point(v, vertices[k - 1])
                if ep is not None:
                    cur.append(ep)
            cur.append(v)
        else:
            if cur:
                ep = edge_point(cur[-1], v)
                if ep is not None:
                    cur.append(ep)
                pieces.append(np.array(cur))
                cur = []
    if cur:
        pieces.append(np.array(cur))
    return pieces


def routh_curve(resolution=1500, tol=1e-12):
    """Arcs of the Routh critical curve inside the mass simplex.

    The zero set is an ellipse; its intersection with the open simplex is
    three arcs whose endpoints on the simplex edges are the analytic roots
    of m(1-m) = 1/27.  Grid-edge sign changes are bisected on the exact
    polynomial down to ``tol`` in residual, and the edge endpoints are
    solved on the edges themselves.
    """
    xs = np.linspace(-0.05, 1.05, resolution + 1)
    M1, M2 = np.meshgrid(xs, xs, indexing="ij")
    F = routh_quantity((M1, M2))
    chains = _marching_chains(F, xs, xs)
    raw = _chains_to_curves(chains, RouthProvider(), tol, "routh")

    def residual_1d(point):
        return float(routh_quantity((point[0], point[1])))

    arcs = []
    for c in raw:
        for piece in _clip_chain_to_simplex(c.vertices, residual_1d, tol):
            if len(piece) >= 2:
                arcs.append(PlanarCurve("routh", piece, tol))
    arcs.sort(key=lambda c: -len(c))
    return arcs


def trace_resonance_curve(label, p, q, grid=None, tol=1e-8, field=None):
    """Zero set of the p:q resonance residual of one labeled family.

    ``p >= q >= 1``.  For 1:1 the discriminant is the traced residual (same
    zero set, sign-definite frequency difference); for p > q the residual
    q*w1 - p*w2 is traced inside the stability region.  Fragments (the curve
    may be cut by folds or the grid border) come back as separate curves.
    """
    if p < q or q < 1:
        raise ValidationError("resonance ratio must have p >= q >= 1")
    if grid is None:
        grid = GridSpec.region("I", 400)
    if field is None:
        field = family_field(label, grid)
    if p == q:
        R = field.disc.copy()
    else:
        with np.errstate(invalid="ignore"):
            w1 = np.sqrt(np.clip((field.c2 + np.sqrt(np.clip(field.disc, 0, None))) / 2, 0, None))
            w2 = np.sqrt(np.clip((field.c2 - np.sqrt(np.clip(field.disc, 0, None))) / 2, 0, None))
            R = q * w1 - p * w2
            R[field.disc < 0] = np.nan
    provider = FamilyResidualProvider(label, "resonance", p, q, field)
    chains = _marching_chains(R, grid.m1_centers, grid.m2_centers)
    return _chains_to_curves(chains, provider, tol, "resonance", label=label, p=p, q=q)


def stability_domain(label, grid, tol=1e-8, field=None):
    """LinearlyStable cell map of one family plus its boundary curve.

    The boundary is the zero contour of min(c2, c0, disc), refined on the
    true family; in practice (and by construction near the corner regions)
    it coincides with the family's 1:1 resonance curve where both exist.
    """
    if field is None:
        field = family_field(label, grid)
    rmap = RegionMap(grid, valid=grid.simplex_mask())
    M1, M2 = grid.mesh()
    rmap.routh_sign = np.where(rmap.valid, np.sign(routh_quantity((M1, M2))), 0).astype(np.int8)
    verdict = np.where(field.alive, field.stable().astype(np.int8), np.int8(-1))
    verdict[~rmap.valid] = -1
    rmap.stable[label] = verdict
    provider = FamilyResidualProvider(label, "indicator", field=field)
    chains = _marching_chains(field.indicator(), grid.m1_centers, grid.m2_centers)
    curves = _chains_to_curves(chains, provider, tol, "stability-boundary", label=label)
    return rmap, curves


# ---------------------------------------------------------------------------
# bifurcation curve
# ---------------------------------------------------------------------------


def _merging_pair_seed(m1, m2, scan_resolution=_SCAN_RESOLUTION):
    """Midpoint of the two closest equilibria (the annihilating pair)."""
    s = find_equilibria(MassTriple.of(m1, m2, degenerate_limit=True),
                        resolution=scan_resolution, verify=False)
    P = s.positions()
    if len(P) < 2:
        return None
    d2 = ((P[:, None, :] - P[None, :, :]) ** 2).sum(-1)
    d2[np.diag_indices(len(P))] = np.inf
    i, j = np.unravel_index(np.argmin(d2), d2.shape)
    return (P[i] + P[j]) / 2.0


def _refine_bifurcation_vertex(args):
    """Count-bisect one boundary edge, then polish the fold exactly."""
    pa, pb, tol, scan_resolution = args

    def count_at(m):
        s = find_equilibria(MassTriple.of(m[0], m[1], degenerate_limit=True),
                            resolution=scan_resolution, verify=False)
        return s.count

    lo, hi = np.asarray(pa, float), np.asarray(pb, float)  # lo: 10-side
    if count_at(lo) < count_at(hi):
        lo, hi = hi, lo
    for _ in range(6):
        mid = (lo + hi) / 2.0
        if count_at(mid) >= 10:
            lo = mid
        else:
            hi = mid
    seed = _merging_pair_seed(lo[0], lo[1], scan_resolution)
    if seed is not None:
        m_lo = MassTriple.of(*lo, degenerate_limit=True)
        m_hi = MassTriple.of(*hi, degenerate_limit=True)
        fold = refine_fold(m_lo, m_hi, seed, 0.5)
        if fold is not None:
            fpos, t, det = fold
            m = (1.0 - t) * lo + t * hi
            return m, (float(fpos[0]), float(fpos[1])), det
    # fall back to deep count bisection
    while np.hypot(*(hi - lo)) > tol:
        mid = (lo + hi) / 2.0
        if count_at(mid) >= 10:
            lo = mid
        else:
            hi = mid
    mid = (lo + hi) / 2.0
    seed = _merging_pair_seed(lo[0], lo[1], scan_resolution)
    det = np.nan
    if seed is not None:
        masses = MassTriple.of(*mid, degenerate_limit=True)
        prim = primary_positions(masses.array)
        _, _, h = potential_arrays(seed, prim, masses.array, order=2)
        det = float(h[0] * h[2] - h[1] ** 2)
    return mid, (None if seed is None else (float(seed[0]), float(seed[1]))), det


def extract_bifurcation_curve(region_map, tol=1e-8, processes=None,
                              scan_resolution=_SCAN_RESOLUTION):
    """Boundary between the 8- and 10-equilibrium regimes, fold-refined.

    ``region_map`` must carry counts (from ``scan_simplex``).  Each crossing
    of the count field is refined by bisection on the segment joining the
    neighbouring cell centers, then polished by a Newton solve of the
    extended system (grad W = 0, det Hess W = 0), so every returned vertex
    is a degenerate-equilibrium mass point.  Vertex metadata records the
    merging-family position and its Hessian determinant.
    """
    if region_map.counts is None:
        raise ValidationError("region_map carries no counts")
    grid = region_map.grid
    F = region_map.counts.astype(float) - 9.0
    F[region_map.counts < 0] = np.nan
    chains = _marching_chains(F, grid.m1_centers, grid.m2_centers)
    chains = [c for c in chains if len(c) >= 4]
    if not chains:
        raise NumericalError("no 8/10 count boundary inside the scanned region")

    curves = []
    nproc = pool_size(processes)
    for chain in chains:
        closed = chain[0] is chain[-1]
        work = chain[:-1] if closed else chain
        jobs = [(c[0], c[1], tol, scan_resolution) for c in work]
        if nproc > 1 and len(jobs) > 8:
            import multiprocessing as mp

            with mp.get_context("fork").Pool(nproc) as pool:
                results = pool.map(_refine_bifurcation_vertex, jobs)
        else:
            results = [_refine_bifurcation_vertex(j) for j in jobs]
        verts = np.array([r[0] for r in results])
        folds = [r[1] for r in results]
        dets = np.array([r[2] for r in results])
        if closed:
            verts = np.vstack([verts, verts[:1]])
        if not closed:
            warnings.warn("bifurcation boundary is not closed in the scanned "
                          "region; enlarge the grid", OpenCurveWarning)
        curves.append(PlanarCurve("bifurcation", verts, tol, closed=closed,
                                  meta={"fold_positions": folds, "fold_dets": dets}))
    curves.sort(key=lambda c: -len(c))
    return curves


# ---------------------------------------------------------------------------
# intersections and axis endpoints
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LineSpec:
    """Line a*m1 + b*m2 = c in the mass plane."""

    a: float
    b: float
    c: float
    name: str = ""

    @classmethod
    def parse(cls, spec):
        if isinstance(spec, LineSpec):
            return spec
        s = spec.replace(" ", "")
        table = {
            "m1=m2": (1.0, -1.0, 0.0),
            "m2=m1": (1.0, -1.0, 0.0),
            "m1=m3": (2.0, 1.0, 1.0),
            "m3=m1": (2.0, 1.0, 1.0),
            "m2=m3": (1.0, 2.0, 1.0),
            "m3=m2": (1.0, 2.0, 1.0),
            "m1+m2=1": (1.0, 1.0, 1.0),
            "m3=0": (1.0, 1.0, 1.0),
        }
        if s in table:
            return cls(*table[s], name=s)
        for pre, ab in (("m1=", (1.0, 0.0)), ("m2=", (0.0, 1.0))):
            if s.startswith(pre):
                return cls(ab[0], ab[1], float(s[len(pre):]), name=s)
        raise ValidationError(f"cannot parse line spec {spec!r}")

    def residual(self, points):
        points = np.asarray(points, float)
        return self.a * points[..., 0] + self.b * points[..., 1] - self.c

    def point_at(self, t):
        n = math.hypot(self.a, self.b)
        base = np.array([self.a, self.b]) * (self.c / (n * n))
        tang = np.array([-self.b, self.a]) / n
        return base + t * tang

    def param_of(self, point):
        n = math.hypot(self.a, self.b)
        tang = np.array([-self.b, self.a]) / n
        return float(np.dot(np.asarray(point, float), tang))


def _provider_for(curve, field=None):
    if curve.kind == "routh":
        return RouthProvider()
    if curve.kind == "resonance":
        return FamilyResidualProvider(curve.label, "resonance", curve.p, curve.q, field)
    if curve.kind == "stability-boundary":
        return FamilyResidualProvider(curve.label, "indicator", field=field)
    raise ValidationError(f"no residual form for curve kind {curve.kind!r}")


def _scalar(provider, point, seed):
    v, seed = provider(np.asarray(point, float)[None, :],
                       None if seed is None else seed[None, :])
    return float(v[0]), (None if seed is None else seed[0])


def locate_curve_intersection(curve, other, tol=1e-8, field=None):
    """Intersections of a PlanarCurve with a line spec or another curve.

    Line crossings are refined by bisecting the curve's own residual along
    the line; curve-curve crossings by a damped finite-difference Newton on
    the pair of residuals.  Returns a list of (m1, m2) points (possibly
    empty).
    """
    prov_a = _provider_for(curve, field)
    out = []
    if isinstance(other, (str, LineSpec)):
        line = LineSpec.parse(other)
        sign = line.residual(curve.vertices)
        for k in np.nonzero(np.sign(sign[:-1]) != np.sign(sign[1:]))[0]:
            seed = prov_a.initial_seeds(curve.vertices[k][None, :])
            seed = None if seed is None else seed[0]
            # expand a bracket along the line around the chord crossing
            ta = line.param_of(curve.vertices[k])
            tb = line.param_of(curve.vertices[k + 1])
            tm = 0.5 * (ta + tb)
            w = max(abs(tb - ta), 1e-7)
            t0 = t1 = None
            for _ in range(40):
                f0, seed = _scalar(prov_a, line.point_at(tm - w), seed)
                f1, seed = _scalar(prov_a, line.point_at(tm + w), seed)
                if np.isfinite(f0) and np.isfinite(f1) and np.sign(f0) != np.sign(f1):
                    t0, t1 = tm - w, tm + w
                    break
                w *= 1.7
            if t0 is None:
                continue
            for _ in range(80):
                tc = (t0 + t1) / 2.0
                fm, seed = _scalar(prov_a, line.point_at(tc), seed)
                if not np.isfinite(fm) or abs(fm) < tol:
                    break
                if np.sign(fm) == np.sign(f0):
                    t0, f0 = tc, fm
                else:
                    t1, f1 = tc, fm
            out.append(line.point_at((t0 + t1) / 2.0))
        # crossings from adjacent polyline segments can coincide
        dedup = []
        for p in out:
            if all(np.hypot(*(p - q)) > 10 * tol for q in dedup):
                dedup.append(p)
        return dedup

    prov_b = _provider_for(other, field)
    cands = []
    for pa0, pa1 in zip(curve.vertices[:-1], curve.vertices[1:]):
        for pb0, pb1 in zip(other.vertices[:-1], other.vertices[1:]):
            x = _segment_intersection(pa0, pa1, pb0, pb1)
            if x is not None:
                cands.append(x)
    # near-tangent crossings may produce no segment crossing: add local
    # minima of the vertex-distance field as extra Newton seeds
    A, B = curve.vertices, other.vertices
    d2 = ((A[:, None, :] - B[None, :, :]) ** 2).sum(-1)
    step_a = np.hypot(*(np.diff(A, axis=0).T)).max() if len(A) > 1 else 0.0
    step_b = np.hypot(*(np.diff(B, axis=0).T)).max() if len(B) > 1 else 0.0
    thr2 = (4.0 * max(step_a, step_b)) ** 2
    for i in range(len(A)):
        for j in range(len(B)):
            if d2[i, j] > thr2:
                continue
            window = d2[max(0, i - 1):i + 2, max(0, j - 1):j + 2]
            if d2[i, j] <= window.min():
                cands.append((A[i] + B[j]) / 2.0)
    for x in cands:
        seed_a = prov_a.initial_seeds(x[None, :])
        seed_b = prov_b.initial_seeds(x[None, :])
        seed_a = None if seed_a is None else seed_a[0]
        seed_b = None if seed_b is None else seed_b[0]
        pt = _newton2d(prov_a, prov_b, x, seed_a, seed_b, tol)
        if pt is not None:
            out.append(pt)
    # deduplicate crossings found from neighbouring candidates
    dedup = []
    for p in out:
        if all(np.hypot(*(p - q)) > 100 * tol for q in dedup):
            dedup.append(p)
    return dedup


def _segment_intersection(a0, a1, b0, b1):
    da, db = a1 - a0, b1 - b0
    den = da[0] * db[1] - da[1] * db[0]
    if den == 0.0:
        return None
    w = b0 - a0
    s = (w[0] * db[1] - w[1] * db[0]) / den
    u = (w[0] * da[1] - w[1] * da[0]) / den
    if 0.0 <= s <= 1.0 and 0.0 <= u <= 1.0:
        return a0 + s * da
    return None


def _newton2d(prov_a, prov_b, x0, seed_a, seed_b, tol, max_iter=30):
    x = np.asarray(x0, float).copy()
    h = 1e-8
    for _ in range(max_iter):
        fa, seed_a = _scalar(prov_a, x, seed_a)
        fb, seed_b = _scalar(prov_b, x, seed_b)
        if not (np.isfinite(fa) and np.isfinite(fb)):
            return None
        if abs(fa) < tol and abs(fb) < tol:
            return x
        J = np.empty((2, 2))
        for k in range(2):
            xp = x.copy()
            xp[k] += h
            fap, seed_a = _scalar(prov_a, xp, seed_a)
            fbp, seed_b = _scalar(prov_b, xp, seed_b)
            J[0, k] = (fap - fa) / h
            J[1, k] = (fbp - fb) / h
        try:
            step = np.linalg.solve(J, np.array([fa, fb]))
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(step)):
            return None
        x = x - np.clip(step, -1e-3, 1e-3)
    return None


def resonance_axis_endpoint(label, p, q, axis, eps=(1e-6, 2e-6), bracket=None,
                            tol=1e-12, samples=80):
    """Simplex-edge endpoint of a resonance curve by degenerate-limit extrapolation.

    The residual zero is solved on the lines {axis = eps_k} with the family
    continued in degenerate-limit mode, then extrapolated linearly to
    axis = 0.  Returns (endpoint (m1, m2), error_estimate), the estimate
    being the spread of the extrapolation inputs.
    """
    if axis not in ("m1", "m2", "m3"):
        raise ValidationError("axis must be m1, m2 or m3")
    lo, hi = bracket if bracket is not None else (5e-4, MU_ROUTH + 0.01)

    def line_point(eps_val, s):
        if axis == "m1":
            return np.array([eps_val, s])
        if axis == "m2":
            return np.array([s, eps_val])
        return np.array([s, 1.0 - eps_val - s])  # m3 = eps along m1 = s

    roots = []
    for e in eps:
        svals = np.linspace(lo, hi, samples)
        pts = np.array([line_point(e, s) for s in svals])
        prov = FamilyResidualProvider(label, "resonance", p, q, tol=tol)
        seeds = np.tile(prov.initial_seeds(pts[:1])[0], (len(pts), 1))
        # walk along the line, warm-starting each solve from the previous
        vals = np.full(len(pts), np.nan)
        seed = seeds[0]
        for k, pt in enumerate(pts):
            vals[k], seed = _scalar(prov, pt, seed)
        good = np.isfinite(vals)
        sign_change = np.nonzero(good[:-1] & good[1:] &
                                 (np.sign(vals[:-1]) != np.sign(vals[1:])))[0]
        if len(sign_change) == 0:
            raise NumericalError(
                f"no {p}:{q} sign change for {label} on {axis}={e:g} within {lo}..{hi}")
        k = sign_change[0]
        s0, s1, f0 = svals[k], svals[k + 1], vals[k]
        seed = seeds[0]
        for _ in range(70):
            sm = (s0 + s1) / 2.0
            fm, seed = _scalar(prov, line_point(e, sm), seed)
            if not np.isfinite(fm):
                break
            if np.sign(fm) == np.sign(f0):
                s0, f0 = sm, fm
            else:
                s1 = sm
            if s1 - s0 < 1e-13:
                break
        roots.append(((s0 + s1) / 2.0, e))

    (s_a, e_a), (s_b, e_b) = roots[0], roots[1]
    s0 = s_a + (s_a - s_b) * e_a / (e_b - e_a)
    endpoint = line_point(0.0, s0)
    return endpoint, abs(s_a - s_b)


def hausdorff_distance(P, Q):
    """Symmetric Hausdorff distance between two point sets (N, 2), (M, 2)."""
    P = np.asarray(P, float).reshape(-1, 2)
    Q = np.asarray(Q, float).reshape(-1, 2)
    d2 = ((P[:, None, :] - Q[None, :, :]) ** 2).sum(-1)
    return float(max(np.sqrt(d2.min(axis=1)).max(), np.sqrt(d2.min(axis=0)).max()))
