"""Atlas labels, continuation, fold handling, relabeling permutations."""

import numpy as np
import pytest

from erfbp import (
    LABELS,
    REFERENCE_ATLAS,
    REFERENCE_MASSES,
    SWAP12_PERMUTATION,
    SWAP23_PERMUTATION,
    FamilyLost,
    MassTriple,
    build_configuration,
    continue_family,
    continue_labels,
    find_equilibria,
    label_equilibria,
    labeled_point,
    refine_root,
)


def labeled(m1, m2):
    return label_equilibria(find_equilibria(MassTriple.of(m1, m2)))


def test_atlas_points_are_reference_equilibria():
    config = build_configuration(REFERENCE_MASSES)
    for lab, pos in REFERENCE_ATLAS.items():
        r = refine_root(np.array(pos), config)
        assert np.hypot(r.x - pos[0], r.y - pos[1]) < 1e-9, lab


def test_reference_labels_complete():
    s = labeled(0.4, 0.35)
    assert sorted(p.label for p in s.points) == sorted(LABELS)


def test_eight_point_labels():
    s = labeled(0.02, 0.015)
    labs = sorted(p.label for p in s.points)
    assert labs == sorted(f"L{k}" for k in range(1, 9))
    assert not any(p.label is None for p in s.points)


def test_stable_trio_positions_region_one():
    s = labeled(0.02, 0.015)
    by = s.by_label()
    # region-I geometry under the anchor-consistent atlas: L5 and L6 sit in
    # the upper half plane, L3 in the lower one
    assert by["L5"].y > 0
    assert by["L6"].y > 0
    assert by["L3"].y < 0


def test_l5_resonant_at_simo_point():
    s = labeled(0.0027096, 0.0027096)
    from erfbp import stability_report
    r = stability_report(s.by_label()["L5"], s.config)
    assert abs(r.discriminant) < 1e-3  # essentially on the 1:1 curve


def test_continue_family_constant_path():
    s = labeled(0.4, 0.35)
    pt = s.by_label()["L4"]
    tr = continue_family(pt, [REFERENCE_MASSES, REFERENCE_MASSES])
    assert tr.completed
    P = np.array([p for _, p in tr.path])
    assert np.max(np.abs(P - P[0])) < 1e-11


def test_continue_family_fold_pair():
    s = labeled(0.4, 0.35)
    target = MassTriple.of(0.02, 0.015)
    folded, ok = [], []
    for lab in LABELS:
        tr = continue_family(s.by_label()[lab], [REFERENCE_MASSES, target])
        (folded if tr.terminated_by == "fold" else ok).append((lab, tr))
    assert sorted(lab for lab, _ in folded) == ["L10", "L9"]
    (l9, t9), (l10, t10) = sorted(folded)
    # the annihilating pair meets at one degenerate point
    assert np.hypot(*(np.array(t9.fold_position) - t10.fold_position)) < 1e-5
    assert abs(t9.fold_masses.m1 - t10.fold_masses.m1) < 1e-6
    # fold sits strictly between the endpoints
    assert 0.0 < (t9.fold_masses.m1 - 0.02) / (0.4 - 0.02) < 1.0


def test_continuation_path_reversal():
    target = MassTriple.of(0.3, 0.3)  # inside the 10-equilibrium regime
    pos, folds = continue_labels(target)
    assert not folds
    back, _ = continue_labels(REFERENCE_MASSES, source=(target, pos))
    for lab, p in back.items():
        assert np.hypot(*(np.array(p) - REFERENCE_ATLAS[lab])) < 1e-9, lab


def test_continuation_path_reversal_across_fold():
    target = MassTriple.of(0.05, 0.1)  # 8-point regime: L9/L10 fold en route
    pos, folds = continue_labels(target)
    assert sorted(folds) == ["L10", "L9"]
    back, back_folds = continue_labels(REFERENCE_MASSES, source=(target, pos))
    assert not back_folds
    for lab, p in back.items():
        assert np.hypot(*(np.array(p) - REFERENCE_ATLAS[lab])) < 1e-9, lab


def test_labeled_point_family_lost():
    with pytest.raises(FamilyLost):
        labeled_point("L9", (0.02, 0.015))


def test_swap23_label_permutation():
    a = labeled(0.1, 0.2)  # m3 = 0.7
    b = labeled(0.1, 0.7)  # the m2 <-> m3 swap of the first triple
    pa, pb = a.by_label(), b.by_label()
    # which pair annihilates depends on where the straight path crosses the
    # bifurcation curve, so the two 8-point label sets correspond through
    # the documented permutation rather than being equal
    assert sorted(SWAP23_PERMUTATION[l] for l in pa) == sorted(pb)
    for lab, p in pa.items():
        q = pb[SWAP23_PERMUTATION[lab]]
        assert np.hypot(q.x - p.x, q.y - (-p.y)) < 1e-9, lab


def test_swap12_label_permutation():
    a = labeled(0.1, 0.2)
    b = labeled(0.2, 0.1)
    pa, pb = a.by_label(), b.by_label()
    # exchanging m1, m2 relabels the primaries; the plane transforms by the
    # orthogonal map carrying primaries (1, 2, 3) onto (2, 1, 3)
    qa, qb = a.config.positions, b.config.positions
    U = np.stack([qa[0], qa[1]]).T
    V = np.stack([qb[1], qb[0]]).T
    O = V @ np.linalg.inv(U)
    assert np.max(np.abs(O @ qa[2] - qb[2])) < 1e-12
    for lab, p in pa.items():
        img = O @ p.position
        q = pb[SWAP12_PERMUTATION[lab]]
        assert np.hypot(q.x - img[0], q.y - img[1]) < 1e-9, lab


def test_label_stability_verdicts_swap_consistent():
    from erfbp import stability_report
    a = labeled(0.01, 0.03)
    b = labeled(0.01, 0.96)  # swap23 image
    for lab, p in a.by_label().items():
        ra = stability_report(p, a.config)
        rb = stability_report(b.by_label()[SWAP23_PERMUTATION[lab]], b.config)
        assert ra.classification == rb.classification, lab
        assert abs(ra.c2 - rb.c2) < 1e-9 and abs(ra.c0 - rb.c0) < 1e-9
