"""Equilibrium points, linear stability and mass-space curve mapping for the
planar equilateral restricted four-body problem.

Three primaries of total mass 1 sit at the vertices of a unit equilateral
triangle rotating with unit angular velocity; a massless particle moves in
their field.  This package locates all 8-10 equilibria of the rotating
frame for any mass triple, classifies their linear stability, and maps the
structural curves of the two-parameter mass space: the Routh critical
curve, per-family resonance curves, stability-domain boundaries and the
8/10 bifurcation curve.
"""

from .errors import (
    CollisionSingularity,
    DegenerateK,
    ErfbpError,
    FamilyLost,
    GridTooCoarse,
    LabelAmbiguity,
    MassOutOfRange,
    NotStable,
    NumericalError,
    OpenCurveWarning,
    ValidationError,
)
from .model import (
    MU_ROUTH,
    MassTriple,
    PhaseState,
    PotentialEvaluation,
    PrimaryConfiguration,
    build_configuration,
    equations_of_motion,
    evaluate_potential,
    jacobi_constant,
    routh_quantity,
)
from .equilibria import (
    EquilibriumPoint,
    EquilibriumSet,
    RefineFailure,
    degeneracy_measure,
    find_equilibria,
    inside_primary_triangle,
    refine_root,
)
from .labeling import (
    LABELS,
    REFERENCE_ATLAS,
    REFERENCE_MASSES,
    SWAP12_PERMUTATION,
    SWAP23_PERMUTATION,
    FamilyTrace,
    continue_family,
    continue_labels,
    label_equilibria,
    labeled_point,
)
from .stability import (
    DEGENERATE,
    LINEARLY_STABLE,
    UNSTABLE,
    StabilityReport,
    characteristic_coefficients,
    classify,
    eigenvalues,
    frequencies,
    resonance_residual,
    stability_report,
)
from .scan import (
    DIAG_ROUTH,
    FamilyField,
    GridSpec,
    LineSpec,
    PlanarCurve,
    RegionMap,
    extract_bifurcation_curve,
    family_field,
    hausdorff_distance,
    identify_regions,
    locate_curve_intersection,
    region_box,
    resonance_axis_endpoint,
    routh_curve,
    scan_simplex,
    stability_domain,
    trace_resonance_curve,
)
from .integrator import Trajectory, integrate
from . import rtbp

__version__ = "0.1.0"
