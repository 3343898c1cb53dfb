"""warpconv: numerical laboratory for warped-product metric spaces."""

from .core import (
    TAU,
    BaseSpace,
    BumpLatticeProfile,
    BumpProfile,
    ConstantProfile,
    DomainError,
    FiberSpace,
    HypothesisError,
    InvalidDescriptor,
    PolylineCurve,
    SumOfBumpsProfile,
    SurfacePoint,
    TabulatedProfile,
    WarpedSpace,
    WarpingProfile,
    bilipschitz_lambda,
    cinch_bump,
    circle_base,
    curve_length,
    diameter_upper_bound,
    interval_base,
    lp_profile_distance,
    profile_from_descriptor,
    ridge_bump,
    sandwich_bounds,
    segment_length,
    theta_energy,
)
from .convergence import (
    AuditRow,
    ConvergenceReport,
    DiscrepancyResult,
    PairProbe,
    StageRow,
    audit_theorem_bounds,
    default_grid,
    discrepancy_estimate,
    flat_upper_bound,
    gh_upper_bound,
    reference_space,
    run_family_experiment,
)
from .families import LimitMetric, SequenceFamily
from .geodesy import (
    ANISOTROPY_BOUND,
    GeodesicResult,
    GridGraph,
    GridSizeError,
    GridSpec,
    cinch_limit_distance,
    clairaut_distance,
    flat_product_distance,
    grid_distance,
    level_set_distance,
    neighborhood_offsets,
    ridge_bypass_bound,
    ridge_bypass_improves,
    stencil_anisotropy,
    taxi_upper_bound,
)
from .ret import (
    RETSpace,
    ball_boundary,
    mix_threshold,
    ret_distance,
    ret_distance_brute,
    ret_point_distance,
)
from .sampling import (
    SamplePlan,
    default_plan,
    halton_points,
    radical_inverse,
    surface_samples,
)
from .torus3 import (
    BumpField,
    ConstantField,
    Grid3Graph,
    Grid3Spec,
    Plan3,
    Point3,
    SumOfBumpsField,
    Torus3Family,
    bilip_lambda3,
    cube_samples,
    diameter3_upper_bound,
    grid3_distance,
    limit3_distance,
    run_torus3_experiment,
    stencil_anisotropy3,
)

__version__ = "0.1.0"
