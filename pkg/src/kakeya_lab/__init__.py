"""Desk-scale computational lab for curved Kakeya/Nikodym set constructions."""

from .errors import (
    ConfigurationViolation,
    DegenerateInstance,
    HeightOutOfSupport,
    IdenticalCurves,
    KakeyaLabError,
    NoSolution,
    NoSuchVector,
    NotCompanionForm,
    PreconditionViolation,
    ResolutionTooFine,
    SingularConfiguration,
    SingularMatrix,
)
from .exact import (
    PolyMatrix,
    Polynomial,
    Rational,
    RationalMatrix,
    char_poly,
    companion,
    count_real_roots,
    eigenvalues_float,
    nilpotency,
)
from .curves import (
    ClaimReport,
    CurveFamily,
    CurveParams,
    LocusDichotomy,
    TubeSpec,
    curve_point,
    curve_tangent,
    hairbrush_claim_check,
    intersect_curves,
    intersection_diameter,
    locus_curve_params,
    locus_dichotomy_test,
    locus_point,
)
from .slices import (
    ExponentThresholds,
    HeightsSolution,
    SliceMatrices,
    aux_matrix,
    centre_matrix,
    check_nondegenerate,
    dimension_lower_bound,
    direction_map_det,
    genfail_exponents,
    iterate_epsilon,
    iteration_fixed_point,
    quartic_q,
    slice_matrices,
    solve_kakeya_four_slice,
    solve_nikodym_three_slice,
    vanishing_order,
    w_matrix,
    x_of_lambda,
)
from .sumsets import (
    Incidence,
    LatticeSet,
    RatioReport,
    TrapeziumReport,
    check_ratio,
    count_trapezia,
    difference_set,
    gen_line_counterexample,
    gen_secular_counterexample,
    random_instance,
    slices_from_construction,
    x_sumset,
)
from .raster import (
    CellSet,
    DimensionFit,
    HairbrushDecomposition,
    TubeFamilySpec,
    ball_lattice_directions,
    box_dimension,
    build_worstcase_kakeya,
    covering_norm,
    hairbrush_decompose,
    rasterize,
    surface_residual,
    union_volume,
)

__version__ = "0.1.0"
