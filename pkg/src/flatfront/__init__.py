"""Complete flat fronts in hyperbolic 3-space.

Annular theta kernel, slit maps and Gauss-map data on an annulus, the
two-singularity moduli solver, the immersion/metric engine, and mesh export.
"""

from .theta import (
    ThetaContext,
    ThetaPoleError,
    theta1,
    dtheta1,
    log_slope,
    pair_slope,
    outer_pair_slope,
)
from .annulus import (
    AT_INFINITY,
    CanonicalModuli,
    DegenerateConfigurationError,
    RepresentationError,
    fit_gauss_ratio,
    gauss_map,
    gauss_map_deriv,
    gauss_map_square,
    gauss_ratio,
    gauss_square_winding,
    inv_gauss_gap,
    is_at_infinity,
    potential,
    second_gauss_map,
    slit_map,
    theta_quotient,
)
from .solver import (
    BracketError,
    RangeNormalizationError,
    SolverTrace,
    residuals,
    solve_canonical,
)
from .immersion import (
    HalfSpacePoint,
    MetricSample,
    RotationalModuli,
    brioschi_curvature,
    first_form,
    first_form_rotational,
    hyperbolic_distance,
    immerse,
    immerse_from_gauss_data,
    immerse_rotational,
    intrinsic_curvature,
    intrinsic_curvature_rotational,
    klein_map,
    rotational_gauss_data,
    shape_ratio,
)
from .meshing import (
    SurfaceMesh,
    canonical_mesh,
    euler_characteristic,
    rotational_mesh,
    write_obj,
    write_ply,
)
from .validation import (
    ValidationReport,
    boundary_ranges_ok,
    interior_grid,
    validate_moduli,
)

__version__ = "0.1.0"

__all__ = [
    "ThetaContext",
    "ThetaPoleError",
    "theta1",
    "dtheta1",
    "log_slope",
    "pair_slope",
    "outer_pair_slope",
    "AT_INFINITY",
    "CanonicalModuli",
    "DegenerateConfigurationError",
    "RepresentationError",
    "fit_gauss_ratio",
    "gauss_map",
    "gauss_map_deriv",
    "gauss_map_square",
    "gauss_ratio",
    "gauss_square_winding",
    "inv_gauss_gap",
    "is_at_infinity",
    "potential",
    "second_gauss_map",
    "slit_map",
    "theta_quotient",
    "BracketError",
    "RangeNormalizationError",
    "SolverTrace",
    "residuals",
    "solve_canonical",
    "HalfSpacePoint",
    "MetricSample",
    "RotationalModuli",
    "brioschi_curvature",
    "first_form",
    "first_form_rotational",
    "hyperbolic_distance",
    "immerse",
    "immerse_from_gauss_data",
    "immerse_rotational",
    "intrinsic_curvature",
    "intrinsic_curvature_rotational",
    "klein_map",
    "rotational_gauss_data",
    "shape_ratio",
    "SurfaceMesh",
    "canonical_mesh",
    "euler_characteristic",
    "rotational_mesh",
    "write_obj",
    "write_ply",
    "ValidationReport",
    "boundary_ranges_ok",
    "interior_grid",
    "validate_moduli",
    "__version__",
]
