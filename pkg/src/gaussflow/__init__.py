"""Anisotropic Gauss curvature flows of convex bodies on the support-function side."""

__version__ = "0.1.0"

from .convex import (AnisotropyPhi, ConvexBody, InterpolationFailure,
                     NonConvexError, RadiiField, boundary_points, kaltenbach_check,
                     polar_dual, radii_matrix, speed_G, support_to_radial, volume,
                     widths_and_centroid)
from .flow import (EXPANDING_DUAL, EXPANDING_PRIMAL, EXPANDING_RADIAL,
                   SHRINKING_PRIMAL, Extinction, FlowConfig, FlowState, StepRejected,
                   cross_check_dual, evolve, initial_state, rescale_unit_volume,
                   rhs_dual, rhs_expanding, rhs_radial, rhs_shrinking, step,
                   verify_rescaling_property)
from .sphere import (ConfigurationError, ScalarField, SphereGrid, build_grid,
                     covariant_gradient_normsq, covariant_hessian, integrate)

__all__ = [
    "AnisotropyPhi", "ConfigurationError", "ConvexBody", "EXPANDING_DUAL",
    "EXPANDING_PRIMAL", "EXPANDING_RADIAL", "Extinction", "FlowConfig", "FlowState",
    "InterpolationFailure", "NonConvexError", "RadiiField", "SHRINKING_PRIMAL",
    "ScalarField", "SphereGrid", "StepRejected", "boundary_points", "build_grid",
    "covariant_gradient_normsq", "covariant_hessian", "cross_check_dual", "evolve",
    "initial_state", "integrate", "kaltenbach_check", "polar_dual", "radii_matrix",
    "rescale_unit_volume", "rhs_dual", "rhs_expanding", "rhs_radial",
    "rhs_shrinking", "speed_G", "step", "support_to_radial", "verify_rescaling_property",
    "volume", "widths_and_centroid",
]
