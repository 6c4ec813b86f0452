"""Planar geometry and quadrature used by the competitor constructions."""
from .fields import SampledField2D, ScalarField
from .geometry import (
    ProofConstants,
    profile_k,
    profile_ode_residual,
    profile_phi,
    profile_phi_sq_integral,
    radial_bump,
    radial_bump_ext,
    unit_ball_measure,
)
from .levelset import TAU_LEVEL, LevelSetCurve, extract_level_set, surface_integral
from .quadrature import (
    ImplicitRegion,
    arc_integral,
    column_integral,
    gauss_panels,
    graph_integral,
    region_integral,
)
