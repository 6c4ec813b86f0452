"""Competitors ``w = alpha u`` on regions ``V``: gaps, distances, bounds and certificates."""
from .bounds import (
    closed_form_gap_bump,
    closed_form_gap_profile,
    closed_form_gap_rect,
    closed_form_gap_sublevel,
    profile_sigma_threshold,
    rect_min_half_width,
)
from .gap import (
    FluxCheck,
    GapResult,
    boundary_lengths,
    bump_a2_integral,
    bv_distance,
    bv_distance_bound,
    case3_flux_check,
    divergence_identity_residual,
    energy_gap,
    field_bv_norm,
    volume_integral,
)
from .regions import (
    BUMP,
    CASE_TAGS,
    PROFILE,
    SUBLEVEL,
    CompetitorRegion,
    build_region,
    check_localisation,
    chord_delta,
    measure_constants,
)
from .search import (
    ABOVE,
    ALPHA_GRID,
    AUDIT,
    Certificate,
    Family,
    ScanRow,
    alpha_candidates,
    choose_eps,
    default_families,
    largest_certified_sigma,
    plan_family,
    scan_family,
    search_certificate,
    sigma_candidates,
    tau_gap,
)
