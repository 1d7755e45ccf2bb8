"""Capacity of distinguishable identities under threshold verification on
the unit hypersphere: cap-measure numerics, packing bounds, sufficient and
exact admissibility checks, random-codebook union bounds with Monte Carlo
validation, a synthetic concentrated-identity pipeline, and dataset audits.
"""

__version__ = "0.1.0"

from .audit import (
    AdmissibilityReport,
    EmbeddingDataset,
    MmcrReport,
    empirical_capacity_at,
    estimate_admissibility,
    mean_alignment_check,
    mmcr_report,
)
from .capacity import (
    AdmissibilityCertificate,
    BoundaryPoint,
    CenteredParams,
    FixedCapacityReport,
    FullCapVerdict,
    OperatingPoint,
    RateCurvePoint,
    boundary_curves,
    calibrate_threshold,
    effective_separation,
    fixed_capacity_report,
    full_cap_admissibility,
    rate_point,
    sufficient_admissibility_check,
)
from .packing import (
    PackingBounds,
    SphericalCode,
    greedy_packing,
    load_code,
    max_independent_set,
    packing_bounds,
    restricted_packing,
    save_code,
    validate_code,
)
from .random_code import (
    RandomCodeConfig,
    SeparationEstimate,
    codebook_size_for_pair_prob,
    mc_separation_success,
    pair_failure_prob,
    random_capacity_lb,
    random_vs_fixed_check,
    separation_profile,
    union_lower_bound,
)
from .rng import Seed
from .sphere import (
    LogMeasure,
    angle_between,
    angle_to_threshold,
    cap_measure,
    log_cap_measure,
    min_pairwise_angle,
    sample_cap,
    sample_uniform_sphere,
    threshold_to_angle,
    unit_vector,
    unit_vectors,
)
from .synthetic import (
    IdentitySampleSet,
    SyntheticPipeline,
    empirical_centered_check,
    estimate_center_and_radius,
    export_views,
    load_pipeline,
    sample_views,
    save_pipeline,
)

__all__ = [name for name in dir() if not name.startswith("_")]
