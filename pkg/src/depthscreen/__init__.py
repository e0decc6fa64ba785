"""Functional-depth ranking and extreme-scenario screening for day-ahead planning ensembles."""

from .ensemble import (
    BASE_FACETS,
    DERIVED_FACETS,
    FACETS,
    GRID_ENTITY,
    EnsembleValidationError,
    FacetMatrix,
    MissingFacetError,
    PointwiseStats,
    RankMatrix,
    ScenarioEnsemble,
    TiePolicy,
    auc,
    derive_facet,
    pointwise_stats,
    rank_matrix,
)
from .depth import (
    METRICS,
    DepthComputationError,
    DepthParams,
    DepthResult,
    Orientation,
    compute_depth,
    directional_quantile,
    extremal_depth,
    extreme_rank_length_depth,
    h_mode_depth,
    integrated_depth,
    l_infinity_depth,
    modified_band_depth,
    one_sided_variant,
    pointwise_depth,
    random_tukey_depth,
)

__version__ = "0.1.0"
