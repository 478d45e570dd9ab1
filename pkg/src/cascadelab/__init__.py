"""Cascade analytics and simulation toolkit.

Subpackages: ``corpus`` (data model and ingestion), ``topo`` (per-cascade
metrics), ``stats`` (CCDF, MLE fitting, K-S, chi-squared ranking), ``sim``
(seeded cascade generators with credibility erosion), ``mmd`` (corpus
comparison), ``plotting`` (figure rendering), ``cli`` (command line).
"""

from .corpus import (
    Cascade,
    CascadeNode,
    Corpus,
    Label,
    ParseError,
    UserProfile,
    ValidationError,
    attach_profiles,
    corpus_summary,
    make_corpus,
    parse_cascades,
    read_profiles,
    validate_cascade,
    write_cascades,
)
from .mmd import MmdReport, cascade_histogram, compare_corpora, mmd2
from .sim import (
    CeeConfig,
    CeeState,
    GenConfig,
    ScenarioConfig,
    effective_rate,
    run_ensemble,
    run_meanfield,
    sequential_generate,
)
from .stats import (
    CcdfCurve,
    ChiSquaredRanking,
    FitError,
    FitResult,
    KsResult,
    attribute_matrix,
    ccdf,
    fit_mle,
    ks_exponential,
    ks_test,
    label_group_summary,
    rank_families,
    rank_features,
    verification_ratios,
)
from .topo import (
    DepthTimeProfile,
    MetricSeries,
    UndefinedMetricError,
    depth,
    depth_time_profile,
    diameter,
    max_breadth,
    metric_series,
    reception_time_stats,
    source_distance_stats,
    structural_virality,
)

__version__ = "0.1.0"
