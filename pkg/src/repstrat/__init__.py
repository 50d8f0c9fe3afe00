"""Representative stratified audit sampling.

Plan per-stratum sample sizes from dollar-amount claim populations, draw
reproducible stratified samples, and estimate total overpayment with lower
confidence bounds using the difference, separate-ratio, and combined-ratio
estimators.
"""

__version__ = "0.1.0"

from .allocation import (
    AllocationPlan,
    PrecisionSpec,
    allocate,
    normal_cdf,
    normal_quantile,
    overall_alpha,
    parse_plan_spec,
    predicted_overall_precision,
    rep_condition_value,
    representativeness_condition,
    resolve_case,
    stratum_sample_size,
)
from .errors import (
    ConsistencyError,
    CsvError,
    DomainError,
    RepStratError,
    SpecError,
    StratificationGapError,
    StructureError,
)
from .estimation import (
    AuditedItem,
    EstimateReport,
    StratumSampleStats,
    combined_ratio_estimate,
    difference_estimate,
    load_audited_csv,
    lower_confidence_bound,
    overpayment,
    parse_sample_summaries,
    separate_ratio_estimate,
    sparse_stats_for_frame,
    sparse_stratum_stats,
    stats_for_frame,
    stratum_sample_stats,
)
from .montecarlo import (
    CoverageReport,
    SyntheticPopulationSpec,
    generate_population,
    lognormal_params_for,
    run_coverage,
)
from .population import (
    ClaimRecord,
    PopulationFrame,
    StratumBoundary,
    load_population,
    parse_strata_config,
    stratify,
    stratum_stats,
)
from .sampling import (
    RepresentativenessReport,
    SampleSet,
    check_representativeness,
    draw_sample,
    draw_stratum_indices,
    representativeness_from_means,
)
