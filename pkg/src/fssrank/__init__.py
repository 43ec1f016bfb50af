"""Field-normalized research productivity scores and cohort longevity analytics."""

from .cohort import (
    CohortSets,
    CssThresholds,
    EligibilitySet,
    build_cohorts,
    css_thresholds,
    eligible_researchers,
    identify_top,
    identify_unproductive,
)
from .config import DEFAULT_PERIODS, RunConfig
from .errors import ComputationError, ConfigError, FssrankError, ValidationError
from .ingest import LoadError, ValidationReport, load_dataset, load_publications, load_roster, validate_dataset
from .longitudinal import (
    ALL_PERIODS_ON_STAFF,
    PAIRWISE_ON_STAFF,
    CareerReport,
    ConcentrationRow,
    LongevityReport,
    MobilityReport,
    SurvivalFrame,
    build_survival_frame,
    career_progression,
    cohort_intersections,
    concentration_table,
    mobility_report,
    uda_longevity_table,
)
from .model import (
    Authorship,
    Dataset,
    PeriodWindow,
    Publication,
    StaffRecord,
)
from .pipeline import PipelineResult, emit_euler, run_pipeline
from .scoring import (
    CitationBaseline,
    ScoreRecord,
    WeightPolicy,
    WeightScheme,
    WeightTable,
    citation_baseline,
    citation_baselines,
    compute_fss,
    fractional_contribution,
    percentile_ranks,
    score_period,
    years_on_staff,
)
from .synth import IndependenceBaseline, SynthParams, generate_synthetic, independence_baseline

__version__ = "0.1.0"
