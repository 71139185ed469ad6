"""bandwatch: continuous non-functional assessment of a predictive-model pool.

A Thompson-sampling bandit scores one candidate model per incoming trace
against a non-functional property (the built-in scorer measures fairness
as prediction variance across protected groups).  Variable-size windows
close when little value remains at stake; each boundary re-ranks the pool
and puts the best model in production, optionally carrying a fraction of
the accumulated evidence into the next window.  Between boundaries an
assurance tracker can substitute a degrading production model early.
"""

from .bandit import (
    BetaState,
    CandidateSet,
    apply_score,
    beta_pdf,
    replay_observations,
    sample_beta,
    static_select,
    thompson_select,
)
from .domain import (
    DomainError,
    EngineConfig,
    ExecutionTrace,
    FeatureSchema,
    NonFunctionalProperty,
    ObservationEntry,
    ObservationLog,
    SchemaError,
    ScorerError,
    SingularityError,
    SubstitutionEvent,
    UsageError,
    parse_trace,
    read_trace_file,
    serialize_trace,
    write_trace_file,
)
from .harness import (
    DriftSpec,
    EarlyClassification,
    ExperimentReport,
    PenaltyParams,
    RunSetup,
    build_setup,
    classify_early_substitutions,
    penalty,
    residual_error,
    run_experiment,
    synthetic_schema,
    synthetic_stream,
)
from .kernels import backend_name
from .models import (
    DegenerateBucketError,
    NaiveBayesModel,
    SyntheticPredictor,
    make_candidate_pool,
    train_naive_bayes,
)
from .scoring import (
    ScoreResult,
    expand_protected_groups,
    fairness_variance_score,
    make_scorer,
)
from .substitution import (
    AssuranceTracker,
    Ranking,
    assurance_level,
    check_early_substitution,
    compute_ranking,
    end_of_window_substitute,
    ranking_metric,
    update_degradation,
)
from .window import (
    DrawMatrix,
    Engine,
    WinnerEstimate,
    close_window,
    monte_carlo,
    nearest_rank_percentile,
    regret_samples,
    reset_window,
    should_terminate,
)

__version__ = "0.1.0"

__all__ = [
    "AssuranceTracker",
    "BetaState",
    "CandidateSet",
    "DegenerateBucketError",
    "DomainError",
    "DrawMatrix",
    "DriftSpec",
    "EarlyClassification",
    "Engine",
    "EngineConfig",
    "ExecutionTrace",
    "ExperimentReport",
    "FeatureSchema",
    "NaiveBayesModel",
    "NonFunctionalProperty",
    "ObservationEntry",
    "ObservationLog",
    "PenaltyParams",
    "Ranking",
    "RunSetup",
    "SchemaError",
    "ScoreResult",
    "ScorerError",
    "SingularityError",
    "SubstitutionEvent",
    "SyntheticPredictor",
    "UsageError",
    "WinnerEstimate",
    "apply_score",
    "assurance_level",
    "backend_name",
    "beta_pdf",
    "build_setup",
    "check_early_substitution",
    "classify_early_substitutions",
    "close_window",
    "compute_ranking",
    "end_of_window_substitute",
    "expand_protected_groups",
    "fairness_variance_score",
    "make_candidate_pool",
    "make_scorer",
    "monte_carlo",
    "nearest_rank_percentile",
    "parse_trace",
    "penalty",
    "ranking_metric",
    "read_trace_file",
    "regret_samples",
    "replay_observations",
    "reset_window",
    "residual_error",
    "run_experiment",
    "sample_beta",
    "serialize_trace",
    "should_terminate",
    "static_select",
    "synthetic_schema",
    "synthetic_stream",
    "thompson_select",
    "train_naive_bayes",
    "update_degradation",
    "write_trace_file",
]
