"""Bayesian feature screening toolkit.

Ranks features by their posterior probability of differing between two
classes under independent conjugate Gaussian models, applies optimal
selection rules on top of the ranking, and ships classical baselines, a
correlated synthetic-data generator, and a consistency-experiment harness.
"""

from ._version import __version__
from .bayes import (
    ClassStats,
    FeatureScore,
    FeatureStats,
    NIWHyper,
    PosteriorHyper,
    PriorSpec,
    compute_stats,
    derive_logL,
    jp_prior,
    log_h,
    log_h_table,
    log_marginal,
    matrix_stats,
    pp_prior,
    update_hyper,
)
from .baselines import (
    BaselineScore,
    bhattacharyya,
    mi_spacing,
    welch_t,
    wilks_lambda,
)
from .errors import (
    AllDegenerate,
    BadSize,
    ConfigInvalid,
    DatasetParseError,
    DegenerateData,
    EmptyClass,
    ImproperPrior,
    NotPD,
    ObfError,
    TooLarge,
)
from .harness import (
    ExperimentPlan,
    MethodSpec,
    MetricRow,
    parse_method,
    posterior_convergence_probe,
    run_plan,
    run_sweep,
    score_selection,
)
from .selection import (
    LossSpec,
    RocCurve,
    ScoreTable,
    SelectionResult,
    roc,
    select_cmnc,
    select_map,
    select_mnc,
    select_mr,
    select_np,
    subset_marginals,
    subset_posterior,
)
from .synth import (
    LabeledMatrix,
    SynthConfig,
    block_covariance,
    desk_config,
    generate,
    full_config,
    truth_set,
)

__all__ = [name for name in dir() if not name.startswith("_")]
