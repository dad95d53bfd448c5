"""Polya-urn mixture density estimators (EW and SB), their Gibbs samplers, and MISE rate bounds."""

from .config import ConfigError, ExperimentConfig, Mode, parse_config
from .experiment import run_comparison, run_posterior_experiment, run_rate_curves
from .model import (
    BasePrior,
    ParamSchedules,
    ShapeError,
    TrueDensity,
    base_convolution,
    ew_density_eval,
    f0_eval,
    f0_sample,
    mv_product_density_eval,
    polya_urn_sample,
    sb_density_eval,
)
from .rates import (
    NEG_INF,
    RateInputs,
    RateTerms,
    comparison_ratios,
    mise_order_ew,
    mise_order_largep,
    mise_order_sb,
    optimal_alpha_ew,
    prior_mise,
    rate_ordering,
    rate_terms,
    wrong_model_check,
    wrong_model_target,
)
from .sampler import (
    EwState,
    PosteriorSummary,
    SbState,
    SigmaPrior,
    empty_component_frequency,
    ew_gibbs_step,
    make_sigma_prior,
    pooled_within_variance,
    posterior_density_summary,
    sb_gibbs_step,
)
from .svg import CurveSet, emit_plot

__version__ = "0.1.0"
