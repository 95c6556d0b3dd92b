"""Bayesian time-varying-parameter quantile regression with conditional
heteroskedasticity: data-augmented Gibbs sampling, dynamic shrinkage priors,
noncrossing-quantile post-processing and a forecast-evaluation suite."""

from .core import ConfigError, NumericalError, QuantileGrid, SamplerFailure
from .data import SeriesData, ingest_csv, simulate_series
from .distributions import (
    ALParams,
    GIGParams,
    al_density,
    al_quantile_function,
    sample_exponential,
    sample_gig,
    sample_half_cauchy,
    sample_inverse_gamma,
    sample_polya_gamma,
)
from .evaluation import (
    PredictiveDensity,
    QuantileForecast,
    bootstrap_moments,
    log_predictive_score,
    quantile_score,
    scenario_probabilities,
    smooth_to_density,
    weighted_crps,
)
from .noncrossing import GPConfig, InducedQuantileMatrix, adjust, build_induced_matrix, gp_fit, select_bandwidth
from .oos import EvaluationReport, OOSConfig, run_expanding_window
from .sampler import ChainState, Hyperparams, McmcConfig, ModelSpec, PosteriorDraws, run_chain
from .shrinkage import DhsState, ShrinkageKind, ShsState, update_dhs, update_ig, update_shs
from .state_space import GaussianStateModel, LogScalePath, ffbs, sample_innovation_variance, sample_log_scale_path
from .ucsv import UcsvDraws, UcsvSpec, run_ucsv

__version__ = "0.1.0"

__all__ = [
    "ALParams", "GIGParams", "al_density", "al_quantile_function",
    "sample_gig", "sample_polya_gamma", "sample_exponential",
    "sample_inverse_gamma", "sample_half_cauchy",
    "GaussianStateModel", "LogScalePath", "ffbs", "sample_log_scale_path",
    "sample_innovation_variance",
    "ShrinkageKind", "DhsState", "ShsState", "update_ig", "update_shs", "update_dhs",
    "ModelSpec", "McmcConfig", "Hyperparams", "ChainState", "PosteriorDraws", "run_chain",
    "GPConfig", "InducedQuantileMatrix", "build_induced_matrix", "gp_fit",
    "select_bandwidth", "adjust",
    "QuantileForecast", "PredictiveDensity", "quantile_score", "weighted_crps",
    "smooth_to_density", "log_predictive_score", "bootstrap_moments",
    "scenario_probabilities",
    "SeriesData", "ingest_csv", "simulate_series",
    "UcsvSpec", "UcsvDraws", "run_ucsv",
    "OOSConfig", "EvaluationReport", "run_expanding_window",
    "QuantileGrid", "ConfigError", "NumericalError", "SamplerFailure",
    "__version__",
]
