"""Bayesian fitting and probabilistic sensitivity analysis of journal h-index models."""

__version__ = "0.1.0"

from .models import Covariates, DomainError, ModelKind, ParamVector, evaluate_mean, param_bounds
from .likelihood import (
    ObsKind,
    ObservationModel,
    deviance,
    log_density_trunc_gaussian,
    log_pmf_negbinom,
)
from .dataio import Dataset, JournalRecord, load_csv, save_csv, synthesize
from .mcmc import (
    Chain,
    Gamma,
    SamplerConfig,
    TruncNormal,
    default_priors,
    grid_posterior_oracle,
    log_posterior,
    mean_deviance,
    run_chain,
    summarize,
)
from .sensitivity import (
    build_global_grid,
    build_local_grid,
    percentile,
    propagate,
    sensitivity_index,
)
