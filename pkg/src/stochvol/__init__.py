"""Six discrete time stochastic volatility models with correlated errors.

The package covers two timing conventions for how the return shock is
correlated with the log variance innovation (predictive models ``M2.x``
where today's shock drives tomorrow's variance, contemporaneous models
``M3.x`` where it drives today's) crossed with three return distributions
(Gaussian, skewed heavy tailed, Gaussian plus independent jumps in both
equations).

What the package provides:

* closed form stationary moments, skewness and kurtosis (:mod:`~stochvol.moments`),
* closed form cross correlations between returns and future or past
  variance levels (:mod:`~stochvol.leadlag`),
* exact path simulation and stationary draws (:mod:`~stochvol.simulate`),
* Monte Carlo oracles and a discrepancy report that cross checks every
  closed form against the simulator (:mod:`~stochvol.oracle`),
* empirical summaries of return series (:mod:`~stochvol.empirical`),
* Bayesian estimation by Markov chain Monte Carlo (:mod:`~stochvol.inference`),
* a command line interface (:mod:`~stochvol.cli`).
"""

from .errors import (
    ConfigError,
    DataError,
    InferenceError,
    MomentExistenceError,
    StochvolError,
    ValidationError,
)
from .models import (
    HALF_NORMAL_MEAN,
    DerivedConstants,
    ModelId,
    ModelSpec,
    SvParams,
    ValidationReport,
    derived_constants,
    mean_correction,
    omega_constant,
    require_valid,
    validate,
    xi,
)
from .moments import (
    MomentSummary,
    finite_product_P,
    moments,
    product_P,
)
from .leadlag import (
    LeadLagProfile,
    gamma,
    leadlag_profile,
    var_exp_h,
)
from .simulate import (
    RngPolicy,
    SimPath,
    StationarySample,
    draw_jump_stationary_state,
    draw_stationary_return,
    sample_skewed_t_component,
    simulate_path,
    state_burnin_steps,
)
from .empirical import (
    EmpiricalLeadLag,
    LoadedSeries,
    SummaryStats,
    bartlett_band,
    empirical_leadlag,
    from_prices,
    load_series_csv,
    summary_stats,
)
from .oracle import (
    DOCUMENTED_DISCREPANCIES,
    Z_THRESHOLD,
    CheckRow,
    DiscrepancyReport,
    GridPoint,
    McEstimate,
    default_verify_grid,
    mc_gamma,
    mc_path_mean,
    mc_stationary_summary,
    oracle_check_point,
    run_discrepancy_report,
    write_discrepancy_csv,
)
from .inference import (
    FitResult,
    McmcConfig,
    PosteriorLeadLag,
    PriorConfig,
    SummaryRow,
    fit,
    param_names,
    posterior_leadlag,
    psrf,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "StochvolError",
    "ValidationError",
    "MomentExistenceError",
    "ConfigError",
    "DataError",
    "InferenceError",
    # models
    "ModelId",
    "SvParams",
    "ModelSpec",
    "ValidationReport",
    "validate",
    "require_valid",
    "xi",
    "omega_constant",
    "mean_correction",
    "DerivedConstants",
    "derived_constants",
    "HALF_NORMAL_MEAN",
    # moments
    "MomentSummary",
    "moments",
    "product_P",
    "finite_product_P",
    # lead lag
    "LeadLagProfile",
    "leadlag_profile",
    "gamma",
    "var_exp_h",
    # simulation
    "RngPolicy",
    "SimPath",
    "simulate_path",
    "StationarySample",
    "draw_stationary_return",
    "draw_jump_stationary_state",
    "sample_skewed_t_component",
    "state_burnin_steps",
    # empirical
    "from_prices",
    "SummaryStats",
    "summary_stats",
    "bartlett_band",
    "EmpiricalLeadLag",
    "empirical_leadlag",
    "LoadedSeries",
    "load_series_csv",
    # oracle
    "McEstimate",
    "mc_stationary_summary",
    "mc_gamma",
    "mc_path_mean",
    "oracle_check_point",
    "GridPoint",
    "default_verify_grid",
    "CheckRow",
    "DiscrepancyReport",
    "run_discrepancy_report",
    "write_discrepancy_csv",
    "Z_THRESHOLD",
    "DOCUMENTED_DISCREPANCIES",
    # inference
    "PriorConfig",
    "McmcConfig",
    "SummaryRow",
    "FitResult",
    "PosteriorLeadLag",
    "fit",
    "posterior_leadlag",
    "psrf",
    "param_names",
]
