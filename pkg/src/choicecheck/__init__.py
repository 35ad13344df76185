"""Multinomial logit estimation with simulation-based underfitting checks.

Workflow: load long-format choice data, declare a design spec, fit by
maximum likelihood, simulate a reference ensemble from the estimated
sampling distribution, then compare observed statistics against the
ensemble with the checking functions or the automatic suite. Scenario
forecasting reuses the fitted model on counterfactually edited data.
"""

__version__ = "0.1.0"

from .data import (
    ChoiceDataset,
    ConstantTerm,
    DesignMatrix,
    DesignSpec,
    InteractionTerm,
    LinearTerm,
    PiecewiseLinearTerm,
    build_design,
    dataset_from_frame,
    load_design_spec,
    load_long_csv,
    piecewise_linear_value,
    wide_to_long,
    write_long_csv,
)
from .diagnostics import (
    BinningSpec,
    CheckSuite,
    CurveCheck,
    FailedCheck,
    Labeling,
    ScalarCheck,
    auto_check_suite,
    binned_marginal_model_check,
    binned_reliability_check,
    check_to_dict,
    discrete_vs_continuous,
    log_pointwise_predictive,
    log_predictive_check,
    market_share_check,
    predictive_p_value,
    resolve_labeling,
    simulated_cdf_check,
    simulated_histogram_check,
    simulated_kde_check,
    write_suite,
)
from .exceptions import (
    BinningError,
    CheckError,
    ChoiceCheckError,
    ConfigError,
    CoverageError,
    DataParseError,
    DecompositionError,
    DegenerateResultError,
    DimensionError,
    DomainError,
    LabelingError,
    SchemaError,
    SingularDesignError,
    SkipDraw,
    SpecError,
    ValidationError,
)
from .forecast import (
    Category,
    CategoryMap,
    Condition,
    ForecastReport,
    Scenario,
    Transform,
    alternative_category_map,
    apply_scenario,
    forecast_shares,
    load_category_map,
    load_scenario,
)
from .mnl import (
    CrossValidation,
    FitSummary,
    FittedModel,
    cross_validate,
    estimation_report,
    estimation_report_text,
    fit_mle,
    fit_model,
    fit_summary,
    gradient,
    hessian,
    log_likelihood,
    null_log_likelihood,
    probabilities,
    worker_count,
    write_estimation_report,
)
from .plots import (
    PlotStyle,
    export_plot_data,
    import_plot_data,
    load_plot_style,
    render_check,
    render_market_share_panel,
)
from .simulate import (
    ParameterDraws,
    SimulationEnsemble,
    StatisticResult,
    draw_parameters,
    evaluate_statistic,
    ingest_external_draws,
    simulate_outcomes,
)

__all__ = [name for name in dir() if not name.startswith("_")]
