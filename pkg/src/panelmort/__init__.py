"""Panel regressions relating state-level mortality to macroeconomic
fluctuations, with nonlinear detrending, clustered errors, residual
diagnostics, and a Monte Carlo validation harness."""

from .dataset import (
    AGE_SPECIFIC_KEYS,
    ICD_CORRECTED_KEYS,
    ICD_JUMP_FROM_YEAR,
    SERIES_KEYS,
    PanelDataset,
    StateInfo,
    detect_largest_jump,
    icd_jump_correct,
    load_panel,
    save_panel,
    state_centroids,
)
from .design import DesignMatrix, ModelSpec, build_design, transform_series_for_type
from .diag import (
    DiagnosticsReport,
    DispersionReport,
    diagnostics_report,
    residual_acf_report,
    residual_xcorr_report,
    state_effect_dispersion,
)
from .estim import (
    ComparisonRow,
    EffectReport,
    FitResult,
    ModelFit,
    aic,
    compare_models,
    cov_clustered,
    cov_ols,
    fit_model,
    fit_single_state,
    gls_fit,
    stars,
    wls_fit,
)
from .mc import ErrorProcess, McSummary, SimConfig, TrendProcess, generate_panel, run_monte_carlo
from .series import (
    HpDecomposition,
    Series,
    cross_corr,
    difference,
    great_circle_km,
    hp_filter,
    linear_detrend,
    sample_autocorr,
)

__version__ = "0.1.0"

__all__ = [
    "AGE_SPECIFIC_KEYS",
    "ICD_CORRECTED_KEYS",
    "ICD_JUMP_FROM_YEAR",
    "SERIES_KEYS",
    "ComparisonRow",
    "DesignMatrix",
    "DiagnosticsReport",
    "DispersionReport",
    "EffectReport",
    "ErrorProcess",
    "FitResult",
    "HpDecomposition",
    "McSummary",
    "ModelFit",
    "ModelSpec",
    "PanelDataset",
    "Series",
    "SimConfig",
    "StateInfo",
    "TrendProcess",
    "aic",
    "build_design",
    "compare_models",
    "cov_clustered",
    "cov_ols",
    "cross_corr",
    "detect_largest_jump",
    "diagnostics_report",
    "difference",
    "fit_model",
    "fit_single_state",
    "generate_panel",
    "gls_fit",
    "great_circle_km",
    "hp_filter",
    "icd_jump_correct",
    "linear_detrend",
    "load_panel",
    "residual_acf_report",
    "residual_xcorr_report",
    "run_monte_carlo",
    "sample_autocorr",
    "save_panel",
    "state_centroids",
    "state_effect_dispersion",
    "stars",
    "transform_series_for_type",
    "wls_fit",
]
