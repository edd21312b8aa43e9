"""bubble-lens: speculative-bubble detection in price time series.

Calibrates the log-periodic power-law singularity model with a two-step
grid search, dates bubble inception with a regularized residual scan,
and validates log-periodicity non-parametrically (log-time periodogram,
contracted-time derivative, surrogate-data significance tests).
"""

__version__ = "0.1.0"

from .diagnostics import (
    HqDerivative,
    PeriodogramResult,
    PowerLawTrend,
    Residuals,
    default_omega_grid,
    detrend_power_law,
    hq_derivative,
    lomb_periodogram,
)
from .errors import BubbleLensError
from .estimators import BubbleStartScanner, LpplsModel, PowerLawDetrender
from .inception import (
    CandidateFit,
    ScanConfig,
    ScanResult,
    SweepResult,
    chi2_np,
    estimate_lambda,
    robustness_sweep,
    scan_bubble_start,
)
from .lppls import (
    FitResult,
    GridSpec,
    LpplsParams,
    calibrate,
    derive_canonical,
    design_matrix,
    fit_window,
    lppls_eval,
    ols_solve,
)
from .surrogates import (
    SignificanceResult,
    SurrogateConfig,
    gen_surrogate,
    significance_test,
)
from .synthetic import NoiseSpec, SyntheticSeries, make_series
from .timeseries import PriceSeries, Window, export_csv, load_csv

__all__ = [
    "__version__",
    "BubbleLensError",
    "PriceSeries",
    "Window",
    "load_csv",
    "export_csv",
    "GridSpec",
    "LpplsParams",
    "FitResult",
    "lppls_eval",
    "design_matrix",
    "ols_solve",
    "fit_window",
    "calibrate",
    "derive_canonical",
    "ScanConfig",
    "CandidateFit",
    "ScanResult",
    "SweepResult",
    "chi2_np",
    "estimate_lambda",
    "scan_bubble_start",
    "robustness_sweep",
    "PowerLawTrend",
    "Residuals",
    "PeriodogramResult",
    "HqDerivative",
    "default_omega_grid",
    "detrend_power_law",
    "lomb_periodogram",
    "hq_derivative",
    "SurrogateConfig",
    "SignificanceResult",
    "gen_surrogate",
    "significance_test",
    "NoiseSpec",
    "SyntheticSeries",
    "make_series",
    "LpplsModel",
    "BubbleStartScanner",
    "PowerLawDetrender",
]
