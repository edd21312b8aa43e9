"""Scikit-learn style estimators wrapping the calibration and scan cores.

These compose with the usual ecosystem machinery (get_params/set_params,
clone, pipelines) while the functional API underneath stays importable on
its own. Fitted attributes carry the trailing underscore convention.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .diagnostics import PowerLawTrend, Residuals, _fit_trend
from .inception import ScanConfig, scan_bubble_start
from .lppls import GridSpec, calibrate, lppls_eval
from .timeseries import MIN_OBSERVATIONS
from .validation import check_series, check_time_logprice

__all__ = ["LpplsModel", "BubbleStartScanner", "PowerLawDetrender"]


class LpplsModel(RegressorMixin, BaseEstimator):
    """Log-periodic power-law calibrator with a fit/predict interface.

    Parameters
    ----------
    grid : GridSpec or None
        Search grid for (tc, beta, omega); None uses the default grid.
    refine : bool
        Polish the winning grid point with a bounded simplex search
        inside its grid cell. Off by default to keep fits grid-exact.

    Notes
    -----
    fit accepts either a PriceSeries (y=None) or a strictly increasing
    time array X with log-prices y. Times are shifted so the window
    starts at 0; tc_ is reported in those window-local units.
    """

    def __init__(self, grid: GridSpec | None = None, refine: bool = False):
        self.grid = grid
        self.refine = refine

    def fit(self, X, y=None):
        t, y = check_time_logprice(X, y)
        if t.size < MIN_OBSERVATIONS:
            raise ValueError(
                f"need >= {MIN_OBSERVATIONS} observations, got {t.size}"
            )
        self.t_offset_ = float(t[0])
        params, rmse, boundary, n_degenerate = calibrate(
            t - self.t_offset_, y, self.grid, self.refine
        )
        self.params_ = params
        self.tc_ = params.tc
        self.beta_ = params.beta
        self.omega_ = params.omega
        self.rmse_ = rmse
        self.n_obs_ = int(t.size)
        self.boundary_flags_ = boundary
        self.n_degenerate_grid_points_ = n_degenerate
        return self

    def predict(self, X):
        check_is_fitted(self, "params_")
        if hasattr(X, "t_index"):
            t = np.asarray(X.t_index, dtype=float)
        else:
            t = np.asarray(X, dtype=float)
            if t.ndim == 2 and t.shape[1] == 1:
                t = t[:, 0]
        return np.asarray(lppls_eval(self.params_, t - self.t_offset_))


class BubbleStartScanner(BaseEstimator):
    """Inception-date scanner with a fit interface over a PriceSeries.

    Parameters mirror ScanConfig; None for t2 / t1_latest means "last
    observation" / "latest start that keeps the 30-observation floor".
    n_jobs > 1 fans candidate fits out to worker processes; results are
    identical regardless.
    """

    def __init__(
        self,
        t2: int | None = None,
        t1_earliest: int = 0,
        t1_latest: int | None = None,
        t1_step: int = 5,
        grid: GridSpec | None = None,
        k: int = 7,
        n_jobs: int = 1,
    ):
        self.t2 = t2
        self.t1_earliest = t1_earliest
        self.t1_latest = t1_latest
        self.t1_step = t1_step
        self.grid = grid
        self.k = k
        self.n_jobs = n_jobs

    def _config(self, n: int) -> ScanConfig:
        t2 = n - 1 if self.t2 is None else self.t2
        t1_latest = (
            t2 - (MIN_OBSERVATIONS - 1) if self.t1_latest is None else self.t1_latest
        )
        return ScanConfig(
            t2=t2,
            t1_earliest=self.t1_earliest,
            t1_latest=t1_latest,
            t1_step=self.t1_step,
            grid=self.grid if self.grid is not None else GridSpec(),
            k=self.k,
        )

    def fit(self, X, y=None):
        series = check_series(X)
        config = self._config(len(series))
        result = scan_bubble_start(series, config, n_jobs=self.n_jobs)
        self.result_ = result
        self.config_ = config
        self.t1_star_ = result.t1_star
        self.t1_star_date_ = result.t1_star_date
        self.lambda_ = result.lambda_
        self.candidates_ = result.candidates
        return self


class PowerLawDetrender(TransformerMixin, BaseEstimator):
    """Removes the power-law trend a + b*(tc - t)^beta at a fixed tc.

    fit learns (a, b, beta) by a beta grid with least squares; transform
    returns residuals. X is a PriceSeries or a two-column array
    [time, log_price]; transform output is the 1-d residual series.
    """

    def __init__(
        self,
        tc: float,
        beta_range: tuple[float, float] = (0.05, 0.95),
        n_beta: int = 50,
    ):
        self.tc = tc
        self.beta_range = beta_range
        self.n_beta = n_beta

    @staticmethod
    def _split(X):
        if hasattr(X, "t_index"):
            return X.t_index.astype(float), np.asarray(X.log_prices, dtype=float)
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != 2:
            raise ValueError(
                "X must be a PriceSeries or an (n, 2) array [time, log_price]"
            )
        return X[:, 0], X[:, 1]

    def fit(self, X, y=None):
        t, logp = self._split(X)
        if not self.tc > t.max():
            raise ValueError(f"tc = {self.tc} must exceed the last time {t.max()}")
        _, a, b, beta, resid = _fit_trend(
            t, logp, self.tc, self.beta_range, self.n_beta
        )
        self.trend_ = PowerLawTrend(a=a, b=b, beta=beta, tc=float(self.tc))
        self.residuals_ = Residuals(x=np.log(self.tc - t), r=resid, trend=self.trend_)
        return self

    def transform(self, X):
        check_is_fitted(self, "trend_")
        t, logp = self._split(X)
        trend = self.trend_.a + self.trend_.b * (self.tc - t) ** self.trend_.beta
        return logp - trend
