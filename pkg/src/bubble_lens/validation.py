"""Input validation helpers shared by the estimator layer."""

from __future__ import annotations

import numpy as np

from .timeseries import PriceSeries

__all__ = ["check_series", "check_time_logprice"]


def check_series(X) -> PriceSeries:
    if not isinstance(X, PriceSeries):
        raise TypeError(
            f"expected a PriceSeries, got {type(X).__name__}; "
            "build one with load_csv or PriceSeries(dates, prices)"
        )
    return X


def _column(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim == 2 and a.shape[1] == 1:
        a = a[:, 0]
    if a.ndim != 1:
        raise ValueError(f"{name} must be 1-d or a single column, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite values")
    return a


def check_time_logprice(X, y=None) -> tuple[np.ndarray, np.ndarray]:
    """Normalize estimator input to (times, log_prices).

    Accepts a PriceSeries (y must be None) or a time array X with log-price
    array y. Times must be strictly increasing.
    """
    if isinstance(X, PriceSeries):
        if y is not None:
            raise ValueError("y must be None when X is a PriceSeries")
        return X.t_index.astype(float), np.asarray(X.log_prices, dtype=float)
    t = _column(X, "X")
    if y is None:
        raise ValueError("y (log-prices) is required when X is a time array")
    y = _column(y, "y")
    if t.size != y.size:
        raise ValueError(f"X and y lengths differ: {t.size} != {y.size}")
    if t.size >= 2 and not np.all(np.diff(t) > 0):
        raise ValueError("times must be strictly increasing")
    return t, y
