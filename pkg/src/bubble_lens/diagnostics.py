"""Non-parametric log-periodicity diagnostics.

Log-periodic oscillations are periodic in x = ln(tc - t). After removing
the pure power-law trend A + B*(tc - t)^beta from the log-price, any
residual periodicity in x is measured with a Lomb periodogram (the x grid
is unevenly spaced by construction). A contracted-time difference operator
offers a second, detrending-free view of the same structure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateTrend,
    InsufficientRange,
    InvalidQ,
    InvalidTc,
    ZeroVarianceResiduals,
)
from .timeseries import MIN_OBSERVATIONS, PriceSeries

__all__ = [
    "PowerLawTrend",
    "Residuals",
    "PeriodogramResult",
    "HqDerivative",
    "default_omega_grid",
    "detrend_power_law",
    "lomb_periodogram",
    "hq_derivative",
]


@dataclass(frozen=True)
class PowerLawTrend:
    a: float
    b: float
    beta: float
    tc: float


@dataclass(frozen=True)
class Residuals:
    """Detrended log-price residuals on the log-time axis.

    x = ln(tc - t) decreases as t advances; r holds the residuals in the
    same (time) order. trend is None when residuals were loaded from disk
    rather than produced by detrending.
    """

    x: np.ndarray
    r: np.ndarray
    trend: PowerLawTrend | None = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        r = np.asarray(self.r, dtype=float)
        if x.ndim != 1 or r.ndim != 1 or x.size != r.size:
            raise ValueError("x and r must be 1-d arrays of equal length")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "r", r)

    def __len__(self) -> int:
        return self.r.size


@dataclass(frozen=True)
class PeriodogramResult:
    omegas: np.ndarray
    power: np.ndarray
    peak_omega: float
    peak_power: float


@dataclass(frozen=True)
class HqDerivative:
    """Contracted-time derivative values against ln(tc - t)."""

    h: float
    q: float
    log_tc_minus_t: np.ndarray
    values: np.ndarray


def default_omega_grid() -> np.ndarray:
    """1000 log-spaced angular frequencies covering [0.2, 20]."""
    return np.geomspace(0.2, 20.0, 1000)


def _fit_trend(t, y, tc, beta_range, n_beta):
    """Best (a, b, beta) for y ~ a + b*(tc - t)^beta with tc held fixed."""
    dt = tc - t
    best = None
    for beta in np.linspace(beta_range[0], beta_range[1], n_beta):
        X = np.column_stack([np.ones_like(t), dt**beta])
        coef, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
        if rank < 2:
            continue
        resid = y - X @ coef
        rss = float(resid @ resid)
        if best is None or rss < best[0]:
            best = (rss, float(coef[0]), float(coef[1]), float(beta), resid)
    if best is None:
        raise DegenerateTrend("power-law trend rank deficient for every beta")
    return best


def detrend_power_law(
    series: PriceSeries,
    tc: float,
    beta_range: tuple[float, float] = (0.05, 0.95),
    n_beta: int = 50,
) -> Residuals:
    """Fit and subtract the power-law trend from the log-price.

    tc is held fixed (taken from a prior calibration); beta is scanned on a
    uniform grid with (a, b) solved by least squares at each value, and the
    lowest-residual trend wins.
    """
    if len(series) < MIN_OBSERVATIONS:
        raise ValueError(f"need >= {MIN_OBSERVATIONS} observations, got {len(series)}")
    t = series.t_index.astype(float)
    if not tc > t.max():
        raise InvalidTc(f"tc = {tc} must exceed the last time {t.max()}")
    _, a, b, beta, resid = _fit_trend(t, series.log_prices, tc, beta_range, n_beta)
    return Residuals(
        x=np.log(tc - t),
        r=resid,
        trend=PowerLawTrend(a=a, b=b, beta=beta, tc=float(tc)),
    )


def lomb_periodogram(residuals: Residuals, omegas=None) -> PeriodogramResult:
    """Lomb periodogram of the residuals over angular log-frequencies.

    For each omega the phase offset tau solving
    tan(2*w*tau) = sum(sin(2*w*x)) / sum(cos(2*w*x)) decouples the two
    quadrature terms and makes the spectrum invariant to shifts of x:

        P(w) = 1/2 * [ (sum r*cos(w*(x-tau)))^2 / sum cos^2(w*(x-tau))
                     + (sum r*sin(w*(x-tau)))^2 / sum sin^2(w*(x-tau)) ]

    Residuals are mean-centered and scaled to unit variance first, so power
    is amplitude-free and comparable across surrogate draws.
    """
    if len(residuals) < 10:
        raise ValueError(f"need >= 10 residual points, got {len(residuals)}")
    omegas = default_omega_grid() if omegas is None else np.asarray(omegas, dtype=float)
    if omegas.size == 0:
        raise ValueError("frequency grid is empty")
    r = residuals.r
    sd = r.std(ddof=1)
    if not sd > 0:
        raise ZeroVarianceResiduals("residuals have zero variance")
    rc = (r - r.mean()) / sd
    x = residuals.x

    w = omegas[:, None]
    two_wx = 2.0 * w * x[None, :]
    tau = np.arctan2(np.sin(two_wx).sum(axis=1), np.cos(two_wx).sum(axis=1)) / (
        2.0 * omegas
    )
    arg = w * (x[None, :] - tau[:, None])
    cos = np.cos(arg)
    sin = np.sin(arg)
    num_c = cos @ rc
    num_s = sin @ rc
    den_c = (cos * cos).sum(axis=1)
    den_s = (sin * sin).sum(axis=1)
    # a vanishing denominator can only occur with a vanishing numerator
    power = 0.5 * (
        np.where(den_c > 1e-12, num_c**2 / np.maximum(den_c, 1e-12), 0.0)
        + np.where(den_s > 1e-12, num_s**2 / np.maximum(den_s, 1e-12), 0.0)
    )
    peak = int(np.argmax(power))
    return PeriodogramResult(
        omegas=omegas,
        power=power,
        peak_omega=float(omegas[peak]),
        peak_power=float(power[peak]),
    )


def hq_derivative(
    series: PriceSeries, tc: float, h: float = 0.5, q: float = 0.7
) -> HqDerivative:
    """Contracted-time difference operator on the log-price,

        D(t) = [ln p(t) - ln p(q*t)] / ((1 - q) * t)^h,

    evaluated at every trading day t >= 1 (t measured from the series
    start; t = 0 is excluded). ln p(q*t) is linearly interpolated on the
    trading-day axis. Each value is paired with ln(tc - t).
    """
    if not 0 < q < 1:
        raise InvalidQ(f"q = {q} outside (0, 1)")
    t = series.t_index.astype(float)
    if not tc > t.max():
        raise InvalidTc(f"tc = {tc} must exceed the last time {t.max()}")
    y = series.log_prices
    valid = t >= 1
    if not np.any(valid):
        raise InsufficientRange("no time points with t >= 1")
    tv = t[valid]
    y_q = np.interp(q * tv, t, y)
    values = (y[valid] - y_q) / ((1.0 - q) * tv) ** h
    return HqDerivative(
        h=float(h),
        q=float(q),
        log_tc_minus_t=np.log(tc - tv),
        values=values,
    )
