"""Synthetic price series with planted model parameters.

The validation workhorse: every fitting, scanning, and spectral routine is
exercised against series generated here, where the ground truth is known.
A series is the model log-price over n_days trading days, plus optional
noise innovations (drawn from the surrogate generators) and an optional
random-walk segment prepended before the bubble for changepoint tests.
"""

from __future__ import annotations

import datetime
from dataclasses import dataclass

import numpy as np

from .errors import InvalidPlantedParams
from .lppls import LpplsParams, lppls_eval
from .surrogates import ar1_noise, fgn_noise, levy_noise, white_noise
from .timeseries import PriceSeries

__all__ = ["NoiseSpec", "SyntheticSeries", "weekday_calendar", "make_series"]


@dataclass(frozen=True)
class NoiseSpec:
    """Additive log-price noise: sigma times a unit-scale innovation model."""

    model: str = "white_gaussian"
    sigma: float = 0.0
    ar1_phi1: float = 0.5
    fgn_hurst: float = 0.7
    levy_alpha: float = 1.7

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.sigma == 0.0:
            return np.zeros(n)
        if self.model == "white_gaussian":
            unit = white_noise(rng, n)
        elif self.model == "ar1":
            unit = ar1_noise(rng, n, self.ar1_phi1)
        elif self.model == "fgn":
            unit = fgn_noise(rng, n, self.fgn_hurst)
        elif self.model == "levy_stable":
            unit = levy_noise(rng, n, self.levy_alpha)
        else:
            raise InvalidPlantedParams(f"unknown noise model {self.model!r}")
        return self.sigma * unit


@dataclass(frozen=True)
class SyntheticSeries:
    series: PriceSeries
    params: LpplsParams
    noise: NoiseSpec
    changepoint: int  # index of the first bubble observation
    seed: int


def weekday_calendar(start: datetime.date, n: int) -> np.ndarray:
    """n Monday-to-Friday dates starting at the first weekday >= start."""
    out = np.empty(n, dtype="datetime64[D]")
    d = start
    i = 0
    while i < n:
        if d.weekday() < 5:
            out[i] = d
            i += 1
        d += datetime.timedelta(days=1)
    return out


def _stream(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))
    )


def validate_planted(params: LpplsParams, n_days: int) -> None:
    if not 0 < params.beta < 1:
        raise InvalidPlantedParams(f"beta = {params.beta} outside (0, 1)")
    if not params.omega > 0:
        raise InvalidPlantedParams(f"omega = {params.omega} must be positive")
    if not params.tc > n_days - 1:
        raise InvalidPlantedParams(
            f"tc = {params.tc} must exceed the last bubble day {n_days - 1}"
        )


def make_series(
    params: LpplsParams,
    n_days: int,
    start_date: datetime.date = datetime.date(2019, 1, 1),
    noise: NoiseSpec = NoiseSpec(),
    seed: int = 0,
    prebubble_days: int = 0,
    prebubble_vol: float = 0.01,
    prebubble_drift: float = 0.0,
) -> SyntheticSeries:
    """Generate exp(model log-price + noise) on a weekday trading calendar.

    With prebubble_days > 0, a Gaussian random walk of that length is
    prepended, ending where the bubble segment begins, so the changepoint
    sits exactly at index prebubble_days. prebubble_drift is the walk's
    per-day drift (negative values decline into the bubble's trough).
    Separate noise streams for the two segments keep the bubble's noise
    unchanged when the walk length varies.
    """
    if n_days < 2:
        raise InvalidPlantedParams(f"n_days must be >= 2, got {n_days}")
    validate_planted(params, n_days)
    t = np.arange(n_days, dtype=float)
    log_price = lppls_eval(params, t) + noise.draw(_stream(seed, 0), n_days)
    if prebubble_days > 0:
        steps = prebubble_drift + prebubble_vol * _stream(seed, 1).standard_normal(
            prebubble_days
        )
        # walk backward from the first bubble value so the segments join
        walk = log_price[0] - np.cumsum(steps[::-1])[::-1]
        log_price = np.concatenate([walk, log_price])
    series = PriceSeries(
        weekday_calendar(start_date, log_price.size), np.exp(log_price)
    )
    return SyntheticSeries(
        series=series,
        params=params,
        noise=noise,
        changepoint=prebubble_days,
        seed=seed,
    )
