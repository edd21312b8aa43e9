"""Bubble inception dating via a regularized residual scan over window starts.

For a fixed window end t2, every candidate start t1 gets a full model
calibration. Short windows overfit, so the normalized residual

    chi2_np(t1) = rss / (N - k)

is corrected with a penalty that grows with window size,

    chi2_lambda(t1) = chi2_np(t1) - lambda * (t2 - t1),

where lambda is the slope of a linear regression of chi2_np on window size
over the scanned candidates (equivalently, the negative slope with respect
to the window start t1). Subtracting lambda * size removes the mechanical
size trend, so the argmin of chi2_lambda marks where fit quality genuinely
changes: the inception estimate t1*. Robustness is probed by shifting t2
backward and re-scanning.
"""

from __future__ import annotations

import datetime
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BubbleLensError,
    DegenerateDof,
    ScanEmpty,
    TooFewCandidates,
    ZeroVariance,
)
from .lppls import FitResult, GridSpec, fit_window, lppls_eval
from .timeseries import MIN_OBSERVATIONS, PriceSeries, Window

__all__ = [
    "ScanConfig",
    "CandidateFit",
    "ScanResult",
    "SweepResult",
    "chi2_np",
    "estimate_lambda",
    "scan_bubble_start",
    "robustness_sweep",
]


@dataclass(frozen=True)
class ScanConfig:
    """Scan layout: fixed end t2, candidate starts, and per-fit grid.

    k is the free-parameter count used to normalize residuals; the model
    has exactly seven (tc, beta, omega, A, B, C1, C2).
    """

    t2: int
    t1_earliest: int
    t1_latest: int
    t1_step: int = 5
    grid: GridSpec = field(default_factory=GridSpec)
    k: int = 7

    def __post_init__(self):
        if not 0 <= self.t1_earliest < self.t1_latest < self.t2:
            raise ValueError(
                "need 0 <= t1_earliest < t1_latest < t2, got "
                f"({self.t1_earliest}, {self.t1_latest}, {self.t2})"
            )
        if self.t2 - self.t1_latest + 1 < MIN_OBSERVATIONS:
            raise ValueError(
                f"shortest window has {self.t2 - self.t1_latest + 1} observations; "
                f"need {MIN_OBSERVATIONS}"
            )
        if self.t1_step < 1:
            raise ValueError("t1_step must be >= 1")
        if self.k < 1:
            raise ValueError("k must be >= 1")

    def candidate_starts(self) -> list[int]:
        return list(range(self.t1_earliest, self.t1_latest + 1, self.t1_step))


@dataclass(frozen=True)
class CandidateFit:
    t1: int
    window_size: int  # t2 - t1, the penalty unit
    chi2_np: float
    chi2_lambda: float
    fit: FitResult


@dataclass(frozen=True)
class ScanResult:
    candidates: tuple[CandidateFit, ...]
    lambda_: float
    t1_star: int
    t1_star_date: datetime.date
    dropped: tuple[tuple[int, str], ...] = ()


@dataclass(frozen=True)
class SweepResult:
    """Per-shift scans from robustness_sweep; failures keep their reason."""

    scans: tuple[tuple[int, ScanResult], ...]  # (shifted t2, result)
    failures: tuple[tuple[int, str], ...] = ()

    @property
    def t1_stars(self) -> list[int]:
        return [res.t1_star for _, res in self.scans]

    @property
    def t1_spread(self) -> int:
        """Max minus min of the selected starts, in trading days."""
        stars = self.t1_stars
        if not stars:
            raise ScanEmpty("sweep produced no successful scans")
        return max(stars) - min(stars)


def chi2_np(series: PriceSeries, fit: FitResult, k: int = 7) -> float:
    """Degrees-of-freedom normalized residual sum over the fitted window.

    Residuals are recomputed from the model evaluation, independently of
    whatever the calibration itself accumulated.
    """
    sub = series.slice(fit.window)
    n = len(sub)
    if n <= k:
        raise DegenerateDof(f"N = {n} <= k = {k}")
    t = sub.t_index.astype(float)
    resid = sub.log_prices - lppls_eval(fit.params, t)
    return float(resid @ resid) / (n - k)


def estimate_lambda(candidates) -> float:
    """Penalty coefficient from the candidates' own residual-size trend.

    Fits chi2_np = a + b * window_size by simple least squares and returns
    b, the negative of the slope with respect to the window start t1. With
    this lambda, chi2_lambda = chi2_np - lambda * size is the detrended
    curve: exactly flat when the (size, chi2_np) points lie on a line, so
    only deviations from the mechanical overfitting trend move the argmin.

    candidates: iterable of (window_size, chi2_np) pairs.
    """
    pairs = list(candidates)
    if len(pairs) < 3:
        raise TooFewCandidates(f"need >= 3 candidates, got {len(pairs)}")
    w = np.asarray([p[0] for p in pairs], dtype=float)
    c = np.asarray([p[1] for p in pairs], dtype=float)
    dw = w - w.mean()
    denom = float(dw @ dw)
    if denom == 0.0:
        raise ZeroVariance("all candidate window sizes are equal")
    return float(dw @ (c - c.mean())) / denom


def _fit_candidate(args):
    """Worker for one candidate window; returns (t1, fit | error message)."""
    series, t2, grid, k, t1 = args
    try:
        fit = fit_window(series, Window(t1, t2), grid)
        return t1, fit, chi2_np(series, fit, k), None
    except BubbleLensError as exc:
        return t1, None, None, f"{type(exc).__name__}: {exc}"


def scan_bubble_start(
    series: PriceSeries, config: ScanConfig, n_jobs: int = 1
) -> ScanResult:
    """Fit every candidate window and select t1* = argmin chi2_lambda.

    Candidate fits are independent and may run in worker processes; results
    are reduced in candidate order, so the output does not depend on n_jobs.
    Failed candidates are dropped from both the lambda regression and the
    argmin, and recorded with their reason.
    """
    if config.t2 > len(series) - 1:
        raise ValueError(f"t2 = {config.t2} exceeds series of length {len(series)}")
    tasks = [(series, config.t2, config.grid, config.k, t1) for t1 in config.candidate_starts()]
    if n_jobs and n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            outcomes = list(pool.map(_fit_candidate, tasks, chunksize=1))
    else:
        outcomes = [_fit_candidate(task) for task in tasks]

    fitted: list[tuple[int, FitResult, float]] = []
    dropped: list[tuple[int, str]] = []
    for t1, fit, chi2, err in outcomes:
        if err is None:
            fitted.append((t1, fit, chi2))
        else:
            dropped.append((t1, err))
    if not fitted:
        raise ScanEmpty(f"all {len(tasks)} candidate windows failed")

    sizes = [config.t2 - t1 for t1, _, _ in fitted]
    chis = [chi2 for _, _, chi2 in fitted]
    lam = estimate_lambda(zip(sizes, chis))

    candidates = tuple(
        CandidateFit(
            t1=t1,
            window_size=size,
            chi2_np=chi2,
            chi2_lambda=chi2 - lam * size,
            fit=fit,
        )
        for (t1, fit, chi2), size in zip(fitted, sizes)
    )
    # candidates are in ascending t1 order; argmin takes the first minimum,
    # which makes the tie-break "earliest t1".
    best = int(np.argmin([c.chi2_lambda for c in candidates]))
    t1_star = candidates[best].t1
    return ScanResult(
        candidates=candidates,
        lambda_=lam,
        t1_star=t1_star,
        t1_star_date=series.dates[t1_star].astype(datetime.date),
        dropped=tuple(dropped),
    )


def robustness_sweep(
    series: PriceSeries,
    config: ScanConfig,
    shifts=(15, 30, 45, 60),
    n_jobs: int = 1,
) -> SweepResult:
    """Re-scan with t2 shifted backward by each of the given day counts.

    t1_latest is clamped per shift so the shortest window keeps the
    30-observation floor; shifts that leave no admissible candidates are
    recorded as failures and the sweep continues.
    """
    scans: list[tuple[int, ScanResult]] = []
    failures: list[tuple[int, str]] = []
    for shift in shifts:
        t2 = config.t2 - int(shift)
        t1_latest = min(config.t1_latest, t2 - (MIN_OBSERVATIONS - 1))
        try:
            shifted = ScanConfig(
                t2=t2,
                t1_earliest=config.t1_earliest,
                t1_latest=t1_latest,
                t1_step=config.t1_step,
                grid=config.grid,
                k=config.k,
            )
            scans.append((t2, scan_bubble_start(series, shifted, n_jobs=n_jobs)))
        except (BubbleLensError, ValueError) as exc:
            failures.append((int(shift), f"{type(exc).__name__}: {exc}"))
    return SweepResult(scans=tuple(scans), failures=tuple(failures))
