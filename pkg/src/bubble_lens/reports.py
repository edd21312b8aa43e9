"""Serialization of results to JSON and plot-ready CSV.

All writers are deterministic: keys are sorted, floats use repr-precision,
and no timestamps are embedded, so identical runs produce identical bytes.
"""

from __future__ import annotations

import csv
import json

import numpy as np

from .diagnostics import HqDerivative, PeriodogramResult, Residuals
from .inception import ScanConfig, ScanResult, SweepResult
from .lppls import FitResult
from .surrogates import SignificanceResult
from .timeseries import PriceSeries, calendar_days_per_trading_day, project_date

FIT_TABLE_HEADER = [
    "window_start",
    "window_end",
    "A",
    "B",
    "C",
    "beta",
    "omega",
    "phi",
    "tc_date",
    "tc_days_from_start",
    "rmse",
]

SCAN_CSV_HEADER = ["t1_date", "window_size", "chi2_np", "chi2_lambda"]


def dump_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def fit_result_dict(result: FitResult, series: PriceSeries) -> dict:
    """JSON form of one calibration, with calendar-anchored critical time.

    tc_date extrapolates the trading calendar beyond the window end at the
    series' median trading-week pace; the convention is recorded inline.
    """
    p = result.params
    w = result.window
    tc_global = w.t1 + p.tc  # window-local -> series-local trading days
    return {
        "window": {
            "t1_date": str(series.dates[w.t1]),
            "t2_date": str(series.dates[w.t2]),
        },
        "tc_date": project_date(series, tc_global).isoformat(),
        "tc_days_from_start": p.tc,
        "beta": p.beta,
        "omega": p.omega,
        "A": p.a,
        "B": p.b,
        "C1": p.c1,
        "C2": p.c2,
        "C": p.c,
        "phi": p.phi,
        "tau": p.tau,
        "tau_exceeds_one": p.tau > 1.0,
        "rmse": result.rmse,
        "n_obs": result.n_obs,
        "boundary_flags": dict(result.converged_on_boundary),
        "n_degenerate_grid_points": result.n_degenerate_grid_points,
        "grid_spec": result.grid.to_dict(),
        "tc_date_extrapolation": {
            "method": "median calendar days per trading day over 5-day spans",
            "calendar_days_per_trading_day": calendar_days_per_trading_day(series),
        },
    }


def write_fit_table(results: list[FitResult], series: PriceSeries, path) -> None:
    """Combined per-window parameter table, one row per fitted window."""
    rows = []
    for result in results:
        d = fit_result_dict(result, series)
        rows.append(
            [
                d["window"]["t1_date"],
                d["window"]["t2_date"],
                repr(d["A"]),
                repr(d["B"]),
                repr(d["C"]),
                repr(d["beta"]),
                repr(d["omega"]),
                repr(d["phi"]),
                d["tc_date"],
                repr(d["tc_days_from_start"]),
                repr(d["rmse"]),
            ]
        )
    _write_csv(path, FIT_TABLE_HEADER, rows)


def scan_result_dict(result: ScanResult, config: ScanConfig) -> dict:
    return {
        "t2": config.t2,
        "t1_star": result.t1_star,
        "t1_star_date": result.t1_star_date.isoformat(),
        "lambda": result.lambda_,
        "k": config.k,
        "t1_step": config.t1_step,
        "grid_spec": config.grid.to_dict(),
        "candidates": [
            {
                "t1": c.t1,
                "window_size": c.window_size,
                "chi2_np": c.chi2_np,
                "chi2_lambda": c.chi2_lambda,
                "tc_days_from_start": c.fit.params.tc,
                "beta": c.fit.params.beta,
                "omega": c.fit.params.omega,
                "rmse": c.fit.rmse,
            }
            for c in result.candidates
        ],
        "dropped": [{"t1": t1, "reason": reason} for t1, reason in result.dropped],
    }


def write_scan_csv(result: ScanResult, series: PriceSeries, path) -> None:
    rows = [
        [
            str(series.dates[c.t1]),
            c.window_size,
            repr(c.chi2_np),
            repr(c.chi2_lambda),
        ]
        for c in result.candidates
    ]
    _write_csv(path, SCAN_CSV_HEADER, rows)


def sweep_dict(sweep: SweepResult, base_config: ScanConfig, series: PriceSeries) -> dict:
    entries = []
    for t2, result in sweep.scans:
        entries.append(
            {
                "t2": t2,
                "t2_date": str(series.dates[t2]),
                "t1_star": result.t1_star,
                "t1_star_date": result.t1_star_date.isoformat(),
                "lambda": result.lambda_,
            }
        )
    out = {
        "shifted_scans": entries,
        "failures": [{"shift": s, "reason": r} for s, r in sweep.failures],
    }
    if sweep.scans:
        out["t1_spread_days"] = sweep.t1_spread
    return out


def significance_dict(result: SignificanceResult, n: int) -> dict:
    return {
        "model": result.model,
        "n": n,
        "observed_peak_power": result.observed_peak_power,
        "p_value": result.p_value,
        "surrogate_peak_powers": [float(v) for v in result.surrogate_peak_powers],
    }


def write_residuals_csv(residuals: Residuals, series: PriceSeries, path) -> None:
    """Residuals with their log-time axis; the sigtest command reloads this."""
    rows = [
        [int(t), str(d), repr(float(x)), repr(float(r))]
        for t, d, x, r in zip(
            series.t_index, series.dates, residuals.x, residuals.r
        )
    ]
    _write_csv(path, ["t_index", "date", "log_tc_minus_t", "residual"], rows)


def read_residuals_csv(path) -> Residuals:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        xs, rs = [], []
        for row in reader:
            xs.append(float(row["log_tc_minus_t"]))
            rs.append(float(row["residual"]))
    return Residuals(x=np.asarray(xs), r=np.asarray(rs))


def write_periodogram_csv(result: PeriodogramResult, path) -> None:
    rows = [
        [repr(float(w)), repr(float(p))] for w, p in zip(result.omegas, result.power)
    ]
    _write_csv(path, ["omega", "power"], rows)


def write_hq_csv(result: HqDerivative, path) -> None:
    rows = [
        [repr(float(x)), repr(float(d))]
        for x, d in zip(result.log_tc_minus_t, result.values)
    ]
    _write_csv(path, ["log_tc_minus_t", "D"], rows)
