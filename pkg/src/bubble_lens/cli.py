"""bubble-lens command line: fit, scan, diagnose, sigtest, synth, version.

Configuration precedence is defaults < flags < --config JSON (entries in
the config file override flags). Every command writes a manifest recording
the effective configuration, a content hash of the input, and the produced
files; reruns with identical inputs and seeds are byte-identical.

Exit codes: 0 success, 1 computational failure, 2 usage or input error.
"""

from __future__ import annotations

import datetime
import hashlib
import json
from pathlib import Path

import click
import numpy as np

from . import __version__
from .diagnostics import detrend_power_law, hq_derivative, lomb_periodogram
from .errors import BubbleLensError
from .inception import ScanConfig, robustness_sweep, scan_bubble_start
from .lppls import GridSpec, LpplsParams, fit_window
from .reports import (
    dump_json,
    fit_result_dict,
    read_residuals_csv,
    scan_result_dict,
    significance_dict,
    sweep_dict,
    write_fit_table,
    write_hq_csv,
    write_periodogram_csv,
    write_residuals_csv,
    write_scan_csv,
)
from .surrogates import SurrogateConfig, significance_test
from .synthetic import NoiseSpec, make_series
from .timeseries import PriceSeries, Window, export_csv, load_csv

_MODEL_ALIASES = {
    "white": "white_gaussian",
    "white_gaussian": "white_gaussian",
    "ar1": "ar1",
    "fgn": "fgn",
    "levy": "levy_stable",
    "levy_stable": "levy_stable",
}


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _apply_config(params: dict, config_path) -> dict:
    """Overlay --config JSON entries; keys must match this command's flags."""
    if not config_path:
        return params
    with open(config_path, encoding="utf-8") as fh:
        overrides = json.load(fh)
    unknown = sorted(set(overrides) - set(params))
    if unknown:
        raise click.UsageError(f"unknown config keys: {unknown}")
    params.update(overrides)
    return params


def _jsonable(value):
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return str(value)


class _Run:
    """Tracks created files so a failing command leaves nothing behind."""

    def __init__(self, out_dir):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.outputs: list[Path] = []

    def path(self, name) -> Path:
        p = Path(name)
        if not p.is_absolute():
            p = self.out_dir / p
        p.parent.mkdir(parents=True, exist_ok=True)
        self.outputs.append(p)
        return p

    def cleanup(self) -> None:
        for p in self.outputs:
            p.unlink(missing_ok=True)

    def manifest(self, command: str, config: dict, input_path=None) -> Path:
        payload = {
            "command": command,
            "input_hash": _sha256(input_path) if input_path else None,
            "config": {k: _jsonable(v) for k, v in sorted(config.items())},
            "tool_version": __version__,
            "outputs": [str(p) for p in self.outputs],
        }
        path = self.out_dir / f"{command}_manifest.json"
        dump_json(payload, path)
        return path


def _fail_clean(run: _Run, exc: Exception):
    run.cleanup()
    if isinstance(exc, BubbleLensError):
        raise click.ClickException(str(exc))
    raise exc


def _parse_pair(text: str, name: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError:
        raise click.UsageError(f"--{name} expects 'LO,HI', got {text!r}")
    return lo, hi


def _parse_floats(text: str, name: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise click.UsageError(f"--{name} expects comma-separated numbers, got {text!r}")


def _parse_date(text: str, name: str) -> datetime.date:
    try:
        return datetime.date.fromisoformat(text)
    except ValueError:
        raise click.UsageError(f"--{name} expects an ISO date, got {text!r}")


def _grid_from(params: dict) -> GridSpec:
    return GridSpec(
        tc_margin=_parse_pair(params["tc_margin"], "tc-margin"),
        tc_step=params["tc_step"],
        beta_range=_parse_pair(params["beta_range"], "beta-range"),
        n_beta=params["n_beta"],
        omega_range=_parse_pair(params["omega_range"], "omega-range"),
        n_omega=params["n_omega"],
    )


def _snap_index(series: PriceSeries, date: datetime.date, side: str) -> int:
    """Nearest trading-day index at or inside the given calendar date."""
    d = np.datetime64(date, "D")
    if side == "forward":
        idx = int(np.searchsorted(series.dates, d, side="left"))
        if idx >= len(series):
            raise click.UsageError(f"{date} is after the last observation")
    else:
        idx = int(np.searchsorted(series.dates, d, side="right")) - 1
        if idx < 0:
            raise click.UsageError(f"{date} is before the first observation")
    return idx


def _resolve_window(series: PriceSeries, spec: str) -> Window:
    try:
        start_text, end_text = spec.split(":")
    except ValueError:
        raise click.UsageError(f"--window expects 'START:END' dates, got {spec!r}")
    t1 = _snap_index(series, _parse_date(start_text, "window"), "forward")
    t2 = _snap_index(series, _parse_date(end_text, "window"), "backward")
    if t1 >= t2:
        raise click.UsageError(f"window {spec!r} resolves to an empty span")
    return Window(t1, t2)


def _grid_options(f):
    f = click.option("--tc-margin", default="10,200", show_default=True,
                     help="tc search offsets beyond the window end, days LO,HI")(f)
    f = click.option("--tc-step", type=float, default=2.0, show_default=True)(f)
    f = click.option("--beta-range", default="0.1,1.0", show_default=True)(f)
    f = click.option("--n-beta", type=int, default=30, show_default=True)(f)
    f = click.option("--omega-range", default="6,13", show_default=True)(f)
    f = click.option("--n-omega", type=int, default=20, show_default=True)(f)
    return f


def _common_options(f):
    f = click.option("--out-dir", default=".", show_default=True,
                     help="directory for outputs and the manifest")(f)
    f = click.option("--seed", type=int, default=0, show_default=True)(f)
    f = click.option("--threads", type=int, default=1, show_default=True,
                     help="worker processes for independent sub-tasks")(f)
    f = click.option("--config", "config_path", default=None,
                     type=click.Path(exists=True, dir_okay=False),
                     help="JSON file whose entries override flags")(f)
    return f


@click.group()
@click.version_option(version=__version__, prog_name="bubble-lens")
def main():
    """Detect and characterize speculative bubbles in price series."""


@main.command("version")
def version_cmd():
    """Print the tool version."""
    click.echo(f"bubble-lens {__version__}")


@main.command("fit")
@click.option("--input", "input_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="price CSV with date and adj_close columns")
@click.option("--window", "windows", multiple=True, required=True,
              help="calibration window START:END (ISO dates); repeatable")
@click.option("--refine", is_flag=True, default=False,
              help="simplex-polish the winning grid point")
@_grid_options
@_common_options
def fit_cmd(**params):
    """Calibrate the model over one or more windows; write JSON + table CSV."""
    params = _apply_config(params, params.pop("config_path"))
    run = _Run(params["out_dir"])
    try:
        series = load_csv(params["input_path"])
        grid = _grid_from(params)
        results = []
        for spec in params["windows"]:
            window = _resolve_window(series, spec)
            result = fit_window(series, window, grid, refine=params["refine"])
            results.append(result)
            name = f"fit_{series.dates[window.t1]}_{series.dates[window.t2]}.json"
            dump_json(fit_result_dict(result, series), run.path(name))
        write_fit_table(results, series, run.path("fit_table.csv"))
    except Exception as exc:
        _fail_clean(run, exc)
    manifest = run.manifest("fit", params, params["input_path"])
    click.echo(f"fit: {len(params['windows'])} window(s); manifest {manifest}")


@main.command("scan")
@click.option("--input", "input_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--t2", "t2_date", required=True,
              help="window end, an exact trading date (ISO)")
@click.option("--t1-from", "t1_from", required=True,
              help="earliest candidate start date (ISO)")
@click.option("--t1-to", "t1_to", required=True,
              help="latest candidate start date (ISO)")
@click.option("--step", type=int, default=5, show_default=True,
              help="trading days between candidate starts")
@click.option("--shifts", default="15,30,45,60", show_default=True,
              help="backward t2 shifts for the robustness sweep; '' disables")
@click.option("--k", type=int, default=7, show_default=True,
              help="free-parameter count for residual normalization")
@click.option("--out", "out_name", default="scan.json", show_default=True)
@_grid_options
@_common_options
def scan_cmd(**params):
    """Date the bubble inception by scanning candidate start times."""
    params = _apply_config(params, params.pop("config_path"))
    run = _Run(params["out_dir"])
    try:
        series = load_csv(params["input_path"])
        try:
            t2 = series.index_of_date(_parse_date(params["t2_date"], "t2"))
        except KeyError as exc:
            raise click.UsageError(str(exc))
        config = ScanConfig(
            t2=t2,
            t1_earliest=_snap_index(series, _parse_date(params["t1_from"], "t1-from"), "forward"),
            t1_latest=_snap_index(series, _parse_date(params["t1_to"], "t1-to"), "backward"),
            t1_step=params["step"],
            grid=_grid_from(params),
            k=params["k"],
        )
        result = scan_bubble_start(series, config, n_jobs=params["threads"])
        payload = {"scan": scan_result_dict(result, config)}
        shifts = [int(s) for s in _parse_floats(params["shifts"], "shifts")]
        json_path = run.path(params["out_name"])
        write_scan_csv(result, series, run.path(Path(params["out_name"]).stem + ".csv"))
        if shifts:
            sweep = robustness_sweep(series, config, shifts, n_jobs=params["threads"])
            payload["sweep"] = sweep_dict(sweep, config, series)
            for t2_shifted, shifted_result in sweep.scans:
                shift = config.t2 - t2_shifted
                write_scan_csv(
                    shifted_result, series,
                    run.path(Path(params["out_name"]).stem + f"_shift{shift}.csv"),
                )
        dump_json(payload, json_path)
    except Exception as exc:
        _fail_clean(run, exc)
    manifest = run.manifest("scan", params, params["input_path"])
    click.echo(
        f"scan: t1* = {result.t1_star} ({result.t1_star_date.isoformat()}); manifest {manifest}"
    )


@main.command("diagnose")
@click.option("--input", "input_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--window", "window_spec", default=None,
              help="START:END dates; defaults to the window of --tc-from-fit")
@click.option("--tc-from-fit", "fit_json", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="fit JSON supplying the critical time (and default window)")
@click.option("--tc-days", type=float, default=None,
              help="critical time in trading days from the window start")
@click.option("--omega-min", type=float, default=0.2, show_default=True)
@click.option("--omega-max", type=float, default=20.0, show_default=True)
@click.option("--n-freq", type=int, default=1000, show_default=True)
@click.option("--hq-h", default="0.5", show_default=True,
              help="comma list of scaling exponents")
@click.option("--hq-q", default="0.7", show_default=True,
              help="comma list of contraction factors in (0,1)")
@click.option("--hq-sweep", is_flag=True, default=False,
              help="sweep q in 0.5..0.9 and h in 0..1 step 0.25")
@_common_options
def diagnose_cmd(**params):
    """Detrend a window, write the log-time periodogram and (h,q) curves."""
    params = _apply_config(params, params.pop("config_path"))
    run = _Run(params["out_dir"])
    try:
        series = load_csv(params["input_path"])
        tc_days = params["tc_days"]
        window_spec = params["window_spec"]
        if params["fit_json"]:
            with open(params["fit_json"], encoding="utf-8") as fh:
                fit_doc = json.load(fh)
            tc_days = float(fit_doc["tc_days_from_start"])
            if window_spec is None:
                window_spec = (
                    f"{fit_doc['window']['t1_date']}:{fit_doc['window']['t2_date']}"
                )
        if tc_days is None or window_spec is None:
            raise click.UsageError(
                "provide --tc-from-fit, or both --window and --tc-days"
            )
        sub = series.slice(_resolve_window(series, window_spec))
        residuals = detrend_power_law(sub, tc_days)
        write_residuals_csv(residuals, sub, run.path("residuals.csv"))
        omegas = np.geomspace(params["omega_min"], params["omega_max"], params["n_freq"])
        write_periodogram_csv(
            lomb_periodogram(residuals, omegas), run.path("periodogram.csv")
        )
        if params["hq_sweep"]:
            hs = [0.0, 0.25, 0.5, 0.75, 1.0]
            qs = [0.5, 0.6, 0.7, 0.8, 0.9]
        else:
            hs = _parse_floats(params["hq_h"], "hq-h")
            qs = _parse_floats(params["hq_q"], "hq-q")
        for h in hs:
            for q in qs:
                hq = hq_derivative(sub, tc_days, h=h, q=q)
                write_hq_csv(hq, run.path(f"hq_h{h:g}_q{q:g}.csv"))
    except Exception as exc:
        _fail_clean(run, exc)
    manifest = run.manifest("diagnose", params, params["input_path"])
    click.echo(f"diagnose: wrote {len(run.outputs)} file(s); manifest {manifest}")


@main.command("sigtest")
@click.option("--residuals", "residuals_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="residuals.csv produced by diagnose")
@click.option("--models", default="white,ar1,fgn,levy", show_default=True)
@click.option("--n", "n_surrogates", type=int, default=100, show_default=True)
@click.option("--ar1-phi1", type=float, default=None,
              help="AR(1) coefficient; default estimates it from the residuals")
@click.option("--fgn-hurst", type=float, default=0.7, show_default=True)
@click.option("--levy-alpha", type=float, default=1.7, show_default=True)
@click.option("--omega-min", type=float, default=0.2, show_default=True)
@click.option("--omega-max", type=float, default=20.0, show_default=True)
@click.option("--n-freq", type=int, default=1000, show_default=True)
@click.option("--out", "out_name", default="sigtest.json", show_default=True)
@_common_options
def sigtest_cmd(**params):
    """Surrogate-data significance of the observed spectral peak."""
    params = _apply_config(params, params.pop("config_path"))
    run = _Run(params["out_dir"])
    try:
        residuals = read_residuals_csv(params["residuals_path"])
        omegas = np.geomspace(params["omega_min"], params["omega_max"], params["n_freq"])
        results = []
        for name in params["models"].split(","):
            key = name.strip().lower()
            if key not in _MODEL_ALIASES:
                raise click.UsageError(f"unknown model {name!r}")
            config = SurrogateConfig(
                model=_MODEL_ALIASES[key],
                n_surrogates=params["n_surrogates"],
                seed=params["seed"],
                ar1_phi1=params["ar1_phi1"],
                fgn_hurst=params["fgn_hurst"],
                levy_alpha=params["levy_alpha"],
            )
            outcome = significance_test(residuals, omegas, config)
            results.append(significance_dict(outcome, params["n_surrogates"]))
        dump_json({"results": results}, run.path(params["out_name"]))
    except Exception as exc:
        _fail_clean(run, exc)
    manifest = run.manifest("sigtest", params, params["residuals_path"])
    summary = ", ".join(f"{r['model']}: p = {r['p_value']:.2f}" for r in results)
    click.echo(f"sigtest: {summary}; manifest {manifest}")


@main.command("synth")
@click.option("--tc", type=float, required=True,
              help="critical time in trading days from the bubble start")
@click.option("--beta", type=float, required=True)
@click.option("--omega", type=float, required=True)
@click.option("--a", type=float, default=16.0, show_default=True)
@click.option("--b", type=float, default=-0.6, show_default=True)
@click.option("--c1", type=float, default=0.01, show_default=True)
@click.option("--c2", type=float, default=0.005, show_default=True)
@click.option("--n-days", type=int, default=200, show_default=True)
@click.option("--start-date", default="2019-01-01", show_default=True)
@click.option("--noise-model", default="white_gaussian", show_default=True)
@click.option("--noise-sigma", type=float, default=0.0, show_default=True)
@click.option("--ar1-phi1", type=float, default=0.5, show_default=True)
@click.option("--fgn-hurst", type=float, default=0.7, show_default=True)
@click.option("--levy-alpha", type=float, default=1.7, show_default=True)
@click.option("--prebubble-days", type=int, default=0, show_default=True,
              help="random-walk days to prepend before the bubble")
@click.option("--prebubble-vol", type=float, default=0.01, show_default=True)
@click.option("--out", "out_name", default="synth.csv", show_default=True)
@_common_options
def synth_cmd(**params):
    """Generate a synthetic price CSV with planted model parameters."""
    params = _apply_config(params, params.pop("config_path"))
    run = _Run(params["out_dir"])
    try:
        planted = LpplsParams(
            tc=params["tc"], beta=params["beta"], omega=params["omega"],
            a=params["a"], b=params["b"], c1=params["c1"], c2=params["c2"],
        )
        noise = NoiseSpec(
            model=params["noise_model"], sigma=params["noise_sigma"],
            ar1_phi1=params["ar1_phi1"], fgn_hurst=params["fgn_hurst"],
            levy_alpha=params["levy_alpha"],
        )
        synthetic = make_series(
            planted,
            params["n_days"],
            start_date=_parse_date(params["start_date"], "start-date"),
            noise=noise,
            seed=params["seed"],
            prebubble_days=params["prebubble_days"],
            prebubble_vol=params["prebubble_vol"],
        )
        export_csv(synthetic.series, run.path(params["out_name"]))
    except Exception as exc:
        _fail_clean(run, exc)
    config = dict(params, changepoint_index=synthetic.changepoint)
    manifest = run.manifest("synth", config)
    click.echo(
        f"synth: {len(synthetic.series)} rows, changepoint at "
        f"{synthetic.changepoint}; manifest {manifest}"
    )


if __name__ == "__main__":
    main()
