"""Trading-day indexed price series: CSV ingestion, validation, slicing.

The time unit everywhere is the *trading-day index*: observation i gets
t = i, regardless of calendar gaps (weekends, holidays, halts). Calendar
dates are retained for reporting only.
"""

from __future__ import annotations

import csv
import datetime
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DuplicateDate,
    EmptySeries,
    MalformedRow,
    NonPositivePrice,
    WindowOutOfRange,
)

#: Minimum number of observations for any series or calibration window.
MIN_OBSERVATIONS = 30

_NA_MARKERS = frozenset({"", "na", "nan", "null", "none"})


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Window:
    """Inclusive trading-day index span [t1, t2].

    Ordering is checked at construction; whether the span fits a given
    series (and meets the 30-observation calibration floor) is checked
    where the window is consumed.
    """

    t1: int
    t2: int

    def __post_init__(self):
        if self.t1 < 0 or self.t1 >= self.t2:
            raise WindowOutOfRange(f"need 0 <= t1 < t2, got ({self.t1}, {self.t2})")

    @property
    def n_obs(self) -> int:
        return self.t2 - self.t1 + 1

    @property
    def size(self) -> int:
        """Span in trading days (t2 - t1), the unit used by scan penalties."""
        return self.t2 - self.t1


@dataclass(frozen=True, eq=False)
class PriceSeries:
    """Immutable daily price observations on a gap-free trading-day index.

    Invariants enforced at construction:

    * dates strictly increasing (no duplicates),
    * prices strictly positive and finite,
    * t_index == 0..N-1,
    * log_prices == ln(prices).
    """

    dates: np.ndarray
    prices: np.ndarray
    dropped_rows: int = 0
    t_index: np.ndarray = field(init=False, repr=False)
    log_prices: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        dates = np.asarray(self.dates, dtype="datetime64[D]")
        prices = np.array(self.prices, dtype=float)
        if dates.ndim != 1 or prices.ndim != 1 or dates.shape != prices.shape:
            raise ValueError("dates and prices must be 1-d arrays of equal length")
        if dates.size == 0:
            raise EmptySeries("series has no observations")
        gaps = np.diff(dates).astype(int)
        if np.any(gaps == 0):
            dup = dates[1:][gaps == 0][0]
            raise DuplicateDate(f"duplicate date {dup}")
        if np.any(gaps < 0):
            raise ValueError("dates must be strictly increasing")
        bad = ~np.isfinite(prices) | (prices <= 0)
        if np.any(bad):
            i = int(np.argmax(bad))
            raise NonPositivePrice(f"price {prices[i]} at position {i}")
        object.__setattr__(self, "dates", _readonly(dates))
        object.__setattr__(self, "prices", _readonly(prices))
        object.__setattr__(self, "t_index", _readonly(np.arange(prices.size)))
        object.__setattr__(self, "log_prices", _readonly(np.log(prices)))

    def __len__(self) -> int:
        return self.prices.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, PriceSeries):
            return NotImplemented
        return (
            len(self) == len(other)
            and bool(np.all(self.dates == other.dates))
            and bool(np.all(self.prices == other.prices))
        )

    def slice(self, window: Window) -> "PriceSeries":
        """Sub-series over [t1, t2], re-indexed so t starts at 0."""
        if window.t2 > len(self) - 1:
            raise WindowOutOfRange(
                f"window ({window.t1}, {window.t2}) exceeds series of length {len(self)}"
            )
        return PriceSeries(
            self.dates[window.t1 : window.t2 + 1],
            self.prices[window.t1 : window.t2 + 1],
        )

    def index_of_date(self, date) -> int:
        """Trading-day index of an exact calendar date, or KeyError."""
        d = np.datetime64(date, "D")
        hits = np.nonzero(self.dates == d)[0]
        if hits.size == 0:
            raise KeyError(f"{d} is not a trading day of this series")
        return int(hits[0])


def load_csv(path, date_col: str = "date", price_col: str = "adj_close") -> PriceSeries:
    """Load a PriceSeries from a UTF-8 CSV with a header row.

    Dates must be ISO-8601 (YYYY-MM-DD); prices must be positive decimals.
    Rows whose price cell is empty (or an NA marker) are dropped and
    counted in ``dropped_rows``. Rows are sorted by date before indexing.

    Row numbers in errors are 1-based data rows, header excluded.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in (date_col, price_col) if c not in header]
        if missing:
            raise MalformedRow(f"header is missing column(s) {missing}")
        dates: list[datetime.date] = []
        prices: list[float] = []
        dropped = 0
        for row_no, row in enumerate(reader, start=1):
            raw_date = (row.get(date_col) or "").strip()
            raw_price = (row.get(price_col) or "").strip()
            if raw_price.lower() in _NA_MARKERS:
                dropped += 1
                continue
            try:
                d = datetime.date.fromisoformat(raw_date)
            except ValueError:
                raise MalformedRow(f"row {row_no}: bad date {raw_date!r}") from None
            try:
                p = float(raw_price)
            except ValueError:
                raise MalformedRow(f"row {row_no}: bad price {raw_price!r}") from None
            if not np.isfinite(p) or p <= 0:
                raise NonPositivePrice(f"row {row_no}: price {p}")
            dates.append(d)
            prices.append(p)
    if len(prices) < MIN_OBSERVATIONS:
        raise EmptySeries(
            f"{len(prices)} valid rows; need at least {MIN_OBSERVATIONS}"
        )
    order = sorted(range(len(dates)), key=dates.__getitem__)
    dates_sorted = [dates[i] for i in order]
    for a, b in zip(dates_sorted, dates_sorted[1:]):
        if a == b:
            raise DuplicateDate(f"duplicate date {a.isoformat()}")
    return PriceSeries(
        np.array(dates_sorted, dtype="datetime64[D]"),
        np.array([prices[i] for i in order]),
        dropped_rows=dropped,
    )


def export_csv(series: PriceSeries, path) -> None:
    """Write the input schema plus derived columns (t_index, log_price).

    Prices and log-prices are written with repr precision so that a
    reload reproduces the series bit for bit.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["date", "adj_close", "t_index", "log_price"])
        for d, p, t, lp in zip(
            series.dates, series.prices, series.t_index, series.log_prices
        ):
            writer.writerow([str(d), repr(float(p)), int(t), repr(float(lp))])


def calendar_days_per_trading_day(series: PriceSeries) -> float:
    """Median calendar-days elapsed per trading day, over 5-trading-day spans.

    Captures the series' weekly trading pattern (e.g. 7/5 = 1.4 for a
    five-day week) while staying robust to isolated long halts.
    """
    dates = series.dates
    span = 5 if len(dates) > 5 else 1
    gaps = (dates[span:] - dates[:-span]).astype(int) / span
    return float(np.median(gaps))


def project_date(series: PriceSeries, t: float) -> datetime.date:
    """Calendar date for a (possibly fractional or out-of-range) trading-day t.

    Inside the observed range, rounds to the nearest observation's date.
    Beyond the last observation, extends the calendar at the series'
    median trading-week pace; the result is an extrapolation, not a
    quoted trading day.
    """
    n = len(series)
    if t <= n - 1:
        i = min(max(int(round(t)), 0), n - 1)
        return series.dates[i].astype(datetime.date)
    pace = calendar_days_per_trading_day(series)
    extra = int(round((t - (n - 1)) * pace))
    return (series.dates[-1] + np.timedelta64(extra, "D")).astype(datetime.date)
