"""Daily close-price series on a calendar-day time axis.

Prices are log-transformed at ingestion; every downstream computation works
on log-prices.  Numeric time of an observation is the (integer) number of
calendar days since the series origin, so weekends count even though they
carry no observation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import date, timedelta

import numpy as np

__all__ = [
    "PriceSeries",
    "Window",
    "Gap",
    "CsvError",
    "EmptyWindowError",
    "load_csv",
    "fill_gaps",
    "window",
    "gaps_to_json",
]

DEFAULT_MIN_OBSERVATIONS = 30


class CsvError(ValueError):
    """Malformed or out-of-domain CSV input; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyWindowError(ValueError):
    pass


@dataclass(frozen=True)
class PriceSeries:
    """Dated log-price observations.

    dates       strictly increasing calendar dates
    log_prices  natural log of close, same length as dates
    origin      date mapped to numeric time 0
    """

    dates: tuple[date, ...]
    log_prices: np.ndarray
    origin: date

    def __post_init__(self):
        lp = np.asarray(self.log_prices, dtype=float)
        lp.flags.writeable = False
        object.__setattr__(self, "log_prices", lp)
        object.__setattr__(self, "dates", tuple(self.dates))
        if len(self.dates) != lp.shape[0]:
            raise ValueError("dates and log_prices length mismatch")
        if not np.isfinite(lp).all():
            raise ValueError("log_prices must be finite")
        for a, b in zip(self.dates, self.dates[1:]):
            if a >= b:
                raise ValueError(f"dates not strictly increasing at {b}")
        times = np.array([(d - self.origin).days for d in self.dates], dtype=float)
        times.flags.writeable = False
        object.__setattr__(self, "_times", times)

    _times: np.ndarray = field(init=False, repr=False, compare=False)

    @property
    def times(self) -> np.ndarray:
        """Numeric times: whole calendar days since origin."""
        return self._times

    def __len__(self) -> int:
        return len(self.dates)

    def time_of(self, d: date) -> float:
        return float((d - self.origin).days)


@dataclass(frozen=True)
class Window:
    """Analysis window [t1, t2] of width dt calendar days."""

    t1: date
    t2: date

    def __post_init__(self):
        if self.t1 >= self.t2:
            raise ValueError("window requires t1 < t2")

    @property
    def dt(self) -> int:
        return (self.t2 - self.t1).days


@dataclass(frozen=True)
class Gap:
    """A run of missing business days between two observations."""

    start: date
    end: date
    filled: bool

    def n_days(self) -> int:
        return (self.end - self.start).days + 1


def load_csv(path) -> PriceSeries:
    """Read a ``date,close`` CSV into a PriceSeries of log close prices.

    Rows may arrive unsorted; output is sorted by date.  Duplicate dates,
    malformed rows and non-positive prices raise CsvError with the line
    number.
    """
    rows: list[tuple[date, float]] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvError("empty file") from None
        cols = [c.strip().lower() for c in header[:2]]
        if cols != ["date", "close"]:
            raise CsvError(f"expected header 'date,close', got {header!r}", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < 2:
                raise CsvError("expected two columns 'date,close'", line=lineno)
            try:
                d = date.fromisoformat(row[0].strip())
            except ValueError:
                raise CsvError(f"bad ISO date {row[0]!r}", line=lineno) from None
            try:
                close = float(row[1])
            except ValueError:
                raise CsvError(f"bad close value {row[1]!r}", line=lineno) from None
            if not math.isfinite(close) or close <= 0.0:
                raise CsvError(f"non-positive close {close!r} on {d}", line=lineno)
            rows.append((d, math.log(close)))
    if not rows:
        raise CsvError("no data rows")
    rows.sort(key=lambda r: r[0])
    for (a, _), (b, _) in zip(rows, rows[1:]):
        if a == b:
            raise CsvError(f"duplicate date {a}")
    dates = tuple(r[0] for r in rows)
    lp = np.array([r[1] for r in rows])
    return PriceSeries(dates=dates, log_prices=lp, origin=dates[0])


def _business_days_between(a: date, b: date) -> list[date]:
    """Weekdays strictly between a and b."""
    out = []
    d = a + timedelta(days=1)
    while d < b:
        if d.weekday() < 5:
            out.append(d)
        d += timedelta(days=1)
    return out


def fill_gaps(series: PriceSeries, max_gap_days: int) -> tuple[PriceSeries, list[Gap]]:
    """Carry the previous close forward over short runs of missing business days.

    A run of up to max_gap_days missing weekdays (an extended exchange
    closure) is filled with the prior close; longer runs are reported but
    left unfilled.  Ordinary weekends are never inserted: the calendar-day
    time axis already accounts for them.

    Returns the (possibly extended) series and the structured gap report.
    """
    if len(series) == 0:
        raise ValueError("series is empty")
    out_dates: list[date] = [series.dates[0]]
    out_lp: list[float] = [float(series.log_prices[0])]
    gaps: list[Gap] = []
    for i in range(1, len(series)):
        prev_d, cur_d = series.dates[i - 1], series.dates[i]
        missing = _business_days_between(prev_d, cur_d)
        if missing:
            if len(missing) <= max_gap_days:
                prev_lp = float(series.log_prices[i - 1])
                out_dates.extend(missing)
                out_lp.extend([prev_lp] * len(missing))
                gaps.append(Gap(missing[0], missing[-1], filled=True))
            else:
                gaps.append(Gap(missing[0], missing[-1], filled=False))
        out_dates.append(cur_d)
        out_lp.append(float(series.log_prices[i]))
    filled = PriceSeries(dates=tuple(out_dates), log_prices=np.array(out_lp),
                         origin=series.origin)
    return filled, gaps


def window(series: PriceSeries, t1: date, t2: date) -> PriceSeries:
    """Sub-series of observations in [t1, t2], keeping the parent origin."""
    if t1 >= t2:
        raise ValueError("window requires t1 < t2")
    idx = [i for i, d in enumerate(series.dates) if t1 <= d <= t2]
    if not idx:
        raise EmptyWindowError(f"no observations in [{t1}, {t2}]")
    dates = tuple(series.dates[i] for i in idx)
    lp = series.log_prices[idx]
    return PriceSeries(dates=dates, log_prices=lp, origin=series.origin)


def gaps_to_json(gaps: list[Gap]) -> list[dict]:
    return [
        {"start": g.start.isoformat(), "end": g.end.isoformat(), "filled": g.filled}
        for g in gaps
    ]
