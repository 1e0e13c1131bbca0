"""Hourly series container, CSV IO, calendar features, and variability
diagnostics.

Input CSV layout: header ``series_id,timestamp,value`` with timestamps on
exact hours (``2016-01-01T13:00:00``).  Each series must be hourly-continuous
and strictly positive; anything else is a ValidationError.

The diagnostics quantify how strongly a series varies at daily, weekly and
yearly scales and how much of its variance sits in individual harmonics.
All standard deviations here are population ones (ddof=0).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import date, datetime, timedelta

import numpy as np

from .errors import ValidationError

HOURS_PER_DAY = 24
HOURS_PER_WEEK = 168
DAYS_PER_WEEK = 7
WEEKS_PER_YEAR = 52

TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M:%S"


@dataclass
class HourlySeries:
    series_id: str
    start: datetime
    values: np.ndarray  # 1-D float64, strictly positive

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1 or self.values.size == 0:
            raise ValidationError(f"{self.series_id}: values must be a non-empty 1-D array")
        if not np.isfinite(self.values).all() or (self.values <= 0).any():
            raise ValidationError(f"{self.series_id}: values must be finite and positive")
        if self.start.minute or self.start.second or self.start.microsecond:
            raise ValidationError(f"{self.series_id}: start must be on an exact hour")

    def __len__(self):
        return self.values.size

    def hour_at(self, index: int) -> datetime:
        return self.start + timedelta(hours=index)

    def index_of(self, stamp: datetime) -> int:
        delta = stamp - self.start
        hours = delta.days * 24 + delta.seconds // 3600
        if delta.seconds % 3600 or delta.microseconds:
            raise ValidationError(f"{stamp} is not on an exact hour of {self.series_id}")
        if not 0 <= hours < len(self):
            raise ValidationError(f"{stamp} outside {self.series_id} range")
        return hours


def parse_timestamp(text: str) -> datetime:
    try:
        stamp = datetime.strptime(text, TIMESTAMP_FORMAT)
    except ValueError as err:
        raise ValidationError(f"bad timestamp {text!r}") from err
    if stamp.minute or stamp.second:
        raise ValidationError(f"timestamp {text!r} is not on an exact hour")
    return stamp


def format_timestamp(stamp: datetime) -> str:
    return stamp.strftime(TIMESTAMP_FORMAT)


def load_series_csv(path) -> list[HourlySeries]:
    """Read every series from a CSV file, validating hourly continuity."""
    order: list[str] = []
    stamps: dict[str, list[datetime]] = {}
    values: dict[str, list[float]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["series_id", "timestamp", "value"]:
            raise ValidationError(f"{path}: expected header series_id,timestamp,value")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 3:
                raise ValidationError(f"{path}:{lineno}: expected 3 columns")
            sid, ts, val = row
            if sid not in values:
                order.append(sid)
                stamps[sid] = []
                values[sid] = []
            stamp = parse_timestamp(ts)
            prev = stamps[sid][-1] if stamps[sid] else None
            if prev is not None and stamp - prev != timedelta(hours=1):
                raise ValidationError(
                    f"{path}:{lineno}: {sid} jumps from {prev} to {stamp}; "
                    "series must be hourly-continuous and in order"
                )
            try:
                number = float(val)
            except ValueError as err:
                raise ValidationError(f"{path}:{lineno}: bad value {val!r}") from err
            if not np.isfinite(number) or number <= 0:
                raise ValidationError(f"{path}:{lineno}: value must be finite and positive")
            stamps[sid].append(stamp)
            values[sid].append(number)
    if not order:
        raise ValidationError(f"{path}: no data rows")
    return [HourlySeries(sid, stamps[sid][0], np.array(values[sid])) for sid in order]


def write_series_csv(path, series_list):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["series_id", "timestamp", "value"])
        for series in series_list:
            for i, v in enumerate(series.values):
                writer.writerow([series.series_id, format_timestamp(series.hour_at(i)), repr(float(v))])


# -- calendar features -------------------------------------------------------

DOW_SIZE = 7
DOM_SIZE = 31
WOY_SIZE = 52
CALENDAR_ONE_HOT_SIZE = DOW_SIZE + DOM_SIZE + WOY_SIZE  # 90


@dataclass(frozen=True)
class CalendarFeatures:
    day_of_week: int   # 0 = Monday
    day_of_month: int  # 0-based
    week_of_year: int  # ISO week - 1, week 53 clamped onto index 51


def calendar_for(day: date) -> CalendarFeatures:
    iso_week = day.isocalendar()[1]
    return CalendarFeatures(
        day_of_week=day.weekday(),
        day_of_month=day.day - 1,
        week_of_year=min(iso_week - 1, WOY_SIZE - 1),
    )


def calendar_one_hot(features: CalendarFeatures) -> np.ndarray:
    """Stacked one-hot blocks for week day, month day, year week: (90, 1)."""
    vec = np.zeros((CALENDAR_ONE_HOT_SIZE, 1))
    vec[features.day_of_week, 0] = 1.0
    vec[DOW_SIZE + features.day_of_month, 0] = 1.0
    vec[DOW_SIZE + DOM_SIZE + features.week_of_year, 0] = 1.0
    return vec


# -- diagnostics --------------------------------------------------------------


def variation_coefficient(values) -> float:
    """100 * population std / mean."""
    arr = np.asarray(values, dtype=np.float64)
    mean = arr.mean()
    if mean == 0:
        raise ValueError("variation coefficient undefined for zero-mean data")
    return float(100.0 * arr.std() / mean)


def harmonic_contributions(values) -> np.ndarray:
    """Percent of variance carried by each harmonic (index 1 .. n//2).

    Entry i-1 is the share of harmonic i, so the array sums to 100 by
    Parseval.  The Nyquist bin (even n) carries its full, unmirrored power.
    """
    arr = np.asarray(values, dtype=np.float64)
    n = arr.size
    var = arr.var()
    if var == 0:
        raise ValueError("constant series has no harmonic decomposition")
    spectrum = np.fft.rfft(arr)
    power = 2.0 * np.abs(spectrum[1:]) ** 2 / n**2
    if n % 2 == 0:
        power[-1] /= 2.0
    return 100.0 * power / var


def harmonic_contribution(values, index: int) -> float:
    shares = harmonic_contributions(values)
    if not 1 <= index <= shares.size:
        raise ValueError(f"harmonic index {index} out of range 1..{shares.size}")
    return float(shares[index - 1])


def daily_pattern_distance(day_a, day_b) -> float:
    """Euclidean distance between centered, unit-norm daily profiles.

    Invariant under positive scaling and shifts of either day, so it isolates
    shape differences; ranges from 0 (same shape) to 2 (opposite shape).
    """
    out = []
    for day in (day_a, day_b):
        arr = np.asarray(day, dtype=np.float64)
        arr = arr - arr.mean()
        norm = np.linalg.norm(arr)
        if norm == 0:
            raise ValueError("flat day has no pattern")
        out.append(arr / norm)
    return float(np.linalg.norm(out[0] - out[1]))


def _mean_relative_spread(chunks) -> float:
    return float(np.mean([100.0 * c.std() / c.mean() for c in chunks]))


def variation_profile(values) -> dict:
    """v_d, v_w, v_y: variability at daily, weekly and yearly scales.

    v_d averages the per-day 100*std/mean over full days; v_w does the same
    over weeks of daily means; v_y over years of weekly means (52-week
    years).  Scales without a complete period come back as None.
    """
    arr = np.asarray(values, dtype=np.float64)
    n_days = arr.size // HOURS_PER_DAY
    profile = {"v_d": None, "v_w": None, "v_y": None}
    if n_days == 0:
        return profile
    days = arr[: n_days * HOURS_PER_DAY].reshape(n_days, HOURS_PER_DAY)
    profile["v_d"] = _mean_relative_spread(days)
    daily_means = days.mean(axis=1)
    n_weeks = n_days // DAYS_PER_WEEK
    if n_weeks == 0:
        return profile
    weeks = daily_means[: n_weeks * DAYS_PER_WEEK].reshape(n_weeks, DAYS_PER_WEEK)
    profile["v_w"] = _mean_relative_spread(weeks)
    weekly_means = weeks.mean(axis=1)
    n_years = n_weeks // WEEKS_PER_YEAR
    if n_years == 0:
        return profile
    years = weekly_means[: n_years * WEEKS_PER_YEAR].reshape(n_years, WEEKS_PER_YEAR)
    profile["v_y"] = _mean_relative_spread(years)
    return profile
