"""Forecast accuracy metrics, the weekly-copy baseline, and breakdowns.

Percentage errors use the convention 100*(actual - forecast)/actual, so
over-forecasting drives the mean percentage error negative.  Interval tallies
count boundary hits as covered.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .timeseries import HOURS_PER_DAY, HOURS_PER_WEEK, HourlySeries


def quantile(sample, q: float) -> float:
    """Linear-interpolation quantile with inclusive endpoints."""
    arr = np.asarray(sample, dtype=float)
    if arr.size == 0:
        raise ValidationError("quantile of an empty sample")
    if not 0.0 <= q <= 1.0:
        raise ValidationError("quantile order must lie in [0, 1]")
    return float(np.quantile(arr, q))


@dataclass
class MetricsReport:
    """Aggregate accuracy numbers for one evaluation set."""

    mape: float
    mdape: float
    iqr_ape: float
    rmse: float
    mpe: float
    std_pe: float
    n_hours: int
    pi_inside: float = None
    pi_below: float = None
    pi_above: float = None
    by_hour: dict = field(default_factory=dict)
    by_weekday: dict = field(default_factory=dict)
    by_month: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {
            "mape": self.mape,
            "mdape": self.mdape,
            "iqr_ape": self.iqr_ape,
            "rmse": self.rmse,
            "mpe": self.mpe,
            "std_pe": self.std_pe,
            "n_hours": self.n_hours,
        }
        if self.pi_inside is not None:
            out["pi_inside"] = self.pi_inside
            out["pi_below"] = self.pi_below
            out["pi_above"] = self.pi_above
        for key, table in (
            ("by_hour", self.by_hour),
            ("by_weekday", self.by_weekday),
            ("by_month", self.by_month),
        ):
            if table:
                out[key] = {str(k): v for k, v in sorted(table.items())}
        return out


def _grouped_mape(ape, keys) -> dict:
    table = {}
    for key in sorted(set(keys)):
        mask = keys == key
        table[int(key)] = float(ape[mask].mean())
    return table


def compute_metrics(
    actuals,
    forecasts,
    lower=None,
    upper=None,
    timestamps=None,
) -> MetricsReport:
    """Score point forecasts (and optionally interval bounds) against actuals."""
    z = np.asarray(actuals, dtype=float)
    z_hat = np.asarray(forecasts, dtype=float)
    if z.shape != z_hat.shape or z.ndim != 1 or z.size == 0:
        raise ValidationError("actuals and forecasts must be equal-length 1-D arrays")
    if not np.isfinite(z).all() or (z <= 0).any():
        raise ValidationError("actuals must be positive and finite")
    if not np.isfinite(z_hat).all():
        raise ValidationError("forecasts must be finite")
    pe = 100.0 * (z - z_hat) / z
    ape = np.abs(pe)
    report = MetricsReport(
        mape=float(ape.mean()),
        mdape=quantile(ape, 0.5),
        iqr_ape=quantile(ape, 0.75) - quantile(ape, 0.25),
        rmse=float(np.sqrt(np.mean((z - z_hat) ** 2))),
        mpe=float(pe.mean()),
        std_pe=float(pe.std()),
        n_hours=int(z.size),
    )
    if (lower is None) != (upper is None):
        raise ValidationError("provide both interval bounds or neither")
    if lower is not None:
        lo = np.asarray(lower, dtype=float)
        hi = np.asarray(upper, dtype=float)
        if lo.shape != z.shape or hi.shape != z.shape:
            raise ValidationError("interval bounds must match the actuals' length")
        below = z < lo
        above = z > hi
        inside = ~(below | above)
        report.pi_inside = 100.0 * float(inside.sum()) / z.size
        report.pi_below = 100.0 * float(below.sum()) / z.size
        report.pi_above = 100.0 * float(above.sum()) / z.size
    if timestamps is not None:
        if len(timestamps) != z.size:
            raise ValidationError("timestamps must match the actuals' length")
        hours = np.array([t.hour for t in timestamps])
        weekdays = np.array([t.weekday() for t in timestamps])
        months = np.array([t.month for t in timestamps])
        report.by_hour = _grouped_mape(ape, hours)
        report.by_weekday = _grouped_mape(ape, weekdays)
        report.by_month = _grouped_mape(ape, months)
    return report


def mean_report(reports) -> MetricsReport:
    """Unweighted cross-series mean of per-series aggregate metrics."""
    reports = list(reports)
    if not reports:
        raise ValidationError("no reports to average")

    def avg(name):
        values = [getattr(r, name) for r in reports]
        if any(v is None for v in values):
            return None
        return float(np.mean(values))

    return MetricsReport(
        mape=avg("mape"),
        mdape=avg("mdape"),
        iqr_ape=avg("iqr_ape"),
        rmse=avg("rmse"),
        mpe=avg("mpe"),
        std_pe=avg("std_pe"),
        n_hours=int(sum(r.n_hours for r in reports)),
        pi_inside=avg("pi_inside"),
        pi_below=avg("pi_below"),
        pi_above=avg("pi_above"),
    )


def naive_forecast(series: HourlySeries, target_day: int) -> np.ndarray:
    """Copy of the daily profile one week before target_day."""
    if target_day < 7:
        raise ValidationError("weekly-copy baseline needs 7 days of history")
    lo = (target_day - 7) * HOURS_PER_DAY
    hi = lo + HOURS_PER_DAY
    if hi > len(series):
        raise ValidationError("series too short for the requested day")
    return series.values[lo:hi].copy()


def naive_range(series: HourlySeries, first_day: int, n_days: int) -> np.ndarray:
    """Weekly-copy baseline over consecutive days, flattened hourly."""
    return np.concatenate(
        [naive_forecast(series, first_day + k) for k in range(n_days)]
    )
