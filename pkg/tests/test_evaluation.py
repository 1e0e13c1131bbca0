from datetime import datetime, timedelta

import numpy as np
import pytest

from loadcast.errors import ValidationError
from loadcast.evaluation import (
    compute_metrics,
    mean_report,
    naive_forecast,
    naive_range,
    quantile,
)
from loadcast.synthetic import generate_fleet
from loadcast.timeseries import HOURS_PER_WEEK, HourlySeries


def test_quantile_examples():
    assert quantile([1, 2, 3, 4], 0.5) == 2.5
    assert quantile([3, 1, 2], 0.0) == 1.0
    assert quantile([3, 1, 2], 1.0) == 3.0
    assert quantile([7.5], 0.3) == 7.5
    with pytest.raises(ValidationError):
        quantile([], 0.5)
    with pytest.raises(ValidationError):
        quantile([1.0], 1.5)


def test_quantile_matches_sort_based_rule():
    rng = np.random.default_rng(0)
    sample = rng.normal(size=101)
    ordered = np.sort(sample)
    for q in (0.25, 0.5, 0.75, 0.9):
        pos = q * (sample.size - 1)
        lo = int(np.floor(pos))
        frac = pos - lo
        expect = ordered[lo] + frac * (ordered[min(lo + 1, sample.size - 1)] - ordered[lo])
        assert abs(quantile(sample, q) - expect) < 1e-12


def test_metrics_hand_example():
    report = compute_metrics([100.0, 100.0], [110.0, 90.0])
    assert abs(report.mape - 10.0) < 1e-12
    assert abs(report.mpe - 0.0) < 1e-12
    assert abs(report.rmse - 10.0) < 1e-12
    assert abs(report.std_pe - 10.0) < 1e-12


def test_metrics_perfect_forecast():
    z = np.linspace(50.0, 60.0, 48)
    report = compute_metrics(z, z.copy(), lower=z - 1.0, upper=z + 1.0)
    assert report.mape == 0.0 and report.rmse == 0.0 and report.mdape == 0.0
    assert report.pi_inside == 100.0 and report.pi_below == 0.0


def test_interval_tallies_are_exhaustive():
    rng = np.random.default_rng(1)
    z = rng.uniform(90.0, 110.0, 500)
    z_hat = z * (1.0 + 0.02 * rng.standard_normal(500))
    lo = z_hat * 0.99
    hi = z_hat * 1.01
    report = compute_metrics(z, z_hat, lower=lo, upper=hi)
    assert abs(report.pi_inside + report.pi_below + report.pi_above - 100.0) < 1e-9
    assert report.pi_below > 0 and report.pi_above > 0
    # boundary hit counts as covered
    single = compute_metrics([100.0], [100.0], lower=[100.0], upper=[101.0])
    assert single.pi_inside == 100.0


def test_metrics_permutation_invariant_and_mpe_bound():
    rng = np.random.default_rng(2)
    z = rng.uniform(80.0, 120.0, 200)
    z_hat = z * (1.0 + 0.05 * rng.standard_normal(200))
    a = compute_metrics(z, z_hat)
    perm = rng.permutation(200)
    b = compute_metrics(z[perm], z_hat[perm])
    for name in ("mape", "mdape", "iqr_ape", "rmse", "mpe", "std_pe"):
        assert abs(getattr(a, name) - getattr(b, name)) < 1e-9
    assert abs(a.mpe) <= a.mape
    # iqr definition cross-check
    ape = np.abs(100.0 * (z - z_hat) / z)
    assert abs(a.iqr_ape - (np.quantile(ape, 0.75) - np.quantile(ape, 0.25))) < 1e-12


def test_metrics_validation():
    with pytest.raises(ValidationError):
        compute_metrics([1.0, 2.0], [1.0])
    with pytest.raises(ValidationError):
        compute_metrics([1.0, 0.0], [1.0, 1.0])
    with pytest.raises(ValidationError):
        compute_metrics([1.0], [1.0], lower=[0.5], upper=None)


def test_breakdowns_key_by_time():
    start = datetime(2024, 3, 30, 0)  # Saturday, crosses into April
    stamps = [start + timedelta(hours=h) for h in range(72)]
    z = np.full(72, 100.0)
    z_hat = z.copy()
    z_hat[::24] = 90.0  # miss only at midnight
    report = compute_metrics(z, z_hat, timestamps=stamps)
    assert report.by_hour[0] == 10.0
    assert report.by_hour[12] == 0.0
    assert set(report.by_month) == {3, 4}
    assert set(report.by_weekday) == {5, 6, 0}
    assert "by_hour" in report.as_dict()


def test_mean_report_averages_fields():
    a = compute_metrics([100.0, 100.0], [110.0, 90.0])
    b = compute_metrics([100.0, 100.0], [105.0, 95.0])
    merged = mean_report([a, b])
    assert abs(merged.mape - 7.5) < 1e-12
    assert merged.n_hours == 4
    assert merged.pi_inside is None
    with pytest.raises(ValidationError):
        mean_report([])


def test_naive_forecast_weekly_copy():
    t = np.arange(3 * HOURS_PER_WEEK, dtype=float)
    values = 100.0 + 10.0 * np.sin(2 * np.pi * t / HOURS_PER_WEEK)
    series = HourlySeries("W", datetime(2024, 1, 1), values)
    np.testing.assert_array_equal(naive_forecast(series, 7), values[:24])
    # weekly-periodic series: zero error
    np.testing.assert_allclose(naive_forecast(series, 14), values[7 * 24 : 8 * 24], rtol=1e-12)
    with pytest.raises(ValidationError):
        naive_forecast(series, 6)
    # forecasting just past the data is fine; the source week must exist
    assert naive_forecast(series, 21).shape == (24,)
    with pytest.raises(ValidationError):
        naive_forecast(series, 28)
    flat = naive_range(series, 7, 2)
    assert flat.shape == (48,)


def test_naive_on_shifted_week():
    values = np.full(2 * HOURS_PER_WEEK, 100.0)
    values[HOURS_PER_WEEK:] += 10.0
    series = HourlySeries("S", datetime(2024, 1, 1), values)
    forecast = naive_forecast(series, 7)
    report = compute_metrics(series.values[7 * 24 : 8 * 24], forecast)
    np.testing.assert_allclose(report.mape, 10.0 * 100.0 / 110.0, rtol=1e-12)


def test_synthetic_fleet_shape_and_determinism():
    fleet = generate_fleet(n_series=4, n_weeks=4, seed=9)
    again = generate_fleet(n_series=4, n_weeks=4, seed=9)
    assert [s.series_id for s in fleet] == ["SYN01", "SYN02", "SYN03", "SYN04"]
    for a, b in zip(fleet, again):
        assert a.values.tobytes() == b.values.tobytes()
        assert (a.values > 0).all()
        assert len(a) == 4 * HOURS_PER_WEEK
    # distinct levels exercise the per-series normalization
    levels = [s.values.mean() for s in fleet]
    assert max(levels) / min(levels) > 5.0


def test_synthetic_weekend_dip_visible():
    fleet = generate_fleet(n_series=1, n_weeks=8, noise=0.0, seed=1)
    series = fleet[0]
    per_day = series.values.reshape(-1, 24).mean(axis=1)
    weekdays = np.array([(series.start.weekday() + d) % 7 for d in range(per_day.size)])
    sunday = per_day[weekdays == 6].mean()
    midweek = per_day[weekdays == 2].mean()
    assert sunday < 0.92 * midweek
