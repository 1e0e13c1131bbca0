import math
from datetime import date, datetime

import numpy as np
import pytest

from loadcast.errors import ValidationError
from loadcast.timeseries import (
    CalendarFeatures,
    HourlySeries,
    calendar_for,
    calendar_one_hot,
    daily_pattern_distance,
    harmonic_contribution,
    harmonic_contributions,
    load_series_csv,
    parse_timestamp,
    variation_coefficient,
    variation_profile,
    write_series_csv,
)


def test_variation_coefficient_two_points():
    # mean 3, population std 1
    assert abs(variation_coefficient([2.0, 4.0]) - 100.0 / 3.0) < 1e-9


def test_variation_coefficient_sinusoid():
    t = np.arange(480)
    values = 100.0 + 5.0 * np.sin(2 * np.pi * t / 24.0)
    # std of a sampled full-period sine is amplitude / sqrt(2)
    assert abs(variation_coefficient(values) - 5.0 / math.sqrt(2)) < 1e-9


def test_harmonic_contribution_pure_sine():
    t = np.arange(240)
    values = 10.0 + np.sin(2 * np.pi * t / 24.0)
    assert abs(harmonic_contribution(values, 10) - 100.0) < 1e-9
    assert abs(harmonic_contribution(values, 3)) < 1e-9


def test_harmonic_contributions_amplitude_squared_split():
    t = np.arange(840)
    values = 50.0 + 3.0 * np.sin(2 * np.pi * t / 24) + 4.0 * np.cos(2 * np.pi * t / 168)
    shares = harmonic_contributions(values)
    assert abs(shares[840 // 24 - 1] - 36.0) < 1e-9
    assert abs(shares[840 // 168 - 1] - 64.0) < 1e-9


@pytest.mark.parametrize("n", [128, 129])
def test_harmonic_contributions_sum_to_100(n):
    rng = np.random.default_rng(0)
    values = rng.uniform(10, 20, size=n)
    assert abs(harmonic_contributions(values).sum() - 100.0) < 1e-9


def test_daily_pattern_distance_affine_invariant():
    rng = np.random.default_rng(1)
    a = rng.uniform(50, 150, size=24)
    assert daily_pattern_distance(a, 3.0 * a + 7.0) < 1e-12
    flipped = a.mean() - (a - a.mean())
    assert abs(daily_pattern_distance(a, flipped) - 2.0) < 1e-12
    with pytest.raises(ValueError):
        daily_pattern_distance(a, np.full(24, 5.0))


def test_variation_profile_levels():
    # identical days: all variability is intraday
    pattern = 100.0 + 10.0 * np.sin(2 * np.pi * np.arange(24) / 24)
    values = np.tile(pattern, 7 * 52 * 2)
    profile = variation_profile(values)
    assert abs(profile["v_d"] - variation_coefficient(pattern)) < 1e-9
    assert profile["v_w"] < 1e-9
    assert profile["v_y"] < 1e-9

    short = variation_profile(values[: 24 * 10])
    assert short["v_w"] is not None and short["v_y"] is None


def test_calendar_for_known_dates():
    assert calendar_for(date(2018, 1, 1)) == CalendarFeatures(0, 0, 0)
    # ISO week 53 gets clamped onto the last index
    assert calendar_for(date(2021, 1, 1)) == CalendarFeatures(4, 0, 51)
    feats = calendar_for(date(2016, 2, 29))
    assert feats.day_of_week == 0 and feats.day_of_month == 28
    assert feats.week_of_year == date(2016, 2, 29).isocalendar()[1] - 1


def test_calendar_one_hot_layout():
    vec = calendar_one_hot(CalendarFeatures(2, 14, 30))
    assert vec.shape == (90, 1)
    assert vec.sum() == 3.0
    assert vec[2, 0] == 1.0 and vec[7 + 14, 0] == 1.0 and vec[7 + 31 + 30, 0] == 1.0


def test_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(2)
    series = [
        HourlySeries("FR", datetime(2017, 3, 1, 0), rng.uniform(30, 70, size=48)),
        HourlySeries("DE", datetime(2017, 3, 1, 5), rng.uniform(40, 90, size=30)),
    ]
    path = tmp_path / "data.csv"
    write_series_csv(path, series)
    back = load_series_csv(path)
    assert [s.series_id for s in back] == ["FR", "DE"]
    for orig, loaded in zip(series, back):
        assert loaded.start == orig.start
        np.testing.assert_array_equal(loaded.values, orig.values)


def test_csv_rejects_gap(tmp_path):
    path = tmp_path / "gap.csv"
    path.write_text(
        "series_id,timestamp,value\n"
        "X,2017-01-01T00:00:00,10\n"
        "X,2017-01-01T02:00:00,11\n"
    )
    with pytest.raises(ValidationError, match="hourly-continuous"):
        load_series_csv(path)


def test_csv_rejects_bad_rows(tmp_path):
    cases = [
        "series_id,timestamp,value\nX,2017-01-01T00:30:00,10\n",
        "series_id,timestamp,value\nX,2017-01-01T00:00:00,-5\n",
        "series_id,timestamp,value\nX,2017-01-01T00:00:00,abc\n",
        "wrong,header,here\nX,2017-01-01T00:00:00,10\n",
        "series_id,timestamp,value\n",
    ]
    for i, text in enumerate(cases):
        path = tmp_path / f"bad{i}.csv"
        path.write_text(text)
        with pytest.raises(ValidationError):
            load_series_csv(path)


def test_parse_timestamp_rules():
    assert parse_timestamp("2020-06-01T07:00:00") == datetime(2020, 6, 1, 7)
    with pytest.raises(ValidationError):
        parse_timestamp("2020-06-01 07:00:00")
    with pytest.raises(ValidationError):
        parse_timestamp("2020-06-01T07:15:00")


def test_series_index_of():
    series = HourlySeries("X", datetime(2020, 1, 1, 0), np.ones(48) * 5)
    assert series.index_of(datetime(2020, 1, 2, 3)) == 27
    assert series.hour_at(27) == datetime(2020, 1, 2, 3)
    with pytest.raises(ValidationError):
        series.index_of(datetime(2020, 1, 3, 0))
