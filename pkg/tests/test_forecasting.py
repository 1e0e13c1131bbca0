from datetime import datetime, timedelta

import numpy as np
import pytest

from loadcast.errors import ValidationError
from loadcast.forecasting import forecast_ensemble, forecast_range
from loadcast.network import NetworkConfig, init_network
from loadcast.timeseries import HOURS_PER_WEEK, HourlySeries
from loadcast.training import LossConfig, TrainSchedule, train_member

TINY_CONFIG = NetworkConfig(s_c=10, s_h=4, s_y=6, dilations=((1, 2),))
SCHEDULE = TrainSchedule(
    epochs=2, training_steps=3, warmup_weeks=2, history_weeks=3, max_updates=2
)


def periodic_series(n_weeks=8, noise=0.0, seed=0, series_id="P"):
    rng = np.random.default_rng(seed)
    t = np.arange(n_weeks * HOURS_PER_WEEK)
    values = (
        80.0
        + 15.0 * np.sin(2 * np.pi * t / 24.0 - 1.0)
        + 5.0 * np.sin(2 * np.pi * t / HOURS_PER_WEEK)
    )
    if noise:
        values = values * (1.0 + noise * rng.standard_normal(values.size))
    return HourlySeries(series_id, datetime(2021, 1, 4, 0), values)


def test_forecast_range_shapes_and_timestamps():
    series = periodic_series()
    net = init_network(np.random.default_rng(1), TINY_CONFIG)
    bundle = forecast_range(net, series, SCHEDULE, first_day=21, n_days=3)
    assert len(bundle) == 72
    assert bundle.start == series.start + timedelta(days=21)
    stamps = bundle.timestamps()
    assert stamps[1] - stamps[0] == timedelta(hours=1)
    assert np.isfinite(bundle.point).all() and (bundle.point > 0).all()
    assert np.isfinite(bundle.lower).all() and np.isfinite(bundle.upper).all()


def test_forecast_range_validation():
    series = periodic_series()
    net = init_network(np.random.default_rng(1), TINY_CONFIG)
    with pytest.raises(ValidationError):
        forecast_range(net, series, SCHEDULE, first_day=20, n_days=1)
    with pytest.raises(ValidationError):
        forecast_range(net, series, SCHEDULE, first_day=21, n_days=0)
    with pytest.raises(ValidationError):
        forecast_range(net, series, SCHEDULE, first_day=21, n_days=1000)


def test_rolling_prefix_matches_single_day():
    series = periodic_series(noise=0.01)
    net = init_network(np.random.default_rng(2), TINY_CONFIG)
    one = forecast_range(net, series, SCHEDULE, first_day=22, n_days=1)
    two = forecast_range(net, series, SCHEDULE, first_day=22, n_days=2)
    np.testing.assert_array_equal(one.point, two.point[:24])
    np.testing.assert_array_equal(one.lower, two.lower[:24])
    np.testing.assert_array_equal(one.upper, two.upper[:24])


def test_ensemble_is_elementwise_mean():
    series = periodic_series(noise=0.01)
    nets = [init_network(np.random.default_rng(s), TINY_CONFIG) for s in (3, 4)]
    singles = [forecast_range(net, series, SCHEDULE, 21, 2) for net in nets]
    combined = forecast_ensemble(nets, series, SCHEDULE, 21, 2)
    np.testing.assert_allclose(
        combined.point, (singles[0].point + singles[1].point) / 2.0, rtol=1e-15
    )
    with pytest.raises(ValidationError):
        forecast_ensemble([], series, SCHEDULE, 21, 2)


def test_overfit_probe_noiseless_series():
    # a purely periodic series should be learned to well under 1% error
    series = periodic_series(n_weeks=16)
    schedule = TrainSchedule(
        epochs=20,
        training_steps=20,
        warmup_weeks=3,
        history_weeks=6,
        max_updates=3,
    )
    member = train_member([series], TINY_CONFIG, schedule, LossConfig(), seed=5)
    first_day = 16 * 7 - 7
    bundle = forecast_range(member.net, series, schedule, first_day, 7)
    actual = series.values[first_day * 24 : (first_day + 7) * 24]
    mape = 100.0 * np.mean(np.abs(actual - bundle.point) / actual)
    assert mape < 1.0, f"overfit probe MAPE {mape:.3f}%"
