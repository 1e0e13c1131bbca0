"""Day-ahead forecasting by replaying history through the trained model.

A forecast for one day replays the preceding weeks of actuals through the
smoothing recursion and the network (states carried forward, no gradients),
then converts the final normalized outputs back to the original scale.
Consecutive days roll forward: forecast, reveal the day's actuals, repeat.
"""

from dataclasses import dataclass
from datetime import datetime, timedelta

import numpy as np

from .autodiff import Tape
from .errors import ValidationError
from .network import Network, initial_state, network_step
from .pipeline import SeriesRunner, postprocess
from .timeseries import HOURS_PER_DAY, HourlySeries
from .training import TrainSchedule


@dataclass
class ForecastBundle:
    """Hourly forecasts for consecutive days of one series."""

    series_id: str
    start: datetime
    point: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __len__(self) -> int:
        return self.point.size

    def timestamps(self):
        return [self.start + timedelta(hours=h) for h in range(self.point.size)]


def forecast_range(
    net: Network,
    series: HourlySeries,
    schedule: TrainSchedule,
    first_day: int,
    n_days: int,
) -> ForecastBundle:
    """Forecast days [first_day, first_day + n_days) of a series.

    ``first_day`` counts days from the start of the series.  The preceding
    ``history_weeks`` weeks are replayed to settle the smoothing and network
    states; each later day consumes that day's actuals before the next
    forecast, so all forecasts are honest day-ahead forecasts.
    """
    history_days = 7 * schedule.history_weeks
    if n_days < 1:
        raise ValidationError("n_days must be positive")
    if first_day < history_days:
        raise ValidationError(
            f"first_day {first_day} leaves less than {history_days} days of history"
        )
    needed = (first_day + n_days - 1) * HOURS_PER_DAY
    if needed > len(series):
        raise ValidationError(
            f"series {series.series_id} ends before the requested range"
        )
    tape = Tape(record=False)
    runner = SeriesRunner(
        series,
        (first_day - history_days) * HOURS_PER_DAY,
        schedule.warmup_days,
        schedule.base_alpha_logit,
        schedule.base_beta_logit,
        use_es=net.config.use_es,
    )
    state = initial_state(net)
    want_seasonal = net.config.use_es and net.config.use_seasonal_input

    def advance():
        nonlocal state
        if runner.can_sample():
            _, inputs = runner.sample(tape, want_seasonal)
            out, state = network_step(tape, net, state, inputs)
            runner.consume_day(tape)
            runner.apply_corrections(tape, out)
        else:
            runner.consume_day(tape)

    for _ in range(history_days - 7):
        advance()

    start = series.hour_at(runner.cursor)
    point, lower, upper = [], [], []
    for k in range(n_days):
        sample, inputs = runner.sample(tape, want_seasonal)
        out, state = network_step(tape, net, state, inputs)
        point.append(postprocess(out.x_hat.data[:, 0], sample.z_bar, sample.seasonal_out))
        lower.append(postprocess(out.x_lower.data[:, 0], sample.z_bar, sample.seasonal_out))
        upper.append(postprocess(out.x_upper.data[:, 0], sample.z_bar, sample.seasonal_out))
        if k < n_days - 1:
            runner.consume_day(tape)
            runner.apply_corrections(tape, out)
    return ForecastBundle(
        series_id=series.series_id,
        start=start,
        point=np.concatenate(point),
        lower=np.concatenate(lower),
        upper=np.concatenate(upper),
    )


def replay_states(net: Network, series: HourlySeries, schedule: TrainSchedule):
    """Run the whole series through the model; returns the settled ES state.

    Used when persisting a trained member: the returned state marks the end
    of the training data, so serving can continue the recursion from there.
    """
    tape = Tape(record=False)
    runner = SeriesRunner(
        series,
        0,
        schedule.warmup_days,
        schedule.base_alpha_logit,
        schedule.base_beta_logit,
        use_es=net.config.use_es,
    )
    state = initial_state(net)
    want_seasonal = net.config.use_es and net.config.use_seasonal_input
    for _ in range(len(series) // HOURS_PER_DAY - 7):
        if runner.can_sample():
            _, inputs = runner.sample(tape, want_seasonal)
            out, state = network_step(tape, net, state, inputs)
            runner.consume_day(tape)
            runner.apply_corrections(tape, out)
        else:
            runner.consume_day(tape)
    return runner.state


def forecast_ensemble(nets, series, schedule, first_day, n_days) -> ForecastBundle:
    """Average the member forecasts elementwise (point and both bounds)."""
    if not nets:
        raise ValidationError("ensemble must contain at least one network")
    bundles = [forecast_range(net, series, schedule, first_day, n_days) for net in nets]
    return ForecastBundle(
        series_id=bundles[0].series_id,
        start=bundles[0].start,
        point=np.mean([b.point for b in bundles], axis=0),
        lower=np.mean([b.lower for b in bundles], axis=0),
        upper=np.mean([b.upper for b in bundles], axis=0),
    )
