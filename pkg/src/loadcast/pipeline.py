"""Windowing, on-the-fly deseasonalization, and the day-by-day runner.

Forecasting works on adjacent window pairs that slide one day at a time: a
168-hour input window and the following 24-hour output day.  Raw values are
turned into the network's scale-free input by

    x = ln(z / (z_bar * seasonal))

where z_bar is the mean of the raw input window and ``seasonal`` is the
smoothing component's estimate for that hour at the moment it was consumed.
The inverse map rebuilds level forecasts from head outputs:

    z_hat = exp(x_hat) * z_bar * seasonal_out

A SeriesRunner owns one series' smoothing state while a sequence unrolls:
it consumes days, records the seasonal factors used per hour, assembles
samples, and applies the network's coefficient corrections after each day.

Gradient boundary: recorded per-hour seasonals and window means enter
samples as plain floats (constants), while the seasonal factors handed to
the network input stay live tensors.  Corrections therefore learn only
through their effect on later days, and no gradient flows back through the
input-window normalization or the loss reconstruction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import es
from .autodiff import Tape, Tensor, tensor
from .network import NetworkOutput, StepInputs
from .timeseries import (
    HOURS_PER_DAY,
    HOURS_PER_WEEK,
    HourlySeries,
    calendar_for,
    calendar_one_hot,
)


@dataclass
class TrainingSample:
    """One (input window, output day) pair, already deseasonalized."""

    x_in: np.ndarray          # (168,) log-ratios
    seasonal_out: np.ndarray  # (24,) seasonal factors for the output day
    z_bar: float              # raw input-window mean
    z_out: np.ndarray | None  # (24,) actuals, None past the end of data
    day_index: int            # output day, counted from the sequence start
    warmup: bool


def postprocess(x_hat, z_bar: float, seasonal_out) -> np.ndarray:
    """Map head log-ratios back to load levels."""
    return np.exp(np.asarray(x_hat, dtype=np.float64)) * z_bar * np.asarray(seasonal_out)


class SeriesRunner:
    """Advance one series through a sequence of days.

    The first week of the sequence seeds the smoothing state; sampling
    becomes possible once a further full week has been consumed, because the
    input window needs recorded seasonal factors for all 168 hours.
    """

    def __init__(
        self,
        series: HourlySeries,
        start_hour: int,
        warmup_days: int,
        i_alpha: float,
        i_beta: float,
        use_es: bool = True,
    ):
        if start_hour % HOURS_PER_DAY:
            raise ValueError("sequences start on day boundaries")
        if start_hour < 0 or start_hour + 2 * HOURS_PER_WEEK > len(series):
            raise ValueError("need at least two weeks of data from the start hour")
        self.series = series
        self.start_hour = start_hour
        self.warmup_days = warmup_days
        self.use_es = use_es
        self.cursor = start_hour + HOURS_PER_WEEK
        self.recorded: list[float] = []
        self.state = (
            es.init_state(series.values[start_hour:], i_alpha, i_beta) if use_es else None
        )

    @property
    def day_index(self) -> int:
        """Index of the next unconsumed day within the sequence."""
        return (self.cursor - self.start_hour) // HOURS_PER_DAY

    def can_sample(self) -> bool:
        return len(self.recorded) >= HOURS_PER_WEEK

    def days_left(self) -> int:
        return (len(self.series) - self.cursor) // HOURS_PER_DAY

    def consume_day(self, tape: Tape):
        """Feed the next 24 hours into the smoothing state."""
        values = self.series.values[self.cursor : self.cursor + HOURS_PER_DAY]
        if values.size < HOURS_PER_DAY:
            raise ValueError("ran out of data")
        if self.use_es:
            for z in values:
                self.recorded.append(es.current_seasonal(self.state).item())
                self.state = es.hw_step(tape, self.state, float(z))
        else:
            self.recorded.extend([1.0] * HOURS_PER_DAY)
        self.cursor += HOURS_PER_DAY

    def apply_corrections(self, tape: Tape, output: NetworkOutput):
        if self.use_es:
            self.state = es.update_coefficients(
                tape, self.state, output.delta_alpha, output.delta_beta
            )

    def sample(self, tape: Tape, want_seasonal_input: bool):
        """Build the sample and network inputs for the next output day."""
        if not self.can_sample():
            raise ValueError("input window not fully consumed yet")
        window = self.series.values[self.cursor - HOURS_PER_WEEK : self.cursor]
        z_bar = float(window.mean())
        recorded = np.array(self.recorded[-HOURS_PER_WEEK:])
        x_in = np.log(window / (z_bar * recorded))

        if self.use_es:
            slots = es.seasonal_window(self.state, 0, HOURS_PER_DAY)
            seasonal_out = np.array([s.item() for s in slots])
        else:
            slots = None
            seasonal_out = np.ones(HOURS_PER_DAY)

        end = self.cursor + HOURS_PER_DAY
        z_out = self.series.values[self.cursor : end] if end <= len(self.series) else None
        day_index = self.day_index
        sample = TrainingSample(
            x_in=x_in,
            seasonal_out=seasonal_out,
            z_bar=z_bar,
            z_out=None if z_out is None else z_out.copy(),
            day_index=day_index,
            warmup=day_index < self.warmup_days,
        )

        seasonal_tensor = None
        if want_seasonal_input:
            if slots is None:
                raise ValueError("seasonal input requested without the smoothing component")
            stacked = tape.concat_rows(slots)
            seasonal_tensor = tape.subtract(stacked, tensor(np.ones((HOURS_PER_DAY, 1))))
        inputs = StepInputs(
            x_in=tensor(x_in.reshape(-1, 1)),
            seasonal=seasonal_tensor,
            level_log=tensor([[math.log10(z_bar)]]),
            calendar=tensor(calendar_one_hot(calendar_for(self.forecast_date()))),
        )
        return sample, inputs

    def forecast_date(self):
        return self.series.hour_at(self.cursor).date()


def sequence_days(warmup_days: int, training_steps: int) -> int:
    """Days of data one training sequence consumes after its start hour.

    One week seeds the state, one more week fills the first input window,
    the rest of the warm-up runs masked steps, then ``training_steps`` days
    contribute losses.
    """
    if warmup_days < 2 * HOURS_PER_WEEK // HOURS_PER_DAY:
        raise ValueError("warm-up must cover at least two weeks")
    return warmup_days + training_steps
