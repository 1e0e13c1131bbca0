"""Deterministic synthetic load fleet for experiments and tests.

Each series combines a per-series base level, a two-harmonic daily profile,
a weekend dip, a yearly cycle, two slow incommensurate drift cycles, a
month-start consumption bump, and i.i.d. multiplicative Gaussian noise.
The drift cycles move the level by a few percent over a week, which a
weekly-copy baseline cannot track but a day-ahead model can, so the fleet
separates the two cleanly.  The month-start bump follows the calendar, not
the week, so it rewards models that actually look at date features.
"""

from datetime import datetime, timedelta

import numpy as np

from .timeseries import HOURS_PER_DAY, HOURS_PER_WEEK, HourlySeries

BASE_LEVELS = (950.0, 3200.0, 560.0, 7810.0)
WEEKEND_FACTORS = {5: 0.92, 6: 0.88}  # Saturday, Sunday
MONTH_START_BUMP = 0.05  # on the 1st and 2nd of each month


def generate_series(
    series_id: str,
    level: float,
    phase: float,
    n_weeks: int,
    noise: float,
    start: datetime,
    rng,
) -> HourlySeries:
    t = np.arange(n_weeks * HOURS_PER_WEEK, dtype=float)
    day = t / HOURS_PER_DAY
    hour = t % HOURS_PER_DAY
    daily = (
        1.0
        + 0.20 * np.sin(2 * np.pi * hour / 24.0 + phase)
        + 0.05 * np.sin(4 * np.pi * hour / 24.0 + 2.0 * phase)
    )
    weekday = ((np.floor(day).astype(int)) + start.weekday()) % 7
    weekend = np.array([WEEKEND_FACTORS.get(d, 1.0) for d in weekday])
    yearly = 1.0 + 0.10 * np.sin(2 * np.pi * day / 365.25 + phase)
    drift = (
        1.0
        + 0.022 * np.sin(2 * np.pi * day / 23.5 + 3.0 * phase)
        + 0.020 * np.sin(2 * np.pi * day / 41.0 + 1.7 * phase)
    )
    first_date = start.date()
    month_start = np.repeat(
        [
            1.0 + (MONTH_START_BUMP if (first_date + timedelta(days=d)).day <= 2 else 0.0)
            for d in range(n_weeks * 7)
        ],
        HOURS_PER_DAY,
    )
    values = level * daily * weekend * yearly * drift * month_start
    if noise > 0.0:
        values = values * (1.0 + noise * rng.standard_normal(values.size))
    return HourlySeries(series_id, start, values)


def generate_fleet(
    n_series: int = 4,
    n_weeks: int = 104,
    noise: float = 0.02,
    seed: int = 2026,
    start: datetime = datetime(2024, 1, 1, 0),
):
    """Fleet of hourly series, reproducible from the seed alone."""
    rng = np.random.default_rng(seed)
    fleet = []
    for i in range(n_series):
        level = BASE_LEVELS[i % len(BASE_LEVELS)] * (1.0 + i // len(BASE_LEVELS))
        phase = 2.0 * np.pi * i / max(n_series, 1)
        fleet.append(
            generate_series(f"SYN{i + 1:02d}", level, phase, n_weeks, noise, start, rng)
        )
    return fleet
