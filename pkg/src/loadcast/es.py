"""Multiplicative exponential smoothing with a weekly seasonal ring.

The state tracks a level and 168 hourly seasonal factors.  Consuming one
observation z with smoothing coefficients (alpha, beta) updates

    level'    = alpha * z / seasonal + (1 - alpha) * level
    seasonal' = beta  * z / level'   + (1 - beta)  * seasonal

where ``seasonal`` is the ring slot for the hour being consumed and the
fresh value replaces it, to be met again one week later.  There is no trend
term and no renormalization of the ring.

State fields are (1, 1) tensors so that, during training, gradients can flow
from future forecasts back into the network outputs that set alpha and beta.
Division is expressed as exp(log a - log b), which stays inside the autodiff
primitive set and is safe because every quantity here is positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .autodiff import Tape, Tensor, tensor
from .timeseries import HOURS_PER_WEEK


def _scalar(value: float) -> Tensor:
    return tensor([[float(value)]])


@dataclass
class EsState:
    level: Tensor            # (1, 1), positive
    ring: list               # HOURS_PER_WEEK seasonal factors, each (1, 1)
    position: int            # ring slot of the next hour to consume
    alpha: Tensor            # (1, 1) in (0, 1)
    beta: Tensor
    alpha_rest: Tensor       # 1 - alpha, kept alongside to spare tape nodes
    beta_rest: Tensor
    i_alpha: float
    i_beta: float


def _sigmoid(x: float) -> float:
    return 1.0 / (1.0 + math.exp(-x))


def init_state(series_prefix, i_alpha: float, i_beta: float) -> EsState:
    """Seed level and seasonals from the first week of data.

    Level is the mean of the first 168 values; each seasonal slot is its
    value's ratio to that level.  Coefficients start at sigmoid(i_alpha),
    sigmoid(i_beta), i.e. with zero correction from the network.
    """
    prefix = np.asarray(series_prefix, dtype=np.float64)
    if prefix.size < HOURS_PER_WEEK:
        raise ValueError(f"need at least {HOURS_PER_WEEK} values, got {prefix.size}")
    if (prefix[:HOURS_PER_WEEK] <= 0).any():
        raise ValueError("series values must be positive")
    week = prefix[:HOURS_PER_WEEK]
    level = float(week.mean())
    ring = [_scalar(v / level) for v in week]
    alpha = _sigmoid(i_alpha)
    beta = _sigmoid(i_beta)
    return EsState(
        level=_scalar(level),
        ring=ring,
        position=0,
        alpha=_scalar(alpha),
        beta=_scalar(beta),
        alpha_rest=_scalar(1.0 - alpha),
        beta_rest=_scalar(1.0 - beta),
        i_alpha=i_alpha,
        i_beta=i_beta,
    )


def current_seasonal(state: EsState) -> Tensor:
    """Seasonal factor that will deseasonalize the next consumed hour."""
    return state.ring[state.position]


def seasonal_window(state: EsState, offset: int, length: int) -> list:
    """Ring slots for the next ``length`` hours starting ``offset`` ahead."""
    if length > HOURS_PER_WEEK:
        raise ValueError("cannot look more than one week ahead")
    start = state.position + offset
    return [state.ring[(start + k) % HOURS_PER_WEEK] for k in range(length)]


def hw_step(tape: Tape, state: EsState, z: float) -> EsState:
    """Consume one observation; returns the advanced state (input untouched)."""
    if z <= 0:
        raise ValueError("observations must be positive")
    log_z = _scalar(math.log(z))
    seasonal = state.ring[state.position]
    # level' = alpha * z / seasonal + (1 - alpha) * level
    z_over_s = tape.exp(tape.subtract(log_z, tape.log(seasonal)))
    level = tape.add(
        tape.hadamard(state.alpha, z_over_s),
        tape.hadamard(state.alpha_rest, state.level),
    )
    # seasonal' = beta * z / level' + (1 - beta) * seasonal
    z_over_l = tape.exp(tape.subtract(log_z, tape.log(level)))
    fresh = tape.add(
        tape.hadamard(state.beta, z_over_l),
        tape.hadamard(state.beta_rest, seasonal),
    )
    ring = list(state.ring)
    ring[state.position] = fresh
    return EsState(
        level=level,
        ring=ring,
        position=(state.position + 1) % HOURS_PER_WEEK,
        alpha=state.alpha,
        beta=state.beta,
        alpha_rest=state.alpha_rest,
        beta_rest=state.beta_rest,
        i_alpha=state.i_alpha,
        i_beta=state.i_beta,
    )


def update_coefficients(tape: Tape, state: EsState, delta_alpha: Tensor, delta_beta: Tensor) -> EsState:
    """Set alpha = sigmoid(i_alpha + delta_alpha) and likewise beta.

    Deltas come straight from the network head each day; with zero deltas the
    coefficients sit at their sigmoid(i_*) rest points.
    """
    alpha = tape.sigmoid(tape.add(_scalar(state.i_alpha), delta_alpha))
    beta = tape.sigmoid(tape.add(_scalar(state.i_beta), delta_beta))
    return EsState(
        level=state.level,
        ring=state.ring,
        position=state.position,
        alpha=alpha,
        beta=beta,
        alpha_rest=tape.one_minus(alpha),
        beta_rest=tape.one_minus(beta),
        i_alpha=state.i_alpha,
        i_beta=state.i_beta,
    )
