"""Quantile loss, Adam optimizer, and the cross-learning training loop.

One training update samples a handful of series, replays each from a random
day-aligned start (smoothing warm-up first, losses masked), accumulates the
mean quantile loss over the scored daily steps, and applies a single
gradient-clipped Adam step to the shared network parameters.  Ensembling
repeats the whole procedure under different seeds.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tape, Tensor, constant
from .errors import ValidationError
from .network import (
    Network,
    NetworkConfig,
    NetworkOutput,
    collect_parameters,
    init_network,
    initial_state,
    network_step,
)
from .pipeline import SeriesRunner, TrainingSample, sequence_days
from .timeseries import HOURS_PER_DAY, HourlySeries


@dataclass(frozen=True)
class LossConfig:
    """Quantile orders for the three forecast heads plus the interval weight."""

    center_quantile: float = 0.49
    lower_quantile: float = 0.035
    upper_quantile: float = 0.96
    interval_weight: float = 0.3

    def validate(self):
        if not 0.0 < self.lower_quantile < self.center_quantile < self.upper_quantile < 1.0:
            raise ValidationError("quantile orders must satisfy 0 < lower < center < upper < 1")
        if self.interval_weight < 0.0:
            raise ValidationError("interval_weight must be nonnegative")


@dataclass(frozen=True)
class TrainSchedule:
    """Epoch/batch/learning-rate plan plus sequence-length knobs."""

    epochs: int = 9
    first_batch_size: int = 2
    second_batch_size: int = 5
    batch_growth_epoch: int = 4
    learning_rates: tuple = ((1, 3e-3), (5, 1e-3), (6, 3e-4), (7, 1e-4))
    training_steps: int = 50
    warmup_weeks: int = 3
    history_weeks: int = 13
    max_updates: int = 2500
    update_exponent: float = 0.7
    ensemble_size: int = 5
    clip_norm: float = 20.0
    base_alpha_logit: float = -3.5
    base_beta_logit: float = 0.3

    def validate(self):
        if self.epochs < 1 or self.training_steps < 1 or self.max_updates < 1:
            raise ValidationError("epochs, training_steps and max_updates must be positive")
        if self.first_batch_size < 1 or self.second_batch_size < 1:
            raise ValidationError("batch sizes must be positive")
        if self.warmup_weeks < 2:
            raise ValidationError("warmup_weeks must be at least 2")
        if not 0.0 <= self.update_exponent <= 1.0:
            raise ValidationError("update_exponent must lie in [0, 1]")
        if self.ensemble_size < 1:
            raise ValidationError("ensemble_size must be positive")
        if self.learning_rates[0][0] != 1:
            raise ValidationError("learning_rates must start at epoch 1")

    def batch_size_for(self, epoch: int) -> int:
        return self.first_batch_size if epoch < self.batch_growth_epoch else self.second_batch_size

    def learning_rate_for(self, epoch: int) -> float:
        rate = self.learning_rates[0][1]
        for start, lr in self.learning_rates:
            if epoch >= start:
                rate = lr
        return rate

    @property
    def warmup_days(self) -> int:
        return 7 * self.warmup_weeks

    @property
    def days_per_sequence(self) -> int:
        return sequence_days(self.warmup_days, self.training_steps)

    def desk_scale(self, max_updates: int = 40) -> "TrainSchedule":
        """Small-budget variant for end-to-end experiments on a workstation."""
        return TrainSchedule(
            epochs=self.epochs,
            first_batch_size=self.first_batch_size,
            second_batch_size=self.second_batch_size,
            batch_growth_epoch=self.batch_growth_epoch,
            learning_rates=self.learning_rates,
            training_steps=20,
            warmup_weeks=self.warmup_weeks,
            history_weeks=self.history_weeks,
            max_updates=max_updates,
            update_exponent=self.update_exponent,
            ensemble_size=self.ensemble_size,
            clip_norm=self.clip_norm,
            base_alpha_logit=self.base_alpha_logit,
            base_beta_logit=self.base_beta_logit,
        )


def pinball(z: float, z_hat: float, q: float) -> float:
    """Asymmetric absolute error whose expectation is minimized at quantile q."""
    if not 0.0 < q < 1.0:
        raise ValueError("quantile order must lie strictly inside (0, 1)")
    diff = z - z_hat
    return diff * q if diff >= 0.0 else diff * (q - 1.0)


def _pinball_stream(tape: Tape, x_head: Tensor, z_norm, seasonal, q: float) -> Tensor:
    # branch weights are constants chosen from forward values, so the tape
    # sees w*(z - z_hat), whose derivative is the pinball subgradient
    z_hat = tape.hadamard(tape.exp(x_head), constant(seasonal))
    diff = tape.subtract(constant(z_norm), z_hat)
    weights = np.where(diff.data >= 0.0, q, q - 1.0)
    return tape.mean(tape.hadamard(constant(weights), diff))


def step_loss(tape: Tape, sample: TrainingSample, out: NetworkOutput, cfg: LossConfig) -> Tensor:
    """Mean hourly quantile loss for one scored day, on tape.

    Actuals are normalized by the input-window mean so that series of very
    different magnitudes contribute comparably; forecasts are reconstructed
    to the same normalized scale using the recorded (constant) seasonals.
    """
    if sample.warmup:
        raise ValueError("warm-up samples are masked and carry no loss")
    if sample.z_out is None:
        raise ValueError("sample has no actuals to score against")
    z_norm = (sample.z_out / sample.z_bar).reshape(-1, 1)
    seasonal = sample.seasonal_out.reshape(-1, 1)
    center = _pinball_stream(tape, out.x_hat, z_norm, seasonal, cfg.center_quantile)
    lower = _pinball_stream(tape, out.x_lower, z_norm, seasonal, cfg.lower_quantile)
    upper = _pinball_stream(tape, out.x_upper, z_norm, seasonal, cfg.upper_quantile)
    band = tape.scalar_mul(tape.add(lower, upper), cfg.interval_weight)
    return tape.add(center, band)


def sub_epochs(max_updates: int, batch_size: int, n_series: int, exponent: float) -> int:
    """How many shuffled scans of the series pool one epoch performs."""
    if min(max_updates, batch_size, n_series) < 1:
        raise ValueError("max_updates, batch_size and n_series must be positive")
    return max(1, round((max_updates * batch_size / n_series) ** exponent))


@dataclass
class AdamState:
    first: dict = field(default_factory=dict)
    second: dict = field(default_factory=dict)
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def for_params(cls, params) -> "AdamState":
        state = cls()
        for name, tensor_ in params:
            state.first[name] = np.zeros_like(tensor_.data)
            state.second[name] = np.zeros_like(tensor_.data)
        return state


def clip_gradients(params, clip_norm: float) -> float:
    """Scale all gradients so their joint norm is at most clip_norm.

    Returns the pre-clip global norm.  Direction is preserved: every gradient
    is multiplied by the same factor.
    """
    total = 0.0
    for _, tensor_ in params:
        if tensor_.grad is not None:
            total += float((tensor_.grad * tensor_.grad).sum())
    norm = math.sqrt(total)
    if clip_norm > 0.0 and norm > clip_norm:
        scale = clip_norm / norm
        for _, tensor_ in params:
            if tensor_.grad is not None:
                tensor_.grad *= scale
    return norm


def adam_update(params, state: AdamState, lr: float, clip_norm: float = 0.0) -> float:
    """One bias-corrected Adam step over (name, tensor) pairs; zeroes grads."""
    norm = clip_gradients(params, clip_norm)
    state.step += 1
    correct1 = 1.0 - state.beta1 ** state.step
    correct2 = 1.0 - state.beta2 ** state.step
    for name, tensor_ in params:
        grad = tensor_.grad if tensor_.grad is not None else np.zeros_like(tensor_.data)
        m = state.first[name]
        v = state.second[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * grad
        v *= state.beta2
        v += (1.0 - state.beta2) * grad * grad
        denom = np.sqrt(v / correct2) + state.epsilon
        tensor_.data -= lr * (m / correct1) / denom
        tensor_.zero_grad()
    return norm


def run_sequence(
    tape: Tape,
    net: Network,
    series: HourlySeries,
    start_hour: int,
    schedule: TrainSchedule,
    loss_cfg: LossConfig,
    collect_losses: bool = True,
):
    """Replay one series from start_hour: warm-up, then scored daily steps.

    Returns (runner, final network state, list of per-day loss tensors).
    """
    runner = SeriesRunner(
        series,
        start_hour,
        schedule.warmup_days,
        schedule.base_alpha_logit,
        schedule.base_beta_logit,
        use_es=net.config.use_es,
    )
    state = initial_state(net)
    losses = []
    for _ in range(schedule.days_per_sequence - 7):
        if runner.can_sample():
            want_seasonal = net.config.use_es and net.config.use_seasonal_input
            sample, inputs = runner.sample(tape, want_seasonal)
            out, state = network_step(tape, net, state, inputs)
            if collect_losses and not sample.warmup and sample.z_out is not None:
                losses.append(step_loss(tape, sample, out, loss_cfg))
            runner.consume_day(tape)
            runner.apply_corrections(tape, out)
        else:
            runner.consume_day(tape)
    return runner, state, losses


def train_one_update(
    net: Network,
    params,
    adam: AdamState,
    batch,
    starts,
    schedule: TrainSchedule,
    loss_cfg: LossConfig,
    lr: float,
) -> float:
    """One gradient step on a batch of (series, start) replays; returns loss."""
    tape = Tape()
    losses = []
    for series, start_hour in zip(batch, starts):
        _, _, series_losses = run_sequence(tape, net, series, start_hour, schedule, loss_cfg)
        losses.extend(series_losses)
    if not losses:
        raise ValueError("no scored steps in batch; sequence too short for warm-up")
    total = tape.mean(tape.concat_rows(losses))
    value = total.item()
    tape.backward(total)
    adam_update(params, adam, lr, schedule.clip_norm)
    return value


@dataclass
class EpochReport:
    epoch: int
    updates: int
    mean_loss: float
    learning_rate: float
    batch_size: int
    scans: int
    seconds: float


@dataclass
class TrainedMember:
    """One ensemble member: the trained network plus its training trace."""

    net: Network
    seed: int
    reports: list
    excluded: list
    rng_state: dict = None


def usable_series(series_list, schedule: TrainSchedule):
    """Split series into (long enough, too short) for one training sequence."""
    need = schedule.days_per_sequence * HOURS_PER_DAY
    good, short = [], []
    for series in series_list:
        (good if len(series) >= need else short).append(series)
    return good, short


def train_member(
    series_list,
    net_config: NetworkConfig,
    schedule: TrainSchedule,
    loss_cfg: LossConfig,
    seed: int,
) -> TrainedMember:
    """Train one network over the series pool under a single seed."""
    schedule.validate()
    loss_cfg.validate()
    net_config.validate()
    good, short = usable_series(series_list, schedule)
    if not good:
        raise ValidationError(
            "no series long enough for %d-day training sequences" % schedule.days_per_sequence
        )
    rng = np.random.default_rng(seed)
    net = init_network(rng, net_config)
    params = collect_parameters(net)
    adam = AdamState.for_params(params)
    reports = []
    for epoch in range(1, schedule.epochs + 1):
        t0 = time.monotonic()
        batch_size = schedule.batch_size_for(epoch)
        lr = schedule.learning_rate_for(epoch)
        scans = sub_epochs(schedule.max_updates, batch_size, len(good), schedule.update_exponent)
        losses = []
        done = False
        for _ in range(scans):
            order = rng.permutation(len(good))
            for lo in range(0, len(order), batch_size):
                if len(losses) >= schedule.max_updates:
                    done = True
                    break
                batch = [good[i] for i in order[lo : lo + batch_size]]
                max_start_day = min(
                    len(s) // HOURS_PER_DAY - schedule.days_per_sequence for s in batch
                )
                start = HOURS_PER_DAY * int(rng.integers(0, max_start_day + 1))
                starts = [start] * len(batch)
                losses.append(
                    train_one_update(net, params, adam, batch, starts, schedule, loss_cfg, lr)
                )
            if done:
                break
        reports.append(
            EpochReport(
                epoch=epoch,
                updates=len(losses),
                mean_loss=float(np.mean(losses)),
                learning_rate=lr,
                batch_size=batch_size,
                scans=scans,
                seconds=time.monotonic() - t0,
            )
        )
    return TrainedMember(
        net=net,
        seed=seed,
        reports=reports,
        excluded=[s.series_id for s in short],
        rng_state=rng.bit_generator.state,
    )


def train_ensemble(
    series_list,
    net_config: NetworkConfig,
    schedule: TrainSchedule,
    loss_cfg: LossConfig,
    seeds,
) -> list:
    """Independently seeded trainings; forecasts are averaged downstream."""
    seeds = list(seeds)
    if len(set(seeds)) != len(seeds):
        raise ValidationError("ensemble seeds must be distinct")
    return [
        train_member(series_list, net_config, schedule, loss_cfg, seed) for seed in seeds
    ]
