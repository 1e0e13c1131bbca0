"""Network assembly: embedding, dilated-cell blocks, output head.

The default topology is two blocks, the first chaining cells dilated by 2
and 7, the second a single cell dilated by 4 reading the first block's
output.  When the shortcut is on, the head reads the elementwise sum of the
two block outputs.  The head is one linear map onto 74 rows: 24 centre
log-ratios, 24 lower and 24 upper interval log-ratios, and the two
smoothing-coefficient corrections.

Input features are stacked rows: the 168 deseasonalized-window values, the
24 seasonal factors for the output day (minus one), the log10 of the window
mean, and calendar one-hots (90 raw, or 4 after the linear embedding).
Ablation switches drop individual pieces, so the input width is config
dependent; the head width is not.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Tape, Tensor, tensor
from .cell import cell_step, empty_state, init_cell_params
from .timeseries import CALENDAR_ONE_HOT_SIZE, HOURS_PER_DAY, HOURS_PER_WEEK

HEAD_BLOCKS = ("x_hat", "x_lower", "x_upper", "delta_alpha", "delta_beta")


@dataclass(frozen=True)
class NetworkConfig:
    s_c: int = 100
    s_h: int = 40
    s_y: int = 60
    dilations: tuple = ((2, 7), (4,))
    embedding_size: int = 4
    cell_variant: str = "full"
    use_embedding: bool = True
    use_shortcut: bool = True
    use_es: bool = True              # master switch: deseasonalization on/off
    use_seasonal_input: bool = True  # feed next-day seasonal factors
    use_level_input: bool = True     # feed log10 of the window mean
    use_calendar_input: bool = True
    input_window: int = HOURS_PER_WEEK
    horizon: int = HOURS_PER_DAY

    def validate(self):
        if self.s_c != self.s_h + self.s_y:
            raise ValueError(f"s_c must be s_h + s_y, got {self.s_c} != {self.s_h}+{self.s_y}")
        if self.cell_variant == "classic_lstm" and self.s_h != self.s_y:
            raise ValueError("classic_lstm needs s_h == s_y")
        if not self.dilations or any(not block for block in self.dilations):
            raise ValueError("dilations must be non-empty per block")
        if self.input_window != HOURS_PER_WEEK or self.horizon != HOURS_PER_DAY:
            raise ValueError("windowing is fixed at 168 in, 24 out")
        return self

    @property
    def seasonal_rows(self) -> int:
        return self.horizon if (self.use_es and self.use_seasonal_input) else 0

    @property
    def level_rows(self) -> int:
        return 1 if self.use_level_input else 0

    @property
    def calendar_rows(self) -> int:
        if not self.use_calendar_input:
            return 0
        return self.embedding_size if self.use_embedding else CALENDAR_ONE_HOT_SIZE

    @property
    def input_size(self) -> int:
        return self.input_window + self.seasonal_rows + self.level_rows + self.calendar_rows

    @property
    def output_size(self) -> int:
        return 3 * self.horizon + 2


@dataclass
class Network:
    config: NetworkConfig
    blocks: list  # list of lists of DRnnCellParams
    embedding: Tensor | None  # (embedding_size, 90)
    head_w: Tensor            # (74, s_y)
    head_b: Tensor            # (74, 1)


@dataclass(frozen=True)
class NetworkState:
    cells: tuple  # CellState per cell, flattened in block order


@dataclass
class NetworkOutput:
    x_hat: Tensor        # (horizon, 1)
    x_lower: Tensor
    x_upper: Tensor
    delta_alpha: Tensor  # (1, 1)
    delta_beta: Tensor


def init_network(rng, config: NetworkConfig) -> Network:
    config.validate()
    blocks = []
    feed = config.input_size
    for dils in config.dilations:
        layers = []
        for d in dils:
            layers.append(
                init_cell_params(
                    rng, config.cell_variant, d, feed, config.s_c, config.s_h, config.s_y
                )
            )
            feed = config.s_y
        blocks.append(layers)
    embedding = None
    if config.use_calendar_input and config.use_embedding:
        limit = 1.0 / np.sqrt(CALENDAR_ONE_HOT_SIZE)
        embedding = tensor(
            rng.uniform(-limit, limit, size=(config.embedding_size, CALENDAR_ONE_HOT_SIZE)),
            watched=True,
        )
    limit = 1.0 / np.sqrt(config.s_y)
    head_w = tensor(
        rng.uniform(-limit, limit, size=(config.output_size, config.s_y)), watched=True
    )
    head_b = tensor(np.zeros((config.output_size, 1)), watched=True)
    return Network(config, blocks, embedding, head_w, head_b)


def initial_state(net: Network) -> NetworkState:
    return NetworkState(tuple(empty_state() for block in net.blocks for _ in block))


def collect_parameters(net: Network) -> list:
    """Stable (name, tensor) listing; the order defines checkpoint layout."""
    out = []
    for bi, block in enumerate(net.blocks):
        for li, cell in enumerate(block):
            for name in sorted(cell.weights):
                out.append((f"block{bi}.layer{li}.{name}", cell.weights[name]))
    if net.embedding is not None:
        out.append(("embedding", net.embedding))
    out.append(("head_w", net.head_w))
    out.append(("head_b", net.head_b))
    return out


def parameter_count(net: Network) -> int:
    return sum(t.data.size for _, t in collect_parameters(net))


@dataclass
class StepInputs:
    """One day's network inputs; rows as the config expects them.

    ``seasonal`` carries live (watched) seasonal factors minus one during
    training so coefficient corrections can learn through later days.
    """

    x_in: Tensor                 # (168, 1)
    seasonal: Tensor | None      # (24, 1) or None when not configured
    level_log: Tensor | None     # (1, 1)
    calendar: Tensor | None      # (90, 1) one-hots


def network_step(tape: Tape, net: Network, state: NetworkState, inputs: StepInputs):
    """Run one day through all blocks; returns (NetworkOutput, new state)."""
    cfg = net.config
    parts = [inputs.x_in]
    if cfg.seasonal_rows:
        if inputs.seasonal is None:
            raise ValueError("config expects seasonal input rows")
        parts.append(inputs.seasonal)
    if cfg.level_rows:
        if inputs.level_log is None:
            raise ValueError("config expects the level input row")
        parts.append(inputs.level_log)
    if cfg.calendar_rows:
        if inputs.calendar is None:
            raise ValueError("config expects calendar input rows")
        if cfg.use_embedding:
            parts.append(tape.matmul(net.embedding, inputs.calendar))
        else:
            parts.append(inputs.calendar)
    x = tape.concat_rows(parts) if len(parts) > 1 else parts[0]
    if x.shape != (cfg.input_size, 1):
        raise ValueError(f"assembled input {x.shape}, expected {(cfg.input_size, 1)}")

    new_states = []
    cell_iter = iter(state.cells)
    block_outs = []
    feed = x
    for block in net.blocks:
        for params in block:
            feed, new_state = cell_step(tape, params, next(cell_iter), feed)
            new_states.append(new_state)
        block_outs.append(feed)
    head_in = block_outs[-1]
    if cfg.use_shortcut and len(block_outs) >= 2:
        head_in = tape.add(block_outs[-1], block_outs[-2])
    head = tape.add(tape.matmul(net.head_w, head_in), net.head_b)

    h = cfg.horizon
    output = NetworkOutput(
        x_hat=tape.slice_rows(head, 0, h),
        x_lower=tape.slice_rows(head, h, 2 * h),
        x_upper=tape.slice_rows(head, 2 * h, 3 * h),
        delta_alpha=tape.slice_rows(head, 3 * h, 3 * h + 1),
        delta_beta=tape.slice_rows(head, 3 * h + 1, 3 * h + 2),
    )
    return output, NetworkState(tuple(new_states))
