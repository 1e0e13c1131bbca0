"""Recurrent cell with both a recent (t-1) and a delayed (t-d) state path.

Gate preactivations read the current input, the previous hidden state and
the hidden state from d steps back:

    pre_g = W_g x + V_g h(t-1) + U_g h(t-d) + b_g        g in {f, u, o, c}

f, u, o pass through sigmoids, the candidate c through tanh, and the new
cell state fuses old states with the candidate:

    c(t) = u * (f * c(t-1) + (1-f) * c(t-d)) + (1-u) * cand
    out  = o * c(t)

The first s_y rows of ``out`` leave the cell as its output y; the remaining
s_h rows are the hidden state fed back on both recurrent paths.  Before d
steps of history exist, the delayed path reads the earliest state there is,
i.e. the cell behaves as if dilated by min(d, t-1); both paths start from
zero vectors.

Variants strip the cell down for comparison runs: "no_fusion" keeps only the
delayed state in the mix, "no_dilation" routes both paths to t-1,
"no_recent" routes both to t-d, and "classic_lstm" is a textbook LSTM (no U
matrices, square gates, y identical to h; requires s_h == s_y).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Tape, Tensor, tensor

VARIANTS = ("full", "no_fusion", "no_dilation", "no_recent", "classic_lstm")

GATES = ("f", "u", "o", "c")


@dataclass
class DRnnCellParams:
    variant: str
    dilation: int
    input_size: int
    s_c: int
    s_h: int
    s_y: int
    weights: dict  # name -> watched Tensor


@dataclass(frozen=True)
class CellState:
    step: int
    history: tuple  # ((c, h) pairs, oldest first, at most `dilation` of them)


def empty_state() -> CellState:
    return CellState(step=0, history=())


def init_cell_params(rng, variant, dilation, input_size, s_c, s_h, s_y) -> DRnnCellParams:
    """Fan-in uniform weights (limit 1/sqrt(fan_in)), zero biases."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown cell variant {variant!r}")
    if s_c != s_h + s_y:
        raise ValueError(f"s_c must equal s_h + s_y, got {s_c} != {s_h} + {s_y}")
    if dilation < 1:
        raise ValueError("dilation must be >= 1")
    if variant == "classic_lstm" and s_h != s_y:
        raise ValueError("classic_lstm needs s_h == s_y")

    gate_rows = s_h if variant == "classic_lstm" else s_c
    recur_cols = s_h
    fan_in = input_size + recur_cols * (1 if variant == "classic_lstm" else 2)
    limit = 1.0 / np.sqrt(fan_in)

    def uniform(rows, cols):
        return tensor(rng.uniform(-limit, limit, size=(rows, cols)), watched=True)

    weights = {}
    for g in GATES:
        weights[f"w_{g}"] = uniform(gate_rows, input_size)
        weights[f"v_{g}"] = uniform(gate_rows, recur_cols)
        if variant != "classic_lstm":
            weights[f"u_{g}"] = uniform(gate_rows, recur_cols)
        weights[f"b_{g}"] = tensor(np.zeros((gate_rows, 1)), watched=True)
    return DRnnCellParams(variant, dilation, input_size, s_c, s_h, s_y, weights)


def _zeros(rows):
    return tensor(np.zeros((rows, 1)))


def _pick_states(params: DRnnCellParams, state: CellState):
    """(c, h) for the recent and delayed paths, with early-step substitution."""
    c_rows = params.s_h if params.variant == "classic_lstm" else params.s_c
    if not state.history:
        zero = (_zeros(c_rows), _zeros(params.s_h))
        return zero, zero
    # earliest kept state: exactly t-d once d steps have passed
    return state.history[-1], state.history[0]


def cell_step(tape: Tape, params: DRnnCellParams, state: CellState, x: Tensor):
    """One recurrent step; returns (y, new_state)."""
    if x.shape != (params.input_size, 1):
        raise ValueError(f"expected input {(params.input_size, 1)}, got {x.shape}")
    (c_recent, h_recent), (c_delayed, h_delayed) = _pick_states(params, state)
    variant = params.variant
    if variant == "no_dilation":
        c_delayed, h_delayed = c_recent, h_recent
    elif variant == "no_recent":
        c_recent, h_recent = c_delayed, h_delayed

    w = params.weights

    def pre(g):
        acc = tape.add(tape.matmul(w[f"w_{g}"], x), w[f"b_{g}"])
        if variant == "classic_lstm":
            return tape.add(acc, tape.matmul(w[f"v_{g}"], h_recent))
        acc = tape.add(acc, tape.matmul(w[f"v_{g}"], h_recent))
        return tape.add(acc, tape.matmul(w[f"u_{g}"], h_delayed))

    u = tape.sigmoid(pre("u"))
    o = tape.sigmoid(pre("o"))
    cand = tape.tanh(pre("c"))

    if variant == "classic_lstm":
        f = tape.sigmoid(pre("f"))
        c = tape.add(tape.hadamard(f, c_recent), tape.hadamard(u, cand))
        h = tape.hadamard(o, tape.tanh(c))
        y = h
    else:
        if variant == "no_fusion":
            # the forget gate only feeds the fusion term, so it is not
            # evaluated at all in this variant; the surviving state term is
            # the true delayed state when one exists, the recent one before
            mixed = c_delayed if len(state.history) == params.dilation else c_recent
        else:
            f = tape.sigmoid(pre("f"))
            mixed = tape.add(
                tape.hadamard(f, c_recent),
                tape.hadamard(tape.one_minus(f), c_delayed),
            )
        c = tape.add(tape.hadamard(u, mixed), tape.hadamard(tape.one_minus(u), cand))
        out = tape.hadamard(o, c)
        y = tape.slice_rows(out, 0, params.s_y)
        h = tape.slice_rows(out, params.s_y, params.s_c)

    history = (state.history + ((c, h),))[-params.dilation :]
    return y, CellState(step=state.step + 1, history=history)
