"""Reverse-mode automatic differentiation over small 2-D float64 matrices.

The engine is deliberately minimal: a Tensor wraps a 2-D array, a Tape
records one node per arithmetic op, and backward() replays the records in
reverse, accumulating gradients into every watched tensor.  Gradient flow is
driven by the ``watched`` flag: ops whose inputs are all unwatched constants
record nothing, so constant subgraphs cost no tape memory.

Any op that produces a NaN or Inf raises NumericError immediately rather
than letting the value propagate; callers treat that as "abort this step".
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ._kernels import backend as K

PRIMITIVE_OPS = (
    "matmul",
    "add",
    "subtract",
    "hadamard",
    "concat_rows",
    "slice_rows",
    "sigmoid",
    "tanh",
    "exp",
    "log",
    "scalar_mul",
    "sum",
    "mean",
)


class NumericError(ArithmeticError):
    """A primitive produced (or was fed) a non-finite or out-of-domain value."""


def _as_matrix(value):
    arr = np.array(value, dtype=np.float64, order="C", ndmin=2)
    if arr.ndim != 2:
        raise ValueError(f"tensors are 2-D, got shape {arr.shape}")
    return arr


class Tensor:
    __slots__ = ("data", "grad", "watched")

    def __init__(self, data: np.ndarray, watched: bool = False):
        self.data = data
        self.grad = None
        self.watched = watched

    @property
    def shape(self):
        return self.data.shape

    def item(self) -> float:
        if self.data.shape != (1, 1):
            raise ValueError(f"item() needs a (1, 1) tensor, got {self.data.shape}")
        return float(self.data[0, 0])

    def grad_buffer(self) -> np.ndarray:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        return self.grad

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, watched={self.watched})"


def tensor(value, watched: bool = False) -> Tensor:
    arr = _as_matrix(value)
    if not K.all_finite(arr):
        raise NumericError("tensor created from non-finite values")
    return Tensor(arr, watched)


def constant(value) -> Tensor:
    return tensor(value, watched=False)


_ONES: dict[tuple, np.ndarray] = {}


def _ones(shape):
    arr = _ONES.get(shape)
    if arr is None:
        arr = np.ones(shape)
        _ONES[shape] = arr
    return arr


class Tape:
    """Ordered op records; backward() replays them in reverse.

    A non-recording tape (record=False) computes values only, which is what
    inference uses.  Nodes are (op_name, closure) pairs; the closure reads
    the output's accumulated gradient and pushes it into the parents.
    """

    def __init__(self, record: bool = True):
        self.record = record
        self._nodes: list = []

    def __len__(self):
        return len(self._nodes)

    def op_names(self):
        return {name for name, _ in self._nodes}

    def _emit(self, name, fn):
        self._nodes.append((name, fn))

    def _result(self, data, watched, op):
        if not K.all_finite(data):
            raise NumericError(f"non-finite result in {op} (shape {data.shape})")
        return Tensor(data, watched)

    # -- primitives ---------------------------------------------------------

    def matmul(self, a: Tensor, b: Tensor) -> Tensor:
        if a.data.shape[1] != b.data.shape[0]:
            raise ValueError(f"matmul shapes {a.data.shape} x {b.data.shape}")
        out = self._result(K.matmul(a.data, b.data), a.watched or b.watched, "matmul")
        if self.record and out.watched:
            def back():
                if out.grad is None:
                    return
                if a.watched:
                    K.matmul_acc_a(a.grad_buffer(), out.grad, b.data)
                if b.watched:
                    K.matmul_acc_b(b.grad_buffer(), out.grad, a.data)
                out.grad = None
            self._emit("matmul", back)
        return out

    def _elementwise_pair(self, a, b, op):
        if a.data.shape != b.data.shape:
            raise ValueError(f"{op} shapes {a.data.shape} vs {b.data.shape}")

    def add(self, a: Tensor, b: Tensor) -> Tensor:
        self._elementwise_pair(a, b, "add")
        out = self._result(K.add(a.data, b.data), a.watched or b.watched, "add")
        if self.record and out.watched:
            def back():
                if out.grad is None:
                    return
                if a.watched:
                    K.acc(a.grad_buffer(), out.grad)
                if b.watched:
                    K.acc(b.grad_buffer(), out.grad)
                out.grad = None
            self._emit("add", back)
        return out

    def subtract(self, a: Tensor, b: Tensor) -> Tensor:
        self._elementwise_pair(a, b, "subtract")
        out = self._result(K.subtract(a.data, b.data), a.watched or b.watched, "subtract")
        if self.record and out.watched:
            def back():
                if out.grad is None:
                    return
                if a.watched:
                    K.acc(a.grad_buffer(), out.grad)
                if b.watched:
                    K.acc_neg(b.grad_buffer(), out.grad)
                out.grad = None
            self._emit("subtract", back)
        return out

    def hadamard(self, a: Tensor, b: Tensor) -> Tensor:
        self._elementwise_pair(a, b, "hadamard")
        out = self._result(K.multiply(a.data, b.data), a.watched or b.watched, "hadamard")
        if self.record and out.watched:
            def back():
                if out.grad is None:
                    return
                if a.watched:
                    K.acc_prod(a.grad_buffer(), out.grad, b.data)
                if b.watched:
                    K.acc_prod(b.grad_buffer(), out.grad, a.data)
                out.grad = None
            self._emit("hadamard", back)
        return out

    def scalar_mul(self, a: Tensor, c: float) -> Tensor:
        c = float(c)
        if not math.isfinite(c):
            raise NumericError("scalar_mul with non-finite scalar")
        out = self._result(K.scalar_mul(a.data, c), a.watched, "scalar_mul")
        if self.record and out.watched:
            def back():
                if out.grad is None:
                    return
                K.acc_scaled(a.grad_buffer(), out.grad, c)
                out.grad = None
            self._emit("scalar_mul", back)
        return out

    def one_minus(self, a: Tensor) -> Tensor:
        return self.subtract(Tensor(_ones(a.data.shape)), a)

    def sigmoid(self, a: Tensor) -> Tensor:
        out = self._result(K.sigmoid(a.data), a.watched, "sigmoid")
        if self.record and out.watched:
            def back():
                if out.grad is None:
                    return
                K.sigmoid_acc(a.grad_buffer(), out.grad, out.data)
                out.grad = None
            self._emit("sigmoid", back)
        return out

    def tanh(self, a: Tensor) -> Tensor:
        out = self._result(K.tanh(a.data), a.watched, "tanh")
        if self.record and out.watched:
            def back():
                if out.grad is None:
                    return
                K.tanh_acc(a.grad_buffer(), out.grad, out.data)
                out.grad = None
            self._emit("tanh", back)
        return out

    def exp(self, a: Tensor) -> Tensor:
        out = self._result(K.exp(a.data), a.watched, "exp")
        if self.record and out.watched:
            def back():
                if out.grad is None:
                    return
                K.exp_acc(a.grad_buffer(), out.grad, out.data)
                out.grad = None
            self._emit("exp", back)
        return out

    def log(self, a: Tensor) -> Tensor:
        if K.array_min(a.data) <= 0.0:
            raise NumericError("log of a non-positive value")
        out = self._result(K.log(a.data), a.watched, "log")
        if self.record and out.watched:
            def back():
                if out.grad is None:
                    return
                K.log_acc(a.grad_buffer(), out.grad, a.data)
                out.grad = None
            self._emit("log", back)
        return out

    def concat_rows(self, parts: Sequence[Tensor]) -> Tensor:
        if not parts:
            raise ValueError("concat_rows needs at least one part")
        cols = parts[0].data.shape[1]
        for p in parts:
            if p.data.shape[1] != cols:
                raise ValueError("concat_rows column mismatch")
        data = np.concatenate([p.data for p in parts], axis=0)
        watched = any(p.watched for p in parts)
        out = self._result(data, watched, "concat_rows")
        if self.record and out.watched:
            spans = []
            row = 0
            for p in parts:
                spans.append((p, row, row + p.data.shape[0]))
                row += p.data.shape[0]
            def back():
                if out.grad is None:
                    return
                for p, r0, r1 in spans:
                    if p.watched:
                        K.acc(p.grad_buffer(), out.grad[r0:r1])
                out.grad = None
            self._emit("concat_rows", back)
        return out

    def slice_rows(self, a: Tensor, start: int, stop: int) -> Tensor:
        rows = a.data.shape[0]
        if not (0 <= start < stop <= rows):
            raise ValueError(f"slice_rows [{start}:{stop}] on {rows} rows")
        out = self._result(a.data[start:stop].copy(), a.watched, "slice_rows")
        if self.record and out.watched:
            def back():
                if out.grad is None:
                    return
                K.acc(a.grad_buffer()[start:stop], out.grad)
                out.grad = None
            self._emit("slice_rows", back)
        return out

    def sum(self, a: Tensor) -> Tensor:
        out = self._result(np.array([[K.array_sum(a.data)]]), a.watched, "sum")
        if self.record and out.watched:
            def back():
                if out.grad is None:
                    return
                K.acc_fill(a.grad_buffer(), float(out.grad[0, 0]))
                out.grad = None
            self._emit("sum", back)
        return out

    def mean(self, a: Tensor) -> Tensor:
        n = a.data.size
        out = self._result(np.array([[K.array_sum(a.data) / n]]), a.watched, "mean")
        if self.record and out.watched:
            def back():
                if out.grad is None:
                    return
                K.acc_fill(a.grad_buffer(), float(out.grad[0, 0]) / n)
                out.grad = None
            self._emit("mean", back)
        return out

    # -- reverse pass -------------------------------------------------------

    def backward(self, loss: Tensor):
        if not self.record:
            raise RuntimeError("backward on a non-recording tape")
        if loss.data.shape != (1, 1):
            raise ValueError("backward seed must be a (1, 1) tensor")
        loss.grad_buffer()[0, 0] = 1.0
        for _, fn in reversed(self._nodes):
            fn()


EAGER = Tape(record=False)


@dataclass
class GradCheckReport:
    per_parameter: dict
    max_rel_error: float
    checks: int

    def passed(self, tolerance: float) -> bool:
        return self.max_rel_error < tolerance


def _rel_error(a: float, b: float) -> float:
    # Floor the denominator so finite-difference noise on near-zero
    # gradients does not read as a large relative error.
    return abs(a - b) / max(abs(a), abs(b), 1e-2)


def grad_check(
    f: Callable[[Tape], Tensor],
    params: Sequence[tuple[str, Tensor]],
    step: float = 1e-5,
    max_checks_per_param: int | None = None,
    seed: int = 0,
) -> GradCheckReport:
    """Compare tape gradients of ``f`` against central finite differences.

    ``f`` must evaluate the same scalar-valued graph each call from the
    tensors in ``params``.  When a parameter is large, a seeded random
    subset of max_checks_per_param elements is probed instead of all.
    """
    for name, p in params:
        if not p.watched:
            raise ValueError(f"parameter {name} is not watched")
        p.zero_grad()

    tape = Tape()
    tape.backward(f(tape))
    grads = {name: (np.zeros_like(p.data) if p.grad is None else p.grad.copy())
             for name, p in params}
    for _, p in params:
        p.zero_grad()

    rng = np.random.default_rng(seed)
    per_param = {}
    worst = 0.0
    checks = 0
    for name, p in params:
        flat = p.data.reshape(-1)
        size = flat.size
        if max_checks_per_param is not None and size > max_checks_per_param:
            idx = np.sort(rng.choice(size, size=max_checks_per_param, replace=False))
        else:
            idx = np.arange(size)
        worst_here = 0.0
        for i in idx:
            keep = flat[i]
            flat[i] = keep + step
            up = f(EAGER).item()
            flat[i] = keep - step
            down = f(EAGER).item()
            flat[i] = keep
            fd = (up - down) / (2.0 * step)
            got = grads[name].reshape(-1)[i]
            worst_here = max(worst_here, _rel_error(got, fd))
            checks += 1
        per_param[name] = worst_here
        worst = max(worst, worst_here)
    return GradCheckReport(per_param, worst, checks)
