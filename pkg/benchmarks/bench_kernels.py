"""Compare the compiled kernel backend against the numpy fallback.

Runs two layers of measurement:

* micro: each hot kernel on synthetic matrices, both backends in-process
* macro: a short real training run per backend, in subprocesses, because
  the autodiff tape binds its backend once at import time

Usage: python3 benchmarks/bench_kernels.py [--size 256] [--repeats 200]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from loadcast._kernels import available_backends, get_backend

MICRO_KERNELS = ["matmul", "add", "multiply", "sigmoid", "tanh", "exp", "array_sum"]

TRAIN_PROBE = """
import time
import numpy as np
from loadcast._kernels import BACKEND_NAME
from loadcast.config import RunConfig
from loadcast.synthetic import generate_fleet
from loadcast.training import TrainSchedule, train_member

cfg = RunConfig().validate()
schedule = TrainSchedule(
    epochs=1, training_steps=10, warmup_weeks=2, history_weeks=3,
    max_updates=4, ensemble_size=1,
)
fleet = generate_fleet(n_series=2, n_weeks=6, seed=5)
t0 = time.perf_counter()
train_member(fleet, cfg.network, schedule, cfg.loss, seed=1)
print(f"{BACKEND_NAME} {time.perf_counter() - t0:.3f}")
"""


def bench_micro(size: int, repeats: int):
    rng = np.random.default_rng(0)
    a = rng.standard_normal((size, size))
    b = rng.standard_normal((size, size))
    rows = []
    for name in available_backends():
        backend = get_backend(name)
        for op in MICRO_KERNELS:
            fn = getattr(backend, op)
            args = (a, b) if op in ("matmul", "add", "multiply") else (a,)
            fn(*args)  # warm up
            t0 = time.perf_counter()
            for _ in range(repeats):
                fn(*args)
            rows.append((name, op, (time.perf_counter() - t0) / repeats))
    return rows


def bench_macro():
    results = {}
    for name in available_backends():
        env = dict(os.environ)
        env["LOADCAST_BACKEND"] = "python" if name == "numpy" else name
        out = subprocess.run(
            [sys.executable, "-c", TRAIN_PROBE],
            env=env,
            capture_output=True,
            text=True,
            check=True,
        )
        reported, seconds = out.stdout.split()
        assert reported == name, f"subprocess picked {reported}, wanted {name}"
        results[name] = float(seconds)
    return results


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--size", type=int, default=256)
    parser.add_argument("--repeats", type=int, default=200)
    args = parser.parse_args(argv)

    names = available_backends()
    print(f"backends available: {', '.join(names)}")
    print(f"\nmicro kernels ({args.size}x{args.size}, mean of {args.repeats} runs)")
    micro = bench_micro(args.size, args.repeats)
    by_op = {}
    for name, op, seconds in micro:
        by_op.setdefault(op, {})[name] = seconds
    width = max(len(op) for op in MICRO_KERNELS)
    header = f"{'kernel':<{width}}" + "".join(f"  {n:>12}" for n in names)
    print(header)
    for op in MICRO_KERNELS:
        line = f"{op:<{width}}"
        for name in names:
            line += f"  {by_op[op][name] * 1e6:>10.1f}us"
        print(line)

    print("\nmacro: short training run per backend (subprocess)")
    macro = bench_macro()
    for name, seconds in macro.items():
        print(f"  {name:>8}: {seconds:.3f}s")
    if len(macro) == 2 and "compiled" in macro and "numpy" in macro:
        ratio = macro["numpy"] / macro["compiled"]
        print(f"  compiled is {ratio:.2f}x the numpy fallback on this workload")
    return 0


if __name__ == "__main__":
    sys.exit(main())
