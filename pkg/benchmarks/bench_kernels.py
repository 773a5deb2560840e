#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Times the three hot paths (CRC-16 over 30-byte control bodies, the
sliding-window flagger, and the per-channel filter bank) on both
backends and prints the speedup. Also times a full silent-mission
simulation under each backend.
"""

import argparse
import os
import time

import numpy as np


def best_of(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_backends(repeat: int) -> list[tuple[str, float, float]]:
    from silentlink._kernels import get_backend

    pure = get_backend("pure")
    try:
        native = get_backend("native")
    except ImportError:
        print("compiled backend not built; run pip install -e . first")
        raise SystemExit(1)

    rows = []
    rng = np.random.default_rng(0)

    frames = [rng.integers(0, 256, 30).astype(np.uint8).tobytes() for _ in range(2000)]
    rows.append(
        (
            "crc16 x2000 (30 B frames)",
            best_of(lambda: [pure.crc16(f) for f in frames], repeat),
            best_of(lambda: [native.crc16(f) for f in frames], repeat),
        )
    )

    values = rng.normal(10, 2, 100_000)
    rows.append(
        (
            "env_window_flags (100k samples, W=8)",
            best_of(lambda: pure.env_window_flags(values, 8, 4.0), repeat),
            best_of(lambda: native.env_window_flags(values, 8, 4.0), repeat),
        )
    )

    axes = 7
    steps = 20_000
    zs = rng.normal(0, 1, (steps, axes))
    us = np.zeros((steps, axes))
    q = np.full(2 * axes, 1e-4)
    r = np.full(axes, 1e-2)

    def run_bank(impl):
        x = np.zeros(2 * axes)
        p = np.zeros(4 * axes)
        out = np.zeros(axes)
        for i in range(steps):
            impl.cv_bank_step(x, p, 0.25, q, r, us[i], zs[i], out)

    rows.append(
        (
            f"cv_bank_step x{steps} ({axes} channels)",
            best_of(lambda: run_bank(pure), repeat),
            best_of(lambda: run_bank(native), repeat),
        )
    )
    return rows


def bench_simulation(repeat: int) -> dict[str, float]:
    import importlib
    import subprocess
    import sys

    code = (
        "import time\n"
        "from silentlink.config import SimConfig\n"
        "from silentlink.engine import Engine\n"
        "cfg = SimConfig.from_dict({'engine': {'duration_s': 700.0, 'seed': 1},"
        " 'compressor': {'process_var': [0.0, 0.0], 'measurement_var': 0.0}})\n"
        "t0 = time.perf_counter()\n"
        "Engine(cfg).run()\n"
        "print(time.perf_counter() - t0)\n"
    )
    times = {}
    for backend in ("pure", "native"):
        env = dict(os.environ, SILENTLINK_KERNELS=backend)
        best = float("inf")
        for _ in range(repeat):
            out = subprocess.run(
                [sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True
            )
            best = min(best, float(out.stdout.strip()))
        times[backend] = best
    return times


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    rows = bench_backends(args.repeat)
    width = max(len(name) for name, _, _ in rows)
    print(f"{'kernel'.ljust(width)}  {'pure':>10}  {'native':>10}  {'speedup':>8}")
    for name, t_pure, t_native in rows:
        print(
            f"{name.ljust(width)}  {t_pure * 1e3:>8.2f}ms  {t_native * 1e3:>8.2f}ms"
            f"  {t_pure / t_native:>7.1f}x"
        )

    sim = bench_simulation(args.repeat)
    print()
    print(
        f"700 s silent mission: pure {sim['pure']:.3f}s, native {sim['native']:.3f}s, "
        f"speedup {sim['pure'] / sim['native']:.1f}x"
    )


if __name__ == "__main__":
    main()
