#!/usr/bin/env python3
"""Benchmark the compiled kernel against the pure-Python fallback on the
same paired workload and verify the two produce bit-identical traces.

Usage: python scripts/benchmark.py [--horizon 20000] [--repeats 3]
"""

import argparse
import time

import numpy as np

from socialrl import _kernels
from socialrl.config import ExperimentConfig
from socialrl.harness import run_paired


def run_with(backend: str, cfg: ExperimentConfig, seed: int):
    original = _kernels.run_paired_core
    _kernels.run_paired_core = _kernels.get_backend(backend).run_paired_core
    try:
        start = time.perf_counter()
        result = run_paired(cfg, seed)
        elapsed = time.perf_counter() - start
    finally:
        _kernels.run_paired_core = original
    return result, elapsed


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--horizon", type=int, default=20000)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    cfg = ExperimentConfig(horizon=args.horizon)
    backends = ["python"]
    try:
        _kernels.get_backend("compiled")
        backends.insert(0, "compiled")
    except Exception:
        print("compiled kernel not available; timing the fallback only")

    results = {}
    for backend in backends:
        times = []
        for rep in range(args.repeats):
            result, elapsed = run_with(backend, cfg, seed=0)
            times.append(elapsed)
        best = min(times)
        results[backend] = (result, best)
        per_step = best / (2 * args.horizon) * 1e6  # both arms
        print(f"{backend:>9}: best of {args.repeats}: {best:8.3f} s "
              f"({per_step:7.2f} us per arm-step)")

    if len(results) == 2:
        speedup = results["python"][1] / results["compiled"][1]
        print(f"  speedup: {speedup:.1f}x")
        a, b = results["compiled"][0], results["python"][0]
        fields = ["state_p", "state_f", "omega_p", "omega_f", "actor_gap",
                  "reward_p", "reward_f", "rho_est_p", "delta_f", "entropy_p"]
        identical = all(np.array_equal(getattr(a, f), getattr(b, f)) for f in fields)
        print(f"  traces bit-identical: {identical}")
        if not identical:
            raise SystemExit(1)


if __name__ == "__main__":
    main()
