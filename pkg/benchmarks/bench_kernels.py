"""Timing comparison of the pure-Python and compiled kernel backends.

Runs each hot kernel on representative workload sizes, checks that both
backends return identical results, and prints per-call times with the
speedup. A missing compiled build is reported and the pure numbers are
shown alone.

Usage: python benchmarks/bench_kernels.py [--repeats 5]
"""

import argparse
import time

import numpy as np

from cadseg._kernels import pure

try:
    from cadseg._kernels import _compiled as compiled
except ImportError:
    compiled = None


def build_workloads(rng):
    cases = []

    for side, cap in ((16, 16), (64, 1024)):
        norm = rng.integers(0, 5, size=side * side) / 4.0
        norm[int(rng.integers(norm.size))] = 0.0
        cases.append((f"grow_region {side}x{side} cap {cap}", "grow_region",
                      (np.ascontiguousarray(norm), side, side, 0.6, cap)))

    offs_r = np.asarray([0, 0, 1, 1, 2, 2], dtype=np.int64)
    offs_c = np.asarray([0, 1, 0, 1, 0, 1], dtype=np.int64)
    for side in (16, 128):
        norm = np.ascontiguousarray(rng.uniform(size=side * side))
        cases.append((f"anchor_means {side}x{side} shape 3x2", "anchor_means",
                      (norm, side, side, offs_r, offs_c)))

    for pts in (64, 512):
        coords = rng.integers(0, 256, size=(4, pts))
        cases.append((f"min_distances {pts} vs {pts} points",
                      "directed_min_distances",
                      tuple(np.ascontiguousarray(c) for c in coords)))
    return cases


def best_time(fn, args, repeats):
    # pick the inner count so one sample lasts at least ~2 ms
    inner = 1
    while True:
        t0 = time.perf_counter()
        for _ in range(inner):
            fn(*args)
        span = time.perf_counter() - t0
        if span >= 2e-3 or inner >= 1 << 16:
            break
        inner *= 4
    best = span / inner
    for _ in range(repeats - 1):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / inner)
    return best


def as_comparable(result):
    if isinstance(result, tuple):
        return tuple(list(part) for part in result)
    return list(result)


def fmt(seconds):
    if seconds >= 1e-3:
        return f"{seconds * 1e3:8.2f} ms"
    return f"{seconds * 1e6:8.2f} us"


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5,
                        help="timing samples per case (default 5)")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    cases = build_workloads(rng)

    if compiled is None:
        print("compiled backend not built; timing the pure backend only")
    header = f"{'workload':34s} {'pure':>11s}"
    if compiled is not None:
        header += f" {'compiled':>11s} {'speedup':>8s}"
    print(header)
    print("-" * len(header))

    for label, name, call_args in cases:
        t_pure = best_time(getattr(pure, name), call_args, args.repeats)
        line = f"{label:34s} {fmt(t_pure)}"
        if compiled is not None:
            ref = as_comparable(getattr(pure, name)(*call_args))
            got = as_comparable(getattr(compiled, name)(*call_args))
            if ref != got:
                raise SystemExit(f"backend results differ on {label!r}")
            t_comp = best_time(getattr(compiled, name), call_args, args.repeats)
            line += f" {fmt(t_comp)} {t_pure / t_comp:7.1f}x"
        print(line)


if __name__ == "__main__":
    main()
