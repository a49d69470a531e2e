"""Benchmark the compiled kernels against the pure-Python fallback.

Usage:
    python benchmarks/bench_kernels.py [--sizes 256,512,1024] [--repeat 5]

Labeling runs on blob-like random masks (morphologically smoothed noise,
the realistic case for segmentation post-processing); point selection runs
on a few thousand prioritized candidates with a spacing floor, which is the
uncapped selection worst case.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from camoseg._kernels import fallback, native_module
from camoseg.backends.synthetic import box_blur3


def blob_mask(size: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    field = rng.random((size, size))
    for _ in range(3):
        field = box_blur3(field)
    return field > 0.5


def time_call(fn, *args, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="256,512,1024")
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--points", type=int, default=4000)
    args = parser.parse_args()

    native = native_module()
    if native is None:
        print("native kernels are not built; showing fallback timings only")

    sizes = [int(s) for s in args.sizes.split(",")]
    print(f"{'kernel':<28} {'size':>8} {'python':>10} {'native':>10} {'speedup':>8}")
    for size in sizes:
        mask = blob_mask(size, seed=size)
        t_py = time_call(fallback.label_components, mask, repeat=args.repeat)
        if native is not None:
            lf, nf = fallback.label_components(mask)
            ln, nn = native.label_components(mask)
            assert nf == nn and (lf == ln).all(), "implementations disagree"
            t_nat = time_call(native.label_components, mask, repeat=args.repeat)
            print(
                f"{'label_components':<28} {size:>6}^2 {t_py*1e3:>8.2f}ms "
                f"{t_nat*1e3:>8.2f}ms {t_py/t_nat:>7.1f}x"
            )
        else:
            print(f"{'label_components':<28} {size:>6}^2 {t_py*1e3:>8.2f}ms {'-':>10} {'-':>8}")

    rng = np.random.default_rng(0)
    ys = rng.integers(0, 2048, args.points)
    xs = rng.integers(0, 2048, args.points)
    t_py = time_call(fallback.greedy_spaced, ys, xs, -1, 5, repeat=args.repeat)
    if native is not None:
        a = fallback.greedy_spaced(ys, xs, -1, 5)
        b = native.greedy_spaced(ys, xs, -1, 5)
        assert (a == b).all(), "implementations disagree"
        t_nat = time_call(native.greedy_spaced, ys, xs, -1, 5, repeat=args.repeat)
        print(
            f"{'greedy_spaced (uncapped)':<28} {args.points:>8} {t_py*1e3:>8.2f}ms "
            f"{t_nat*1e3:>8.2f}ms {t_py/t_nat:>7.1f}x"
        )
    else:
        print(f"{'greedy_spaced (uncapped)':<28} {args.points:>8} {t_py*1e3:>8.2f}ms {'-':>10} {'-':>8}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
