"""Compare the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Each kernel is also checked for bit-identical output before timing is reported.
"""
import argparse
import time

import numpy as np

from pathorder import _pykernels as py

try:
    from pathorder import _kernels as cy
except ImportError:
    cy = None


def best_of(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases():
    starts = np.ascontiguousarray(np.random.default_rng(0).random((5000, 2)) / 16.0)
    return {
        "iterate cat, 1e6 steps": lambda k: k.iterate(0, 0.0, 0.3, 0.7, 10**6),
        "iterate standard K=6, 1e6 steps": lambda k: k.iterate(2, 6.0, 0.3, 0.7, 10**6),
        "first_passage standard K=6, L=5000, horizon 50":
            lambda k: k.first_passage(2, 6.0, starts, 0.0, 0.0, 1.0, 1.0, 16, 16, 17, 50, 1.0),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if cy is None:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation`")
    print(f"{'kernel':<50}{'python [s]':>12}{'cython [s]':>12}{'speedup':>10}")
    for name, fn in cases().items():
        t_py, out_py = best_of(lambda: fn(py), 1)
        t_cy, out_cy = best_of(lambda: fn(cy), args.repeat)
        outs = (out_py, out_cy) if isinstance(out_py, tuple) else ((out_py,), (out_cy,))
        same = all(np.array_equal(a, b) for a, b in zip(*outs))
        if not same:
            raise SystemExit(f"{name}: backends disagree")
        print(f"{name:<50}{t_py:>12.3f}{t_cy:>12.4f}{t_py / t_cy:>9.0f}x")


if __name__ == "__main__":
    main()
