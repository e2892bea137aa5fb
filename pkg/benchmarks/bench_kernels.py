"""Compare the compiled Gram kernel with the NumPy fallback.

Run ``python benchmarks/bench_kernels.py [--terms 400] [--dim 3]``.  Prints
the best-of-``repeat`` wall time of each backend, the speedup, and the
largest elementwise difference between the two kernels.
"""
import argparse
import timeit

import numpy as np

from isomlab._core import _fallback

try:
    from isomlab._core import _kernels
except ImportError:  # extension not built
    _kernels = None


def random_family(rng, n, d):
    shifts = rng.uniform(0, 3, (n, d))
    decays = rng.uniform(0.2, 2.0, (n, d)) + 1j * rng.normal(0, 1, (n, d))
    return shifts, decays


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--terms", type=int, default=400)
    parser.add_argument("--dim", type=int, default=3)
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    S, Z = random_family(rng, args.terms, args.dim)
    backends = {"numpy": _fallback.term_kernel}
    if _kernels is not None:
        backends["compiled"] = _kernels.term_kernel

    times = {}
    for name, fn in backends.items():
        fn(S, Z, S, Z)
        times[name] = min(timeit.repeat(lambda: fn(S, Z, S, Z), number=1, repeat=args.repeat))
        print(f"{name:>9}: {times[name] * 1e3:9.3f} ms  ({args.terms}x{args.terms} terms, d={args.dim})")
    if "compiled" in times:
        diff = np.max(np.abs(backends["compiled"](S, Z, S, Z) - backends["numpy"](S, Z, S, Z)))
        print(f"  speedup: {times['numpy'] / times['compiled']:.2f}x   max |difference|: {diff:.3e}")
    else:
        print("compiled kernel not available; only the fallback was timed")


if __name__ == "__main__":
    main()
