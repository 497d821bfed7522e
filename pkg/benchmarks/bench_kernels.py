"""Compiled vs pure-Python kernel timings.

Run with ``python3 benchmarks/bench_kernels.py``. Both implementations are
imported directly, so the comparison does not depend on which backend the
package selected at import.
"""

import argparse
import timeit

import numpy as np

from fodwb import _kernels_py, sh

try:
    from fodwb import _kernels
except ImportError:
    _kernels = None


def cases(rng):
    dirs = np.ascontiguousarray(sh.fibonacci_sphere(10000, hemisphere=False))
    small = np.ascontiguousarray(sh.fibonacci_sphere(100))
    ranks = np.ascontiguousarray(2 * np.arange(1, 26, dtype=np.int64))
    big_ranks = np.ascontiguousarray(rng.integers(1, 400, size=60).astype(np.int64))
    return [
        ("real_sh_basis 10000 dirs, order 10", "real_sh_basis", (dirs, 10)),
        ("real_sh_basis 100 dirs, order 8", "real_sh_basis", (small, 8)),
        ("signed_rank_counts n=25", "signed_rank_counts", (ranks,)),
        ("signed_rank_counts n=60", "signed_rank_counts", (big_ranks,)),
    ]


def best_of(fn, args, repeat):
    timer = timeit.Timer(lambda: fn(*args))
    number, _ = timer.autorange()
    return min(timer.repeat(repeat, number)) / number


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if _kernels is None:
        print("compiled extension not built; only the fallback can be timed")
    print(f"{'case':40s} {'python':>12s} {'compiled':>12s} {'speedup':>8s}")
    for label, name, call_args in cases(np.random.default_rng(0)):
        t_py = best_of(getattr(_kernels_py, name), call_args, args.repeat)
        if _kernels is None:
            print(f"{label:40s} {t_py * 1e3:10.3f}ms {'-':>12s} {'-':>8s}")
            continue
        fast = getattr(_kernels, name)
        np.testing.assert_allclose(fast(*call_args), getattr(_kernels_py, name)(*call_args), rtol=1e-12, atol=1e-12)
        t_c = best_of(fast, call_args, args.repeat)
        print(f"{label:40s} {t_py * 1e3:10.3f}ms {t_c * 1e3:10.3f}ms {t_py / t_c:7.1f}x")


if __name__ == "__main__":
    main()
