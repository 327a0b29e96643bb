"""Benchmark the compiled monomial-merge kernel against the pure-Python
fallback.

The kernel merges two super-monomials (even exponent vectors plus odd
index tuples) and returns the Koszul sign; it sits on the hot path of
every super-polynomial product.  Run:

    python3 benchmarks/bench_kernel.py [--even N] [--odd N] [--pairs N]
"""

import argparse
import itertools
import random
import time

from diracdeform import _kernel_py

try:
    from diracdeform import _mulkernel
except ImportError:
    _mulkernel = None


def make_inputs(rng, n_even, n_odd, pairs):
    out = []
    for _ in range(pairs):
        e1 = tuple(rng.randint(0, 3) for _ in range(n_even))
        e2 = tuple(rng.randint(0, 3) for _ in range(n_even))
        o1 = tuple(sorted(rng.sample(range(n_odd),
                                     rng.randint(0, n_odd // 2))))
        o2 = tuple(sorted(rng.sample(range(n_odd),
                                     rng.randint(0, n_odd // 2))))
        out.append((e1, o1, e2, o2))
    return out


def bench(merge, inputs, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for e1, o1, e2, o2 in inputs:
            merge(e1, o1, e2, o2)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--even", type=int, default=4)
    ap.add_argument("--odd", type=int, default=8)
    ap.add_argument("--pairs", type=int, default=50000)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    rng = random.Random(0)
    inputs = make_inputs(rng, args.even, args.odd, args.pairs)

    # the two implementations must agree before timing them
    if _mulkernel is not None:
        for e1, o1, e2, o2 in itertools.islice(inputs, 2000):
            assert _mulkernel.merge_monomials(e1, o1, e2, o2) == \
                _kernel_py.merge_monomials(e1, o1, e2, o2)

    t_py = bench(_kernel_py.merge_monomials, inputs, args.repeats)
    print(f"pure python : {t_py:.4f} s "
          f"({args.pairs / t_py / 1e6:.2f} M merges/s)")
    if _mulkernel is None:
        print("compiled    : extension not built (fallback in use)")
        return
    t_c = bench(_mulkernel.merge_monomials, inputs, args.repeats)
    print(f"compiled    : {t_c:.4f} s "
          f"({args.pairs / t_c / 1e6:.2f} M merges/s)")
    print(f"speedup     : {t_py / t_c:.2f}x")


if __name__ == "__main__":
    main()
