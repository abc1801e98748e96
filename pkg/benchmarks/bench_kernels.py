"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from clthres import SeededRng, StarForestSpec, build_star_forest, kernels
from clthres.synthgen import sampling_tables

CASES = [(1000, 21), (4000, 21), (8000, 101), (30000, 101)]


def bench(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = ["python"] + (["cython"] if kernels.HAVE_EXTENSION else [])
    print(f"default backend: {kernels.BACKEND}")
    print(f"{'kernel':<16}{'n':>7}{'d':>5}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for n, d in CASES:
        gen = SeededRng(0, (n, d)).generator()
        x = gen.integers(0, 2, size=(n, d)).astype(np.intp)
        model = build_star_forest(StarForestSpec(d, d // 2))
        order, parent, cdf = sampling_tables(model)
        u = gen.random((n, d))
        for name, call in (
            ("pair_counts", lambda b: kernels.pair_counts(x, 2, backend=b)),
            ("ancestral", lambda b: kernels.ancestral_sample(order, parent, cdf, u, backend=b)),
        ):
            times = [bench(lambda: call(b), args.repeat) for b in backends]
            speed = f"{times[0] / times[-1]:>9.1f}x" if len(times) > 1 else f"{'-':>10}"
            print(f"{name:<16}{n:>7}{d:>5}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times) + speed)


if __name__ == "__main__":
    main()
