"""Times the compiled kernels against the NumPy fallback.

Run from the repository root:

    python3 benchmarks/bench_kernels.py

Both backends are imported directly, so the numbers are comparable no matter
which one the package selected at import time.
"""

import argparse
import time

import numpy as np

from silsample import _pykernels

try:
    from silsample import _ckernels
except ImportError:
    _ckernels = None

SIZES = ((200, 4), (1000, 11), (4000, 11))


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def _cases(rng, m, n):
    refs = rng.normal(size=(m, n))
    queries = rng.normal(size=(max(1, m // 4), n))
    class_ids = (rng.random(m) < 0.3).astype(np.int64)
    return (
        ("nn1", lambda impl: impl.nn1_indices(refs, queries)),
        ("knn k=5", lambda impl: impl.knn_indices(refs, queries, 5)),
        ("pairwise", lambda impl: impl.pairwise_distances(refs)),
        ("class sums", lambda impl: impl.class_distance_sums(refs, class_ids)),
    )


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=3,
                        help="timing repetitions; the best run is reported")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    if _ckernels is None:
        print("compiled backend unavailable; timing the fallback only")
    rng = np.random.default_rng(args.seed)
    header = f"{'case':>24}  {'python':>10}  {'compiled':>10}  {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for m, n in SIZES:
        for name, call in _cases(rng, m, n):
            label = f"{name} m={m} n={n}"
            py = _time(lambda: call(_pykernels), args.repeats)
            if _ckernels is None:
                print(f"{label:>24}  {py * 1e3:>8.2f}ms  {'-':>10}  {'-':>8}")
                continue
            cy = _time(lambda: call(_ckernels), args.repeats)
            print(f"{label:>24}  {py * 1e3:>8.2f}ms  {cy * 1e3:>8.2f}ms  "
                  f"{py / cy:>7.1f}x")


if __name__ == "__main__":
    main()
