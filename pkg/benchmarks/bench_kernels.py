"""Compare the compiled and pure-numpy kernel backends.

    python3 benchmarks/bench_kernels.py --countries 232 --products 5109 --density 0.1
"""

import argparse
import statistics
import time

import numpy as np

from prodspace import kernels
from prodspace.metrics import proximity_from_counts


def timed(fn, repeats):
    times = []
    for _ in range(repeats):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return statistics.median(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--countries", type=int, default=232)
    ap.add_argument("--products", type=int, default=5109)
    ap.add_argument("--density", type=float, default=0.1, help="fraction of ones in M")
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    bits = (rng.random((args.countries, args.products)) < args.density).astype(np.uint8)
    backends = kernels.backends()
    if "compiled" not in backends:
        print("compiled extension not built; only the python backend is timed")
    print(f"M: {args.countries} x {args.products}, {bits.mean():.1%} ones, median of {args.repeats}")
    print(f"{'backend':<10}{'cooccurrence':>14}{'density':>10}")
    results = {}
    for name, mod in sorted(backends.items()):
        t_co, counts = timed(lambda: mod.cooccurrence(bits), args.repeats)
        phi = proximity_from_counts(counts)
        t_de, (omega, _) = timed(lambda: mod.density_matrix(bits, phi), args.repeats)
        results[name] = (counts, omega)
        print(f"{name:<10}{t_co:>13.3f}s{t_de:>9.3f}s")
    if len(results) == 2:
        (ca, oa), (cb, ob) = results.values()
        print(f"counts identical: {np.array_equal(ca, cb)}; max density diff: {np.abs(oa - ob).max():.1e}")


if __name__ == "__main__":
    main()
