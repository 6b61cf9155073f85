"""Compare the compiled and pure-Python kernels.

    python3 benchmarks/bench_kernels.py [--sizes 10000 100000] [--repeat 5]

Times ``df_chains`` and ``count_triples`` on random inputs of each size,
then a whole ``build_all`` on a synthetic MIMIC-shaped log with each
backend swapped in. Reports the best of ``--repeat`` runs.
"""

import argparse
import random
import sys
import timeit
from contextlib import contextmanager

from eventgraph import _kernels_py, kernels
from eventgraph.builder import build_all
from eventgraph.mimic import extract_log
from eventgraph.synth import generate_bundle

try:
    from eventgraph import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def chain_input(n, rng):
    n_events = max(1, n // 3)
    owners = [rng.randrange(max(1, n // 8)) for _ in range(n)]
    events = [rng.randrange(n_events) for _ in range(n)]
    rank = list(range(n_events))
    rng.shuffle(rank)
    return owners, events, rank


def triple_input(n, rng):
    return ([rng.randrange(4) for _ in range(n)],
            [rng.randrange(40) for _ in range(n)],
            [rng.randrange(40) for _ in range(n)])


def best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


@contextmanager
def backend(impl):
    saved = kernels._impl
    kernels._impl = impl
    try:
        yield
    finally:
        kernels._impl = saved


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[10_000, 100_000, 1_000_000])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--patients", type=int, default=500)
    parser.add_argument("--seed", type=int, default=1)
    args = parser.parse_args(argv)

    if _kernels_c is None:
        print("compiled kernels are not built; reinstall with Cython available", file=sys.stderr)
        return 1

    rng = random.Random(args.seed)
    print(f"{'kernel':<14}{'n':>10}{'python s':>12}{'cython s':>12}{'speedup':>9}")
    for n in args.sizes:
        for name, make in (("df_chains", chain_input), ("count_triples", triple_input)):
            data = make(n, rng)
            py = best(lambda: getattr(_kernels_py, name)(*data), args.repeat)
            cy = best(lambda: getattr(_kernels_c, name)(*data), args.repeat)
            assert getattr(_kernels_py, name)(*data) == getattr(_kernels_c, name)(*data)
            print(f"{name:<14}{n:>10}{py:>12.4f}{cy:>12.4f}{py / cy:>8.1f}x")

    records = extract_log(generate_bundle(args.seed, args.patients))
    times = {}
    for label, impl in (("python", _kernels_py), ("cython", _kernels_c)):
        with backend(impl):
            times[label] = best(lambda: build_all(records), max(1, args.repeat // 2))
    print(f"\nbuild_all on {len(records)} records ({args.patients} patients): "
          f"python {times['python']:.3f}s, cython {times['cython']:.3f}s, "
          f"speedup {times['python'] / times['cython']:.2f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
