"""Compare the numba and pure-numpy paths for Gram assembly and the Jacobi solver.

    python3 benchmarks/bench_accel.py --sizes 4,8,12 --repeat 5
"""

import argparse
import os
import time

import numpy as np

from pairspec import _accel
from pairspec.datagen import gen_points, sample_pairs
from pairspec.kernels import KernelSpec, build_gram
from pairspec.spectral import eigh_psd


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def set_path(numba_on):
    if numba_on:
        os.environ.pop("PAIRSPEC_DISABLE_JIT", None)
    else:
        os.environ["PAIRSPEC_DISABLE_JIT"] = "1"


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="4,8,12", help="comma-separated point counts")
    parser.add_argument("--dim", type=int, default=2)
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--transform", default="symmetric")
    args = parser.parse_args(argv)

    if _accel.numba is None:
        print("numba is not importable; only the numpy path can run")
    spec = KernelSpec("gaussian", gamma=1.0, construction="kronecker", transform=args.transform)
    print(f"{'n_pairs':>8} {'stage':>8} {'numpy_s':>10} {'numba_s':>10} {'speedup':>8} {'max_diff':>10}")
    for n_v in (int(s) for s in args.sizes.split(",")):
        points = gen_points(n_v, args.dim, 0)
        sample = sample_pairs(n_v, 0)
        results = {}
        for numba_on in (False, True):
            if numba_on and _accel.numba is None:
                continue
            set_path(numba_on)
            build_gram(spec, points, sample, check_psd=False)  # warm-up / compile
            G = build_gram(spec, points, sample, check_psd=False)
            eigh_psd(G)
            t_gram = best_of(lambda: build_gram(spec, points, sample, check_psd=False), args.repeat)
            t_eig = best_of(lambda: eigh_psd(G), args.repeat)
            results[numba_on] = (t_gram, t_eig, G.values, eigh_psd(G).values)
        os.environ.pop("PAIRSPEC_DISABLE_JIT", None)
        base = results[False]
        fast = results.get(True, base)
        n = len(sample)
        for k, stage in enumerate(("gram", "jacobi")):
            diff = float(np.max(np.abs(base[2 + k] - fast[2 + k])))
            print(f"{n:>8} {stage:>8} {base[k]:>10.4f} {fast[k]:>10.4f} "
                  f"{base[k] / fast[k]:>8.1f} {diff:>10.2e}")


if __name__ == "__main__":
    main()
