"""Time the hot kernels on every importable backend.

    python benchmarks/bench_kernels.py [--repeat 5] [--seed 0]

Prints one line per (kernel, backend) with the best wall time and the
speedup of the compiled backend over the numpy fallback.
"""
import argparse
import timeit

import numpy as np

from harmratio import kernels
from harmratio.opt.bnb import _egal_weights, greedy_egal_owners, greedy_nash_owners


def cases(rng):
    U = rng.random((2000, 6))
    cur = U[0].copy()
    yield "floors_argmax  K=2000 n=6", lambda k: k.floors_argmax(U, 0, cur * 0.5, np.ones(6, dtype=bool), 1e-9)
    yield "ihr_pairs      K=2000 n=6", lambda k: k.ihr_pairs(U, cur, 1e-9)
    Ug = rng.random((500, 10))
    yield "ghr_sort       K=500 n=10", lambda k: k.ghr_sort(Ug, Ug[0].copy(), 1, 1.0, 1e-9)
    V = rng.integers(1, 10, size=(4, 10)).astype(float)
    inc = greedy_nash_owners(V)
    yield "bnb_nash       n=4 m=10", lambda k: k.bnb_nash(V, inc)
    W = rng.integers(1, 10, size=(3, 10)).astype(float)
    active = np.ones(3, dtype=bool)
    floors = np.zeros(3)
    inc_m = greedy_egal_owners(W)
    weights = _egal_weights(W)
    yield "bnb_maxmin     n=3 m=10", lambda k: k.bnb_maxmin(W, active, floors, inc_m, 1e-9, weights)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    impls = kernels.backends()
    print(f"active backend: {kernels.BACKEND}; available: {', '.join(impls)}")
    for name, fn in cases(np.random.default_rng(args.seed)):
        times = {}
        for label, mod in impls.items():
            fn(mod)  # warm up
            times[label] = min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat))
        cells = "  ".join(f"{label} {t * 1e3:9.3f} ms" for label, t in times.items())
        speed = f"  x{times['python'] / times['cython']:.1f}" if "cython" in times else ""
        print(f"{name}  {cells}{speed}")


if __name__ == "__main__":
    main()
