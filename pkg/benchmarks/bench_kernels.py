"""Time the compiled kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from gupsim import _pykernels, kernels


def cases(rng):
    nk, nx = 2048, 2048
    k = np.sort(rng.uniform(-3.0, 3.0, nk))
    w = rng.normal(size=nk) + 1j * rng.normal(size=nk)
    x = np.linspace(-500.0, 500.0, nx)
    yield "direct_sum 2048x2048", lambda mod: mod.direct_sum(k, w, x)

    n = 4096
    a = rng.normal(size=n) + 0j
    b = a.copy()
    yield "leapfrog n=4096 x 500", lambda mod: mod.leapfrog(a, b, 500, 0.2, -1e-4, -1e-3)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if kernels.compiled_backend is None:
        print("compiled extension not built; timing the numpy fallback only")
    rng = np.random.default_rng(0)
    print(f"{'case':<24}{'numpy [ms]':>12}{'cython [ms]':>13}{'speedup':>9}")
    for name, fn in cases(rng):
        t_py = min(timeit.repeat(lambda: fn(_pykernels), number=1, repeat=args.repeat))
        if kernels.compiled_backend is not None:
            t_c = min(timeit.repeat(lambda: fn(kernels.compiled_backend), number=1,
                                    repeat=args.repeat))
            print(f"{name:<24}{t_py * 1e3:>12.2f}{t_c * 1e3:>13.2f}{t_py / t_c:>8.1f}x")
        else:
            print(f"{name:<24}{t_py * 1e3:>12.2f}{'-':>13}{'-':>9}")


if __name__ == "__main__":
    main()
