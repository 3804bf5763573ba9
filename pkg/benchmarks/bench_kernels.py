"""Time the numba and numpy paths of the hot kernels side by side.

Usage: python benchmarks/bench_kernels.py [--repeat R] [--n N ...]

Both implementations are imported directly, so the KLE_DISABLE_NUMBA flag is
not needed here. The first numba call (compilation) is excluded from timing.
"""
import argparse
import timeit

import numpy as np

from kle import kernels
from kle.distributions import AcgParams, EsagParams, acg_sample, esag_sample


def _best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def bench(n, repeat, rng):
    lam = np.diag([8.0, 2.0, 1.0, 0.5])
    X4 = acg_sample(AcgParams(lam), n, rng)
    w4 = rng.uniform(0, 1, n)
    w4 /= w4.sum()
    theta = EsagParams([1.0, 2.0, 6.0], [0.4, -0.2]).theta
    X3 = esag_sample(EsagParams(theta[:3], theta[3:]), n, rng)
    w3 = np.full(n, 1.0 / n)

    def tyler(impl):
        return lambda: impl(X4, w4, np.eye(4), 1e-10, 1000)

    def esag(impl):
        return lambda: impl(theta, X3, w3)

    rows = []
    for name, make, impls in (
            ("tyler d=4", tyler, (kernels._tyler_numpy, kernels._tyler_numba)),
            ("esag nll", esag, (kernels._esag_negloglik_numpy, kernels._esag_negloglik_numba))):
        t_np = _best(make(impls[0]), repeat)
        if kernels.HAVE_NUMBA:
            make(impls[1])()
            t_nb = _best(make(impls[1]), repeat)
        else:
            t_nb = float("nan")
        rows.append((name, n, t_np, t_nb))
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--n", type=int, nargs="+", default=[100, 1000, 10000])
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"numba available: {kernels.HAVE_NUMBA}; active backend: {kernels.BACKEND}")
    print(f"{'kernel':<10} {'n':>7} {'numpy [ms]':>11} {'numba [ms]':>11} {'speedup':>8}")
    for n in args.n:
        for name, size, t_np, t_nb in bench(n, args.repeat, rng):
            print(f"{name:<10} {size:>7} {1e3 * t_np:>11.3f} {1e3 * t_nb:>11.3f} "
                  f"{t_np / t_nb:>8.2f}")


if __name__ == "__main__":
    main()
