"""Compare the compiled kernels against the numpy fallback.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5] [--trials 20000]

Both implementations are run on identical inputs; results are checked for
equality before timings are reported.
"""

import argparse
import timeit

import numpy as np

from twwc import _kernels_py

try:
    from twwc import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None


def _inputs(rng, trials, n, N, alph=2, nz=2, n_z=6):
    logw = np.log(rng.dirichlet(np.ones(alph), size=(alph, alph)))
    cb = rng.integers(0, alph, size=(N, n))
    side = rng.integers(0, alph, size=(trials, n))
    obs = rng.integers(0, alph, size=(trials, n))
    wz = rng.dirichlet(np.ones(nz), size=(alph, alph))
    cb1 = rng.integers(0, alph, size=(8, n_z))
    cb2 = rng.integers(0, alph, size=(8, n_z))
    return (logw, cb, side, obs), (wz, cb1, cb2, nz)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--trials", type=int, default=20000)
    ap.add_argument("--n", type=int, default=8)
    ap.add_argument("--codewords", type=int, default=16)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    dec_args, z_args = _inputs(rng, args.trials, args.n, args.codewords)
    impls = {"python": _kernels_py}
    if _compiled is not None:
        impls["cython"] = _compiled
        assert np.array_equal(_kernels_py.ml_decode(*dec_args), _compiled.ml_decode(*dec_args))
        assert np.allclose(_kernels_py.z_likelihoods(*z_args), _compiled.z_likelihoods(*z_args), atol=1e-15)
    else:
        print("compiled extension not available; timing the fallback only")

    print(f"{'kernel':<14}{'impl':<8}{'best [ms]':>12}")
    for kernel, a in (("ml_decode", dec_args), ("z_likelihoods", z_args)):
        best = {}
        for name, mod in impls.items():
            fn = getattr(mod, kernel)
            best[name] = min(timeit.repeat(lambda: fn(*a), number=1, repeat=args.repeat)) * 1e3
            print(f"{kernel:<14}{name:<8}{best[name]:>12.3f}")
        if len(best) == 2:
            print(f"{'':<14}{'speedup':<8}{best['python'] / best['cython']:>11.2f}x")


if __name__ == "__main__":
    main()
