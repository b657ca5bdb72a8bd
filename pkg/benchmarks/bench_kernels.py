"""Time the numba kernels against their pure-numpy counterparts.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--sizes 128,512,2048]

Numba compilation is excluded (one warm-up call per kernel).  The last
column is numpy time divided by numba time.
"""

import argparse
import math
import timeit

import numpy as np

from illposed import _kernels


def cases(n, rng):
    c, d = rng.standard_normal(n), rng.standard_normal(n)
    a = 0.5
    rl = (a, n, math.gamma(a), math.gamma(a + 1))
    return {
        "autoconv_stencil": ((c, d), _kernels.autoconv_stencil_numpy, _kernels.autoconv_stencil_numba),
        "autoconv_jacobian": ((c,), _kernels.autoconv_jacobian_numpy, _kernels.autoconv_jacobian_numba),
        "rl_matrix": (rl, _kernels.rl_matrix_numpy, _kernels.rl_matrix_numba),
        "hausdorff_matrix": ((n, min(n, 64)), _kernels.hausdorff_matrix_numpy, _kernels.hausdorff_matrix_numba),
    }


def best_time(fn, args, repeat):
    timer = timeit.Timer(lambda: fn(*args))
    number, _ = timer.autorange()
    return min(timer.repeat(repeat, number)) / number


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--sizes", default="128,512,2048")
    args = p.parse_args(argv)
    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not installed")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<18} {'n':>6} {'numpy [s]':>12} {'numba [s]':>12} {'speedup':>8} {'max rel diff':>13}")
    for n in (int(s) for s in args.sizes.split(",")):
        for name, (fargs, f_np, f_nb) in cases(n, rng).items():
            ref, fast = f_np(*fargs), f_nb(*fargs)  # warm-up and agreement
            diff = np.max(np.abs(ref - fast)) / max(np.max(np.abs(ref)), 1e-300)
            t_np = best_time(f_np, fargs, args.repeat)
            t_nb = best_time(f_nb, fargs, args.repeat)
            print(f"{name:<18} {n:>6} {t_np:>12.3e} {t_nb:>12.3e} {t_np / t_nb:>8.2f} {diff:>13.1e}")


if __name__ == "__main__":
    main()
