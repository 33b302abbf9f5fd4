"""Time the numba kernels against their numpy fallbacks.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5] [--size small|large]

Each kernel is run once to trigger compilation, then timed with
``timeit.repeat``; the best time is reported. Results are also checked for
agreement so that a fast but wrong kernel does not go unnoticed.
"""
import argparse
import timeit

import numpy as np

from mirrorcp import _kernels
from mirrorcp._accel import NUMBA_AVAILABLE

SIZES = {
    "small": {"sici": 10_000, "image": 2_000, "single": 20_000, "ens_n": 2_000, "ens_count": 64},
    "large": {"sici": 1_000_000, "image": 50_000, "single": 200_000, "ens_n": 17_501, "ens_count": 512},
}


def _cases(size):
    rng = np.random.default_rng(0)
    s = SIZES[size]
    x = np.geomspace(1e-3, 1e4, s["sici"])
    dt = rng.uniform(-2, 2, s["image"])
    r = rng.uniform(0.1, 3, s["image"])
    force = rng.standard_normal(s["single"])
    coef1 = np.array(_kernels.propagator_coefficients(2.0, 0.1, 0.04))
    n, count, rank = s["ens_n"], s["ens_count"], 2
    factor = rng.standard_normal((3, n, rank))
    weights = rng.standard_normal((count, 3, rank))
    om = np.array([2.0, 2.0, 2.1])
    coef3 = np.array([_kernels.propagator_coefficients(w, 0.1, 0.04) for w in om])
    return [
        ("sici_aux", (x,), _kernels.sici_aux_numba, _kernels.sici_aux_numpy),
        ("image_sum", (dt, r, 1.0, 64), _kernels.image_sum_numba, _kernels.image_sum_numpy),
        ("propagate_single", (0.0, 0.0, force, coef1, 4.0, 0.1, 1.0, 0.04),
         _kernels.propagate_single_numba, _kernels.propagate_single_numpy),
        ("propagate_ensemble", (factor, weights, coef3, om**2, 0.1, 1.0, 0.04, n // 5, n // 2),
         _kernels.propagate_ensemble_numba, _kernels.propagate_ensemble_numpy),
    ]


def _best(func, args, repeat):
    return min(timeit.repeat(lambda: func(*args), number=1, repeat=repeat))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--size", choices=sorted(SIZES), default="small")
    args = parser.parse_args(argv)
    if not NUMBA_AVAILABLE:
        parser.error("numba is unavailable or disabled; nothing to compare")
    print(f"{'kernel':<20}{'numba [s]':>12}{'numpy [s]':>12}{'speed-up':>10}{'max rel diff':>14}")
    for name, fargs, fast, slow in _cases(args.size):
        a = fast(*fargs)
        b = slow(*fargs)
        a_flat = np.concatenate([np.ravel(v) for v in (a if isinstance(a, tuple) else (a,))])
        b_flat = np.concatenate([np.ravel(v) for v in (b if isinstance(b, tuple) else (b,))])
        scale = np.maximum(np.abs(b_flat), 1e-300)
        diff = float(np.max(np.abs(a_flat - b_flat) / scale))
        t_fast = _best(fast, fargs, args.repeat)
        t_slow = _best(slow, fargs, max(1, args.repeat // 2))
        print(f"{name:<20}{t_fast:>12.4g}{t_slow:>12.4g}{t_slow / t_fast:>10.1f}{diff:>14.2e}")


if __name__ == "__main__":
    main()
