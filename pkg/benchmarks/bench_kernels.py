"""Compare the compiled and numpy moment kernels on design-test sized inputs.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from mbtdesign import _moments_py, kernels
from mbtdesign.design import bloch_sample_spherical, exact_three_design


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    ens = exact_three_design()
    rhos = np.ascontiguousarray(ens.apply(bloch_sample_spherical().states))
    w = ens.probabilities
    print(f"input: {rhos.shape[0]} states x {rhos.shape[1]} members")
    print(f"{'t':>2} {'numpy [ms]':>12} {'cython [ms]':>12} {'speedup':>8} {'max diff':>10}")
    for t in (1, 2, 3):
        ref = _moments_py.weighted_tensor_power_sum(rhos, w, t)
        t_np = min(timeit.repeat(lambda: _moments_py.weighted_tensor_power_sum(rhos, w, t),
                                 number=1, repeat=args.repeat))
        if kernels._compiled is None:
            print(f"{t:>2} {t_np * 1e3:12.2f} {'n/a':>12}")
            continue
        out = kernels.weighted_tensor_power_sum(rhos, w, t, backend="cython")
        t_cy = min(timeit.repeat(lambda: kernels.weighted_tensor_power_sum(rhos, w, t, backend="cython"),
                                 number=1, repeat=args.repeat))
        diff = np.abs(out - ref).max()
        print(f"{t:>2} {t_np * 1e3:12.2f} {t_cy * 1e3:12.2f} {t_np / t_cy:8.1f} {diff:10.1e}")


if __name__ == "__main__":
    main()
