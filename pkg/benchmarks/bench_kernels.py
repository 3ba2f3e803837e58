"""Compiled kernels versus the numpy fallback.

Run with ``python3 benchmarks/bench_kernels.py [--legs 2] [--cols 8 10 12 14]``.
Prints one row per kernel and size with the best-of-``--repeat`` wall time
of each backend and the speed-up. Results are also checked for equality.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from rydladder import _fallback
from rydladder.lattice import build_lattice

try:
    from rydladder import _kernels as compiled
except ImportError:  # pragma: no cover
    compiled = None


def _cases(lat):
    upper = lat.upper_masks()
    nbr = lat.neighbor_masks()
    states = _fallback.enumerate_states(upper, lat.n_sites)
    perm = lat.permutation("x", 1)
    keys = _fallback.permute_states(states, perm)
    return {
        "enumerate_states": lambda m: m.enumerate_states(upper, lat.n_sites),
        "flip_connections": lambda m: m.flip_connections(states, nbr),
        "permute_states": lambda m: m.permute_states(states, perm),
        "lookup": lambda m: m.lookup(states, keys),
    }, states.size


def _same(a, b) -> bool:
    if isinstance(a, tuple):
        return all(np.array_equal(x, y) for x, y in zip(a, b))
    return np.array_equal(a, b)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--legs", type=int, default=2)
    ap.add_argument("--cols", type=int, nargs="+", default=[8, 10, 12, 14])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if compiled is None:
        print("compiled extension not built; nothing to compare")
        return 1
    print(f"{'kernel':<18}{'N':>4}{'D':>10}{'cython [s]':>13}{'numpy [s]':>13}{'speed-up':>10}  equal")
    for L in args.cols:
        lat = build_lattice(L, args.legs)
        cases, dim = _cases(lat)
        for name, fn in cases.items():
            ok = _same(fn(compiled), fn(_fallback))
            tc = min(timeit.repeat(lambda: fn(compiled), number=1, repeat=args.repeat))
            tn = min(timeit.repeat(lambda: fn(_fallback), number=1, repeat=args.repeat))
            print(f"{name:<18}{lat.n_sites:>4}{dim:>10}{tc:>13.5f}{tn:>13.5f}{tn / tc:>10.1f}  {ok}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
