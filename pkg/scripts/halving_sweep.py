"""Sweep iterated halving over grid sizes and report certified frame ratios.

Example::

    python scripts/halving_sweep.py --orders 256 512 1024 --cells 1 2 4 --seeds 3
"""

import argparse
import csv
import sys
import time

from expframe import GridSpectrum, SelectionConfig, frame_certificate, iterated_halving


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--orders", type=int, nargs="+", default=[256, 512, 1024])
    p.add_argument("--cells", type=int, nargs="+", default=[1, 2, 4])
    p.add_argument("--seeds", type=int, default=3)
    p.add_argument("--method", default="random_certified")
    p.add_argument("--layout", choices=["contiguous", "spread"], default="contiguous")
    args = p.parse_args(argv)

    w = csv.writer(sys.stdout)
    w.writerow(["m", "n", "seed", "steps", "J_size", "normalized_lower", "normalized_upper", "ratio", "seconds"])
    for m in args.orders:
        for n in args.cells:
            I = tuple(range(n)) if args.layout == "contiguous" else tuple(k * (m // n) for k in range(n))
            for seed in range(args.seeds):
                t0 = time.perf_counter()
                J, trace = iterated_halving(m, I, SelectionConfig(method=args.method, seed=seed))
                elapsed = time.perf_counter() - t0
                c = frame_certificate(GridSpectrum(m, I), J)
                w.writerow([m, n, seed, len(trace.steps), len(J), f"{c.normalized_lower:.6f}",
                            f"{c.normalized_upper:.6f}", f"{c.ratio:.6f}", f"{elapsed:.3f}"])


if __name__ == "__main__":
    main()
