"""Exhaustive two-way splits of Parseval frames built from Fourier rows.

For every grid order ``m`` and residue set ``I`` of size ``n`` (containing 0),
the rows of ``F_I / sqrt(m)`` form a Parseval frame in ``C^n`` with
``eps = n/m``. The script reports the best achievable ``max(lambda_max)`` over
all splits next to the bound ``(1 + sqrt(2 eps))**2 / 2``.
"""

import argparse
import csv
import itertools
import math
import sys

from expframe.matrix_core import build_submatrix
from expframe.selection import SelectionConfig, partition_step, split_bound


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--orders", type=int, nargs="+", default=[8, 12, 16])
    p.add_argument("--cells", type=int, nargs="+", default=[1, 2, 3])
    args = p.parse_args(argv)

    w = csv.writer(sys.stdout)
    w.writerow(["m", "I", "eps", "part1_max", "part2_max", "bound", "margin"])
    cfg = SelectionConfig(method="exhaustive", slack=0.0)
    for m in args.orders:
        for n in args.cells:
            for rest in itertools.combinations(range(1, m), n - 1):
                I = (0, *rest)
                V = build_submatrix(m, I, range(m)) / math.sqrt(m)
                res = partition_step(V, 1.0, 1.0, cfg)
                bound = split_bound(n / m)
                worst = max(res.bounds1[1], res.bounds2[1])
                w.writerow([m, " ".join(map(str, I)), f"{n / m:.4f}", f"{res.bounds1[1]:.6f}",
                            f"{res.bounds2[1]:.6f}", f"{bound:.6f}", f"{bound - worst:.6f}"])


if __name__ == "__main__":
    main()
