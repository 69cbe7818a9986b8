"""Richardson differences for sin(pi x) sin(pi y), eps = 1e-2, g = 0.

Prints both coefficient columns, (a, b) = (1, 1e-2) and (1e-2, 1), in the
'norm  order' layout. Meshes beyond the banded-LU memory budget are solved by
Gauss-Seidel (N = 512 takes about a minute).
"""

import argparse
import time

from compact9.assembly import ProblemSpec
from compact9.cli import parse_n
from compact9.verify import richardson_study


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--N", type=parse_n, default=parse_n("16..256"),
                    help="mesh range, e.g. 16..512")
    ap.add_argument("--eps", type=float, default=1e-2)
    ap.add_argument("--csv", action="store_true", help="print CSV instead of a table")
    args = ap.parse_args()
    for a, b in ((1.0, 1e-2), (1e-2, 1.0)):
        t0 = time.perf_counter()
        rep = richardson_study(ProblemSpec(args.eps, a, b, "sin(pi*x)*sin(pi*y)", "0"), args.N)
        print(rep.to_csv() if args.csv else rep.table())
        print(f"# {time.perf_counter() - t0:.1f}s\n")


if __name__ == "__main__":
    main()
