"""Truncation error |L_h u - F| for smooth manufactured solutions.

Prints successive and least-squares orders for each u, in both coefficient
families. Rows whose norm is within rounding of the stencil sum are marked.
"""

import argparse

import numpy as np

from compact9.cli import parse_n
from compact9.verify import truncation_study

DEFAULT_U = ("sin(pi*x)*sin(pi*y)", "exp(x+2*y)", "x^8 + y^8")


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--u", action="append", help="solution (repeatable)")
    ap.add_argument("--coefs", action="append", default=None,
                    help="eps,a,b triple (repeatable); default 1,2,1 and 1,1,2")
    ap.add_argument("--N", type=parse_n, default=parse_n("8..64"))
    args = ap.parse_args()
    coefs = [tuple(float(v) for v in c.split(",")) for c in (args.coefs or ["1,2,1", "1,1,2"])]
    for eps, a, b in coefs:
        for u in args.u or DEFAULT_U:
            rep = truncation_study(u, eps, a, b, args.N)
            Ns = [r.N for r in rep.rows]
            slope = -np.polyfit(np.log(Ns), np.log([r.norm for r in rep.rows]), 1)[0]
            print(rep.table())
            print(f"# least-squares order {slope:.2f}\n")


if __name__ == "__main__":
    main()
