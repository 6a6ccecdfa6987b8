"""Sweep alpha and print the deterministic and gossip critical couplings.

Usage: python scripts/critical_beta_sweep.py [--graph FILE] [--points 19]

Without --graph the unbalanced triangle (two positive edges, one negative) is used.
Output is CSV: alpha,beta_det,beta_gossip,beta_det_closed_form (the last column
only for the default triangle, where beta* = alpha/2 whenever alpha <= 1/2).
"""

import argparse

import numpy as np

from signet import generators as gen
from signet.errors import SignetError
from signet.graph import read_graph
from signet.spectral import critical_beta_deterministic, critical_beta_gossip


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--graph")
    ap.add_argument("--points", type=int, default=19)
    args = ap.parse_args()
    g = read_graph(args.graph) if args.graph else gen.triangle_t1()
    print("alpha,beta_det,beta_gossip" + ("" if args.graph else ",beta_det_closed_form"))
    for a in np.linspace(0.05, 0.95, args.points):
        try:
            det = critical_beta_deterministic(g, a)
        except SignetError:
            det = float("nan")  # alpha outside the deterministic range for this graph
        row = [a, det, critical_beta_gossip(g, a)]
        if not args.graph:
            row.append(a / 2 if a <= 0.5 else float("nan"))
        print(",".join("%.9g" % v for v in row))


if __name__ == "__main__":
    main()
