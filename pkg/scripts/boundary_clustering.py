"""Outcome histograms for the projected gossip dynamics on small complete graphs.

Usage: python scripts/boundary_clustering.py [--runs 100] [--events 100000] [--seed 0]

Three settings: a two-group balanced K4, a three-group weakly balanced K4
(both at alpha = 0.3), and the 4-cycle with negative diagonals at alpha = 0.7.
All use beta = 10 and A = 1 with x0 uniform in [-1, 1].
"""

import argparse

from signet import generators as gen
from signet.gossip import GossipProcess, UniformBox, monte_carlo
from signet.laplacian import DynamicsConfig

SETTINGS = [
    ("balanced K4 {1,2}|{3,4}", lambda: gen.complete_from_groups([{1, 2}, {3, 4}]), 0.3),
    ("weak K4 {1,2}|{3}|{4}", lambda: gen.complete_from_groups([{1, 2}, {3}, {4}]), 0.3),
    ("C4 + negative diagonals", gen.square_with_diagonals, 0.7),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=100)
    ap.add_argument("--events", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    for name, make, alpha in SETTINGS:
        g = make()
        cfg = DynamicsConfig("repelling", alpha, 10.0, bound_A=1.0)
        s = monte_carlo(GossipProcess(g, seed=args.seed), cfg, UniformBox(-1.0, 1.0, args.seed), args.runs, args.events)
        counts = ", ".join(f"{k}={v}" for k, v in s.verdict_counts.items() if v)
        print(f"{name} (alpha={alpha}): {counts}")
        print(f"  boundary entries low={s.touches_low.tolist()} high={s.touches_high.tolist()}")


if __name__ == "__main__":
    main()
