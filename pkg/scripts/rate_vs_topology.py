"""How adding one edge changes the convergence rate on small random graphs.

Usage: python scripts/rate_vs_topology.py [--trials 500] [--seed 1]

For strongly balanced graphs under the opposing rule, adds a missing edge whose
sign keeps the graph balanced and records the change in rho(W) - the rate of
bipartite consensus. For the repelling rule it adds a negative edge instead and
records the change in the second spectral radius of M on a separate
graph whose positive part is connected. Prints the fraction of
trials where the rate got faster, slower or stayed equal.
"""

import argparse
from collections import Counter

import numpy as np

from signet import generators as gen
from signet.graph import Verdict, build_graph, check_structural_balance
from signet.laplacian import DynamicsConfig, update_matrix
from signet.spectral import convergence_rate


def _second_radius(g, cfg):
    n = g.n
    M = update_matrix(g, cfg) - np.full((n, n), 1.0 / n)
    return np.abs(np.linalg.eigvalsh(M)).max()


def _missing(g):
    present = {(e.u, e.v) for e in g.edges}
    return [(i, j) for i in range(1, g.n + 1) for j in range(i + 1, g.n + 1) if (i, j) not in present]


def _edges(g):
    return [(e.u, e.v, e.sign) for e in g.edges]


def _bucket(delta, tol=1e-12):
    return "slower" if delta > tol else "faster" if delta < -tol else "equal"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=500)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    opp, rep = Counter(), Counter()
    for _ in range(args.trials):
        n = int(rng.integers(3, 8))
        g = gen.random_signed_graph(n, rng, p_extra=0.3, balanced=True)
        bal = check_structural_balance(g)
        missing = _missing(g)
        if bal.verdict is Verdict.STRONG and missing:
            i, j = missing[int(rng.integers(len(missing)))]
            cfg = DynamicsConfig("opposing", 0.05, 0.05)
            sign = bal.gauge[i - 1] * bal.gauge[j - 1]
            bigger = build_graph(n, False, _edges(g) + [(i, j, sign)])
            opp[_bucket(convergence_rate(bigger, cfg) - convergence_rate(g, cfg))] += 1
        # a two-camp balanced graph never has G+ connected, so draw a separate graph here
        h = gen.random_signed_graph(n, rng, p_extra=0.3, p_negative=0.3)
        missing = _missing(h)
        if h.diagnostics.positive_connected and missing:
            i, j = missing[int(rng.integers(len(missing)))]
            cfg = DynamicsConfig("repelling", 0.05, 0.05)
            neg = build_graph(n, False, _edges(h) + [(i, j, -1)])
            rep[_bucket(_second_radius(neg, cfg) - _second_radius(h, cfg))] += 1
    for name, c in (("opposing, balance-preserving edge", opp), ("repelling, extra negative edge", rep)):
        total = sum(c.values()) or 1
        parts = ", ".join(f"{k}={c[k] / total:.3f}" for k in ("faster", "equal", "slower"))
        print(f"{name}: trials={sum(c.values())} {parts}")


if __name__ == "__main__":
    main()
