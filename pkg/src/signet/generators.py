"""Random and canonical signed graphs used by tests, scripts and the acceptance suite."""

from __future__ import annotations

import numpy as np

from .graph import SignedGraph, build_graph


def triangle_t1() -> SignedGraph:
    return build_graph(3, False, [(1, 2, 1), (2, 3, 1), (1, 3, -1)])


def triangle_t2() -> SignedGraph:
    return build_graph(3, False, [(1, 2, 1), (1, 3, -1), (2, 3, -1)])


def triangle_t3() -> SignedGraph:
    return build_graph(3, False, [(1, 2, -1), (1, 3, -1), (2, 3, -1)])


def square_with_diagonals() -> SignedGraph:
    """Positive 4-cycle 1-2-3-4-1 plus negative diagonals; a complete graph on 4 nodes."""
    return build_graph(4, False, [(1, 2, 1), (2, 3, 1), (3, 4, 1), (1, 4, 1), (1, 3, -1), (2, 4, -1)])


def directed_d3() -> SignedGraph:
    return build_graph(3, True, [(1, 2, 1), (2, 3, -1), (3, 1, -1)])


def complete_from_groups(groups, n: int | None = None) -> SignedGraph:
    """Complete graph, positive inside each group and negative across groups."""
    label = {}
    for k, grp in enumerate(groups):
        for i in grp:
            label[i] = k
    n = n or len(label)
    edges = [(i, j, 1 if label[i] == label[j] else -1) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
    return build_graph(n, False, edges)


def random_signed_graph(n: int, rng: np.random.Generator, p_extra: float = 0.3,
                        balanced: bool | None = None, p_negative: float = 0.4) -> SignedGraph:
    """Connected undirected signed graph: a random spanning tree plus extra edges.

    ``balanced=True`` draws signs from a random two-group split; ``False`` or
    ``None`` draws each sign independently.
    """
    order = rng.permutation(n) + 1
    pairs = set()
    for k in range(1, n):
        a, b = int(order[k]), int(order[rng.integers(k)])
        pairs.add((min(a, b), max(a, b)))
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            if rng.random() < p_extra:
                pairs.add((i, j))
    side = rng.integers(2, size=n + 1)
    edges = []
    for i, j in sorted(pairs):
        if balanced:
            s = 1 if side[i] == side[j] else -1
        else:
            s = -1 if rng.random() < p_negative else 1
        edges.append((i, j, s))
    return build_graph(n, False, edges)


def random_strong_digraph(n: int, rng: np.random.Generator, p_extra: float = 0.25,
                          positive_cycle: bool = False, balanced: bool = False,
                          p_negative: float = 0.4) -> SignedGraph:
    """Strongly connected signed digraph: a random Hamiltonian cycle plus extra arcs.

    ``positive_cycle`` makes the cycle positive so G+ is strongly connected;
    ``balanced`` takes every sign from a random two-group split.
    """
    order = [int(v) + 1 for v in rng.permutation(n)]
    arcs = {(order[k], order[(k + 1) % n]) for k in range(n)}
    cycle = set(arcs)
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i != j and rng.random() < p_extra:
                arcs.add((i, j))
    side = rng.integers(2, size=n + 1)
    if balanced and len(set(side[1:])) == 1:
        side[order[0]] = 1 - side[order[0]]
    edges = []
    for i, j in sorted(arcs):
        if balanced:
            s = 1 if side[i] == side[j] else -1
        elif positive_cycle and (i, j) in cycle:
            s = 1
        else:
            s = -1 if rng.random() < p_negative else 1
        edges.append((i, j, s))
    return build_graph(n, True, edges)
