"""Brute-force reference answers for small graphs.

Deliberately naive: exhaustive bipartition search and explicit simple-cycle
enumeration. Used to cross-check the linear-time balance routines.
"""

from __future__ import annotations

import math

import numpy as np

from .graph import SignedGraph


def strong_balance_bruteforce(g: SignedGraph):
    """The bipartition (set with node 1 first) consistent with every sign, or None.

    Tries all ``2^(n-1)`` splits with node 1 fixed on side 0; both sides must be nonempty.
    """
    n = g.n
    if n > 20:
        raise ValueError("exhaustive search is limited to n <= 20")
    u = np.array([e.u - 1 for e in g.edges])
    v = np.array([e.v - 1 for e in g.edges])
    s = np.array([e.sign for e in g.edges])
    codes = np.arange(2 ** (n - 1), dtype=np.int64)
    # bit k of code gives the side of node k+2; node 1 sits on side 0
    sides = np.zeros((len(codes), n), dtype=np.int8)
    for k in range(1, n):
        sides[:, k] = (codes >> (k - 1)) & 1
    same = sides[:, u] == sides[:, v]
    ok = np.all(np.where(s > 0, same, ~same), axis=1) & (sides.sum(axis=1) > 0)
    hits = np.flatnonzero(ok)
    if hits.size == 0:
        return None
    row = sides[hits[0]]
    first = frozenset(int(i) + 1 for i in np.flatnonzero(row == 0))
    second = frozenset(int(i) + 1 for i in np.flatnonzero(row == 1))
    return first, second


def simple_cycles(g: SignedGraph):
    """Every simple cycle of the undirected view, as a tuple of edge signs.

    Each cycle is reported once: it starts at its smallest node and the
    second node is smaller than the last.
    """
    adj = {i: {} for i in range(1, g.n + 1)}
    for e in g.edges:
        adj[e.u][e.v] = e.sign
        adj[e.v][e.u] = e.sign
    out = []
    for start in range(1, g.n + 1):
        stack = [(start, [start], [])]
        while stack:
            node, path, signs = stack.pop()
            for nxt, sgn in adj[node].items():
                if nxt == start and len(path) >= 3 and path[1] < path[-1]:
                    out.append(tuple(signs + [sgn]))
                elif nxt > start and nxt not in path:
                    stack.append((nxt, path + [nxt], signs + [sgn]))
    return out


def weak_balance_bruteforce(g: SignedGraph) -> bool:
    """G- nonempty and no simple cycle carries exactly one negative edge."""
    if not any(e.sign < 0 for e in g.edges):
        return False
    return all(sum(1 for s in cyc if s < 0) != 1 for cyc in simple_cycles(g))


def strong_balance_by_cycles(g: SignedGraph) -> bool:
    """G- nonempty and every simple cycle carries an even number of negative edges."""
    if not any(e.sign < 0 for e in g.edges):
        return False
    return all(sum(1 for s in cyc if s < 0) % 2 == 0 for cyc in simple_cycles(g))


def articulation_points_bruteforce(adj_pairs, n: int) -> set:
    """Nodes whose removal disconnects the remaining graph (undirected pair list)."""
    out = set()
    for r in range(1, n + 1):
        rest = [i for i in range(1, n + 1) if i != r]
        seen = {rest[0]}
        frontier = [rest[0]]
        while frontier:
            a = frontier.pop()
            for p, q in adj_pairs:
                for x, y in ((p, q), (q, p)):
                    if x == a and y != r and y not in seen:
                        seen.add(y)
                        frontier.append(y)
        if len(seen) != len(rest):
            out.add(r)
    return out


def count_cycles_complete(n: int) -> int:
    """Number of simple cycles in K_n."""
    return sum(math.comb(n, k) * math.factorial(k - 1) // 2 for k in range(3, n + 1))
