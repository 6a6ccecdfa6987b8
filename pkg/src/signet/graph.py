"""Signed graphs: construction, validation, balance analysis and connectivity.

Nodes are numbered ``1..n``. Undirected edges are stored once with ``u < v``;
directed edges ``(u, v)`` point from ``u`` to ``v``.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

from .errors import (
    DisconnectedGraph,
    DuplicateEdge,
    GaugeRequestedOnUnbalancedGraph,
    GraphError,
    NodeOutOfRange,
    NonpositiveWeight,
    ParseError,
    SelfLoop,
)

HEADER = "signet-graph v1"


@dataclass(frozen=True, order=True)
class Edge:
    u: int
    v: int
    sign: int
    weight: float = 1.0


class Verdict(str, enum.Enum):
    STRONG = "StronglyBalanced"
    WEAK = "WeaklyBalanced"
    UNBALANCED = "Unbalanced"


@dataclass(frozen=True)
class BalanceResult:
    verdict: Verdict
    partition: tuple[frozenset[int], ...] | None = None
    gauge: tuple[int, ...] | None = None
    # standing assumption "G- has at least one edge" violated
    negative_empty: bool = False

    @property
    def balanced(self) -> bool:
        return self.verdict is not Verdict.UNBALANCED

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "partition": None if self.partition is None else [sorted(s) for s in self.partition],
            "gauge": None if self.gauge is None else list(self.gauge),
            "negative_empty": self.negative_empty,
        }


@dataclass(frozen=True)
class GraphDiagnostics:
    connected: bool
    strongly_connected: bool
    positive_connected: bool
    negative_nonempty: bool
    degrees: tuple[tuple[int, int, int], ...]
    positive_vertex_connectivity_ge_2: bool

    def as_dict(self) -> dict:
        return {
            "connected": self.connected,
            "strongly_connected": self.strongly_connected,
            "positive_connected": self.positive_connected,
            "negative_nonempty": self.negative_nonempty,
            "degrees": [list(d) for d in self.degrees],
            "positive_vertex_connectivity_ge_2": self.positive_vertex_connectivity_ge_2,
        }


@dataclass(frozen=True)
class SignedGraph:
    n: int
    directed: bool
    edges: tuple[Edge, ...] = field(default_factory=tuple)

    def __post_init__(self):
        _validate(self.n, self.directed, self.edges)

    # -- neighbourhoods ------------------------------------------------------

    @cached_property
    def in_neighbors(self) -> tuple[tuple[tuple[int, int, float], ...], ...]:
        """Per node id, the ``(j, sign, weight)`` triples it listens to (slot 0 unused).

        Undirected edges are heard by both endpoints; a directed edge ``(j, i)``
        is heard by ``i`` only.
        """
        nb: list[list[tuple[int, int, float]]] = [[] for _ in range(self.n + 1)]
        for e in self.edges:
            nb[e.v].append((e.u, e.sign, e.weight))
            if not self.directed:
                nb[e.u].append((e.v, e.sign, e.weight))
        return tuple(tuple(sorted(x)) for x in nb)

    @cached_property
    def degrees(self) -> tuple[tuple[int, int, int], ...]:
        """``(deg, deg+, deg-)`` for nodes 1..n (in-degrees when directed)."""
        out = []
        for i in range(1, self.n + 1):
            pos = sum(1 for _, s, _ in self.in_neighbors[i] if s > 0)
            neg = sum(1 for _, s, _ in self.in_neighbors[i] if s < 0)
            out.append((pos + neg, pos, neg))
        return tuple(out)

    @property
    def max_degree(self) -> int:
        return max(d[0] for d in self.degrees)

    @property
    def max_positive_degree(self) -> int:
        return max(d[1] for d in self.degrees)

    @property
    def positive_edges(self) -> tuple[Edge, ...]:
        return tuple(e for e in self.edges if e.sign > 0)

    @property
    def negative_edges(self) -> tuple[Edge, ...]:
        return tuple(e for e in self.edges if e.sign < 0)

    def subgraph(self, sign: int) -> "SignedGraph":
        return SignedGraph(self.n, self.directed, tuple(e for e in self.edges if e.sign == sign))

    def is_complete(self) -> bool:
        pairs = {(min(e.u, e.v), max(e.u, e.v)) for e in self.edges}
        return len(pairs) == self.n * (self.n - 1) // 2

    @cached_property
    def diagnostics(self) -> GraphDiagnostics:
        return connectivity_report(self)

    def to_text(self) -> str:
        return emit_graph(self)


def _validate(n, directed, edges):
    if not isinstance(n, int) or n < 2:
        raise GraphError(f"node count must be an integer >= 2, got {n!r}")
    seen = set()
    for e in edges:
        if not (1 <= e.u <= n and 1 <= e.v <= n):
            raise NodeOutOfRange(f"edge ({e.u}, {e.v}) has a node outside 1..{n}")
        if e.u == e.v:
            raise SelfLoop(f"self-loop at node {e.u}")
        if e.sign not in (1, -1):
            raise GraphError(f"edge ({e.u}, {e.v}): sign must be +1 or -1, got {e.sign!r}")
        if not e.weight > 0:
            raise NonpositiveWeight(f"edge ({e.u}, {e.v}): weight {e.weight!r} is not positive")
        if not directed and e.u > e.v:
            raise GraphError("undirected edges must be stored with u < v; use build_graph")
        key = (e.u, e.v)
        if key in seen:
            raise DuplicateEdge(f"duplicate edge ({e.u}, {e.v})")
        seen.add(key)
    if list(edges) != sorted(edges, key=lambda e: (e.u, e.v)):
        raise GraphError("edges must be sorted; use build_graph")


def _parse_sign(s) -> int:
    if s in (1, -1):
        return int(s)
    if isinstance(s, str):
        t = s.strip()
        if t in ("+", "+1", "1"):
            return 1
        if t in ("-", "-1"):
            return -1
    raise GraphError(f"invalid sign {s!r}")


def build_graph(n: int, directed: bool, edge_list: Iterable[Sequence]) -> SignedGraph:
    """Validate an edge list and return a :class:`SignedGraph`.

    Each entry is ``(u, v, sign)`` or ``(u, v, sign, weight)``; ``sign`` may be
    ``+1``/``-1`` or ``"+"``/``"-"``.
    """
    edges = []
    seen = set()
    for entry in edge_list:
        if len(entry) not in (3, 4):
            raise GraphError(f"edge entry must be (u, v, sign[, weight]), got {entry!r}")
        u, v = int(entry[0]), int(entry[1])
        sign = _parse_sign(entry[2])
        w = float(entry[3]) if len(entry) == 4 else 1.0
        if u == v:
            raise SelfLoop(f"self-loop at node {u}")
        if not (1 <= u <= n and 1 <= v <= n):
            raise NodeOutOfRange(f"edge ({u}, {v}) has a node outside 1..{n}")
        if not w > 0:
            raise NonpositiveWeight(f"edge ({u}, {v}): weight {w!r} is not positive")
        if not directed and u > v:
            u, v = v, u
        if (u, v) in seen:
            raise DuplicateEdge(f"duplicate edge ({u}, {v})")
        seen.add((u, v))
        edges.append(Edge(u, v, sign, w))
    edges.sort(key=lambda e: (e.u, e.v))
    g = SignedGraph(int(n), bool(directed), tuple(edges))
    g.diagnostics  # computed once, cached on the instance
    return g


# -- connectivity -------------------------------------------------------------


def _undirected_adjacency(g: SignedGraph, sign: int | None = None) -> list[set[int]]:
    adj: list[set[int]] = [set() for _ in range(g.n + 1)]
    for e in g.edges:
        if sign is None or e.sign == sign:
            adj[e.u].add(e.v)
            adj[e.v].add(e.u)
    return adj


def _directed_adjacency(g: SignedGraph, sign: int | None = None) -> list[list[int]]:
    adj: list[list[int]] = [[] for _ in range(g.n + 1)]
    for e in g.edges:
        if sign is None or e.sign == sign:
            adj[e.u].append(e.v)
    return adj


def _components(n: int, adj, skip: int | None = None) -> list[list[int]]:
    seen = [False] * (n + 1)
    if skip is not None:
        seen[skip] = True
    comps = []
    for s in range(1, n + 1):
        if seen[s]:
            continue
        seen[s] = True
        comp = [s]
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for v in sorted(adj[u]):
                if not seen[v]:
                    seen[v] = True
                    comp.append(v)
                    queue.append(v)
        comps.append(sorted(comp))
    return comps


def strongly_connected_components(n: int, adj: list[list[int]]) -> list[list[int]]:
    """Tarjan's algorithm, iterative. Components come out in reverse topological order."""
    index = [0] * (n + 1)
    low = [0] * (n + 1)
    on_stack = [False] * (n + 1)
    visited = [False] * (n + 1)
    stack: list[int] = []
    comps: list[list[int]] = []
    counter = 1
    for root in range(1, n + 1):
        if visited[root]:
            continue
        work = [(root, 0)]
        while work:
            v, pi = work.pop()
            if pi == 0:
                visited[v] = True
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            recurse = False
            succ = adj[v]
            while pi < len(succ):
                w = succ[pi]
                pi += 1
                if not visited[w]:
                    work.append((v, pi))
                    work.append((w, 0))
                    recurse = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if recurse:
                continue
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comps.append(sorted(comp))
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
    return comps


def articulation_points(n: int, adj: list[set[int]]) -> set[int]:
    """Hopcroft-Tarjan cut vertices of an undirected graph (iterative DFS)."""
    disc = [0] * (n + 1)
    low = [0] * (n + 1)
    parent = [0] * (n + 1)
    points: set[int] = set()
    timer = 1
    for root in range(1, n + 1):
        if disc[root]:
            continue
        disc[root] = low[root] = timer
        timer += 1
        children = 0
        work = [(root, iter(sorted(adj[root])))]
        while work:
            u, it = work[-1]
            advanced = False
            for v in it:
                if not disc[v]:
                    parent[v] = u
                    disc[v] = low[v] = timer
                    timer += 1
                    if u == root:
                        children += 1
                    work.append((v, iter(sorted(adj[v]))))
                    advanced = True
                    break
                if v != parent[u]:
                    low[u] = min(low[u], disc[v])
            if advanced:
                continue
            work.pop()
            if work:
                p = work[-1][0]
                low[p] = min(low[p], low[u])
                if p != root and low[u] >= disc[p]:
                    points.add(p)
        if children > 1:
            points.add(root)
    return points


def is_connected(g: SignedGraph, sign: int | None = None) -> bool:
    return len(_components(g.n, _undirected_adjacency(g, sign))) == 1


def is_strongly_connected(g: SignedGraph, sign: int | None = None) -> bool:
    return len(strongly_connected_components(g.n, _directed_adjacency(g, sign))) == 1


def connectivity_report(g: SignedGraph) -> GraphDiagnostics:
    connected = is_connected(g)
    if g.directed:
        strong = is_strongly_connected(g)
        pos_conn = is_strongly_connected(g, 1)
    else:
        strong = connected
        pos_conn = is_connected(g, 1)
    # kappa(G+) >= 2 is judged on the undirected view of G+
    pos_adj = _undirected_adjacency(g, 1)
    kappa2 = (
        g.n >= 3
        and len(_components(g.n, pos_adj)) == 1
        and not articulation_points(g.n, pos_adj)
    )
    return GraphDiagnostics(
        connected=connected,
        strongly_connected=strong,
        positive_connected=pos_conn,
        negative_nonempty=any(e.sign < 0 for e in g.edges),
        degrees=g.degrees,
        positive_vertex_connectivity_ge_2=kappa2,
    )


# -- balance ------------------------------------------------------------------


def _require_connected(g: SignedGraph):
    if not is_connected(g):
        raise DisconnectedGraph("balance analysis needs a connected underlying graph")


def two_coloring(g: SignedGraph) -> list[int] | None:
    """A +/-1 colouring with colour(u)*colour(v) == sign on every edge, node 1 coloured +1.

    Directed edges are read through their sign only. Returns ``None`` on conflict.
    """
    adj: list[list[tuple[int, int]]] = [[] for _ in range(g.n + 1)]
    for e in g.edges:
        adj[e.u].append((e.v, e.sign))
        adj[e.v].append((e.u, e.sign))
    color = [0] * (g.n + 1)
    for s in range(1, g.n + 1):
        if color[s]:
            continue
        color[s] = 1
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for v, sign in adj[u]:
                want = color[u] * sign
                if color[v] == 0:
                    color[v] = want
                    queue.append(v)
                elif color[v] != want:
                    return None
    return color[1:]


def check_structural_balance(g: SignedGraph) -> BalanceResult:
    _require_connected(g)
    if not any(e.sign < 0 for e in g.edges):
        return BalanceResult(Verdict.UNBALANCED, negative_empty=True)
    color = two_coloring(g)
    if color is None:
        return BalanceResult(Verdict.UNBALANCED)
    first = frozenset(i + 1 for i, c in enumerate(color) if c == color[0])
    second = frozenset(range(1, g.n + 1)) - first
    return BalanceResult(Verdict.STRONG, (first, second), tuple(color))


def check_weak_balance(g: SignedGraph) -> BalanceResult:
    _require_connected(g)
    if not any(e.sign < 0 for e in g.edges):
        return BalanceResult(Verdict.UNBALANCED, negative_empty=True)
    comps = _components(g.n, _undirected_adjacency(g, 1))
    label = {}
    for k, comp in enumerate(comps):
        for i in comp:
            label[i] = k
    for e in g.negative_edges:
        if label[e.u] == label[e.v]:
            return BalanceResult(Verdict.UNBALANCED)
    # _components already yields sets ordered by smallest member
    return BalanceResult(Verdict.WEAK, tuple(frozenset(c) for c in comps))


def gauge_vector(g: SignedGraph) -> tuple[int, ...]:
    """The gauge vector of a strongly balanced graph; raises otherwise."""
    res = check_structural_balance(g)
    if res.verdict is not Verdict.STRONG:
        raise GaugeRequestedOnUnbalancedGraph("graph is not structurally balanced")
    return res.gauge


# -- text format --------------------------------------------------------------


def _fmt_weight(w: float) -> str:
    return "%.17g" % w


def emit_graph(g: SignedGraph) -> str:
    lines = [HEADER, f"n {g.n}", f"directed {int(g.directed)}"]
    for e in g.edges:
        s = "+1" if e.sign > 0 else "-1"
        if e.weight == 1.0:
            lines.append(f"{e.u} {e.v} {s}")
        else:
            lines.append(f"{e.u} {e.v} {s} {_fmt_weight(e.weight)}")
    return "\n".join(lines) + "\n"


def parse_graph(text: str) -> SignedGraph:
    """Parse the ``signet-graph v1`` text format. Errors carry the line number."""
    n = None
    directed = None
    entries: list[tuple[int, tuple]] = []
    header_seen = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if not header_seen:
            if line != HEADER:
                raise ParseError(lineno, line, f"expected header {HEADER!r}")
            header_seen = True
            continue
        tok = line.split()
        if tok[0] == "n":
            if len(tok) != 2 or not tok[1].isdigit():
                raise ParseError(lineno, line, "expected 'n <count>'")
            n = int(tok[1])
            continue
        if tok[0] == "directed":
            if len(tok) != 2 or tok[1] not in ("0", "1"):
                raise ParseError(lineno, tok[-1], "expected 'directed 0|1'")
            directed = tok[1] == "1"
            continue
        if n is None or directed is None:
            raise ParseError(lineno, tok[0], "edge line before 'n' and 'directed'")
        if len(tok) not in (3, 4):
            raise ParseError(lineno, line, "edge line must be 'u v s [w]'")
        for t in tok[:2]:
            if not t.isdigit():
                raise ParseError(lineno, t, "node id must be a positive integer")
        if tok[2] not in ("+1", "-1", "1", "+", "-"):
            raise ParseError(lineno, tok[2], "sign must be +1 or -1")
        w = 1.0
        if len(tok) == 4:
            try:
                w = float(tok[3])
            except ValueError:
                raise ParseError(lineno, tok[3], "weight must be a real number") from None
        entries.append((lineno, (int(tok[0]), int(tok[1]), tok[2], w)))
    if not header_seen:
        raise ParseError(1, "", "empty file")
    if n is None or directed is None:
        raise ParseError(len(text.splitlines()), "", "missing 'n' or 'directed' line")
    # validate one entry at a time so errors point at the offending line
    seen = set()
    for lineno, (u, v, s, w) in entries:
        try:
            build_graph(max(n, 2), directed, [(u, v, s, w)])
        except GraphError as exc:
            raise ParseError(lineno, f"{u} {v} {s}", str(exc)) from None
        key = (u, v) if directed else (min(u, v), max(u, v))
        if key in seen:
            raise ParseError(lineno, f"{u} {v} {s}", "duplicate edge")
        seen.add(key)
    try:
        return build_graph(n, directed, [e for _, e in entries])
    except GraphError as exc:
        raise ParseError(0, str(n), str(exc)) from None


def read_graph(path) -> SignedGraph:
    with open(path, encoding="utf-8") as fh:
        return parse_graph(fh.read())


def write_graph(g: SignedGraph, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(emit_graph(g))
