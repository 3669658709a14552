"""Undirected graphs with exact sparsity certificates and the two-copy bipartite reduction.

Everything here is deterministic: vertices are strings, all canonical
orders are lexicographic, and all numeric quantities are `Fraction`s.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping

from .errors import InputError

Edge = tuple[str, str]

#: Largest vertex count for which maximum subgraph density is found by
#: exhaustive subset enumeration; larger graphs use the max-flow search.
BRUTE_FORCE_VERTEX_LIMIT = 20


def edge_key(u: str, v: str) -> Edge:
    """Canonical (sorted) form of an undirected edge."""
    return (u, v) if u <= v else (v, u)


@dataclass(frozen=True)
class Graph:
    """Immutable simple graph: sorted vertex tuple plus sorted canonical edges."""

    vertices: tuple[str, ...]
    edges: tuple[Edge, ...]

    @staticmethod
    def build(edges: Iterable[tuple[str, str]] = (), vertices: Iterable[str] = ()) -> "Graph":
        """Normalize and validate raw vertex/edge iterables into a Graph.

        Endpoints are added to the vertex set automatically.  Duplicate
        edges collapse; self-loops and whitespace-bearing names are
        rejected.
        """
        vset = set(vertices)
        eset: set[Edge] = set()
        for u, v in edges:
            if u == v:
                raise InputError(f"self-loop at vertex {u!r}")
            eset.add(edge_key(u, v))
            vset.add(u)
            vset.add(v)
        for name in vset:
            if not name or any(ch.isspace() for ch in name):
                raise InputError(f"invalid vertex name {name!r}")
        return Graph(tuple(sorted(vset)), tuple(sorted(eset)))

    @cached_property
    def adjacency(self) -> Mapping[str, tuple[str, ...]]:
        adj: dict[str, list[str]] = {v: [] for v in self.vertices}
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return {v: tuple(sorted(ns)) for v, ns in adj.items()}

    @cached_property
    def edge_set(self) -> frozenset[Edge]:
        return frozenset(self.edges)

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def m(self) -> int:
        return len(self.edges)

    def neighbors(self, v: str) -> tuple[str, ...]:
        return self.adjacency[v]

    def degree(self, v: str) -> int:
        return len(self.adjacency[v])

    def has_edge(self, u: str, v: str) -> bool:
        return edge_key(u, v) in self.edge_set

    def without_vertex(self, v: str) -> "Graph":
        """Graph with `v` and all incident edges removed."""
        return Graph(
            tuple(w for w in self.vertices if w != v),
            tuple(e for e in self.edges if v not in e),
        )

    def without_edges(self, drop: Iterable[Edge]) -> "Graph":
        """Graph with the given edges removed; the vertex set is kept."""
        gone = {edge_key(*e) for e in drop}
        return Graph(self.vertices, tuple(e for e in self.edges if e not in gone))

    def induced_edge_count(self, subset: Iterable[str]) -> int:
        s = set(subset)
        return sum(1 for u, v in self.edges if u in s and v in s)


# ---------------------------------------------------------------------------
# parsing / serialization


def parse_edge_list(text: bytes | str) -> Graph:
    """Parse the whitespace edge-list format: one "u v" pair per line.

    Blank lines and lines starting with "#" are ignored.  Duplicate edge
    lines collapse to a single edge.
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise InputError(f"input is not valid UTF-8: {exc}") from None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise InputError(f"line {lineno}: expected 'u v', got {raw!r}")
        u, v = parts
        if u == v:
            raise InputError(f"line {lineno}: self-loop at vertex {u!r}")
        edges.append((u, v))
    return Graph.build(edges)


def edge_list_text(g: Graph) -> str:
    """Serialize to the edge-list format (isolated vertices are not representable)."""
    return "".join(f"{u} {v}\n" for u, v in g.edges)


def graph_to_json_obj(g: Graph) -> dict:
    return {"vertices": list(g.vertices), "edges": [[u, v] for u, v in g.edges]}


def graph_from_json_obj(obj: object) -> Graph:
    if not isinstance(obj, dict) or "vertices" not in obj or "edges" not in obj:
        raise InputError("graph JSON must be an object with 'vertices' and 'edges'")
    vertices = obj["vertices"]
    edges = obj["edges"]
    if not isinstance(vertices, list) or not all(isinstance(v, str) for v in vertices):
        raise InputError("'vertices' must be a list of strings")
    if not isinstance(edges, list):
        raise InputError("'edges' must be a list of pairs")
    pairs = []
    for item in edges:
        if not (isinstance(item, list) and len(item) == 2 and all(isinstance(x, str) for x in item)):
            raise InputError(f"bad edge entry {item!r}")
        pairs.append((item[0], item[1]))
    return Graph.build(pairs, vertices)


def graph_to_json(g: Graph) -> str:
    return json.dumps(graph_to_json_obj(g), sort_keys=True, indent=2) + "\n"


def graph_from_json(text: str) -> Graph:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc}") from None
    return graph_from_json_obj(obj)


def to_dot(g: Graph, dashed_edges: Iterable[Edge] = (), name: str = "G") -> str:
    """DOT export; edges listed in `dashed_edges` are styled dashed."""
    dashed = {edge_key(*e) for e in dashed_edges}
    lines = [f"graph {name} {{"]
    for v in g.vertices:
        lines.append(f'  "{v}";')
    for u, v in g.edges:
        style = " [style=dashed]" if (u, v) in dashed else ""
        lines.append(f'  "{u}" -- "{v}"{style};')
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# sparsity


@dataclass(frozen=True)
class Sparsity:
    """Exact maximum induced-subgraph density, clamped below at 1.

    `density` is max over nonempty S of |E(G[S])| / |S| (0 for edgeless
    graphs); `omega` is max(1, density).  `witness` attains `density`
    whenever the graph has at least one edge.
    """

    omega: Fraction
    density: Fraction
    witness: tuple[str, ...] | None


def compute_sparsity(g: Graph) -> Sparsity:
    """Exact maximum subgraph density.

    Exhaustive subset scan up to BRUTE_FORCE_VERTEX_LIMIT vertices;
    beyond that, iterated improvement with a max-flow density test.
    """
    if g.m == 0:
        return Sparsity(Fraction(1), Fraction(0), None)
    if g.n <= BRUTE_FORCE_VERTEX_LIMIT:
        density, witness = _densest_subset_brute(g)
    else:
        density, witness = _densest_subset_flow(g)
    return Sparsity(max(Fraction(1), density), density, witness)


def _densest_subset_brute(g: Graph) -> tuple[Fraction, tuple[str, ...]]:
    order = g.vertices
    n = len(order)
    index = {v: i for i, v in enumerate(order)}
    adj_mask = [0] * n
    for u, v in g.edges:
        adj_mask[index[u]] |= 1 << index[v]
        adj_mask[index[v]] |= 1 << index[u]

    edge_count = [0] * (1 << n)
    best_e, best_k, best_mask = 0, 1, 1  # singleton {order[0]}: density 0
    for mask in range(1, 1 << n):
        low = mask & -mask
        i = low.bit_length() - 1
        rest = mask ^ low
        e = edge_count[rest] + (adj_mask[i] & rest).bit_count()
        edge_count[mask] = e
        k = mask.bit_count()
        # strict improvement keeps the lowest qualifying mask: deterministic
        if e * best_k > best_e * k:
            best_e, best_k, best_mask = e, k, mask
    witness = tuple(order[i] for i in range(n) if best_mask >> i & 1)
    return Fraction(best_e, best_k), witness


class _Dinic:
    """Integer max-flow, deterministic for a fixed edge insertion order."""

    def __init__(self, n: int):
        self.n = n
        self.graph: list[list[list[int]]] = [[] for _ in range(n)]  # [to, cap, rev]

    def add_edge(self, u: int, v: int, cap: int) -> None:
        self.graph[u].append([v, cap, len(self.graph[v])])
        self.graph[v].append([u, 0, len(self.graph[u]) - 1])

    def _bfs(self, s: int, t: int) -> bool:
        self.level = [-1] * self.n
        self.level[s] = 0
        q = deque([s])
        while q:
            u = q.popleft()
            for e in self.graph[u]:
                if e[1] > 0 and self.level[e[0]] < 0:
                    self.level[e[0]] = self.level[u] + 1
                    q.append(e[0])
        return self.level[t] >= 0

    def _dfs(self, u: int, t: int, f: int) -> int:
        if u == t:
            return f
        while self.it[u] < len(self.graph[u]):
            e = self.graph[u][self.it[u]]
            v = e[0]
            if e[1] > 0 and self.level[v] == self.level[u] + 1:
                d = self._dfs(v, t, min(f, e[1]))
                if d > 0:
                    e[1] -= d
                    self.graph[v][e[2]][1] += d
                    return d
            self.it[u] += 1
        return 0

    def max_flow(self, s: int, t: int) -> int:
        flow = 0
        while self._bfs(s, t):
            self.it = [0] * self.n
            while True:
                f = self._dfs(s, t, 1 << 62)
                if f == 0:
                    break
                flow += f
        return flow

    def reachable_from(self, s: int) -> set[int]:
        seen = {s}
        q = deque([s])
        while q:
            u = q.popleft()
            for e in self.graph[u]:
                if e[1] > 0 and e[0] not in seen:
                    seen.add(e[0])
                    q.append(e[0])
        return seen


def _density_improvement(g: Graph, guess: Fraction) -> tuple[str, ...] | None:
    """Vertex set with density strictly above `guess`, or None.

    Min-cut construction: capacities scaled by the guess denominator so
    the flow network is integral.  A cut below 2*m*q certifies a subset
    with |E(S)| - guess*|S| > 0.
    """
    p, q = guess.numerator, guess.denominator
    order = g.vertices
    index = {v: i for i, v in enumerate(order)}
    net = _Dinic(g.n + 2)
    s, t = g.n, g.n + 1
    for i, v in enumerate(order):
        net.add_edge(s, i, g.degree(v) * q)
        net.add_edge(i, t, 2 * p)
    for u, v in g.edges:
        net.add_edge(index[u], index[v], q)
        net.add_edge(index[v], index[u], q)
    flow = net.max_flow(s, t)
    if flow >= 2 * g.m * q:
        return None
    side = net.reachable_from(s)
    subset = tuple(order[i] for i in range(g.n) if i in side)
    return subset or None


def _densest_subset_flow(g: Graph) -> tuple[Fraction, tuple[str, ...]]:
    witness = g.vertices
    density = Fraction(g.m, g.n)
    while True:
        better = _density_improvement(g, density)
        if better is None:
            return density, witness
        new_density = Fraction(g.induced_edge_count(better), len(better))
        if new_density <= density:  # cannot happen for a correct cut
            raise AssertionError("density search failed to improve")
        witness, density = better, new_density


# ---------------------------------------------------------------------------
# bipartiteness and the two-copy reduction


def is_bipartite(g: Graph) -> dict[str, int] | None:
    """Two-coloring with colors in {0, 1}, or None if an odd cycle exists.

    Deterministic: BFS from vertices in lexicographic order, the start
    of each component colored 0.
    """
    color: dict[str, int] = {}
    for root in g.vertices:
        if root in color:
            continue
        color[root] = 0
        q = deque([root])
        while q:
            u = q.popleft()
            for w in g.neighbors(u):
                if w not in color:
                    color[w] = 1 - color[u]
                    q.append(w)
                elif color[w] == color[u]:
                    return None
    return color


def _copy_name(v: str, side: int) -> str:
    return f"{v}#{side}"


@dataclass(frozen=True)
class DoubledGraph:
    """Bipartite double cover: each vertex u splits into u#1/u#2, each edge into two."""

    host: Graph
    side_map: Mapping[str, tuple[str, str]]
    edge_map: Mapping[Edge, tuple[Edge, Edge]]


def bipartite_double(g: Graph) -> DoubledGraph:
    side_map = {v: (_copy_name(v, 1), _copy_name(v, 2)) for v in g.vertices}
    edge_map: dict[Edge, tuple[Edge, Edge]] = {}
    host_edges = []
    for u, v in g.edges:
        e1 = edge_key(_copy_name(u, 1), _copy_name(v, 2))
        e2 = edge_key(_copy_name(u, 2), _copy_name(v, 1))
        edge_map[(u, v)] = (e1, e2)
        host_edges.extend([e1, e2])
    host_vertices = [c for pair in side_map.values() for c in pair]
    host = Graph.build(host_edges, host_vertices)
    return DoubledGraph(host, side_map, edge_map)


def pull_back(
    d: DoubledGraph,
    x_host: Mapping[str, Fraction],
    b_host: Iterable[Edge],
) -> tuple[dict[str, Fraction], tuple[Edge, ...]]:
    """Map a host allocation/edge-set pair back to the original graph.

    Each original vertex receives the average of its two copies; an
    original edge is selected iff either of its copies was.
    """
    b_set = {edge_key(*e) for e in b_host}
    unknown = b_set - d.host.edge_set
    if unknown:
        raise InputError(f"edges not in host graph: {sorted(unknown)}")
    x: dict[str, Fraction] = {}
    for v, (c1, c2) in d.side_map.items():
        a, b = Fraction(x_host.get(c1, 0)), Fraction(x_host.get(c2, 0))
        if a < 0 or b < 0:
            raise InputError(f"negative host allocation at copies of {v!r}")
        x[v] = (a + b) / 2
    pulled = tuple(sorted(e for e, (h1, h2) in d.edge_map.items() if h1 in b_set or h2 in b_set))
    return x, pulled
