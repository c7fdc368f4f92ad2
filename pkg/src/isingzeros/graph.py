"""Simple undirected graphs, boundary conditions and graph file loaders."""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence


class GraphError(ValueError):
    """Invalid graph construction or malformed graph file."""


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on vertices ``0..n-1``.

    Build instances with :func:`build_graph`; the constructor does not
    validate.
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    adjacency: tuple[tuple[int, ...], ...] = field(repr=False)

    @property
    def vertex_count(self) -> int:
        return self.n

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    @property
    def max_degree(self) -> int:
        return max((len(a) for a in self.adjacency), default=0)

    def is_tree(self) -> bool:
        return self.n > 0 and len(self.edges) == self.n - 1 and len(connected_components(self)) == 1

    def leaves(self) -> list[int]:
        return [v for v in range(self.n) if len(self.adjacency[v]) == 1]

    def to_json(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in self.edges]}


def build_graph(vertex_count: int, edges: Iterable[Sequence[int]]) -> Graph:
    """Validate an edge list and build a :class:`Graph`.

    Raises :class:`GraphError` naming the offending pair for self-loops,
    duplicate edges and out-of-range endpoints.
    """
    if vertex_count < 0:
        raise GraphError(f"vertex_count must be nonnegative, got {vertex_count}")
    seen: set[tuple[int, int]] = set()
    normalized = []
    adj: list[list[int]] = [[] for _ in range(vertex_count)]
    for pair in edges:
        if len(pair) != 2:
            raise GraphError(f"edge {tuple(pair)!r} is not a pair")
        u, v = int(pair[0]), int(pair[1])
        if not (0 <= u < vertex_count and 0 <= v < vertex_count):
            raise GraphError(f"edge ({u}, {v}) has an endpoint outside 0..{vertex_count - 1}")
        if u == v:
            raise GraphError(f"edge ({u}, {v}) is a self-loop")
        e = (min(u, v), max(u, v))
        if e in seen:
            raise GraphError(f"edge ({u}, {v}) is a duplicate")
        seen.add(e)
        normalized.append(e)
        adj[u].append(v)
        adj[v].append(u)
    return Graph(vertex_count, tuple(normalized), tuple(tuple(sorted(a)) for a in adj))


class RootedTree(NamedTuple):
    graph: Graph
    root: int


def cayley_tree(k: int, d: int) -> RootedTree:
    """The Cayley tree ``T_{k,d}``: root of degree ``d``, every other
    internal vertex of degree ``d + 1``. Vertices are numbered in BFS order
    so the root is 0."""
    if k < 0:
        raise GraphError(f"level k must be >= 0, got {k}")
    if d < 2:
        raise GraphError(f"branching d must be >= 2, got {d}")
    edges = []
    frontier = [0]
    n = 1
    for _ in range(k):
        nxt = []
        for parent in frontier:
            for _ in range(d):
                edges.append((parent, n))
                nxt.append(n)
                n += 1
        frontier = nxt
    return RootedTree(build_graph(n, edges), 0)


def cayley_size(k: int, d: int) -> int:
    return 1 if k == 0 else 1 + d * cayley_size(k - 1, d)


class Component(NamedTuple):
    graph: Graph
    vertices: tuple[int, ...]  # component vertex i is original vertex vertices[i]


def connected_components(G: Graph) -> list[Component]:
    """Components ordered by smallest vertex id, relabelled ``0..m-1``
    in increasing original-id order."""
    label = [-1] * G.n
    comps = []
    for s in range(G.n):
        if label[s] >= 0:
            continue
        label[s] = len(comps)
        stack, members = [s], []
        while stack:
            u = stack.pop()
            members.append(u)
            for w in G.adjacency[u]:
                if label[w] < 0:
                    label[w] = label[s]
                    stack.append(w)
        comps.append(sorted(members))
    out = []
    for members in comps:
        local = {u: i for i, u in enumerate(members)}
        edges = [(local[u], local[v]) for u, v in G.edges if u in local]
        out.append(Component(build_graph(len(members), edges), tuple(members)))
    return out


def disjoint_union(G1: Graph, G2: Graph) -> Graph:
    shift = G1.n
    return build_graph(G1.n + G2.n, list(G1.edges) + [(u + shift, v + shift) for u, v in G2.edges])


@dataclass(frozen=True)
class EdgeOrdering:
    """Per-vertex ranks of incident edges (edges as sorted pairs)."""

    ranks: tuple[Mapping[tuple[int, int], int], ...]

    def rank(self, vertex: int, u: int, v: int) -> int:
        return self.ranks[vertex][(min(u, v), max(u, v))]


def canonical_edge_ordering(G: Graph) -> EdgeOrdering:
    """Rank the edges at each vertex lexicographically by (min, max) endpoint."""
    ranks = []
    for v in range(G.n):
        incident = sorted((min(v, w), max(v, w)) for w in G.adjacency[v])
        ranks.append({e: i for i, e in enumerate(incident)})
    return EdgeOrdering(tuple(ranks))


class BoundaryCondition:
    """Partial assignment of spins in {0, 1} to vertices.

    Follows the multiset convention: fixing an already-fixed vertex to the
    other value makes the condition infeasible (no compatible subset).
    """

    __slots__ = ("_assignments", "feasible")

    def __init__(self, assignments: Mapping[int, int] | None = None, feasible: bool = True):
        a = dict(assignments or {})
        for v, s in a.items():
            if s not in (0, 1):
                raise ValueError(f"spin at vertex {v} must be 0 or 1, got {s!r}")
        self._assignments = a
        self.feasible = feasible

    @property
    def assignments(self) -> dict[int, int]:
        return dict(self._assignments)

    def fix(self, v: int, value: int) -> "BoundaryCondition":
        if value not in (0, 1):
            raise ValueError(f"spin must be 0 or 1, got {value!r}")
        a = dict(self._assignments)
        feasible = self.feasible
        if v in a and a[v] != value:
            feasible = False
        a[v] = value
        return BoundaryCondition(a, feasible)

    def get(self, v: int, default=None):
        return self._assignments.get(v, default)

    def validate(self, G: Graph) -> None:
        for v in self._assignments:
            if not 0 <= v < G.n:
                raise GraphError(f"boundary condition fixes vertex {v} outside 0..{G.n - 1}")

    def __contains__(self, v) -> bool:
        return v in self._assignments

    def __iter__(self):
        return iter(self._assignments)

    def __len__(self) -> int:
        return len(self._assignments)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BoundaryCondition):
            return NotImplemented
        return self._assignments == other._assignments and self.feasible == other.feasible

    def __repr__(self) -> str:
        tag = "" if self.feasible else ", infeasible"
        return f"BoundaryCondition({self._assignments}{tag})"


EMPTY = BoundaryCondition()


# -- files -------------------------------------------------------------------

def parse_graph_json(text: str) -> Graph:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphError(f"line {exc.lineno}: invalid JSON: {exc.msg}") from None
    if not isinstance(obj, dict) or "n" not in obj or "edges" not in obj:
        raise GraphError('line 1: expected an object with keys "n" and "edges"')
    n = obj["n"]
    if not isinstance(n, int) or isinstance(n, bool):
        raise GraphError(f'line 1: "n" must be an integer, got {n!r}')
    edges = obj["edges"]
    if not isinstance(edges, list):
        raise GraphError('line 1: "edges" must be a list')
    lines = text.splitlines()
    for i, e in enumerate(edges):
        if not (isinstance(e, list) and len(e) == 2 and all(isinstance(x, int) and not isinstance(x, bool) for x in e)):
            raise GraphError(f"line {_locate(lines, i)}: edge #{i} must be a pair of integers, got {e!r}")
    try:
        return build_graph(n, edges)
    except GraphError as exc:
        raise GraphError(f"line {_locate(lines, _bad_edge_index(n, edges))}: {exc}") from None


def _bad_edge_index(n, edges) -> int:
    seen = set()
    for i, (u, v) in enumerate(edges):
        e = (min(u, v), max(u, v))
        if u == v or not (0 <= u < n and 0 <= v < n) or e in seen:
            return i
        seen.add(e)
    return 0


_PAIR = re.compile(r"\[\s*[^\[\]]*?\]")


def _locate(lines: list[str], edge_index: int) -> int:
    """Line number of the ``edge_index``-th innermost ``[...]`` literal."""
    count = -1
    for lineno, line in enumerate(lines, 1):
        for _ in _PAIR.finditer(line):
            count += 1
            if count == edge_index:
                return lineno
    return 1


def parse_edge_list(text: str) -> Graph:
    """Plain text: first data line holds ``n``, then one ``u v`` per line;
    ``#`` starts a comment."""
    n = None
    edges = []
    seen: dict[tuple[int, int], int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if n is None:
            if len(parts) != 1 or not _is_int(parts[0]) or int(parts[0]) < 0:
                raise GraphError(f"line {lineno}: expected vertex count, got {raw.strip()!r}")
            n = int(parts[0])
            continue
        if len(parts) != 2 or not all(_is_int(p) for p in parts):
            raise GraphError(f"line {lineno}: expected 'u v', got {raw.strip()!r}")
        u, v = int(parts[0]), int(parts[1])
        if not (0 <= u < n and 0 <= v < n):
            raise GraphError(f"line {lineno}: edge ({u}, {v}) has an endpoint outside 0..{n - 1}")
        if u == v:
            raise GraphError(f"line {lineno}: edge ({u}, {v}) is a self-loop")
        e = (min(u, v), max(u, v))
        if e in seen:
            raise GraphError(f"line {lineno}: edge ({u}, {v}) duplicates line {seen[e]}")
        seen[e] = lineno
        edges.append((u, v))
    if n is None:
        raise GraphError("line 1: missing vertex count")
    return build_graph(n, edges)


def _is_int(s: str) -> bool:
    try:
        int(s)
    except ValueError:
        return False
    return True


def load_graph(path) -> Graph:
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json" or text.lstrip().startswith("{"):
        return parse_graph_json(text)
    return parse_edge_list(text)


# -- generators --------------------------------------------------------------

def complete_graph(n: int) -> Graph:
    return build_graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def path_graph(n: int) -> Graph:
    return build_graph(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n: int) -> Graph:
    return build_graph(n, [(i, (i + 1) % n) for i in range(n)])


def star_graph(leaves: int) -> Graph:
    return build_graph(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def petersen_graph() -> Graph:
    outer = [(i, (i + 1) % 5) for i in range(5)]
    spokes = [(i, i + 5) for i in range(5)]
    inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
    return build_graph(10, outer + spokes + inner)


def random_bounded_degree_graph(n: int, max_degree: int, rng: random.Random,
                                edge_prob: float = 0.5, connected: bool = False) -> Graph:
    """Random graph with every degree at most ``max_degree``.

    With ``connected=True`` a random spanning tree of degree at most
    ``max_degree`` is laid down first (requires ``max_degree >= 2`` when
    ``n > 2``)."""
    deg = [0] * n
    edges: set[tuple[int, int]] = set()

    def add(u, v):
        edges.add((min(u, v), max(u, v)))
        deg[u] += 1
        deg[v] += 1

    if connected and n > 1:
        order = list(range(n))
        rng.shuffle(order)
        for i in range(1, n):
            choices = [u for u in order[:i] if deg[u] < max_degree]
            add(order[i], rng.choice(choices))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    rng.shuffle(pairs)
    for u, v in pairs:
        if (u, v) not in edges and deg[u] < max_degree and deg[v] < max_degree and rng.random() < edge_prob:
            add(u, v)
    return build_graph(n, sorted(edges))


def random_tree(n: int, rng: random.Random, max_degree: int | None = None) -> Graph:
    return random_bounded_degree_graph(n, max_degree or n, rng, edge_prob=0.0, connected=True)
