"""Self-avoiding-walk trees with cycle-closing boundary conditions.

A node of ``T_SAW(G, v)`` is a walk from ``v``. Its children extend it by
one neighbour of the last vertex, other than the vertex just left. A walk
that steps onto a vertex ``x`` already on it closes a cycle and becomes a
leaf fixed to 0 when, among the edges at ``x``, the closing edge ranks
above the edge by which the walk first left ``x``, and to 1 otherwise.
Walks ending at a leaf of G that carries a boundary value inherit it.

Trees are evaluated by a depth-first fold that keeps only the current
walk in memory; :func:`build_saw_tree` materializes them for inspection.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Sequence, TypeVar

from .graph import (EMPTY, BoundaryCondition, EdgeOrdering, Graph, GraphError, build_graph,
                    canonical_edge_ordering, connected_components)
from .partition import CapExceededError, ModelParams, merge_pairs, pair_to_ratio

DEFAULT_MAX_NODES = 10 ** 6

T = TypeVar("T")
# combine(walk, spin, child_results) -> result; spin is None for free nodes
Combine = Callable[[Sequence[int], "int | None", list], T]


def validate_saw_input(G: Graph, v: int, sigma: BoundaryCondition) -> None:
    if not 0 <= v < G.n:
        raise GraphError(f"root {v} outside 0..{G.n - 1}")
    if len(connected_components(G)) != 1:
        raise GraphError("the SAW tree needs a connected graph")
    sigma.validate(G)
    if not sigma.feasible:
        raise GraphError("boundary condition is infeasible")
    for u in sigma:
        if u == v:
            raise GraphError(f"the root {v} may not carry a boundary value")
        if G.degree(u) != 1:
            raise GraphError(f"boundary condition fixes vertex {u}, which is not a leaf of G")


def closing_value(order: EdgeOrdering, walk: Sequence[int], pos: dict | list, x: int) -> int:
    """Boundary value of the leaf reached by stepping from ``walk[-1]`` onto
    ``x``, which already sits at ``walk[pos[x]]``."""
    u = walk[-1]
    start = walk[pos[x] + 1]
    return 0 if order.rank(x, u, x) > order.rank(x, x, start) else 1


def saw_fold(G: Graph, v: int, combine: Combine, sigma: BoundaryCondition = EMPTY,
             order: EdgeOrdering | None = None, max_nodes: int = DEFAULT_MAX_NODES) -> T:
    """Fold ``combine`` bottom-up over ``T_SAW(G, v)`` without storing it."""
    validate_saw_input(G, v, sigma)
    order = order or canonical_edge_ordering(G)
    pos = [-1] * G.n
    walk: list[int] = []
    count = 0

    def bump():
        nonlocal count
        count += 1
        if count > max_nodes:
            raise CapExceededError(f"SAW tree exceeds {max_nodes} nodes")

    def visit(u: int, prev: int):
        bump()
        pos[u] = len(walk)
        walk.append(u)
        kids = []
        for w in G.adjacency[u]:
            if w == prev:
                continue
            if pos[w] >= 0:
                bump()
                val = closing_value(order, walk, pos, w)
                walk.append(w)
                kids.append(combine(walk, val, []))
                walk.pop()
            else:
                kids.append(visit(w, u))
        spin = sigma.get(u) if not kids else None
        out = combine(walk, spin, kids)
        walk.pop()
        pos[u] = -1
        return out

    return visit(v, -1)


def ratio_via_saw(G: Graph, v: int, params: ModelParams, sigma: BoundaryCondition = EMPTY,
                  order: EdgeOrdering | None = None, max_nodes: int = DEFAULT_MAX_NODES) -> complex:
    """Root ratio of G at ``v`` under ``sigma`` computed on the SAW tree."""
    b = float(params.b)

    def combine(walk, spin, kids):
        return merge_pairs(params.field(walk[-1]), spin, kids, b, where=tuple(walk))

    return pair_to_ratio(saw_fold(G, v, combine, sigma, order, max_nodes))


@dataclass(frozen=True)
class SawTree:
    """Materialized SAW tree. Node 0 is the root; ``walks[i]`` is the walk of
    node ``i`` and its last vertex supplies the node's field."""

    tree: Graph
    walks: tuple[tuple[int, ...], ...]
    tau: BoundaryCondition

    @property
    def root(self) -> int:
        return 0

    def field_vertex(self, node: int) -> int:
        return self.walks[node][-1]

    def params_for(self, params: ModelParams) -> ModelParams:
        """Model parameters on the tree: each node takes the field of its
        walk's last vertex."""
        fields = {i: params.field(w[-1]) for i, w in enumerate(self.walks)}
        return ModelParams(params.b, params.xi, params.d, 1.0, fields)

    def to_json(self) -> dict:
        return {
            "walks": [list(w) for w in self.walks],
            "tau": {str(k): self.tau.get(k) for k in sorted(self.tau)},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, sort_keys=True)


def build_saw_tree(G: Graph, v: int, order: EdgeOrdering | None = None, sigma: BoundaryCondition = EMPTY,
                   max_nodes: int = DEFAULT_MAX_NODES) -> SawTree:
    walks: list[tuple[int, ...]] = []
    edges: list[tuple[int, int]] = []
    tau: dict[int, int] = {}

    def combine(walk, spin, kids):
        node = len(walks)
        walks.append(tuple(walk))
        if spin is not None:
            tau[node] = spin
        edges.extend((node, k) for k in kids)
        return node

    root = saw_fold(G, v, combine, sigma, order, max_nodes)
    # nodes were numbered in post-order; renumber in pre-order from the root
    children: dict[int, list[int]] = {}
    for a, c in edges:
        children.setdefault(a, []).append(c)
    order_pre, stack = [], [root]
    while stack:
        u = stack.pop()
        order_pre.append(u)
        stack.extend(reversed(children.get(u, [])))
    new = {old: i for i, old in enumerate(order_pre)}
    tree = build_graph(len(walks), [(new[a], new[c]) for a, c in edges])
    return SawTree(tree, tuple(walks[old] for old in order_pre),
                   BoundaryCondition({new[k]: s for k, s in tau.items()}))
