"""Undirected communication topology and one-hop message exchange."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Any, Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class Graph:
    n: int
    edges: frozenset

    def __init__(self, n: int, edges: Iterable, allow_disconnected: bool = False):
        if n < 1:
            raise ValueError(f"graph needs at least one vertex, got n={n}")
        norm = set()
        for e in edges:
            i, j = (int(v) for v in e)
            if i == j:
                raise ValueError(f"self-loop on vertex {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"edge ({i}, {j}) out of range for n={n}")
            norm.add((min(i, j), max(i, j)))
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "edges", frozenset(norm))
        nbrs = [[] for _ in range(n)]
        for i, j in norm:
            nbrs[i].append(j)
            nbrs[j].append(i)
        object.__setattr__(self, "_nbrs", tuple(tuple(sorted(a)) for a in nbrs))
        if not allow_disconnected and not is_connected(self):
            raise ValueError("communication graph is not connected")

    def neighbors(self, i: int) -> tuple:
        return self._nbrs[i]

    def degree(self, i: int) -> int:
        return len(self._nbrs[i])

    @property
    def max_degree(self) -> int:
        return max(len(a) for a in self._nbrs)

    def sorted_edges(self) -> list:
        return sorted(self.edges)


def is_connected(g: Graph) -> bool:
    seen = {0}
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for j in g.neighbors(i):
            if j not in seen:
                seen.add(j)
                queue.append(j)
    return len(seen) == g.n


def line_topology(n: int) -> Graph:
    if n < 2:
        raise ValueError(f"line topology needs n >= 2, got {n}")
    return Graph(n, [(i, i + 1) for i in range(n - 1)])


def ring_topology(n: int) -> Graph:
    if n < 3:
        raise ValueError(f"ring topology needs n >= 3, got {n}")
    return Graph(n, [(i, (i + 1) % n) for i in range(n)])


def star_topology(n: int) -> Graph:
    if n < 2:
        raise ValueError(f"star topology needs n >= 2, got {n}")
    return Graph(n, [(0, i) for i in range(1, n)])


def complete_topology(n: int) -> Graph:
    if n < 2:
        raise ValueError(f"complete topology needs n >= 2, got {n}")
    return Graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def build_topology(topology, n: int) -> Graph:
    """Build a graph from a name ('line', 'ring', 'star', 'complete') or an edge list."""
    named = {
        "line": line_topology,
        "ring": ring_topology,
        "star": star_topology,
        "complete": complete_topology,
    }
    if isinstance(topology, str):
        if topology not in named:
            raise ValueError(f"unknown topology {topology!r}; expected one of {sorted(named)}")
        return named[topology](n)
    return Graph(n, topology)


def metropolis_weights(g: Graph) -> np.ndarray:
    """Metropolis-Hastings weights: symmetric and doubly stochastic."""
    if not is_connected(g):
        raise ValueError("metropolis weights require a connected graph")
    W = np.zeros((g.n, g.n))
    for i, j in g.edges:
        w = 1.0 / (1.0 + max(g.degree(i), g.degree(j)))
        W[i, j] = W[j, i] = w
    for i in range(g.n):
        W[i, i] = 1.0 - sum(W[i, j] for j in g.neighbors(i))
    return W


def exchange(g: Graph, outboxes: Sequence[Any]) -> list:
    """Deliver every robot's outbox to its one-hop neighbours in the same round."""
    if len(outboxes) != g.n:
        raise ValueError(f"expected {g.n} outboxes, got {len(outboxes)}")
    return [{j: outboxes[j] for j in g.neighbors(i)} for i in range(g.n)]
