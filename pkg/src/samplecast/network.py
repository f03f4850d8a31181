"""Communication graphs on which agents exchange messages.

Vertices are dense integers ``0..n-1``. Adjacency lists are sorted,
symmetric and free of self-loops; graphs are immutable once built and can
be shared freely across concurrent replicas.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

__all__ = [
    "NetworkGraph",
    "build_topology",
    "is_connected",
    "connected_components",
    "TOPOLOGY_KINDS",
]

TOPOLOGY_KINDS = ("edge", "path", "cycle", "clique", "custom")


@dataclass(frozen=True)
class NetworkGraph:
    """Undirected graph; ``adjacency[i]`` is the sorted tuple of neighbors of i."""

    n: int
    adjacency: tuple[tuple[int, ...], ...]

    def degree(self, i: int) -> int:
        return len(self.adjacency[i])

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(self.n) for j in self.adjacency[i] if i < j]


def _from_edge_list(n: int, edges) -> NetworkGraph:
    seen = set()
    neighbors: list[list[int]] = [[] for _ in range(n)]
    for pair in edges:
        i, j = int(pair[0]), int(pair[1])
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"edge ({i}, {j}) references a vertex outside 0..{n - 1}")
        if i == j:
            raise ValueError(f"self-loop at vertex {i}")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise ValueError(f"duplicate edge {key}")
        seen.add(key)
        neighbors[i].append(j)
        neighbors[j].append(i)
    return NetworkGraph(n=n, adjacency=tuple(tuple(sorted(adj)) for adj in neighbors))


def build_topology(kind: str, n: int, edges=None) -> NetworkGraph:
    """Build a standard topology, or a custom one from a list of (i, j) pairs.

    ``edge`` requires n=2; ``cycle`` links i to i-1 and i+1 mod n; ``clique``
    links every pair. Disconnected graphs are accepted (callers that rely on
    network-wide agreement should check :func:`is_connected`).
    """
    if kind not in TOPOLOGY_KINDS:
        raise ValueError(f"unknown topology kind {kind!r}; expected one of {TOPOLOGY_KINDS}")
    if n < 1:
        raise ValueError(f"agent count must be >= 1, got {n}")
    if kind != "custom" and edges is not None:
        raise ValueError(f"edge list is only valid for kind='custom', not {kind!r}")
    if kind == "edge":
        if n != 2:
            raise ValueError(f"edge topology requires n=2, got n={n}")
        return _from_edge_list(2, [(0, 1)])
    if kind == "path":
        return _from_edge_list(n, [(i, i + 1) for i in range(n - 1)])
    if kind == "cycle":
        if n == 1:
            raise ValueError("cycle topology requires n >= 2 (cycle(1) is a self-loop)")
        return _from_edge_list(n, {(min(i, (i + 1) % n), max(i, (i + 1) % n)) for i in range(n)})
    if kind == "clique":
        return _from_edge_list(n, [(i, j) for i in range(n) for j in range(i + 1, n)])
    if edges is None:
        raise ValueError("custom topology requires an explicit edge list")
    return _from_edge_list(n, edges)


def is_connected(g: NetworkGraph) -> bool:
    """True iff every vertex is reachable from vertex 0 (breadth-first search)."""
    if g.n <= 1:
        return True
    seen = [False] * g.n
    seen[0] = True
    queue = deque([0])
    count = 1
    while queue:
        v = queue.popleft()
        for w in g.adjacency[v]:
            if not seen[w]:
                seen[w] = True
                count += 1
                queue.append(w)
    return count == g.n


def connected_components(g: NetworkGraph) -> list[list[int]]:
    """Vertex sets of the connected components, each sorted, ordered by minimum vertex."""
    seen = [False] * g.n
    components = []
    for start in range(g.n):
        if seen[start]:
            continue
        seen[start] = True
        queue = deque([start])
        comp = [start]
        while queue:
            v = queue.popleft()
            for w in g.adjacency[v]:
                if not seen[w]:
                    seen[w] = True
                    comp.append(w)
                    queue.append(w)
        components.append(sorted(comp))
    return components
