"""Communication graphs, shortest paths, and sink-agent selection.

Graphs are undirected, simple, and must be connected to host a protocol run.
Hybrid runs partition the fleet into components, each with its own subgraph
and a designated sink agent that collects the component's records; the sink
is the vertex minimizing the worst-case hop distance to its peers.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import networkx as nx
import numpy as np

STAR = "star"
RING = "ring"
COMPLETE = "complete"
D_REGULAR = "d_regular"
RANDOM = "random"
GRAPH_KINDS = (STAR, RING, COMPLETE, D_REGULAR, RANDOM)

_MAX_RANDOM_RETRIES = 100


@dataclass(frozen=True)
class Graph:
    """Connected undirected graph over vertices 0..num_vertices-1."""

    num_vertices: int
    edges: tuple[tuple[int, int], ...]  # each (i, j) with i < j, deduplicated

    def __post_init__(self):
        seen = set()
        for i, j in self.edges:
            if i == j:
                raise ValueError("self-loops are not allowed")
            if not (0 <= i < self.num_vertices and 0 <= j < self.num_vertices):
                raise ValueError(f"edge ({i}, {j}) out of range")
            if i > j:
                raise ValueError("edges must be stored as (low, high) pairs")
            if (i, j) in seen:
                raise ValueError(f"duplicate edge ({i}, {j})")
            seen.add((i, j))
        neighbors = [[] for _ in range(self.num_vertices)]
        for i, j in self.edges:
            neighbors[i].append(j)
            neighbors[j].append(i)
        neighbors = tuple(tuple(sorted(ns)) for ns in neighbors)
        object.__setattr__(self, "_neighbors", neighbors)
        if not _connected(self.num_vertices, neighbors):
            raise ValueError("graph must be connected")

    def neighbors(self, vertex: int) -> tuple[int, ...]:
        return self._neighbors[vertex]

    @property
    def num_edges(self) -> int:
        return len(self.edges)


def _connected(n: int, neighbors) -> bool:
    if n == 1:
        return True
    seen = {0}
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for w in neighbors[v]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return len(seen) == n


def graph_from_edges(num_vertices: int, edges) -> Graph:
    """Normalize an edge iterable into a Graph (sorted, deduplicated)."""
    norm = sorted({(min(i, j), max(i, j)) for i, j in edges})
    return Graph(num_vertices=num_vertices, edges=tuple(norm))


def build_topology(
    kind: str,
    num_vertices: int,
    rng: np.random.Generator,
    degree: int | None = None,
    edge_prob: float | None = None,
) -> Graph:
    """Build one of the supported graph families.

    The star designates vertex 0 as hub. Random graphs draw every edge
    independently and are redrawn until connected, with a bounded number of
    retries. d-regular graphs require degree * num_vertices even.
    """
    n = num_vertices
    if n < 1:
        raise ValueError("num_vertices must be >= 1")
    if kind == STAR:
        return graph_from_edges(n, ((0, i) for i in range(1, n)))
    if kind == RING:
        if n < 3:
            raise ValueError("ring requires at least 3 vertices")
        return graph_from_edges(n, ((i, (i + 1) % n) for i in range(n)))
    if kind == COMPLETE:
        return graph_from_edges(n, ((i, j) for i in range(n) for j in range(i + 1, n)))
    if kind == D_REGULAR:
        if degree is None:
            raise ValueError("d_regular requires a degree")
        if degree < 1 or degree >= n or (degree * n) % 2 != 0:
            raise ValueError(f"no {degree}-regular graph on {n} vertices exists")
        for _ in range(_MAX_RANDOM_RETRIES):
            seed = int(rng.integers(2**63))
            g = nx.random_regular_graph(degree, n, seed=seed)
            if nx.is_connected(g):
                return graph_from_edges(n, g.edges())
        raise ValueError("exhausted retries drawing a connected d-regular graph")
    if kind == RANDOM:
        if edge_prob is None or not 0.0 < edge_prob <= 1.0:
            raise ValueError("random graphs require edge_prob in (0, 1]")
        for _ in range(_MAX_RANDOM_RETRIES):
            upper = rng.random((n, n))
            edges = [(i, j) for i in range(n) for j in range(i + 1, n) if upper[i, j] < edge_prob]
            try:
                return graph_from_edges(n, edges)
            except ValueError:
                continue
        raise ValueError("exhausted retries drawing a connected random graph")
    raise ValueError(f"unknown graph kind {kind!r}")


def shortest_paths(graph: Graph) -> np.ndarray:
    """All-pairs hop distances via breadth-first search from every vertex."""
    n = graph.num_vertices
    dist = np.full((n, n), -1, dtype=int)
    for src in range(n):
        dist[src, src] = 0
        queue = deque([src])
        while queue:
            v = queue.popleft()
            for w in graph.neighbors(v):
                if dist[src, w] < 0:
                    dist[src, w] = dist[src, v] + 1
                    queue.append(w)
    return dist


def diameter(graph: Graph) -> int:
    return int(shortest_paths(graph).max())


def find_sink_agents(subgraphs: list[Graph]) -> tuple[list[int], list[int], int]:
    """Pick one sink per component and the per-round synchronization delay.

    Candidates are ranked by their worst-case hop distance minus one; the
    round delay a chosen sink imposes is the worst-case distance itself (a
    record forwarded over h hops occupies h time slots). Singleton components
    have delay 0. Ties go to the lowest vertex index.
    """
    sinks: list[int] = []
    delays: list[int] = []
    for graph in subgraphs:
        dist = shortest_paths(graph)
        eccentricity = dist.max(axis=1)
        ranking = eccentricity - 1
        sink = int(np.argmin(ranking))
        sinks.append(sink)
        delays.append(int(dist[:, sink].max()))
    global_delay = max(delays) if delays else 0
    return sinks, delays, global_delay


@dataclass(frozen=True)
class ComponentLayout:
    """Partition of the fleet into components with precomputed sinks.

    Component q owns the global agent ids in ``components[q]``; member j of
    that tuple is vertex j of ``subgraphs[q]``. ``sink_agents`` are global
    ids.
    """

    components: tuple[tuple[int, ...], ...]
    subgraphs: tuple[Graph, ...]
    sink_agents: tuple[int, ...]
    local_delays: tuple[int, ...]
    global_delay: int

    def __post_init__(self):
        if len(self.components) != len(self.subgraphs):
            raise ValueError("components and subgraphs must align")
        flat = [a for comp in self.components for a in comp]
        if sorted(flat) != list(range(len(flat))):
            raise ValueError("components must partition the agent ids 0..M-1")
        for comp, sub, sink in zip(self.components, self.subgraphs, self.sink_agents):
            if len(comp) != sub.num_vertices:
                raise ValueError("component size does not match its subgraph")
            if sink not in comp:
                raise ValueError("sink agent must belong to its component")
        if self.global_delay != max(self.local_delays):
            raise ValueError("global_delay must be the max of local delays")

    @property
    def num_agents(self) -> int:
        return sum(len(c) for c in self.components)

    @property
    def num_components(self) -> int:
        return len(self.components)


def build_component_layout(subgraphs: list[Graph]) -> ComponentLayout:
    """Assign consecutive agent-id blocks to components and pick sinks."""
    components = []
    offset = 0
    for sub in subgraphs:
        components.append(tuple(range(offset, offset + sub.num_vertices)))
        offset += sub.num_vertices
    local_sinks, local_delays, global_delay = find_sink_agents(subgraphs)
    sink_agents = tuple(comp[s] for comp, s in zip(components, local_sinks))
    return ComponentLayout(
        components=tuple(components),
        subgraphs=tuple(subgraphs),
        sink_agents=sink_agents,
        local_delays=tuple(local_delays),
        global_delay=global_delay,
    )


def singleton_layout(num_agents: int) -> ComponentLayout:
    """One agent per component; the hybrid structure then has no local hops."""
    return build_component_layout([Graph(1, ()) for _ in range(num_agents)])


def relay_paths(graph: Graph, sink: int) -> dict[int, tuple[int, ...]]:
    """Shortest path from every vertex to the sink, lowest-index next hop.

    Returned paths start at the vertex and end at the sink; the sink maps to
    a length-1 path.
    """
    dist = shortest_paths(graph)
    paths: dict[int, tuple[int, ...]] = {}
    for v in range(graph.num_vertices):
        path = [v]
        cur = v
        while cur != sink:
            cur = min(w for w in graph.neighbors(cur) if dist[w, sink] == dist[cur, sink] - 1)
            path.append(cur)
        paths[v] = tuple(path)
    return paths


def edge_list_text(graph: Graph) -> str:
    """Debug export: one 'i j' pair per line."""
    return "\n".join(f"{i} {j}" for i, j in graph.edges) + ("\n" if graph.edges else "")
