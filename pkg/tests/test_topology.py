import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fedbandit.topology import (
    ComponentLayout,
    Graph,
    build_component_layout,
    build_topology,
    diameter,
    edge_list_text,
    find_sink_agents,
    graph_from_edges,
    relay_paths,
    shortest_paths,
    singleton_layout,
)


def rng(seed=0):
    return np.random.default_rng(seed)


def test_star_shape():
    g = build_topology("star", 5, rng())
    assert g.num_edges == 4
    assert diameter(g) == 2
    assert g.neighbors(0) == (1, 2, 3, 4)


def test_ring_and_complete_shapes():
    ring = build_topology("ring", 50, rng())
    assert ring.num_edges == 50
    assert diameter(ring) == 25
    complete = build_topology("complete", 50, rng())
    assert complete.num_edges == 50 * 49 // 2 == 1225
    assert diameter(complete) == 1


def test_family_diameters_across_sizes():
    for m in range(3, 65):
        assert diameter(build_topology("star", m, rng())) == 2
        assert diameter(build_topology("complete", m, rng())) == 1
        assert diameter(build_topology("ring", m, rng())) == m // 2


def test_graph_invariants_enforced():
    with pytest.raises(ValueError):
        Graph(3, ((0, 0),))
    with pytest.raises(ValueError):
        Graph(3, ((0, 1),))  # vertex 2 disconnected
    with pytest.raises(ValueError):
        Graph(3, ((1, 0), (1, 2)))  # unsorted pair
    g = graph_from_edges(3, [(1, 0), (0, 1), (1, 2)])  # normalizes and dedups
    assert g.edges == ((0, 1), (1, 2))


def test_d_regular_feasibility_and_degrees():
    with pytest.raises(ValueError):
        build_topology("d_regular", 5, rng(), degree=3)  # odd product
    g = build_topology("d_regular", 10, rng(3), degree=4)
    assert all(len(g.neighbors(v)) == 4 for v in range(10))


def test_random_graph_connected_and_seeded():
    a = build_topology("random", 30, rng(3), edge_prob=0.1)
    b = build_topology("random", 30, rng(3), edge_prob=0.1)
    assert a.edges == b.edges
    with pytest.raises(ValueError):
        build_topology("random", 5, rng(), edge_prob=0.0)


def test_path_graph_distances():
    g = graph_from_edges(3, [(0, 1), (1, 2)])
    dist = shortest_paths(g)
    assert dist[0, 2] == 2 and dist[2, 0] == 2
    assert dist[0, 1] == 1 and dist[0, 0] == 0


def test_complete_distances_all_one():
    g = build_topology("complete", 6, rng())
    dist = shortest_paths(g)
    off = dist[~np.eye(6, dtype=bool)]
    assert np.all(off == 1)


def _brute_force_distance(g: Graph, src: int, dst: int) -> int:
    # exhaustive simple-path enumeration, independent of the BFS implementation
    best = None
    stack = [(src, {src})]
    while stack:
        node, seen = stack.pop()
        if node == dst:
            best = len(seen) - 1 if best is None else min(best, len(seen) - 1)
            continue
        for nxt in g.neighbors(node):
            if nxt not in seen:
                stack.append((nxt, seen | {nxt}))
    return best


def test_ring6_distances_match_path_enumeration():
    g = build_topology("ring", 6, rng())
    dist = shortest_paths(g)
    for i in range(6):
        for j in range(6):
            if i != j:
                assert dist[i, j] == _brute_force_distance(g, i, j)


def test_random_graph_diameter_matches_floyd_warshall():
    g = build_topology("random", 50, rng(3), edge_prob=0.1)
    n = g.num_vertices
    inf = 10**9
    fw = np.full((n, n), inf)
    np.fill_diagonal(fw, 0)
    for i, j in g.edges:
        fw[i, j] = fw[j, i] = 1
    for k in range(n):
        fw = np.minimum(fw, fw[:, k, None] + fw[None, k, :])
    assert diameter(g) == int(fw.max())


def test_path_table_symmetry_and_triangle():
    g = build_topology("random", 25, rng(9), edge_prob=0.15)
    dist = shortest_paths(g)
    assert np.array_equal(dist, dist.T)
    for i, j, k in itertools.product(range(10), repeat=3):
        assert dist[i, j] <= dist[i, k] + dist[k, j]


def test_sink_agents_path_graph():
    g = graph_from_edges(3, [(0, 1), (1, 2)])
    sinks, delays, global_delay = find_sink_agents([g])
    assert sinks == [1] and delays == [1] and global_delay == 1


def test_sink_agents_star_is_hub():
    g = build_topology("star", 5, rng())
    sinks, delays, _ = find_sink_agents([g])
    assert sinks == [0] and delays == [1]


def test_sink_agents_complete_lowest_index():
    g = build_topology("complete", 7, rng())
    sinks, delays, _ = find_sink_agents([g])
    assert sinks == [0] and delays == [1]


def test_sink_agents_brute_force_sample():
    gen = rng(5)
    for _ in range(40):
        m = int(gen.integers(2, 9))
        g = build_topology("random", m, gen, edge_prob=0.5)
        dist = shortest_paths(g)
        candidates = [(int(dist[:, s].max()) - 1, s) for s in range(m)]
        best_rank, best_sink = min(candidates)
        sinks, delays, _ = find_sink_agents([g])
        assert sinks[0] == best_sink
        assert delays[0] == int(dist[:, best_sink].max()) == best_rank + 1


def test_singleton_layout_has_zero_delay():
    layout = singleton_layout(8)
    assert layout.num_components == 8
    assert layout.global_delay == 0
    assert layout.sink_agents == tuple(range(8))


def test_component_layout_global_ids_and_delay():
    layout = build_component_layout(
        [build_topology("star", 4, rng()), build_topology("ring", 5, rng())]
    )
    assert layout.components == ((0, 1, 2, 3), (4, 5, 6, 7, 8))
    assert layout.sink_agents[0] == 0  # hub of the star block
    assert layout.global_delay == max(layout.local_delays) == 2
    assert layout.num_agents == 9


def test_component_layout_rejects_bad_partition():
    g = build_topology("complete", 3, rng())
    with pytest.raises(ValueError):
        ComponentLayout(
            components=((0, 1, 2), (2, 3, 4)),
            subgraphs=(g, g),
            sink_agents=(0, 2),
            local_delays=(1, 1),
            global_delay=1,
        )


def test_relay_paths_reach_sink_over_shortest_routes():
    g = build_topology("ring", 6, rng())
    paths = relay_paths(g, 0)
    dist = shortest_paths(g)
    for v, path in paths.items():
        assert path[0] == v and path[-1] == 0
        assert len(path) - 1 == dist[v, 0]
        for a, b in zip(path, path[1:]):
            assert b in g.neighbors(a)


def test_edge_list_text_format():
    g = graph_from_edges(3, [(0, 1), (1, 2)])
    assert edge_list_text(g) == "0 1\n1 2\n"


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), m=st.integers(2, 16))
def test_random_graphs_valid_and_symmetric(seed, m):
    g = build_topology("random", m, np.random.default_rng(seed), edge_prob=0.4)
    dist = shortest_paths(g)
    assert np.array_equal(dist, dist.T)
    assert np.all(dist >= 0)
    assert np.all(np.diag(dist) == 0)
