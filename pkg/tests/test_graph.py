import itertools
import json
import math
import random

import numpy as np
import pytest

from privroute.graph import (
    BITS_TO_DIR,
    DIR_TO_BITS,
    DIRECTIONS,
    ConnectivityError,
    Edge,
    GraphFormatError,
    Node,
    RoadGraph,
    _bearing_costs,
    all_pairs_next_hop,
    bound_out_degree,
    load_graph,
    max_hop_radius,
    orient_edges,
    preprocess,
    synth_grid,
    synth_random,
)


def bellman_ford(g: RoadGraph, s: int) -> list[float]:
    # Independent distance oracle; deliberately not Dijkstra.
    dist = [math.inf] * g.n
    dist[s] = 0.0
    for _ in range(g.n):
        changed = False
        for e in g.edges:
            if dist[e.u] + e.w < dist[e.v]:
                dist[e.v] = dist[e.u] + e.w
                changed = True
        if not changed:
            break
    return dist


def test_direction_bit_table():
    assert DIR_TO_BITS == {"N": (0, 0), "E": (0, 1), "W": (1, 0), "S": (1, 1)}
    assert BITS_TO_DIR[(0, 0)] == "N"
    assert BITS_TO_DIR[(1, 1)] == "S"


def test_grid_shape_and_edge_count():
    g = synth_grid(10, 10)
    assert g.n == 100
    assert len(g.edges) == 360
    assert all(e.w == 1 for e in g.edges)
    g2 = synth_grid(4, 4, weights="random", seed=7)
    assert len(g2.edges) == 2 * (2 * 4 * 4 - 4 - 4)
    assert any(e.w != 1 for e in g2.edges)


def test_grid_orientation_is_cardinal():
    g = orient_edges(synth_grid(5, 5))
    for e in g.edges:
        dx = g.nodes[e.v].x - g.nodes[e.u].x
        dy = g.nodes[e.v].y - g.nodes[e.u].y
        want = {(0, 1): "N", (0, -1): "S", (1, 0): "E", (-1, 0): "W"}[(int(dx), int(dy))]
        assert e.direction == want


def test_grid_first_hop_frozen_example():
    g = preprocess(synth_grid(10, 10))
    m = all_pairs_next_hop(g)
    s = g.index_of(3 * 10 + 4)
    t = g.index_of(3 * 10 + 9)
    hop = int(m.next_idx[s, t])
    assert g.nodes[hop].id == 3 * 10 + 5
    assert m.direction(s, t) == "N"
    assert (int(m.bits_ne[s, t]), int(m.bits_nw[s, t])) == (0, 0)


def test_orientation_matches_bruteforce_assignment():
    # Oracle: minimum total angular cost over all injective direction maps.
    rng = random.Random(3)
    for trial in range(40):
        k = rng.randrange(1, 5)
        center = Node(0, rng.uniform(-5, 5), rng.uniform(-5, 5))
        nodes = [center] + [Node(i + 1, rng.uniform(-5, 5), rng.uniform(-5, 5)) for i in range(k)]
        edges = [Edge(0, i + 1, 1) for i in range(k)]
        g = RoadGraph(nodes, edges)
        og = orient_edges(g)
        costs = [
            _bearing_costs(nodes[e.v].x - center.x, nodes[e.v].y - center.y)
            for e in edges
        ]
        best = min(
            sum(costs[i][DIRECTIONS.index(perm[i])] for i in range(k))
            for perm in itertools.permutations(DIRECTIONS, k)
        )
        got = sum(costs[i][DIRECTIONS.index(og.edges[i].direction)] for i in range(k))
        assert got == pytest.approx(best, abs=1e-12)
        assert len({e.direction for e in og.edges}) == k


def test_zero_length_edge_gets_some_direction():
    nodes = [Node(0, 1.0, 1.0), Node(1, 1.0, 1.0)]
    g = orient_edges(RoadGraph(nodes, [Edge(0, 1, 0)]))
    assert g.edges[0].direction in DIRECTIONS


def _star(n_out: int) -> RoadGraph:
    nodes = [Node(0, 0.0, 0.0)] + [
        Node(i, math.cos(2 * math.pi * i / n_out), math.sin(2 * math.pi * i / n_out))
        for i in range(1, n_out + 1)
    ]
    edges = [Edge(0, i, 10 + i) for i in range(1, n_out + 1)]
    edges += [Edge(i, 0, 5) for i in range(1, n_out + 1)]
    return RoadGraph(nodes, edges)


def test_degree_bounding_dummy_counts():
    g5 = bound_out_degree(_star(5))
    assert sum(1 for nd in g5.nodes if nd.dummy) == 1
    g9 = bound_out_degree(_star(9))
    assert sum(1 for nd in g9.nodes if nd.dummy) == 2
    for g in (g5, g9):
        assert all(g.out_degree(u) <= 4 for u in range(g.n))


def test_degree_bounding_preserves_distances():
    rng = random.Random(4)
    for seed in range(5):
        g = synth_random(18, seed=seed, extra_edges=4.0)
        b = bound_out_degree(g)
        assert all(b.out_degree(u) <= 4 for u in range(b.n))
        dummy_edges = [e for e in b.edges if b.nodes[e.v].dummy]
        assert dummy_edges and all(e.w == 0 for e in dummy_edges)
        for s in rng.sample(range(g.n), 4):
            d0 = bellman_ford(g, s)
            d1 = bellman_ford(b, s)
            for t in range(g.n):
                assert d0[t] == d1[t]


def test_dummy_coordinates_copy_original():
    b = bound_out_degree(_star(9))
    for nd in b.nodes:
        if nd.dummy:
            assert (nd.x, nd.y) == (0.0, 0.0)


def test_next_hop_first_edges_are_shortest():
    # Every tabled first hop must begin some shortest path: w(s,hop) +
    # dist(hop, t) == dist(s, t), with distances from the Bellman-Ford oracle.
    for seed in (0, 1):
        g = preprocess(synth_random(16, seed=seed, extra_edges=3.0))
        m = all_pairs_next_hop(g)
        dist = [bellman_ford(g, s) for s in range(g.n)]
        wmap = {(e.u, e.v): e.w for e in g.edges}
        for s in range(g.n):
            for t in range(g.n):
                if s == t:
                    assert m.next_idx[s, t] == -1
                    continue
                hop = int(m.next_idx[s, t])
                assert wmap[(s, hop)] + dist[hop][t] == dist[s][t]


def test_walk_reaches_target_with_oracle_cost():
    g = preprocess(synth_grid(6, 6, weights="random", seed=9))
    m = all_pairs_next_hop(g)
    dist = [bellman_ford(g, s) for s in range(g.n)]
    wmap = {(e.u, e.v): e.w for e in g.edges}
    rng = random.Random(5)
    for _ in range(60):
        s, t = rng.randrange(g.n), rng.randrange(g.n)
        if s == t:
            continue
        path = m.walk(s, t)
        assert path[-1] == t
        cost = sum(wmap[(a, b)] for a, b in zip([s] + path[:-1], path))
        assert cost == dist[s][t]


def test_max_hop_radius_matches_bruteforce():
    g = preprocess(synth_random(14, seed=2, extra_edges=2.5))
    m = all_pairs_next_hop(g)
    brute = max(
        len(m.walk(s, t)) for s in range(g.n) for t in range(g.n) if s != t
    )
    assert max_hop_radius(m) == brute


def test_unit_grid_radius():
    g = preprocess(synth_grid(4, 4))
    assert max_hop_radius(all_pairs_next_hop(g)) == 6
    g = preprocess(synth_grid(8, 8))
    assert max_hop_radius(all_pairs_next_hop(g)) == 14


def test_connectivity_error_names_nodes():
    nodes = [Node("a", 0, 0), Node("b", 1, 0), Node("c", 2, 0)]
    edges = [Edge(0, 1, 1), Edge(1, 0, 1), Edge(1, 2, 1)]
    g = orient_edges(RoadGraph(nodes, edges))
    with pytest.raises(ConnectivityError, match="'c'"):
        all_pairs_next_hop(g)


def test_matrices_require_orientation():
    g = synth_grid(3, 3)
    with pytest.raises(Exception, match="orientation"):
        all_pairs_next_hop(g)


def test_document_roundtrip():
    g = preprocess(synth_random(12, seed=6))
    doc = g.to_document()
    g2 = load_graph(json.dumps(doc))
    assert g2.n == g.n
    assert [e.w for e in g2.edges] == [e.w for e in g.edges]
    assert [e.direction for e in g2.edges] == [e.direction for e in g.edges]
    pub = g.to_public_document()
    assert all("w" not in e for e in pub["edges"])


def test_load_graph_validation():
    base = {"nodes": [{"id": 0, "x": 0, "y": 0}, {"id": 1, "x": 1, "y": 0}],
            "edges": [{"from": 0, "to": 1, "w": 3}]}
    load_graph(base)
    bad = json.loads(json.dumps(base))
    bad["nodes"].append({"id": 0, "x": 2, "y": 2})
    with pytest.raises(GraphFormatError, match="duplicate node"):
        load_graph(bad)
    bad = json.loads(json.dumps(base))
    bad["edges"][0]["w"] = -1
    with pytest.raises(GraphFormatError, match="weight"):
        load_graph(bad)
    bad = json.loads(json.dumps(base))
    bad["edges"].append({"from": 1, "to": 1, "w": 2})
    with pytest.raises(GraphFormatError, match="self-loop"):
        load_graph(bad)
    bad = json.loads(json.dumps(base))
    bad["edges"].append({"from": 0, "to": 2, "w": 2})
    with pytest.raises(GraphFormatError):
        load_graph(bad)
    with pytest.raises(GraphFormatError):
        load_graph("not json {")


def test_synth_random_is_strongly_connected():
    for seed in range(6):
        g = preprocess(synth_random(40, seed=seed))
        all_pairs_next_hop(g)  # raises on any unreachable pair
