"""Road networks: loading, synthesis, degree bounding, edge orientation and
all-pairs next-hop matrices.

The protocol needs every node to have at most four outgoing edges, each
labelled with a distinct compass direction, so that "which neighbor comes
next" can be answered with two bits.  Nodes with more neighbors are split
with zero-weight dummy edges; directions are assigned by solving a small
assignment problem against the edge bearings.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

MAX_OUT_DEGREE = 4

DIRECTIONS = ("N", "E", "W", "S")
# Two-bit encoding: first bit chooses the NE/NW matrix pair row semantics.
DIR_TO_BITS = {"N": (0, 0), "E": (0, 1), "W": (1, 0), "S": (1, 1)}
BITS_TO_DIR = {bits: d for d, bits in DIR_TO_BITS.items()}
DIR_VECTORS = {"N": (0.0, 1.0), "E": (1.0, 0.0), "S": (0.0, -1.0), "W": (-1.0, 0.0)}


class GraphError(Exception):
    pass


class GraphFormatError(GraphError):
    pass


class ConnectivityError(GraphError):
    pass


@dataclass(frozen=True)
class Node:
    id: object
    x: float
    y: float
    dummy: bool = False


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    w: int
    direction: Optional[str] = None


@dataclass
class RoadGraph:
    nodes: list[Node]
    edges: list[Edge]
    _adj: Optional[list[list[int]]] = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return len(self.nodes)

    def adjacency(self) -> list[list[int]]:
        """Edge indices per source node, sorted by target node index."""
        if self._adj is None:
            adj: list[list[int]] = [[] for _ in self.nodes]
            for i, e in enumerate(self.edges):
                adj[e.u].append(i)
            for lst in adj:
                lst.sort(key=lambda i: self.edges[i].v)
            self._adj = adj
        return self._adj

    def index_of(self, node_id) -> int:
        for i, nd in enumerate(self.nodes):
            if nd.id == node_id:
                return i
        raise KeyError(node_id)

    def out_degree(self, u: int) -> int:
        return len(self.adjacency()[u])

    def neighbor_by_direction(self, u: int, direction: str) -> Optional[int]:
        for ei in self.adjacency()[u]:
            if self.edges[ei].direction == direction:
                return self.edges[ei].v
        return None

    def direction_of_edge(self, u: int, v: int) -> Optional[str]:
        for ei in self.adjacency()[u]:
            if self.edges[ei].v == v:
                return self.edges[ei].direction
        return None

    def to_document(self) -> dict:
        return {
            "nodes": [{"id": nd.id, "x": nd.x, "y": nd.y, **({"dummy": True} if nd.dummy else {})} for nd in self.nodes],
            "edges": [
                {"from": self.nodes[e.u].id, "to": self.nodes[e.v].id, "w": e.w,
                 **({"direction": e.direction} if e.direction else {})}
                for e in self.edges
            ],
        }

    def to_public_document(self) -> dict:
        """Topology only: node placement and directed, direction-labelled edges.

        Edge weights are the server's private routing information and are
        deliberately absent.
        """
        return {
            "nodes": [{"id": nd.id, "x": nd.x, "y": nd.y, **({"dummy": True} if nd.dummy else {})} for nd in self.nodes],
            "edges": [
                {"from": self.nodes[e.u].id, "to": self.nodes[e.v].id,
                 **({"direction": e.direction} if e.direction else {})}
                for e in self.edges
            ],
        }


def load_graph(doc) -> RoadGraph:
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise GraphFormatError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "nodes" not in doc or "edges" not in doc:
        raise GraphFormatError("document must be an object with 'nodes' and 'edges'")
    nodes: list[Node] = []
    index: dict = {}
    for item in doc["nodes"]:
        try:
            nid, x, y = item["id"], float(item["x"]), float(item["y"])
        except (KeyError, TypeError, ValueError) as exc:
            raise GraphFormatError(f"bad node entry {item!r}") from exc
        if not (math.isfinite(x) and math.isfinite(y)):
            raise GraphFormatError(f"non-finite coordinates for node {nid!r}")
        if nid in index:
            raise GraphFormatError(f"duplicate node id {nid!r}")
        index[nid] = len(nodes)
        nodes.append(Node(nid, x, y, bool(item.get("dummy", False))))
    edges: list[Edge] = []
    seen = set()
    for item in doc["edges"]:
        try:
            u, v, w = index[item["from"]], index[item["to"]], item["w"]
        except KeyError as exc:
            raise GraphFormatError(f"edge references unknown node or misses a key: {item!r}") from exc
        if not isinstance(w, int) or isinstance(w, bool) or w < 0:
            raise GraphFormatError(f"edge weight must be a non-negative integer: {item!r}")
        if u == v:
            raise GraphFormatError(f"self-loop on node {item['from']!r}")
        if (u, v) in seen:
            raise GraphFormatError(f"duplicate edge {item['from']!r} -> {item['to']!r}")
        seen.add((u, v))
        edges.append(Edge(u, v, w, item.get("direction")))
    return RoadGraph(nodes, edges)


def synth_grid(width: int, height: int, weights: str = "unit", seed: int = 0) -> RoadGraph:
    """Four-connected grid; node (i, j) sits at coordinates (i, j)."""
    import random as _random

    rng = _random.Random(seed)
    nodes = [Node(i * height + j, float(i), float(j)) for i in range(width) for j in range(height)]

    def idx(i, j):
        return i * height + j

    def w():
        if weights == "unit":
            return 1
        if weights == "random":
            return rng.randrange(1, 101)
        raise ValueError(f"unknown weight rule {weights!r}")

    edges = []
    for i in range(width):
        for j in range(height):
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                ni, nj = i + di, j + dj
                if 0 <= ni < width and 0 <= nj < height:
                    edges.append(Edge(idx(i, j), idx(ni, nj), w()))
    return RoadGraph(nodes, edges)


def synth_random(n: int, seed: int = 0, extra_edges: float = 2.0, max_weight: int = 100) -> RoadGraph:
    """Random strongly-connected digraph: a random cycle plus extra edges."""
    import random as _random

    rng = _random.Random(seed)
    nodes = [Node(i, rng.uniform(0, 100), rng.uniform(0, 100)) for i in range(n)]
    order = list(range(n))
    rng.shuffle(order)
    present = set()
    edges = []

    def add(u, v):
        if u != v and (u, v) not in present:
            present.add((u, v))
            edges.append(Edge(u, v, rng.randrange(1, max_weight + 1)))

    for i in range(n):
        add(order[i], order[(i + 1) % n])
    for _ in range(int(n * extra_edges)):
        add(rng.randrange(n), rng.randrange(n))
    return RoadGraph(nodes, edges)


def bound_out_degree(g: RoadGraph) -> RoadGraph:
    """Split nodes with more than four outgoing edges using dummy nodes.

    A node keeps its first three out-edges plus a zero-weight edge to a
    dummy copy at the same coordinates, which carries the rest (recursively).
    Shortest-path distances between original nodes are unchanged.
    """
    nodes = list(g.nodes)
    out: list[list[tuple[int, int]]] = [[] for _ in nodes]  # (target, weight)
    for e in g.edges:
        out[e.u].append((e.v, e.w))
    for lst in out:
        lst.sort()
    queue = list(range(len(nodes)))
    dummy_count: dict = {}
    while queue:
        u = queue.pop(0)
        if len(out[u]) <= MAX_OUT_DEGREE:
            continue
        base = g.nodes[u] if u < g.n else nodes[u]
        root_id = nodes[u].id
        origin = root_id if not isinstance(root_id, str) or "#d" not in root_id else root_id.split("#d")[0]
        k = dummy_count.get(origin, 0) + 1
        dummy_count[origin] = k
        dummy = Node(f"{origin}#d{k}", nodes[u].x, nodes[u].y, dummy=True)
        d_idx = len(nodes)
        nodes.append(dummy)
        out.append(out[u][MAX_OUT_DEGREE - 1:])
        out[u] = out[u][:MAX_OUT_DEGREE - 1] + [(d_idx, 0)]
        queue.append(d_idx)
    edges = [Edge(u, v, w) for u, lst in enumerate(out) for (v, w) in lst]
    return RoadGraph(nodes, edges)


def _bearing_costs(dx: float, dy: float) -> list[float]:
    """Absolute angle in [0, pi] between the edge vector and each direction."""
    norm = math.hypot(dx, dy)
    if norm == 0.0:
        return [math.pi] * len(DIRECTIONS)
    costs = []
    for d in DIRECTIONS:
        ux, uy = DIR_VECTORS[d]
        dot = max(-1.0, min(1.0, (dx * ux + dy * uy) / norm))
        costs.append(math.acos(dot))
    return costs


def orient_edges(g: RoadGraph) -> RoadGraph:
    """Assign each out-edge a distinct compass direction, minimizing total
    angular mismatch per node (rectangular assignment problem)."""
    adj = g.adjacency()
    new_edges = list(g.edges)
    for u, eids in enumerate(adj):
        if not eids:
            continue
        if len(eids) > MAX_OUT_DEGREE:
            raise GraphError(f"node index {u} has out-degree {len(eids)} > {MAX_OUT_DEGREE}")
        cost = np.array([
            _bearing_costs(g.nodes[g.edges[ei].v].x - g.nodes[u].x,
                           g.nodes[g.edges[ei].v].y - g.nodes[u].y)
            for ei in eids
        ])
        rows, cols = linear_sum_assignment(cost)
        for r, c in zip(rows, cols):
            ei = eids[r]
            new_edges[ei] = replace(new_edges[ei], direction=DIRECTIONS[c])
    return RoadGraph(list(g.nodes), new_edges)


def preprocess(g: RoadGraph) -> RoadGraph:
    return orient_edges(bound_out_degree(g))


@dataclass
class NextHopMatrices:
    """First-hop routing tables: bit matrices plus the underlying hop index.

    bits_ne[u, t] / bits_nw[u, t] encode the compass direction of the first
    edge on the chosen shortest path u -> t; next_idx[u, t] is that neighbor
    (-1 on the diagonal).
    """

    n: int
    bits_ne: np.ndarray
    bits_nw: np.ndarray
    next_idx: np.ndarray

    def direction(self, u: int, t: int) -> str:
        return BITS_TO_DIR[(int(self.bits_ne[u, t]), int(self.bits_nw[u, t]))]

    def walk(self, s: int, t: int) -> list[int]:
        """Follow the tables from s to t; the oracle route for the protocol."""
        path = []
        cur = s
        while cur != t:
            cur = int(self.next_idx[cur, t])
            path.append(cur)
        return path


def _dijkstra(g: RoadGraph, s: int, adj: list[list[int]]) -> tuple[list[float], list[int], list[int]]:
    """Deterministic Dijkstra: heap ties broken by ascending node index,
    relaxations strict, so the first-found shortest path wins."""
    n = g.n
    dist = [math.inf] * n
    parent = [-1] * n
    settled_order = []
    dist[s] = 0.0
    done = [False] * n
    heap = [(0.0, s)]
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        settled_order.append(u)
        for ei in adj[u]:
            e = g.edges[ei]
            nd = d + e.w
            if nd < dist[e.v]:
                dist[e.v] = nd
                parent[e.v] = u
                heapq.heappush(heap, (nd, e.v))
    return dist, parent, settled_order


def all_pairs_next_hop(g: RoadGraph) -> NextHopMatrices:
    n = g.n
    adj = g.adjacency()
    for u in range(n):
        if len(adj[u]) > MAX_OUT_DEGREE:
            raise GraphError(f"node index {u} has out-degree {len(adj[u])}; run degree bounding first")
        dirs = [g.edges[ei].direction for ei in adj[u]]
        if any(d is None for d in dirs) or len(set(dirs)) != len(dirs):
            raise GraphError(f"node index {u} lacks distinct edge directions; run orientation first")
    bits_ne = np.zeros((n, n), dtype=np.uint8)
    bits_nw = np.zeros((n, n), dtype=np.uint8)
    next_idx = np.full((n, n), -1, dtype=np.int32)
    for s in range(n):
        dist, parent, order = _dijkstra(g, s, adj)
        unreachable = [t for t in range(n) if math.isinf(dist[t])]
        if unreachable:
            raise ConnectivityError(
                f"no path from node {g.nodes[s].id!r} to node {g.nodes[unreachable[0]].id!r}; graph must be strongly connected")
        first = [-1] * n
        for v in order:
            if v == s:
                continue
            first[v] = v if parent[v] == s else first[parent[v]]
        for t in range(n):
            if t == s:
                continue
            hop = first[t]
            next_idx[s, t] = hop
            b = DIR_TO_BITS[g.direction_of_edge(s, hop)]
            bits_ne[s, t] = b[0]
            bits_nw[s, t] = b[1]
    return NextHopMatrices(n, bits_ne, bits_nw, next_idx)


def max_hop_radius(m: NextHopMatrices) -> int:
    """Largest hop count of any tabled route; the protocol's round count R."""
    n = m.n
    worst = 0
    for t in range(n):
        hops = np.full(n, -1, dtype=np.int64)
        hops[t] = 0
        for s in range(n):
            if hops[s] >= 0:
                continue
            chain = []
            cur = s
            while hops[cur] < 0:
                chain.append(cur)
                cur = int(m.next_idx[cur, t])
            base = hops[cur]
            for i, node in enumerate(reversed(chain)):
                hops[node] = base + i + 1
        worst = max(worst, int(hops.max()))
    return worst
