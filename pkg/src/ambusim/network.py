"""Road network model: travel-time edges, Dijkstra routing, map matching.

Coordinates are planar meters. Arc costs are predicted travel times, so the
"best" route is always the fastest one, not the shortest.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass


class NetworkError(Exception):
    """Base class for road-network failures."""


class UnknownNode(NetworkError):
    pass


class NoRoute(NetworkError):
    pass


class EmptyNetwork(NetworkError):
    pass


class NoStopLine(NetworkError):
    pass


@dataclass(frozen=True)
class Node:
    id: str
    x: float
    y: float


@dataclass(frozen=True)
class Edge:
    """Directed road segment with a static congestion factor.

    ``stop_line_controller`` marks the downstream end as a signalized stop
    line and names the (controller id, approach id) pair that governs it.
    """

    id: str
    from_node: str
    to_node: str
    length_m: float
    free_speed_mps: float
    congestion_factor: float = 1.0
    stop_line_controller: tuple[str, str] | None = None

    def __post_init__(self) -> None:
        if self.length_m <= 0:
            raise ValueError(f"edge {self.id}: length_m must be > 0")
        if self.free_speed_mps <= 0:
            raise ValueError(f"edge {self.id}: free_speed_mps must be > 0")
        if self.congestion_factor < 1.0:
            raise ValueError(f"edge {self.id}: congestion_factor must be >= 1")


@dataclass(frozen=True)
class MapPosition:
    """A point on the network: an edge id plus meters from its upstream end."""

    edge: str
    offset_m: float


@dataclass(frozen=True)
class Route:
    """Contiguous directed edge path with its predicted totals.

    Empty edge tuple is the degenerate origin == destination route.
    """

    edges: tuple[Edge, ...]
    total_time_s: float
    total_length_m: float

    def __post_init__(self) -> None:
        for a, b in zip(self.edges, self.edges[1:]):
            if a.to_node != b.from_node:
                raise ValueError(f"route breaks between {a.id} and {b.id}")

    @classmethod
    def from_edges(cls, edges: tuple[Edge, ...]) -> "Route":
        time_s = 0.0
        length_m = 0.0
        for e in edges:
            time_s += edge_travel_time(e)
            length_m += e.length_m
        return cls(edges=edges, total_time_s=time_s, total_length_m=length_m)

    @property
    def edge_ids(self) -> tuple[str, ...]:
        return tuple(e.id for e in self.edges)


class RoadNetwork:
    """Immutable directed graph of nodes and travel-time edges."""

    def __init__(self, nodes: list[Node], edges: list[Edge]):
        self.nodes: dict[str, Node] = {}
        for n in nodes:
            if n.id in self.nodes:
                raise ValueError(f"duplicate node id {n.id}")
            self.nodes[n.id] = n
        self.edges: dict[str, Edge] = {}
        for e in edges:
            if e.id in self.edges:
                raise ValueError(f"duplicate edge id {e.id}")
            if e.from_node not in self.nodes:
                raise ValueError(f"edge {e.id}: unknown from node {e.from_node}")
            if e.to_node not in self.nodes:
                raise ValueError(f"edge {e.id}: unknown to node {e.to_node}")
            self.edges[e.id] = e
        adj: dict[str, list[Edge]] = {nid: [] for nid in self.nodes}
        for e in self.edges.values():
            adj[e.from_node].append(e)
        # sorted by edge id so iteration order never depends on input order
        self.adjacency: dict[str, tuple[Edge, ...]] = {
            nid: tuple(sorted(out, key=lambda e: e.id)) for nid, out in adj.items()
        }

    def outgoing(self, node_id: str) -> tuple[Edge, ...]:
        if node_id not in self.adjacency:
            raise UnknownNode(node_id)
        return self.adjacency[node_id]


def edge_travel_time(edge: Edge) -> float:
    """Predicted traversal time in seconds: free-flow time scaled by congestion."""
    return (edge.length_m / edge.free_speed_mps) * edge.congestion_factor


def shortest_path(net: RoadNetwork, origin: str, dest: str) -> Route:
    """Fastest directed route by Dijkstra over predicted travel times.

    Equal-cost alternatives reaching a node are settled in favor of the
    lexicographically smallest edge-id sequence, which makes replays exact.
    """
    if origin not in net.nodes:
        raise UnknownNode(origin)
    if dest not in net.nodes:
        raise UnknownNode(dest)
    if origin == dest:
        return Route(edges=(), total_time_s=0.0, total_length_m=0.0)

    heap: list[tuple[float, tuple[str, ...], str]] = [(0.0, (), origin)]
    done: set[str] = set()
    while heap:
        cost, path, node = heapq.heappop(heap)
        if node in done:
            continue
        done.add(node)
        if node == dest:
            return Route.from_edges(tuple(net.edges[eid] for eid in path))
        for e in net.adjacency[node]:
            if e.to_node not in done:
                heapq.heappush(heap, (cost + edge_travel_time(e), path + (e.id,), e.to_node))
    raise NoRoute(f"{dest} unreachable from {origin}")


def map_match(net: RoadNetwork, x: float, y: float) -> MapPosition:
    """Snap a planar point to the closest edge segment (ties by edge id).

    The projection is clamped to the segment, so points past an edge's end
    map to offset 0 or length_m.
    """
    if not net.edges:
        raise EmptyNetwork("network has no edges")
    best: tuple[float, str, float] | None = None  # (dist2, edge id, offset)
    for eid in sorted(net.edges):
        e = net.edges[eid]
        a = net.nodes[e.from_node]
        b = net.nodes[e.to_node]
        dx, dy = b.x - a.x, b.y - a.y
        seg2 = dx * dx + dy * dy
        if seg2 == 0.0:
            t = 0.0
        else:
            t = ((x - a.x) * dx + (y - a.y) * dy) / seg2
            t = min(1.0, max(0.0, t))
        cx, cy = a.x + t * dx, a.y + t * dy
        d2 = (x - cx) ** 2 + (y - cy) ** 2
        if best is None or d2 < best[0]:
            best = (d2, eid, t * e.length_m)
    assert best is not None
    return MapPosition(edge=best[1], offset_m=best[2])


def distance_to_stop_line(net: RoadNetwork, pos: MapPosition) -> float:
    """Meters left to the signalized stop line at the end of the edge."""
    edge = net.edges[pos.edge]
    if edge.stop_line_controller is None:
        raise NoStopLine(f"edge {edge.id} is not signal-controlled")
    return edge.length_m - pos.offset_m


def node_position(net: RoadNetwork, node_id: str) -> MapPosition:
    """Canonical MapPosition for a unit parked at a node.

    Prefers offset 0 on the smallest-id outgoing edge, falling back to the
    downstream end of the smallest-id incoming edge.
    """
    if node_id not in net.nodes:
        raise UnknownNode(node_id)
    out = net.adjacency[node_id]
    if out:
        return MapPosition(edge=out[0].id, offset_m=0.0)
    incoming = sorted(e.id for e in net.edges.values() if e.to_node == node_id)
    if incoming:
        e = net.edges[incoming[0]]
        return MapPosition(edge=e.id, offset_m=e.length_m)
    raise NetworkError(f"node {node_id} touches no edge")


def position_node(net: RoadNetwork, pos: MapPosition) -> str:
    """Node a routed trip starts from: upstream at offset 0, else downstream."""
    edge = net.edges[pos.edge]
    return edge.from_node if pos.offset_m == 0.0 else edge.to_node


def position_xy(net: RoadNetwork, pos: MapPosition) -> tuple[float, float]:
    """Planar coordinates of a position, interpolated along its edge."""
    edge = net.edges[pos.edge]
    a = net.nodes[edge.from_node]
    b = net.nodes[edge.to_node]
    t = pos.offset_m / edge.length_m
    return a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)
