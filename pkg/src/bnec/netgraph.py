"""Directed acyclic multicast networks: loading, active-edge indexing, max-flow.

Edges are unit-rate.  Active edges are numbered 1..|E^a| so that an edge
always gets a larger index than every edge upstream of it; ties follow the
order in which edges are declared in the network file.
"""
from __future__ import annotations

import hashlib
import heapq
import json
from collections import deque
from dataclasses import dataclass, field

from .errors import (
    BadProbability,
    CycleDetected,
    InsufficientCut,
    ParseError,
    UnknownReceiver,
    UnreachableReceiver,
)

FORMAT_VERSION = 1
VIRTUAL_SOURCE = "__virtual_source__"
VIRTUAL_PREFIX = "__virtual_"


@dataclass(frozen=True)
class Edge:
    id: str
    start: str
    end: str
    p_err: float = 0.0
    p_ers: float = 0.0


@dataclass(frozen=True)
class NetworkGraph:
    nodes: tuple
    edges: tuple  # of Edge, in declaration order
    source: str
    receivers: tuple

    def edge(self, eid: str) -> Edge:
        for e in self.edges:
            if e.id == eid:
                return e
        raise KeyError(eid)

    def out_edges(self, v):
        return [e for e in self.edges if e.start == v]

    def in_edges(self, v):
        return [e for e in self.edges if e.end == v]


@dataclass(frozen=True)
class EdgeIndexing:
    active_edges: tuple  # edge ids; position i holds the edge with index i+1
    index_of: dict
    receiver_edges: dict  # receiver -> frozenset of indices (E_t)
    in_sets: dict  # index -> tuple of active predecessor indices (In(l))

    @property
    def size(self) -> int:
        return len(self.active_edges)

    def edge_id(self, i: int) -> str:
        return self.active_edges[i - 1]


@dataclass
class PathSet:
    receiver: str
    paths: list  # lists of edge indices, upstream first
    prev: dict = field(default_factory=dict)  # edge index -> predecessor on its path (None for the first)
    edge_ids: list = field(default_factory=list)

    def last_edges(self) -> list:
        return [p[-1] for p in self.paths]


# loading

def _probability(raw, what):
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ParseError(f"{what} must be a number, got {raw!r}")
    p = float(raw)
    if not 0.0 <= p <= 1.0:
        raise BadProbability(f"{what} = {p} is outside [0, 1]")
    return p


def _reachable(adj, start):
    seen = {start}
    todo = [start]
    while todo:
        v = todo.pop()
        for w in adj.get(v, ()):
            if w not in seen:
                seen.add(w)
                todo.append(w)
    return seen


def _check_acyclic(nodes, edges):
    indeg = {v: 0 for v in nodes}
    adj = {v: [] for v in nodes}
    for e in edges:
        if e.start == e.end:
            raise CycleDetected(f"edge {e.id} is a self-loop at {e.start}")
        adj[e.start].append(e.end)
        indeg[e.end] += 1
    todo = [v for v in nodes if indeg[v] == 0]
    done = 0
    while todo:
        v = todo.pop()
        done += 1
        for w in adj[v]:
            indeg[w] -= 1
            if indeg[w] == 0:
                todo.append(w)
    if done != len(nodes):
        stuck = sorted(v for v in nodes if indeg[v] > 0)
        raise CycleDetected(f"network has a directed cycle through {stuck}")


def network_from_dict(doc: dict) -> NetworkGraph:
    if not isinstance(doc, dict):
        raise ParseError("network document must be a JSON object")
    for key in ("nodes", "edges", "source", "receivers"):
        if key not in doc:
            raise ParseError(f"missing key {key!r}")
    version = doc.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise ParseError(f"unsupported format_version {version!r}")
    nodes = doc["nodes"]
    if not isinstance(nodes, list) or not all(isinstance(v, str) for v in nodes):
        raise ParseError("nodes must be a list of strings")
    if len(set(nodes)) != len(nodes):
        raise ParseError("duplicate node ids")
    node_set = set(nodes)
    edges = []
    seen = set()
    if not isinstance(doc["edges"], list):
        raise ParseError("edges must be a list")
    for raw in doc["edges"]:
        if not isinstance(raw, dict):
            raise ParseError("each edge must be an object")
        try:
            eid, a, b = raw["id"], raw["from"], raw["to"]
        except KeyError as exc:
            raise ParseError(f"edge is missing {exc.args[0]!r}") from None
        if not isinstance(eid, str) or eid in seen:
            raise ParseError(f"edge id {eid!r} is not a fresh string")
        if a not in node_set or b not in node_set:
            raise ParseError(f"edge {eid} references an unknown node")
        seen.add(eid)
        edges.append(Edge(
            eid, a, b,
            _probability(raw.get("p_err", 0.0), f"p_err of edge {eid}"),
            _probability(raw.get("p_ers", 0.0), f"p_ers of edge {eid}"),
        ))
    source = doc["source"]
    receivers = doc["receivers"]
    if source not in node_set:
        raise ParseError(f"source {source!r} is not a node")
    if not isinstance(receivers, list) or not receivers:
        raise ParseError("receivers must be a non-empty list")
    if len(set(receivers)) != len(receivers):
        raise ParseError("duplicate receivers")
    for t in receivers:
        if t not in node_set:
            raise ParseError(f"receiver {t!r} is not a node")
        if t == source:
            raise ParseError("the source cannot be a receiver")
    _check_acyclic(nodes, edges)
    adj = {}
    for e in edges:
        adj.setdefault(e.start, []).append(e.end)
    reach = _reachable(adj, source)
    for t in receivers:
        if t not in reach:
            raise UnreachableReceiver(f"receiver {t!r} is not reachable from {source!r}")
    return NetworkGraph(tuple(nodes), tuple(edges), source, tuple(receivers))


def load_network(document: str) -> NetworkGraph:
    """Parse and validate a network JSON document."""
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    return network_from_dict(doc)


def load_network_file(path) -> NetworkGraph:
    with open(path, encoding="utf-8") as fh:
        return load_network(fh.read())


def network_to_dict(g: NetworkGraph) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "nodes": list(g.nodes),
        "edges": [
            {"id": e.id, "from": e.start, "to": e.end, "p_err": e.p_err, "p_ers": e.p_ers}
            for e in g.edges
        ],
        "source": g.source,
        "receivers": list(g.receivers),
    }


def network_hash(g: NetworkGraph) -> str:
    blob = json.dumps(network_to_dict(g), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


# indexing

def index_active_edges(g: NetworkGraph) -> EdgeIndexing:
    """Number the active edges topologically, breaking ties by declaration order."""
    fwd, back = {}, {}
    for e in g.edges:
        fwd.setdefault(e.start, []).append(e.end)
        back.setdefault(e.end, []).append(e.start)
    from_source = _reachable(fwd, g.source)
    to_recv = {t: _reachable(back, t) for t in g.receivers}
    to_any = set().union(*to_recv.values())
    order = {e.id: n for n, e in enumerate(g.edges)}
    active = [e for e in g.edges if e.start in from_source and e.end in to_any]
    into = {}
    for e in active:
        into.setdefault(e.end, []).append(e)
    preds = {e.id: [p.id for p in into.get(e.start, [])] for e in active}
    succs = {e.id: [] for e in active}
    for eid, ps in preds.items():
        for p in ps:
            succs[p].append(eid)
    missing = {eid: len(ps) for eid, ps in preds.items()}
    heap = [(order[eid], eid) for eid, n in missing.items() if n == 0]
    heapq.heapify(heap)
    ordered = []
    while heap:
        _, eid = heapq.heappop(heap)
        ordered.append(eid)
        for s in succs[eid]:
            missing[s] -= 1
            if missing[s] == 0:
                heapq.heappush(heap, (order[s], s))
    index_of = {eid: n + 1 for n, eid in enumerate(ordered)}
    receiver_edges = {
        t: frozenset(index_of[e.id] for e in active if e.end in to_recv[t])
        for t in g.receivers
    }
    in_sets = {index_of[eid]: tuple(sorted(index_of[p] for p in preds[eid])) for eid in ordered}
    return EdgeIndexing(tuple(ordered), index_of, receiver_edges, in_sets)


# max-flow on unit capacities

def _max_flow(g: NetworkGraph, t: str, limit: int | None = None):
    """Edge-id keyed augmenting paths; returns the set of edge ids carrying flow."""
    out_e, in_e = {}, {}
    for e in g.edges:
        out_e.setdefault(e.start, []).append(e)
        in_e.setdefault(e.end, []).append(e)
    used = set()
    value = 0
    while limit is None or value < limit:
        parent = {g.source: None}
        q = deque([g.source])
        while q and t not in parent:
            v = q.popleft()
            for e in out_e.get(v, ()):
                if e.id not in used and e.end not in parent:
                    parent[e.end] = (e, +1)
                    q.append(e.end)
            for e in in_e.get(v, ()):
                if e.id in used and e.start not in parent:
                    parent[e.start] = (e, -1)
                    q.append(e.start)
        if t not in parent:
            break
        v = t
        while parent[v] is not None:
            e, d = parent[v]
            if d > 0:
                used.add(e.id)
                v = e.start
            else:
                used.discard(e.id)
                v = e.end
        value += 1
    return used, value


def _check_receiver(g, t):
    if t not in g.receivers:
        raise UnknownReceiver(f"{t!r} is not a receiver")


def min_cut(g: NetworkGraph, t: str) -> int:
    _check_receiver(g, t)
    return _max_flow(g, t)[1]


def edge_disjoint_paths(g: NetworkGraph, t: str, count: int,
                        indexing: EdgeIndexing | None = None) -> PathSet:
    """`count` pairwise edge-disjoint source-to-t paths from a max-flow decomposition."""
    _check_receiver(g, t)
    used, value = _max_flow(g, t, limit=count)
    if value < count:
        raise InsufficientCut(f"receiver {t!r} has min-cut {value} < {count}")
    if indexing is None:
        indexing = index_active_edges(g)
    flow_out = {}
    for e in g.edges:
        if e.id in used:
            flow_out.setdefault(e.start, []).append(e)
    id_paths = []
    for _ in range(count):
        v, path = g.source, []
        while v != t:
            e = flow_out[v].pop(0)
            path.append(e.id)
            v = e.end
        id_paths.append(path)
    paths = [[indexing.index_of[eid] for eid in p] for p in id_paths]
    prev = {}
    for p in paths:
        for a, b in zip([None] + p[:-1], p):
            prev[b] = a
    return PathSet(t, paths, prev, id_paths)


def path_users(pathsets) -> dict:
    """Edge index -> set of receivers whose chosen paths use it (T(l))."""
    users = {}
    for ps in pathsets:
        for p in ps.paths:
            for i in p:
                users.setdefault(i, set()).add(ps.receiver)
    return users


def with_virtual_source(g: NetworkGraph, h_max: int) -> NetworkGraph:
    """Add a node feeding the source through h_max noise-free edges, declared first."""
    virtual = tuple(
        Edge(f"{VIRTUAL_PREFIX}{j}", VIRTUAL_SOURCE, g.source, 0.0, 0.0)
        for j in range(1, h_max + 1)
    )
    return NetworkGraph((VIRTUAL_SOURCE,) + g.nodes, virtual + g.edges, VIRTUAL_SOURCE, g.receivers)


def is_virtual(eid: str) -> bool:
    return eid.startswith(VIRTUAL_PREFIX)
