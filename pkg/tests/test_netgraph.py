import json

import networkx as nx
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from bnec.errors import (
    BadProbability,
    CycleDetected,
    InsufficientCut,
    ParseError,
    UnknownReceiver,
    UnreachableReceiver,
)
from bnec.fixtures import FIXTURES, fixture_text
from bnec.netgraph import (
    edge_disjoint_paths,
    index_active_edges,
    is_virtual,
    load_network,
    min_cut,
    network_from_dict,
    network_hash,
    network_to_dict,
    path_users,
    with_virtual_source,
)


def doc(edges, receivers=("t",), nodes=None, source="s"):
    if nodes is None:
        nodes = sorted({v for _, a, b in edges for v in (a, b)} | {source, *receivers})
    return {
        "format_version": 1,
        "nodes": list(nodes),
        "edges": [{"id": i, "from": a, "to": b} for i, a, b in edges],
        "source": source,
        "receivers": list(receivers),
    }


@st.composite
def dags(draw):
    """Random DAG on nodes 0..n-1 (0 is the source) with parallel edges allowed."""
    n = draw(st.integers(3, 7))
    pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), min_size=1, max_size=14))
    chosen.append((0, n - 1))  # the last node is always reachable
    recv = [f"v{n - 1}"]
    extra = draw(st.integers(1, n - 2))
    if draw(st.booleans()):
        chosen.append((0, extra))
        recv.append(f"v{extra}")
    edges = [(f"e{j}", f"v{a}", f"v{b}") for j, (a, b) in enumerate(chosen, 1)]
    g = network_from_dict(doc(edges, recv, [f"v{i}" for i in range(n)], "v0"))
    return g


def nx_min_cut(g, t):
    G = nx.DiGraph()
    for e in g.edges:
        cap = G.get_edge_data(e.start, e.end, {"capacity": 0})["capacity"]
        G.add_edge(e.start, e.end, capacity=cap + 1)
    return nx.maximum_flow_value(G, g.source, t)


@pytest.mark.parametrize("name", FIXTURES)
def test_fixtures_load(name):
    g = load_network(fixture_text(name))
    assert network_from_dict(network_to_dict(g)) == g
    assert len(network_hash(g)) == 64


@pytest.mark.parametrize("name,cuts", [
    ("three_path", {"t": 3}),
    ("butterfly", {"t1": 2, "t2": 2}),
    ("delta3", {"t": 4}),
])
def test_fixture_min_cuts(nets, name, cuts):
    g = nets[name]
    assert {t: min_cut(g, t) for t in g.receivers} == cuts


def test_butterfly_indexing(nets):
    idx = index_active_edges(nets["butterfly"])
    assert idx.active_edges == tuple(f"e{i}" for i in range(1, 10))
    assert idx.in_sets[7] == (5, 6)
    assert idx.receiver_edges["t1"] == frozenset({1, 2, 3, 5, 6, 7, 8})


def test_inactive_edges_dropped():
    g = network_from_dict(doc([("e1", "s", "t"), ("e2", "s", "x"), ("e3", "y", "t")],
                              nodes=["s", "t", "x", "y"]))
    assert index_active_edges(g).active_edges == ("e1",)


def test_declaration_order_breaks_ties():
    g = network_from_dict(doc([("e1", "a", "t"), ("e2", "s", "b"), ("e3", "s", "a"), ("e4", "b", "t")]))
    # e1 must wait for e3; among ready edges the earliest declared goes first
    assert index_active_edges(g).active_edges == ("e2", "e3", "e1", "e4")


@pytest.mark.parametrize("bad,err", [
    ("not json", ParseError),
    ('{"nodes": []}', ParseError),
    (json.dumps({**doc([("e1", "s", "t")]), "format_version": 2}), ParseError),
    (json.dumps(doc([("e1", "s", "t"), ("e1", "s", "t")])), ParseError),
    (json.dumps(doc([("e1", "s", "zz")], nodes=["s", "t"])), ParseError),
    (json.dumps(doc([("e1", "s", "t")], receivers=("s",))), ParseError),
    (json.dumps(doc([("e1", "s", "a"), ("e2", "a", "s"), ("e3", "s", "t")])), CycleDetected),
    (json.dumps(doc([("e1", "s", "s"), ("e2", "s", "t")])), CycleDetected),
    (json.dumps(doc([("e1", "s", "a")], nodes=["s", "a", "t"])), UnreachableReceiver),
])
def test_rejects(bad, err):
    with pytest.raises(err):
        load_network(bad)


@pytest.mark.parametrize("p", [-0.1, 1.5])
def test_bad_probability(p):
    d = doc([("e1", "s", "t")])
    d["edges"][0]["p_err"] = p
    with pytest.raises(BadProbability):
        network_from_dict(d)


def test_unknown_receiver(nets):
    with pytest.raises(UnknownReceiver):
        min_cut(nets["three_path"], "a")


def test_insufficient_cut(nets):
    with pytest.raises(InsufficientCut):
        edge_disjoint_paths(nets["three_path"], "t", 4)


def test_virtual_source(nets):
    g = with_virtual_source(nets["butterfly"], 2)
    assert [e.id for e in g.edges[:2]] == ["__virtual_1", "__virtual_2"]
    assert is_virtual("__virtual_1") and not is_virtual("e1")
    assert min_cut(g, "t1") == 2


@settings(max_examples=80, deadline=None)
@given(dags())
def test_min_cut_matches_networkx(g):
    for t in g.receivers:
        assert min_cut(g, t) == nx_min_cut(g, t)


@settings(max_examples=80, deadline=None)
@given(dags())
def test_disjoint_paths_are_valid(g):
    idx = index_active_edges(g)
    users = []
    for t in g.receivers:
        h = min_cut(g, t)
        ps = edge_disjoint_paths(g, t, h, idx)
        users.append(ps)
        flat = [i for p in ps.paths for i in p]
        assert len(flat) == len(set(flat))
        for p in ps.edge_ids:
            assert g.edge(p[0]).start == g.source and g.edge(p[-1]).end == t
            for a, b in zip(p, p[1:]):
                assert g.edge(a).end == g.edge(b).start
        for p in ps.paths:
            assert p == sorted(p)  # indices grow along a path
    for i, ts in path_users(users).items():
        assert ts <= set(g.receivers)


@settings(max_examples=80, deadline=None)
@given(dags())
def test_indexing_is_topological(g):
    idx = index_active_edges(g)
    assert sorted(idx.index_of.values()) == list(range(1, idx.size + 1))
    for i, preds in idx.in_sets.items():
        assert all(p < i for p in preds)
        e = g.edge(idx.edge_id(i))
        assert {g.edge(idx.edge_id(p)).end for p in preds} <= {e.start}
    G = nx.MultiDiGraph()
    G.add_nodes_from(g.nodes)
    G.add_edges_from((e.start, e.end) for e in g.edges)
    for t in g.receivers:
        anc = nx.ancestors(G, t) | {t}
        want = {idx.index_of[e.id] for e in g.edges if e.id in idx.index_of and e.end in anc}
        assert idx.receiver_edges[t] == want
