import pytest

from edpc2.errors import InvalidInstance
from edpc2.graphs import (
    MultiGraph, connected_components, cut_edges, from_json, from_text,
    induced_edges, is_normalized, normalize, out_edges, to_json, to_text,
)

from helpers import cycle, graph_of, path_graph, random_connected_deg4
from oracles import pair_maxflow, reachable


def test_out_and_induced_on_c4():
    g = cycle(4)
    s = {0, 1}
    assert len(out_edges(g, s)) == 2
    assert len(induced_edges(g, s)) == 1


def test_cut_edges_cycle_and_path():
    assert cut_edges(cycle(4)) == set()
    g = path_graph(4)
    assert cut_edges(g) == {0, 1, 2}


def test_parallel_edges_never_bridges():
    g = graph_of(2, [(0, 1), (0, 1)])
    assert cut_edges(g) == set()


def test_cut_edges_against_bruteforce():
    for seed in range(12):
        g = random_connected_deg4(10, seed)
        brute = set()
        for eid in range(g.m):
            u, v = g.edges[eid]
            if v not in reachable(g, u, frozenset({eid})):
                brute.add(eid)
        assert cut_edges(g) == brute


def test_handshake_identity():
    for seed in range(6):
        g = random_connected_deg4(12, seed)
        for mask_seed in range(4):
            import random
            rng = random.Random(mask_seed)
            s = {v for v in range(g.n) if rng.random() < 0.5}
            lhs = 2 * len(induced_edges(g, s)) + len(out_edges(g, s))
            assert lhs == sum(g.degree(v) for v in s)


def test_normalize_star_k15():
    # star K_{1,5}: center 5, leaves 0..4, demand on two leaves
    g = graph_of(6, [(5, i) for i in range(5)], demands=[(0, 1)])
    ng = normalize(g)
    assert is_normalized(ng)
    # center had degree 5: replaced by a 5x5 grid (25 new vertices)
    assert ng.n == 6 - 1 + 25
    origin = ng.provenance["origin"]
    grid_vertices = [v for v in range(ng.n) if origin[v] == 5]
    assert len(grid_vertices) == 25
    for t in ng.terminals:
        assert ng.degree(t) == 1


def test_normalize_identity_on_path():
    g = path_graph(2, demands=[(0, 1)])
    ng = normalize(g)
    assert ng.n == 2 and ng.m == 1
    assert set(ng.terminals) == {0, 1}


def test_normalize_idempotent():
    g = graph_of(6, [(5, i) for i in range(5)], demands=[(0, 1)])
    ng = normalize(g)
    n2 = normalize(MultiGraph(ng.n, ng.edges, ng.terminals, ng.demands))
    assert n2.n == ng.n and n2.m == ng.m
    assert n2.demands == ng.demands


def test_normalize_shared_terminal_routability():
    # terminal 0 in two demands gets split into pendant clones; each demand's
    # unit-routability is preserved (pendants cap per-pair flow at 1).
    g = graph_of(5, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 4)],
                 demands=[(0, 2), (0, 4)])
    before = [pair_maxflow(g, s, t) for s, t in g.demands]
    assert before == [2, 1]  # frozen from the brute-force oracle
    ng = normalize(g)
    assert is_normalized(ng)
    after = [pair_maxflow(ng, s, t) for s, t in ng.demands]
    assert after == [min(1, b) for b in before]


def test_normalize_preserves_unit_routability_random():
    import random
    for seed in range(8):
        rng = random.Random(seed)
        g0 = random_connected_deg4(9, seed, extra=0.8)
        verts = rng.sample(range(9), 4)
        demands = [(verts[0], verts[1]), (verts[2], verts[3])]
        g = graph_of(9, g0.edges, demands)
        ng = normalize(g)
        for i, (s, t) in enumerate(g.demands):
            b = pair_maxflow(g, s, t)
            a = pair_maxflow(ng, *ng.demands[i])
            assert a == min(1, b)


def test_normalize_missing_endpoint():
    with pytest.raises(InvalidInstance):
        graph_of(3, [(0, 1)], demands=[(0, 5)])


def test_text_roundtrip():
    g = graph_of(4, [(0, 1), (1, 2), (2, 3), (0, 3), (0, 2)], demands=[(1, 3)])
    text = to_text(g)
    g2 = from_text(text)
    assert to_text(g2) == text
    assert g2.edges == g.edges and g2.demands == g.demands


def test_json_roundtrip():
    g = graph_of(4, [(0, 1), (1, 2), (2, 3)], demands=[(0, 3)])
    s = to_json(g)
    g2 = from_json(s)
    assert to_json(g2) == s


def test_components():
    g = graph_of(5, [(0, 1), (2, 3)])
    comps = connected_components(g)
    assert comps == [[0, 1], [2, 3], [4]]
