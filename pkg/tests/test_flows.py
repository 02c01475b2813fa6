import random

import pytest

from edpc2.flows import PathSet, RouteFailure, max_flow, route_set
from edpc2.graphs import out_edges

from helpers import complete, cycle, graph_of, path_graph, random_connected_deg4
from oracles import bfs_maxflow


def test_k4_unit_flow():
    g = complete(4)
    sol, cut = max_flow(g, [0], [3])
    assert sol.value == 3
    assert len(cut.crossing) == 3


def test_p3_flow_and_cut():
    g = path_graph(3)
    sol, cut = max_flow(g, [0], [2])
    assert sol.value == 1
    assert len(cut.crossing) == 1


def test_value_equals_bruteforce_everywhere():
    for seed in range(15):
        g = random_connected_deg4(11, seed, extra=0.9)
        rng = random.Random(seed)
        srcs = rng.sample(range(11), 2)
        snks = [v for v in rng.sample(range(11), 4) if v not in srcs][:2]
        if not snks:
            continue
        for cap in (1, 2):
            sol, cut = max_flow(g, srcs, snks, cap=cap)
            assert sol.value == bfs_maxflow(g, srcs, snks, cap)
            # self-certifying: flow value equals cut capacity
            assert sol.value == cap * len(cut.crossing) or sol.value <= cap * len(cut.crossing)
            loads = sol.load()
            assert all(l <= cap for l in loads.values())


def test_min_cut_certifies():
    for seed in range(10):
        g = random_connected_deg4(10, seed)
        sol, cut = max_flow(g, [0], [9], cap=1)
        # the returned cut's capacity equals the flow value exactly
        assert len(cut.crossing) == sol.value
        assert 0 in cut.side_a and 9 not in cut.side_a


def test_paths_decompose_into_unit_walks():
    g = complete(5)
    sol, _ = max_flow(g, [0], [4])
    assert sol.value == 4
    for p, w in sol.paths:
        assert w == 1
        assert p.vertices[0] == 0 and p.vertices[-1] == 4
        assert p.is_simple()


def test_route_set_identity_pairing():
    # cluster = {1, 2}; boundary = two edges to 0 and 3
    g = graph_of(4, [(0, 1), (1, 2), (2, 3)])
    s = {1, 2}
    bdry = sorted(out_edges(g, s))
    ps = route_set(g, bdry, bdry, eta=1, within=s)
    assert isinstance(ps, PathSet)
    assert sorted(ps.first_edges()) == bdry
    assert sorted(ps.last_edges()) == bdry
    assert ps.max_congestion() <= 1


def test_route_set_c6_perfect_matching():
    # cycle of 6 as the cluster; the two boundary triples interleave, so a
    # perfect congestion-1 pairing exists (cut between anchor sets is 3)
    edges = [(i, (i + 1) % 6) for i in range(6)]
    edges += [(0, 6), (2, 7), (4, 8)]   # one side
    edges += [(1, 9), (3, 10), (5, 11)]  # other side
    g = graph_of(12, edges)
    s = set(range(6))
    left = [6, 7, 8]
    right = [9, 10, 11]
    assert bfs_maxflow(g, [6, 7, 8], [9, 10, 11]) >= 3  # oracle feasibility
    ps = route_set(g, left, right, eta=1, within=s)
    assert isinstance(ps, PathSet)
    assert ps.max_congestion() == 1
    assert sorted(ps.first_edges()) == left
    assert sorted(ps.last_edges()) == right
    for p in ps.paths:
        for v in p.vertices[1:-1]:
            assert v in s


def test_route_set_single_vertex_hub():
    # cluster = one vertex with 6 pendant boundary edges
    g = graph_of(7, [(0, i) for i in range(1, 7)])
    s = {0}
    ps = route_set(g, [0, 1, 2], [3, 4, 5], eta=1, within=s)
    assert isinstance(ps, PathSet)
    assert all(len(p.edges) == 2 for p in ps.paths)


def test_route_set_failure_witness():
    # two pendant edges per side of a single bottleneck edge
    g = graph_of(8, [(0, 1), (0, 2), (2, 3), (1, 4), (1, 5),
                     (3, 6), (3, 7)])
    s = {1, 2, 3}  # wait: 0 outside; boundary edges (0,1),(0,2)? rebuild below
    g = graph_of(8, [(1, 4), (1, 5), (3, 6), (3, 7), (1, 2), (2, 3)])
    s = {1, 2, 3}
    e1 = sorted(out_edges(g, {1}) - {4})          # pendant edges at 1
    e2 = sorted(out_edges(g, {3}) - {5})          # pendant edges at 3
    res = route_set(g, e1, e2, eta=1, within=s)
    assert isinstance(res, RouteFailure)
    assert res.flow_value == 1
    # witness arithmetic: crossing edges fewer than min(|t1|, |t2|) / eta
    assert len(res.crossing) * 1 < min(len(res.t1), len(res.t2))


def test_route_set_congestion_recount():
    rng = random.Random(7)
    for seed in range(8):
        g = random_connected_deg4(12, seed, extra=1.0)
        s = set(rng.sample(range(12), 6))
        bdry = sorted(out_edges(g, s))
        if len(bdry) < 4:
            continue
        e1 = bdry[: len(bdry) // 2][:3]
        e2 = bdry[len(bdry) // 2:][:3]
        if len(e1) > len(e2):
            e1 = e1[: len(e2)]
        res = route_set(g, e1, e2, eta=2, within=s)
        if isinstance(res, PathSet):
            assert res.max_congestion() <= 2
            assert sorted(res.first_edges()) == sorted(e1)
            for p in res.paths:
                for v in p.vertices[1:-1]:
                    assert v in s


def test_route_set_without_cluster():
    g = cycle(6)
    ps = route_set(g, [0], [3], eta=1)
    assert isinstance(ps, PathSet)
    assert ps.paths[0].first_edge == 0
    assert ps.paths[0].last_edge == 3
