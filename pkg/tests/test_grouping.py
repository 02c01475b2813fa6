import random
from fractions import Fraction

import pytest

from edpc2.errors import InvalidInstance
from edpc2.graphs import cut_edges, out_edges
from edpc2.grouping import (
    AdvancedRouting, AdvancedSubsets, find_tag_edge, granularity_for,
    group_advanced, group_by_weight, group_many_sets, initial_clustering,
    is_pseudo_center, tree_pairing,
)
from edpc2.profiles import desk_profile

from helpers import cycle, graph_of, grid, path_graph, random_connected_deg4
from oracles import exact_well_linked_for_terminals


PROF = desk_profile()


# ----------------------------- group_by_weight -----------------------------

def test_group_by_weight_path():
    g = path_graph(6)
    w = {v: Fraction(1) for v in range(6)}
    res = group_by_weight(g, w, 2)
    for grp in res.groups:
        assert 2 <= grp.weight <= 6
    total = set()
    for grp in res.groups:
        assert not (total & grp.vertices)
        total |= grp.vertices
    assert total == set(range(6))


def test_group_by_weight_single_group():
    g = path_graph(3)
    w = {0: Fraction(1), 1: Fraction(1), 2: Fraction(1)}
    res = group_by_weight(g, w, 3)
    assert len(res.groups) == 1


def test_group_by_weight_star_heavy_center():
    g = graph_of(5, [(0, i) for i in range(1, 5)])
    w = {0: Fraction(4), 1: Fraction(0), 2: Fraction(0), 3: Fraction(0), 4: Fraction(0)}
    res = group_by_weight(g, w, 4)
    assert len(res.groups) == 1
    assert res.groups[0].vertices == set(range(5))


def test_group_by_weight_bounds_random_trees():
    rng = random.Random(42)
    for trial in range(120):
        n = rng.randrange(3, 25)
        # random tree
        edges = [(rng.randrange(0, i), i) for i in range(1, n)]
        g = graph_of(n, edges)
        p = Fraction(rng.randrange(1, 6))
        w = {v: Fraction(rng.randrange(0, int(p) + 1)) for v in range(n)}
        if sum(w.values()) < p:
            w[0] = p
        res = group_by_weight(g, w, p)
        used_edges: set[int] = set()
        covered: set[int] = set()
        for grp in res.groups:
            assert p <= grp.weight <= 3 * p, (n, p, grp.weight)
            assert not (used_edges & grp.tree_edges)
            used_edges |= grp.tree_edges
            assert not (covered & grp.vertices)
            covered |= grp.vertices
            # tree connects the group
            verts = set(grp.vertices)
            for eid in grp.tree_edges:
                u, v = g.edges[eid]
                verts.update((u, v))
            sub = graph_of(n, [g.edges[e] for e in grp.tree_edges])
            # connectivity check via union-find over tree edges
            parent = {v: v for v in verts}

            def find(x):
                while parent[x] != x:
                    parent[x] = parent[parent[x]]
                    x = parent[x]
                return x

            for eid in grp.tree_edges:
                u, v = g.edges[eid]
                parent[find(u)] = find(v)
            roots = {find(v) for v in grp.vertices}
            assert len(roots) <= 1
        assert covered == set(range(n))


def test_group_by_weight_disconnected_rejected():
    g = graph_of(4, [(0, 1), (2, 3)])
    with pytest.raises(InvalidInstance):
        group_by_weight(g, {v: Fraction(1) for v in range(4)}, 2)


# --------------------------- initial_clustering ----------------------------

def test_initial_clustering_single():
    g = path_graph(5)
    cs = initial_clustering(g, {0, 4}, 2)
    assert len(cs) == 1
    assert cs[0].vertices == frozenset(range(5))


def test_initial_clustering_path_blocks():
    g = path_graph(12)
    terms = set(range(12))
    cs = initial_clustering(g, terms, 2)
    for c in cs:
        assert 2 <= len(c.terminals) <= 8
    covered = set()
    for c in cs:
        assert not (covered & c.vertices)
        covered |= c.vertices
    assert covered == set(range(12))


def test_initial_clustering_random_deg4():
    for seed in range(10):
        g = random_connected_deg4(20, seed)
        terms = set(range(0, 20, 2))
        cs = initial_clustering(g, terms, 3)
        covered = set()
        for c in cs:
            assert 3 <= len(c.terminals) <= 12
            covered |= c.vertices
        assert covered == set(range(20))


def test_initial_clustering_too_few_terminals():
    g = path_graph(4)
    with pytest.raises(InvalidInstance):
        initial_clustering(g, {0}, 2)


# ------------------------------ pseudo-centers -----------------------------

def test_pseudo_center_star():
    # star: center 0, q leaves as terminals; v = leaf 1
    q = 4
    g = graph_of(q + 1, [(0, i) for i in range(1, q + 1)])
    terms = set(range(1, q + 1))
    bridges = cut_edges(g)
    ok, _, _, _ = is_pseudo_center(g, set(range(q + 1)), set(range(q)),
                                   terms, 1, q, bridges)
    assert ok  # all edges are bridges (capacity 1 suffices)


def test_pseudo_center_cycle():
    # cycle of q terminals: v pushes 1 unit through two cap-1/2 edges: ok
    q = 4
    g = cycle(q)
    terms = set(range(q))
    bridges = cut_edges(g)  # empty
    ok, _, _, _ = is_pseudo_center(g, set(range(q)), set(range(q)),
                                   terms, 0, q, bridges)
    assert ok


def test_pseudo_center_single_edge_q2():
    g = graph_of(2, [(0, 1)])
    bridges = cut_edges(g)
    ok, _, _, _ = is_pseudo_center(g, {0, 1}, {0}, {0, 1}, 0, 2, bridges)
    assert ok  # v keeps 1/2, sends 1/2 over the bridge


def test_pseudo_center_failure_and_tag_edge():
    # cluster = a path of q+1 vertices where only the far end vertices are
    # terminals; the candidate cannot spread its unit at 1/q per terminal
    q = 4
    # terminals: 0 and 1 only (需要 q terminals to absorb): v=0 fails
    # cluster: path 0-1-2, terminals {0, 1, 2} but q=4 > 3 sinks - 1
    g = path_graph(4)
    g2 = graph_of(5, list(g.edges) + [(3, 4)])
    cluster = {0, 1, 2}
    terms = {0, 1}
    bridges = cut_edges(g2)
    ok, _, _, _ = is_pseudo_center(g2, cluster, {0, 1}, terms, 0, q, bridges)
    assert not ok  # only 2 unit sinks < q
    eid, x, y = find_tag_edge(g2, cluster, {0, 1}, terms, 0, q, bridges)
    assert x in cluster and y not in cluster
    assert eid == 2  # the unique boundary edge


# ------------------------------- tree pairing ------------------------------

def test_tree_pairing_path():
    g = path_graph(3)
    ps = tree_pairing(g, {0, 1}, [0, 2])
    assert len(ps.paths) == 1
    p = ps.paths[0]
    assert p.vertices[0] in (0, 2) and p.vertices[-1] in (0, 2)
    assert len(p.edges) == 2


def test_tree_pairing_star():
    g = graph_of(5, [(0, i) for i in range(1, 5)])
    ps = tree_pairing(g, set(range(4)), [1, 2, 3, 4])
    assert len(ps.paths) == 2
    assert ps.max_congestion() <= 1
    ends = sorted(v for p in ps.paths for v in (p.vertices[0], p.vertices[-1]))
    assert ends == [1, 2, 3, 4]


def test_tree_pairing_degenerate_multiplicity():
    g = path_graph(2)
    ps = tree_pairing(g, {0}, [1, 1])
    assert len(ps.paths) == 1
    assert ps.paths[0].edges == ()


def test_tree_pairing_random_trees():
    rng = random.Random(9)
    for trial in range(200):
        n = rng.randrange(2, 18)
        edges = [(rng.randrange(0, i), i) for i in range(1, n)]
        g = graph_of(n, edges)
        k2 = rng.randrange(1, 5)
        endpoints = [rng.randrange(n) for _ in range(2 * k2)]
        ps = tree_pairing(g, set(range(n - 1)), endpoints)
        assert len(ps.paths) == k2
        assert ps.max_congestion() <= 1
        got = sorted(v for p in ps.paths for v in (p.vertices[0], p.vertices[-1]))
        assert got == sorted(endpoints)


# --------------------------- boosting procedures ---------------------------

def _host_with_terminals(seed, n=14, nterm=8):
    """Connected deg-<=4 host with pendant terminal vertices."""
    rng = random.Random(seed)
    core = random_connected_deg4(n, seed, extra=1.2)
    edges = list(core.edges)
    deg = [core.degree(v) for v in range(n)]
    terms = []
    v = 0
    tid = n
    while len(terms) < nterm:
        cands = [u for u in range(n) if deg[u] < 4]
        if not cands:
            break
        u = rng.choice(cands)
        edges.append((u, tid))
        deg[u] += 1
        terms.append(tid)
        tid += 1
    return graph_of(tid, edges), terms


def test_group_many_sets_single_color():
    g, terms = _host_with_terminals(3, n=12, nterm=8)
    ok = exact_well_linked_for_terminals(g, terms, Fraction(1, 2))
    if not ok:
        pytest.skip("fixture not 1/2-well-linked for this seed")
    res = group_many_sets(g, [terms], Fraction(1, 2), PROF, seed=1)
    assert len(res.subsets) == 1 and res.subsets[0]
    assert exact_well_linked_for_terminals(g, res.subsets[0], Fraction(1))


def test_group_many_sets_two_colors_exact_wl():
    found = 0
    for seed in range(40):
        g, terms = _host_with_terminals(seed, n=12, nterm=10)
        if not exact_well_linked_for_terminals(g, terms, Fraction(1, 2)):
            continue
        t1 = terms[:5]
        t2 = terms[5:]
        try:
            res = group_many_sets(g, [t1, t2], Fraction(1, 2), PROF, seed=seed)
        except Exception:
            continue
        found += 1
        chosen = res.subsets[0] + res.subsets[1]
        assert set(res.subsets[0]) <= set(t1)
        assert set(res.subsets[1]) <= set(t2)
        assert not (set(res.subsets[0]) & set(res.subsets[1]))
        assert exact_well_linked_for_terminals(g, chosen, Fraction(1))
        if found >= 5:
            break
    assert found >= 3


def test_group_many_sets_below_threshold():
    g, terms = _host_with_terminals(1, n=10, nterm=4)
    with pytest.raises(InvalidInstance):
        group_many_sets(g, [terms[:2]], Fraction(1, 16), PROF)


def test_group_advanced_same_cluster_routing():
    # every pair's endpoints attach next to each other, so matched pairs end
    # up inside single initial clusters: the routing branch fires
    g = path_graph(20)
    edges = list(g.edges)
    terms = []
    tid = 20
    anchors = [0, 1, 5, 6, 10, 11, 15, 16]
    for u in anchors:
        edges.append((u, tid))
        terms.append(tid)
        tid += 1
    gg = graph_of(tid, edges)
    matching = [(terms[2 * i], terms[2 * i + 1]) for i in range(4)]
    res = group_advanced(gg, matching, [], Fraction(1, 2), PROF, seed=0)
    assert isinstance(res, AdvancedRouting)
    assert len(res.routed) >= 1
    for (s, t), path in res.routed:
        assert {path.vertices[0], path.vertices[-1]} == {s, t}


def test_group_advanced_subsets_branch():
    found = 0
    for seed in range(60):
        g, terms = _host_with_terminals(seed + 100, n=14, nterm=12)
        if len(terms) < 12:
            continue
        if not exact_well_linked_for_terminals(g, terms, Fraction(1, 2)):
            continue
        rng = random.Random(seed)
        t_list = list(terms)
        rng.shuffle(t_list)
        matching = [(t_list[2 * i], t_list[2 * i + 1]) for i in range(4)]
        t2 = t_list[8:]
        try:
            res = group_advanced(g, matching, t2, Fraction(1, 2), PROF, seed=seed)
        except Exception:
            continue
        if isinstance(res, AdvancedRouting):
            # edge-disjointness already asserted internally
            found += 1
            continue
        assert isinstance(res, AdvancedSubsets)
        # pair closure: every original pair is in or out atomically
        t1set = set(res.t1)
        for (s, t) in matching:
            assert (s in t1set) == (t in t1set)
        chosen = sorted(t1set | set(res.t2))
        assert exact_well_linked_for_terminals(g, chosen, Fraction(1))
        found += 1
        if found >= 6:
            break
    assert found >= 4


def test_granularity():
    assert granularity_for(Fraction(1)) == 4
    assert granularity_for(Fraction(1, 2)) == 8
    assert granularity_for(Fraction(2, 3)) == 6
