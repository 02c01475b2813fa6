from fractions import Fraction

import pytest

from edpc2.clustering import (
    build_clustering, check_acceptable, contract, partition_action,
    separate_action, singleton_clustering,
)
from edpc2.errors import ViolationCheckFailed
from edpc2.exactnum import LogRational
from edpc2.graphs import out_edges
from edpc2.potential import potential_of_partition, table_for
from edpc2.profiles import (
    desk_profile, paper_profile, partition_min_drop, phi_value_cap,
    separate_min_drop,
)
from edpc2.well_linked import ViolatingPartition

from helpers import graph_of, random_connected_deg4


PROF = desk_profile()


def test_phi_zero_for_single_cluster():
    g = random_connected_deg4(8, 1)
    phi = potential_of_partition(g, [frozenset(range(8))], PROF)
    assert phi == 0


def test_phi_singletons_formula():
    g = graph_of(3, [(0, 1), (1, 2)])
    table = table_for(PROF.alpha, PROF.k1)
    phi = potential_of_partition(g, [frozenset([v]) for v in range(3)], PROF)
    expected = LogRational(Fraction(2))  # two cross edges
    expected = expected + table.phi(1) * 2 + table.phi(2) * 2
    assert phi == expected


def test_phi_of_8_desk_value():
    # desk profile alpha=1/64, k1=16: phi(8) = 4 * (1/64) * 3 = 3/16
    table = table_for(Fraction(1, 64), 16)
    assert table.phi(8) == LogRational(Fraction(3, 16))


def test_phi_step_function_above_k1():
    table = table_for(Fraction(1, 64), 16)
    p16 = table.phi(16)
    # phi(n_0) = 4 alpha log2 k1 + 4 alpha = 1/16*4 + 1/16 = 5/16
    assert p16 == LogRational(Fraction(5, 16))
    assert table.phi(17) == p16      # same bucket [16, 24)
    assert table.phi(23) == p16
    p24 = table.phi(24)              # next bucket adds 4*alpha*k1/n_1 = 1/24... exact
    assert p24 == p16 + Fraction(4, 64) * 16 / Fraction(24)
    assert table.phi(35) == p24


def test_cached_phi_matches_recompute_after_actions():
    g = random_connected_deg4(12, 3)
    cl = singleton_clustering(g, PROF)
    assert potential_of_partition(g, cl.clusters, PROF) == cl.phi
    assert not check_acceptable(g, cl, PROF)


def _dumbbell_large(nblocks=2, pend=9):
    """Two K4 blocks + 1 bridge + ``pend`` pendant edges per block: the whole
    thing is one large cluster (boundary 2*pend >= k1 = 16 for pend >= 8)."""
    edges = []
    for base in (0, 4):
        vs = [base + i for i in range(4)]
        edges += [(vs[i], vs[j]) for i in range(4) for j in range(i + 1, 4)]
    edges.append((0, 4))
    n = 8
    t1 = []
    t2 = []
    for i in range(pend):
        edges.append((i % 4, n))
        t1.append(len(edges) - 1)
        n += 1
    for i in range(pend):
        edges.append((4 + i % 4, n))
        t2.append(len(edges) - 1)
        n += 1
    return graph_of(n, edges), t1, t2


def test_partition_action_drops_potential():
    # at the stock desk alpha (1/64) only disconnected clusters can violate,
    # so violation fixtures sweep alpha up to 1/4
    prof = PROF.replace(alpha=Fraction(1, 4))
    g, t1, t2 = _dumbbell_large()
    cluster = frozenset(range(8))
    others = [frozenset([v]) for v in range(8, g.n)]
    cl = build_clustering(g, [cluster] + others, prof)
    ci = cl.clusters.index(cluster)
    vp = ViolatingPartition(
        frozenset(range(4)), frozenset(range(4, 8)),
        frozenset(t1[:8]), frozenset(t2[:8]), frozenset({12}))
    vp.check(g, prof.alpha, prof.k1)
    out = partition_action(g, cl, ci, vp, prof)
    assert (cl.phi - out.phi).sign() > 0
    assert not check_acceptable(g, out, prof)


def test_partition_action_rejects_bogus_witness():
    g, t1, t2 = _dumbbell_large()
    cluster = frozenset(range(8))
    others = [frozenset([v]) for v in range(8, g.n)]
    cl = build_clustering(g, [cluster] + others, PROF)
    ci = cl.clusters.index(cluster)
    # witness too small: |E(X,Y)| = 1 is NOT below alpha * min(1, 1)
    vp = ViolatingPartition(
        frozenset(range(4)), frozenset(range(4, 8)),
        frozenset(t1[:1]), frozenset(t2[:1]), frozenset({12}))
    with pytest.raises(ViolationCheckFailed):
        partition_action(g, cl, ci, vp, PROF)


def test_separate_action():
    # large cluster (K4 core + 16 pendant stubs) behind a single bridge,
    # terminals on the far side
    edges = []
    edges += [(i, j) for i in range(4) for j in range(i + 1, 4)]
    n = 4
    for i in range(16):  # stub vertices inflate the blob's boundary
        edges.append((i % 4, n))
        n += 1
    bridge_vertex = n
    edges.append((0, bridge_vertex))  # the separating edge
    n += 1
    term1, term2 = n, n + 1
    edges.append((bridge_vertex, term1))
    edges.append((bridge_vertex, term2))
    n += 2
    g = graph_of(n, edges, demands=[(term1, term2)])
    blob = frozenset(range(4))
    others = [frozenset([v]) for v in range(4, n)]
    cl = build_clustering(g, [blob] + others, PROF)
    ci = cl.clusters.index(blob)
    assert cl.boundary[ci] >= PROF.k1
    side_a = set(range(20))  # blob plus its stubs
    out = separate_action(g, cl, ci, side_a, PROF)
    assert (cl.phi - out.phi).sign() > 0
    assert not check_acceptable(g, out, PROF)


def test_separate_rejects_terminals_inside():
    g = graph_of(3, [(0, 1), (1, 2)], demands=[(0, 2)])
    cl = singleton_clustering(g, PROF)
    with pytest.raises(Exception):
        separate_action(g, cl, 1, {0, 1}, PROF)


def test_symbolic_claim_arithmetic():
    # under the paper relations (alpha = 1/(2^11 gamma log k), k1 > 4/alpha)
    # the actions drop the potential by more than 2 resp. at least 1
    log_k = 1000
    for gamma in (2 ** 10, 2 ** 20, 2 ** 30):
        alpha = Fraction(1, 2 ** 11 * gamma * log_k)
        k1 = 2 * int(4 / alpha)
        assert partition_min_drop(alpha, k1) >= 2
        cap = phi_value_cap(alpha, k1)
        assert cap <= Fraction(1, 2 ** 8 * gamma)
        assert 1 + 2 * cap <= Fraction(11, 10)
        assert separate_min_drop(k1, cap) >= 1


def test_paper_profile_relations():
    prof = paper_profile(2 ** 500)
    prof.validate(strict=True)
    assert prof.k1 > 4 / prof.alpha
    assert prof.alpha_wl == prof.alpha / prof.alpha_arv
    assert prof.r == 8 * prof.cmg_rounds
    # phi values stay below 1/(2^8 gamma) in the paper regime; use the
    # nearest power-of-two threshold so the exact log arithmetic stays small
    k1_pow2 = 1 << (prof.k1.bit_length() - 1)
    table = table_for(prof.alpha, k1_pow2)
    cap = Fraction(1, 2 ** 8 * prof.gamma)
    assert table.phi(k1_pow2 // 2) <= cap
    assert table.phi(k1_pow2) <= cap
    assert table.phi(k1_pow2 * 100) <= cap


def test_contract_identity_on_singletons():
    g = random_connected_deg4(10, 5)
    cl = singleton_clustering(g, PROF)
    cg = contract(g, cl, PROF)
    assert cg.graph.n == g.n and cg.graph.m == g.m


def test_contract_keeps_parallel_edges():
    g = graph_of(4, [(0, 1), (1, 2), (1, 2), (2, 3), (0, 3), (0, 2)])
    cl = build_clustering(g, [frozenset({0, 1}), frozenset({2, 3})], PROF)
    cg = contract(g, cl, PROF)
    # edges between the two clusters: (1,2) x2, (0,3), (0,2) -> 4 parallel
    assert cg.graph.m == 4
    assert cg.graph.n == 2
