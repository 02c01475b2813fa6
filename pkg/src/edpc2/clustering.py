"""Acceptable / good clusterings, the contraction, and the two refinement actions.

A clustering is *acceptable* when every terminal is a singleton cluster,
every small cluster (boundary below ``k1``) is certified well-linked, and
every large cluster is connected; it is *good* when no large cluster
remains.  ``partition_action`` splits a large cluster along a verified
violating partition; ``separate_action`` peels a large cluster that is
separated from the terminals by a thin cut.  Both strictly decrease the
exact potential (by more than 2 resp. at least 1 under the asymptotic
parameter relations; strict decrease is asserted at desk scale).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import InvalidInstance, ViolationCheckFailed
from .exactnum import LogRational
from .graphs import MultiGraph, connected_components, is_connected, out_edges
from .potential import potential_of_partition, table_for
from .profiles import ParamProfile
from .well_linked import (
    DecomposedCluster, ViolatingPartition, WellLinkedCertificate,
    decompose_small_cluster,
)


@dataclass
class Clustering:
    """A partition of V into clusters with cached boundary sizes and potential."""

    clusters: tuple[frozenset[int], ...]
    boundary: tuple[int, ...]
    phi: LogRational
    certificates: dict[frozenset[int], WellLinkedCertificate] = field(default_factory=dict)

    def cluster_of(self) -> dict[int, int]:
        owner = {}
        for ci, cl in enumerate(self.clusters):
            for v in cl:
                owner[v] = ci
        return owner

    def large_indices(self, profile: ParamProfile) -> list[int]:
        return [i for i, h in enumerate(self.boundary) if h >= profile.k1]

    def is_good(self, profile: ParamProfile) -> bool:
        return not self.large_indices(profile)


def build_clustering(
    g: MultiGraph,
    clusters,
    profile: ParamProfile,
    certificates: dict | None = None,
) -> Clustering:
    cls = tuple(frozenset(c) for c in clusters)
    covered: set[int] = set()
    for c in cls:
        if covered & c:
            raise InvalidInstance("clusters overlap")
        covered |= c
    if covered != set(range(g.n)):
        raise InvalidInstance("clusters do not cover the vertex set")
    bnd = tuple(len(out_edges(g, c)) for c in cls)
    phi = potential_of_partition(g, cls, profile)
    return Clustering(cls, bnd, phi, dict(certificates or {}))


def singleton_clustering(g: MultiGraph, profile: ParamProfile) -> Clustering:
    cls = [frozenset([v]) for v in range(g.n)]
    cl = build_clustering(g, cls, profile)
    for c in cl.clusters:
        cl.certificates[c] = WellLinkedCertificate(
            c, frozenset(out_edges(g, c)), profile.alpha_wl, "vacuous")
    return cl


def check_acceptable(g: MultiGraph, cl: Clustering, profile: ParamProfile) -> list[str]:
    """List of acceptability violations (empty = acceptable).

    Certificates are trusted here; the independent verifier re-derives
    well-linkedness from scratch.
    """
    problems = []
    owner = cl.cluster_of()
    for t in g.terminals:
        if len(cl.clusters[owner[t]]) != 1:
            problems.append(f"terminal {t} not a singleton cluster")
    for i, c in enumerate(cl.clusters):
        if cl.boundary[i] < profile.k1:
            cert = cl.certificates.get(c)
            if cert is None and len(c) > 1:
                problems.append(f"small cluster {i} lacks a well-linkedness certificate")
        else:
            if not is_connected(g, c):
                problems.append(f"large cluster {i} is disconnected")
            if c & g.terminals:
                problems.append(f"large cluster {i} contains terminals")
    recomputed = potential_of_partition(g, cl.clusters, profile)
    if not (recomputed == cl.phi):
        problems.append("cached potential disagrees with recomputation")
    return problems


def _absorb_pieces(
    g: MultiGraph,
    profile: ParamProfile,
    pieces,
    seed: int,
    on_split=None,
) -> tuple[list[frozenset[int]], dict]:
    """Split pieces into components; decompose small ones, keep large
    connected ones."""
    out_clusters: list[frozenset[int]] = []
    certs: dict = {}
    for piece in pieces:
        for comp in connected_components(g, set(piece)):
            comp_f = frozenset(comp)
            if len(out_edges(g, comp_f)) >= profile.k1:
                out_clusters.append(comp_f)
            else:
                for dc in decompose_small_cluster(g, comp_f, profile, seed, on_split):
                    out_clusters.append(dc.vertices)
                    certs[dc.vertices] = dc.certificate
    return out_clusters, certs


def partition_action(
    g: MultiGraph,
    cl: Clustering,
    cluster_index: int,
    vp: ViolatingPartition,
    profile: ParamProfile,
    seed: int = 0,
) -> Clustering:
    """Replace a large cluster with the two sides of a violating partition."""
    target = cl.clusters[cluster_index]
    if cl.boundary[cluster_index] < profile.k1:
        raise InvalidInstance("partition action applies to large clusters")
    if vp.x | vp.y != target or (vp.x & vp.y):
        raise ViolationCheckFailed("partition does not cover the cluster")
    vp.check(g, profile.alpha, profile.k1)
    new_pieces, certs = _absorb_pieces(g, profile, [vp.x, vp.y], seed)
    clusters = [c for i, c in enumerate(cl.clusters) if i != cluster_index]
    clusters.extend(new_pieces)
    out = build_clustering(g, clusters, profile)
    out.certificates.update({c: x for c, x in cl.certificates.items() if c in set(clusters)})
    out.certificates.update(certs)
    drop = cl.phi - out.phi
    if profile.name == "paper":
        assert drop > 2, "partition action must drop the potential by more than 2"
    else:
        assert drop.sign() > 0, "partition action must strictly drop the potential"
    return out


def separate_action(
    g: MultiGraph,
    cl: Clustering,
    cluster_index: int,
    side_a,
    profile: ParamProfile,
    seed: int = 0,
) -> Clustering:
    """Peel a large cluster separated from the terminals by a thin cut.

    ``side_a`` must contain the cluster, avoid all terminals, and have fewer
    than k1/2 boundary edges.  The side is first shrunk so no small
    cluster's remainder becomes large, then components of G[A] and of every
    remainder are re-clustered and small pieces decomposed.
    """
    a = set(side_a)
    target = cl.clusters[cluster_index]
    if cl.boundary[cluster_index] < profile.k1:
        raise InvalidInstance("separate action applies to large clusters")
    if not target <= a:
        raise InvalidInstance("side A must contain the cluster")
    if a & g.terminals:
        raise InvalidInstance("side A must avoid the terminals")
    if 2 * len(out_edges(g, a)) >= profile.k1:
        raise InvalidInstance("separating cut must have fewer than k1/2 edges")

    # pre-adjustment: remove any small cluster whose remainder would be large
    changed = True
    while changed:
        changed = False
        for i, s in enumerate(cl.clusters):
            if cl.boundary[i] >= profile.k1 or not (s & a) or s <= a:
                continue
            rest = s - a
            if len(out_edges(g, rest)) >= profile.k1:
                before = len(out_edges(g, a))
                a -= s
                after = len(out_edges(g, a))
                assert after <= before, "adjustment must not grow the cut"
                changed = True
    if not target <= a:
        raise InvalidInstance("adjustment removed the separated cluster itself")

    pieces = [frozenset(c) for c in connected_components(g, a)]
    untouched: list[frozenset[int]] = []
    for s in cl.clusters:
        rest = s - a
        if not rest:
            continue
        if rest == s:
            untouched.append(s)
        else:
            pieces.extend(frozenset(c) for c in connected_components(g, rest))
    new_pieces, certs = _absorb_pieces(g, profile, pieces, seed)
    clusters = untouched + new_pieces
    out = build_clustering(g, clusters, profile)
    out.certificates.update({c: x for c, x in cl.certificates.items() if c in set(untouched)})
    out.certificates.update(certs)
    drop = cl.phi - out.phi
    if profile.name == "paper":
        assert drop >= 1, "separate action must drop the potential by at least 1"
    else:
        assert drop.sign() > 0, "separate action must strictly drop the potential"
    return out


@dataclass
class ContractedGraph:
    """Super-node graph of a good clustering; parallel edges kept, self-loops
    dropped, edge ids shared with the host graph."""

    graph: MultiGraph                      # super-node multigraph
    edge_origin: dict[int, int]            # contracted edge id -> host edge id
    node_clusters: tuple[frozenset[int], ...]
    terminal_nodes: frozenset[int]

    @property
    def non_terminal_edge_count(self) -> int:
        return sum(
            1 for (u, v) in self.graph.edges
            if u not in self.terminal_nodes and v not in self.terminal_nodes
        )


def contract(g: MultiGraph, cl: Clustering, profile: ParamProfile,
             instance_well_linked: bool = False) -> ContractedGraph:
    if not cl.is_good(profile):
        raise InvalidInstance("contraction requires a good clustering")
    owner = cl.cluster_of()
    edges = []
    origin = {}
    for eid, (u, v) in enumerate(g.edges):
        cu, cv = owner[u], owner[v]
        if cu == cv:
            continue
        origin[len(edges)] = eid
        edges.append((cu, cv))
    term_nodes = frozenset(owner[t] for t in g.terminals)
    cg = MultiGraph(n=len(cl.clusters), edges=tuple(edges),
                    terminals=term_nodes,
                    demands=tuple((owner[s], owner[t]) for s, t in g.demands))
    out = ContractedGraph(cg, origin, cl.clusters, term_nodes)
    if instance_well_linked:
        # a legal contracted graph of a 1-well-linked instance keeps at
        # least k/3 non-terminal edges
        assert 3 * out.non_terminal_edge_count >= g.k, (
            "legal contracted graph lost too many edges")
    return out


def clustering_to_json(cl: Clustering, profile: ParamProfile) -> str:
    digest = hashlib.sha256(
        json.dumps(profile.describe(), sort_keys=True).encode()).hexdigest()[:16]
    return json.dumps(
        {"clusters": [sorted(c) for c in cl.clusters], "profile_hash": digest},
        sort_keys=True,
    )
