"""Well-linkedness testing and the well-linked decomposition of small clusters.

A cluster ``S`` is alpha-well-linked for a boundary edge set ``Gamma`` when
every bipartition of ``S`` cuts at least alpha times the smaller side's
``Gamma`` boundary.  ``check_well_linked`` certifies this (exactly for small
clusters, via the sparsest-cut oracle otherwise) or returns a violating
partition.  ``decompose_small_cluster`` iteratively splits a small cluster
along sub-alpha cuts until every piece is certified; the caller's potential
accounting guarantees the splits never increase the clustering potential.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import ViolationCheckFailed
from .flows import RouteFailure
from .graphs import MultiGraph, connected_components, out_edges
from .profiles import ParamProfile
from .sparsest import SCCut, cut_sparsity, sc_instance, sparsest_cut


@dataclass
class WellLinkedCertificate:
    cluster: frozenset[int]
    gamma: frozenset[int]
    alpha: Fraction
    mode: str  # "exact-verified" | "oracle-certified" | "vacuous" | "constructive"

    @property
    def exact(self) -> bool:
        return self.mode in ("exact-verified", "vacuous", "constructive")


@dataclass
class ViolatingPartition:
    """(X, Y) partition of a cluster with witness edge sets.

    Valid when t1/t2 are disjoint boundary subsets with |t1| + |t2| <= k1
    and the internal cut is smaller than alpha * min(|t1|, |t2|).
    """

    x: frozenset[int]
    y: frozenset[int]
    t1: frozenset[int]
    t2: frozenset[int]
    crossing: frozenset[int]

    def check(self, g: MultiGraph, alpha: Fraction, k1: int) -> None:
        s = self.x | self.y
        if self.x & self.y:
            raise ViolationCheckFailed("sides overlap")
        boundary = out_edges(g, s)
        if not self.t1 <= (out_edges(g, self.x) & boundary):
            raise ViolationCheckFailed("t1 not on out(X) cap out(S)")
        if not self.t2 <= (out_edges(g, self.y) & boundary):
            raise ViolationCheckFailed("t2 not on out(Y) cap out(S)")
        if self.t1 & self.t2:
            raise ViolationCheckFailed("witness sets overlap")
        if len(self.t1) + len(self.t2) > k1:
            raise ViolationCheckFailed("witness sets exceed k1")
        cross = {eid for eid, (u, v) in enumerate(g.edges)
                 if (u in self.x) != (v in self.x) and u in s and v in s}
        if cross != set(self.crossing):
            raise ViolationCheckFailed("crossing edge set mismatch")
        if not Fraction(len(cross)) < alpha * min(len(self.t1), len(self.t2)):
            raise ViolationCheckFailed("cut is not below the violation threshold")


def violation_from_cut(g: MultiGraph, cut: SCCut, y_all: set[int]) -> ViolatingPartition:
    x = frozenset(cut.side_x)
    y = frozenset(y_all - cut.side_x)
    return ViolatingPartition(x, y, frozenset(cut.gamma_x), frozenset(cut.gamma_y),
                              frozenset(cut.crossing))


def violation_from_route_failure(fail: RouteFailure) -> ViolatingPartition:
    return ViolatingPartition(
        frozenset(fail.side_x), frozenset(fail.side_y),
        frozenset(fail.t1), frozenset(fail.t2), frozenset(fail.crossing),
    )


def check_well_linked(
    g: MultiGraph,
    cluster,
    gamma,
    alpha: Fraction,
    profile: ParamProfile,
    mode: str = "auto",
    seed: int = 0,
) -> WellLinkedCertificate | ViolatingPartition:
    """Certify that the cluster is alpha-well-linked for gamma, or produce a
    violating partition.

    ``mode``: "exact" forces enumeration (errors above the size limit),
    "oracle" uses the configured sparsest-cut backend, "auto" picks exact
    when small enough.  A sub-alpha oracle cut is always a genuine violation;
    oracle certification above the exact limit is only as strong as the
    backend (the certificate records which).
    """
    cluster = frozenset(cluster)
    gamma = frozenset(gamma)
    inst = sc_instance(g, cluster, gamma)
    if len(gamma) < 2 or len(cluster) == 1:
        return WellLinkedCertificate(cluster, gamma, alpha, "vacuous")
    use_exact = mode == "exact" or (
        mode == "auto" and len(cluster) <= profile.exact_wl_limit
        and profile.oracle == "exact"
    )
    if use_exact:
        cut = sparsest_cut(inst, "exact-strict", profile.exact_wl_limit, seed)
        if cut is None or cut.sparsity is None or cut.sparsity >= alpha:
            return WellLinkedCertificate(cluster, gamma, alpha, "exact-verified")
        return violation_from_cut(g, cut, set(cluster))
    cut = sparsest_cut(inst, profile.oracle, profile.exact_wl_limit, seed)
    if cut is None or cut.sparsity is None or cut.sparsity >= alpha:
        return WellLinkedCertificate(cluster, gamma, alpha, "oracle-certified")
    return violation_from_cut(g, cut, set(cluster))


def certified_level(
    g: MultiGraph, cluster, gamma, profile: ParamProfile, seed: int = 0
) -> tuple[Fraction, str]:
    """Best well-linkedness level the oracle can certify for the cluster.

    Exact below the size limit (the true sparsest cut value), the best cut
    found by the heuristics otherwise.  Grouping granularity is derived from
    this level.
    """
    inst = sc_instance(g, cluster, gamma)
    if len(inst.gamma) < 2 or inst.size == 1:
        return Fraction(1), "vacuous"
    if inst.size <= profile.exact_wl_limit and profile.oracle == "exact":
        cut = sparsest_cut(inst, "exact-strict", profile.exact_wl_limit, seed)
        level = Fraction(1) if cut is None or cut.sparsity is None else min(Fraction(1), cut.sparsity)
        return level, "exact-verified"
    cut = sparsest_cut(inst, profile.oracle, profile.exact_wl_limit, seed)
    level = Fraction(1) if cut is None or cut.sparsity is None else min(Fraction(1), cut.sparsity)
    return level, "oracle-certified"


@dataclass
class DecomposedCluster:
    vertices: frozenset[int]
    certificate: WellLinkedCertificate


def decompose_small_cluster(
    g: MultiGraph,
    cluster,
    profile: ParamProfile,
    seed: int = 0,
    on_split=None,
) -> list[DecomposedCluster]:
    """Partition a small cluster into alpha_wl-certified well-linked pieces.

    Splits are applied only when the oracle's cut has sparsity below
    ``alpha`` (certification is at ``alpha / alpha_arv``); disconnected
    inputs are decomposed per component; the largest-boundary piece is
    always attacked first.  ``on_split(old, (x, y))`` lets the caller assert
    potential monotonicity after every split.
    """
    alpha = profile.alpha
    pending: list[frozenset[int]] = [frozenset(c) for c in
                                     connected_components(g, set(cluster))]
    done: list[DecomposedCluster] = []
    while pending:
        pending.sort(key=lambda c: (len(out_edges(g, c)), len(c), min(c)))
        cur = pending.pop()  # largest boundary first
        gamma = out_edges(g, cur)
        res = check_well_linked(g, cur, gamma, alpha, profile, seed=seed)
        if isinstance(res, WellLinkedCertificate):
            level = profile.alpha_wl if res.mode == "oracle-certified" else alpha
            done.append(DecomposedCluster(
                cur, WellLinkedCertificate(cur, frozenset(gamma), level, res.mode)))
            continue
        x, y = set(res.x), set(res.y)
        if on_split is not None:
            on_split(cur, (x, y))
        for part in (x, y):
            for comp in connected_components(g, part):
                pending.append(frozenset(comp))
    return done
