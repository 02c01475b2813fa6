"""Grouping machinery: weighted grouping over trees, terminal clustering,
pseudo-centers, tagging, tree pairing, and the two boosting procedures that
upgrade alpha-well-linked terminal sets to 1-well-linked subsets.

The constructive certificate behind both boosting procedures: a family of
edge-disjoint clusters with pairwise-disjoint terminal sets, at most one
chosen terminal per cluster, each chosen terminal a *pseudo-center* of its
cluster (it can fractionally spread one flow unit over the cluster's
terminals under half-capacity edges, unit capacity on global bridges).
Whenever that certificate holds the chosen terminal set is 1-well-linked.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import InvalidInstance, PostVerificationFailed, RetryBudgetExceeded
from .flows import FlowNetwork, Path, PathSet
from .graphs import MultiGraph, cut_edges, is_connected, out_edges
from .profiles import ParamProfile


# ---------------------------------------------------------------------------
# Basic weighted grouping (edge-disjoint trees, group weights in [p, 3p])
# ---------------------------------------------------------------------------

@dataclass
class Group:
    vertices: set[int]
    tree_edges: set[int]
    weight: Fraction


@dataclass
class GroupingResult:
    groups: list[Group]


def _spanning_tree(g: MultiGraph, within=None) -> tuple[dict[int, list[tuple[int, int]]], int]:
    """BFS spanning tree as child lists (vertex -> [(child, edge id)])."""
    verts = sorted(set(range(g.n)) if within is None else set(within))
    root = verts[0]
    seen = {root}
    children: dict[int, list[tuple[int, int]]] = {v: [] for v in verts}
    frontier = [root]
    vset = set(verts)
    while frontier:
        nxt = []
        for v in frontier:
            for eid in sorted(g.adjacency()[v]):
                w = g.other_end(eid, v)
                if w in vset and w not in seen:
                    seen.add(w)
                    children[v].append((w, eid))
                    nxt.append(w)
        frontier = nxt
    if seen != vset:
        raise InvalidInstance("grouping requires a connected graph")
    return children, root


def group_by_weight(g: MultiGraph, weights: dict[int, Fraction], p) -> GroupingResult:
    """Partition vertices into groups of weight in [p, 3p] with edge-disjoint
    connecting trees.

    Bottom-up over a spanning tree: every vertex merges its children's
    leftover fragments; whenever the running weight reaches ``p`` a group is
    closed (staying below ``2p`` because each fragment is below ``p``).  The
    final leftover joins the last closed group through the residual tree, so
    that group stays below ``3p``.
    """
    p = Fraction(p)
    if p <= 0:
        raise InvalidInstance("p must be positive")
    total = sum(Fraction(weights.get(v, 0)) for v in range(g.n))
    if total < p:
        raise InvalidInstance("total weight below p")
    for v in range(g.n):
        if not (0 <= Fraction(weights.get(v, 0)) <= p):
            raise InvalidInstance("vertex weights must lie in [0, p]")
    children, root = _spanning_tree(g)

    groups: list[Group] = []
    # post-order traversal; each vertex returns its leftover fragment:
    # (weight, vertex set, tree edge set) hanging below (and including) it
    leftover_w: dict[int, Fraction] = {}
    leftover_vs: dict[int, set[int]] = {}
    leftover_es: dict[int, set[int]] = {}

    order = []
    stack = [root]
    while stack:
        v = stack.pop()
        order.append(v)
        for c, _ in children[v]:
            stack.append(c)
    for v in reversed(order):
        w_acc = Fraction(weights.get(v, 0))
        vs_acc = {v}
        es_acc: set[int] = set()
        for c, eid in children[v]:
            cw = leftover_w.pop(c)
            cvs = leftover_vs.pop(c)
            ces = leftover_es.pop(c)
            if cw == 0 and not cvs:
                continue
            w_acc += cw
            vs_acc |= cvs
            es_acc |= ces | {eid}
            if w_acc >= p:
                groups.append(Group(vs_acc, es_acc, w_acc))
                w_acc = Fraction(0)
                vs_acc = set()
                es_acc = set()
        leftover_w[v] = w_acc
        leftover_vs[v] = vs_acc
        leftover_es[v] = es_acc
    rest_w = leftover_w[root]
    rest_vs = leftover_vs[root]
    rest_es = leftover_es[root]
    if rest_w >= p:
        groups.append(Group(rest_vs, rest_es, rest_w))
    elif rest_vs or rest_w > 0:
        if not groups:
            raise AssertionError("total weight >= p guarantees a group")
        last = groups[-1]
        # the leftover hangs off the residual tree which still contains the
        # last group's hub vertex, so connect through the remaining edges
        last.vertices |= rest_vs
        last.tree_edges |= rest_es | _connecting_edges(children, root, last.vertices)
        last.weight += rest_w
    return GroupingResult(groups)


def _connecting_edges(children, root, targets: set[int]) -> set[int]:
    """Edges of the spanning tree needed to connect ``targets`` upward to the
    subtree spanned by them (tree paths from every target to the root,
    trimmed to the minimal Steiner subtree)."""
    parent: dict[int, tuple[int, int]] = {}
    stack = [root]
    while stack:
        v = stack.pop()
        for c, eid in children[v]:
            parent[c] = (v, eid)
            stack.append(c)
    # mark tree paths root->target; keep edges below the shallowest common point
    marked: set[int] = set()
    for t in targets:
        v = t
        while v != root and v in parent:
            pv, eid = parent[v]
            if eid in marked:
                break
            marked.add(eid)
            v = pv
    return marked


# ---------------------------------------------------------------------------
# Initial clustering of terminals (degree <= 4)
# ---------------------------------------------------------------------------

@dataclass
class TerminalCluster:
    vertices: frozenset[int]
    terminals: frozenset[int]
    rep: int | None = None


def initial_clustering(g: MultiGraph, terminals, q: int) -> list[TerminalCluster]:
    """Partition V into connected vertex-disjoint clusters holding between q
    and 4q terminals each.

    Repeatedly peels the lowest subtree with at least q terminals (it has at
    most 3q + 1 <= 4q of them under degree 4), as long as the remainder
    keeps at least q.  Eager peeling maximizes the number of clusters, which
    the desk-scale grouping procedures depend on.
    """
    terms = set(terminals)
    if len(terms) < q:
        raise InvalidInstance("fewer than q terminals")
    if any(g.degree(v) > 4 for v in range(g.n)):
        raise InvalidInstance("initial clustering requires maximum degree 4")
    children, root = _spanning_tree(g)
    parent: dict[int, tuple[int, int]] = {}
    order = [root]
    stack = [root]
    while stack:
        v = stack.pop()
        for c, eid in children[v]:
            parent[c] = (v, eid)
            order.append(c)
            stack.append(c)
    depth: dict[int, int] = {root: 0}
    for v in order:
        if v in parent:
            depth[v] = depth[parent[v][0]] + 1

    alive = set(range(g.n))
    clusters: list[TerminalCluster] = []

    def subtree(v) -> set[int]:
        out = {v}
        st = [v]
        while st:
            x = st.pop()
            for c, _ in children[x]:
                if c in alive:
                    out.add(c)
                    st.append(c)
        return out

    while True:
        tcount = {v: (1 if v in terms else 0) for v in alive}
        for v in reversed(order):
            if v not in alive:
                continue
            for c, _ in children[v]:
                if c in alive:
                    tcount[v] += tcount[c]
        total = tcount[root]
        candidates = [
            v for v in alive
            if tcount[v] >= q
            and all(tcount.get(c, 0) < q for c, _ in children[v] if c in alive)
            and (total - tcount[v]) >= q
        ]
        if not candidates:
            # no peelable subtree: the remainder holds between q and 4q
            # terminals (a remainder above 4q always admits a candidate)
            clusters.append(TerminalCluster(
                frozenset(alive), frozenset(t for t in terms if t in alive)))
            break
        v = max(candidates, key=lambda x: (depth[x], -x))
        sub = subtree(v)
        clusters.append(TerminalCluster(
            frozenset(sub), frozenset(t for t in terms if t in sub)))
        alive -= sub
    for c in clusters:
        assert q <= len(c.terminals) <= 4 * q
    return clusters


# ---------------------------------------------------------------------------
# Pseudo-centers
# ---------------------------------------------------------------------------

def is_pseudo_center(
    g: MultiGraph,
    cluster_vertices,
    cluster_edges,
    cluster_terminals,
    v: int,
    q: int,
    bridges: set[int],
) -> tuple[bool, FlowNetwork, dict[int, int], int]:
    """Can ``v`` spread one flow unit over the cluster's terminals with at
    most 1/q per terminal, 1/2 per edge (1 on global bridges)?

    Decided by one integral max-flow after scaling by q: edge capacities q/2
    (q on bridges), a unit sink arc per terminal (including v itself), demand
    q out of v.  Returns (decision, residual network, node index map, flow).
    """
    if q % 2:
        raise InvalidInstance("q must be even")
    verts = sorted(set(cluster_vertices))
    idx = {x: i for i, x in enumerate(verts)}
    if v not in idx or v not in set(cluster_terminals):
        raise InvalidInstance("candidate must be a terminal of the cluster")
    net = FlowNetwork(len(verts) + 1)
    t_node = len(verts)
    for eid in sorted(set(cluster_edges)):
        a, b = g.edges[eid]
        cap = q if eid in bridges else q // 2
        net.add_arc(idx[a], idx[b], cap, cap, ("edge", eid))
    for t in sorted(set(cluster_terminals)):
        net.add_arc(idx[t], t_node, 1, 0, ("snk", t))
    flow = net.max_flow(idx[v], t_node, limit=q)
    return flow >= q, net, idx, flow


def find_tag_edge(
    g: MultiGraph,
    cluster_vertices,
    cluster_edges,
    cluster_terminals,
    s: int,
    q: int,
    bridges: set[int],
) -> tuple[int, int, int]:
    """Boundary edge (x, y) with x inside the deficient side of the failed
    pseudo-center flow, smallest edge id first.  Returns (edge id, x, y).

    The caller must re-verify the merged cluster with ``is_pseudo_center``;
    the deficient-cut choice matches the existence argument but is a
    heuristic here.
    """
    ok, net, idx, _ = is_pseudo_center(
        g, cluster_vertices, cluster_edges, cluster_terminals, s, q, bridges)
    if ok:
        raise InvalidInstance("vertex is already a pseudo-center")
    verts = sorted(set(cluster_vertices))
    reach_nodes = net.residual_reachable(idx[s])
    deficient = {verts[i] for i in reach_nodes if i < len(verts)}
    cset = set(cluster_vertices)
    internal = set(cluster_edges)
    candidates = []
    for x in sorted(deficient):
        for eid in sorted(g.adjacency()[x]):
            if eid in internal:
                continue
            y = g.other_end(eid, x)
            if y in cset:
                continue
            candidates.append((eid, x, y))
    if not candidates:
        raise PostVerificationFailed("no boundary edge leaves the deficient side")
    return min(candidates)


# ---------------------------------------------------------------------------
# Tree pairing
# ---------------------------------------------------------------------------

def tree_pairing(g: MultiGraph, tree_edges, endpoints: list[int]) -> PathSet:
    """Pair up an even multiset of vertices with edge-disjoint tree paths.

    Each vertex is an endpoint of exactly as many paths as its multiplicity.
    Works on any tree given by its edge ids.
    """
    if len(endpoints) % 2:
        raise InvalidInstance("endpoint multiset must be even")
    mult: dict[int, int] = {}
    for v in endpoints:
        mult[v] = mult.get(v, 0) + 1
    tset = set(tree_edges)
    adj: dict[int, list[tuple[int, int]]] = {}
    for eid in tset:
        a, b = g.edges[eid]
        adj.setdefault(a, []).append((b, eid))
        adj.setdefault(b, []).append((a, eid))
    if not endpoints:
        return PathSet([], 1)
    root = min(mult)
    # iterative post-order pairing: every child passes up at most one
    # dangling endpoint together with its path to the current vertex
    parent: dict[int, tuple[int, int] | None] = {root: None}
    order = [root]
    stack = [root]
    while stack:
        v = stack.pop()
        for w, eid in sorted(adj.get(v, [])):
            if w not in parent:
                parent[w] = (v, eid)
                order.append(w)
                stack.append(w)
    for v in mult:
        if v not in parent:
            raise InvalidInstance("endpoint not on the tree")
    dangling: dict[int, list[tuple[list[int], list[int]]]] = {v: [] for v in order}
    paths: list[Path] = []
    for v in reversed(order):
        items = dangling[v]
        for _ in range(mult.get(v, 0)):
            items.append(([v], []))
        while len(items) >= 2:
            (vs1, es1) = items.pop()  # endpoint1 ... v
            (vs2, es2) = items.pop()  # endpoint2 ... v
            vs = vs1 + list(reversed(vs2))[1:]
            es = es1 + list(reversed(es2))
            paths.append(Path(tuple(vs), tuple(es)))
        if items and parent[v] is not None:
            pv, eid = parent[v]
            vs, es = items.pop()
            dangling[pv].append((vs + [pv], es + [eid]))
        elif items:
            raise AssertionError("odd dangling endpoint at the root")
    ps = PathSet(paths, 1)
    assert len(ps.paths) == len(endpoints) // 2
    assert ps.max_congestion() <= 1
    return ps


# ---------------------------------------------------------------------------
# Constructive certificate shared by the boosting procedures
# ---------------------------------------------------------------------------

@dataclass
class MergedCluster:
    vertices: frozenset[int]
    edges: frozenset[int]
    terminals: frozenset[int]
    center: int | None = None          # the chosen pseudo-center, if any


@dataclass
class PseudoCenterCertificate:
    """Edge-disjoint clusters, disjoint terminal sets, at most one verified
    pseudo-center each: the constructive witness of 1-well-linkedness for
    the set of chosen centers."""

    clusters: list[MergedCluster]
    q: int

    def chosen(self) -> list[int]:
        return [c.center for c in self.clusters if c.center is not None]

    def check_structure(self, g: MultiGraph, bridges: set[int]) -> None:
        seen_edges: set[int] = set()
        seen_terms: set[int] = set()
        for c in self.clusters:
            if seen_edges & c.edges:
                raise PostVerificationFailed("merged clusters share an edge")
            seen_edges |= c.edges
            if seen_terms & c.terminals:
                raise PostVerificationFailed("merged clusters share a terminal")
            seen_terms |= c.terminals
            if c.center is not None:
                ok, _, _, _ = is_pseudo_center(
                    g, c.vertices, c.edges, c.terminals, c.center, self.q, bridges)
                if not ok:
                    raise PostVerificationFailed(
                        f"chosen terminal {c.center} is not a pseudo-center")


def granularity_for(alpha: Fraction) -> int:
    """Smallest even q with q >= 4/alpha."""
    q = -(-4 * Fraction(alpha).denominator // Fraction(alpha).numerator)
    q = int(q)
    return q + (q % 2)


# ---------------------------------------------------------------------------
# Shared selection / tagging / merging machinery
# ---------------------------------------------------------------------------

def _greedy_reps(tset, cluster_of) -> list[int]:
    """At most one representative of this color per cluster, greedily."""
    used_clusters: set[int] = set()
    out = []
    for t in sorted(tset):
        h = cluster_of[t]
        if h in used_clusters:
            continue
        used_clusters.add(h)
        out.append(t)
    return out


def _route_in_edges(g: MultiGraph, s: int, t: int, allowed_edges: set[int]) -> Path:
    """BFS path from s to t using only the allowed edge ids."""
    prev: dict[int, int] = {s: -1}
    frontier = [s]
    while frontier and t not in prev:
        nxt = []
        for v in frontier:
            for eid in sorted(g.adjacency()[v]):
                if eid not in allowed_edges:
                    continue
                w = g.other_end(eid, v)
                if w not in prev:
                    prev[w] = eid
                    nxt.append(w)
        frontier = nxt
    if t not in prev:
        raise AssertionError("no route inside the merged cluster")
    es: list[int] = []
    cur = t
    while prev[cur] != -1:
        eid = prev[cur]
        es.append(eid)
        cur = g.other_end(eid, cur)
    es.reverse()
    vs = [s]
    for e in es:
        vs.append(g.other_end(e, vs[-1]))
    return Path(tuple(vs), tuple(es))


class _Tagger:
    """Pseudo-center checks + tag edges for a fixed clustering."""

    def __init__(self, g: MultiGraph, clusters: list[TerminalCluster], q: int):
        self.g = g
        self.q = q
        self.bridges = cut_edges(g)
        self.clusters = clusters
        self.cluster_edges = [
            frozenset(e for e in range(g.m)
                      if g.edges[e][0] in c.vertices and g.edges[e][1] in c.vertices)
            for c in clusters
        ]
        self.cluster_of: dict[int, int] = {}
        for i, c in enumerate(clusters):
            for v in c.vertices:
                self.cluster_of[v] = i
        self._pc_cache: dict[tuple[int, int], bool] = {}
        self._tag_cache: dict[tuple[int, int], tuple[int, int, int] | None] = {}

    def pseudo_center_ok(self, hi: int, t: int) -> bool:
        key = (hi, t)
        if key not in self._pc_cache:
            c = self.clusters[hi]
            ok, _, _, _ = is_pseudo_center(
                self.g, c.vertices, self.cluster_edges[hi], c.terminals,
                t, self.q, self.bridges)
            self._pc_cache[key] = ok
        return self._pc_cache[key]

    def tag_of(self, hi: int, t: int) -> tuple[int, int, int] | None:
        """None when t is already a pseudo-center of its cluster, else
        (tagged cluster index, tag edge id, entry vertex y)."""
        key = (hi, t)
        if key in self._tag_cache:
            return self._tag_cache[key]
        if self.pseudo_center_ok(hi, t):
            out = None
        else:
            c = self.clusters[hi]
            eid, _x, y = find_tag_edge(
                self.g, c.vertices, self.cluster_edges[hi], c.terminals,
                t, self.q, self.bridges)
            out = (self.cluster_of[y], eid, y)
        self._tag_cache[key] = out
        return out

    def merge_pair(self, hi: int, hj: int, host: int,
                   path: Path, e_i: int, e_j: int) -> MergedCluster:
        ci, cj = self.clusters[hi], self.clusters[hj]
        edges = set(self.cluster_edges[hi]) | set(self.cluster_edges[hj])
        edges |= {e_i, e_j}
        edges |= set(path.edges)
        verts = set(ci.vertices) | set(cj.vertices) | set(path.vertices)
        return MergedCluster(frozenset(verts), frozenset(edges),
                             ci.terminals | cj.terminals)

    def merge_whole(self, hi: int, host: int, eid: int) -> MergedCluster:
        ci, ch = self.clusters[hi], self.clusters[host]
        edges = set(self.cluster_edges[hi]) | set(self.cluster_edges[host]) | {eid}
        verts = set(ci.vertices) | set(ch.vertices)
        return MergedCluster(frozenset(verts), frozenset(edges),
                             ci.terminals | ch.terminals)

    def plain(self, hi: int) -> MergedCluster:
        c = self.clusters[hi]
        return MergedCluster(c.vertices, self.cluster_edges[hi], c.terminals)


def _greedy_independent(arcs: list[tuple[int, int]], nodes: list[int],
                        quota: dict[int, int], color: dict[int, int],
                        rng: random.Random) -> set[int] | None:
    """Greedy minimum-degree independent set in a digraph of out-degree at
    most 2, honoring per-color quotas.  Returns None when some quota cannot
    be met."""
    neigh: dict[int, set[int]] = {v: set() for v in nodes}
    for u, v in arcs:
        if u in neigh and v in neigh and u != v:
            neigh[u].add(v)
            neigh[v].add(u)
    alive = set(nodes)
    got: dict[int, int] = {c: 0 for c in quota}
    chosen: set[int] = set()
    while alive and any(got[c] < quota[c] for c in quota):
        candidates = [v for v in alive if got[color[v]] < quota[color[v]]]
        if not candidates:
            break
        v = min(candidates, key=lambda x: (len(neigh[x] & alive), x))
        chosen.add(v)
        got[color[v]] += 1
        removed = {v} | (neigh[v] & alive)
        alive -= removed
        if got[color[v]] >= quota[color[v]]:
            # a filled color's remaining vertices only eat other colors' room
            alive = {x for x in alive if color[x] != color[v]}
    if any(got[c] < quota[c] for c in quota):
        return None
    return chosen


# ---------------------------------------------------------------------------
# Boosting many terminal sets to joint 1-well-linkedness
# ---------------------------------------------------------------------------

@dataclass
class ManySetsResult:
    subsets: list[list[int]]            # chosen terminals per input set
    certificate: PseudoCenterCertificate


def group_many_sets(
    g: MultiGraph,
    terminal_sets: list,
    alpha: Fraction,
    profile: ParamProfile,
    seed: int = 0,
) -> ManySetsResult:
    """Select disjoint subsets of r terminal sets so their union becomes
    1-well-linked, given that the host is alpha-well-linked for the union.

    Pipeline: initial clustering at granularity q(alpha); randomized
    one-per-cluster representative selection (retried); tagging of
    non-pseudo-centers; color-quota independent set over the tag digraph;
    cluster merging along tag edges with tree-pairing inside multiply-tagged
    clusters; a-posteriori pseudo-center verification of every survivor.
    """
    r = len(terminal_sets)
    if r == 0:
        raise InvalidInstance("need at least one terminal set")
    union: list[int] = sorted(set(x for ts in terminal_sets for x in ts))
    q = granularity_for(alpha)
    if len(union) < q:
        raise InvalidInstance("terminal sets below the grouping granularity")
    clusters = initial_clustering(g, union, q)
    if len(clusters) < r:
        raise RetryBudgetExceeded(
            f"{len(clusters)} clusters cannot serve {r} terminal sets at "
            f"granularity {q}")
    tagger = _Tagger(g, clusters, q)
    rng = random.Random(seed)
    budget = profile.rep_retry_factor * max(1, r)
    last_error = None
    for _ in range(budget):
        try:
            return _many_sets_attempt(g, terminal_sets, tagger, q, rng, profile)
        except RetryBudgetExceeded:
            raise
        except (_AttemptFailed, PostVerificationFailed) as exc:
            last_error = exc
            continue
    raise RetryBudgetExceeded(f"representative selection failed: {last_error}")


class _AttemptFailed(Exception):
    pass


def _many_sets_attempt(g, terminal_sets, tagger: _Tagger, q, rng, profile):
    r = len(terminal_sets)
    # step 1: per-color candidates, then one random winner per cluster
    per_color = [
        _greedy_reps(ts, tagger.cluster_of) for ts in terminal_sets
    ]
    by_cluster: dict[int, list[tuple[int, int]]] = {}
    for j, reps in enumerate(per_color):
        for t in reps:
            by_cluster.setdefault(tagger.cluster_of[t], []).append((j, t))
    chosen: dict[int, tuple[int, int]] = {}
    for hi, cands in sorted(by_cluster.items()):
        chosen[hi] = cands[rng.randrange(len(cands))]
    counts = [0] * r
    for j, _t in chosen.values():
        counts[j] += 1
    demand = [max(1, len(per_color[j]) // (2 * r)) for j in range(r)]
    if any(counts[j] < demand[j] for j in range(r)):
        raise _AttemptFailed("a color lost all its representatives")

    # step 2: tagging
    tags: dict[int, tuple[int, int, int]] = {}
    for hi, (j, t) in sorted(chosen.items()):
        tg = tagger.tag_of(hi, t)
        if tg is not None:
            tags[hi] = tg

    # independent set over the tag digraph with per-color quotas
    nodes = sorted(chosen)
    color = {hi: chosen[hi][0] for hi in nodes}
    arcs = [(hi, tg[0]) for hi, tg in tags.items()]
    quota = {j: max(1, demand[j] // 6) for j in range(r)}
    ind = _greedy_independent(arcs, nodes, quota, color, rng)
    if ind is None:
        raise _AttemptFailed("independent set missed a color quota")

    merged, kept = _merge_tagged(g, tagger, ind, tags, chosen, rng)
    cert = PseudoCenterCertificate(merged, q)
    cert.check_structure(g, tagger.bridges)
    subsets: list[list[int]] = [[] for _ in range(r)]
    for hi, (j, t) in kept.items():
        subsets[j].append(t)
    if any(not s for s in subsets):
        raise _AttemptFailed("merging discarded a color entirely")
    return ManySetsResult([sorted(s) for s in subsets], cert)


def _merge_tagged(g, tagger: _Tagger, ind: set[int], tags, chosen, rng):
    """Merge the independent-set clusters along their tag edges.

    Returns (merged cluster list with centers set, kept cluster->rep map)."""
    merged: list[MergedCluster] = []
    kept: dict[int, tuple[int, int]] = {}

    by_target: dict[int, list[int]] = {}
    for hi in sorted(ind):
        if hi in tags:
            by_target.setdefault(tags[hi][0], []).append(hi)
        else:
            mc = tagger.plain(hi)
            j, t = chosen[hi]
            merged.append(MergedCluster(mc.vertices, mc.edges, mc.terminals, t))
            kept[hi] = (j, t)

    for host, taggers_list in sorted(by_target.items()):
        group = sorted(taggers_list)
        if len(group) == 1:
            hi = group[0]
            j, t = chosen[hi]
            mc = tagger.merge_whole(hi, host, tags[hi][1])
            merged.append(MergedCluster(mc.vertices, mc.edges, mc.terminals, t))
            kept[hi] = (j, t)
            continue
        if len(group) % 2:
            drop = group[rng.randrange(len(group))]
            group.remove(drop)
        entry = {hi: tags[hi][2] for hi in group}   # y vertices inside host
        host_edges = tagger.cluster_edges[host]
        sub_tree = _spanning_edges(g, tagger.clusters[host].vertices, host_edges)
        pairing = tree_pairing(g, sub_tree, [entry[hi] for hi in group])
        # match paths back to cluster pairs by endpoints
        remaining = list(group)
        for path in pairing.paths:
            a, b = path.vertices[0], path.vertices[-1]
            hi = next(h for h in remaining if entry[h] == a)
            remaining.remove(hi)
            hj = next(h for h in remaining if entry[h] == b)
            remaining.remove(hj)
            mc = tagger.merge_pair(hi, hj, host, path, tags[hi][1], tags[hj][1])
            pick = hi if rng.random() < 0.5 else hj
            j, t = chosen[pick]
            merged.append(MergedCluster(mc.vertices, mc.edges, mc.terminals, t))
            kept[pick] = (j, t)
    return merged, kept


def _spanning_edges(g: MultiGraph, vertices, allowed_edges) -> set[int]:
    verts = set(vertices)
    root = min(verts)
    seen = {root}
    tree: set[int] = set()
    frontier = [root]
    while frontier:
        nxt = []
        for v in frontier:
            for eid in sorted(g.adjacency()[v]):
                if eid not in allowed_edges:
                    continue
                w = g.other_end(eid, v)
                if w in verts and w not in seen:
                    seen.add(w)
                    tree.add(eid)
                    nxt.append(w)
        frontier = nxt
    if seen != verts:
        raise InvalidInstance("cluster is not connected")
    return tree


# ---------------------------------------------------------------------------
# Matching-aware boosting (routing or pair-closed subsets)
# ---------------------------------------------------------------------------

@dataclass
class AdvancedRouting:
    routed: list[tuple[tuple[int, int], Path]]


@dataclass
class AdvancedSubsets:
    t1: list[int]
    t2: list[int]
    pairs: list[tuple[int, int]]
    certificate: PseudoCenterCertificate


def group_advanced(
    g: MultiGraph,
    matching: list[tuple[int, int]],
    t2_set,
    alpha: Fraction,
    profile: ParamProfile,
    seed: int = 0,
) -> AdvancedRouting | AdvancedSubsets:
    """Either route a constant fraction of the matched pairs edge-disjointly,
    or return disjoint subsets T1' (pair-closed) and T2' of the two terminal
    families whose union is 1-well-linked (constructively certified).

    ``matching`` is a perfect matching over the first terminal family; the
    second family may be empty.
    """
    t1 = sorted({x for st in matching for x in st})
    t2 = sorted(set(t2_set))
    if set(t1) & set(t2):
        raise InvalidInstance("terminal families must be disjoint")
    union = sorted(set(t1) | set(t2))
    q = granularity_for(alpha)
    if len(union) < q:
        raise InvalidInstance("terminal sets below the grouping granularity")
    clusters = initial_clustering(g, union, q)
    tagger = _Tagger(g, clusters, q)
    rng = random.Random(seed)
    budget = profile.rep_retry_factor * 2
    last_error = None
    for _ in range(budget):
        try:
            return _advanced_attempt(g, matching, t2, tagger, q, rng)
        except (_AttemptFailed, PostVerificationFailed) as exc:
            last_error = exc
            continue
    raise RetryBudgetExceeded(f"advanced grouping failed: {last_error}")


def _advanced_attempt(g, matching, t2, tagger: _Tagger, q, rng):
    cluster_of = tagger.cluster_of

    # --- step 1: matching-aware red selection + blue representatives -------
    removed_clusters: set[int] = set()
    m1: list[tuple[int, int]] = []
    same_cluster: list[tuple[int, int]] = []
    for (s, t) in sorted(matching):
        hs, ht = cluster_of[s], cluster_of[t]
        if hs in removed_clusters or ht in removed_clusters:
            continue
        if hs == ht:
            same_cluster.append((s, t))
            removed_clusters.add(hs)
        else:
            m1.append((s, t))
            removed_clusters.update((hs, ht))
    if len(same_cluster) * 2 >= len(same_cluster) + len(m1):
        routed = []
        for (s, t) in same_cluster:
            hi = cluster_of[s]
            routed.append(((s, t), _route_in_edges(
                g, s, t, set(tagger.cluster_edges[hi]))))
        _assert_edge_disjoint(routed)
        return AdvancedRouting(routed)

    blue_reps = [t for t in _greedy_reps(t2, cluster_of)
                 if cluster_of[t] not in removed_clusters or True]
    # mixed clusters hold both a surviving red terminal and a blue candidate
    red_cluster_of: dict[int, tuple[int, int]] = {}
    for (s, t) in m1:
        red_cluster_of[cluster_of[s]] = (s, t)
        red_cluster_of[cluster_of[t]] = (s, t)
    blue_by_cluster = {cluster_of[t]: t for t in blue_reps}
    mixed = sorted(set(red_cluster_of) & set(blue_by_cluster))
    side1: set[int] = set()
    side2: set[int] = set()
    for hi in mixed:
        if hi in side1 or hi in side2:
            continue
        s, t = red_cluster_of[hi]
        partner_h = cluster_of[t] if cluster_of[s] == hi else cluster_of[s]
        both = [hi] + ([partner_h] if partner_h in set(mixed) else [])
        target = side1 if len(side1) <= len(side2) else side2
        target.update(both)
    blue_final = [t for t in blue_reps if cluster_of[t] not in side1]
    drop_pairs = {red_cluster_of[hi] for hi in side2 if hi in red_cluster_of}
    m1 = [p for p in m1 if p not in drop_pairs]
    if not m1:
        raise _AttemptFailed("mixed-cluster resolution dropped every pair")

    # --- step 2: tagging ----------------------------------------------------
    reps: dict[int, int] = {}   # cluster -> representative terminal
    for (s, t) in m1:
        reps[cluster_of[s]] = s
        reps[cluster_of[t]] = t
    for t in blue_final:
        if cluster_of[t] not in reps:
            reps[cluster_of[t]] = t
    blue_clusters = {cluster_of[t] for t in blue_final if reps.get(cluster_of[t]) == t}
    tags: dict[int, tuple[int, int, int]] = {}
    for hi, t in sorted(reps.items()):
        tg = tagger.tag_of(hi, t)
        if tg is not None:
            tags[hi] = tg

    good_pairs = []
    for (s, t) in m1:
        hs, ht = cluster_of[s], cluster_of[t]
        if (hs in tags and tags[hs][0] == ht) or (ht in tags and tags[ht][0] == hs):
            good_pairs.append((s, t))
    if len(good_pairs) * 2 >= len(m1):
        routed = []
        for (s, t) in good_pairs:
            hs, ht = cluster_of[s], cluster_of[t]
            if hs in tags and tags[hs][0] == ht:
                eid = tags[hs][1]
            else:
                eid = tags[ht][1]
            allowed = set(tagger.cluster_edges[hs]) | set(tagger.cluster_edges[ht]) | {eid}
            routed.append(((s, t), _route_in_edges(g, s, t, allowed)))
        _assert_edge_disjoint(routed)
        return AdvancedRouting(routed)
    m1 = [p for p in m1 if p not in set(good_pairs)]
    if not m1:
        raise _AttemptFailed("all pairs were tag-adjacent")

    # --- independent set over pair/blue nodes -------------------------------
    pair_nodes = list(range(len(m1)))
    blue_list = sorted(blue_clusters)
    blue_nodes = [len(m1) + i for i in range(len(blue_list))]
    node_clusters: dict[int, list[int]] = {}
    for i, (s, t) in enumerate(m1):
        node_clusters[i] = [cluster_of[s], cluster_of[t]]
    for i, hb in enumerate(blue_list):
        node_clusters[len(m1) + i] = [hb]
    owner_node: dict[int, int] = {}
    for node, hs in node_clusters.items():
        for h in hs:
            owner_node[h] = node
    arcs = []
    for node, hs in node_clusters.items():
        for h in hs:
            if h in tags:
                tgt = tags[h][0]
                if tgt in owner_node:
                    arcs.append((node, owner_node[tgt]))
    color = {n: 0 for n in pair_nodes}
    color.update({n: 1 for n in blue_nodes})
    quota = {0: max(1, len(pair_nodes) // 24)}
    if blue_nodes:
        quota[1] = max(1, len(blue_nodes) // 24)
    ind = _greedy_independent(arcs, pair_nodes + blue_nodes, quota, color, rng)
    if ind is None:
        raise _AttemptFailed("independent set missed a quota")
    m_star = [m1[i] for i in sorted(n for n in ind if n < len(m1))]
    blue_star = [blue_list[n - len(m1)] for n in sorted(ind) if n >= len(m1)]

    # --- step 3: merging with odd-group discards ----------------------------
    result = _advanced_merge(g, tagger, m_star, blue_star, reps, tags, rng, q)
    if result is None:
        raise _AttemptFailed("merging starved the pair set")
    return result


def _assert_edge_disjoint(routed):
    seen: set[int] = set()
    for _pair, path in routed:
        for e in path.edges:
            assert e not in seen, "routing branch must be edge-disjoint"
            seen.add(e)


def _advanced_merge(g, tagger: _Tagger, m_star, blue_star, reps, tags, rng, q):
    cluster_of = tagger.cluster_of
    star_clusters = set(blue_star)
    pair_of_cluster: dict[int, tuple[int, int]] = {}
    for (s, t) in m_star:
        star_clusters.add(cluster_of[s])
        star_clusters.add(cluster_of[t])
        pair_of_cluster[cluster_of[s]] = (s, t)
        pair_of_cluster[cluster_of[t]] = (s, t)

    groups: dict[int, list[int]] = {}
    untagged: list[int] = []
    for hi in sorted(star_clusters):
        if hi in tags:
            groups.setdefault(tags[hi][0], []).append(hi)
        else:
            untagged.append(hi)

    m_alive = set(m_star)

    def is_red(hi):
        return hi in pair_of_cluster

    def discard_cluster(hi, host):
        groups[host].remove(hi)
        if is_red(hi):
            pr = pair_of_cluster.get(hi)
            if pr in m_alive:
                m_alive.discard(pr)

    # odd groups: drop a blue when possible
    for host in sorted(groups):
        grp = groups[host]
        if len(grp) % 2 == 0 or len(grp) == 1:
            continue
        blues = sorted(h for h in grp if not is_red(h))
        if blues:
            discard_cluster(blues[0], host)

    def odd_hosts():
        return [h for h in sorted(groups) if len(groups[h]) % 2 and len(groups[h]) > 1]

    # stage 1: cancel pairs spanning two odd groups
    changed = True
    while changed:
        changed = False
        odds = odd_hosts()
        odd_set = set(odds)
        for host in odds:
            if len(groups[host]) % 2 == 0 or len(groups[host]) == 1:
                continue
            for hi in sorted(groups[host]):
                if not is_red(hi):
                    continue
                (s, t) = pair_of_cluster[hi]
                if (s, t) not in m_alive:
                    discard_cluster(hi, host)
                    changed = True
                    break
                other = cluster_of[t] if cluster_of[s] == hi else cluster_of[s]
                other_host = tags.get(other, (None,))[0]
                if other_host is not None and other_host in odd_set and other_host != host \
                        and other in groups.get(other_host, []):
                    discard_cluster(hi, host)
                    discard_cluster(other, other_host)
                    changed = True
                    break
            if changed:
                break
    # stage 2: remaining odd groups drop one red whose partner is not inside
    # any odd group
    for host in odd_hosts():
        grp = groups[host]
        odd_set = set(odd_hosts())
        done = False
        for hi in sorted(grp):
            if not is_red(hi):
                continue
            (s, t) = pair_of_cluster[hi]
            other = cluster_of[t] if cluster_of[s] == hi else cluster_of[s]
            other_host = tags.get(other, (None,))[0]
            if other_host is None or other_host not in odd_set:
                discard_cluster(hi, host)
                if other in groups.get(other_host, []) and other_host is not None:
                    discard_cluster(other, other_host)
                done = True
                break
        if not done:
            # fall back: drop the smallest member
            discard_cluster(sorted(grp)[0], host)

    # drop clusters whose pairs died
    for host in sorted(groups):
        for hi in list(groups[host]):
            if is_red(hi) and pair_of_cluster[hi] not in m_alive:
                discard_cluster(hi, host)
    alive_clusters = set()
    for (s, t) in m_alive:
        alive_clusters.update((cluster_of[s], cluster_of[t]))
    alive_clusters.update(h for h in blue_star)

    # --- merge ---------------------------------------------------------------
    merged: list[MergedCluster] = []
    potential: dict[int, list[int]] = {}  # merged index -> candidate centers

    def add_merged(mc: MergedCluster, cands):
        potential[len(merged)] = [c for c in cands]
        merged.append(mc)

    for hi in untagged:
        if hi not in alive_clusters:
            continue
        add_merged(tagger.plain(hi), [reps[hi]])
    for host in sorted(groups):
        grp = [h for h in sorted(groups[host]) if h in alive_clusters]
        if not grp:
            continue
        if len(grp) == 1:
            hi = grp[0]
            add_merged(tagger.merge_whole(hi, host, tags[hi][1]), [reps[hi]])
            continue
        if len(grp) % 2:
            hi = grp[0]
            discard_cluster(hi, host)
            if is_red(hi):
                grp = [h for h in grp if h in
                       {cluster_of[a] for p in m_alive for a in p} | set(blue_star)]
            else:
                grp.remove(hi)
            if len(grp) % 2:
                grp = grp[:-1]
        if not grp:
            continue
        entry = {hi: tags[hi][2] for hi in grp}
        sub_tree = _spanning_edges(g, tagger.clusters[host].vertices,
                                   tagger.cluster_edges[host])
        pairing = tree_pairing(g, sub_tree, [entry[hi] for hi in grp])
        remaining = list(grp)
        for path in pairing.paths:
            a, b = path.vertices[0], path.vertices[-1]
            hi = next(h for h in remaining if entry[h] == a)
            remaining.remove(hi)
            hj = next(h for h in remaining if entry[h] == b)
            remaining.remove(hj)
            mc = tagger.merge_pair(hi, hj, host, path, tags[hi][1], tags[hj][1])
            add_merged(mc, [reps[hi], reps[hj]])

    # --- step 4: select at most one pseudo-center per merged cluster --------
    merged_of: dict[int, int] = {}
    for mi, cands in potential.items():
        for c in cands:
            merged_of[c] = mi

    m_alive = {p for p in m_alive
               if p[0] in merged_of and p[1] in merged_of}
    same = [p for p in m_alive if merged_of[p[0]] == merged_of[p[1]]]
    if len(same) * 2 >= max(1, len(m_alive)) and same:
        routed = []
        for (s, t) in same:
            mc = merged[merged_of[s]]
            routed.append(((s, t), _route_in_edges(g, s, t, set(mc.edges))))
        _assert_edge_disjoint(routed)
        return AdvancedRouting(routed)
    m_alive -= set(same)

    used_red: set[int] = set()
    m_final: list[tuple[int, int]] = []
    for (s, t) in sorted(m_alive):
        ms, mt = merged_of[s], merged_of[t]
        if ms in used_red or mt in used_red:
            continue
        m_final.append((s, t))
        used_red.update((ms, mt))

    blue_alive = [reps[h] for h in blue_star if reps[h] in merged_of]
    blue_by_merged: dict[int, list[int]] = {}
    for b in blue_alive:
        blue_by_merged.setdefault(merged_of[b], []).append(b)
    blue_final = [min(bs) for mi, bs in sorted(blue_by_merged.items())]

    # mixed merged clusters: one kept red pc + one blue pc
    red_terms = {x for p in m_final for x in p}
    mixed_merged = sorted({merged_of[b] for b in blue_final}
                          & {merged_of[x] for x in red_terms})
    side1: set[int] = set()
    side2: set[int] = set()
    for mi in mixed_merged:
        if mi in side1 or mi in side2:
            continue
        xs = [x for x in red_terms if merged_of[x] == mi]
        grp = {mi}
        for x in xs:
            pr = next(p for p in m_final if x in p)
            other = pr[0] if pr[1] == x else pr[1]
            if merged_of[other] in mixed_merged:
                grp.add(merged_of[other])
        target = side1 if len(side1) <= len(side2) else side2
        target.update(grp)
    blue_final = [b for b in blue_final if merged_of[b] not in side1]
    m_final = [p for p in m_final
               if merged_of[p[0]] not in side2 and merged_of[p[1]] not in side2]
    if not m_final:
        return None

    centers: dict[int, int] = {}
    for (s, t) in m_final:
        centers[merged_of[s]] = s
        centers[merged_of[t]] = t
    for b in blue_final:
        if merged_of[b] not in centers:
            centers[merged_of[b]] = b
        else:
            blue_final = [x for x in blue_final if x != b]
    final_clusters = []
    for mi, mc in enumerate(merged):
        c = centers.get(mi)
        final_clusters.append(MergedCluster(mc.vertices, mc.edges, mc.terminals, c))
    cert = PseudoCenterCertificate(final_clusters, q)
    cert.check_structure(g, tagger.bridges)

    t1_out = sorted(x for p in m_final for x in p)
    return AdvancedSubsets(t1_out, sorted(blue_final), m_final, cert)
