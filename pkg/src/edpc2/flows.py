"""Exact integral max-flow, path extraction, and the edge-set routing relation.

Everything is built on one Dinic core over an arc-pair network.  Undirected
graph edges become arc pairs whose two directions share capacity through the
usual residual bookkeeping, each tagged with the originating edge id so that
flows decompose into explicit walks over edge ids (parallel edges keep their
identity).  ``route_set`` realizes the relation "every edge of E1 sends one
unit to E2 with congestion eta" (optionally 1:1 and optionally contained in
a vertex set) and, on failure, extracts the cut witnessing infeasibility.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import InvalidInstance
from .graphs import MultiGraph


@dataclass(frozen=True)
class Path:
    """A walk: edge id ``edges[i]`` connects ``vertices[i]`` and ``vertices[i+1]``."""

    vertices: tuple[int, ...]
    edges: tuple[int, ...]

    def __post_init__(self):
        if len(self.vertices) != len(self.edges) + 1:
            raise ValueError("walk shape mismatch")

    @property
    def first_edge(self) -> int:
        return self.edges[0]

    @property
    def last_edge(self) -> int:
        return self.edges[-1]

    def reversed(self) -> "Path":
        return Path(tuple(reversed(self.vertices)), tuple(reversed(self.edges)))

    def is_simple(self) -> bool:
        return len(set(self.vertices)) == len(self.vertices)


@dataclass
class PathSet:
    """Paths with congestion accounting."""

    paths: list[Path]
    eta: int = 1

    def load(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for p in self.paths:
            for e in p.edges:
                out[e] = out.get(e, 0) + 1
        return out

    def max_congestion(self) -> int:
        ld = self.load()
        return max(ld.values()) if ld else 0

    def first_edges(self) -> list[int]:
        return [p.first_edge for p in self.paths if p.edges]

    def last_edges(self) -> list[int]:
        return [p.last_edge for p in self.paths if p.edges]


@dataclass
class CutResult:
    """A vertex cut with its crossing edges and (optional) sparsity."""

    side_a: set[int]
    crossing: set[int]
    sparsity: Fraction | None = None


@dataclass
class FlowSolution:
    """Flow decomposed into weighted walks."""

    paths: list[tuple[Path, Fraction]]
    value: Fraction

    def load(self) -> dict[int, Fraction]:
        out: dict[int, Fraction] = {}
        for p, w in self.paths:
            for e in p.edges:
                out[e] = out.get(e, Fraction(0)) + w
        return out


@dataclass
class RouteFailure:
    """Witness that the requested routing relation is infeasible.

    ``side_x`` is the residual-reachable part of the host vertex set, ``t1``
    the source edges anchored in X, ``t2`` the sink edges anchored in Y, and
    ``crossing`` the internal cut edges between X and Y."""

    side_x: set[int]
    side_y: set[int]
    t1: set[int]
    t2: set[int]
    crossing: set[int]
    flow_value: int
    demand: int


class FlowNetwork:
    """Arc-pair residual network with tagged arcs and Dinic max-flow."""

    def __init__(self, num_nodes: int):
        self.n = num_nodes
        self.head: list[list[int]] = [[] for _ in range(num_nodes)]
        self.to: list[int] = []
        self.cap: list[int] = []
        self.cap0: list[int] = []
        self.tag: list[tuple | None] = []

    def add_node(self) -> int:
        self.head.append([])
        self.n += 1
        return self.n - 1

    def add_arc(self, u: int, v: int, cap_fwd: int, cap_bwd: int = 0, tag=None) -> int:
        i = len(self.to)
        self.to.extend((v, u))
        self.cap.extend((cap_fwd, cap_bwd))
        self.cap0.extend((cap_fwd, cap_bwd))
        self.tag.extend((tag, tag))
        self.head[u].append(i)
        self.head[v].append(i + 1)
        return i

    def max_flow(self, s: int, t: int, limit: int | None = None) -> int:
        total = 0
        to, cap, head = self.to, self.cap, self.head
        while limit is None or total < limit:
            level = [-1] * self.n
            level[s] = 0
            frontier = [s]
            while frontier and level[t] == -1:
                nxt = []
                for v in frontier:
                    for a in head[v]:
                        w = to[a]
                        if cap[a] > 0 and level[w] == -1:
                            level[w] = level[v] + 1
                            nxt.append(w)
                frontier = nxt
            if level[t] == -1:
                break
            it = [0] * self.n
            stack = [s]
            path_arcs: list[int] = []
            while stack:
                v = stack[-1]
                if v == t:
                    pushed = min(cap[a] for a in path_arcs)
                    for a in path_arcs:
                        cap[a] -= pushed
                        cap[a ^ 1] += pushed
                    total += pushed
                    cut_at = next(i for i, a in enumerate(path_arcs) if cap[a] == 0)
                    del stack[cut_at + 1:]
                    del path_arcs[cut_at:]
                    if limit is not None and total >= limit:
                        return total
                    continue
                advanced = False
                while it[v] < len(head[v]):
                    a = head[v][it[v]]
                    w = to[a]
                    if cap[a] > 0 and level[w] == level[v] + 1:
                        stack.append(w)
                        path_arcs.append(a)
                        advanced = True
                        break
                    it[v] += 1
                if not advanced:
                    level[v] = -1
                    stack.pop()
                    if path_arcs:
                        path_arcs.pop()
        return total

    def residual_reachable(self, s: int) -> set[int]:
        seen = {s}
        stack = [s]
        while stack:
            v = stack.pop()
            for a in self.head[v]:
                w = self.to[a]
                if self.cap[a] > 0 and w not in seen:
                    seen.add(w)
                    stack.append(w)
        return seen

    def used_units(self) -> list[int]:
        """Net positive per-arc usage after cancelling opposite directions."""
        used = [0] * len(self.to)
        for a in range(len(self.to)):
            # cap[a] + cap[a^1] is invariant, so this is the net flow and at
            # most one direction of a pair is positive
            used[a] = max(0, self.cap0[a] - self.cap[a])
        return used

    def decompose_walks(self, s: int, t: int, value: int) -> list[list[int]]:
        """Split the current flow into ``value`` unit walks (arc-index lists).

        At every node a unit finishes if a sink arc still carries units,
        otherwise it takes the interior arc with the smallest edge id (the
        deterministic tie-break used throughout the toolkit).
        """
        used = self.used_units()
        order: list[list[int]] = []
        for v in range(self.n):
            arcs = [a for a in self.head[v] if used[a] > 0]
            arcs.sort(key=lambda a: _tag_rank(self.tag[a]))
            order.append(arcs)
        ptr = [0] * self.n
        walks = []
        for _ in range(value):
            walk: list[int] = []
            v = s
            guard = 0
            budget = 4 * len(self.to) + 8
            while v != t:
                guard += 1
                if guard > budget:
                    raise AssertionError("flow decomposition failed to reach sink")
                a_sel = None
                for a in order[v]:
                    if used[a] > 0:
                        a_sel = a
                        break
                if a_sel is None:
                    raise AssertionError("flow conservation violated in decomposition")
                used[a_sel] -= 1
                walk.append(a_sel)
                v = self.to[a_sel]
            walks.append(walk)
        return walks


def _tag_rank(tag) -> tuple:
    # sink arcs first (finish units eagerly), then interior edges by id
    if tag is None:
        return (3, 0)
    kind, val = tag
    if kind == "snk":
        return (0, val)
    if kind == "edge":
        return (1, val)
    return (2, val)


# ---------------------------------------------------------------------------
# Walk conversion helpers
# ---------------------------------------------------------------------------

def _simplify_walk(vertices: list[int], edges: list[int]) -> Path:
    """Cut loops so the walk becomes a simple path with the same endpoints."""
    pos: dict[int, int] = {}
    vs: list[int] = []
    es: list[int] = []
    for i, v in enumerate(vertices):
        if v in pos:
            j = pos[v]
            for w in vs[j + 1:]:
                pos.pop(w, None)
            del vs[j + 1:]
            del es[j:]
        else:
            pos[v] = len(vs)
            vs.append(v)
        if i < len(edges):
            es.append(edges[i])
    return Path(tuple(vs), tuple(es))


def _rebuild_vertices(g: MultiGraph, es: list[int], start: int) -> list[int]:
    vs = [start]
    for e in es:
        vs.append(g.other_end(e, vs[-1]))
    return vs


def _arc_walk_to_path(net: FlowNetwork, walk: list[int], g: MultiGraph) -> Path:
    """Convert an arc walk into a simple Path over graph edge ids.

    Consecutive duplicate edge ids (the two halves of a subdivided edge) are
    merged; net cancellation makes a genuine immediate double-traversal
    impossible.
    """
    es: list[int] = []
    first_real = None
    src_into_real = None
    for a in walk:
        tag = net.tag[a]
        dst = net.to[a]
        if first_real is None and dst < g.n:
            first_real = dst
        if tag is None:
            continue
        kind, val = tag
        if kind == "src":
            if dst < g.n:
                src_into_real = dst
            continue
        if kind == "snk":
            break
        if kind == "edge":
            if es and es[-1] == val:
                continue
            es.append(val)
    if not es:
        raise AssertionError("empty walk in flow decomposition")
    if src_into_real is not None:
        start = src_into_real
    elif first_real is not None:
        start = g.other_end(es[0], first_real)
    else:
        start = g.edges[es[0]][0]
    vs = _rebuild_vertices(g, es, start)
    return _simplify_walk(vs, es)


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------

def max_flow(
    g: MultiGraph,
    sources,
    sinks,
    cap: int = 1,
    *,
    source_kind: str = "vertices",
    sink_kind: str = "vertices",
    unit_sources: bool = False,
    unit_sinks: bool = False,
    limit: int | None = None,
) -> tuple[FlowSolution, CutResult]:
    """Integral max-flow between vertex or edge sets with a certifying cut.

    Every graph edge has capacity ``cap``.  Vertex terminals attach to the
    super source/sink with unlimited capacity unless ``unit_sources`` /
    ``unit_sinks`` restricts them to one unit each.  Edge terminals send or
    receive one unit per edge, entering the graph at either endpoint of the
    (subdivided) edge.
    """
    sources = sorted(set(sources))
    sinks = sorted(set(sinks))
    net = FlowNetwork(g.n + 2)
    s_node, t_node = g.n, g.n + 1
    mid_of: dict[int, int] = {}
    special = set()
    if source_kind == "edges":
        special.update(sources)
    if sink_kind == "edges":
        special.update(sinks)
    for eid, (u, v) in enumerate(g.edges):
        if eid in special:
            mid = net.add_node()
            mid_of[eid] = mid
            net.add_arc(u, mid, cap, cap, ("edge", eid))
            net.add_arc(mid, v, cap, cap, ("edge", eid))
        else:
            net.add_arc(u, v, cap, cap, ("edge", eid))
    big = cap * (g.m + 1) + 1
    if source_kind == "vertices":
        for v in sources:
            net.add_arc(s_node, v, 1 if unit_sources else big, 0, ("src", v))
    else:
        for eid in sources:
            net.add_arc(s_node, mid_of[eid], 1, 0, ("src", eid))
    if sink_kind == "vertices":
        for v in sinks:
            net.add_arc(v, t_node, 1 if unit_sinks else big, 0, ("snk", v))
    else:
        for eid in sinks:
            net.add_arc(mid_of[eid], t_node, 1, 0, ("snk", eid))

    value = net.max_flow(s_node, t_node, limit=limit)
    walks = net.decompose_walks(s_node, t_node, value)
    paths = [(_arc_walk_to_path(net, w, g), Fraction(1)) for w in walks]
    reach = net.residual_reachable(s_node)
    side_a = {v for v in range(g.n) if v in reach}
    crossing = {
        eid for eid, (u, v) in enumerate(g.edges) if (u in side_a) != (v in side_a)
    }
    return FlowSolution(paths, Fraction(value)), CutResult(side_a, crossing)


def max_flow_value(g: MultiGraph, sources, sinks, cap: int = 1, **kw) -> int:
    """Value-only variant (skips decomposition)."""
    kw.setdefault("source_kind", "vertices")
    kw.setdefault("sink_kind", "vertices")
    sol, _ = max_flow(g, sources, sinks, cap, **kw)
    return int(sol.value)


def route_set(
    g: MultiGraph,
    e1,
    e2,
    eta: int,
    one_to_one: bool = True,
    within: set[int] | None = None,
):
    """Route one unit from every edge of ``e1`` to the edges of ``e2``.

    Success returns a :class:`PathSet` whose paths start with the ``e1``
    edges (one each), end at ``e2`` edges (distinct ones under
    ``one_to_one``), respect per-edge congestion ``eta`` and, when ``within``
    is given, stay inside that vertex set except for their first and last
    edges.  Failure returns a :class:`RouteFailure` carrying the certifying
    cut.
    """
    e1 = sorted(set(e1))
    e2 = sorted(set(e2))
    if one_to_one and len(e1) > len(e2):
        raise InvalidInstance("one-to-one routing needs |E1| <= |E2|")
    if eta < 1:
        raise InvalidInstance("eta must be >= 1")
    if within is not None:
        return _route_within(g, e1, e2, eta, one_to_one, set(within))

    sol, cut = max_flow(g, e1, e2, cap=eta, source_kind="edges", sink_kind="edges")
    if sol.value < len(e1):
        y = set(range(g.n)) - cut.side_a
        t1 = {e for e in e1 if _anchored_in(g, e, cut.side_a)}
        t2 = {e for e in e2 if _anchored_in(g, e, y)}
        return RouteFailure(cut.side_a, y, t1, t2, cut.crossing, int(sol.value), len(e1))
    ps = PathSet([p for p, _ in sol.paths], eta)
    assert ps.max_congestion() <= eta
    return ps


def _anchored_in(g: MultiGraph, eid: int, side: set[int]) -> bool:
    u, v = g.edges[eid]
    return u in side or v in side


def cluster_anchor(g: MultiGraph, eid: int, s_set: set[int]) -> int:
    """The endpoint of a boundary edge inside the cluster."""
    u, v = g.edges[eid]
    inu, inv = u in s_set, v in s_set
    if inu == inv:
        raise InvalidInstance(f"edge {eid} is not a boundary edge of the cluster")
    return u if inu else v


def _route_within(g, e1, e2, eta, one_to_one, s_set):
    nodes = sorted(s_set)
    idx = {v: i for i, v in enumerate(nodes)}
    net = FlowNetwork(len(nodes) + 2)
    s_node, t_node = len(nodes), len(nodes) + 1
    for eid, (u, v) in enumerate(g.edges):
        if u in s_set and v in s_set:
            net.add_arc(idx[u], idx[v], eta, eta, ("edge", eid))
    for eid in e1:
        net.add_arc(s_node, idx[cluster_anchor(g, eid, s_set)], 1, 0, ("src", eid))
    sink_cap = 1 if one_to_one else eta
    for eid in e2:
        net.add_arc(idx[cluster_anchor(g, eid, s_set)], t_node, sink_cap, 0, ("snk", eid))

    value = net.max_flow(s_node, t_node)
    if value < len(e1):
        reach = net.residual_reachable(s_node)
        x = {nodes[i] for i in reach if i < len(nodes)}
        y = s_set - x
        t1 = {e for e in e1 if cluster_anchor(g, e, s_set) in x}
        t2 = {e for e in e2 if cluster_anchor(g, e, s_set) in y}
        crossing = {
            eid for eid, (u, v) in enumerate(g.edges)
            if (u in x and v in y) or (u in y and v in x)
        }
        return RouteFailure(x, y, t1, t2, crossing, value, len(e1))

    walks = net.decompose_walks(s_node, t_node, value)
    paths = []
    for walk in walks:
        first_tag, last_tag = net.tag[walk[0]], net.tag[walk[-1]]
        assert first_tag[0] == "src" and last_tag[0] == "snk"
        e_first, e_last = first_tag[1], last_tag[1]
        es = [e_first]
        for a in walk[1:-1]:
            tag = net.tag[a]
            if tag is not None and tag[0] == "edge":
                es.append(tag[1])
        if e_last != e_first:
            es.append(e_last)
        else:
            # sink-first decomposition finishes a unit at its entry anchor
            assert len(es) == 1
        start = g.other_end(e_first, cluster_anchor(g, e_first, s_set))
        vs = _rebuild_vertices(g, es, start)
        paths.append(_simplify_walk(vs, es))
    ps = PathSet(paths, eta)
    assert ps.max_congestion() <= eta
    return ps
