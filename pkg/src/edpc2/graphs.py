"""Undirected multigraph with stable edge ids, normalization, and structural queries.

Every module in the toolkit operates on :class:`MultiGraph`.  Vertices are
integers ``0..n-1``; every edge (parallel edges allowed) carries a distinct
integer id equal to its index in ``edges``.  Demands are pairs of terminal
vertices.  Instances are normalized so that every terminal has degree 1 and
participates in exactly one demand pair, and every non-terminal vertex has
degree at most 4.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import InvalidInstance


@dataclass(frozen=True)
class MultiGraph:
    """Immutable undirected multigraph with terminal marks and demand pairs.

    Attributes:
        n: number of vertices (ids 0..n-1).
        edges: tuple of (u, v) pairs; the index of a pair is the edge id.
        terminals: vertices marked as terminals.
        demands: tuple of (s, t) terminal pairs.
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    terminals: frozenset[int] = frozenset()
    demands: tuple[tuple[int, int], ...] = ()
    provenance: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        for eid, (u, v) in enumerate(self.edges):
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise InvalidInstance(f"edge {eid} endpoint out of range")
            if u == v:
                raise InvalidInstance(f"edge {eid} is a self-loop")
        for s, t in self.demands:
            if not (0 <= s < self.n and 0 <= t < self.n):
                raise InvalidInstance("demand endpoint missing from graph")
            if s == t:
                raise InvalidInstance("demand endpoints must be distinct")

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def k(self) -> int:
        return len(self.demands)

    def adjacency(self) -> list[list[int]]:
        """Per-vertex list of incident edge ids (parallel edges repeated,
        each id appears once per endpoint)."""
        if "adj" not in self.provenance:
            adj: list[list[int]] = [[] for _ in range(self.n)]
            for eid, (u, v) in enumerate(self.edges):
                adj[u].append(eid)
                adj[v].append(eid)
            self.provenance["adj"] = adj
        return self.provenance["adj"]

    def degree(self, v: int) -> int:
        return len(self.adjacency()[v])

    def other_end(self, eid: int, v: int) -> int:
        u, w = self.edges[eid]
        if v == u:
            return w
        if v == w:
            return u
        raise ValueError(f"vertex {v} not on edge {eid}")

    def neighbors(self, v: int) -> list[int]:
        return [self.other_end(e, v) for e in self.adjacency()[v]]

    def demand_of_terminal(self) -> dict[int, int]:
        """Map terminal -> index of its demand pair (normalized instances)."""
        owner: dict[int, int] = {}
        for i, (s, t) in enumerate(self.demands):
            owner[s] = i
            owner[t] = i
        return owner


def out_edges(g: MultiGraph, s: Iterable[int]) -> set[int]:
    """Edge ids with exactly one endpoint in ``s``."""
    sset = set(s)
    return {
        eid
        for eid, (u, v) in enumerate(g.edges)
        if (u in sset) != (v in sset)
    }


def induced_edges(g: MultiGraph, s: Iterable[int]) -> set[int]:
    """Edge ids with both endpoints in ``s``."""
    sset = set(s)
    return {eid for eid, (u, v) in enumerate(g.edges) if u in sset and v in sset}


def edges_between(g: MultiGraph, a: Iterable[int], b: Iterable[int]) -> set[int]:
    aset, bset = set(a), set(b)
    return {
        eid
        for eid, (u, v) in enumerate(g.edges)
        if (u in aset and v in bset) or (u in bset and v in aset)
    }


def connected_components(g: MultiGraph, within: Iterable[int] | None = None) -> list[list[int]]:
    """Components of the subgraph induced by ``within`` (default: all)."""
    verts = set(range(g.n)) if within is None else set(within)
    adj = g.adjacency()
    seen: set[int] = set()
    comps = []
    for start in sorted(verts):
        if start in seen:
            continue
        comp = [start]
        seen.add(start)
        stack = [start]
        while stack:
            v = stack.pop()
            for eid in adj[v]:
                w = g.other_end(eid, v)
                if w in verts and w not in seen:
                    seen.add(w)
                    comp.append(w)
                    stack.append(w)
        comps.append(sorted(comp))
    return comps


def is_connected(g: MultiGraph, within: Iterable[int] | None = None) -> bool:
    verts = set(range(g.n)) if within is None else set(within)
    if not verts:
        return True
    return len(connected_components(g, verts)) == 1


def cut_edges(g: MultiGraph) -> set[int]:
    """All bridges of the graph (parallel edges are never bridges).

    Iterative lowpoint computation; works per component.
    """
    adj = g.adjacency()
    bridges: set[int] = set()
    disc = [-1] * g.n
    low = [0] * g.n
    timer = 0
    for root in range(g.n):
        if disc[root] != -1:
            continue
        stack: list[tuple[int, int, int]] = [(root, -1, 0)]  # (v, entry edge, ptr)
        while stack:
            v, pe, ptr = stack.pop()
            if ptr == 0:
                disc[v] = low[v] = timer
                timer += 1
            if ptr < len(adj[v]):
                stack.append((v, pe, ptr + 1))
                eid = adj[v][ptr]
                if eid == pe:
                    continue
                w = g.other_end(eid, v)
                if disc[w] == -1:
                    stack.append((w, eid, 0))
                else:
                    low[v] = min(low[v], disc[w])
            else:
                if pe != -1:
                    u = g.other_end(pe, v)
                    low[u] = min(low[u], low[v])
                    if low[v] > disc[u]:
                        bridges.add(pe)
    return bridges


def bfs_path(g: MultiGraph, src: int, dst: int, allowed_vertices: set[int] | None = None,
             forbidden_edges: set[int] | None = None) -> list[int] | None:
    """Shortest path (edge-id list) from src to dst; lowest edge id breaks ties.

    Returns None if unreachable.
    """
    if src == dst:
        return []
    allowed = allowed_vertices
    forb = forbidden_edges or set()
    adj = g.adjacency()
    prev: dict[int, int] = {src: -1}
    frontier = [src]
    while frontier:
        nxt = []
        for v in frontier:
            for eid in sorted(adj[v]):
                if eid in forb:
                    continue
                w = g.other_end(eid, v)
                if allowed is not None and w not in allowed and w != dst:
                    continue
                if w in prev:
                    continue
                prev[w] = eid
                if w == dst:
                    path = []
                    cur = w
                    while prev[cur] != -1:
                        e = prev[cur]
                        path.append(e)
                        cur = g.other_end(e, cur)
                    path.reverse()
                    return path
                nxt.append(w)
        frontier = nxt
    return None


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------

def normalize(g: MultiGraph) -> MultiGraph:
    """Transform an arbitrary instance into normalized form.

    Guarantees on the output:
      * every terminal participates in exactly one demand pair and has degree 1;
      * every non-terminal vertex has degree at most 4;
      * a vertex-provenance map (``provenance["origin"]``) sends every output
        vertex to the input vertex it derives from, so solutions can be
        projected back.

    A demand endpoint that already has degree 1 and appears in exactly one
    demand is kept as-is.  Any other endpoint gets one fresh pendant terminal
    per demand, attached by a relay edge.  Vertices of degree > 4 are then
    replaced by a d x d grid whose first row absorbs the incident edges in
    edge-id order.
    """
    demand_slots: dict[int, list[int]] = {}
    for i, (s, t) in enumerate(g.demands):
        demand_slots.setdefault(s, []).append(i)
        demand_slots.setdefault(t, []).append(i)

    n = g.n
    edges: list[tuple[int, int]] = list(g.edges)
    origin: dict[int, int] = {v: v for v in range(n)}
    deg = [0] * n
    for u, v in edges:
        deg[u] += 1
        deg[v] += 1

    def new_vertex(of: int) -> int:
        nonlocal n
        origin[n] = origin.get(of, of)
        deg.append(0)
        n += 1
        return n - 1

    def add_edge(u: int, v: int) -> int:
        edges.append((u, v))
        deg[u] += 1
        deg[v] += 1
        return len(edges) - 1

    # Pendant terminals.  A vertex keeps its terminal role only in the
    # untouched single-demand degree-1 case.
    new_demands: list[list[int]] = [[-1, -1] for _ in g.demands]
    terminals: set[int] = set()
    for v, slots in sorted(demand_slots.items()):
        if len(slots) == 1 and deg[v] == 1:
            i = slots[0]
            side = 0 if g.demands[i][0] == v else 1
            new_demands[i][side] = v
            terminals.add(v)
        else:
            for i in slots:
                t = new_vertex(v)
                add_edge(v, t)
                side = 0 if g.demands[i][0] == v else 1
                # a demand (v, v) was rejected at construction, so the side
                # assignment below is unambiguous
                if new_demands[i][side] != -1:
                    side = 1 - side
                new_demands[i][side] = t
                terminals.add(t)

    # Degree reduction: replace every high-degree non-terminal by a grid.
    # One pass suffices: grids only contain vertices of degree <= 4.
    adj_ids: list[list[int]] = [[] for _ in range(n)]
    for eid, (u, v) in enumerate(edges):
        adj_ids[u].append(eid)
        adj_ids[v].append(eid)
    for v in range(len(adj_ids)):
        if v in terminals or deg[v] <= 4:
            continue
        d = deg[v]
        incident = sorted(adj_ids[v])
        grid = [[new_vertex(v) for _ in range(d)] for _ in range(d)]
        for r in range(d):
            for c in range(d):
                if c + 1 < d:
                    add_edge(grid[r][c], grid[r][c + 1])
                if r + 1 < d:
                    add_edge(grid[r][c], grid[r + 1][c])
        for pos, eid in enumerate(incident):
            u, w = edges[eid]
            other = w if u == v else u
            edges[eid] = (other, grid[0][pos])
        # v is now isolated and dropped by the compaction below

    # Drop isolated replaced vertices by compacting ids.
    used = set()
    for u, v in edges:
        used.add(u)
        used.add(v)
    for i in range(len(new_demands)):
        used.update(x for x in new_demands[i] if x != -1)
    remap = {old: new for new, old in enumerate(sorted(used))}
    final_edges = tuple((remap[u], remap[v]) for u, v in edges)
    final_demands = tuple((remap[s], remap[t]) for s, t in new_demands)
    final_terminals = frozenset(remap[t] for t in terminals)
    out = MultiGraph(
        n=len(remap),
        edges=final_edges,
        terminals=final_terminals,
        demands=final_demands,
    )
    out.provenance["origin"] = {remap[v]: origin.get(v, v) for v in used}
    _check_normalized(out)
    return out


def _check_normalized(g: MultiGraph) -> None:
    owner: dict[int, int] = {}
    for i, (s, t) in enumerate(g.demands):
        for x in (s, t):
            if x in owner:
                raise InvalidInstance("terminal appears in two demand pairs")
            owner[x] = i
            if x not in g.terminals:
                raise InvalidInstance("demand endpoint is not a terminal")
    for v in range(g.n):
        d = g.degree(v)
        if v in g.terminals:
            if d != 1:
                raise InvalidInstance(f"terminal {v} has degree {d} != 1")
            if v not in owner:
                raise InvalidInstance(f"terminal {v} participates in no demand")
        elif d > 4:
            raise InvalidInstance(f"non-terminal {v} has degree {d} > 4")


def is_normalized(g: MultiGraph) -> bool:
    try:
        _check_normalized(g)
        return True
    except InvalidInstance:
        return False


# ---------------------------------------------------------------------------
# Instance text / JSON formats
# ---------------------------------------------------------------------------

def to_text(g: MultiGraph) -> str:
    """Instance text format: `p edp <n> <m> <k>`, `e u v` lines, `d s t`
    lines, 1-indexed."""
    lines = [f"p edp {g.n} {g.m} {g.k}"]
    lines += [f"e {u + 1} {v + 1}" for u, v in g.edges]
    lines += [f"d {s + 1} {t + 1}" for s, t in g.demands]
    return "\n".join(lines) + "\n"


def from_text(text: str) -> MultiGraph:
    n = m = k = None
    edges: list[tuple[int, int]] = []
    demands: list[tuple[int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        parts = line.split()
        if parts[0] == "p":
            if len(parts) != 5 or parts[1] != "edp":
                raise InvalidInstance(f"line {lineno}: bad problem line")
            n, m, k = int(parts[2]), int(parts[3]), int(parts[4])
        elif parts[0] == "e":
            if len(parts) != 3:
                raise InvalidInstance(f"line {lineno}: bad edge line")
            edges.append((int(parts[1]) - 1, int(parts[2]) - 1))
        elif parts[0] == "d":
            if len(parts) != 3:
                raise InvalidInstance(f"line {lineno}: bad demand line")
            demands.append((int(parts[1]) - 1, int(parts[2]) - 1))
        else:
            raise InvalidInstance(f"line {lineno}: unknown record {parts[0]!r}")
    if n is None:
        raise InvalidInstance("missing problem line")
    if m != len(edges) or k != len(demands):
        raise InvalidInstance("edge/demand counts disagree with problem line")
    terms = frozenset(x for st in demands for x in st)
    return MultiGraph(n=n, edges=tuple(edges), terminals=terms, demands=tuple(demands))


def to_json(g: MultiGraph) -> str:
    return json.dumps(
        {"n": g.n, "edges": [list(e) for e in g.edges], "demands": [list(d) for d in g.demands]},
        sort_keys=True,
    )


def from_json(text: str) -> MultiGraph:
    try:
        obj = json.loads(text)
        n = obj["n"]
        edges = tuple((int(u), int(v)) for u, v in obj["edges"])
        demands = tuple((int(s), int(t)) for s, t in obj["demands"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInstance(f"bad JSON instance: {exc}") from exc
    terms = frozenset(x for st in demands for x in st)
    return MultiGraph(n=n, edges=edges, terminals=terms, demands=demands)
