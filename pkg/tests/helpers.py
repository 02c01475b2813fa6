"""Shared construction helpers for tests (no production logic)."""

from __future__ import annotations

import random

from edpc2.graphs import MultiGraph


def graph_of(n, edge_list, demands=()):
    terms = frozenset(x for st in demands for x in st)
    return MultiGraph(n=n, edges=tuple(tuple(e) for e in edge_list),
                      terminals=terms, demands=tuple(tuple(d) for d in demands))


def cycle(n, demands=()):
    return graph_of(n, [(i, (i + 1) % n) for i in range(n)], demands)


def path_graph(n, demands=()):
    return graph_of(n, [(i, i + 1) for i in range(n - 1)], demands)


def complete(n, demands=()):
    return graph_of(n, [(i, j) for i in range(n) for j in range(i + 1, n)], demands)


def grid(rows, cols):
    """Grid edges + vertex-id helper: returns (n, edges, id(r,c))."""
    def vid(r, c):
        return r * cols + c
    edges = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                edges.append((vid(r, c), vid(r, c + 1)))
            if r + 1 < rows:
                edges.append((vid(r, c), vid(r + 1, c)))
    return rows * cols, edges, vid


def random_connected_deg4(n, seed, extra=0.5):
    """Random connected graph with max degree <= 4 (spanning tree + chords)."""
    rng = random.Random(seed)
    deg = [0] * n
    edges = []
    verts = list(range(n))
    rng.shuffle(verts)
    for i in range(1, n):
        # attach to an earlier vertex with spare degree
        cands = [v for v in verts[:i] if deg[v] < 3]
        if not cands:
            cands = [v for v in verts[:i] if deg[v] < 4]
        u = rng.choice(cands)
        v = verts[i]
        edges.append((u, v))
        deg[u] += 1
        deg[v] += 1
    tries = int(extra * n)
    for _ in range(tries):
        u, v = rng.sample(range(n), 2)
        if deg[u] < 4 and deg[v] < 4:
            edges.append((u, v))
            deg[u] += 1
            deg[v] += 1
    return graph_of(n, edges)
