"""The clustering potential: exact charges on cross-cluster edges.

Each cross edge pays ``1 + phi(h) + phi(h')`` where ``h, h'`` are the
boundary sizes of its endpoint clusters.  Below the large-cluster threshold
``phi(h) = 4 * alpha * log2(h)``; above it the function is a step function
over breakpoints ``(3/2)^i * k1`` whose values accumulate ``4*alpha*k1/n_i``
increments.  Values are exact :class:`LogRational` numbers so strict
decreases can be asserted without floating-point doubt.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from .exactnum import LogRational
from .graphs import MultiGraph, out_edges
from .profiles import ParamProfile


class PotentialTable:
    """Breakpoints and step values of the vertex-side potential."""

    def __init__(self, alpha: Fraction, k1: int):
        self.alpha = Fraction(alpha)
        self.k1 = int(k1)
        self._steps: list[tuple[Fraction, LogRational]] = []
        self._phi_cache: dict[int, LogRational] = {}
        # phi(n_0) = 4 alpha log2(k1) + 4 alpha
        base = LogRational.log2_of(self.k1, 4 * self.alpha) + (4 * self.alpha)
        self._steps.append((Fraction(self.k1), base))

    def _extend_to(self, h: int) -> None:
        while self._steps[-1][0] <= h:
            i = len(self._steps)
            n_i = Fraction(self.k1) * Fraction(3, 2) ** i
            inc = 4 * self.alpha * self.k1 / n_i
            self._steps.append((n_i, self._steps[-1][1] + inc))

    def phi(self, h: int) -> LogRational:
        """Vertex-side potential of a boundary size ``h`` (phi(0)=phi(1)=0)."""
        if h in self._phi_cache:
            return self._phi_cache[h]
        if h <= 1:
            val = LogRational()
        elif h < self.k1:
            val = LogRational.log2_of(h, 4 * self.alpha)
        else:
            self._extend_to(h)
            # h lies in [n_{i-1}, n_i) and pays the lower breakpoint's value
            val = None
            for j in range(1, len(self._steps)):
                if self._steps[j - 1][0] <= h < self._steps[j][0]:
                    val = self._steps[j - 1][1]
                    break
            assert val is not None
        self._phi_cache[h] = val
        return val

    def breakpoints(self, count: int) -> list[tuple[Fraction, LogRational]]:
        self._extend_to(int(Fraction(self.k1) * Fraction(3, 2) ** count) + 1)
        return self._steps[:count]


@lru_cache(maxsize=8)
def table_for(alpha: Fraction, k1: int) -> PotentialTable:
    return PotentialTable(alpha, k1)


def potential_of_partition(
    g: MultiGraph, clusters, profile: ParamProfile
) -> LogRational:
    """phi of an arbitrary vertex partition, recomputed from scratch."""
    table = table_for(profile.alpha, profile.k1)
    owner: dict[int, int] = {}
    for ci, cl in enumerate(clusters):
        for v in cl:
            owner[v] = ci
    cross = 0
    boundary: dict[int, int] = {}
    for (u, v) in g.edges:
        cu, cv = owner[u], owner[v]
        if cu != cv:
            cross += 1
            boundary[cu] = boundary.get(cu, 0) + 1
            boundary[cv] = boundary.get(cv, 0) + 1
    total = LogRational(Fraction(cross))
    for ci, h in boundary.items():
        total = total + table.phi(h) * h
    return total


def phi_edge_bound(profile: ParamProfile, table: PotentialTable, h: int, h2: int) -> LogRational:
    return LogRational(Fraction(1)) + table.phi(h) + table.phi(h2)
