"""Bead graphs: reducing point placement to edge buying on the terminal multigraph.

Every terminal pair carries k parallel edges whose cost is the number of
degree-2 relay points ("beads") needed to bridge the pair with unit hops.
Buying an edge realizes its beads; the exact solver searches edge multisets
whose selected submultigraph meets every demand with edge-disjoint and
B-disjoint paths, which also makes the realization feasible.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Set, Tuple

from .connectivity import _crossing_pairs, element_maxflow, tau_star
from .instances import (
    EPS_GEO,
    Instance,
    Point,
    SolutionGraph,
    bead_count,
    build_unit_disk_graph,
)


class BeadError(ValueError):
    pass


class SizeCapError(BeadError):
    pass


@dataclass(frozen=True, order=True)
class BeadEdge:
    u: int
    v: int
    copy: int
    cost: int


@dataclass(frozen=True)
class BeadGraph:
    """k parallel edges per terminal pair with bead costs."""

    n: int
    k: int
    edges: Tuple[BeadEdge, ...]

    def pair_edges(self, u: int, v: int) -> Tuple[BeadEdge, ...]:
        u, v = min(u, v), max(u, v)
        return tuple(e for e in self.edges if (e.u, e.v) == (u, v))

    def zero_cost_edges(self) -> Tuple[BeadEdge, ...]:
        return tuple(e for e in self.edges if e.cost == 0)


def build_bead_graph(instance: Instance, k: int) -> BeadGraph:
    if k < 1:
        raise BeadError("k must be at least 1")
    edges: List[BeadEdge] = []
    for i in range(instance.n):
        for j in range(i + 1, instance.n):
            dhat = bead_count(instance.terminal_distance(i, j))
            if dhat > 0:
                for copy in range(k):
                    edges.append(BeadEdge(i, j, copy, dhat))
            else:
                edges.append(BeadEdge(i, j, 0, 0))
                for copy in range(1, k):
                    edges.append(BeadEdge(i, j, copy, 1))
    return BeadGraph(instance.n, k, tuple(edges))


@dataclass(frozen=True)
class BeadPlacement:
    selected: Tuple[BeadEdge, ...]
    points: Tuple[Point, ...]
    solution: SolutionGraph

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def cost(self) -> int:
        return sum(e.cost for e in self.selected)


def realize(
    instance: Instance, selected: Iterable[BeadEdge], eps_geo: float = EPS_GEO
) -> BeadPlacement:
    """Place the beads of the selected edges and build the resulting graph.

    Euclidean beads are equally spaced interior points of the segment;
    coincident duplicates from parallel copies are kept as distinct nodes.  In
    a finite metric, positive-cost edges realize as abstract chain nodes whose
    only adjacencies are the chain hops.
    """
    selected = tuple(sorted(selected))
    euclidean = instance.metric.kind == "euclidean"
    points: List[Point] = []
    if euclidean:
        for e in selected:
            if e.cost == 0:
                continue
            pu = instance.terminals[e.u].coords
            pv = instance.terminals[e.v].coords
            for step in range(1, e.cost + 1):
                frac = step / (e.cost + 1)
                points.append(
                    Point.at(*(a + frac * (b - a) for a, b in zip(pu, pv)))
                )
        solution = SolutionGraph.build(instance, points, eps_geo)
        return BeadPlacement(selected, tuple(points), solution)

    # Finite metric: abstract bead chains.
    edges = dict(build_unit_disk_graph(instance.terminals, instance.metric, eps_geo))
    next_id = instance.n
    abstract = False
    for e in selected:
        if e.cost == 0:
            continue
        abstract = True
        d = instance.terminal_distance(e.u, e.v)
        hop = Fraction(d) / (e.cost + 1)
        chain = [e.u] + [next_id + t for t in range(e.cost)] + [e.v]
        next_id += e.cost
        points.extend(Point.bead() for _ in range(e.cost))
        for a, b in zip(chain, chain[1:]):
            edges[(min(a, b), max(a, b))] = hop
    solution = SolutionGraph(instance, points, edges, abstract=abstract)
    return BeadPlacement(selected, tuple(points), solution)


# ---------------------------------------------------------------------------
# Exact integral optimum


@dataclass(frozen=True)
class BeadSolveResult:
    cost: int
    selected: Tuple[BeadEdge, ...]
    certified: bool
    lower_bound: Fraction
    nodes_explored: int


class _SearchStop(Exception):
    pass


def _selected_caps(base: Dict[Tuple[int, int], int], counts) -> Dict[Tuple[int, int], int]:
    caps = dict(base)
    for pair, cnt in counts.items():
        caps[pair] = caps.get(pair, 0) + cnt
    return caps


def _first_deficiency(instance: Instance, caps, demands):
    nodes = range(instance.n)
    for (i, j, r) in demands:
        flow, _, _, _ = element_maxflow(
            caps, instance.unstable, i, j, limit=r, extra_nodes=nodes
        )
        if flow >= r:
            continue
        flow, biset, cut_nodes, cut_edges = element_maxflow(
            caps, instance.unstable, i, j, extra_nodes=nodes
        )
        return (i, j, r, flow, biset)
    return None


def tau_integral(
    instance: Instance,
    k: Optional[int] = None,
    *,
    r_cap: int = 10,
    node_cap: int = 200_000,
    time_cap: Optional[float] = None,
) -> BeadSolveResult:
    """Minimum-cost edge multiset meeting every demand, by branch and bound.

    Branching adds one copy across the Menger cut of the first deficient
    demand; tau_star bounds from below and a reverse-deleted full selection
    seeds the incumbent.  On hitting the node or time cap the best incumbent
    is returned flagged non-certified.
    """
    if instance.n > r_cap:
        raise SizeCapError("terminal count %d exceeds cap %d" % (instance.n, r_cap))
    if k is None:
        k = max(1, instance.max_demand)
    bead = build_bead_graph(instance, k)
    demands = instance.demand_pairs()
    zero_edges = bead.zero_cost_edges()
    base_caps: Dict[Tuple[int, int], int] = {}
    for e in zero_edges:
        base_caps[(e.u, e.v)] = base_caps.get((e.u, e.v), 0) + 1

    if not demands:
        return BeadSolveResult(0, zero_edges, True, Fraction(0), 0)

    pair_cost: Dict[Tuple[int, int], int] = {}
    max_extra: Dict[Tuple[int, int], int] = {}
    for i in range(instance.n):
        for j in range(i + 1, instance.n):
            dhat = bead_count(instance.terminal_distance(i, j))
            if dhat > 0:
                pair_cost[(i, j)] = dhat
                max_extra[(i, j)] = k
            elif k > 1:
                pair_cost[(i, j)] = 1
                max_extra[(i, j)] = k - 1

    all_pairs = sorted(pair_cost)

    def selection_of(counts) -> Tuple[BeadEdge, ...]:
        chosen = list(zero_edges)
        for (u, v), cnt in sorted(counts.items()):
            copies = [e for e in bead.pair_edges(u, v) if e.cost > 0]
            chosen.extend(copies[:cnt])
        return tuple(sorted(chosen))

    def cost_of(counts) -> int:
        return sum(pair_cost[p] * c for p, c in counts.items())

    def reverse_delete(counts) -> Dict[Tuple[int, int], int]:
        counts = dict(counts)
        order = sorted(
            [p for p in counts for _ in range(counts[p])],
            key=lambda p: (-pair_cost[p], p),
        )
        for p in order:
            if counts.get(p, 0) == 0:
                continue
            counts[p] -= 1
            caps = _selected_caps(base_caps, counts)
            if _first_deficiency(instance, caps, demands) is None:
                if counts[p] == 0:
                    del counts[p]
            else:
                counts[p] += 1
        return counts

    full = {p: max_extra[p] for p in all_pairs}
    if _first_deficiency(instance, _selected_caps(base_caps, full), demands) is not None:
        raise BeadError("even the full bead graph misses a demand")

    ts = tau_star(instance, r_cap=max(r_cap, instance.n))
    lower = ts.value
    lb_int = math.ceil(lower)

    def greedy_cover() -> Dict[Tuple[int, int], int]:
        counts: Dict[Tuple[int, int], int] = {}
        while True:
            defic = _first_deficiency(
                instance, _selected_caps(base_caps, counts), demands
            )
            if defic is None:
                return counts
            biset = defic[4]
            crossing = _crossing_pairs(all_pairs, biset, set())
            candidates = [
                p for p in crossing if counts.get(p, 0) < max_extra.get(p, 0)
            ]
            if not candidates:
                raise BeadError("deficient cut with no purchasable copy")
            p = min(candidates, key=lambda p: (pair_cost[p], p))
            counts[p] = counts.get(p, 0) + 1

    incumbent = reverse_delete(greedy_cover())
    best_counts = incumbent
    best_cost = cost_of(incumbent)
    nodes_seen = [0]
    deadline = time.monotonic() + time_cap if time_cap else None

    visited: Set[Tuple] = set()

    def search(counts, cost):
        nodes_seen[0] += 1
        if nodes_seen[0] > node_cap or (
            deadline is not None and time.monotonic() > deadline
        ):
            raise _SearchStop
        nonlocal best_counts, best_cost
        if cost >= best_cost:
            return
        caps = _selected_caps(base_caps, counts)
        defic = _first_deficiency(instance, caps, demands)
        if defic is None:
            best_counts = dict(counts)
            best_cost = cost
            return
        _, _, _, _, biset = defic
        crossing = _crossing_pairs(all_pairs, biset, set())
        candidates = [p for p in crossing if counts.get(p, 0) < max_extra.get(p, 0)]
        candidates.sort(key=lambda p: (pair_cost[p], p))
        for p in candidates:
            added = cost + pair_cost[p]
            if added >= best_cost:
                break
            counts[p] = counts.get(p, 0) + 1
            key = tuple(sorted(counts.items()))
            if key not in visited:
                visited.add(key)
                search(counts, added)
            counts[p] -= 1
            if counts[p] == 0:
                del counts[p]

    certified = True
    if best_cost > lb_int:
        try:
            search({}, 0)
        except _SearchStop:
            certified = False

    best_counts = reverse_delete(best_counts)
    best_cost = cost_of(best_counts)
    if best_cost <= lb_int:
        certified = True
    return BeadSolveResult(
        best_cost, selection_of(best_counts), certified, lower, nodes_seen[0]
    )
