"""Greedy spanning-tree improvement over a costed hypergraph.

Starting from a spanning tree on the pair edges, repeatedly pick the hyperedge
whose contraction removes the most tree cost per unit of its own cost, commit
it while that trade is strictly profitable, and return the surviving tree
edges together with the committed hyperedges.  The run trace records every
committed step so the logarithmic cost bound can be replayed afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from .beads import BeadEdge, realize
from .connectivity import verify_feasible
from .instances import EPS_GEO, Instance, Point, SolutionGraph
from .steiner import (
    ComponentHypergraph,
    SchemeConfig,
    _require_all_pairs_unit_demands,
    build_component_hypergraph,
    mst_pairs,
)


class HypergraphError(ValueError):
    pass


@dataclass(frozen=True)
class CostedEdge:
    """A hyperedge (or ordinary pair edge when |nodes| == 2) with its cost."""

    eid: int
    nodes: FrozenSet[int]
    cost: object  # int or Fraction

    @property
    def is_pair(self) -> bool:
        return len(self.nodes) == 2


@dataclass(frozen=True)
class CostedHypergraph:
    nodes: Tuple[int, ...]
    edges: Tuple[CostedEdge, ...]

    def __post_init__(self):
        for e in self.edges:
            if e.cost < 0:
                raise HypergraphError("hyperedge costs must be nonnegative")
            if not e.nodes <= set(self.nodes):
                raise HypergraphError("hyperedge leaves the node set")
        parent = {v: v for v in self.nodes}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for e in self.edges:
            it = iter(e.nodes)
            first = find(next(it))
            for v in it:
                parent[find(v)] = first
        if len({find(v) for v in self.nodes}) != 1:
            raise HypergraphError("hypergraph is not connected")

    def pair_edges(self) -> Tuple[CostedEdge, ...]:
        return tuple(e for e in self.edges if e.is_pair)


def costed_hypergraph(nodes: Iterable[int], edge_items) -> CostedHypergraph:
    """Build from [(nodes, cost), ...] with deterministic edge ids."""
    entries = sorted(
        ((frozenset(ns), cost) for ns, cost in edge_items),
        key=lambda item: (len(item[0]), sorted(item[0])),
    )
    edges = tuple(
        CostedEdge(i, ns, cost) for i, (ns, cost) in enumerate(entries)
    )
    return CostedHypergraph(tuple(sorted(nodes)), edges)


# ---------------------------------------------------------------------------
# Maximum overlapped edge set


def max_overlapped_set(
    tree_edges: Sequence[Tuple[int, int, object]], group: Iterable[int]
) -> List[Tuple[int, int, object]]:
    """Costliest tree-edge set whose removal is repaired by contracting the group.

    Equivalently the complement of the cheapest spanning tree after the
    contraction; ties resolve lexicographically so reruns are stable.
    """
    group = set(group)
    nodes = set()
    for u, v, _ in tree_edges:
        nodes.update((u, v))
    if not group <= nodes:
        raise HypergraphError("group is not contained in the tree")
    if len(group) < 2:
        return []

    anchor = min(group)

    def rep(x):
        return anchor if x in group else x

    parent: Dict[int, int] = {}

    def find(x):
        parent.setdefault(x, x)
        while parent[x] != x:
            parent[x] = parent.setdefault(parent[x], parent[x])
            x = parent[x]
        return x

    dropped = []
    order = sorted(
        enumerate(tree_edges), key=lambda item: (item[1][2], item[1][0], item[1][1])
    )
    kept_ids = set()
    for idx, (u, v, cost) in order:
        ru, rv = find(rep(u)), find(rep(v))
        if ru == rv:
            continue
        parent[max(ru, rv)] = min(ru, rv)
        kept_ids.add(idx)
    for idx, edge in enumerate(tree_edges):
        if idx not in kept_ids:
            dropped.append(edge)
    return dropped


# ---------------------------------------------------------------------------
# The replacement loop


@dataclass(frozen=True)
class TraceStep:
    step: int
    chosen: Tuple[int, ...]
    hyperedge_cost: object
    removed: Tuple[Tuple[int, int, object], ...]
    removed_cost: object
    remaining_cost: object

    def to_json(self):
        return {
            "step": self.step,
            "chosen": list(self.chosen),
            "s_i": str(self.hyperedge_cost),
            "removed_cost": str(self.removed_cost),
            "f_i": str(self.remaining_cost),
        }


@dataclass(frozen=True)
class ReplacementTrace:
    start_cost: object
    steps: Tuple[TraceStep, ...]
    stopped_early: bool  # True when the loop ended on an unprofitable maximizer

    def to_json(self):
        return {
            "f_0": str(self.start_cost),
            "stopped_early": self.stopped_early,
            "steps": [s.to_json() for s in self.steps],
        }


@dataclass(frozen=True)
class ReplacementResult:
    kept_pairs: Tuple[CostedEdge, ...]
    selected: Tuple[CostedEdge, ...]
    trace: ReplacementTrace

    @property
    def cost(self):
        return sum(e.cost for e in self.kept_pairs) + sum(
            e.cost for e in self.selected
        )

    def all_edges(self) -> Tuple[CostedEdge, ...]:
        return self.kept_pairs + self.selected


def _ratio_better(a_num, a_den, b_num, b_den) -> bool:
    """a_num/a_den > b_num/b_den with zero denominators read as +infinity."""
    if a_den == 0 and b_den == 0:
        return a_num > b_num  # both infinite: larger overlap wins
    if a_den == 0:
        return a_num > 0
    if b_den == 0:
        return b_num <= 0
    return a_num * b_den > b_num * a_den


def local_replacement(
    hypergraph: CostedHypergraph, tree: Sequence[CostedEdge]
) -> ReplacementResult:
    """Run the improvement loop from a spanning tree of the pair edges."""
    nodes = set(hypergraph.nodes)
    by_eid = {e.eid: e for e in hypergraph.edges}
    parent = {v: v for v in nodes}

    def tfind(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in tree:
        if not e.is_pair:
            raise HypergraphError("the starting tree must consist of pair edges")
        if by_eid.get(e.eid) is not e and by_eid.get(e.eid) != e:
            raise HypergraphError("tree edge %r is not part of the hypergraph" % (e,))
        u, v = sorted(e.nodes)
        ru, rv = tfind(u), tfind(v)
        if ru == rv:
            raise HypergraphError("the starting edges contain a cycle")
        parent[ru] = rv
    if len(tree) != len(nodes) - 1 or len({tfind(v) for v in nodes}) != 1:
        raise HypergraphError("the starting edges do not span the nodes as a tree")

    live: List[Tuple[int, int, object, int]] = []
    for e in tree:
        u, v = sorted(e.nodes)
        live.append((u, v, e.cost, e.eid))

    merged: Dict[int, int] = {v: v for v in nodes}

    def rep(x):
        while merged[x] != x:
            merged[x] = merged[merged[x]]
            x = merged[x]
        return x

    f0 = sum(c for _, _, c, _ in live)
    steps: List[TraceStep] = []
    selected: List[CostedEdge] = []
    stopped_early = False

    if f0 > 0:
        step = 0
        while sum(c for _, _, c, _ in live) > 0:
            # hypergraph.edges is ordered by (cardinality, node ids), so letting
            # the first strict improvement win resolves ratio ties that way.
            best = None
            best_drop = None
            for edge in hypergraph.edges:
                group = {rep(v) for v in edge.nodes}
                if len(group) < 2:
                    continue
                drop = max_overlapped_set(
                    [(u, v, c) for u, v, c, _ in live], group
                )
                gain = sum(c for _, _, c in drop)
                if best is None or _ratio_better(gain, edge.cost, best[0], best[1]):
                    best = (gain, edge.cost, edge)
                    best_drop = drop
            if best is None or not best[0] > best[1]:
                stopped_early = best is not None
                break
            gain, _, edge = best
            # Drop exactly the overlapped copies, respecting multiplicity.
            remaining = list(best_drop)
            new_live = []
            removed = []
            for u, v, c, eid in live:
                if (u, v, c) in remaining:
                    remaining.remove((u, v, c))
                    removed.append((u, v, c))
                else:
                    new_live.append((u, v, c, eid))
            anchor = min(rep(v) for v in edge.nodes)
            for v in edge.nodes:
                merged[rep(v)] = anchor
            live = [
                (min(rep(u), rep(v)), max(rep(u), rep(v)), c, eid)
                for u, v, c, eid in new_live
            ]
            selected.append(edge)
            step += 1
            steps.append(
                TraceStep(
                    step,
                    tuple(sorted(edge.nodes)),
                    edge.cost,
                    tuple(removed),
                    gain,
                    sum(c for _, _, c, _ in live),
                )
            )

    kept = tuple(by_eid[eid] for _, _, _, eid in sorted(live, key=lambda t: t[3]))
    trace = ReplacementTrace(f0, tuple(steps), stopped_early)
    return ReplacementResult(kept, tuple(selected), trace)


# ---------------------------------------------------------------------------
# Full scheme for all-pairs unit demands


@dataclass(frozen=True)
class SchemeResult:
    solution: SolutionGraph
    selection: Tuple[CostedEdge, ...]
    trace: ReplacementTrace
    hypergraph: ComponentHypergraph
    mst_cost: int
    selection_cost: object

    @property
    def size(self) -> int:
        return len(self.solution.steiner)


def st_msp_scheme(
    instance: Instance, config: Optional[SchemeConfig] = None,
    eps_geo: float = EPS_GEO,
) -> SchemeResult:
    """Hypergraph spanning pipeline: oracle costs, MST start, replacement, realize."""
    config = config or SchemeConfig()
    _require_all_pairs_unit_demands(instance)
    component_graph = build_component_hypergraph(instance, config)
    edge_items = [(e.nodes, e.cost) for e in component_graph.edges]
    hypergraph = costed_hypergraph(range(instance.n), edge_items)
    witness_of = {e.nodes: e for e in component_graph.edges}

    pair_cost = {e.nodes: e for e in hypergraph.edges if e.is_pair}
    tree = []
    for cost, i, j in mst_pairs(instance):
        tree.append(pair_cost[frozenset((i, j))])
    mst_cost = sum(e.cost for e in tree)

    result = local_replacement(hypergraph, tree)

    points: List[Point] = []
    seen = set()
    terminal_keys = set()
    if instance.metric.kind == "euclidean":
        terminal_keys = {tuple(round(c, 9) for c in p.coords) for p in instance.terminals}
    for edge in result.all_edges():
        if edge.is_pair:
            i, j = sorted(edge.nodes)
            witness = realize(
                instance, [BeadEdge(i, j, 0, int(edge.cost))], eps_geo
            ).points
        else:
            witness = witness_of[edge.nodes].witness
        for p in witness:
            key = tuple(round(c, 9) for c in p.coords) if p.coords else ("n", p.index)
            if key in seen or key in terminal_keys:
                continue
            seen.add(key)
            points.append(p)

    solution = SolutionGraph.build(instance, points, eps_geo)
    bad = verify_feasible(instance, solution)
    if bad:
        raise HypergraphError("scheme produced an infeasible union: %r" % (bad[0],))
    return SchemeResult(
        solution,
        result.all_edges(),
        result.trace,
        component_graph,
        mst_cost,
        result.cost,
    )
