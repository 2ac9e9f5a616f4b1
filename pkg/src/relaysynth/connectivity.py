"""Q-connectivity, feasibility certificates, pruning, and the bead cut-LP.

Connectivity between terminals counts paths that are disjoint in edges and in
Q-nodes (Q = unstable terminals plus all Steiner points), computed as max-flow
on a node-split graph.  The same flow engine powers Menger witnesses, the
separation oracle of the cut relaxation, and its exact optimum tau_star.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Set, Tuple

from .instances import Instance, SolutionGraph, bead_count
from .simplex import CoverRow, solve_min_cover

_HALF = Fraction(1, 2)


class ConnectivityError(ValueError):
    pass


class NonTreeComponentError(ConnectivityError):
    """A Steiner component is not a tree, so the input was not pruned minimal."""


# ---------------------------------------------------------------------------
# Small graph helpers


def _edge_pairs(edges) -> List[Tuple[int, int]]:
    return [tuple(sorted(e)) for e in edges]


def adjacency_of(edges, nodes=()) -> Dict[int, Set[int]]:
    adj: Dict[int, Set[int]] = {v: set() for v in nodes}
    for a, b in edges:
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    return adj


def connected_components(edges, nodes=()) -> List[frozenset]:
    adj = adjacency_of(edges, nodes)
    seen: Set[int] = set()
    comps = []
    for start in sorted(adj):
        if start in seen:
            continue
        stack = [start]
        comp = set()
        while stack:
            v = stack.pop()
            if v in comp:
                continue
            comp.add(v)
            stack.extend(adj[v] - comp)
        seen |= comp
        comps.append(frozenset(comp))
    return comps


# ---------------------------------------------------------------------------
# Bisets and element max-flow


@dataclass(frozen=True)
class Biset:
    """Nested node-set pair; the boundary models node removals in cuts."""

    inner: frozenset
    outer: frozenset

    def __post_init__(self):
        if not self.inner <= self.outer:
            raise ConnectivityError("biset inner part must lie inside the outer part")

    @property
    def boundary(self) -> frozenset:
        return self.outer - self.inner

    def complement(self, nodes) -> frozenset:
        return frozenset(nodes) - self.outer

    def to_json(self):
        return {"inner": sorted(self.inner), "outer": sorted(self.outer)}


@dataclass(frozen=True)
class DemandViolation:
    pair: Tuple[int, int]
    required: int
    achieved: object  # int for graphs, Fraction for fractional capacities
    witness: Biset
    cut_nodes: Tuple[int, ...]
    cut_edges: Tuple[Tuple[int, int], ...]

    def to_json(self):
        return {
            "pair": list(self.pair),
            "required": self.required,
            "achieved": str(self.achieved),
            "witness": self.witness.to_json(),
            "cut_nodes": list(self.cut_nodes),
            "cut_edges": [list(e) for e in self.cut_edges],
        }


def element_maxflow(
    edge_caps: Mapping[Tuple[int, int], object],
    qnodes: Iterable[int],
    s: int,
    t: int,
    *,
    limit=None,
    extra_nodes: Iterable[int] = (),
):
    """Max flow between terminals where Q-nodes (except s,t) have capacity one.

    Returns (flow_value, biset, cut_nodes, cut_edges).  Edge capacities may be
    ints or Fractions; zero-capacity edges are ignored.
    """
    if s == t:
        raise ConnectivityError("endpoints must differ")
    raw_nodes = set(extra_nodes) | {s, t}
    for (a, b) in edge_caps:
        raw_nodes.add(a)
        raw_nodes.add(b)
    idx = {v: i for i, v in enumerate(sorted(raw_nodes))}
    if s not in idx or t not in idx:
        raise ConnectivityError("node absent from graph")
    qset = set(qnodes) - {s, t}

    total = sum(c for c in edge_caps.values())
    inf_cap = total + len(qset) + 1

    nn = 2 * len(idx)  # even = in-copy, odd = out-copy
    cap: List[Dict[int, object]] = [dict() for _ in range(nn)]

    def add(u, v, c):
        cap[u][v] = cap[u].get(v, 0) + c
        cap[v].setdefault(u, 0)

    for v, i in idx.items():
        add(2 * i, 2 * i + 1, 1 if v in qset else inf_cap)
    for (a, b), c in edge_caps.items():
        if c <= 0:
            continue
        ia, ib = idx[a], idx[b]
        add(2 * ia + 1, 2 * ib, c)
        add(2 * ib + 1, 2 * ia, c)

    src = 2 * idx[s] + 1
    snk = 2 * idx[t]
    flow = 0
    while True:
        if limit is not None and flow >= limit:
            break
        parent = {src: None}
        queue = deque([src])
        while queue:
            u = queue.popleft()
            if u == snk:
                break
            for v, c in cap[u].items():
                if c > 0 and v not in parent:
                    parent[v] = u
                    queue.append(v)
        if snk not in parent:
            break
        bottleneck = None
        v = snk
        while parent[v] is not None:
            u = parent[v]
            c = cap[u][v]
            bottleneck = c if bottleneck is None else min(bottleneck, c)
            v = u
        v = snk
        while parent[v] is not None:
            u = parent[v]
            cap[u][v] -= bottleneck
            cap[v][u] += bottleneck
            v = u
        flow += bottleneck

    # Residual reachability gives the Menger cut.
    reach = {src}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        for v, c in cap[u].items():
            if c > 0 and v not in reach:
                reach.add(v)
                queue.append(v)
    rev = {i: v for v, i in idx.items()}
    inner = frozenset(rev[i // 2] for i in reach if i % 2 == 1)
    cut_nodes = tuple(
        sorted(
            rev[i]
            for i in range(len(idx))
            if 2 * i in reach and 2 * i + 1 not in reach
        )
    )
    cut_edges = []
    for (a, b) in edge_caps:
        ia, ib = idx[a], idx[b]
        if 2 * ia + 1 in reach and 2 * ib not in reach:
            cut_edges.append(tuple(sorted((a, b))))
        elif 2 * ib + 1 in reach and 2 * ia not in reach:
            cut_edges.append(tuple(sorted((a, b))))
    biset = Biset(inner=inner, outer=inner | set(cut_nodes))
    return flow, biset, cut_nodes, tuple(sorted(set(cut_edges)))


def _caps_from_edges(edges) -> Dict[Tuple[int, int], int]:
    caps: Dict[Tuple[int, int], int] = {}
    if isinstance(edges, Mapping):
        items = edges.keys()
    else:
        items = edges
    for e in items:
        key = tuple(sorted((e[0], e[1])))
        caps[key] = caps.get(key, 0) + 1
    return caps


def q_connectivity(edges, q: Iterable[int], u: int, v: int, *, nodes=()) -> int:
    """Maximum number of u-v paths disjoint in edges and in Q minus {u,v}.

    ``edges`` is an iterable of node pairs; repeated pairs act as parallel
    edges.  Mapping values (e.g. lengths) are ignored; use
    ``q_connectivity_cut`` with explicit multiplicities for multigraphs.
    """
    flow, _, _, _ = element_maxflow(_caps_from_edges(edges), q, u, v, extra_nodes=nodes)
    return flow


def q_connectivity_cut(caps: Mapping[Tuple[int, int], object], q, u, v, *, nodes=()):
    """Like q_connectivity but with explicit edge capacities; returns the cut too."""
    caps = {tuple(sorted(k)): c for k, c in caps.items()}
    return element_maxflow(caps, q, u, v, extra_nodes=nodes)


# ---------------------------------------------------------------------------
# Feasibility and pruning


def verify_feasible(instance: Instance, solution: SolutionGraph) -> List[DemandViolation]:
    """Empty list iff every demand is met with B-and-Steiner disjoint paths."""
    q = solution.q_nodes()
    caps = {e: 1 for e in solution.edges}
    nodes = range(solution.n_nodes)
    violations = []
    for (i, j, r) in instance.demand_pairs():
        flow, _, _, _ = element_maxflow(caps, q, i, j, limit=r, extra_nodes=nodes)
        if flow >= r:
            continue
        full, biset, cut_nodes, cut_edges = element_maxflow(
            caps, q, i, j, extra_nodes=nodes
        )
        violations.append(
            DemandViolation((i, j), r, full, biset, cut_nodes, cut_edges)
        )
    return violations


def is_feasible(instance: Instance, solution: SolutionGraph) -> bool:
    return not verify_feasible(instance, solution)


def prune_minimal(instance: Instance, solution: SolutionGraph) -> SolutionGraph:
    """Remove edges (longest first) and Steiner nodes while feasibility holds."""
    if not is_feasible(instance, solution):
        raise ConnectivityError("cannot prune an infeasible solution")
    graph = solution
    order = sorted(graph.edges, key=lambda e: (-float(graph.edges[e]), e))
    for edge in order:
        if edge not in graph.edges:
            continue
        candidate = graph.without_edge(edge)
        if is_feasible(instance, candidate):
            graph = candidate
    for node in sorted(graph.steiner_ids(), reverse=True):
        candidate = graph.without_steiner(node)
        if is_feasible(instance, candidate):
            graph = candidate
    return graph


# ---------------------------------------------------------------------------
# Blocks and R-components


def blocks(edges, nodes=()):
    """2-connected components and bridges; every edge lands in exactly one block."""
    adj = adjacency_of(_edge_pairs(edges), nodes)
    disc: Dict[int, int] = {}
    low: Dict[int, int] = {}
    result: List[frozenset] = []
    timer = [0]

    for root in sorted(adj):
        if root in disc:
            continue
        stack = [(root, None, iter(sorted(adj[root])))]
        estack: List[Tuple[int, int]] = []
        disc[root] = low[root] = timer[0]
        timer[0] += 1
        while stack:
            v, parent, it = stack[-1]
            advanced = False
            for w in it:
                if w == parent:
                    parent = None  # skip the tree edge back once (no multiedges)
                    continue
                if w not in disc:
                    disc[w] = low[w] = timer[0]
                    timer[0] += 1
                    estack.append((v, w))
                    stack.append((w, v, iter(sorted(adj[w]))))
                    advanced = True
                    break
                if disc[w] < disc[v]:
                    estack.append((v, w))
                    low[v] = min(low[v], disc[w])
            if advanced:
                continue
            stack.pop()
            if stack:
                pv = stack[-1][0]
                low[pv] = min(low[pv], low[v])
                if low[v] >= disc[pv]:
                    comp = set()
                    while estack:
                        a, b = estack.pop()
                        comp.add(tuple(sorted((a, b))))
                        if (a, b) == (pv, v) or (b, a) == (pv, v):
                            break
                    if comp:
                        result.append(frozenset(comp))
    return sorted(result, key=lambda blk: sorted(blk))


def r_components(edges, terminals: Iterable[int], nodes=()):
    """One subgraph per component of G minus R, with its terminal attachments."""
    terminals = set(terminals)
    pairs = _edge_pairs(edges)
    adj = adjacency_of(pairs, nodes)
    steiner_nodes = [v for v in adj if v not in terminals]
    inner_edges = [(a, b) for a, b in pairs if a not in terminals and b not in terminals]
    comps = connected_components(inner_edges, steiner_nodes)
    out = []
    for comp in sorted(comps, key=min):
        comp_edges = set()
        comp_nodes = set(comp)
        for a, b in pairs:
            if a in comp or b in comp:
                comp_edges.add((a, b))
                comp_nodes.update((a, b))
        out.append((frozenset(comp_nodes), frozenset(comp_edges)))
    return out


def dfs_cycle(edges, terminals: Iterable[int], *, strict: bool = True):
    """Euler-style cycle of a Steiner tree, duplicating each internal node.

    Returns the cyclic occurrence list [(node, copy_index), ...]; every
    terminal appears once and every internal node deg(v) times, and
    consecutive occurrences always share a tree edge.
    """
    terminals = set(terminals)
    pairs = _edge_pairs(edges)
    adj = adjacency_of(pairs)
    if not adj:
        raise ConnectivityError("empty tree")
    if len(pairs) != len(adj) - 1 or len(connected_components(pairs)) != 1:
        raise ConnectivityError("input is not a tree")
    leaves = {v for v, nb in adj.items() if len(nb) == 1}
    if strict:
        for v in terminals & set(adj):
            if v not in leaves:
                raise ConnectivityError("terminal %r is internal in the tree" % (v,))
        if not leaves <= terminals:
            raise ConnectivityError("tree has a non-terminal leaf")
    root = min(leaves & terminals)

    seq: List[int] = []
    stack = [(root, None, iter(sorted(adj[root])))]
    seq.append(root)
    while stack:
        v, parent, it = stack[-1]
        moved = False
        for w in it:
            if w == parent:
                continue
            seq.append(w)
            stack.append((w, v, iter(sorted(adj[w]))))
            moved = True
            break
        if not moved:
            stack.pop()
            if stack:
                seq.append(stack[-1][0])
    # The walk ends back at the root; drop the trailing occurrence (cyclic).
    assert seq[-1] == root
    seq = seq[:-1]
    counts: Dict[int, int] = {}
    out = []
    for v in seq:
        out.append((v, counts.get(v, 0)))
        counts[v] = counts.get(v, 0) + 1
    return out


# ---------------------------------------------------------------------------
# Fractional bead solutions


@dataclass(frozen=True)
class WitnessEdge:
    u: int
    v: int
    copy: int
    cost: int
    x: Fraction


@dataclass(frozen=True)
class FractionalBeadSolution:
    """Capacities on parallel terminal-pair edges, each worth its bead cost."""

    entries: Tuple[WitnessEdge, ...]

    def __post_init__(self):
        for e in self.entries:
            if not (0 <= e.x <= 1):
                raise ConnectivityError("capacities must lie in [0,1]")
            if e.cost < 0:
                raise ConnectivityError("bead costs are nonnegative")

    @property
    def value(self) -> Fraction:
        return sum((e.x * e.cost for e in self.entries), Fraction(0))

    def pair_capacities(self) -> Dict[Tuple[int, int], Fraction]:
        caps: Dict[Tuple[int, int], Fraction] = {}
        for e in self.entries:
            key = tuple(sorted((e.u, e.v)))
            caps[key] = caps.get(key, Fraction(0)) + e.x
        return caps

    def to_json(self):
        return {
            "value": str(self.value),
            "edges": [
                {"u": e.u, "v": e.v, "copy": e.copy, "cost": e.cost, "x": str(e.x)}
                for e in self.entries
            ],
        }


def half_integral_witness(
    instance: Instance, solution: SolutionGraph
) -> FractionalBeadSolution:
    """Certificate from a pruned minimal solution: DFS cycles at capacity 1/2.

    Each Steiner component must be a tree (anything else means the input was
    not minimal).  Segments of a component's cycle between consecutive
    terminals become parallel pair edges whose cost is the number of interior
    Steiner copies; terminal-terminal solution edges keep capacity one.
    """
    nt = solution.n_terminals
    terminals = set(range(nt))
    copy_counter: Dict[Tuple[int, int], int] = {}
    entries: List[WitnessEdge] = []

    def add(u: int, v: int, cost: int, x: Fraction):
        key = tuple(sorted((u, v)))
        idx = copy_counter.get(key, 0)
        copy_counter[key] = idx + 1
        entries.append(WitnessEdge(key[0], key[1], idx, cost, x))

    for (a, b) in sorted(solution.edges):
        if a < nt and b < nt:
            add(a, b, 0, Fraction(1))

    for comp_nodes, comp_edges in r_components(solution.edges, terminals):
        if len(comp_edges) != len(comp_nodes) - 1:
            raise NonTreeComponentError(
                "Steiner component %s is not a tree" % sorted(comp_nodes)
            )
        cycle = dfs_cycle(comp_edges, terminals & comp_nodes)
        term_positions = [k for k, (v, _) in enumerate(cycle) if v in terminals]
        if len(term_positions) == 1:
            # Single attachment: the component serves no demand crossing, but a
            # minimal solution never keeps it; guard anyway.
            continue
        for pi in range(len(term_positions)):
            a_pos = term_positions[pi]
            b_pos = term_positions[(pi + 1) % len(term_positions)]
            u = cycle[a_pos][0]
            v = cycle[b_pos][0]
            if b_pos > a_pos:
                interior = b_pos - a_pos - 1
            else:
                interior = len(cycle) - a_pos - 1 + b_pos
            add(u, v, interior, _HALF)
    return FractionalBeadSolution(tuple(entries))


def fractional_feasible(
    instance: Instance, fractional: FractionalBeadSolution
) -> Optional[DemandViolation]:
    """Separation over the cut relaxation; None when every cut is satisfied.

    For demands up to 2, a boundary of size at most one suffices: check every
    demand against the plain min cut, and for each unstable terminal w the min
    cut of the graph without w against the demand minus one.
    """
    caps = fractional.pair_capacities()
    nodes = range(instance.n)
    for (i, j, r) in instance.demand_pairs():
        flow, biset, cut_nodes, cut_edges = element_maxflow(
            caps, (), i, j, extra_nodes=nodes
        )
        if flow < r:
            return DemandViolation((i, j), r, flow, biset, cut_nodes, cut_edges)
        if r < 2:
            continue
        for w in sorted(instance.unstable):
            if w in (i, j):
                continue
            reduced = {
                e: c for e, c in caps.items() if w not in e
            }
            flow, biset, cut_nodes, cut_edges = element_maxflow(
                reduced, (), i, j, extra_nodes=set(nodes) - {w}
            )
            if flow < r - 1:
                witness = Biset(inner=biset.inner, outer=biset.inner | {w})
                return DemandViolation(
                    (i, j), r, flow + 1, witness, (w,) + cut_nodes, cut_edges
                )
    return None


# ---------------------------------------------------------------------------
# Exact optimum of the cut relaxation


@dataclass(frozen=True)
class TauStarResult:
    value: Fraction
    x: Mapping[Tuple[int, int, int], Fraction]
    cuts: int

    def to_json(self):
        return {
            "value": str(self.value),
            "x": {"%d-%d-%d" % k: str(v) for k, v in sorted(self.x.items()) if v},
            "cuts": self.cuts,
        }


def tau_star(
    instance: Instance, *, r_cap: int = 16, max_cuts: int = 5000
) -> TauStarResult:
    """Optimal fractional bead value by constraint generation, exactly.

    Variables aggregate the parallel copies of one pair (identical LP columns);
    free zero-cost copies are fixed at capacity one and moved to the right hand
    side.  Separation reuses the max-flow oracle from fractional_feasible.
    """
    if instance.n > r_cap:
        raise ConnectivityError("terminal count %d exceeds cap %d" % (instance.n, r_cap))
    k = instance.max_demand
    if k == 0:
        return TauStarResult(Fraction(0), {}, 0)

    pairs = [(i, j) for i in range(instance.n) for j in range(i + 1, instance.n)]
    dhat = {p: bead_count(instance.terminal_distance(*p)) for p in pairs}

    var_pairs: List[Tuple[int, int]] = []
    costs: List[Fraction] = []
    upper: List[Fraction] = []
    var_of: Dict[Tuple[int, int], int] = {}
    free_cap: Dict[Tuple[int, int], int] = {}
    for p in pairs:
        if dhat[p] == 0:
            free_cap[p] = 1
            if k > 1:
                var_of[p] = len(var_pairs)
                var_pairs.append(p)
                costs.append(Fraction(1))
                upper.append(Fraction(k - 1))
        else:
            var_of[p] = len(var_pairs)
            var_pairs.append(p)
            costs.append(Fraction(dhat[p]))
            upper.append(Fraction(k))

    rows: List[CoverRow] = []
    seen_rows: Set[Tuple[Tuple[int, ...], Fraction]] = set()

    def add_cut(crossing_pairs, need) -> bool:
        coeffs = {}
        fixed = 0
        for p in crossing_pairs:
            fixed += free_cap.get(p, 0)
            if p in var_of:
                coeffs[var_of[p]] = Fraction(1)
        rhs = Fraction(need - fixed)
        if rhs <= 0 or not coeffs:
            return False
        key = (tuple(sorted(coeffs)), rhs)
        if key in seen_rows:
            return False
        seen_rows.add(key)
        rows.append(CoverRow(coeffs, rhs))
        return True

    # Seed with the singleton cuts of every demand endpoint.
    for (i, j, r) in instance.demand_pairs():
        for v in (i, j):
            add_cut([p for p in pairs if v in p], r)

    nodes = range(instance.n)
    while True:
        if len(rows) > max_cuts:
            raise ConnectivityError("cut generation exceeded %d rows" % max_cuts)
        value, y = solve_min_cover(costs, upper, rows)
        caps: Dict[Tuple[int, int], Fraction] = {}
        for p in pairs:
            c = Fraction(free_cap.get(p, 0))
            if p in var_of:
                c += y[var_of[p]]
            if c:
                caps[p] = c
        progress = False
        violated = False
        for (i, j, r) in instance.demand_pairs():
            flow, biset, _, cut_edges = element_maxflow(
                caps, (), i, j, extra_nodes=nodes
            )
            if flow < r:
                violated = True
                crossing = _crossing_pairs(pairs, biset, set())
                progress |= add_cut(crossing, r)
            if r == 2:
                for w in sorted(instance.unstable):
                    if w in (i, j):
                        continue
                    reduced = {e: c for e, c in caps.items() if w not in e}
                    flow, biset, _, _ = element_maxflow(
                        reduced, (), i, j, extra_nodes=set(nodes) - {w}
                    )
                    if flow < r - 1:
                        violated = True
                        crossing = _crossing_pairs(pairs, biset, {w})
                        progress |= add_cut(crossing, r - 1)
        if violated and not progress:
            raise ConnectivityError("separation produced no new cut")
        if not progress:
            break

    x: Dict[Tuple[int, int, int], Fraction] = {}
    for p in pairs:
        i, j = p
        if dhat[p] == 0:
            x[(i, j, 0)] = Fraction(1)
            extra = y[var_of[p]] if p in var_of else Fraction(0)
            for copy in range(1, k):
                take = min(Fraction(1), extra)
                x[(i, j, copy)] = take
                extra -= take
        else:
            total = y[var_of[p]]
            for copy in range(k):
                take = min(Fraction(1), total)
                x[(i, j, copy)] = take
                total -= take
    value = sum(
        (x[(i, j, c)] * (dhat[(i, j)] if dhat[(i, j)] else (0 if c == 0 else 1)))
        for (i, j, c) in x
    )
    return TauStarResult(Fraction(value), x, len(rows))


def _crossing_pairs(pairs, biset: Biset, removed: Set[int]):
    inner = biset.inner
    blocked = biset.boundary | removed
    crossing = []
    for (a, b) in pairs:
        if a in blocked or b in blocked:
            continue
        if (a in inner) != (b in inner):
            crossing.append((a, b))
    return crossing


def serialize_witness(witness: FractionalBeadSolution) -> str:
    return json.dumps(witness.to_json(), sort_keys=True)
