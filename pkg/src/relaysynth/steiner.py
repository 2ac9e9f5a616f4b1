"""Tree solvers for all-pairs demands: MST baseline, small-set oracle, hypergraph.

The small-set oracle searches a shared candidate universe (terminal positions,
unit-circle intersections, bead points, optional grid) by iterative deepening
on the number of relay points.  It is exact over that universe; the universe
itself is heuristically complete, so callers either use analytically known
cases or cross-validate at two grid resolutions.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from .beads import BeadEdge, realize
from .connectivity import is_feasible, verify_feasible
from .instances import (
    EPS_GEO,
    Instance,
    InstanceError,
    Point,
    SolutionGraph,
    bead_count,
    build_unit_disk_graph,
)


class OracleBudgetError(RuntimeError):
    pass


@dataclass(frozen=True)
class SchemeConfig:
    """Knobs for the component oracle and the spanning scheme."""

    k: int = 5
    candidate_depth: int = 2
    grid_resolution: Optional[float] = None
    max_candidates: int = 1500
    max_steiner: int = 12
    state_cap: int = 400_000
    hypergraph_budget: int = 2000

    def __post_init__(self):
        if self.k < 2:
            raise InstanceError("component size cap k must be >= 2")


def _require_all_pairs_unit_demands(instance: Instance) -> None:
    expected = instance.n * (instance.n - 1) // 2
    if len(instance.demands) != expected or any(
        r != 1 for r in instance.demands.values()
    ):
        raise InstanceError("solver requires demand 1 between every terminal pair")


# ---------------------------------------------------------------------------
# MST baseline


def mst_pairs(instance: Instance) -> List[Tuple[int, int, int]]:
    """Kruskal MST over bead costs; ties broken lexicographically."""
    n = instance.n
    edges = sorted(
        (bead_count(instance.terminal_distance(i, j)), i, j)
        for i in range(n)
        for j in range(i + 1, n)
    )
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    chosen = []
    for cost, i, j in edges:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
            chosen.append((cost, i, j))
    return chosen


def mst_baseline(instance: Instance, eps_geo: float = EPS_GEO) -> SolutionGraph:
    """Realize the bead MST; a feasible all-pairs tree with |S| = sum of costs."""
    _require_all_pairs_unit_demands(instance)
    selected = [BeadEdge(i, j, 0, cost) for cost, i, j in mst_pairs(instance)]
    placement = realize(instance, selected, eps_geo)
    bad = verify_feasible(instance, placement.solution)
    if bad:
        raise InstanceError("bead MST unexpectedly infeasible: %r" % (bad[0],))
    return placement.solution


# ---------------------------------------------------------------------------
# Candidate universe


@dataclass(frozen=True)
class CandidateUniverse:
    """Shared relay-position candidates; the first n entries are the terminals."""

    points: Tuple[Point, ...]
    n_terminals: int
    adjacency: np.ndarray  # bool matrix, unit-disk relation over points
    truncated: bool

    def neighbors_mask(self, idx: int) -> np.ndarray:
        return self.adjacency[idx]


def _round_key(coords: Sequence[float]) -> Tuple[float, ...]:
    return tuple(round(c, 9) for c in coords)


def build_candidate_universe(
    instance: Instance, config: SchemeConfig, eps_geo: float = EPS_GEO
) -> CandidateUniverse:
    metric = instance.metric
    if metric.kind == "finite":
        points = [Point.node(i) for i in range(metric.size)]
        size = len(points)
        adj = np.zeros((size, size), dtype=bool)
        for i in range(size):
            for j in range(size):
                if i != j and metric.matrix[i][j] <= 1 + eps_geo:
                    adj[i][j] = True
        term_ids = [p.index for p in instance.terminals]
        order = term_ids + [i for i in range(size) if i not in set(term_ids)]
        reindex = np.array(order)
        return CandidateUniverse(
            tuple(points[i] for i in order),
            instance.n,
            adj[np.ix_(reindex, reindex)],
            False,
        )

    if metric.dim != 2:
        raise InstanceError("the geometric oracle only supports the plane")

    cap = config.max_candidates
    truncated = False
    coords: List[Tuple[float, float]] = []
    seen: Set[Tuple[float, ...]] = set()

    def push_block(block: np.ndarray) -> None:
        nonlocal truncated
        for xy in block:
            key = _round_key(xy)
            if key in seen:
                continue
            if len(coords) >= cap:
                truncated = True
                return
            seen.add(key)
            coords.append((float(xy[0]), float(xy[1])))

    # Terminals always occupy indices 0..n-1, even at coincident locations.
    for p in instance.terminals:
        seen.add(_round_key(p.coords))
        coords.append((float(p.coords[0]), float(p.coords[1])))

    def pair_arrays(points):
        arr = np.asarray(points, dtype=float)
        ii, jj = np.triu_indices(len(arr), k=1)
        return arr[ii], arr[jj]

    # Unit-circle intersections, layered up to the configured depth.
    for _ in range(config.candidate_depth):
        if len(coords) < 2:
            break
        a, b = pair_arrays(coords)
        diff = b - a
        d2 = (diff * diff).sum(axis=1)
        mask = (d2 > 0.0) & (d2 <= 4.0)
        if mask.any():
            a, b, diff, d2 = a[mask], b[mask], diff[mask], d2[mask]
            d = np.sqrt(d2)
            h = np.sqrt(np.maximum(1.0 - d2 / 4.0, 0.0))
            mid = (a + b) / 2.0
            offset = np.stack([-diff[:, 1], diff[:, 0]], axis=1) * (h / d)[:, None]
            push_block(np.concatenate([mid + offset, mid - offset]))
        if truncated:
            break

    # Interior bead points of candidate pair segments.
    if not truncated and len(coords) >= 2:
        a, b = pair_arrays(coords)
        d = np.sqrt(((b - a) ** 2).sum(axis=1))
        counts = np.maximum(np.ceil(d - eps_geo).astype(int) - 1, 0)
        for c in sorted(set(counts.tolist()) - {0}):
            sel = counts == c
            aa, bb = a[sel], b[sel]
            for step in range(1, c + 1):
                push_block(aa + (step / (c + 1)) * (bb - aa))
            if truncated:
                break

    if config.grid_resolution:
        delta = config.grid_resolution
        xs = [p.coords[0] for p in instance.terminals]
        ys = [p.coords[1] for p in instance.terminals]
        gx = np.arange(min(xs) - 1.0, max(xs) + 1.0 + 1e-12, delta)
        gy = np.arange(min(ys) - 1.0, max(ys) + 1.0 + 1e-12, delta)
        mesh = np.stack(np.meshgrid(gx, gy), axis=-1).reshape(-1, 2)
        push_block(mesh)

    arr = np.array(coords)
    diff = arr[:, None, :] - arr[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=2))
    adj = dist <= 1.0 + eps_geo
    np.fill_diagonal(adj, False)
    points = tuple(Point.at(*c) for c in coords)
    return CandidateUniverse(points, instance.n, adj, truncated)


# ---------------------------------------------------------------------------
# Exact small-set oracle


def _connects(adj: np.ndarray, nodes: Sequence[int], targets: Sequence[int]) -> bool:
    nodes = list(nodes)
    pos = {v: i for i, v in enumerate(nodes)}
    parent = list(range(len(nodes)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, u in enumerate(nodes):
        row = adj[u]
        for j in range(i + 1, len(nodes)):
            if row[nodes[j]]:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[rj] = ri
    root = find(pos[targets[0]])
    return all(find(pos[t]) == root for t in targets[1:])


def _deepening_search(
    universe: CandidateUniverse,
    targets: List[int],
    size: int,
    state_cap: int,
    accept,
    with_duplicates: bool,
):
    """DFS over candidate (multi)sets of the given size, connectivity-pruned.

    Every chosen point must touch a target or an earlier choice, which is
    complete for inclusion-minimal relay sets.
    """
    adj = universe.adjacency
    n_points = len(universe.points)
    target_mask = np.zeros(n_points, dtype=bool)
    for t in targets:
        target_mask |= adj[t]
    states = [0]
    seen: Set[Tuple[int, ...]] = set()
    found: List[Optional[Tuple[int, ...]]] = [None]

    def rec(chosen: Tuple[int, ...], mask: np.ndarray):
        if found[0] is not None:
            return
        states[0] += 1
        if states[0] > state_cap:
            raise OracleBudgetError("state cap exceeded")
        if len(chosen) == size:
            if accept(chosen):
                found[0] = chosen
            return
        allowed = np.flatnonzero(mask)
        for c in allowed.tolist():
            if not with_duplicates and c in chosen:
                continue
            nxt = tuple(sorted(chosen + (c,)))
            if nxt in seen:
                continue
            seen.add(nxt)
            rec(nxt, mask | adj[c])

    if size == 0:
        return () if accept(()) else None
    rec((), target_mask)
    return found[0]


@dataclass(frozen=True)
class OracleResult:
    cost: int
    witness: Tuple[Point, ...]
    exact: bool


def exact_component_oracle(
    instance: Instance,
    subset: Iterable[int],
    config: SchemeConfig,
    universe: Optional[CandidateUniverse] = None,
) -> OracleResult:
    """Fewest relay points connecting the terminal subset, over the universe."""
    subset = sorted(set(subset))
    if len(subset) < 2:
        raise InstanceError("component oracle needs at least two terminals")
    if len(subset) > max(config.k, 12):
        raise InstanceError("component oracle limited to small subsets")
    if universe is None:
        universe = build_candidate_universe(instance, config)

    # Bead chains along the subset's MST give an always-available fallback.
    fallback_edges = []
    sub_pairs = sorted(
        (bead_count(instance.terminal_distance(i, j)), i, j)
        for i, j in itertools.combinations(subset, 2)
    )
    parent = {v: v for v in subset}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    ub = 0
    for cost, i, j in sub_pairs:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
            fallback_edges.append(BeadEdge(i, j, 0, cost))
            ub += cost
    fallback_points = realize(instance, fallback_edges).points

    exact = not universe.truncated
    adj = universe.adjacency

    def accept(chosen):
        return _connects(adj, list(subset) + list(chosen), subset)

    for size in range(0, min(ub, config.max_steiner)):
        try:
            hit = _deepening_search(
                universe, list(subset), size, config.state_cap, accept, False
            )
        except OracleBudgetError:
            exact = False
            break
        if hit is not None:
            return OracleResult(size, tuple(universe.points[c] for c in hit), exact)
    if ub > config.max_steiner:
        exact = False
    return OracleResult(ub, fallback_points, exact)


@dataclass(frozen=True)
class Hyperedge:
    nodes: FrozenSet[int]
    cost: int
    witness: Tuple[Point, ...]
    exact: bool


@dataclass(frozen=True)
class ComponentHypergraph:
    nodes: Tuple[int, ...]
    k: int
    edges: Tuple[Hyperedge, ...]

    def edge_for(self, subset) -> Hyperedge:
        key = frozenset(subset)
        for e in self.edges:
            if e.nodes == key:
                return e
        raise KeyError(subset)

    def to_json(self):
        return {
            "k": self.k,
            "edges": [
                {
                    "nodes": sorted(e.nodes),
                    "cost": e.cost,
                    "exact": e.exact,
                    "witness": [list(p.coords) if p.coords else p.index for p in e.witness],
                }
                for e in self.edges
            ],
        }


def _witness_connects(
    instance: Instance,
    witness: Tuple[Point, ...],
    subset: FrozenSet[int],
    eps_geo: float = EPS_GEO,
) -> bool:
    pts = [instance.terminals[t] for t in sorted(subset)] + list(witness)
    if any(p.is_abstract for p in pts):
        return False
    edges = build_unit_disk_graph(pts, instance.metric, eps_geo)
    parent = list(range(len(pts)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra
    return len({find(i) for i in range(len(subset))}) == 1


def build_component_hypergraph(
    instance: Instance, config: SchemeConfig
) -> ComponentHypergraph:
    """Oracle costs for every terminal subset of size 2..k, pairs in closed form.

    A superset whose witness still connects a smaller set caps that set's cost,
    which keeps the stored table consistent with witness reuse.
    """
    n = instance.n
    total = sum(math.comb(n, j) for j in range(2, config.k + 1))
    if total > config.hypergraph_budget:
        raise InstanceError(
            "hypergraph of %d edges exceeds budget; lower k" % total
        )
    universe = build_candidate_universe(instance, config)
    table: Dict[FrozenSet[int], Hyperedge] = {}
    for j in range(2, min(config.k, n) + 1):
        for combo in itertools.combinations(range(n), j):
            key = frozenset(combo)
            if j == 2:
                i, l = combo
                cost = bead_count(instance.terminal_distance(i, l))
                witness = realize(instance, [BeadEdge(i, l, 0, cost)]).points
                table[key] = Hyperedge(key, cost, witness, True)
            else:
                res = exact_component_oracle(instance, combo, config, universe)
                table[key] = Hyperedge(key, res.cost, res.witness, res.exact)

    # Witness reuse pass, larger sets first.
    for key in sorted(table, key=lambda s: -len(s)):
        entry = table[key]
        for drop in sorted(key):
            sub = key - {drop}
            if len(sub) < 2:
                continue
            child = table[sub]
            if entry.cost < child.cost and _witness_connects(
                instance, entry.witness, sub
            ):
                table[sub] = Hyperedge(sub, entry.cost, entry.witness, entry.exact)
    edges = tuple(
        table[k] for k in sorted(table, key=lambda s: (len(s), sorted(s)))
    )
    return ComponentHypergraph(tuple(range(n)), config.k, edges)


# ---------------------------------------------------------------------------
# Brute-force optimum for tiny instances


def brute_force_opt(
    instance: Instance,
    max_s: int,
    config: Optional[SchemeConfig] = None,
    universe: Optional[CandidateUniverse] = None,
) -> Tuple[int, Tuple[Point, ...]]:
    """Smallest relay multiset (duplicates allowed) meeting every demand.

    Exhausts the candidate universe by iterative deepening; raises
    OracleBudgetError when max_s is exhausted.
    """
    config = config or SchemeConfig()
    if universe is None:
        universe = build_candidate_universe(instance, config)
    term_ids = list(range(instance.n))

    def accept(chosen):
        pts = [universe.points[c] for c in chosen]
        sol = SolutionGraph.build(instance, pts)
        return is_feasible(instance, sol)

    for size in range(0, max_s + 1):
        hit = _deepening_search(
            universe, term_ids, size, config.state_cap, accept, True
        )
        if hit is not None:
            return size, tuple(universe.points[c] for c in hit)
    raise OracleBudgetError("infeasible within budget (max_s=%d)" % max_s)
