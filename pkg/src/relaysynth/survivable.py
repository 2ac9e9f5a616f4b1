"""{0,1,2}-demand solvers on the bead graph plus the relay degree-reduction pass.

The exact backend is the branch-and-bound bead optimum; the primal-dual
backend grows moats for the connectivity-1 skeleton, patches remaining
2-connectivity deficits greedily, and reverse-deletes.  Either way the
pipeline realizes the selection, re-verifies it, and reports the cost next to
the fractional optimum.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Set, Tuple

from .beads import (
    BeadEdge,
    _first_deficiency,
    _selected_caps,
    build_bead_graph,
    realize,
    tau_integral,
)
from .connectivity import (
    ConnectivityError,
    FractionalBeadSolution,
    _crossing_pairs,
    half_integral_witness,
    fractional_feasible,
    is_feasible,
    prune_minimal,
    tau_star,
    verify_feasible,
)
from .instances import EPS_GEO, Instance, InstanceError, SolutionGraph, bead_count, pairwise_distance


@dataclass(frozen=True)
class SnBackendResult:
    selected: Tuple[BeadEdge, ...]
    cost: int
    certified: bool
    tau_star_value: Fraction

    @property
    def ratio_vs_taustar(self) -> Optional[Fraction]:
        if self.tau_star_value == 0:
            return None
        return Fraction(self.cost) / self.tau_star_value


def sn_backend_exact(instance: Instance, **caps) -> SnBackendResult:
    """Certified optimum on small instances via the bead branch-and-bound."""
    res = tau_integral(instance, k=2, **caps)
    return SnBackendResult(res.selected, res.cost, res.certified, res.lower_bound)


def _pair_tables(instance: Instance, k: int):
    pair_cost: Dict[Tuple[int, int], int] = {}
    max_extra: Dict[Tuple[int, int], int] = {}
    base_caps: Dict[Tuple[int, int], int] = {}
    for i in range(instance.n):
        for j in range(i + 1, instance.n):
            dhat = bead_count(instance.terminal_distance(i, j))
            if dhat > 0:
                pair_cost[(i, j)] = dhat
                max_extra[(i, j)] = k
            else:
                base_caps[(i, j)] = 1
                if k > 1:
                    pair_cost[(i, j)] = 1
                    max_extra[(i, j)] = k - 1
    return pair_cost, max_extra, base_caps


def _moat_forest(instance: Instance) -> List[Tuple[int, int]]:
    """Primal-dual forest for the connectivity-1 part, grown in exact duals."""
    n = instance.n
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    want = [(i, j) for (i, j, r) in instance.demand_pairs() if r >= 1]
    if not want:
        return []
    cost = {p: Fraction(bead_count(instance.terminal_distance(*p))) for p in pairs}

    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def active_components() -> Set[int]:
        act = set()
        for (u, v) in want:
            if find(u) != find(v):
                act.add(find(u))
                act.add(find(v))
        return act

    remaining = dict(cost)
    chosen: List[Tuple[int, int]] = []
    while True:
        act = active_components()
        if not act:
            break
        best = None
        for p in pairs:
            u, v = p
            ru, rv = find(u), find(v)
            if ru == rv:
                continue
            loads = (1 if ru in act else 0) + (1 if rv in act else 0)
            if loads == 0:
                continue
            t = remaining[p] / loads
            if best is None or t < best[0] or (t == best[0] and p < best[1]):
                best = (t, p, loads)
        if best is None:
            raise ConnectivityError("no growable moat for an unmet demand")
        delta, tight_pair, _ = best
        if delta > 0:
            for p in pairs:
                u, v = p
                ru, rv = find(u), find(v)
                if ru == rv:
                    continue
                loads = (1 if ru in act else 0) + (1 if rv in act else 0)
                if loads:
                    remaining[p] -= delta * loads
        chosen.append(tight_pair)
        ru, rv = find(tight_pair[0]), find(tight_pair[1])
        parent[max(ru, rv)] = min(ru, rv)

    # Reverse delete, newest first, keeping every r>=1 pair connected.
    kept = list(chosen)
    for p in reversed(chosen):
        trial = [e for e in kept if e != p]
        parent2 = list(range(n))

        def find2(x):
            while parent2[x] != x:
                parent2[x] = parent2[parent2[x]]
                x = parent2[x]
            return x

        for (a, b) in trial:
            parent2[max(find2(a), find2(b))] = min(find2(a), find2(b))
        if all(find2(u) == find2(v) for (u, v) in want):
            kept = trial
    return kept


def sn_backend_primal_dual(instance: Instance) -> SnBackendResult:
    """Moat-grown forest, greedy 2-connectivity patching, reverse delete."""
    k = 2
    pair_cost, max_extra, base_caps = _pair_tables(instance, k)
    demands = instance.demand_pairs()
    all_pairs = sorted(pair_cost)

    counts: Dict[Tuple[int, int], int] = {}
    for p in _moat_forest(instance):
        if p in pair_cost and base_caps.get(p, 0) == 0:
            counts[p] = max(counts.get(p, 0), 1)

    # Patch every remaining deficit with the cheapest crossing copy.
    while True:
        defic = _first_deficiency(instance, _selected_caps(base_caps, counts), demands)
        if defic is None:
            break
        biset = defic[4]
        crossing = _crossing_pairs(all_pairs, biset, set())
        candidates = [p for p in crossing if counts.get(p, 0) < max_extra.get(p, 0)]
        if not candidates:
            raise ConnectivityError("deficit with no purchasable copy")
        p = min(candidates, key=lambda p: (pair_cost[p], p))
        counts[p] = counts.get(p, 0) + 1

    order = sorted(
        (p for p in counts for _ in range(counts[p])),
        key=lambda p: (-pair_cost[p], p),
    )
    for p in order:
        if counts.get(p, 0) == 0:
            continue
        counts[p] -= 1
        if _first_deficiency(instance, _selected_caps(base_caps, counts), demands):
            counts[p] += 1
        elif counts[p] == 0:
            del counts[p]

    bead = build_bead_graph(instance, k)
    selected = list(bead.zero_cost_edges())
    for (u, v), cnt in sorted(counts.items()):
        copies = [e for e in bead.pair_edges(u, v) if e.cost > 0]
        selected.extend(copies[:cnt])
    cost = sum(e.cost for e in selected)
    ts = tau_star(instance, r_cap=max(16, instance.n))
    return SnBackendResult(tuple(sorted(selected)), cost, False, ts.value)


@dataclass(frozen=True)
class SnReport:
    backend: str
    cost: int
    certified: bool
    tau_star_value: Fraction
    solution: SolutionGraph
    selected: Tuple[BeadEdge, ...]
    pruned: Optional[SolutionGraph]
    witness: Optional[FractionalBeadSolution]
    opt: Optional[int] = None

    @property
    def ratio_vs_taustar(self) -> Optional[Fraction]:
        if self.tau_star_value == 0:
            return None
        return Fraction(self.cost) / self.tau_star_value

    @property
    def ratio_vs_opt(self) -> Optional[Fraction]:
        if self.opt in (None, 0):
            return None
        return Fraction(self.cost) / Fraction(self.opt)

    def to_json(self):
        return {
            "backend": self.backend,
            "cost": self.cost,
            "certified": self.certified,
            "tau_star": str(self.tau_star_value),
            "ratio_vs_taustar": None
            if self.ratio_vs_taustar is None
            else str(self.ratio_vs_taustar),
            "ratio_vs_opt": None if self.ratio_vs_opt is None else str(self.ratio_vs_opt),
            "opt": self.opt,
            "witness_ref": None if self.witness is None else self.witness.to_json(),
            "selected": [[e.u, e.v, e.copy, e.cost] for e in self.selected],
        }


def solve_sn_msp_012(
    instance: Instance,
    backend: str = "exact",
    *,
    include_witness: bool = True,
    eps_geo: float = EPS_GEO,
    opt: Optional[int] = None,
    **backend_caps,
) -> SnReport:
    """Bead-graph pipeline: backend selection, realization, verification, audit."""
    if any(r not in (1, 2) for r in instance.demands.values()):
        raise InstanceError("demands must stay within {0,1,2}")
    if backend == "exact":
        result = sn_backend_exact(instance, **backend_caps)
    elif backend in ("pd", "primal-dual"):
        result = sn_backend_primal_dual(instance)
    else:
        raise InstanceError("unknown backend %r" % (backend,))

    placement = realize(instance, result.selected, eps_geo)
    bad = verify_feasible(instance, placement.solution)
    if bad:
        raise ConnectivityError("backend emitted an infeasible selection: %r" % (bad[0],))
    if placement.size != result.cost:
        raise ConnectivityError("realized size disagrees with selection cost")

    pruned = None
    witness = None
    if include_witness:
        pruned = prune_minimal(instance, placement.solution)
        witness = half_integral_witness(instance, pruned)
        violation = fractional_feasible(instance, witness)
        if violation is not None:
            raise ConnectivityError(
                "half-integral witness failed separation: %r" % (violation,)
            )
    return SnReport(
        backend=backend,
        cost=result.cost,
        certified=result.certified,
        tau_star_value=result.tau_star_value,
        solution=placement.solution,
        selected=result.selected,
        pruned=pruned,
        witness=witness,
        opt=opt,
    )


# ---------------------------------------------------------------------------
# Degree reduction


@dataclass(frozen=True)
class DegreeReduceResult:
    solution: SolutionGraph
    converged: bool
    swaps: int


def degree_reduce(
    instance: Instance,
    solution: SolutionGraph,
    *,
    eps_geo: float = EPS_GEO,
    max_rounds: int = 10_000,
) -> DegreeReduceResult:
    """Shorten-and-swap until every relay degree is at most the packing bound.

    While some Steiner node s exceeds delta, try neighbor pairs (a,b) by
    ascending d(a,b) with d(a,b) <= 1 and strictly shorter than the longer of
    the two spokes; replace that spoke by ab when feasibility survives, then
    re-prune.  Total length strictly drops at every commit.
    """
    if solution.abstract:
        raise InstanceError("degree reduction needs concrete point locations")
    if not is_feasible(instance, solution):
        raise ConnectivityError("degree reduction expects a feasible solution")
    delta = instance.metric.delta
    metric = instance.metric
    graph = solution
    swaps = 0

    for _ in range(max_rounds):
        adj = graph.adjacency()
        over = [
            s
            for s in graph.steiner_ids()
            if len(adj[s]) > delta
        ]
        if not over:
            return DegreeReduceResult(graph, True, swaps)
        progressed = False
        for s in sorted(over):
            neighbors = sorted(adj[s])
            options = []
            for a, b in itertools.combinations(neighbors, 2):
                dab = pairwise_distance(graph.point_of(a), graph.point_of(b), metric)
                dsa = graph.edges.get(tuple(sorted((s, a))))
                dsb = graph.edges.get(tuple(sorted((s, b))))
                if dab > 1 + eps_geo:
                    continue
                if not dab < max(dsa, dsb):
                    continue
                options.append((float(dab), a, b, dab, dsa, dsb))
            options.sort(key=lambda t: (t[0], t[1], t[2]))
            for _, a, b, dab, dsa, dsb in options:
                drop = (s, a) if dsa >= dsb else (s, b)
                candidate = graph.without_edge(drop).with_edge(a, b, dab)
                if is_feasible(instance, candidate):
                    graph = prune_minimal(instance, candidate)
                    swaps += 1
                    progressed = True
                    break
            if progressed:
                break
        if not progressed:
            return DegreeReduceResult(graph, False, swaps)
    return DegreeReduceResult(graph, False, swaps)
