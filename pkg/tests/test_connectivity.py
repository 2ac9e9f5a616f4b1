import math
import random
from fractions import Fraction

import networkx as nx
import pytest

from relaysynth.beads import realize, tau_integral
from relaysynth.connectivity import (
    ConnectivityError,
    FractionalBeadSolution,
    NonTreeComponentError,
    WitnessEdge,
    blocks,
    dfs_cycle,
    fractional_feasible,
    half_integral_witness,
    is_feasible,
    prune_minimal,
    q_connectivity,
    q_connectivity_cut,
    r_components,
    tau_star,
    verify_feasible,
)
from relaysynth.instances import (
    MetricSpace,
    Point,
    SolutionGraph,
    all_pairs_demands,
    make_instance,
)

from bruteforce import brute_q_connectivity

E2 = MetricSpace.euclidean(2)


def pentagon_instance():
    pts = [
        Point.at(
            math.cos(math.pi / 2 + 2 * math.pi * i / 5),
            math.sin(math.pi / 2 + 2 * math.pi * i / 5),
        )
        for i in range(5)
    ]
    return make_instance(pts, all_pairs_demands(5, 1), E2)


def square_instance():
    pts = [Point.at(0, 0), Point.at(1, 0), Point.at(1, 1), Point.at(0, 1)]
    return make_instance(pts, all_pairs_demands(4, 2), E2)


# ---------------------------------------------------------------------------
# q_connectivity


def test_single_path_through_q_node():
    edges = [(0, 2), (2, 1)]
    assert q_connectivity(edges, {2}, 0, 1) == 1


def test_cycle_gives_two_paths():
    edges = [(0, 1), (1, 2), (2, 3), (3, 0)]
    assert q_connectivity(edges, set(), 0, 2) == 2


def test_shared_q_node_caps_at_one():
    # two u-v routes through the same interior Q-node w
    edges = [(0, 2), (2, 1), (0, 3), (3, 2), (2, 4), (4, 1)]
    assert q_connectivity(edges, {2}, 0, 1) == 1


def test_q_connectivity_rejects_equal_endpoints():
    with pytest.raises(ConnectivityError):
        q_connectivity([(0, 1)], set(), 0, 0)


def test_parallel_edges_counted_by_capacity():
    flow, _, _, _ = q_connectivity_cut({(0, 1): 2}, set(), 0, 1)
    assert flow == 2


def test_oracle_equivalence_random_graphs():
    rng = random.Random(17)
    for _ in range(120):
        n = rng.randint(3, 7)
        edges = []
        for i in range(n):
            for j in range(i + 1, n):
                if rng.random() < 0.45:
                    edges.append((i, j))
        q = {v for v in range(n) if rng.random() < 0.4}
        u, v = rng.sample(range(n), 2)
        assert q_connectivity(edges, q, u, v) == brute_q_connectivity(
            edges, q, u, v
        )


def test_menger_duality_cut_size_matches_flow():
    rng = random.Random(23)
    for _ in range(80):
        n = rng.randint(3, 7)
        caps = {}
        for i in range(n):
            for j in range(i + 1, n):
                if rng.random() < 0.5:
                    caps[(i, j)] = 1
        q = {v for v in range(n) if rng.random() < 0.4}
        u, v = rng.sample(range(n), 2)
        flow, biset, cut_nodes, cut_edges = q_connectivity_cut(
            caps, q, u, v, nodes=range(n)
        )
        assert flow == len(cut_nodes) + len(cut_edges)
        assert u in biset.inner
        assert v not in biset.outer


# ---------------------------------------------------------------------------
# verify_feasible / prune_minimal


def test_square_two_connected_without_relays():
    inst = square_instance()
    assert is_feasible(inst, SolutionGraph.build(inst))


def test_far_pair_reports_zero_connectivity():
    inst = make_instance([Point.at(0, 0), Point.at(3, 0)], {(0, 1): 1}, E2)
    violations = verify_feasible(inst, SolutionGraph.build(inst))
    assert len(violations) == 1
    assert violations[0].pair == (0, 1)
    assert violations[0].achieved == 0


def test_single_chain_cannot_serve_demand_two():
    inst = make_instance([Point.at(0, 0), Point.at(3, 0)], {(0, 1): 2}, E2)
    sol = SolutionGraph.build(inst, [Point.at(1, 0), Point.at(2, 0)])
    violations = verify_feasible(inst, sol)
    assert len(violations) == 1
    assert violations[0].achieved == 1
    # the witness cut isolates the endpoints with a single relay element
    assert violations[0].cut_nodes or violations[0].cut_edges


def test_prune_removes_redundant_relay():
    # the relay's spokes are the longest edges, so they fall first and the
    # isolated relay is dropped in the node pass
    inst = make_instance([Point.at(0, 0), Point.at(0.4, 0)], {(0, 1): 1}, E2)
    sol = SolutionGraph.build(inst, [Point.at(0.2, 0.9)])
    pruned = prune_minimal(inst, sol)
    assert len(pruned.steiner) == 0
    assert set(pruned.edges) == {(0, 1)}


def test_prune_order_is_longest_edge_first():
    # with the relay on the segment, the direct edge is the longest and goes
    # first, which leaves the relay critical: pruning is order-faithful, not
    # size-minimizing
    inst = make_instance([Point.at(0, 0), Point.at(1, 0)], {(0, 1): 1}, E2)
    pruned = prune_minimal(inst, SolutionGraph.build(inst, [Point.at(0.5, 0)]))
    assert len(pruned.steiner) == 1
    assert (0, 1) not in pruned.edges


def test_prune_keeps_minimal_solution():
    inst = make_instance([Point.at(0, 0), Point.at(2, 0)], {(0, 1): 1}, E2)
    sol = SolutionGraph.build(inst, [Point.at(1, 0)])
    pruned = prune_minimal(inst, sol)
    assert len(pruned.steiner) == 1
    assert len(pruned.edges) == 2


def test_prune_square_keeps_cycle_edges():
    inst = square_instance()
    pruned = prune_minimal(inst, SolutionGraph.build(inst))
    assert set(pruned.edges) == {(0, 1), (1, 2), (2, 3), (0, 3)}


def test_prune_output_is_edge_and_node_critical():
    rng = random.Random(31)
    for _ in range(10):
        n = rng.randint(3, 6)
        pts = [Point.at(rng.uniform(0, 3), rng.uniform(0, 3)) for _ in range(n)]
        demands = {}
        for i in range(n):
            for j in range(i + 1, n):
                r = rng.choice((0, 1, 1, 2))
                if r:
                    demands[(i, j)] = r
        if not demands:
            demands[(0, 1)] = 1
        inst = make_instance(pts, demands, E2)
        res = tau_integral(inst)
        sol = realize(inst, res.selected).solution
        pruned = prune_minimal(inst, sol)
        for edge in pruned.edges:
            assert not is_feasible(inst, pruned.without_edge(edge))
        for node in pruned.steiner_ids():
            assert not is_feasible(inst, pruned.without_steiner(node))


def test_prune_rejects_infeasible_input():
    inst = make_instance([Point.at(0, 0), Point.at(3, 0)], {(0, 1): 1}, E2)
    with pytest.raises(ConnectivityError):
        prune_minimal(inst, SolutionGraph.build(inst))


# ---------------------------------------------------------------------------
# blocks and R-components


def test_blocks_of_tree_are_single_edges():
    edges = [(0, 1), (1, 2), (1, 3)]
    assert blocks(edges) == sorted(
        [frozenset({(0, 1)}), frozenset({(1, 2)}), frozenset({(1, 3)})],
        key=lambda blk: sorted(blk),
    )


def test_blocks_of_cycle_is_one_block():
    edges = [(0, 1), (1, 2), (2, 0)]
    assert blocks(edges) == [frozenset({(0, 1), (0, 2), (1, 2)})]


def test_blocks_two_triangles_sharing_a_vertex():
    edges = [(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 2)]
    result = blocks(edges)
    assert len(result) == 2
    assert frozenset({(0, 1), (0, 2), (1, 2)}) in result
    assert frozenset({(2, 3), (2, 4), (3, 4)}) in result


def test_blocks_match_networkx_on_random_graphs():
    rng = random.Random(41)
    for _ in range(60):
        n = rng.randint(3, 9)
        edges = set()
        for i in range(n):
            for j in range(i + 1, n):
                if rng.random() < 0.4:
                    edges.add((i, j))
        if not edges:
            continue
        got = {blk for blk in blocks(edges)}
        g = nx.Graph(list(edges))
        want = {
            frozenset(tuple(sorted(e)) for e in comp)
            for comp in nx.biconnected_component_edges(g)
        }
        assert got == want


def test_r_components_star():
    edges = [(3, 0), (3, 1), (3, 2)]  # relay 3 with three terminals
    comps = r_components(edges, {0, 1, 2})
    assert len(comps) == 1
    nodes, comp_edges = comps[0]
    assert nodes == {0, 1, 2, 3}
    assert comp_edges == {(0, 3), (1, 3), (2, 3)}


def test_r_components_all_terminals_empty():
    assert r_components([(0, 1), (1, 2)], {0, 1, 2}) == []


def test_r_components_two_relay_paths():
    edges = [(0, 4), (4, 1), (2, 5), (5, 3)]
    comps = r_components(edges, {0, 1, 2, 3})
    assert len(comps) == 2
    assert {frozenset(c[0]) for c in comps} == {
        frozenset({0, 1, 4}),
        frozenset({2, 3, 5}),
    }


def test_r_components_cover_all_relay_edges():
    rng = random.Random(53)
    for _ in range(20):
        n = rng.randint(4, 9)
        terminals = set(range(n // 2))
        edges = set()
        for i in range(n):
            for j in range(i + 1, n):
                if rng.random() < 0.4:
                    edges.add((i, j))
        comps = r_components(edges, terminals)
        relay_edges = {
            e for e in edges if e[0] not in terminals or e[1] not in terminals
        }
        covered = set()
        for _, comp_edges in comps:
            covered |= comp_edges
        assert covered == relay_edges


# ---------------------------------------------------------------------------
# DFS cycles


def test_dfs_cycle_star():
    seq = dfs_cycle([(3, 0), (3, 1), (3, 2)], {0, 1, 2})
    assert seq == [(0, 0), (3, 0), (1, 0), (3, 1), (2, 0), (3, 2)]


def test_dfs_cycle_path():
    seq = dfs_cycle([(0, 2), (2, 1)], {0, 1})
    assert seq == [(0, 0), (2, 0), (1, 0), (2, 1)]


def test_dfs_cycle_two_relays():
    seq = dfs_cycle([(0, 2), (2, 3), (3, 1)], {0, 1})
    assert [v for v, _ in seq] == [0, 2, 3, 1, 3, 2]


def test_dfs_cycle_counts_match_degree():
    rng = random.Random(61)
    for _ in range(20):
        n = rng.randint(3, 9)
        edges = []
        for v in range(1, n):
            edges.append((rng.randint(0, v - 1), v))
        adj = {}
        for a, b in edges:
            adj.setdefault(a, set()).add(b)
            adj.setdefault(b, set()).add(a)
        leaves = {v for v in adj if len(adj[v]) == 1}
        internal = set(adj) - leaves
        seq = dfs_cycle(edges, leaves, strict=True)
        counts = {}
        for v, _ in seq:
            counts[v] = counts.get(v, 0) + 1
        for v in leaves:
            assert counts[v] == 1
        for v in internal:
            assert counts[v] == len(adj[v])
        # consecutive occurrences share a tree edge
        eset = {tuple(sorted(e)) for e in edges}
        for i in range(len(seq)):
            a = seq[i][0]
            b = seq[(i + 1) % len(seq)][0]
            assert tuple(sorted((a, b))) in eset


def test_dfs_cycle_rejects_internal_terminal():
    with pytest.raises(ConnectivityError):
        dfs_cycle([(0, 1), (1, 2)], {0, 1, 2}, strict=True)


# ---------------------------------------------------------------------------
# Half-integral witness and the cut relaxation


def test_witness_path_relay():
    inst = make_instance([Point.at(0, 0), Point.at(2, 0)], {(0, 1): 1}, E2)
    pruned = prune_minimal(inst, SolutionGraph.build(inst, [Point.at(1, 0)]))
    witness = half_integral_witness(inst, pruned)
    assert witness.value == 1
    assert sorted((e.cost, e.x) for e in witness.entries) == [
        (1, Fraction(1, 2)),
        (1, Fraction(1, 2)),
    ]
    assert fractional_feasible(inst, witness) is None
    assert witness.value <= Fraction(5 * 1, 2)


def test_witness_terminal_tree_costs_nothing():
    pts = [Point.at(0, 0), Point.at(0.9, 0), Point.at(1.8, 0)]
    inst = make_instance(pts, {(0, 1): 1, (1, 2): 1}, E2)
    pruned = prune_minimal(inst, SolutionGraph.build(inst))
    witness = half_integral_witness(inst, pruned)
    assert witness.value == 0
    assert all(e.x == 1 for e in witness.entries)
    assert fractional_feasible(inst, witness) is None


def test_witness_pentagon_star_attains_packing_budget():
    inst = pentagon_instance()
    sol = SolutionGraph.build(inst, [Point.at(0, 0)])
    pruned = prune_minimal(inst, sol)
    assert len(pruned.steiner) == 1
    witness = half_integral_witness(inst, pruned)
    assert witness.value == Fraction(5, 2)  # exactly delta * |S| / 2
    assert fractional_feasible(inst, witness) is None


def test_witness_rejects_non_tree_component():
    inst = make_instance([Point.at(0, 0), Point.at(1.8, 0)], {(0, 1): 1}, E2)
    sol = SolutionGraph.build(
        inst, [Point.at(0.9, 0.2), Point.at(0.9, -0.2)]
    )  # both relays see both terminals and each other: a relay cycle
    with pytest.raises(NonTreeComponentError):
        half_integral_witness(inst, sol)


def test_fractional_feasible_accepts_integral_solution():
    inst = make_instance([Point.at(0, 0), Point.at(3, 0)], {(0, 1): 2}, E2)
    entries = (
        WitnessEdge(0, 1, 0, 2, Fraction(1)),
        WitnessEdge(0, 1, 1, 2, Fraction(1)),
    )
    assert fractional_feasible(inst, FractionalBeadSolution(entries)) is None


def test_fractional_feasible_flags_empty_solution():
    inst = make_instance([Point.at(0, 0), Point.at(3, 0)], {(0, 1): 1}, E2)
    violation = fractional_feasible(inst, FractionalBeadSolution(()))
    assert violation is not None
    assert violation.pair == (0, 1)
    assert violation.witness.boundary == frozenset()


def test_fractional_feasible_square_half_capacities():
    inst = square_instance()
    sides = [(0, 1), (1, 2), (2, 3), (0, 3)]
    entries = []
    for a, b in sides:
        entries.append(WitnessEdge(a, b, 0, 0, Fraction(1, 2)))
        entries.append(WitnessEdge(a, b, 1, 1, Fraction(1, 2)))
    witness = FractionalBeadSolution(tuple(entries))
    assert fractional_feasible(inst, witness) is None
    # independent check: enumerate all proper subsets of the four corners
    caps = witness.pair_capacities()
    from itertools import combinations

    for size in (1, 2, 3):
        for inner in combinations(range(4), size):
            crossing = sum(
                c
                for (a, b), c in caps.items()
                if (a in inner) != (b in inner)
            )
            assert crossing >= 2


def test_unstable_terminal_enters_separation():
    # doubled chain u = w = v with w unstable and demand 2: every plain cut
    # carries capacity 2, but removing w disconnects, so the boundary cut fires
    pts = [Point.at(0, 0), Point.at(0.9, 0), Point.at(1.8, 0)]
    inst = make_instance(pts, {(0, 2): 2}, E2, unstable=[1])
    entries = (
        WitnessEdge(0, 1, 0, 0, Fraction(1)),
        WitnessEdge(0, 1, 1, 1, Fraction(1)),
        WitnessEdge(1, 2, 0, 0, Fraction(1)),
        WitnessEdge(1, 2, 1, 1, Fraction(1)),
    )
    violation = fractional_feasible(inst, FractionalBeadSolution(entries))
    assert violation is not None
    assert violation.witness.boundary == frozenset({1})
    assert violation.pair == (0, 2)


def test_tau_star_examples():
    inst = make_instance([Point.at(0, 0), Point.at(3, 0)], {(0, 1): 1}, E2)
    assert tau_star(inst).value == 2
    inst = make_instance([Point.at(0, 0), Point.at(3, 0)], {(0, 1): 2}, E2)
    assert tau_star(inst).value == 4
    assert tau_star(square_instance()).value == 0


def test_tau_star_solution_is_separation_clean():
    inst = pentagon_instance()
    res = tau_star(inst)
    assert res.value == Fraction(5, 2)
    # every pentagon pair needs one bead, so each positive copy has cost 1
    entries = tuple(
        WitnessEdge(i, j, c, 1, x) for (i, j, c), x in res.x.items() if x
    )
    assert fractional_feasible(inst, FractionalBeadSolution(entries)) is None


def test_tau_star_lower_bounds_integral_optimum():
    rng = random.Random(71)
    for _ in range(15):
        n = rng.randint(3, 6)
        pts = [Point.at(rng.uniform(0, 4), rng.uniform(0, 4)) for _ in range(n)]
        demands = {}
        for i in range(n):
            for j in range(i + 1, n):
                r = rng.choice((0, 1, 2))
                if r:
                    demands[(i, j)] = r
        if not demands:
            demands[(0, 1)] = 1
        inst = make_instance(
            pts, demands, E2, unstable=[v for v in range(n) if rng.random() < 0.3]
        )
        res = tau_integral(inst)
        assert tau_star(inst).value <= res.cost
