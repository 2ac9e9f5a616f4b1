import math
import random

import pytest

from relaysynth.audits import (
    min_spanning_subhypergraph_cost,
    random_connected_hypergraph,
    random_tree,
    replacement_bound_holds,
)
from relaysynth.connectivity import is_feasible
from relaysynth.instances import (
    MetricSpace,
    Point,
    all_pairs_demands,
    make_instance,
)
from relaysynth.local_replacement import (
    HypergraphError,
    costed_hypergraph,
    local_replacement,
    max_overlapped_set,
    st_msp_scheme,
)
from relaysynth.steiner import SchemeConfig

E2 = MetricSpace.euclidean(2)


def test_overlap_path_drops_heaviest_cycle_edge():
    assert max_overlapped_set([(0, 1, 3), (1, 2, 5)], {0, 2}) == [(1, 2, 5)]


def test_overlap_star_keeps_cheapest_spoke():
    drop = max_overlapped_set([(0, 1, 1), (0, 2, 2), (0, 3, 3)], {1, 2, 3})
    assert sorted(drop) == [(0, 2, 2), (0, 3, 3)]


def test_overlap_adjacent_pair_is_their_edge():
    assert max_overlapped_set([(0, 1, 4), (1, 2, 2)], {0, 1}) == [(0, 1, 4)]


def test_overlap_requires_group_in_tree():
    with pytest.raises(HypergraphError):
        max_overlapped_set([(0, 1, 1)], {0, 5})


def test_overlap_complement_spans_contraction():
    rng = random.Random(19)
    for _ in range(40):
        n = rng.randint(3, 8)
        tree = [(u, v, rng.randint(1, 9)) for u, v in random_tree(rng, n)]
        group = set(rng.sample(range(n), rng.randint(2, n)))
        dropped = max_overlapped_set(tree, group)
        kept = [e for e in tree if e not in dropped]
        # contracting the group over the kept edges must leave a spanning tree
        anchor = min(group)
        parent = {}

        def find(x):
            parent.setdefault(x, x)
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for u, v, _ in kept:
            ru = find(anchor if u in group else u)
            rv = find(anchor if v in group else v)
            assert ru != rv  # no cycle after contraction
            parent[ru] = rv
        contracted_nodes = {anchor if v in group else v for v in range(n)}
        assert len({find(v) for v in contracted_nodes}) == 1  # spans


def test_replacement_selects_profitable_triple():
    hyper = costed_hypergraph(
        [0, 1, 2], [((0, 1), 1), ((1, 2), 1), ((0, 2), 1), ((0, 1, 2), 1)]
    )
    tree = [e for e in hyper.edges if e.nodes in ({0, 1}, {1, 2})]
    result = local_replacement(hyper, tree)
    assert [sorted(e.nodes) for e in result.selected] == [[0, 1, 2]]
    assert result.cost == 1
    assert not result.kept_pairs


def test_replacement_stops_without_gain():
    hyper = costed_hypergraph(
        [0, 1, 2], [((0, 1), 1), ((1, 2), 1), ((0, 1, 2), 5)]
    )
    tree = [e for e in hyper.edges if e.is_pair]
    result = local_replacement(hyper, tree)
    assert result.selected == ()
    assert result.cost == 2
    assert result.trace.stopped_early


def test_replacement_bound_tight_at_equal_start():
    # when the starting tree already matches the optimum the bound collapses
    hyper = costed_hypergraph([0, 1, 2], [((0, 1), 1), ((1, 2), 1)])
    tree = list(hyper.edges)
    result = local_replacement(hyper, tree)
    tau = min_spanning_subhypergraph_cost(3, hyper.edges)
    assert result.cost <= tau  # bound value tau * (1 + ln 1)


def test_replacement_rejects_bad_tree():
    hyper = costed_hypergraph([0, 1, 2], [((0, 1), 1), ((1, 2), 1)])
    with pytest.raises(HypergraphError):
        local_replacement(hyper, [hyper.edges[0]])


def test_replacement_output_always_spans():
    rng = random.Random(37)
    for _ in range(40):
        n = rng.randint(3, 8)
        hyper = random_connected_hypergraph(rng, n, rng.randint(0, 10))
        pair_edges = sorted(
            (e for e in hyper.edges if e.is_pair),
            key=lambda e: (e.cost, sorted(e.nodes)),
        )
        parent = list(range(n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        tree = []
        for e in pair_edges:
            u, v = sorted(e.nodes)
            if find(u) != find(v):
                parent[max(find(u), find(v))] = min(find(u), find(v))
                tree.append(e)
        result = local_replacement(hyper, tree)
        # selections plus kept pairs must connect every node
        parent2 = list(range(n))

        def find2(x):
            while parent2[x] != x:
                parent2[x] = parent2[parent2[x]]
                x = parent2[x]
            return x

        for e in result.all_edges():
            vs = sorted(e.nodes)
            for v in vs[1:]:
                parent2[find2(v)] = find2(vs[0])
        assert len({find2(v) for v in range(n)}) == 1
        # committed steps strictly shrink the tree
        remaining = result.trace.start_cost
        for step in result.trace.steps:
            assert step.remaining_cost < remaining
            assert step.removed_cost > step.hyperedge_cost
            remaining = step.remaining_cost


def test_replacement_bound_on_random_hypergraphs():
    rng = random.Random(43)
    for _ in range(60):
        n = rng.randint(3, 7)
        hyper = random_connected_hypergraph(rng, n, rng.randint(0, 12))
        pair_edges = sorted(
            (e for e in hyper.edges if e.is_pair),
            key=lambda e: (e.cost, sorted(e.nodes)),
        )
        parent = list(range(n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        tree = []
        for e in pair_edges:
            u, v = sorted(e.nodes)
            if find(u) != find(v):
                parent[max(find(u), find(v))] = min(find(u), find(v))
                tree.append(e)
        result = local_replacement(hyper, tree)
        tau = min_spanning_subhypergraph_cost(n, hyper.edges)
        start = sum(e.cost for e in tree)
        assert replacement_bound_holds(result.cost, tau, start)


def test_scheme_sqrt3_triangle_beats_mst():
    s3 = math.sqrt(3)
    pts = [Point.at(0, 0), Point.at(s3, 0), Point.at(s3 / 2, 1.5)]
    inst = make_instance(pts, all_pairs_demands(3, 1), E2)
    res = st_msp_scheme(inst, SchemeConfig(k=3))
    assert res.size == 1
    assert res.mst_cost == 2
    assert is_feasible(inst, res.solution)


def test_scheme_two_terminals_places_two_beads():
    inst = make_instance([Point.at(0, 0), Point.at(3, 0)], all_pairs_demands(2, 1), E2)
    res = st_msp_scheme(inst, SchemeConfig(k=2))
    assert res.size == 2


def test_scheme_pentagon_places_center():
    pts = [
        Point.at(
            math.cos(math.pi / 2 + 2 * math.pi * i / 5),
            math.sin(math.pi / 2 + 2 * math.pi * i / 5),
        )
        for i in range(5)
    ]
    inst = make_instance(pts, all_pairs_demands(5, 1), E2)
    res = st_msp_scheme(inst, SchemeConfig(k=5))
    assert res.size == 1
    assert is_feasible(inst, res.solution)


def test_scheme_zero_cost_tree_returns_immediately():
    pts = [Point.at(0, 0), Point.at(0.5, 0), Point.at(1.0, 0)]
    inst = make_instance(pts, all_pairs_demands(3, 1), E2)
    res = st_msp_scheme(inst, SchemeConfig(k=3))
    assert res.size == 0
    assert res.trace.steps == ()
