import itertools
import math

import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

from sfcprov.errors import InsufficientResources, InvalidConfig, InvalidRelease, NoPath
from sfcprov.network import (PhysLink, PhysicalNetwork, PopNode, ResourceDelta, distance_matrix,
                             generate_topology, k_cheapest_paths, shortest_path)
from support import make_net


def all_simple_paths(net, s, d):
    g = nx.Graph()
    g.add_nodes_from(range(net.n_pops))
    g.add_edges_from((l.a, l.b) for l in net.links)
    return [tuple(p) for p in nx.all_simple_paths(g, s, d)]


def test_trivial_path_is_single_node():
    net = make_net(4, [(0, 1, 5.0, 1.0), (1, 2, 5.0, 1.0), (2, 3, 5.0, 1.0)])
    p = shortest_path(net, 3, 3, "delay")
    assert p.nodes == (3,)
    assert p.total_delay == 0
    assert p.bottleneck_bandwidth == math.inf


def test_single_edge():
    net = make_net(2, [(0, 1, 25.0, 1.0)])
    p = shortest_path(net, 0, 1, "delay")
    assert p.nodes == (0, 1) and p.total_delay == 25.0


def test_no_path_raises():
    net = PhysicalNetwork([PopNode(0, 1, 0.0), PopNode(1, 1, 0.0)], [])
    with pytest.raises(NoPath):
        shortest_path(net, 0, 1)
    assert k_cheapest_paths(net, 0, 1, 3) == []


def test_tie_break_prefers_smaller_sequence():
    # 0-1-3 and 0-2-3 both weigh 2
    net = make_net(4, [(0, 2, 1.0, 1.0), (2, 3, 1.0, 1.0), (0, 1, 1.0, 1.0), (1, 3, 1.0, 1.0)])
    assert shortest_path(net, 0, 3, "delay").nodes == (0, 1, 3)
    assert shortest_path(net, 3, 0, "cost").nodes == (3, 1, 0)


@pytest.mark.parametrize("seed", range(8))
def test_shortest_matches_enumeration(seed):
    net = generate_topology(seed, n_pops=7, mean_degree=3.0)
    for s, d in itertools.permutations(range(7), 2):
        paths = all_simple_paths(net, s, d)
        for metric, f in (("delay", net.path_delay), ("cost", net.path_cost)):
            best = min((f(p), p) for p in paths)
            got = shortest_path(net, s, d, metric)
            assert f(got.nodes) == pytest.approx(best[0], rel=1e-12)
            assert got.total_delay == pytest.approx(net.path_delay(got.nodes))


def test_shortest_on_25_nodes_matches_networkx():
    net = generate_topology(11)
    g = nx.Graph()
    for l in net.links:
        g.add_edge(l.a, l.b, w=l.propagation_delay)
    for s, d in [(0, 24), (3, 17), (12, 5)]:
        assert shortest_path(net, s, d, "delay").total_delay == pytest.approx(
            nx.shortest_path_length(g, s, d, weight="w"))


def test_k1_equals_cost_shortest():
    net = generate_topology(4, n_pops=10)
    [p] = k_cheapest_paths(net, 0, 9, 1)
    assert p.nodes == shortest_path(net, 0, 9, "cost").nodes


def test_triangle_two_cheapest():
    net = make_net(3, [(0, 1, 1.0, 1.0), (1, 2, 1.0, 1.0), (0, 2, 1.0, 3.0)])
    paths = k_cheapest_paths(net, 0, 2, 2)
    assert [p.cost for p in paths] == [2.0, 3.0]


@pytest.mark.parametrize("seed", range(5))
def test_k_saturates_and_orders(seed):
    net = generate_topology(seed, n_pops=5, mean_degree=2.8)
    every = all_simple_paths(net, 0, 4)
    got = k_cheapest_paths(net, 0, 4, 1000)
    assert sorted(p.nodes for p in got) == sorted(every)
    costs = [p.cost for p in got]
    assert costs == sorted(costs)
    # same ordering as brute force with lexicographic tie-break
    expected = sorted(every, key=lambda p: (net.path_cost(p), p))
    assert [p.nodes for p in got][:3] == expected[:3]


def test_distance_matrix_consistent():
    net = generate_topology(2, n_pops=9)
    dm = distance_matrix(net, "cost")
    for s in range(9):
        for d in range(9):
            assert dm[s][d] == pytest.approx(net.path_cost(shortest_path(net, s, d, "cost").nodes))


def test_allocate_release_bit_identical():
    net = generate_topology(1, n_pops=6)
    before = net.snapshot()
    e = (net.links[0].a, net.links[0].b)
    d = ResourceDelta("r1", {0: 3, 2: 1}, {e: 0.1 + 0.2})
    net.allocate(d)
    assert net.snapshot() != before
    net.release(d)
    assert net.snapshot() == before


def test_allocate_is_atomic():
    net = make_net(3, [(0, 1, 1.0, 1.0), (1, 2, 1.0, 1.0)], slots=2)
    before = net.snapshot()
    with pytest.raises(InsufficientResources):
        net.allocate(ResourceDelta("x", {0: 1, 1: 3}, {(0, 1): 5.0}))
    assert net.snapshot() == before
    with pytest.raises(InsufficientResources):
        net.allocate(ResourceDelta("y", {0: 1}, {(0, 1): 5.0, (1, 2): 2000.0}))
    assert net.snapshot() == before


def test_release_unknown_delta():
    net = make_net(2, [(0, 1, 1.0, 1.0)])
    d = ResourceDelta("a", {0: 1}, {})
    with pytest.raises(InvalidRelease):
        net.release(d)
    net.allocate(d)
    with pytest.raises(InvalidRelease):
        net.release(ResourceDelta("a", {0: 2}, {}))
    with pytest.raises(InsufficientResources):
        net.allocate(d)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 4), st.floats(0.001, 300.0), st.booleans()),
                min_size=1, max_size=40))
def test_replay_ledger(ops):
    """Live deltas always account for exactly capacity minus residual."""
    net = make_net(5, [(0, 1, 1.0, 1.0), (1, 2, 1.0, 1.0), (2, 3, 1.0, 1.0), (3, 4, 1.0, 1.0)],
                   slots=10)
    initial = net.snapshot()
    live = []
    for k, (pop, mbps, release) in enumerate(ops):
        if release and live:
            net.release(live.pop(0))
        else:
            e = net.links[pop % 4].endpoints
            d = ResourceDelta(k, {pop: 1}, {e: mbps})
            try:
                net.allocate(d)
                live.append(d)
            except InsufficientResources:
                pass
        for p in net.pops:
            assert p.used_slots == sum(d.slots.get(p.id, 0) for d in live)
        for l in net.links:
            used = math.fsum(d.bandwidth.get(l.endpoints, 0.0) for d in live)
            assert l.bandwidth_capacity - l.residual_bandwidth == pytest.approx(used, abs=1e-9)
            assert 0 <= l.residual_bandwidth <= l.bandwidth_capacity
    for d in live:
        net.release(d)
    assert net.snapshot() == initial


def test_generate_defaults_and_ranges():
    net = generate_topology(5)
    assert net.n_pops == 25 and net.is_connected()
    assert all(50 <= p.slot_capacity <= 100 for p in net.pops)
    assert all(10.0 <= l.propagation_delay <= 50.0 for l in net.links)
    assert all(l.bandwidth_capacity == 10000.0 for l in net.links)


def test_generate_two_nodes():
    net = generate_topology(0, n_pops=2)
    assert len(net.links) == 1 and net.is_connected()


def test_generate_deterministic_and_roundtrip():
    a, b = generate_topology(9), generate_topology(9)
    assert a.to_json() == b.to_json()
    assert generate_topology(10).to_json() != a.to_json()
    c = PhysicalNetwork.from_dict(a.to_dict())
    assert c.to_json() == a.to_json()


@pytest.mark.parametrize("kw", [dict(n_pops=1), dict(cap_range=(5, 2)), dict(delay_range=(3.0, 1.0)),
                                dict(delay_range=(0.0, 1.0))])
def test_generate_rejects_bad_config(kw):
    with pytest.raises(InvalidConfig):
        generate_topology(0, **kw)


def test_constructor_validation():
    with pytest.raises(InvalidConfig):
        PhysicalNetwork([PopNode(0, 1, 0.0)], [PhysLink(0, 0, 10.0, 1.0, 0.0)])
    with pytest.raises(InvalidConfig):
        PhysicalNetwork([PopNode(0, 1, 0.0), PopNode(1, 1, 0.0)],
                        [PhysLink(0, 1, 10.0, 1.0, 0.0), PhysLink(1, 0, 10.0, 1.0, 0.0)])
    with pytest.raises(InvalidConfig):
        PhysicalNetwork([PopNode(0, 1, 0.0)], [PhysLink(0, 5, 10.0, 1.0, 0.0)])
