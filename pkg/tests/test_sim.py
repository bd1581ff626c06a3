import pytest

from sfcprov.catalog import generate_catalog
from sfcprov.errors import InvalidConfig
from sfcprov.network import generate_topology
from sfcprov.sim import UNPROFITABLE, acceptance_ratio, run, utilization
from sfcprov.workload import SfcRequest, WorkloadParams, generate_workload
from support import make_net, tiny_catalog


def req(k, t, life=100.0, demand=5000.0, budget=1e9, dest=1):
    return SfcRequest(k, (1,), (0,), dest, demand, arrival_time=t, lifetime=life, delay_budget_ms=budget)


def two_pops(slots=1):
    return make_net(2, [(0, 1, 1.0, 0.001)], slots=slots)


def test_empty_workload():
    s = run(two_pops(), tiny_catalog(), [], "spin")
    assert (s.arrived, s.accepted, s.total_profit) == (0, 0, 0.0)
    assert acceptance_ratio(s) == 0.0
    assert len(s.samples) == 1 and s.samples[0].utilization == 0.0


def test_single_request_lifecycle():
    net = two_pops()
    s = run(net, tiny_catalog(), [req(0, 10.0, life=3600.0)], "baseline", sample_interval_s=1000.0,
            horizon_s=5000.0)
    assert s.accepted == 1 and net.used_slots == 0
    assert [x.utilization for x in s.samples] == [0.0, 0.5, 0.5, 0.5, 0.0, 0.0]
    assert s.total_profit == pytest.approx(s.summary()["total_profit"])
    assert s.total_profit > 0


def test_utilization_ratio():
    net = make_net(2, [(0, 1, 1.0, 0.001)], slots=500)
    work = [req(k, 0.0, life=50.0) for k in range(10)]
    s = run(net, tiny_catalog(), work, "spin", sample_interval_s=10.0, horizon_s=20.0)
    assert s.samples[1].utilization == pytest.approx(10 / 1000)
    assert utilization(s) == pytest.approx(0.01)


def test_all_rejected_without_capacity():
    net = two_pops(slots=0)
    work = [req(k, float(k)) for k in range(5)]
    for algo in ("baseline", "spin", "ilp"):
        s = run(net.clone(), tiny_catalog(), work, algo)
        assert s.accepted == 0 and s.rejected == 5 and s.total_profit == 0.0


def test_departure_frees_slot_for_same_time_arrival():
    work = [req(0, 0.0, life=10.0), req(1, 10.0)]
    s = run(two_pops(slots=[1, 0]), tiny_catalog(), work, "spin")
    assert s.accepted == 2


def test_reject_unprofitable():
    net = make_net(2, [(0, 1, 1.0, 5.0)])
    s = run(net, tiny_catalog(), [req(0, 0.0)], "spin", reject_unprofitable=True)
    assert s.rejected == 1 and s.reject_reasons == {UNPROFITABLE: 1}
    s = run(net.clone(), tiny_catalog(), [req(0, 0.0)], "spin")
    assert s.accepted == 1 and s.total_profit < 0


@pytest.mark.parametrize("algo", ["baseline", "spin"])
def test_conservation_and_neutrality(algo):
    net = generate_topology(1, n_pops=10)
    cat = generate_catalog(1)
    work = generate_workload(1, net, cat, WorkloadParams(arrival_rate_rps=0.05, horizon_s=4 * 3600))
    before = net.snapshot()
    s = run(net, cat, work, algo, audit=True)
    assert s.arrived == len(work) == s.accepted + s.rejected
    assert sum(s.reject_reasons.values()) == s.rejected
    assert s.audit_failures == []
    assert net.snapshot() == before
    for a, b in zip(s.samples, s.samples[1:]):
        assert b.arrived >= a.arrived and b.t_s - a.t_s == 3600.0


def test_csv_deterministic():
    net = generate_topology(2, n_pops=8)
    cat = generate_catalog(2)
    work = generate_workload(2, net, cat, WorkloadParams(arrival_rate_rps=0.02, horizon_s=3 * 3600))
    a = run(net.clone(), cat, work, "spin")
    b = run(net.clone(), cat, work, "spin")
    assert a.to_csv() == b.to_csv() and a.summary_json() == b.summary_json()
    assert a.to_csv().splitlines()[0] == "t_s,arrived,accepted,rejected,utilization,cumulative_profit,mean_e2e_delay_ms"


def test_bad_inputs():
    with pytest.raises(InvalidConfig):
        run(two_pops(), tiny_catalog(), [], "greedy")
    with pytest.raises(InvalidConfig):
        run(two_pops(), tiny_catalog(), [], "spin", sample_interval_s=0)
    with pytest.raises(InvalidConfig):
        run(two_pops(), tiny_catalog(), [req(0, 5.0), req(1, 1.0)], "spin")
