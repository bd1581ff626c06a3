import pytest

from sfcprov.catalog import (DEFAULT_FLAVORS, CostModel, Flavor, VnfCatalog, VnfType,
                             cost_effectiveness_report, generate_catalog, instance_cost,
                             measured_vnf_types, processing_capacity)
from sfcprov.errors import InvalidConfig, UnknownFlavor, UnknownPop, UnknownVnf
from support import make_net


def measured():
    return VnfCatalog(measured_vnf_types())


def test_measured_capacities():
    cat = measured()
    assert processing_capacity(cat, 1, "micro") == 10_000
    assert processing_capacity(cat, 2, "micro") == 13_000


def test_identity_scaling():
    cat = VnfCatalog(measured_vnf_types(), [Flavor("micro", 1, 1, 0.0125)])
    for v in cat.type_ids:
        assert processing_capacity(cat, v) == cat.vnf(v).capacity_pps_on_micro


def test_bigger_flavors_scale_sublinearly():
    cat = measured()
    xl = cat.flavor("t2.xlarge")
    assert processing_capacity(cat, 1, xl) < 4 * processing_capacity(cat, 1)


def test_unknown_lookups():
    cat = measured()
    with pytest.raises(UnknownVnf):
        processing_capacity(cat, 42)
    with pytest.raises(UnknownFlavor):
        processing_capacity(cat, 1, "huge")
    with pytest.raises(UnknownPop):
        instance_cost(cat, make_net(2, [(0, 1, 1.0, 0.0)]), 1, 7)


def test_instance_cost_identity_and_linearity():
    net = make_net(2, [(0, 1, 1.0, 0.0)], price=[0.02, 0.05])
    cat = measured()
    assert instance_cost(cat, net, 1, 0) == 0.02
    assert instance_cost(cat, net, 1, 0) != instance_cost(cat, net, 1, 1)
    doubled = VnfCatalog(measured_vnf_types(), cost_model=CostModel({1: 2.0}))
    assert instance_cost(doubled, net, 1, 1) == 2 * instance_cost(cat, net, 1, 1)
    soft = VnfCatalog([VnfType(1, "fw", 10_000.0, software_multiplier=1.5)])
    assert instance_cost(soft, net, 1, 0) == pytest.approx(0.03)


def test_report_reproduces_big_flavor_row():
    rows = {r.flavor: r for r in cost_effectiveness_report(measured())}
    big = rows["m4.16xlarge"]
    assert (big.price_per_hour, big.vcpu, big.micro_count, big.vcpu_delta) == (3.2, 64, 256, 192)


def test_report_self_row_and_order():
    rows = cost_effectiveness_report(measured(), include_reference=True)
    micro = [r for r in rows if r.flavor == "micro"][0]
    assert (micro.micro_count, micro.vcpu_delta) == (1, 0)
    assert [r.flavor for r in rows] == sorted(r.flavor for r in rows)


def test_report_monotone_and_small_wins():
    rows = cost_effectiveness_report(measured())
    for a in rows:
        assert a.vcpu_delta >= 0
        for b in rows:
            if a.price_per_hour > b.price_per_hour:
                assert a.micro_count >= b.micro_count


def test_report_micro_only_is_empty():
    cat = VnfCatalog(measured_vnf_types(), [DEFAULT_FLAVORS[0]])
    assert cost_effectiveness_report(cat) == []


def test_validation():
    with pytest.raises(InvalidConfig):
        VnfType(1, "x", 0.0)
    with pytest.raises(InvalidConfig):
        VnfType(1, "x", 10.0, sync_required=False, sync_bandwidth_mbps=1.0)
    with pytest.raises(InvalidConfig):
        Flavor("micro", 2, 1, 0.01)
    with pytest.raises(InvalidConfig):
        Flavor("big", 2, 1, -1.0)
    with pytest.raises(InvalidConfig):
        CostModel({0: 0.0})
    with pytest.raises(InvalidConfig):
        CostModel(profit_margin_per_instance_hour=-0.1)
    with pytest.raises(InvalidConfig):
        VnfCatalog(measured_vnf_types(), [Flavor("t2.small", 1, 2, 0.025, 2)])


def test_generated_catalog():
    cat = generate_catalog(3)
    assert cat.type_ids == list(range(1, 10))
    for t in cat.type_ids:
        v = cat.vnf(t)
        assert 2000 <= v.capacity_pps_on_micro <= 12000
        assert v.sync_rate_per_hour == pytest.approx(0.01 * t)
    assert cat.cost_model.profit_margin_per_instance_hour == 0.1
    assert generate_catalog(3).to_json() == cat.to_json()
    assert VnfCatalog.from_dict(cat.to_dict()).to_json() == cat.to_json()


def test_malformed_catalog_document():
    with pytest.raises(InvalidConfig):
        VnfCatalog.from_dict({"vnf_types": [{"id": 1}]})
