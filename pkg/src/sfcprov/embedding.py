"""Embeddings of a virtual topology: cost breakdown, feasibility audit, delay, resource deltas."""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass

from .catalog import VnfCatalog, instance_cost
from .errors import InvalidEmbedding
from .network import Edge, PhysicalNetwork, ResourceDelta, edge_key
from .translate import VirtualTopology

# Constraint tags shared by the ILP rows and the feasibility audit.
TAG_ENDPOINT = "endpoint"
TAG_UNIQUE = "unique"
TAG_CAPACITY = "capacity"
TAG_BANDWIDTH = "bandwidth"
TAG_FLOW = "flow"
TAG_DELAY = "delay"


@dataclass
class CostBreakdown:
    instance_cost: float = 0.0
    data_bandwidth_cost: float = 0.0
    sync_cost: float = 0.0
    flat_sync_cost: float = 0.0
    total: float = 0.0
    revenue: float = 0.0
    profit: float = 0.0

    @property
    def objective(self) -> float:
        """Placement-dependent part of the cost (instances plus all link bandwidth)."""
        return self.instance_cost + self.data_bandwidth_cost + self.sync_cost


@dataclass
class Embedding:
    placement: dict[int, int]
    # link id -> PoP sequence; a single-element sequence means co-located endpoints
    routing: dict[int, tuple[int, ...]]
    cost: CostBreakdown | None = None
    e2e_delay_ms: float | None = None
    # set by the exact solver
    objective: float | None = None
    nodes: int | None = None

    def physical_links(self, link_id: int) -> list[Edge]:
        p = self.routing[link_id]
        return [edge_key(u, v) for u, v in zip(p, p[1:])]


@dataclass(frozen=True)
class Violation:
    tag: str
    entity: object
    detail: str = ""


@dataclass
class Reject:
    reason: str
    detail: str = ""

    def __bool__(self):
        return False


def within_budget(delay_ms: float, budget_ms: float | None) -> bool:
    # absorbs summation-order rounding between a walk and its budget
    return budget_ms is None or delay_ms <= budget_ms + 1e-9


def _validate(net: PhysicalNetwork, vt: VirtualTopology, emb: Embedding) -> None:
    for x in vt.instances:
        m = emb.placement.get(x.id)
        if m is None or not 0 <= m < net.n_pops:
            raise InvalidEmbedding(f"instance {x.id} is not placed on a known PoP")
    for link in vt.links:
        path = emb.routing.get(link.id)
        if not path:
            raise InvalidEmbedding(f"virtual link {link.id} is not routed")
        if path[0] != emb.placement[link.i] or path[-1] != emb.placement[link.j]:
            raise InvalidEmbedding(f"virtual link {link.id} route does not join its endpoints")
        for u, v in zip(path, path[1:]):
            if not net.has_link(u, v):
                raise InvalidEmbedding(f"virtual link {link.id} uses missing link {u}-{v}")


def evaluate_cost(net: PhysicalNetwork, vt: VirtualTopology, emb: Embedding,
                  catalog: VnfCatalog) -> CostBreakdown:
    _validate(net, vt, emb)
    margin = catalog.cost_model.profit_margin_per_instance_hour
    inst = []
    revenue = []
    for x in vt.instances:
        if x.is_endpoint:
            continue
        delta = instance_cost(catalog, net, x.vnf_type, emb.placement[x.id]) * x.slots
        inst.append(delta)
        revenue.append(delta + margin * x.slots)
    data, sync, flat = [], [], []
    for link in vt.links:
        c = link.bandwidth_mbps * net.path_cost(emb.routing[link.id])
        if link.is_sync:
            sync.append(c)
            if catalog.cost_model.flat_sync:
                flat.append(catalog.vnf(vt.instances[link.i].vnf_type).sync_rate_per_hour)
        else:
            data.append(c)
    cb = CostBreakdown(math.fsum(inst), math.fsum(data), math.fsum(sync), math.fsum(flat))
    cb.total = cb.instance_cost + cb.data_bandwidth_cost + cb.sync_cost + cb.flat_sync_cost
    cb.revenue = math.fsum(revenue)
    cb.profit = cb.revenue - cb.total
    return cb


def link_delays(net: PhysicalNetwork, vt: VirtualTopology, emb: Embedding) -> list[float]:
    return [net.path_delay(emb.routing[l.id]) for l in vt.links]


def e2e_delay(vt: VirtualTopology, delays) -> float:
    """Worst, over sources, of the fastest routed walk to the destination.

    A walk visits one instance per stage along data links; its delay is the
    sum of the routed physical delays of the links it uses.
    """
    to_dest = [math.inf] * len(vt.instances)
    to_dest[vt.destination] = 0.0
    for l in vt.backward:
        d = delays[l.id] + to_dest[l.j]
        if d < to_dest[l.i]:
            to_dest[l.i] = d
    return max((to_dest[s] for s in vt.sources), default=0.0)


def resource_delta(vt: VirtualTopology, emb: Embedding, owner) -> ResourceDelta:
    slots: dict[int, int] = defaultdict(int)
    for x in vt.instances:
        if x.slots:
            slots[emb.placement[x.id]] += x.slots
    per_edge: dict[Edge, list[float]] = defaultdict(list)
    for link in vt.links:
        path = emb.routing[link.id]
        for u, v in zip(path, path[1:]):
            per_edge[edge_key(u, v)].append(link.bandwidth_mbps)
    bw = {e: math.fsum(vals) for e, vals in sorted(per_edge.items())}
    return ResourceDelta(owner, dict(sorted(slots.items())), bw)


def check_feasibility(net: PhysicalNetwork, vt: VirtualTopology, emb: Embedding,
                      delay_budget: float | None = None) -> list[Violation]:
    """Audit ``emb`` against the network's current residual state."""
    out: list[Violation] = []
    for x in vt.instances:
        m = emb.placement.get(x.id)
        if m is None or not 0 <= m < net.n_pops:
            out.append(Violation(TAG_UNIQUE, ("instance", x.id), "not placed exactly once"))
            continue
        if x.pinned_pop is not None and m != x.pinned_pop:
            out.append(Violation(TAG_ENDPOINT, ("instance", x.id),
                                 f"pinned to {x.pinned_pop}, placed at {m}"))
    for extra in set(emb.placement) - set(range(len(vt.instances))):
        out.append(Violation(TAG_UNIQUE, ("instance", extra), "unknown instance placed"))
    slots: dict[int, int] = defaultdict(int)
    for x in vt.instances:
        m = emb.placement.get(x.id)
        if m is not None and 0 <= m < net.n_pops:
            slots[m] += x.slots
    for m, n in sorted(slots.items()):
        if n > net.free_slots(m):
            out.append(Violation(TAG_CAPACITY, ("pop", m), f"{n} slots > {net.free_slots(m)} free"))
    per_edge: dict[Edge, list[float]] = defaultdict(list)
    routed_ok = True
    for link in vt.links:
        path = emb.routing.get(link.id)
        pi, pj = emb.placement.get(link.i), emb.placement.get(link.j)
        if not path:
            out.append(Violation(TAG_FLOW, ("link", link.id), "not routed"))
            routed_ok = False
            continue
        if path[0] != pi or path[-1] != pj:
            out.append(Violation(TAG_FLOW, ("link", link.id),
                                 f"route {path[0]}..{path[-1]} does not join {pi}->{pj}"))
            routed_ok = False
        gap = False
        for u, v in zip(path, path[1:]):
            if not net.has_link(u, v):
                gap = True
            else:
                per_edge[edge_key(u, v)].append(link.bandwidth_mbps)
        if gap:
            out.append(Violation(TAG_FLOW, ("link", link.id), "route is not contiguous"))
            routed_ok = False
    for e, vals in sorted(per_edge.items()):
        need = math.fsum(vals)
        if not net.bandwidth_fits(e, need):
            out.append(Violation(TAG_BANDWIDTH, ("edge", e),
                                 f"{need:.6g} Mbps > {net.residual(e):.6g} residual"))
    if delay_budget is not None and routed_ok:
        d = e2e_delay(vt, [net.path_delay(emb.routing[l.id]) for l in vt.links])
        if not within_budget(d, delay_budget):
            out.append(Violation(TAG_DELAY, ("request", vt.request.id if vt.request else None),
                                 f"{d:.6g} ms > budget {delay_budget:.6g} ms"))
    return out
