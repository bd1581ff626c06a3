"""Translation phase: size VNF stages from packet-rate demand and wire the instance graph."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .catalog import REFERENCE_FLAVOR, VnfCatalog, processing_capacity
from .errors import InvalidConfig, ZeroCapacity
from .workload import SfcRequest

SOURCE = "source"
DEST = "dest"
VNF = "vnf"


@dataclass(slots=True)
class VnfInstance:
    id: int
    kind: str
    stage: int
    vnf_type: int | None = None
    pinned_pop: int | None = None
    slots: int = 1

    @property
    def is_endpoint(self) -> bool:
        return self.kind != VNF


@dataclass(slots=True)
class VirtualLink:
    id: int
    i: int
    j: int
    bandwidth_mbps: float
    is_sync: bool = False


@dataclass
class VirtualTopology:
    instances: list[VnfInstance]
    links: list[VirtualLink]
    stages: list[list[int]]
    request: SfcRequest | None = None
    incident: list[list[int]] = field(default_factory=list, repr=False)
    # data links ordered by decreasing stage of their tail, for backward delay passes
    backward: list[VirtualLink] = field(default_factory=list, repr=False)

    def __post_init__(self):
        if not self.incident:
            self.incident = [[] for _ in self.instances]
            for link in self.links:
                self.incident[link.i].append(link.id)
                self.incident[link.j].append(link.id)
        if not self.backward:
            stage = [x.stage for x in self.instances]
            self.backward = sorted((l for l in self.links if not l.is_sync),
                                   key=lambda l: -stage[l.i])

    @property
    def sources(self) -> list[int]:
        return self.stages[0]

    @property
    def destination(self) -> int:
        return self.stages[-1][0]

    @property
    def vnf_stages(self) -> list[list[int]]:
        return self.stages[1:-1]

    @property
    def delay_budget(self) -> float:
        return self.request.delay_budget_ms if self.request else math.inf

    def neighbors(self, inst: int) -> list[int]:
        out = []
        for lid in self.incident[inst]:
            link = self.links[lid]
            out.append(link.j if link.i == inst else link.i)
        return out

    def data_links(self):
        return [l for l in self.links if not l.is_sync]

    def sync_links(self):
        return [l for l in self.links if l.is_sync]

    def to_dict(self) -> dict:
        return {
            "instances": [{"id": x.id, "kind": x.kind, "stage": x.stage, "vnf_type": x.vnf_type,
                           "pinned_pop": x.pinned_pop, "slots": x.slots} for x in self.instances],
            "links": [{"id": l.id, "i": l.i, "j": l.j, "bandwidth_mbps": l.bandwidth_mbps,
                       "is_sync": l.is_sync} for l in self.links],
            "stages": self.stages,
            "request": self.request.to_dict() if self.request else None,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "VirtualTopology":
        try:
            instances = [VnfInstance(**x) for x in doc["instances"]]
            links = [VirtualLink(**l) for l in doc["links"]]
            stages = [list(s) for s in doc["stages"]]
            req = SfcRequest.from_dict(doc["request"]) if doc.get("request") else None
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidConfig(f"malformed virtual topology: {exc}") from exc
        if [x.id for x in instances] != list(range(len(instances))):
            raise InvalidConfig("instance ids must be 0..n-1 in order")
        if [l.id for l in links] != list(range(len(links))):
            raise InvalidConfig("link ids must be 0..n-1 in order")
        return cls(instances, links, stages, req)


def instance_count(demand_pps: float, capacity_pps: float) -> int:
    if capacity_pps <= 0:
        raise ZeroCapacity(f"capacity {capacity_pps}")
    # exact rational ceil: float division can overshoot at exact multiples
    return max(1, math.ceil(Fraction(demand_pps) / Fraction(capacity_pps)))


def stage_sizes(request: SfcRequest, catalog: VnfCatalog) -> list[int]:
    return [instance_count(request.demand_pps, processing_capacity(catalog, v, REFERENCE_FLAVOR))
            for v in request.chain]


def translate(request: SfcRequest, catalog: VnfCatalog, sync_topology: str = "ring") -> VirtualTopology:
    """Build the instance graph for ``request``.

    Consecutive stages are wired as a complete bipartite graph; each cut
    carries the request's full bandwidth split equally over its links.
    Same-type instances of a multi-instance stage are joined by sync links
    (a ring by default, or a clique).
    """
    if sync_topology not in ("ring", "clique"):
        raise InvalidConfig(f"unknown sync topology {sync_topology!r}")
    sizes = stage_sizes(request, catalog)
    instances: list[VnfInstance] = []
    stages: list[list[int]] = []

    stages.append([])
    for s in request.sources:
        stages[0].append(len(instances))
        instances.append(VnfInstance(len(instances), SOURCE, 0, None, s, 0))
    for k, (vnf_id, n) in enumerate(zip(request.chain, sizes), start=1):
        ids = []
        for _ in range(n):
            ids.append(len(instances))
            instances.append(VnfInstance(len(instances), VNF, k, vnf_id, None, 1))
        stages.append(ids)
    last = len(stages)
    stages.append([len(instances)])
    instances.append(VnfInstance(len(instances), DEST, last, None, request.destination, 0))

    total = request.bandwidth_mbps
    links: list[VirtualLink] = []
    for a, b in zip(stages, stages[1:]):
        share = total / (len(a) * len(b))
        for i in a:
            for j in b:
                links.append(VirtualLink(len(links), i, j, share, False))
    for k, vnf_id in enumerate(request.chain, start=1):
        members = stages[k]
        vnf = catalog.vnf(vnf_id)
        if len(members) < 2 or not vnf.sync_required:
            continue
        for i, j in _sync_pairs(members, sync_topology):
            links.append(VirtualLink(len(links), i, j, vnf.sync_bandwidth_mbps, True))
    return VirtualTopology(instances, links, stages, request)


def _sync_pairs(members: list[int], topology: str):
    n = len(members)
    if topology == "clique":
        return [(members[a], members[b]) for a in range(n) for b in range(a + 1, n)]
    if n == 2:
        return [(members[0], members[1])]
    return [(members[a], members[(a + 1) % n]) for a in range(n)]


def count_slots(vt: VirtualTopology) -> int:
    return sum(x.slots for x in vt.instances if not x.is_endpoint)


def total_bandwidth(vt: VirtualTopology) -> tuple[float, float]:
    """(data Mbps, sync Mbps) summed over all virtual links."""
    data = math.fsum(l.bandwidth_mbps for l in vt.links if not l.is_sync)
    sync = math.fsum(l.bandwidth_mbps for l in vt.links if l.is_sync)
    return data, sync
