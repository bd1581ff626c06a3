"""VNF types, instance flavors, prices and the flavor cost-effectiveness report."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from decimal import Decimal

from .errors import InvalidConfig, UnknownFlavor, UnknownPop, UnknownVnf
from .rng import substream

REFERENCE_FLAVOR = "micro"


@dataclass(frozen=True)
class VnfType:
    id: int
    name: str
    capacity_pps_on_micro: float
    sync_required: bool = True
    sync_bandwidth_mbps: float = 1.0
    sync_rate_per_hour: float = 0.0
    software_multiplier: float = 1.0

    def __post_init__(self):
        if self.capacity_pps_on_micro <= 0:
            raise InvalidConfig(f"VNF {self.name}: capacity must be positive")
        if self.sync_bandwidth_mbps < 0 or self.sync_rate_per_hour < 0:
            raise InvalidConfig(f"VNF {self.name}: negative sync parameters")
        if not self.sync_required and (self.sync_bandwidth_mbps or self.sync_rate_per_hour):
            raise InvalidConfig(f"VNF {self.name}: sync parameters set without sync_required")
        if self.software_multiplier <= 0:
            raise InvalidConfig(f"VNF {self.name}: software multiplier must be positive")


@dataclass(frozen=True)
class Flavor:
    name: str
    vcpu: int
    memory_gib: float
    price_per_hour: float
    micro_equivalents: int = 1
    # processing capacity relative to the reference flavor
    capacity_scale: float = 1.0

    def __post_init__(self):
        if self.price_per_hour < 0:
            raise InvalidConfig(f"flavor {self.name}: negative price")
        if self.micro_equivalents < 1:
            raise InvalidConfig(f"flavor {self.name}: micro_equivalents must be >= 1")
        if self.name == REFERENCE_FLAVOR and (self.vcpu, self.memory_gib, self.micro_equivalents) != (1, 1, 1):
            raise InvalidConfig("the reference flavor must be 1 vCPU / 1 GiB / 1 slot")


@dataclass(frozen=True)
class CostModel:
    pop_multipliers: dict = field(default_factory=dict)
    profit_margin_per_instance_hour: float = 0.1
    # charge each sync link the per-type flat hourly rate on top of bandwidth
    flat_sync: bool = True

    def __post_init__(self):
        if any(m <= 0 for m in self.pop_multipliers.values()):
            raise InvalidConfig("PoP multipliers must be positive")
        if self.profit_margin_per_instance_hour < 0:
            raise InvalidConfig("profit margin must be non-negative")

    def multiplier(self, pop_id: int) -> float:
        return self.pop_multipliers.get(pop_id, 1.0)


# Approximate on-demand Linux list prices (USD/hour). The micro price makes
# 256 micro instances cost as much as the 64-vCPU flavor; capacity_scale
# encodes the sub-linear speed-up of bigger flavors.
DEFAULT_FLAVORS = (
    Flavor("micro", 1, 1, 0.0125, 1, 1.0),
    Flavor("t2.small", 1, 2, 0.025, 2, 1.0),
    Flavor("t2.medium", 2, 4, 0.05, 4, 1.5),
    Flavor("t2.large", 2, 8, 0.1, 8, 1.6),
    Flavor("t2.xlarge", 4, 16, 0.2, 16, 2.5),
    Flavor("t2.2xlarge", 8, 32, 0.4, 32, 4.2),
    Flavor("m4.large", 2, 8, 0.1, 8, 1.7),
    Flavor("m4.xlarge", 4, 16, 0.2, 16, 2.8),
    Flavor("m4.2xlarge", 8, 32, 0.4, 32, 4.6),
    Flavor("m4.4xlarge", 16, 64, 0.8, 64, 8.0),
    Flavor("m4.10xlarge", 40, 160, 2.0, 160, 17.0),
    Flavor("m4.16xlarge", 64, 256, 3.2, 256, 24.0),
)


def measured_vnf_types() -> list[VnfType]:
    """Functions benchmarked on the micro flavor (Shorewall firewall, Snort IDS)."""
    return [
        VnfType(1, "firewall", 10_000.0, sync_rate_per_hour=0.01),
        VnfType(2, "ids", 13_000.0, sync_rate_per_hour=0.02),
    ]


class VnfCatalog:
    """Immutable registry of VNF types, flavors and the cost model."""

    def __init__(self, vnf_types, flavors=DEFAULT_FLAVORS, cost_model: CostModel | None = None):
        self.vnf_types: dict[int, VnfType] = {}
        for v in vnf_types:
            if v.id in self.vnf_types:
                raise InvalidConfig(f"duplicate VNF id {v.id}")
            self.vnf_types[v.id] = v
        self.flavors: dict[str, Flavor] = {}
        for f in flavors:
            if f.name in self.flavors:
                raise InvalidConfig(f"duplicate flavor {f.name}")
            self.flavors[f.name] = f
        if REFERENCE_FLAVOR not in self.flavors:
            raise InvalidConfig(f"catalog needs the {REFERENCE_FLAVOR!r} reference flavor")
        self.cost_model = cost_model or CostModel()

    def vnf(self, vnf_id: int) -> VnfType:
        try:
            return self.vnf_types[vnf_id]
        except KeyError:
            raise UnknownVnf(vnf_id) from None

    def flavor(self, name: str) -> Flavor:
        try:
            return self.flavors[name]
        except KeyError:
            raise UnknownFlavor(name) from None

    @property
    def type_ids(self) -> list[int]:
        return sorted(self.vnf_types)

    def to_dict(self) -> dict:
        cm = self.cost_model
        return {
            "vnf_types": [asdict(self.vnf_types[i]) for i in self.type_ids],
            "flavors": [asdict(f) for f in self.flavors.values()],
            "multipliers": {str(k): v for k, v in sorted(cm.pop_multipliers.items())},
            "profit_margin_per_instance_hour": cm.profit_margin_per_instance_hour,
            "flat_sync": cm.flat_sync,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "VnfCatalog":
        try:
            vnfs = [VnfType(**v) for v in doc["vnf_types"]]
            flavors = [Flavor(**f) for f in doc.get("flavors", [asdict(f) for f in DEFAULT_FLAVORS])]
            cm = CostModel(
                {int(k): float(v) for k, v in doc.get("multipliers", {}).items()},
                float(doc.get("profit_margin_per_instance_hour", 0.1)),
                bool(doc.get("flat_sync", True)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidConfig(f"malformed catalog document: {exc}") from exc
        return cls(vnfs, flavors, cm)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)


def generate_catalog(rng_seed: int, n_types: int = 9, capacity_range=(2000, 12000),
                     sync_rate_step: float = 0.01, sync_bandwidth_mbps: float = 1.0,
                     margin: float = 0.1) -> VnfCatalog:
    """Random VNF catalog; type ``t`` (1-indexed) pays ``t * sync_rate_step`` per sync link-hour."""
    lo, hi = capacity_range
    if n_types < 1 or lo <= 0 or lo > hi:
        raise InvalidConfig("invalid catalog parameters")
    rng = substream(rng_seed, "catalog")
    caps = rng.integers(lo, hi + 1, size=n_types)
    vnfs = [VnfType(t, f"vnf{t}", float(caps[t - 1]), True, sync_bandwidth_mbps,
                    round(sync_rate_step * t, 10))
            for t in range(1, n_types + 1)]
    return VnfCatalog(vnfs, DEFAULT_FLAVORS, CostModel(profit_margin_per_instance_hour=margin))


def processing_capacity(catalog: VnfCatalog, vnf_id: int, flavor: Flavor | str = REFERENCE_FLAVOR) -> float:
    if isinstance(flavor, str):
        flavor = catalog.flavor(flavor)
    elif flavor.name not in catalog.flavors:
        raise UnknownFlavor(flavor.name)
    return catalog.vnf(vnf_id).capacity_pps_on_micro * flavor.capacity_scale


def instance_cost(catalog: VnfCatalog, net, vnf_id: int, pop_id: int) -> float:
    """Hourly price of running one reference instance of ``vnf_id`` at ``pop_id``."""
    if not 0 <= pop_id < net.n_pops:
        raise UnknownPop(pop_id)
    return (net.pops[pop_id].instance_price * catalog.cost_model.multiplier(pop_id)
            * catalog.vnf(vnf_id).software_multiplier)


@dataclass(frozen=True)
class CostRow:
    flavor: str
    price_per_hour: float
    vcpu: int
    micro_count: int
    vcpu_delta: int


def cost_effectiveness_report(catalog: VnfCatalog, include_reference: bool = False) -> list[CostRow]:
    """How many reference instances each flavor's price buys, sorted by flavor name."""
    ref = catalog.flavor(REFERENCE_FLAVOR)
    rows = []
    for name in sorted(catalog.flavors):
        if name == REFERENCE_FLAVOR and not include_reference:
            continue
        f = catalog.flavors[name]
        if ref.price_per_hour == 0:
            count = 0
        else:
            # decimal division keeps 3.2 / 0.0125 at exactly 256
            count = math.floor(Decimal(repr(f.price_per_hour)) / Decimal(repr(ref.price_per_hour)))
        rows.append(CostRow(name, f.price_per_hour, f.vcpu, count, count - f.vcpu))
    return rows
