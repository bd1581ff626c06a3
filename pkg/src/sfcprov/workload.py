"""Randomized SFC request workloads and per-request delay budgets."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace

from .errors import InvalidConfig, NoPath
from .network import PhysicalNetwork, shortest_nodes
from .rng import substream

TWO_MONTHS_S = 60 * 86_400
DELAY_SLACK = 1.3


def bandwidth_mbps(pps: float, packet_size_bytes: int = 1000) -> float:
    return pps * packet_size_bytes * 8 / 1e6


@dataclass(frozen=True)
class SfcRequest:
    id: int
    chain: tuple[int, ...]
    sources: tuple[int, ...]
    destination: int
    demand_pps: float
    packet_size_bytes: int = 1000
    arrival_time: float = 0.0
    lifetime: float = 3600.0
    delay_budget_ms: float = 0.0

    def __post_init__(self):
        if not self.chain:
            raise InvalidConfig(f"request {self.id}: empty chain")
        if not self.sources:
            raise InvalidConfig(f"request {self.id}: no sources")
        if self.demand_pps <= 0 or self.lifetime <= 0:
            raise InvalidConfig(f"request {self.id}: demand and lifetime must be positive")
        if self.delay_budget_ms < 0:
            raise InvalidConfig(f"request {self.id}: negative delay budget")

    @property
    def bandwidth_mbps(self) -> float:
        return bandwidth_mbps(self.demand_pps, self.packet_size_bytes)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["chain"] = list(self.chain)
        d["sources"] = list(self.sources)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SfcRequest":
        d = dict(d)
        d["chain"] = tuple(int(v) for v in d["chain"])
        d["sources"] = tuple(int(v) for v in d["sources"])
        return cls(**d)


@dataclass(frozen=True)
class WorkloadParams:
    arrival_rate_rps: float = 0.03
    horizon_s: float = TWO_MONTHS_S
    mean_lifetime_s: float = 3600.0
    mean_chain_len: float = 10.0
    mean_sources: float = 7.0
    demand_range_pps: tuple[float, float] = (2000.0, 120_000.0)
    packet_size_bytes: int = 1000

    def validate(self):
        lo, hi = self.demand_range_pps
        if (self.arrival_rate_rps <= 0 or self.mean_lifetime_s <= 0 or self.horizon_s < 0
                or self.mean_chain_len < 1 or self.mean_sources < 1 or lo <= 0 or lo > hi
                or self.packet_size_bytes <= 0):
            raise InvalidConfig(f"invalid workload parameters: {self}")


def delay_budget(net: PhysicalNetwork, request: SfcRequest, slack: float = DELAY_SLACK) -> float:
    """Slack times the worst source-to-destination shortest-path delay."""
    worst = 0.0
    for s in request.sources:
        net.pop(s)
        nodes = shortest_nodes(net, s, request.destination, "delay")
        if nodes is None:
            raise NoPath(f"no path {s} -> {request.destination}")
        worst = max(worst, net.path_delay(nodes))
    return worst * slack


def generate_workload(rng_seed: int, net: PhysicalNetwork, catalog,
                      params: WorkloadParams = WorkloadParams()) -> list[SfcRequest]:
    params.validate()
    rng = substream(rng_seed, "workload")
    type_ids = catalog.type_ids
    n_pops = net.n_pops
    out = []
    t = 0.0
    while True:
        t += float(rng.exponential(1.0 / params.arrival_rate_rps))
        if t >= params.horizon_s:
            break
        lifetime = float(rng.exponential(params.mean_lifetime_s))
        n_vnfs = 1 + int(rng.poisson(params.mean_chain_len - 1))
        if n_vnfs <= len(type_ids):
            chain = rng.choice(type_ids, size=n_vnfs, replace=False)
        else:
            chain = rng.choice(type_ids, size=n_vnfs, replace=True)
        dest = int(rng.integers(0, n_pops))
        n_src = min(n_pops - 1, 1 + int(rng.poisson(params.mean_sources - 1)))
        others = [p for p in range(n_pops) if p != dest]
        sources = sorted(int(s) for s in rng.choice(others, size=n_src, replace=False))
        demand = float(rng.uniform(*params.demand_range_pps))
        req = SfcRequest(len(out), tuple(int(c) for c in chain), tuple(sources), dest,
                         demand, params.packet_size_bytes, t, lifetime, 1.0)
        out.append(replace(req, delay_budget_ms=delay_budget(net, req)))
    return out


def dump_jsonl(requests, path) -> None:
    with open(path, "w") as fh:
        for r in requests:
            fh.write(json.dumps(r.to_dict(), sort_keys=True) + "\n")


def load_jsonl(path) -> list[SfcRequest]:
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(SfcRequest.from_dict(json.loads(line)))
            except (ValueError, TypeError, KeyError) as exc:
                raise InvalidConfig(f"{path}:{lineno}: {exc}") from exc
    return out
