"""Physical PoP graph, residual-capacity bookkeeping and path queries."""
from __future__ import annotations

import copy
import heapq
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable

from .errors import InsufficientResources, InvalidConfig, InvalidRelease, NoPath, UnknownPop
from .rng import substream

Edge = tuple[int, int]

# Regional on-demand prices (USD/hour) of the 1 vCPU / 1 GiB Linux flavor,
# used to give each generated PoP a location-dependent instance price.
REGIONAL_MICRO_PRICES = (
    0.0116, 0.0116, 0.0116, 0.0124, 0.0126, 0.0128, 0.0132, 0.0132,
    0.0134, 0.0138, 0.0144, 0.0146, 0.0146, 0.0152, 0.0186,
)


def edge_key(a: int, b: int) -> Edge:
    return (a, b) if a < b else (b, a)


@dataclass
class PopNode:
    id: int
    slot_capacity: int
    instance_price: float
    used_slots: int = 0

    @property
    def free_slots(self) -> int:
        return self.slot_capacity - self.used_slots


@dataclass
class PhysLink:
    a: int
    b: int
    bandwidth_capacity: float
    propagation_delay: float
    bandwidth_price: float
    residual_bandwidth: float = field(default=math.nan)

    def __post_init__(self):
        if math.isnan(self.residual_bandwidth):
            self.residual_bandwidth = float(self.bandwidth_capacity)

    @property
    def endpoints(self) -> Edge:
        return (self.a, self.b)


@dataclass(frozen=True)
class Path:
    nodes: tuple[int, ...]
    total_delay: float
    bottleneck_bandwidth: float
    cost: float = 0.0

    @property
    def edges(self) -> list[Edge]:
        return [edge_key(u, v) for u, v in zip(self.nodes, self.nodes[1:])]

    def __len__(self):
        return len(self.nodes)


@dataclass
class ResourceDelta:
    """Slots per PoP and Mbps per undirected link claimed by one owner."""

    owner: Hashable
    slots: dict[int, int] = field(default_factory=dict)
    bandwidth: dict[Edge, float] = field(default_factory=dict)

    def is_empty(self) -> bool:
        return not any(self.slots.values()) and not any(self.bandwidth.values())


class PhysicalNetwork:
    """Undirected PoP graph; every link has a single shared residual pool.

    Residual bandwidth of a link is always recomputed as capacity minus the
    exactly-rounded sum of live allocations, so allocate/release pairs restore
    the previous state bit for bit.
    """

    def __init__(self, pops: Iterable[PopNode], links: Iterable[PhysLink]):
        self.pops: list[PopNode] = sorted(pops, key=lambda p: p.id)
        if [p.id for p in self.pops] != list(range(len(self.pops))):
            raise InvalidConfig("PoP ids must be the contiguous range 0..n-1")
        self.links: list[PhysLink] = []
        self._link_index: dict[Edge, int] = {}
        self.adj: dict[int, list[int]] = {p.id: [] for p in self.pops}
        for link in links:
            if link.a == link.b:
                raise InvalidConfig(f"self-loop on PoP {link.a}")
            if link.a not in self.adj or link.b not in self.adj:
                raise InvalidConfig(f"link {link.a}-{link.b} references an unknown PoP")
            if link.propagation_delay <= 0:
                raise InvalidConfig("propagation delay must be positive")
            if link.bandwidth_price < 0:
                raise InvalidConfig("bandwidth price must be non-negative")
            key = edge_key(link.a, link.b)
            if key in self._link_index:
                raise InvalidConfig(f"duplicate link {key}")
            link.a, link.b = key
            self._link_index[key] = len(self.links)
            self.links.append(link)
            self.adj[key[0]].append(key[1])
            self.adj[key[1]].append(key[0])
        for nbrs in self.adj.values():
            nbrs.sort()
        for p in self.pops:
            if p.instance_price < 0 or p.slot_capacity < 0:
                raise InvalidConfig(f"PoP {p.id} has negative price or capacity")
        self.delay = {e: self.links[i].propagation_delay for e, i in self._link_index.items()}
        self.price = {e: self.links[i].bandwidth_price for e, i in self._link_index.items()}
        self._live: dict[Hashable, ResourceDelta] = {}
        self._edge_alloc: dict[Edge, dict[Hashable, float]] = {e: {} for e in self._link_index}
        self._path_cache: dict[tuple, object] = {}

    # -- lookups ----------------------------------------------------------
    @property
    def n_pops(self) -> int:
        return len(self.pops)

    def pop(self, pop_id: int) -> PopNode:
        if not 0 <= pop_id < len(self.pops):
            raise UnknownPop(pop_id)
        return self.pops[pop_id]

    def link(self, a: int, b: int) -> PhysLink:
        return self.links[self._link_index[edge_key(a, b)]]

    def has_link(self, a: int, b: int) -> bool:
        return edge_key(a, b) in self._link_index

    def neighbors(self, pop_id: int) -> list[int]:
        return self.adj[pop_id]

    def residual(self, edge: Edge) -> float:
        return self.links[self._link_index[edge]].residual_bandwidth

    def bandwidth_fits(self, edge: Edge, mbps: float) -> bool:
        """Whether ``mbps`` more fits on ``edge`` under the same rule ``allocate`` applies."""
        link = self.links[self._link_index[edge]]
        alloc = self._edge_alloc[edge]
        if not alloc:
            return mbps <= link.bandwidth_capacity
        return math.fsum([*alloc.values(), mbps]) <= link.bandwidth_capacity

    def free_slots(self, pop_id: int) -> int:
        return self.pops[pop_id].free_slots

    @property
    def total_slots(self) -> int:
        return sum(p.slot_capacity for p in self.pops)

    @property
    def used_slots(self) -> int:
        return sum(p.used_slots for p in self.pops)

    @property
    def free_slots_total(self) -> int:
        return self.total_slots - self.used_slots

    def is_connected(self) -> bool:
        if not self.pops:
            return True
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for v in self.adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return len(seen) == len(self.pops)

    def live_deltas(self) -> dict[Hashable, ResourceDelta]:
        return dict(self._live)

    def snapshot(self) -> tuple:
        """Hashable view of all mutable residual state (for equality checks)."""
        return (
            tuple(p.used_slots for p in self.pops),
            tuple(l.residual_bandwidth for l in self.links),
        )

    def clone(self) -> "PhysicalNetwork":
        return copy.deepcopy(self)

    def path_delay(self, nodes) -> float:
        d = 0.0
        for u, v in zip(nodes, nodes[1:]):
            d += self.delay[edge_key(u, v)]
        return d

    def path_cost(self, nodes) -> float:
        c = 0.0
        for u, v in zip(nodes, nodes[1:]):
            c += self.price[edge_key(u, v)]
        return c

    def make_path(self, nodes) -> Path:
        nodes = tuple(nodes)
        edges = [edge_key(u, v) for u, v in zip(nodes, nodes[1:])]
        bottleneck = min((self.residual(e) for e in edges), default=math.inf)
        return Path(nodes, self.path_delay(nodes), bottleneck, self.path_cost(nodes))

    # -- resource bookkeeping ---------------------------------------------
    def allocate(self, delta: ResourceDelta) -> None:
        if delta.owner in self._live:
            raise InsufficientResources(f"owner {delta.owner!r} already holds resources")
        for pop_id, n in delta.slots.items():
            node = self.pop(pop_id)
            if n < 0 or node.used_slots + n > node.slot_capacity:
                raise InsufficientResources(
                    f"PoP {pop_id}: need {n} slots, {node.free_slots} free")
        for e, mbps in delta.bandwidth.items():
            if e not in self._link_index:
                raise InsufficientResources(f"unknown link {e}")
            cap = self.links[self._link_index[e]].bandwidth_capacity
            if mbps < 0 or math.fsum([*self._edge_alloc[e].values(), mbps]) > cap:
                raise InsufficientResources(
                    f"link {e}: need {mbps} Mbps, {self.residual(e)} residual")
        for pop_id, n in delta.slots.items():
            self.pops[pop_id].used_slots += n
        for e, mbps in delta.bandwidth.items():
            self._edge_alloc[e][delta.owner] = mbps
            self._refresh(e)
        self._live[delta.owner] = delta

    def release(self, delta: ResourceDelta) -> None:
        held = self._live.get(delta.owner)
        if held is None or held.slots != delta.slots or held.bandwidth != delta.bandwidth:
            raise InvalidRelease(f"owner {delta.owner!r} does not hold this delta")
        for pop_id, n in delta.slots.items():
            self.pops[pop_id].used_slots -= n
        for e in delta.bandwidth:
            del self._edge_alloc[e][delta.owner]
            self._refresh(e)
        del self._live[delta.owner]

    def _refresh(self, e: Edge) -> None:
        link = self.links[self._link_index[e]]
        alloc = self._edge_alloc[e]
        link.residual_bandwidth = (
            link.bandwidth_capacity - math.fsum(alloc.values()) if alloc
            else float(link.bandwidth_capacity))

    # -- serialization ----------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "pops": [{"id": p.id, "slots": p.slot_capacity, "instance_price": p.instance_price}
                     for p in self.pops],
            "links": [{"a": l.a, "b": l.b, "bandwidth_mbps": l.bandwidth_capacity,
                       "delay_ms": l.propagation_delay,
                       "price_per_mbps_hour": l.bandwidth_price} for l in self.links],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PhysicalNetwork":
        try:
            pops = [PopNode(int(p["id"]), int(p["slots"]), float(p["instance_price"]))
                    for p in doc["pops"]]
            links = [PhysLink(int(l["a"]), int(l["b"]), float(l["bandwidth_mbps"]),
                              float(l["delay_ms"]), float(l.get("price_per_mbps_hour", 0.0)))
                     for l in doc["links"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidConfig(f"malformed topology document: {exc}") from exc
        return cls(pops, links)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)


# -- path search ------------------------------------------------------------

def _dijkstra(net: PhysicalNetwork, src: int, dst: int, weight: dict[Edge, float],
              usable: Callable[[Edge], bool] | None = None,
              banned_nodes=frozenset(), banned_edges=frozenset()):
    """Minimal (weight, node sequence) path; ties go to the smaller sequence."""
    heap = [(0.0, (src,))]
    done = set()
    adj = net.adj
    while heap:
        d, path = heapq.heappop(heap)
        u = path[-1]
        if u in done:
            continue
        if u == dst:
            return d, path
        done.add(u)
        for v in adj[u]:
            if v in done or v in banned_nodes:
                continue
            e = (u, v) if u < v else (v, u)
            if e in banned_edges or (usable is not None and not usable(e)):
                continue
            heapq.heappush(heap, (d + weight[e], path + (v,)))
    return None


def _weights(net: PhysicalNetwork, metric: str) -> dict[Edge, float]:
    if metric == "delay":
        return net.delay
    if metric == "cost":
        return net.price
    raise InvalidConfig(f"unknown path metric {metric!r}")


def shortest_nodes(net: PhysicalNetwork, src: int, dst: int, metric: str = "delay",
                   usable: Callable[[Edge], bool] | None = None) -> tuple[int, ...] | None:
    """Node sequence of the minimal path; cached when no residual filter applies."""
    if usable is None:
        key = ("sp", metric, src, dst)
        hit = net._path_cache.get(key)
        if hit is None:
            found = _dijkstra(net, src, dst, _weights(net, metric))
            hit = found[1] if found else ()
            net._path_cache[key] = hit
        return hit or None
    found = _dijkstra(net, src, dst, _weights(net, metric), usable)
    return found[1] if found else None


def distance_matrix(net: PhysicalNetwork, metric: str = "cost") -> list[list[float]]:
    """All-pairs minimal path weight over the static graph (cached)."""
    key = ("apsp", metric)
    hit = net._path_cache.get(key)
    if hit is not None:
        return hit
    weight = _weights(net, metric)
    n = net.n_pops
    out = []
    for src in range(n):
        dist = [math.inf] * n
        dist[src] = 0.0
        heap = [(0.0, src)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u]:
                continue
            for v in net.adj[u]:
                nd = d + weight[(u, v) if u < v else (v, u)]
                if nd < dist[v]:
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
        out.append(dist)
    net._path_cache[key] = out
    return out


def shortest_path(net: PhysicalNetwork, src: int, dst: int, metric: str = "delay") -> Path:
    net.pop(src), net.pop(dst)
    nodes = shortest_nodes(net, src, dst, metric)
    if nodes is None:
        raise NoPath(f"no path {src} -> {dst}")
    return net.make_path(nodes)


def k_cheapest_nodes(net: PhysicalNetwork, src: int, dst: int, k: int,
                     metric: str = "cost") -> list[tuple[int, ...]]:
    """Yen's loopless k-shortest paths, ordered by (weight, node sequence)."""
    if k < 1:
        raise InvalidConfig("k must be >= 1")
    key = ("ksp", metric, src, dst, k)
    hit = net._path_cache.get(key)
    if hit is not None:
        return hit
    weight = _weights(net, metric)

    def total(p):
        c = 0.0
        for u, v in zip(p, p[1:]):
            c += weight[edge_key(u, v)]
        return c

    first = _dijkstra(net, src, dst, weight)
    if first is None:
        net._path_cache[key] = []
        return []
    found = [first[1]]
    candidates: list = []
    seen = {first[1]}
    while len(found) < k:
        last = found[-1]
        for i in range(len(last) - 1):
            root = last[: i + 1]
            banned_edges = {edge_key(p[i], p[i + 1]) for p in found
                            if len(p) > i + 1 and p[: i + 1] == root}
            spur = _dijkstra(net, root[-1], dst, weight,
                             banned_nodes=frozenset(root[:-1]), banned_edges=banned_edges)
            if spur is None:
                continue
            cand = root[:-1] + spur[1]
            if cand not in seen:
                seen.add(cand)
                heapq.heappush(candidates, (total(cand), cand))
        if not candidates:
            break
        found.append(heapq.heappop(candidates)[1])
    net._path_cache[key] = found
    return found


def k_cheapest_paths(net: PhysicalNetwork, src: int, dst: int, k: int) -> list[Path]:
    net.pop(src), net.pop(dst)
    return [net.make_path(p) for p in k_cheapest_nodes(net, src, dst, k, "cost")]


def allocate(net: PhysicalNetwork, delta: ResourceDelta) -> None:
    net.allocate(delta)


def release(net: PhysicalNetwork, delta: ResourceDelta) -> None:
    net.release(delta)


# -- generation ---------------------------------------------------------------

def generate_topology(rng_seed: int, n_pops: int = 25, cap_range=(50, 100),
                      delay_range=(10.0, 50.0), link_bandwidth: float = 10_000.0,
                      mean_degree: float = 4.0, price_table=REGIONAL_MICRO_PRICES,
                      bandwidth_price_per_ms: float = 2e-6) -> PhysicalNetwork:
    """Random connected PoP graph.

    A random spanning tree guarantees connectivity; extra uniformly chosen
    links are then added until the mean degree reaches ``mean_degree``.
    Link bandwidth prices grow with propagation delay (long-haul links cost
    more per Mbps).
    """
    if n_pops < 2:
        raise InvalidConfig("n_pops must be >= 2")
    lo, hi = cap_range
    dlo, dhi = delay_range
    if lo > hi or dlo > dhi or lo < 0 or dlo <= 0 or not price_table:
        raise InvalidConfig("empty or invalid parameter range")
    rng = substream(rng_seed, "topology")
    order = rng.permutation(n_pops)
    edges = set()
    for idx in range(1, n_pops):
        parent = order[rng.integers(0, idx)]
        edges.add(edge_key(int(order[idx]), int(parent)))
    target = min(n_pops * (n_pops - 1) // 2, max(len(edges), round(n_pops * mean_degree / 2)))
    while len(edges) < target:
        a, b = (int(x) for x in rng.choice(n_pops, size=2, replace=False))
        edges.add(edge_key(a, b))
    pops = []
    for i in range(n_pops):
        slots = int(rng.integers(lo, hi + 1))
        price = float(price_table[int(rng.integers(0, len(price_table)))])
        pops.append(PopNode(i, slots, price))
    links = []
    for a, b in sorted(edges):
        delay = round(float(rng.uniform(dlo, dhi)), 3)
        links.append(PhysLink(a, b, float(link_bandwidth), delay,
                              round(bandwidth_price_per_ms * delay, 12)))
    return PhysicalNetwork(pops, links)
