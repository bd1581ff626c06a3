"""Greedy embedders: the neighbor-recursive Baseline and the subchain-based SPIN.

Both work on a ``Scratch`` overlay of the network and never mutate it; the
caller allocates the returned embedding's resource delta on acceptance, so a
rejection leaves residual state untouched by construction.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass

from .catalog import VnfCatalog, instance_cost
from .embedding import Embedding, Reject, e2e_delay, evaluate_cost, within_budget
from .network import (Edge, PhysicalNetwork, distance_matrix, edge_key, k_cheapest_nodes,
                      shortest_nodes)
from .translate import VirtualTopology

NO_SLOT = "NoSlot"
NO_BANDWIDTH = "NoBandwidth"
DELAY_EXCEEDED = "DelayExceeded"
SUBCHAIN_UNEMBEDDABLE = "SubchainUnembeddable"
SYNC_UNROUTABLE = "SyncUnroutable"

K_MAX = 8


class Scratch:
    """Tentative slot and bandwidth usage layered over a network's residuals."""

    def __init__(self, net: PhysicalNetwork):
        self.net = net
        self.slots: dict[int, int] = defaultdict(int)
        self.bw: dict[Edge, list[float]] = defaultdict(list)
        self.approx: dict[Edge, float] = defaultdict(float)

    def free_slots(self, m: int) -> int:
        return self.net.free_slots(m) - self.slots[m]

    def fits(self, e: Edge, mbps: float) -> bool:
        # running sums drift by a few ulps; only near-full links need the exact rule
        room = self.net.residual(e) - self.approx[e] - mbps
        if room > 1e-6:
            return True
        if room < -1e-6:
            return False
        pend = self.bw.get(e)
        return self.net.bandwidth_fits(e, math.fsum([*pend, mbps]) if pend else mbps)

    def path_fits(self, nodes, mbps: float) -> bool:
        return all(self.fits(edge_key(u, v), mbps) for u, v in zip(nodes, nodes[1:]))

    def add_route(self, nodes, mbps: float) -> None:
        for u, v in zip(nodes, nodes[1:]):
            e = edge_key(u, v)
            self.bw[e].append(mbps)
            self.approx[e] += mbps

    def drop_route(self, nodes, mbps: float) -> None:
        for u, v in zip(nodes, nodes[1:]):
            e = edge_key(u, v)
            self.bw[e].remove(mbps)
            self.approx[e] -= mbps


def feasible_route(sc: Scratch, src: int, dst: int, mbps: float, metric: str):
    """Minimal path under ``metric`` whose every edge still fits ``mbps``, or None."""
    if src == dst:
        return (src,)
    static = shortest_nodes(sc.net, src, dst, metric)
    if static is not None and sc.path_fits(static, mbps):
        return static
    return shortest_nodes(sc.net, src, dst, metric, usable=lambda e: sc.fits(e, mbps))


def _pinned(vt: VirtualTopology) -> dict[int, int]:
    return {x.id: x.pinned_pop for x in vt.instances if x.is_endpoint}


def _finish(net, vt, placement, routing, delay_budget, catalog):
    delays = [net.path_delay(routing[l.id]) for l in vt.links]
    d = e2e_delay(vt, delays)
    if not within_budget(d, delay_budget):
        return Reject(DELAY_EXCEEDED, f"{d:.3f} ms > {delay_budget:.3f} ms")
    emb = Embedding(placement, routing, e2e_delay_ms=d)
    if catalog is not None:
        emb.cost = evaluate_cost(net, vt, emb, catalog)
    return emb


def _route_rest(sc, vt, routing, placement, sync_metric, data_metric):
    """Route every still-unrouted link; returns the first failing link or None."""
    for link in vt.links:
        if link.id in routing:
            continue
        metric = sync_metric if link.is_sync else data_metric
        p = feasible_route(sc, placement[link.i], placement[link.j], link.bandwidth_mbps, metric)
        if p is None:
            return link
        sc.add_route(p, link.bandwidth_mbps)
        routing[link.id] = p
    return None


# -- Baseline ------------------------------------------------------------------

def baseline_embed(net: PhysicalNetwork, vt: VirtualTopology, delay_budget: float | None = None,
                   catalog: VnfCatalog | None = None):
    """Embed neighbors outward from the sources along delay-shortest paths.

    Each unplaced neighbor j of an instance i hosted at s lands on the first
    PoP of the delay-shortest s -> destination path that has a free slot and
    whose prefix from s carries b_ij; the link (i, j) takes that prefix.
    """
    if delay_budget is None:
        delay_budget = vt.delay_budget
    sc = Scratch(net)
    placement = _pinned(vt)
    routing: dict[int, tuple[int, ...]] = {}
    d = placement[vt.destination]
    expanded: set[int] = set()
    links = vt.links

    # explicit stack keeps deep chains off the interpreter recursion limit
    stack = [vt.sources[0]] if vt.sources else []
    while stack:
        i = stack.pop()
        if i in expanded:
            continue
        expanded.add(i)
        s = placement[i]
        spine = shortest_nodes(net, s, d, "delay") or (s,)
        for lid in vt.incident[i]:
            link = links[lid]
            if link.is_sync:
                continue
            j = link.j if link.i == i else link.i
            if j in placement:
                continue
            host = None
            slot_seen = False
            for k, m in enumerate(spine):
                if sc.free_slots(m) < 1:
                    continue
                slot_seen = True
                if sc.path_fits(spine[: k + 1], link.bandwidth_mbps):
                    host = m
                    prefix = spine[: k + 1]
                    break
            if host is None:
                return Reject(NO_BANDWIDTH if slot_seen else NO_SLOT, f"instance {j}")
            placement[j] = host
            sc.slots[host] += vt.instances[j].slots
            path = prefix if link.i == i else prefix[::-1]
            sc.add_route(path, link.bandwidth_mbps)
            routing[lid] = path
        # reversed so the lowest-id neighbor is expanded first
        for j in reversed(vt.neighbors(i)):
            if j not in expanded:
                stack.append(j)

    missing = [x.id for x in vt.instances if x.id not in placement]
    if missing:
        return Reject(NO_SLOT, f"instances {missing[:5]} unreachable")
    bad = _route_rest(sc, vt, routing, placement, "cost", "delay")
    if bad is not None:
        return Reject(NO_BANDWIDTH, f"virtual link {bad.id}")
    return _finish(net, vt, placement, routing, delay_budget, catalog)


# -- SPIN ----------------------------------------------------------------------

@dataclass(frozen=True)
class Subchain:
    index: int
    instances: tuple[int, ...]  # source, one instance per VNF stage, destination


def decompose(vt: VirtualTopology) -> list[Subchain]:
    sizes = [len(s) for s in vt.stages]
    K = max(sizes[0], max(sizes[1:-1], default=1))
    return [Subchain(k, tuple(stage[k % len(stage)] for stage in vt.stages)) for k in range(K)]


class _LinkIndex:
    def __init__(self, vt: VirtualTopology):
        self.by_pair = {(l.i, l.j): l for l in vt.links if not l.is_sync}

    def between(self, a: int, b: int):
        return self.by_pair[(a, b)]


def embed_subchain(sc: Scratch, vt: VirtualTopology, chain: Subchain, placement: dict,
                   routing: dict, delay_budget: float, k_max: int = K_MAX,
                   links: _LinkIndex | None = None) -> bool:
    """Place the subchain's unplaced instances on the cheapest qualifying path.

    On failure nothing is written to ``sc``, ``placement`` or ``routing``.
    """
    links = links or _LinkIndex(vt)
    net = sc.net
    seq = chain.instances
    hops = [links.between(a, b) for a, b in zip(seq, seq[1:])]
    need_bw = max((l.bandwidth_mbps for l in hops), default=0.0)
    pending = [i for i in seq[1:-1] if i not in placement]
    src, dst = placement[seq[0]], placement[seq[-1]]
    for P in k_cheapest_nodes(net, src, dst, k_max, "cost"):
        if not within_budget(net.path_delay(P), delay_budget):
            continue
        if sum(sc.free_slots(m) for m in P) < len(pending):
            continue
        if not sc.path_fits(P, need_bw):
            continue
        if _commit_on_path(sc, vt, P, pending, hops, placement, routing):
            return True
    return False


def _commit_on_path(sc, vt, P, pending, hops, placement, routing) -> bool:
    new_place = {}
    it = iter(pending)
    cur = next(it, None)
    for m in P:
        free = sc.free_slots(m)
        while cur is not None and free >= vt.instances[cur].slots:
            new_place[cur] = m
            free -= vt.instances[cur].slots
            cur = next(it, None)
    if cur is not None:
        return False
    for i, m in new_place.items():
        sc.slots[m] += vt.instances[i].slots
    pos = {m: k for k, m in enumerate(P)}
    host = {**placement, **new_place}
    added = []
    for link in hops:
        if link.id in routing:
            continue
        a, b = host[link.i], host[link.j]
        route = None
        if a in pos and b in pos and pos[a] <= pos[b]:
            seg = P[pos[a]: pos[b] + 1]
            if sc.path_fits(seg, link.bandwidth_mbps):
                route = seg
        if route is None:
            route = feasible_route(sc, a, b, link.bandwidth_mbps, "cost")
        if route is None:
            for lid, r, bw in added:
                sc.drop_route(r, bw)
                del routing[lid]
            for i, m in new_place.items():
                sc.slots[m] -= vt.instances[i].slots
            return False
        sc.add_route(route, link.bandwidth_mbps)
        routing[link.id] = route
        added.append((link.id, route, link.bandwidth_mbps))
    placement.update(new_place)
    return True


def embed_sync_links(sc: Scratch, vt: VirtualTopology, placement: dict, routing: dict) -> bool:
    for link in vt.sync_links():
        if link.id in routing:
            continue
        p = feasible_route(sc, placement[link.i], placement[link.j], link.bandwidth_mbps, "cost")
        if p is None:
            return False
        sc.add_route(p, link.bandwidth_mbps)
        routing[link.id] = p
    return True


def optimize(sc: Scratch, vt: VirtualTopology, catalog: VnfCatalog, placement: dict,
             routing: dict, delay_budget: float | None) -> float:
    """One pass of single-instance migrations to neighboring PoPs.

    A move is kept only if it strictly lowers the hourly cost and keeps every
    capacity, bandwidth and delay constraint. Returns the total cost change.
    """
    net = sc.net
    links = vt.links
    delays = [net.path_delay(routing[l.id]) for l in links]
    base_cost = 0.0
    for x in vt.instances:
        if not x.is_endpoint:
            base_cost += instance_cost(catalog, net, x.vnf_type, placement[x.id]) * x.slots
    for l in links:
        base_cost += l.bandwidth_mbps * net.path_cost(routing[l.id])
    total_gain = 0.0
    dist = distance_matrix(net, "cost")
    threshold = 1e-12 * max(1.0, abs(base_cost))
    for x in vt.instances:
        if x.is_endpoint:
            continue
        n = placement[x.id]
        for m in net.neighbors(n):
            cur = placement[x.id]
            if m == cur or sc.free_slots(m) < x.slots:
                continue
            delta = (instance_cost(catalog, net, x.vnf_type, m)
                     - instance_cost(catalog, net, x.vnf_type, cur)) * x.slots
            # exact lower bound on the move's cost change: reroute on static cheapest paths
            lb = delta
            for lid in vt.incident[x.id]:
                link = links[lid]
                other = placement[link.j if link.i == x.id else link.i]
                lb += link.bandwidth_mbps * (dist[m][other] - net.path_cost(routing[lid]))
            if lb >= -threshold:
                continue
            old = [(lid, routing[lid]) for lid in vt.incident[x.id]]
            for lid, r in old:
                sc.drop_route(r, links[lid].bandwidth_mbps)
            placement[x.id] = m
            new = []
            ok = True
            for lid, r in old:
                link = links[lid]
                p = feasible_route(sc, placement[link.i], placement[link.j], link.bandwidth_mbps, "cost")
                if p is None:
                    ok = False
                    break
                sc.add_route(p, link.bandwidth_mbps)
                new.append((lid, p))
                delta += link.bandwidth_mbps * (net.path_cost(p) - net.path_cost(r))
            if ok and delta < -threshold:
                trial = list(delays)
                for lid, p in new:
                    trial[lid] = net.path_delay(p)
                if within_budget(e2e_delay(vt, trial), delay_budget):
                    for lid, p in new:
                        routing[lid] = p
                    delays = trial
                    total_gain += delta
                    sc.slots[cur] -= x.slots
                    sc.slots[m] += x.slots
                    continue
            for lid, p in new:
                sc.drop_route(p, links[lid].bandwidth_mbps)
            for lid, r in old:
                sc.add_route(r, links[lid].bandwidth_mbps)
            placement[x.id] = cur
    return total_gain


def spin_embed(net: PhysicalNetwork, vt: VirtualTopology, delay_budget: float | None = None,
               catalog: VnfCatalog | None = None, k_max: int = K_MAX, run_optimize: bool = True):
    """Decompose into subchains, embed each on a cheap delay-feasible path, route
    sync links, then improve by local migrations (needs ``catalog`` for prices)."""
    if delay_budget is None:
        delay_budget = vt.delay_budget
    sc = Scratch(net)
    placement = _pinned(vt)
    routing: dict[int, tuple[int, ...]] = {}
    index = _LinkIndex(vt)
    for chain in decompose(vt):
        if not embed_subchain(sc, vt, chain, placement, routing, delay_budget, k_max, index):
            return Reject(SUBCHAIN_UNEMBEDDABLE, f"subchain {chain.index}")
    for link in vt.data_links():
        if link.id in routing:
            continue
        p = feasible_route(sc, placement[link.i], placement[link.j], link.bandwidth_mbps, "cost")
        if p is None:
            return Reject(NO_BANDWIDTH, f"virtual link {link.id}")
        sc.add_route(p, link.bandwidth_mbps)
        routing[link.id] = p
    if not embed_sync_links(sc, vt, placement, routing):
        return Reject(SYNC_UNROUTABLE)
    delays = [net.path_delay(routing[l.id]) for l in vt.links]
    if not within_budget(e2e_delay(vt, delays), delay_budget):
        return Reject(DELAY_EXCEEDED, f"{e2e_delay(vt, delays):.3f} ms > {delay_budget:.3f} ms")
    if run_optimize and catalog is not None:
        optimize(sc, vt, catalog, placement, routing, delay_budget)
    return _finish(net, vt, placement, routing, delay_budget, catalog)
