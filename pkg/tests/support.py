"""Helpers shared by the test modules (importable because pytest puts tests/ on sys.path)."""
import itertools
import math

from sfcprov.catalog import CostModel, VnfCatalog, VnfType
from sfcprov.network import PhysLink, PhysicalNetwork, PopNode


def make_net(n, edges, slots=4, price=0.02):
    """edges: (a, b, delay_ms, price_per_mbps_hour[, capacity_mbps])"""
    if isinstance(slots, int):
        slots = [slots] * n
    if not isinstance(price, (list, tuple)):
        price = [price] * n
    pops = [PopNode(i, slots[i], price[i]) for i in range(n)]
    links = [PhysLink(e[0], e[1], e[4] if len(e) > 4 else 1000.0, e[2], e[3]) for e in edges]
    return PhysicalNetwork(pops, links)


def tiny_catalog(caps=(10_000.0, 13_000.0), margin=0.1, sync_bw=1.0):
    vnfs = [VnfType(t, f"v{t}", c, True, sync_bw, round(0.01 * t, 10))
            for t, c in enumerate(caps, start=1)]
    return VnfCatalog(vnfs, cost_model=CostModel(profit_margin_per_instance_hour=margin))


def simple_paths(net, s, d):
    out = []
    stack = [(s,)]
    while stack:
        p = stack.pop()
        if p[-1] == d:
            out.append(p)
            continue
        for v in net.adj[p[-1]]:
            if v not in p:
                stack.append(p + (v,))
    return out


def brute_force_optimum(net, vt, catalog):
    """Minimum hourly cost over every placement and every simple-path routing.

    Returns (J, placement) or (inf, None). Shortest-cost routes are tried first;
    only when they overflow a link are all path combinations enumerated.
    """
    from sfcprov.catalog import instance_cost
    from sfcprov.network import edge_key

    free = [x for x in vt.instances if not x.is_endpoint]
    fixed = {x.id: x.pinned_pop for x in vt.instances if x.is_endpoint}
    pops = range(net.n_pops)
    paths = {(a, b): ([(a,)] if a == b else sorted(simple_paths(net, a, b), key=net.path_cost))
             for a in pops for b in pops}
    best = (math.inf, None)
    for combo in itertools.product(pops, repeat=len(free)):
        place = dict(fixed)
        place.update({x.id: m for x, m in zip(free, combo)})
        used = {}
        for x, m in zip(free, combo):
            used[m] = used.get(m, 0) + x.slots
        if any(n > net.free_slots(m) for m, n in used.items()):
            continue
        inst = sum(instance_cost(catalog, net, x.vnf_type, place[x.id]) * x.slots for x in free)
        if inst >= best[0]:
            continue
        options = [paths[(place[l.i], place[l.j])] for l in vt.links]
        if any(not o for o in options):
            continue

        def load_ok(routes):
            per = {}
            for l, r in zip(vt.links, routes):
                for u, v in zip(r, r[1:]):
                    per.setdefault(edge_key(u, v), []).append(l.bandwidth_mbps)
            return all(net.bandwidth_fits(e, math.fsum(v)) for e, v in per.items())

        def routing_cost(routes):
            return sum(l.bandwidth_mbps * net.path_cost(r) for l, r in zip(vt.links, routes))

        first = [o[0] for o in options]
        if load_ok(first):
            rc = routing_cost(first)
        else:
            rc = min((routing_cost(rs) for rs in itertools.product(*options) if load_ok(rs)),
                     default=math.inf)
        if inst + rc < best[0]:
            best = (inst + rc, place)
    return best
