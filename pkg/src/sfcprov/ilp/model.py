"""Binary program for embedding one virtual topology at minimum hourly cost."""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..catalog import VnfCatalog, instance_cost
from ..embedding import (TAG_BANDWIDTH, TAG_CAPACITY, TAG_ENDPOINT, TAG_FLOW, TAG_UNIQUE)
from ..errors import InvalidConfig, UnpinnedEndpoint
from ..network import PhysicalNetwork
from ..translate import VirtualTopology

_X = re.compile(r"^x_(\d+)_(\d+)$")
_Y = re.compile(r"^y_(\d+)_(\d+)_(\d+)$")


@dataclass
class Row:
    name: str
    tag: str
    coefs: dict[int, float]
    sense: str  # "<=", ">=" or "="
    rhs: float


@dataclass
class IlpModel:
    """All variables are binary.

    ``x_index[(instance, pop)]`` and ``y_index[(link, from_pop, to_pop)]`` map
    decision variables to columns; ``link_ends[link] = (i, j)``.
    """

    var_names: list[str]
    objective: list[float]
    rows: list[Row]
    x_index: dict[tuple[int, int], int] = field(default_factory=dict)
    y_index: dict[tuple[int, int, int], int] = field(default_factory=dict)
    link_ends: dict[int, tuple[int, int]] = field(default_factory=dict)
    net: PhysicalNetwork | None = field(default=None, repr=False, compare=False)
    vt: VirtualTopology | None = field(default=None, repr=False, compare=False)

    @property
    def n_vars(self) -> int:
        return len(self.var_names)

    def audit(self) -> list[str]:
        """Structural problems: undeclared columns, bad senses, negative costs."""
        problems = []
        n = self.n_vars
        for r in self.rows:
            if r.sense not in ("<=", ">=", "="):
                problems.append(f"{r.name}: bad sense {r.sense}")
            if not r.tag:
                problems.append(f"{r.name}: missing tag")
            for v in r.coefs:
                if not 0 <= v < n:
                    problems.append(f"{r.name}: undeclared column {v}")
        if len(self.objective) != n:
            problems.append("objective length differs from column count")
        if any(not (c >= 0) or c == float("inf") for c in self.objective):
            problems.append("objective has a negative or non-finite coefficient")
        if len(set(self.var_names)) != n:
            problems.append("duplicate column names")
        return problems

    def reindex(self) -> None:
        """Rebuild the structural maps from column names and flow rows."""
        self.x_index, self.y_index, self.link_ends = {}, {}, {}
        for k, name in enumerate(self.var_names):
            if m := _X.match(name):
                self.x_index[(int(m[1]), int(m[2]))] = k
            elif m := _Y.match(name):
                self.y_index[(int(m[1]), int(m[2]), int(m[3]))] = k
            else:
                raise InvalidConfig(f"unrecognized column {name!r}")
        x_inv = {k: key for key, k in self.x_index.items()}
        y_inv = {k: key for key, k in self.y_index.items()}
        for r in self.rows:
            if r.tag != TAG_FLOW:
                continue
            link = None
            i = j = None
            for v, a in r.coefs.items():
                if v in y_inv:
                    link = y_inv[v][0]
                elif v in x_inv and a < 0:
                    i = x_inv[v][0]
                elif v in x_inv and a > 0:
                    j = x_inv[v][0]
            if link is not None and i is not None and j is not None:
                self.link_ends[link] = (i, j)


def build_model(net: PhysicalNetwork, vt: VirtualTopology, catalog: VnfCatalog) -> IlpModel:
    """Columns: instance x PoP placements, then virtual link x directed physical link.

    Capacity and bandwidth right-hand sides are the network's current residuals.
    """
    for x in vt.instances:
        if x.is_endpoint and x.pinned_pop is None:
            raise UnpinnedEndpoint(f"endpoint instance {x.id} has no PoP")
        if x.pinned_pop is not None:
            net.pop(x.pinned_pop)
    names: list[str] = []
    obj: list[float] = []
    x_index = {}
    for x in vt.instances:
        for m in range(net.n_pops):
            x_index[(x.id, m)] = len(names)
            names.append(f"x_{x.id}_{m}")
            obj.append(0.0 if x.is_endpoint else instance_cost(catalog, net, x.vnf_type, m) * x.slots)
    arcs = []
    for link in net.links:
        arcs.append((link.a, link.b))
        arcs.append((link.b, link.a))
    y_index = {}
    for vl in vt.links:
        for m, n in arcs:
            y_index[(vl.id, m, n)] = len(names)
            names.append(f"y_{vl.id}_{m}_{n}")
            obj.append(vl.bandwidth_mbps * net.price[(min(m, n), max(m, n))])

    rows: list[Row] = []
    for x in vt.instances:
        if x.pinned_pop is not None:
            rows.append(Row(f"endpoint_i{x.id}_m{x.pinned_pop}", TAG_ENDPOINT,
                            {x_index[(x.id, x.pinned_pop)]: 1.0}, ">=", 1.0))
    for x in vt.instances:
        rows.append(Row(f"unique_i{x.id}", TAG_UNIQUE,
                        {x_index[(x.id, m)]: 1.0 for m in range(net.n_pops)}, "=", 1.0))
    for m in range(net.n_pops):
        coefs = {x_index[(x.id, m)]: float(x.slots) for x in vt.instances if x.slots}
        if coefs:
            rows.append(Row(f"capacity_m{m}", TAG_CAPACITY, coefs, "<=", float(net.free_slots(m))))
    if vt.links:
        for link in net.links:
            coefs = {}
            for vl in vt.links:
                if vl.bandwidth_mbps:
                    coefs[y_index[(vl.id, link.a, link.b)]] = vl.bandwidth_mbps
                    coefs[y_index[(vl.id, link.b, link.a)]] = vl.bandwidth_mbps
            if coefs:
                rows.append(Row(f"bandwidth_{link.a}_{link.b}", TAG_BANDWIDTH, coefs, "<=",
                                net.residual((link.a, link.b))))
    for vl in vt.links:
        for m in range(net.n_pops):
            coefs: dict[int, float] = {}
            for n in net.adj[m]:
                coefs[y_index[(vl.id, m, n)]] = 1.0
                coefs[y_index[(vl.id, n, m)]] = -1.0
            coefs[x_index[(vl.i, m)]] = -1.0
            if vl.j != vl.i:
                coefs[x_index[(vl.j, m)]] = 1.0
            rows.append(Row(f"flow_l{vl.id}_m{m}", TAG_FLOW, coefs, "=", 0.0))
    model = IlpModel(names, obj, rows, x_index, y_index,
                     {vl.id: (vl.i, vl.j) for vl in vt.links}, net, vt)
    return model
