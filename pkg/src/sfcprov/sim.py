"""Discrete-event replay of a request workload against one network."""
from __future__ import annotations

import heapq
import io
import json
import math
from collections import Counter
from dataclasses import dataclass, field

from .catalog import VnfCatalog
from .embedding import (Embedding, Reject, check_feasibility, e2e_delay, evaluate_cost,
                        link_delays, resource_delta, within_budget)
from .errors import BudgetExceeded, Infeasible, InvalidConfig
from .heuristics import NO_SLOT, baseline_embed, spin_embed
from .ilp import SolveLimits, build_model, solve_exact
from .network import PhysicalNetwork
from .translate import count_slots, translate
from .workload import SfcRequest

ALGORITHMS = ("baseline", "spin", "ilp")
CSV_COLUMNS = ("t_s", "arrived", "accepted", "rejected", "utilization",
               "cumulative_profit", "mean_e2e_delay_ms")
UNPROFITABLE = "Unprofitable"

_DEPART, _ARRIVE = 0, 1  # departures sort first at equal timestamps


@dataclass
class Sample:
    t_s: float
    arrived: int
    accepted: int
    rejected: int
    utilization: float
    cumulative_profit: float
    mean_e2e_delay_ms: float


@dataclass
class MetricsSeries:
    algo: str
    samples: list[Sample] = field(default_factory=list)
    arrived: int = 0
    accepted: int = 0
    rejected: int = 0
    total_profit: float = 0.0
    peak_utilization: float = 0.0
    mean_accepted_e2e_delay_ms: float = 0.0
    reject_reasons: dict[str, int] = field(default_factory=dict)
    audit_failures: list[str] = field(default_factory=list)

    @property
    def acceptance_ratio(self) -> float:
        return acceptance_ratio(self)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(CSV_COLUMNS) + "\n")
        for s in self.samples:
            buf.write(f"{s.t_s!r},{s.arrived},{s.accepted},{s.rejected},{s.utilization!r},"
                      f"{s.cumulative_profit!r},{s.mean_e2e_delay_ms!r}\n")
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "algo": self.algo,
            "arrived": self.arrived,
            "accepted": self.accepted,
            "rejected": self.rejected,
            "acceptance_ratio": acceptance_ratio(self),
            "mean_utilization": utilization(self),
            "peak_utilization": self.peak_utilization,
            "total_profit": self.total_profit,
            "mean_e2e_delay_ms": self.mean_accepted_e2e_delay_ms,
            "reject_reasons": dict(sorted(self.reject_reasons.items())),
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=1, sort_keys=True) + "\n"


def acceptance_ratio(series: MetricsSeries) -> float:
    return series.accepted / series.arrived if series.arrived else 0.0


def utilization(series: MetricsSeries) -> float:
    """Mean sampled slot utilization."""
    if not series.samples:
        return 0.0
    return math.fsum(s.utilization for s in series.samples) / len(series.samples)


def cumulative_profit(series: MetricsSeries) -> float:
    return series.total_profit


def mean_e2e_delay(series: MetricsSeries) -> float:
    return series.mean_accepted_e2e_delay_ms


def embed(net: PhysicalNetwork, vt, catalog: VnfCatalog, algo: str,
          ilp_limits: SolveLimits | None = None):
    """One admission attempt; returns an Embedding (with cost) or a Reject."""
    budget = vt.delay_budget
    if algo == "baseline":
        return baseline_embed(net, vt, budget, catalog)
    if algo == "spin":
        return spin_embed(net, vt, budget, catalog)
    if algo == "ilp":
        try:
            emb = solve_exact(build_model(net, vt, catalog), ilp_limits or SolveLimits(),
                              delay_budget=budget)
        except Infeasible:
            return Reject("Infeasible")
        except BudgetExceeded:
            return Reject("BudgetExceeded")
        emb.cost = evaluate_cost(net, vt, emb, catalog)
        emb.e2e_delay_ms = e2e_delay(vt, link_delays(net, vt, emb))
        return emb
    raise InvalidConfig(f"unknown algorithm {algo!r}")


def run(net: PhysicalNetwork, catalog: VnfCatalog, workload: list[SfcRequest], algo: str = "spin",
        sample_interval_s: float = 3600.0, rng_seed: int = 0, *, horizon_s: float | None = None,
        reject_unprofitable: bool = False, audit: bool = False,
        ilp_limits: SolveLimits | None = None) -> MetricsSeries:
    """Replay ``workload`` on ``net`` (mutated; pass a clone to keep the original).

    The embedders are deterministic, so ``rng_seed`` only labels the run. With
    ``audit`` every acceptance is re-checked for feasibility and every
    rejection for untouched residuals; problems land in ``audit_failures``.
    """
    if algo not in ALGORITHMS:
        raise InvalidConfig(f"unknown algorithm {algo!r}")
    if sample_interval_s <= 0:
        raise InvalidConfig("sample interval must be positive")
    times = [r.arrival_time for r in workload]
    if times != sorted(times):
        raise InvalidConfig("workload must be sorted by arrival time")

    series = MetricsSeries(algo)
    total_slots = net.total_slots
    end = max([horizon_s or 0.0, *times]) if workload or horizon_s else 0.0
    events: list = []
    for seq, req in enumerate(workload):
        heapq.heappush(events, (req.arrival_time, _ARRIVE, seq, req))
    live: dict = {}
    profits: list[float] = []
    delays: list[float] = []
    reasons: Counter = Counter()
    next_sample = 0.0

    def take_sample(t):
        util = net.used_slots / total_slots if total_slots else 0.0
        series.peak_utilization = max(series.peak_utilization, util)
        series.samples.append(Sample(
            t, series.arrived, series.accepted, series.rejected, util,
            math.fsum(profits), math.fsum(delays) / len(delays) if delays else 0.0))

    while events:
        t, kind, seq, payload = events[0]
        while next_sample <= end and next_sample < t:
            take_sample(next_sample)
            next_sample += sample_interval_s
        heapq.heappop(events)
        if kind == _DEPART:
            net.release(live.pop(payload))
            continue
        req: SfcRequest = payload
        series.arrived += 1
        vt = translate(req, catalog)
        before = net.snapshot() if audit else None
        if count_slots(vt) > net.free_slots_total:
            out = Reject(NO_SLOT, "not enough free slots in the network")
        else:
            out = embed(net, vt, catalog, algo, ilp_limits)
        if out and reject_unprofitable and out.cost.profit < 0:
            out = Reject(UNPROFITABLE)
        if not out:
            series.rejected += 1
            reasons[out.reason] += 1
            if audit and net.snapshot() != before:
                series.audit_failures.append(f"request {req.id}: state changed on reject")
            continue
        emb: Embedding = out
        if audit:
            bad = check_feasibility(net, vt, emb, req.delay_budget_ms)
            if bad or not within_budget(emb.e2e_delay_ms, req.delay_budget_ms):
                series.audit_failures.append(f"request {req.id}: {bad}")
        delta = resource_delta(vt, emb, req.id)
        net.allocate(delta)
        live[req.id] = delta
        heapq.heappush(events, (req.arrival_time + req.lifetime, _DEPART, seq, req.id))
        series.accepted += 1
        profits.append(req.lifetime / 3600.0 * emb.cost.profit)
        delays.append(emb.e2e_delay_ms)
    while next_sample <= end:
        take_sample(next_sample)
        next_sample += sample_interval_s
    series.total_profit = math.fsum(profits)
    series.mean_accepted_e2e_delay_ms = math.fsum(delays) / len(delays) if delays else 0.0
    series.reject_reasons = dict(reasons)
    return series
