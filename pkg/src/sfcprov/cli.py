"""Command-line entry point: ``sfcprov {gen,solve,simulate,report-costs}``.

Exit codes: 0 ok, 1 file I/O error, 2 usage or malformed input,
3 request rejected by a heuristic, 4 proven infeasible, 5 solver budget exhausted.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from .catalog import VnfCatalog, cost_effectiveness_report, generate_catalog
from .embedding import check_feasibility, e2e_delay, evaluate_cost, link_delays
from .errors import BudgetExceeded, Infeasible, InvalidConfig, SfcError
from .heuristics import baseline_embed, spin_embed
from .ilp import SolveLimits, build_model, export_model, solve_exact
from .network import PhysicalNetwork, generate_topology
from .sim import ALGORITHMS, run
from .translate import VirtualTopology, translate
from .workload import SfcRequest, WorkloadParams, delay_budget, dump_jsonl, generate_workload, load_jsonl

log = logging.getLogger("sfcprov")

EXIT_OK, EXIT_IO, EXIT_USAGE, EXIT_REJECT, EXIT_INFEASIBLE, EXIT_BUDGET = range(6)

DEFAULTS = {
    "seed": 1,
    "topology": {"n_pops": 25, "cap_range": [50, 100], "delay_range": [10.0, 50.0],
                 "link_bandwidth": 10000.0, "mean_degree": 4.0},
    "catalog": {"n_types": 9, "capacity_range": [2000, 12000], "sync_rate_step": 0.01,
                "sync_bandwidth_mbps": 1.0, "margin": 0.1},
    "workload": {"arrival_rate_rps": 0.03, "horizon_s": 60 * 86400, "mean_lifetime_s": 3600.0,
                 "mean_chain_len": 10.0, "mean_sources": 7.0,
                 "demand_range_pps": [2000.0, 120000.0], "packet_size_bytes": 1000},
    "algos": ["baseline", "spin"],
    "rates": [0.03],
    "seeds": [1],
    "sample_interval_s": 3600.0,
    "reject_unprofitable": False,
    "jobs": 1,
    "out": "out",
}
METRICS = ("acceptance_ratio", "mean_utilization", "total_profit", "mean_e2e_delay_ms", "accepted")


# -- config -------------------------------------------------------------------

def _read_json(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise _IoError(f"{path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


class _IoError(Exception):
    pass


def load_config(path=None) -> dict:
    cfg = json.loads(json.dumps(DEFAULTS))
    if path:
        doc = _read_json(path)
        if not isinstance(doc, dict):
            raise InvalidConfig(f"{path}: top level must be an object")
        for key, val in doc.items():
            if key not in cfg and not key.endswith("_file"):
                raise InvalidConfig(f"{path}: unknown key {key!r}")
            if isinstance(cfg.get(key), dict) and isinstance(val, dict):
                unknown = set(val) - set(cfg[key])
                if unknown:
                    raise InvalidConfig(f"{path}: unknown {key} keys {sorted(unknown)}")
                cfg[key].update(val)
            else:
                cfg[key] = val
    return cfg


def _apply_flags(cfg: dict, args) -> dict:
    if getattr(args, "seed", None):
        cfg["seeds"] = list(args.seed)
        cfg["seed"] = args.seed[0]
    if getattr(args, "rate", None):
        cfg["rates"] = list(args.rate)
    if getattr(args, "algo", None):
        cfg["algos"] = list(args.algo) if isinstance(args.algo, list) else [args.algo]
    if getattr(args, "horizon", None) is not None:
        cfg["workload"]["horizon_s"] = args.horizon
    if getattr(args, "reject_unprofitable", False):
        cfg["reject_unprofitable"] = True
    if getattr(args, "out", None):
        cfg["out"] = args.out
    if getattr(args, "jobs", None):
        cfg["jobs"] = args.jobs
    for key in ("topology_file", "catalog_file", "workload_file"):
        if getattr(args, key, None):
            cfg[key] = getattr(args, key)
    if len(set(cfg["seeds"])) != len(cfg["seeds"]) or not cfg["seeds"]:
        raise InvalidConfig("seeds must be a nonempty list of distinct integers")
    if not cfg["rates"] or not cfg["algos"]:
        raise InvalidConfig("rate and algorithm lists must be nonempty")
    for a in cfg["algos"]:
        if a not in ALGORITHMS:
            raise InvalidConfig(f"unknown algorithm {a!r}")
    return cfg


def build_network(cfg: dict, seed: int) -> PhysicalNetwork:
    if cfg.get("topology_file"):
        return PhysicalNetwork.from_dict(_read_json(cfg["topology_file"]))
    t = cfg["topology"]
    return generate_topology(seed, t["n_pops"], tuple(t["cap_range"]), tuple(t["delay_range"]),
                             t["link_bandwidth"], t["mean_degree"])


def build_catalog(cfg: dict, seed: int) -> VnfCatalog:
    if cfg.get("catalog_file"):
        return VnfCatalog.from_dict(_read_json(cfg["catalog_file"]))
    c = cfg["catalog"]
    return generate_catalog(seed, c["n_types"], tuple(c["capacity_range"]), c["sync_rate_step"],
                            c["sync_bandwidth_mbps"], c["margin"])


def workload_params(cfg: dict, rate: float | None = None) -> WorkloadParams:
    w = dict(cfg["workload"])
    if rate is not None:
        w["arrival_rate_rps"] = rate
    w["demand_range_pps"] = tuple(w["demand_range_pps"])
    return WorkloadParams(**w)


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise _IoError(f"{path}: {exc.strerror}") from exc


# -- commands -----------------------------------------------------------------

def cmd_gen(cfg: dict) -> int:
    out = Path(cfg["out"])
    seed = cfg["seed"]
    net = build_network(cfg, seed)
    cat = build_catalog(cfg, seed)
    wl = generate_workload(seed, net, cat, workload_params(cfg, cfg["rates"][0]))
    _write(out / "topology.json", net.to_json() + "\n")
    _write(out / "catalog.json", cat.to_json() + "\n")
    try:
        dump_jsonl(wl, out / "workload.jsonl")
    except OSError as exc:
        raise _IoError(f"{out / 'workload.jsonl'}: {exc.strerror}") from exc
    resolved = {k: v for k, v in cfg.items() if k not in ("out", "jobs")}
    _write(out / "scenario.json", json.dumps(resolved, indent=1, sort_keys=True) + "\n")
    print(f"wrote {out}/topology.json, catalog.json, workload.jsonl ({len(wl)} requests)")
    return EXIT_OK


def _load_instance(args, cfg):
    net = build_network(cfg, cfg["seed"])
    cat = build_catalog(cfg, cfg["seed"])
    if args.vt:
        vt = VirtualTopology.from_dict(_read_json(args.vt))
    elif args.request:
        req = SfcRequest.from_dict(_read_json(args.request))
        if not req.delay_budget_ms:
            req = replace(req, delay_budget_ms=delay_budget(net, req))
        vt = translate(req, cat)
    else:
        raise InvalidConfig("solve needs --request or --vt")
    return net, cat, vt


def _report(net, cat, vt, emb) -> dict:
    cost = evaluate_cost(net, vt, emb, cat)
    d = e2e_delay(vt, link_delays(net, vt, emb))
    return {
        "placement": {str(k): v for k, v in sorted(emb.placement.items())},
        "routing": {str(k): list(v) for k, v in sorted(emb.routing.items())},
        "cost": cost.__dict__,
        "objective": cost.objective,
        "e2e_delay_ms": d,
        "delay_budget_ms": vt.delay_budget,
        "violations": [f"{v.tag} {v.entity}: {v.detail}"
                       for v in check_feasibility(net, vt, emb, vt.delay_budget)],
    }


def cmd_solve(args, cfg: dict) -> int:
    net, cat, vt = _load_instance(args, cfg)
    algo = cfg["algos"][0]
    if args.export_lp:
        _write(Path(args.export_lp), export_model(build_model(net, vt, cat)))
    if algo == "ilp":
        limits = SolveLimits(args.max_nodes, args.time_budget)
        budget = vt.delay_budget if args.enforce_delay else None
        try:
            emb = solve_exact(build_model(net, vt, cat), limits, delay_budget=budget)
        except Infeasible as exc:
            print(json.dumps({"status": "infeasible", "detail": str(exc)}))
            return EXIT_INFEASIBLE
        except BudgetExceeded as exc:
            print(json.dumps({"status": "budget_exceeded", "detail": str(exc)}))
            return EXIT_BUDGET
    else:
        fn = baseline_embed if algo == "baseline" else spin_embed
        emb = fn(net, vt, vt.delay_budget, cat)
        if not emb:
            print(json.dumps({"status": "rejected", "reason": emb.reason, "detail": emb.detail}))
            return EXIT_REJECT
    rep = {"status": "ok", "algo": algo, **_report(net, cat, vt, emb)}
    text = json.dumps(rep, indent=1, sort_keys=True) + "\n"
    if args.report:
        _write(Path(args.report), text)
    sys.stdout.write(text)
    return EXIT_OK


def _cell(job):
    """One (algo, rate, seed) simulation; runs in a worker process."""
    cfg, algo, rate, seed = job
    try:
        net = build_network(cfg, seed)
        cat = build_catalog(cfg, seed)
        if cfg.get("workload_file"):
            wl = load_jsonl(cfg["workload_file"])
        else:
            wl = generate_workload(seed, net, cat, workload_params(cfg, rate))
        series = run(net, cat, wl, algo, cfg["sample_interval_s"], seed,
                     horizon_s=cfg["workload"]["horizon_s"],
                     reject_unprofitable=cfg["reject_unprofitable"])
        return algo, rate, seed, series.to_csv(), series.summary(), None
    except (SfcError, _IoError, OSError) as exc:
        return algo, rate, seed, None, None, f"{type(exc).__name__}: {exc}"


def _cell_name(algo, rate, seed) -> str:
    return f"{algo}_rate{rate!r}_seed{seed}"


def aggregate_table(results) -> str:
    """mean and sample stddev across seeds for each (algo, rate)."""
    groups: dict = {}
    for algo, rate, seed, summary in results:
        groups.setdefault((algo, rate), []).append(summary)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["algo", "rate_rps", "n_seeds"]
    for m in METRICS:
        header += [f"{m}_mean", f"{m}_std"]
    w.writerow(header)
    for (algo, rate), rows in sorted(groups.items()):
        line = [algo, repr(rate), len(rows)]
        for m in METRICS:
            vals = [float(r[m]) for r in rows]
            line += [repr(statistics.fmean(vals)), repr(statistics.stdev(vals) if len(vals) > 1 else 0.0)]
        w.writerow(line)
    return buf.getvalue()


def cmd_simulate(cfg: dict) -> int:
    out = Path(cfg["out"])
    jobs = [(cfg, a, r, s) for a in cfg["algos"] for r in cfg["rates"] for s in cfg["seeds"]]
    if cfg["jobs"] > 1:
        with ProcessPoolExecutor(max_workers=cfg["jobs"]) as pool:
            done = list(pool.map(_cell, jobs))
    else:
        done = [_cell(j) for j in jobs]
    ok, failed = [], []
    for algo, rate, seed, text, summary, err in done:
        name = _cell_name(algo, rate, seed)
        if err:
            log.error("cell %s failed: %s", name, err)
            failed.append({"cell": name, "error": err})
            continue
        _write(out / "cells" / f"{name}.csv", text)
        _write(out / "cells" / f"{name}.json", json.dumps(summary, indent=1, sort_keys=True) + "\n")
        ok.append((algo, rate, seed, summary))
    _write(out / "aggregate.csv", aggregate_table(ok))
    _write(out / "failures.json", json.dumps(failed, indent=1) + "\n")
    print(f"{len(ok)} cells written to {out}, {len(failed)} failed")
    return EXIT_OK if ok or not jobs else EXIT_USAGE


def cmd_report_costs(cfg: dict, out: str | None) -> int:
    cat = build_catalog(cfg, cfg["seed"])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["flavor", "price_per_hour", "vcpu", "micro_count", "vcpu_delta"])
    for row in cost_effectiveness_report(cat):
        w.writerow([row.flavor, repr(row.price_per_hour), row.vcpu, row.micro_count, row.vcpu_delta])
    if out:
        _write(Path(out), buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sfcprov", description="SFC provisioning experiments")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON scenario config; flags override it")
        sp.add_argument("--seed", type=int, action="append", help="root seed (repeatable)")
        sp.add_argument("--topology-file", dest="topology_file")
        sp.add_argument("--catalog-file", dest="catalog_file")
        sp.add_argument("--out")

    g = sub.add_parser("gen", help="write topology, catalog and workload files")
    common(g)
    g.add_argument("--rate", type=float, action="append")
    g.add_argument("--horizon", type=float)

    s = sub.add_parser("solve", help="embed a single request")
    common(s)
    s.add_argument("--request", help="request JSON (one workload line)")
    s.add_argument("--vt", help="virtual topology JSON")
    s.add_argument("--algo", choices=ALGORITHMS, default="ilp")
    s.add_argument("--export-lp", dest="export_lp")
    s.add_argument("--report", help="also write the report here")
    s.add_argument("--max-nodes", dest="max_nodes", type=int, default=2_000_000)
    s.add_argument("--time-budget", dest="time_budget", type=float)
    s.add_argument("--enforce-delay", dest="enforce_delay", action="store_true",
                   help="skip delay-violating solutions in the exact search")

    m = sub.add_parser("simulate", help="run a simulation sweep")
    common(m)
    m.add_argument("--algo", choices=ALGORITHMS, action="append")
    m.add_argument("--rate", type=float, action="append")
    m.add_argument("--horizon", type=float)
    m.add_argument("--workload-file", dest="workload_file")
    m.add_argument("--reject-unprofitable", dest="reject_unprofitable", action="store_true")
    m.add_argument("--jobs", type=int)

    r = sub.add_parser("report-costs", help="cost-effectiveness table as CSV")
    common(r)
    return p


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = _apply_flags(load_config(args.config), args)
        if args.command == "gen":
            return cmd_gen(cfg)
        if args.command == "solve":
            return cmd_solve(args, cfg)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        return cmd_report_costs(cfg, args.out)
    except _IoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (SfcError, KeyError, TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
