import json

import pytest

from sfcprov.catalog import DEFAULT_FLAVORS, VnfCatalog, measured_vnf_types
from sfcprov.cli import (EXIT_BUDGET, EXIT_INFEASIBLE, EXIT_IO, EXIT_OK, EXIT_REJECT, EXIT_USAGE,
                         main)
from support import make_net



@pytest.fixture
def small_cfg(tmp_path):
    cfg = {"topology": {"n_pops": 6}, "workload": {"horizon_s": 7200.0, "mean_chain_len": 3.0,
                                                   "mean_sources": 2.0}}
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    return str(p)


def tree(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_gen_idempotent_and_creates_dirs(tmp_path, small_cfg):
    a, b = tmp_path / "x" / "y", tmp_path / "z"
    assert main(["gen", "--config", small_cfg, "--seed", "3", "--out", str(a)]) == EXIT_OK
    assert main(["gen", "--config", small_cfg, "--seed", "3", "--out", str(b)]) == EXIT_OK
    assert set(tree(a)) == {"topology.json", "catalog.json", "workload.jsonl", "scenario.json"}
    assert tree(a) == tree(b)


def test_report_costs(tmp_path, capsys):
    assert main(["report-costs"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "flavor,price_per_hour,vcpu,micro_count,vcpu_delta"
    assert "m4.16xlarge,3.2,64,256,192" in lines
    micro_only = tmp_path / "cat.json"
    micro_only.write_text(VnfCatalog(measured_vnf_types(), [DEFAULT_FLAVORS[0]]).to_json())
    out = tmp_path / "r.csv"
    assert main(["report-costs", "--catalog-file", str(micro_only), "--out", str(out)]) == EXIT_OK
    assert out.read_text() == "flavor,price_per_hour,vcpu,micro_count,vcpu_delta\n"


def write_req(tmp_path, sources, dest, demand=5000.0, chain=(1,)):
    p = tmp_path / "req.json"
    p.write_text(json.dumps({"id": 0, "chain": list(chain), "sources": list(sources),
                             "destination": dest, "demand_pps": demand}))
    return str(p)


def test_solve_ok_and_lp_export(tmp_path, small_cfg, capsys):
    lp = tmp_path / "m.lp"
    rc = main(["solve", "--config", small_cfg, "--request", write_req(tmp_path, [0], 3),
               "--export-lp", str(lp), "--report", str(tmp_path / "rep.json")])
    assert rc == EXIT_OK
    rep = json.loads((tmp_path / "rep.json").read_text())
    assert rep["status"] == "ok" and rep["violations"] == []
    assert lp.read_text().startswith("\\") and "Subject To" in lp.read_text()


def test_solve_exit_codes(tmp_path, small_cfg):
    req = write_req(tmp_path, [0, 1], 3, demand=60_000.0, chain=(1, 2, 3))
    assert main(["solve", "--config", small_cfg, "--request", req, "--max-nodes", "2"]) == EXIT_BUDGET
    topo = tmp_path / "full.json"
    topo.write_text(make_net(2, [(0, 1, 1.0, 0.001)], slots=0).to_json())
    req = write_req(tmp_path, [0], 1)
    args = ["solve", "--config", small_cfg, "--topology-file", str(topo), "--request", req]
    assert main(args) == EXIT_INFEASIBLE
    assert main(args + ["--algo", "spin"]) == EXIT_REJECT
    assert main(args + ["--algo", "baseline"]) == EXIT_REJECT


def test_simulate_cells_and_determinism(tmp_path, small_cfg):
    args = ["simulate", "--config", small_cfg, "--seed", "1", "--seed", "2", "--rate", "0.01",
            "--rate", "0.02", "--algo", "spin", "--algo", "baseline"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(args + ["--out", str(a)]) == EXIT_OK
    assert main(args + ["--out", str(b), "--jobs", "2"]) == EXIT_OK
    files = tree(a)
    assert len([f for f in files if f.startswith("cells/") and f.endswith(".csv")]) == 8
    assert files == tree(b)
    assert json.loads(files["failures.json"]) == []
    agg = files["aggregate.csv"].decode().splitlines()
    assert len(agg) == 5 and agg[0].startswith("algo,rate_rps,n_seeds,acceptance_ratio_mean")


def test_usage_errors(tmp_path, capsys):
    assert main(["frobnicate"]) == EXIT_USAGE
    assert main(["simulate", "--algo", "greedy"]) == EXIT_USAGE
    bad = tmp_path / "bad.json"
    bad.write_text('{\n  "seed": 1,\n  "rates": [0.1,,]\n}')
    assert main(["gen", "--config", str(bad)]) == EXIT_USAGE
    assert "bad.json:3" in capsys.readouterr().err
    unk = tmp_path / "unk.json"
    unk.write_text('{"sede": 1}')
    assert main(["gen", "--config", str(unk)]) == EXIT_USAGE
    assert main(["simulate", "--seed", "1", "--seed", "1"]) == EXIT_USAGE


def test_io_errors(tmp_path):
    assert main(["gen", "--config", str(tmp_path / "missing.json")]) == EXIT_IO
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["report-costs", "--out", str(blocker / "r.csv")]) == EXIT_IO
