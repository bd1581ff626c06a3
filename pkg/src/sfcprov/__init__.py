"""SFC provisioning: request translation, exact and heuristic embedding, simulation."""
from .catalog import VnfCatalog, generate_catalog
from .embedding import Embedding, Reject, check_feasibility, evaluate_cost
from .heuristics import baseline_embed, spin_embed
from .ilp import build_model, export_model, parse_model, solve_exact
from .network import PhysicalNetwork, generate_topology, k_cheapest_paths, shortest_path
from .sim import run
from .translate import translate
from .workload import SfcRequest, WorkloadParams, generate_workload

__version__ = "0.1.0"

__all__ = [
    "Embedding", "PhysicalNetwork", "Reject", "SfcRequest", "VnfCatalog", "WorkloadParams",
    "baseline_embed", "build_model", "check_feasibility", "evaluate_cost", "export_model",
    "generate_catalog", "generate_topology", "generate_workload", "k_cheapest_paths",
    "parse_model", "run", "shortest_path", "solve_exact", "spin_embed", "translate",
]
