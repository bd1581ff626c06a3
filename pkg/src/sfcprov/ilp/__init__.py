from .bnb import SolveLimits, decode, solve_exact
from .lpformat import export_model, parse_model
from .model import IlpModel, Row, build_model

__all__ = ["IlpModel", "Row", "SolveLimits", "build_model", "decode", "export_model",
           "parse_model", "solve_exact"]
