"""CPLEX-LP text writer and reader for binary models.

Output is canonical (rows in model order, terms sorted by column, floats via
``repr``), so export -> parse -> export reproduces the same bytes. A row's
tag is the name prefix before the first underscore.
"""
from __future__ import annotations

import re

from ..errors import InvalidConfig
from .model import IlpModel, Row

_TERMS_PER_LINE = 6
_SENSES = {"<=": "<=", "=<": "<=", ">=": ">=", "=>": ">=", "=": "=", "<": "<=", ">": ">="}
_TOKEN = re.compile(r"\s*(<=|>=|=<|=>|[<>=]|[+-]|[A-Za-z_][\w.]*|\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)")


def _fmt_terms(pairs) -> list[str]:
    out = []
    for k, (name, a) in enumerate(pairs):
        sign = "-" if a < 0 else "+"
        mag = repr(abs(float(a)))
        out.append(f"{mag} {name}" if k == 0 and sign == "+" else f"{sign} {mag} {name}")
    return out


def _wrap(head: str, terms: list[str], tail: str = "") -> list[str]:
    lines = []
    for k in range(0, max(len(terms), 1), _TERMS_PER_LINE):
        chunk = " ".join(terms[k:k + _TERMS_PER_LINE])
        lines.append((f" {head}: " if k == 0 else "   ") + chunk)
    if tail:
        lines[-1] += " " + tail
    return lines


def export_model(model: IlpModel) -> str:
    names = model.var_names
    lines = ["\\ binary embedding program", "Minimize"]
    obj = [(names[v], c) for v, c in enumerate(model.objective) if c != 0.0]
    if not obj and names:
        obj = [(names[0], 0.0)]
    lines += _wrap("obj", _fmt_terms(obj))
    lines.append("Subject To")
    for r in model.rows:
        terms = _fmt_terms([(names[v], a) for v, a in sorted(r.coefs.items())])
        lines += _wrap(r.name, terms, f"{r.sense} {float(r.rhs)!r}")
    lines.append("Binary")
    for k in range(0, len(names), 8):
        lines.append(" " + " ".join(names[k:k + 8]))
    lines.append("End")
    return "\n".join(lines) + "\n"


def _tokens(text: str, lineno: int):
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise InvalidConfig(f"line {lineno}: cannot parse near {text[pos:pos + 20]!r}")
        out.append(m.group(1))
        pos = m.end()
    return out


def _linear(tokens, lineno, index, names):
    """Parse ``[+-] [coef] var ...`` into {column: coef}."""
    coefs: dict[int, float] = {}
    k = 0
    while k < len(tokens):
        sign = 1.0
        while k < len(tokens) and tokens[k] in "+-":
            if tokens[k] == "-":
                sign = -sign
            k += 1
        coef = 1.0
        if k < len(tokens) and re.match(r"^[\d.]", tokens[k]):
            coef = float(tokens[k])
            k += 1
        if k >= len(tokens) or not re.match(r"^[A-Za-z_]", tokens[k]):
            raise InvalidConfig(f"line {lineno}: expected a variable name")
        name = tokens[k]
        k += 1
        if name not in index:
            index[name] = len(names)
            names.append(name)
        v = index[name]
        coefs[v] = coefs.get(v, 0.0) + sign * coef
    return coefs


def parse_model(text: str) -> IlpModel:
    """Inverse of ``export_model``; also accepts hand-written files in the same subset."""
    section = None
    statements: list[tuple[str, int, list]] = []  # (section, line, tokens)
    binaries: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("\\", 1)[0]
        if not line.strip():
            continue
        key = line.strip().lower()
        if key in ("minimize", "minimise", "min"):
            section = "obj"
            continue
        if key in ("subject to", "such that", "st", "s.t."):
            section = "rows"
            continue
        if key in ("binary", "binaries", "bin"):
            section = "bin"
            continue
        if key == "end":
            section = "end"
            continue
        if key in ("maximize", "maximise", "max", "bounds", "general", "generals"):
            raise InvalidConfig(f"line {lineno}: section {line.strip()!r} is not supported")
        if section is None or section == "end":
            raise InvalidConfig(f"line {lineno}: content outside any section")
        if section == "bin":
            binaries += line.split()
            continue
        m = re.match(r"^\s*([A-Za-z_][\w.]*)\s*:(.*)$", line)
        if m:
            statements.append((section, lineno, [m.group(1)] + _tokens(m.group(2), lineno)))
        elif statements and statements[-1][0] == section and line[:1].isspace():
            statements[-1][2].extend(_tokens(line, lineno))
        else:
            raise InvalidConfig(f"line {lineno}: expected 'name: expression'")

    names: list[str] = list(dict.fromkeys(binaries))
    index = {n: k for k, n in enumerate(names)}
    obj_coefs: dict[int, float] = {}
    rows: list[Row] = []
    for section, lineno, toks in statements:
        label, body = toks[0], toks[1:]
        if section == "obj":
            obj_coefs = _linear(body, lineno, index, names)
            continue
        ops = [k for k, t in enumerate(body) if t in _SENSES]
        if len(ops) != 1 or ops[0] != len(body) - 2:
            raise InvalidConfig(f"line {lineno}: row {label!r} needs 'expression sense number'")
        k = ops[0]
        try:
            rhs = float(body[k + 1])
        except ValueError:
            raise InvalidConfig(f"line {lineno}: bad right-hand side {body[k + 1]!r}") from None
        coefs = _linear(body[:k], lineno, index, names)
        rows.append(Row(label, label.split("_", 1)[0], dict(sorted(coefs.items())),
                        _SENSES[body[k]], rhs))
    if len(names) != len(binaries):
        extra = names[len(binaries):]
        raise InvalidConfig(f"variables not declared binary: {', '.join(extra[:5])}")
    objective = [0.0] * len(names)
    for v, c in obj_coefs.items():
        objective[v] = c
    model = IlpModel(names, objective, rows)
    model.reindex()
    return model
