"""CPLEX-style LP text export of an EncodedProblem, and a reader for the same dialect.

Numbers are written with ``repr`` so a write/read cycle reproduces every
coefficient and bound bit for bit.
"""

import math
import re

from .encoder import EncodedProblem, Mode, Row, Variable, VarRef
from .lpsolve import EQ, GE, LE

_TERMS_PER_LINE = 8
_HEADER_RE = re.compile(r"^\\\s*relureach\s+mode=(\w+)\s+eps_budget=(\S+)")


class LpFileError(ValueError):
    pass


def _num(v: float) -> str:
    if v == math.inf:
        return "+inf"
    if v == -math.inf:
        return "-inf"
    return repr(float(v))


def _expr(terms) -> list:
    """Whitespace-separated tokens for a linear expression, wrapped into lines."""
    pieces = []
    for k, (ref, coef) in enumerate(terms):
        sign = "-" if math.copysign(1.0, coef) < 0 else "+"
        mag = abs(coef)
        body = ref.name if mag == 1.0 else f"{_num(mag)} {ref.name}"
        if k == 0:
            pieces.append(f"- {body}" if sign == "-" else body)
        else:
            pieces.append(f"{sign} {body}")
    lines = []
    for start in range(0, len(pieces), _TERMS_PER_LINE):
        lines.append(" ".join(pieces[start : start + _TERMS_PER_LINE]))
    return lines or [""]


def export_lp_file(problem: EncodedProblem) -> str:
    out = [f"\\ relureach mode={problem.mode.value} eps_budget={_num(problem.eps_budget)}", "Minimize"]
    obj = list(problem.objective)
    if not obj and problem.variables:
        obj = [(problem.variables[0].ref, 0.0)]
    obj_lines = _expr(obj)
    out.append(f" obj: {obj_lines[0]}")
    out.extend(f"   {line}" for line in obj_lines[1:])

    out.append("Subject To")
    for row in problem.rows:
        lines = _expr(row.terms)
        lines[-1] = f"{lines[-1]} {row.sense} {_num(row.rhs)}"
        out.append(f" {row.name}: {lines[0]}")
        out.extend(f"   {line}" for line in lines[1:])

    out.append("Bounds")
    for v in problem.variables:
        if v.binary:
            continue
        name = v.ref.name
        if v.lb == v.ub:
            out.append(f" {name} = {_num(v.lb)}")
        elif v.lb == -math.inf and v.ub == math.inf:
            out.append(f" {name} free")
        else:
            out.append(f" {_num(v.lb)} <= {name} <= {_num(v.ub)}")
    binaries = [v.ref.name for v in problem.variables if v.binary]
    if binaries:
        out.append("Binaries")
        out.extend(f" {name}" for name in binaries)
    out.append("End")
    return "\n".join(out) + "\n"


def _parse_num(tok: str) -> float:
    low = tok.lower()
    if low in ("inf", "+inf", "infinity", "+infinity"):
        return math.inf
    if low in ("-inf", "-infinity"):
        return -math.inf
    try:
        return float(tok)
    except ValueError:
        raise LpFileError(f"expected a number, got {tok!r}") from None


def _parse_terms(tokens):
    """Parse [sign] [coef] name ... into ((VarRef, coef), ...)."""
    terms = []
    k = 0
    while k < len(tokens):
        sign = 1.0
        if tokens[k] in "+-":
            sign = -1.0 if tokens[k] == "-" else 1.0
            k += 1
        if k >= len(tokens):
            raise LpFileError("dangling sign in expression")
        coef = 1.0
        try:
            coef = _parse_num(tokens[k])
            k += 1
        except LpFileError:
            pass
        if k >= len(tokens):
            raise LpFileError("coefficient without variable")
        terms.append((VarRef.from_name(tokens[k]), sign * coef))
        k += 1
    return terms


_SECTIONS = {
    "minimize": "obj",
    "minimise": "obj",
    "subject to": "rows",
    "st": "rows",
    "s.t.": "rows",
    "bounds": "bounds",
    "binaries": "bin",
    "binary": "bin",
    "end": "end",
}


def parse_lp_file(text: str) -> EncodedProblem:
    mode, budget = None, None
    sections = {"obj": [], "rows": [], "bounds": [], "bin": []}
    current = None
    for raw in text.splitlines():
        m = _HEADER_RE.match(raw)
        if m:
            mode, budget = Mode(m.group(1)), _parse_num(m.group(2))
            continue
        line = raw.split("\\", 1)[0].strip()
        if not line:
            continue
        key = _SECTIONS.get(line.lower())
        if key is not None:
            current = key
            if key == "end":
                break
            continue
        if current is None:
            raise LpFileError(f"content before the first section: {line!r}")
        sections[current].append(line)

    obj_tokens = " ".join(sections["obj"]).split()
    if obj_tokens and obj_tokens[0].endswith(":"):
        obj_tokens = obj_tokens[1:]
    objective = tuple((ref, c) for ref, c in _parse_terms(obj_tokens) if c != 0.0)

    rows = []
    tokens = " ".join(sections["rows"]).split()
    k = 0
    while k < len(tokens):
        if not tokens[k].endswith(":"):
            raise LpFileError(f"expected a row name, got {tokens[k]!r}")
        name = tokens[k][:-1]
        k += 1
        start = k
        while k < len(tokens) and tokens[k] not in (LE, GE, EQ, "=<", "=>"):
            k += 1
        if k + 1 >= len(tokens):
            raise LpFileError(f"row {name} lacks a sense and right-hand side")
        sense = {"=<": LE, "=>": GE}.get(tokens[k], tokens[k])
        rows.append(Row(name, tuple(_parse_terms(tokens[start:k])), sense, _parse_num(tokens[k + 1])))
        k += 2

    bounds = {}
    for line in sections["bounds"]:
        tok = line.split()
        if len(tok) == 2 and tok[1].lower() == "free":
            bounds[tok[0]] = (-math.inf, math.inf)
        elif len(tok) == 5 and tok[1] == LE and tok[3] == LE:
            bounds[tok[2]] = (_parse_num(tok[0]), _parse_num(tok[4]))
        elif len(tok) == 3 and tok[1] == EQ:
            v = _parse_num(tok[2])
            bounds[tok[0]] = (v, v)
        elif len(tok) == 3 and tok[1] in (LE, GE):
            lo, hi = bounds.get(tok[0], (0.0, math.inf))
            v = _parse_num(tok[2])
            bounds[tok[0]] = (lo, v) if tok[1] == LE else (v, hi)
        else:
            raise LpFileError(f"unsupported bound line {line!r}")
    binaries = {name for line in sections["bin"] for name in line.split()}

    seen = {ref.name: ref for _, terms in [(None, objective)] + [(None, r.terms) for r in rows] for ref, _ in terms}
    for name in list(bounds) + sorted(binaries):
        seen.setdefault(name, VarRef.from_name(name))
    variables = []
    for name, ref in seen.items():
        if name in binaries:
            variables.append(Variable(ref, 0.0, 1.0, binary=True))
        else:
            lo, hi = bounds.get(name, (0.0, math.inf))
            variables.append(Variable(ref, lo, hi))

    if mode is None:
        budget_row = next((r for r in rows if r.name == "epsbudget"), None)
        mode = Mode.EPSILON if budget_row else Mode.EXACT
        budget = budget_row.rhs if budget_row else 0.0
    return EncodedProblem(tuple(variables), tuple(rows), objective, budget, mode)
