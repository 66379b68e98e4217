"""Linear input/output constraint sets and the line-oriented property text format.

A property file lists one closed linear constraint per line over the
network inputs ``in[i]`` and outputs ``out[j]``::

    # box on the input
    in[0] >= -1
    in[0] <= 1
    2*out[0] - out[1] >= 0.5

The output constraints describe the region being searched for, i.e. the
violation of whatever safety claim is being checked.
"""

import enum
import math
import re
from dataclasses import dataclass, field

import numpy as np


class Relation(str, enum.Enum):
    LE = "<="
    GE = ">="
    EQ = "="


class PropertySyntaxError(ValueError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line else ""
        super().__init__(where + message)


@dataclass(frozen=True)
class LinConstraint:
    """sum(coef * var[index]) <relation> rhs, over a single variable family."""

    terms: tuple  # ((index, coef), ...) in source order
    relation: Relation
    rhs: float

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple((int(i), float(c)) for i, c in self.terms))
        object.__setattr__(self, "relation", Relation(self.relation))
        object.__setattr__(self, "rhs", float(self.rhs))
        if not self.terms or all(c == 0.0 for _, c in self.terms):
            raise ValueError("a linear constraint needs at least one nonzero coefficient")
        if not all(math.isfinite(c) for _, c in self.terms) or not math.isfinite(self.rhs):
            raise ValueError("constraint coefficients and right-hand side must be finite")

    @property
    def indices(self) -> list:
        return [i for i, _ in self.terms]

    def dense(self, dim: int) -> np.ndarray:
        row = np.zeros(dim)
        for i, c in self.terms:
            row[i] += c
        return row

    def lhs(self, point) -> float:
        return float(sum(c * point[i] for i, c in self.terms))

    def slack(self, point) -> float:
        """Signed margin: >= 0 when satisfied, negative by the amount violated."""
        value = self.lhs(point)
        if self.relation is Relation.LE:
            return self.rhs - value
        if self.relation is Relation.GE:
            return value - self.rhs
        return -abs(value - self.rhs)


@dataclass(frozen=True)
class PropertySpec:
    input_constraints: tuple = field(default_factory=tuple)
    output_constraints: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "input_constraints", tuple(self.input_constraints))
        object.__setattr__(self, "output_constraints", tuple(self.output_constraints))

    def check_dims(self, input_dim: int, output_dim: int) -> None:
        for family, cons, dim in (("in", self.input_constraints, input_dim), ("out", self.output_constraints, output_dim)):
            for con in cons:
                for i in con.indices:
                    if not 0 <= i < dim:
                        raise ValueError(f"{family}[{i}] is out of range for dimension {dim}")


_TOKEN = re.compile(
    r"""\s*(?:
        (?P<rel><=|>=|=)
      | (?P<var>(?P<fam>[A-Za-z_]\w*)\s*\[\s*(?P<idx>\d+)\s*\])
      | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
      | (?P<op>[+\-*])
      | (?P<bad>\S)
    )""",
    re.VERBOSE,
)


def _tokenize(line: str, lineno: int):
    pos = 0
    tokens = []
    while pos < len(line):
        if not line[pos:].strip():
            break
        m = _TOKEN.match(line, pos)
        col = m.start(m.lastgroup) + 1
        if m.lastgroup == "bad":
            raise PropertySyntaxError(f"unexpected character {m.group('bad')!r}", lineno, col)
        tokens.append((m.lastgroup if m.lastgroup != "fam" else "var", m, col))
        pos = m.end()
    return tokens


def _parse_line(line: str, lineno: int, input_dim, output_dim):
    tokens = _tokenize(line, lineno)
    rel_pos = [k for k, (kind, _, _) in enumerate(tokens) if kind == "rel"]
    if len(rel_pos) != 1:
        col = tokens[rel_pos[1]][2] if len(rel_pos) > 1 else len(line) + 1
        raise PropertySyntaxError("expected exactly one of <=, >=, =", lineno, col)
    k = rel_pos[0]
    lhs, rel, rhs = tokens[:k], tokens[k], tokens[k + 1 :]

    # right-hand side: optional sign then a number
    sign = 1.0
    if rhs and rhs[0][0] == "op" and rhs[0][1].group("op") in "+-":
        sign = -1.0 if rhs[0][1].group("op") == "-" else 1.0
        rhs = rhs[1:]
    if len(rhs) != 1 or rhs[0][0] != "num":
        col = rhs[0][2] if rhs else len(line) + 1
        raise PropertySyntaxError("right-hand side must be a single number", lineno, col)
    rhs_value = sign * float(rhs[0][1].group("num"))

    family = None
    terms = {}
    order = []
    k = 0
    expect_term = True
    term_sign = 1.0
    if not lhs:
        raise PropertySyntaxError("empty left-hand side", lineno, 1)
    while k < len(lhs):
        kind, m, col = lhs[k]
        if not expect_term:
            if kind != "op" or m.group("op") not in "+-":
                raise PropertySyntaxError("expected + or - between terms", lineno, col)
            term_sign = -1.0 if m.group("op") == "-" else 1.0
            expect_term = True
            k += 1
            continue
        if kind == "op" and m.group("op") in "+-" and k == 0:
            term_sign = -1.0 if m.group("op") == "-" else 1.0
            k += 1
            continue
        coef = 1.0
        if kind == "num":
            coef = float(m.group("num"))
            if k + 1 >= len(lhs) or lhs[k + 1][0] != "op" or lhs[k + 1][1].group("op") != "*":
                raise PropertySyntaxError("expected '*' after coefficient", lineno, col)
            k += 2
            if k >= len(lhs):
                raise PropertySyntaxError("expected a variable after '*'", lineno, len(line) + 1)
            kind, m, col = lhs[k]
        if kind != "var":
            raise PropertySyntaxError("expected a variable such as in[0] or out[1]", lineno, col)
        fam, idx = m.group("fam"), int(m.group("idx"))
        if fam not in ("in", "out"):
            raise PropertySyntaxError(f"unknown variable {fam!r}; use in[i] or out[j]", lineno, col)
        if family is None:
            family = fam
        elif fam != family:
            raise PropertySyntaxError("a constraint may not mix in[] and out[] variables", lineno, col)
        limit = input_dim if fam == "in" else output_dim
        if limit is not None and idx >= limit:
            raise PropertySyntaxError(f"{fam}[{idx}] out of range (dimension {limit})", lineno, col)
        if idx not in terms:
            order.append(idx)
            terms[idx] = 0.0
        terms[idx] += term_sign * coef
        term_sign = 1.0
        expect_term = False
        k += 1
    if expect_term:
        raise PropertySyntaxError("dangling operator", lineno, lhs[-1][2])
    try:
        con = LinConstraint(tuple((i, terms[i]) for i in order), Relation(rel[1].group("rel")), rhs_value)
    except ValueError as exc:
        raise PropertySyntaxError(str(exc), lineno, 1) from exc
    return family, con


def parse_property(text: str, input_dim: int = None, output_dim: int = None) -> PropertySpec:
    """Parse property text; dimensions, when given, bound the allowed indices."""
    cin, cout = [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        family, con = _parse_line(line, lineno, input_dim, output_dim)
        (cin if family == "in" else cout).append(con)
    return PropertySpec(cin, cout)


def load_property(path, input_dim: int = None, output_dim: int = None) -> PropertySpec:
    with open(path, encoding="utf-8") as fh:
        return parse_property(fh.read(), input_dim, output_dim)


def _format_constraint(family: str, con: LinConstraint) -> str:
    parts = []
    for k, (i, c) in enumerate(con.terms):
        sign = "-" if c < 0 else "+"
        mag = repr(abs(c))
        term = f"{mag}*{family}[{i}]"
        parts.append(("-" if sign == "-" else "") + term if k == 0 else f" {sign} {term}")
    return f"{''.join(parts)} {con.relation.value} {con.rhs!r}"


def format_property(spec: PropertySpec) -> str:
    lines = [_format_constraint("in", c) for c in spec.input_constraints]
    lines += [_format_constraint("out", c) for c in spec.output_constraints]
    return "\n".join(lines) + ("\n" if lines else "")


def check_membership(constraints, point, tol: float = 0.0) -> bool:
    point = np.asarray(point, dtype=np.float64)
    return all(con.slack(point) >= -tol for con in constraints)


@dataclass(frozen=True)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    @property
    def is_empty(self) -> bool:
        return bool(np.any(self.lo > self.hi))

    @property
    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.lo)) and np.all(np.isfinite(self.hi)))

    def contains(self, point) -> bool:
        point = np.asarray(point)
        return bool(np.all(point >= self.lo) and np.all(point <= self.hi))


def extract_box(constraints, dim: int) -> Box:
    """Per-variable interval implied by the single-variable constraints.

    Multi-variable constraints are ignored, so the box over-approximates the
    constraint set. An empty result (some lo > hi) is reported via Box.is_empty.
    """
    lo = np.full(dim, -np.inf)
    hi = np.full(dim, np.inf)
    for con in constraints:
        nz = [(i, c) for i, c in con.terms if c != 0.0]
        if len({i for i, _ in nz}) != 1:
            continue
        i = nz[0][0]
        c = sum(coef for _, coef in nz)
        if c == 0.0:
            continue
        bound = con.rhs / c
        rel = con.relation
        if rel is Relation.EQ:
            lo[i] = max(lo[i], bound)
            hi[i] = min(hi[i], bound)
        elif (rel is Relation.LE) == (c > 0):
            hi[i] = min(hi[i], bound)
        else:
            lo[i] = max(lo[i], bound)
    return Box(lo, hi)


def negate_output(spec: PropertySpec) -> PropertySpec:
    """Swap a single <= / >= output constraint for its closed complement."""
    if len(spec.output_constraints) != 1 or spec.output_constraints[0].relation is Relation.EQ:
        raise ValueError("output negation needs exactly one <= or >= output constraint")
    con = spec.output_constraints[0]
    flipped = Relation.GE if con.relation is Relation.LE else Relation.LE
    return PropertySpec(spec.input_constraints, (LinConstraint(con.terms, flipped, con.rhs),))


def box_property(lo, hi, output_constraints=()) -> PropertySpec:
    """Property with input box lo <= in <= hi and the given output constraints."""
    cin = []
    for i, (a, b) in enumerate(zip(lo, hi)):
        cin.append(LinConstraint(((i, 1.0),), Relation.GE, a))
        cin.append(LinConstraint(((i, 1.0),), Relation.LE, b))
    return PropertySpec(cin, output_constraints)
