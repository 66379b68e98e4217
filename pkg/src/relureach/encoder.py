"""Big-M mixed-integer encoding of a network plus property.

Each unstable ReLU neuron j of layer i gets the four rows

    L<i>_n<j>_lb :  x_i_j >= W_j x_{i-1} + b_j - e_i_j
    L<i>_n<j>_ub :  x_i_j <= W_j x_{i-1} + b_j + M_lo * d_i_j + e_i_j
    L<i>_n<j>_nn :  x_i_j >= 0
    L<i>_n<j>_off:  x_i_j <= M_hi * (1 - d_i_j)

with one binary d_i_j (d = 1 selects the inactive branch, x = 0) and one
nonnegative slack e_i_j. Neurons whose phase is fixed by interval bounds
get no binary: active neurons and linear-layer neurons are tied to their
affine value (one equality in exact mode, the lb/ub pair in epsilon mode),
inactive ones are pinned to zero. In exact mode the slacks are absent.
The objective minimises the slack sum and a budget row caps it at t.
"""

import enum
import re
from dataclasses import dataclass, field

import numpy as np

from .bounds import LayerBounds, Phase, UnboundedInputError, big_m_for, propagate
from .lpsolve import EQ, GE, LE, LpProblem
from .network import Layer, Network
from .numerics import DEFAULT_TOLERANCES, Tolerances
from .propspec import PropertySpec, Relation, extract_box

_SENSE = {Relation.LE: LE, Relation.GE: GE, Relation.EQ: EQ}


class VarKind(str, enum.Enum):
    LAYER_OUT = "x"
    PHASE = "d"
    EPS = "e"


_KIND_RANK = {VarKind.LAYER_OUT: 0, VarKind.PHASE: 1, VarKind.EPS: 2}
_NAME_RE = re.compile(r"^([xde])_(\d+)_(\d+)$")


class Mode(str, enum.Enum):
    EXACT = "exact"
    EPSILON = "epsilon"


class EmptyInputSetError(ValueError):
    """The single-variable input constraints already contradict each other."""


@dataclass(frozen=True)
class VarRef:
    kind: VarKind
    layer: int
    neuron: int

    @property
    def name(self) -> str:
        return f"{self.kind.value}_{self.layer}_{self.neuron}"

    @property
    def sort_key(self):
        return (self.layer, _KIND_RANK[self.kind], self.neuron)

    @classmethod
    def from_name(cls, name: str) -> "VarRef":
        m = _NAME_RE.match(name)
        if not m:
            raise ValueError(f"not an encoder variable name: {name!r}")
        return cls(VarKind(m.group(1)), int(m.group(2)), int(m.group(3)))


@dataclass(frozen=True)
class Variable:
    ref: VarRef
    lb: float
    ub: float
    binary: bool = False


@dataclass(frozen=True)
class Row:
    name: str
    terms: tuple  # ((VarRef, coef), ...)
    sense: str
    rhs: float


@dataclass(frozen=True)
class LayerFragment:
    variables: tuple
    rows: tuple

    @property
    def num_binaries(self) -> int:
        return sum(v.binary for v in self.variables)


@dataclass(frozen=True)
class EncodedProblem:
    variables: tuple
    rows: tuple
    objective: tuple  # ((VarRef, coef), ...), coefficients nonzero
    eps_budget: float
    mode: Mode
    var_index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ordered = tuple(sorted(self.variables, key=lambda v: v.ref.sort_key))
        object.__setattr__(self, "variables", ordered)
        object.__setattr__(self, "rows", tuple(self.rows))
        object.__setattr__(self, "objective", tuple(self.objective))
        object.__setattr__(self, "var_index", {v.ref: k for k, v in enumerate(ordered)})

    @property
    def num_binaries(self) -> int:
        return sum(v.binary for v in self.variables)

    @property
    def num_continuous(self) -> int:
        return len(self.variables) - self.num_binaries

    @property
    def num_rows(self) -> int:
        return len(self.rows)

    @property
    def binaries(self) -> list:
        return [v.ref for v in self.variables if v.binary]

    def refs_of(self, kind: VarKind, layer: int = None) -> list:
        return [
            v.ref for v in self.variables if v.ref.kind is kind and (layer is None or v.ref.layer == layer)
        ]

    def columns_of(self, kind: VarKind, layer: int = None) -> list:
        return [self.var_index[r] for r in self.refs_of(kind, layer)]

    def to_lp(self) -> LpProblem:
        n = len(self.variables)
        c = np.zeros(n)
        for ref, coef in self.objective:
            c[self.var_index[ref]] += coef
        A = np.zeros((len(self.rows), n))
        for r, row in enumerate(self.rows):
            for ref, coef in row.terms:
                A[r, self.var_index[ref]] += coef
        return LpProblem(
            c,
            A,
            [row.sense for row in self.rows],
            [row.rhs for row in self.rows],
            [v.lb for v in self.variables],
            [v.ub for v in self.variables],
        )


def _affine_terms(layer: Layer, i: int, j: int):
    return tuple(
        (VarRef(VarKind.LAYER_OUT, i - 1, k), -float(w)) for k, w in enumerate(layer.weights[j]) if w != 0.0
    )


def encode_layer(layer: Layer, i: int, bounds: LayerBounds, mode: Mode = Mode.EPSILON, big_m: float = None) -> LayerFragment:
    """Variables and rows for layer i (inputs are layer 1) given its interval bounds."""
    mode = Mode(mode)
    variables, rows = [], []
    eps_on = mode is Mode.EPSILON
    for j in range(layer.out_dim):
        x = VarRef(VarKind.LAYER_OUT, i, j)
        tag = f"L{i}_n{j}"
        phase = bounds.phases[j] if layer.is_relu else Phase.ACTIVE
        lo, hi = float(bounds.post_lo[j]), float(bounds.post_hi[j])
        bias = float(layer.bias[j])
        affine = _affine_terms(layer, i, j)

        if phase is Phase.INACTIVE:
            variables.append(Variable(x, 0.0, 0.0))
            rows.append(Row(f"{tag}_off", ((x, 1.0),), EQ, 0.0))
            continue

        variables.append(Variable(x, lo, hi))
        e = VarRef(VarKind.EPS, i, j)
        if eps_on:
            variables.append(Variable(e, 0.0, np.inf))

        if phase is Phase.ACTIVE:
            if eps_on:
                rows.append(Row(f"{tag}_lb", ((x, 1.0),) + affine + ((e, 1.0),), GE, bias))
                rows.append(Row(f"{tag}_ub", ((x, 1.0),) + affine + ((e, -1.0),), LE, bias))
            else:
                rows.append(Row(f"{tag}_eq", ((x, 1.0),) + affine, EQ, bias))
            continue

        if big_m is None:
            m_lo, m_hi = big_m_for(bounds, j)
        else:
            m_lo = m_hi = float(big_m)
        d = VarRef(VarKind.PHASE, i, j)
        variables.append(Variable(d, 0.0, 1.0, binary=True))
        eps_lb = ((e, 1.0),) if eps_on else ()
        eps_ub = ((e, -1.0),) if eps_on else ()
        rows.append(Row(f"{tag}_lb", ((x, 1.0),) + affine + eps_lb, GE, bias))
        rows.append(Row(f"{tag}_ub", ((x, 1.0),) + affine + ((d, -m_lo),) + eps_ub, LE, bias))
        rows.append(Row(f"{tag}_nn", ((x, 1.0),), GE, 0.0))
        rows.append(Row(f"{tag}_off", ((x, 1.0), (d, m_hi)), LE, m_hi))
    return LayerFragment(tuple(variables), tuple(rows))


def encode_problem(
    net: Network,
    spec: PropertySpec,
    bounds=None,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    mode: Mode = Mode.EPSILON,
    big_m: float = None,
) -> EncodedProblem:
    """Assemble C_in, the per-layer rows and C_out (plus the slack budget) into one MILP."""
    mode = Mode(mode)
    spec.check_dims(net.input_dim, net.output_dim)
    box = extract_box(spec.input_constraints, net.input_dim)
    if box.is_empty:
        raise EmptyInputSetError("input constraints admit no point (some lower bound exceeds its upper bound)")
    if bounds is None:
        bounds = propagate(net, box.lo, box.hi)
    for idx, (layer, lb) in enumerate(zip(net.layers, bounds)):
        if layer.is_relu and not lb.is_finite:
            raise UnboundedInputError(
                f"layer {idx + 2} has unbounded pre-activations; add lower and upper bounds for every input"
            )

    variables = [Variable(VarRef(VarKind.LAYER_OUT, 1, j), float(box.lo[j]), float(box.hi[j])) for j in range(net.input_dim)]
    rows = []
    for r, con in enumerate(spec.input_constraints):
        rows.append(Row(f"in_{r}", tuple((VarRef(VarKind.LAYER_OUT, 1, i), c) for i, c in con.terms), _SENSE[con.relation], con.rhs))
    for idx, (layer, lb) in enumerate(zip(net.layers, bounds)):
        frag = encode_layer(layer, idx + 2, lb, mode, big_m)
        variables.extend(frag.variables)
        rows.extend(frag.rows)
    k = net.num_layers
    for r, con in enumerate(spec.output_constraints):
        rows.append(Row(f"out_{r}", tuple((VarRef(VarKind.LAYER_OUT, k, i), c) for i, c in con.terms), _SENSE[con.relation], con.rhs))

    eps_refs = [v.ref for v in variables if v.ref.kind is VarKind.EPS]
    objective = tuple((e, 1.0) for e in eps_refs)
    budget = tolerances.eps_budget if mode is Mode.EPSILON else 0.0
    if eps_refs:
        rows.append(Row("epsbudget", objective, LE, budget))
    return EncodedProblem(tuple(variables), tuple(rows), objective, budget, mode)
