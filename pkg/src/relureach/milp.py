"""Depth-first branch-and-bound over the ReLU phase binaries.

Every node solves the LP relaxation with some binaries fixed. A node is
pruned when its relaxation is infeasible. The input part of every relaxed
solution is replayed through the network; a replay that lands in the output
set ends the search with a concrete witness, so a Reachable verdict never
rests on the LP point alone.
"""

import enum
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import lpsolve
from .bounds import propagate
from .encoder import EmptyInputSetError, EncodedProblem, Mode, VarKind, encode_problem
from .lpsolve import LpStatus
from .network import Network, forward
from .numerics import DEFAULT_TOLERANCES, Tolerances
from .propspec import PropertySpec, extract_box

log = logging.getLogger(__name__)

REPORT_TOL = 1e-5


class VerdictKind(str, enum.Enum):
    REACHABLE = "reachable"
    UNREACHABLE = "unreachable"
    INCONCLUSIVE = "inconclusive"


@dataclass
class SearchStats:
    nodes: int = 0
    lp_solves: int = 0
    max_depth: int = 0
    wall_time: float = 0.0
    pruned: list = field(default_factory=list, repr=False)


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    witness: np.ndarray = None
    eps_sum: float = None
    stats: SearchStats = field(default_factory=SearchStats)
    reason: str = ""

    @property
    def reachable(self) -> bool:
        return self.kind is VerdictKind.REACHABLE


@dataclass(frozen=True)
class Limits:
    node_cap: int = 100_000
    time_cap: float = 600.0


@dataclass(frozen=True)
class WitnessReport:
    ok: bool
    input_ok: bool
    output_ok: bool
    input_slacks: tuple
    output_slacks: tuple
    output: np.ndarray


def validate_witness(net: Network, spec: PropertySpec, candidate, tol: float = REPORT_TOL, input_tol: float = None) -> WitnessReport:
    """Replay `candidate` through the network and check it against both constraint sets.

    Slacks are signed margins, negative where a constraint is violated.
    `input_tol` defaults to `tol`.
    """
    if input_tol is None:
        input_tol = tol
    x = np.asarray(candidate, dtype=np.float64)
    y = forward(net, x)
    in_sl = tuple(c.slack(x) for c in spec.input_constraints)
    out_sl = tuple(c.slack(y) for c in spec.output_constraints)
    in_ok = all(s >= -input_tol for s in in_sl)
    out_ok = all(s >= -tol for s in out_sl)
    return WitnessReport(in_ok and out_ok, in_ok, out_ok, in_sl, out_sl, y)


def branch_select(values: dict, int_tol: float = DEFAULT_TOLERANCES.int_tol):
    """Most fractional binary among `values` (VarRef -> relaxed value), or None if all are integral.

    Ties go to the lowest (layer, neuron).
    """
    best, best_frac = None, -1.0
    for ref in sorted(values, key=lambda r: (r.layer, r.neuron)):
        v = values[ref]
        frac = min(v - np.floor(v), np.ceil(v) - v)
        if frac <= int_tol:
            continue
        if frac > best_frac:
            best, best_frac = ref, frac
    return best


def _input_candidate(problem: EncodedProblem, lp_x: np.ndarray) -> np.ndarray:
    cols = problem.columns_of(VarKind.LAYER_OUT, 1)
    lo = np.array([problem.variables[c].lb for c in cols])
    hi = np.array([problem.variables[c].ub for c in cols])
    return np.clip(lp_x[cols], lo, hi)


def decide(
    problem: EncodedProblem,
    net: Network,
    spec: PropertySpec,
    limits: Limits = Limits(),
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    report_tol: float = REPORT_TOL,
    record_pruned: bool = False,
    nearest_first: bool = True,
) -> Verdict:
    """Search the phase binaries of `problem`; witnesses are replayed through `net`.

    With `nearest_first` the child matching the relaxation's rounding is
    explored first; turning it off only changes the order, never the verdict.
    """
    t0 = time.perf_counter()
    stats = SearchStats()
    lp = problem.to_lp()
    bin_refs = problem.binaries
    bin_cols = [problem.var_index[r] for r in bin_refs]
    eps_cols = problem.columns_of(VarKind.EPS)
    base_lb, base_ub = lp.lb.copy(), lp.ub.copy()
    input_tol = tolerances.feas_tol

    def finish(kind, witness=None, eps_sum=None, reason=""):
        stats.wall_time = time.perf_counter() - t0
        return Verdict(kind, witness, eps_sum, stats, reason)

    stack = [{}]  # each node: {binary column: fixed value}
    eps_only = 0
    while stack:
        if stats.nodes >= limits.node_cap:
            return finish(VerdictKind.INCONCLUSIVE, reason=f"node cap {limits.node_cap} reached")
        if time.perf_counter() - t0 > limits.time_cap:
            return finish(VerdictKind.INCONCLUSIVE, reason=f"time cap {limits.time_cap}s reached")
        fixed = stack.pop()
        stats.nodes += 1
        stats.max_depth = max(stats.max_depth, len(fixed))
        lb, ub = base_lb.copy(), base_ub.copy()
        for col, val in fixed.items():
            lb[col] = ub[col] = val
        sol = lpsolve.solve(lp.with_bounds(lb, ub), tolerances)
        stats.lp_solves += 1
        if sol.status is LpStatus.INFEASIBLE:
            if record_pruned:
                stats.pruned.append(dict(fixed))
            continue
        if sol.status is not LpStatus.OPTIMAL:
            return finish(VerdictKind.INCONCLUSIVE, reason=f"LP relaxation ended with status {sol.status.value}")

        eps_sum = float(sol.x[eps_cols].sum()) if eps_cols else 0.0
        candidate = _input_candidate(problem, sol.x)
        report = validate_witness(net, spec, candidate, report_tol, input_tol)
        if report.ok:
            return finish(VerdictKind.REACHABLE, candidate, eps_sum)

        values = {ref: float(sol.x[c]) for ref, c in zip(bin_refs, bin_cols) if c not in fixed}
        ref = branch_select(values, tolerances.int_tol)
        if ref is None:
            # integral point whose replay misses the output set: only the slack made it feasible
            eps_only += 1
            log.debug("integral relaxation at depth %d fails replay (eps_sum=%g)", len(fixed), eps_sum)
            free = [r for r in bin_refs if problem.var_index[r] not in fixed]
            if not free:
                continue
            # keep searching below: fix the remaining binaries at their rounded values' alternatives
            ref = free[0]
        col = problem.var_index[ref]
        v = float(sol.x[col])
        near = 1.0 if v >= 0.5 else 0.0
        if not nearest_first:
            near = 1.0 - near
        stack.append({**fixed, col: 1.0 - near})
        stack.append({**fixed, col: near})

    if eps_only:
        return finish(
            VerdictKind.INCONCLUSIVE,
            reason=f"{eps_only} integral relaxation(s) satisfied the encoding only within the slack budget and failed replay",
        )
    return finish(VerdictKind.UNREACHABLE)


def verify(
    net: Network,
    spec: PropertySpec,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    mode: Mode = Mode.EPSILON,
    big_m: float = None,
    limits: Limits = Limits(),
):
    """bounds -> encoding -> search. Returns (verdict, encoded problem or None)."""
    box = extract_box(spec.input_constraints, net.input_dim)
    if box.is_empty:
        return Verdict(VerdictKind.UNREACHABLE, reason="input box is empty"), None
    bounds = propagate(net, box.lo, box.hi)
    try:
        problem = encode_problem(net, spec, bounds, tolerances, mode, big_m)
    except EmptyInputSetError:
        return Verdict(VerdictKind.UNREACHABLE, reason="input box is empty"), None
    return decide(problem, net, spec, limits, tolerances), problem
