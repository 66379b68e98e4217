"""Brute-force deciders used to audit the main search.

`enumerate_decide` walks every activation pattern of the unstable ReLUs.
Under a fixed pattern the network is affine in its input, so each pattern
is a small LP over the input variables alone, solved with HiGHS through
scipy. It shares neither the big-M rows, the slack variables nor the
simplex engine with the main pipeline. Patterns are generated neuron by
neuron and a prefix whose sign constraints are already infeasible is cut
together with all its completions.

`sample_decide` draws uniform points from the input box and replays them.
"""

import logging
import time
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .bounds import Phase, count_unstable, propagate
from .milp import REPORT_TOL, SearchStats, Verdict, VerdictKind, validate_witness
from .network import Network, forward
from .propspec import PropertySpec, Relation, check_membership, extract_box

log = logging.getLogger(__name__)

ENUMERATION_CAP = 24
ORACLE_FEAS_TOL = 1e-6


class OracleCapError(ValueError):
    """Too many unstable neurons for exhaustive enumeration."""


@dataclass(frozen=True)
class PhasePattern:
    bits: tuple  # True = active, one per unstable neuron in (layer, neuron) order


def _rows_for(constraints, P, q):
    """Constraints on z = P x + q rewritten as (A_ub, b_ub, A_eq, b_eq) over x."""
    ub_rows, ub_rhs, eq_rows, eq_rhs = [], [], [], []
    for con in constraints:
        coef = con.dense(P.shape[0])
        a = coef @ P
        rhs = con.rhs - coef @ q
        if con.relation is Relation.LE:
            ub_rows.append(a)
            ub_rhs.append(rhs)
        elif con.relation is Relation.GE:
            ub_rows.append(-a)
            ub_rhs.append(-rhs)
        else:
            eq_rows.append(a)
            eq_rhs.append(rhs)
    return ub_rows, ub_rhs, eq_rows, eq_rhs


class _PatternSearch:
    def __init__(self, net, spec, bounds, box, report_tol):
        self.net = net
        self.spec = spec
        self.bounds = bounds
        self.box = box
        self.report_tol = report_tol
        self.stats = SearchStats()
        m = net.input_dim
        self.base = _rows_for(spec.input_constraints, np.eye(m), np.zeros(m))
        self.boundary_hits = 0

    def _feasible(self, ub_rows, ub_rhs, eq_rows, eq_rhs):
        m = self.net.input_dim
        self.stats.lp_solves += 1
        res = linprog(
            np.zeros(m),
            A_ub=np.array(ub_rows) if ub_rows else None,
            b_ub=np.array(ub_rhs) if ub_rows else None,
            A_eq=np.array(eq_rows) if eq_rows else None,
            b_eq=np.array(eq_rhs) if eq_rows else None,
            bounds=list(zip(self.box.lo, self.box.hi)),
            method="highs",
            options={"primal_feasibility_tolerance": ORACLE_FEAS_TOL},
        )
        if res.status == 0:
            return np.clip(res.x, self.box.lo, self.box.hi)
        if res.status == 2:
            return None
        raise RuntimeError(f"oracle LP failed: {res.message}")

    def run(self):
        """Depth-first over layers and neurons; returns a validated witness or None."""
        m = self.net.input_dim
        return self._layer(0, np.eye(m), np.zeros(m), [list(r) for r in self.base])

    def _layer(self, idx, P, q, rows):
        if idx == len(self.net.layers):
            ub_rows, ub_rhs, eq_rows, eq_rhs = rows
            o = _rows_for(self.spec.output_constraints, P, q)
            self.stats.nodes += 1
            x = self._feasible(ub_rows + o[0], ub_rhs + o[1], eq_rows + o[2], eq_rhs + o[3])
            if x is None:
                return None
            rep = validate_witness(self.net, self.spec, x, self.report_tol, input_tol=ORACLE_FEAS_TOL)
            if rep.ok:
                return x
            self.boundary_hits += 1
            log.debug("pattern LP feasible but replay misses by %s", min(rep.output_slacks, default=0.0))
            return None
        layer = self.net.layers[idx]
        pre_P = layer.weights @ P
        pre_q = layer.weights @ q + layer.bias
        if not layer.is_relu:
            return self._layer(idx + 1, pre_P, pre_q, rows)
        lb = self.bounds[idx]
        active = np.array([p is Phase.ACTIVE for p in lb.phases])
        return self._neuron(idx, 0, pre_P, pre_q, active, rows, fresh=False)

    def _neuron(self, idx, j, pre_P, pre_q, active, rows, fresh):
        lb = self.bounds[idx]
        while j < lb.width and lb.phases[j] is not Phase.UNSTABLE:
            j += 1
        if fresh:
            # prune: prefix sign pattern already infeasible
            self.stats.nodes += 1
            if self._feasible(*rows) is None:
                return None
        if j == lb.width:
            mask = active.astype(np.float64)
            return self._layer(idx + 1, pre_P * mask[:, None], pre_q * mask, rows)
        ub_rows, ub_rhs, eq_rows, eq_rhs = rows
        for on in (True, False):
            a = pre_P[j] if not on else -pre_P[j]
            rhs = -pre_q[j] if not on else pre_q[j]
            # active: pre >= 0  <=>  -pre_P x <= pre_q ; inactive: pre_P x <= -pre_q
            act = active.copy()
            act[j] = on
            found = self._neuron(
                idx, j + 1, pre_P, pre_q, act, (ub_rows + [a], ub_rhs + [rhs], eq_rows, eq_rhs), fresh=True
            )
            if found is not None:
                return found
        return None


def enumerate_decide(net: Network, spec: PropertySpec, bounds=None, report_tol: float = REPORT_TOL) -> Verdict:
    t0 = time.perf_counter()
    box = extract_box(spec.input_constraints, net.input_dim)
    if box.is_empty:
        return Verdict(VerdictKind.UNREACHABLE, reason="input box is empty")
    if bounds is None:
        bounds = propagate(net, box.lo, box.hi)
    n_unstable = count_unstable(bounds)
    if n_unstable > ENUMERATION_CAP:
        raise OracleCapError(f"{n_unstable} unstable ReLUs exceed the enumeration cap of {ENUMERATION_CAP}")
    search = _PatternSearch(net, spec, bounds, box, report_tol)
    witness = search.run()
    search.stats.wall_time = time.perf_counter() - t0
    if witness is not None:
        return Verdict(VerdictKind.REACHABLE, witness, 0.0, search.stats)
    reason = f"{search.boundary_hits} boundary pattern(s) failed replay" if search.boundary_hits else ""
    return Verdict(VerdictKind.UNREACHABLE, stats=search.stats, reason=reason)


def _satisfies(constraints, Z):
    ok = np.ones(Z.shape[0], dtype=bool)
    for con in constraints:
        val = Z @ con.dense(Z.shape[1])
        if con.relation is Relation.LE:
            ok &= val <= con.rhs
        elif con.relation is Relation.GE:
            ok &= val >= con.rhs
        else:
            ok &= val == con.rhs
    return ok


@dataclass(frozen=True)
class SampleResult:
    found: bool
    witness: np.ndarray = None
    samples: int = 0


def sample_decide(net: Network, spec: PropertySpec, n_samples: int, seed: int = 0, batch: int = 4096) -> SampleResult:
    """Uniform samples from the input box; first one meeting all constraints exactly is returned."""
    box = extract_box(spec.input_constraints, net.input_dim)
    if not box.is_finite:
        raise ValueError("sampling needs finite bounds on every input")
    if box.is_empty or n_samples <= 0:
        return SampleResult(False)
    rng = np.random.default_rng(seed)
    drawn = 0
    while drawn < n_samples:
        size = min(batch, n_samples - drawn)
        X = rng.uniform(box.lo, box.hi, size=(size, net.input_dim))
        Y = X
        for layer in net.layers:
            Y = Y @ layer.weights.T + layer.bias
            if layer.is_relu:
                Y = np.maximum(Y, 0.0)
        ok = _satisfies(spec.input_constraints, X) & _satisfies(spec.output_constraints, Y)
        hits = np.flatnonzero(ok)
        for k in hits:
            # confirm with the reference evaluation before reporting
            if check_membership(spec.output_constraints, forward(net, X[k])):
                return SampleResult(True, X[k].copy(), drawn + int(k) + 1)
        drawn += size
    return SampleResult(False, samples=drawn)
